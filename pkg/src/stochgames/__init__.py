"""Almost-sure winning in concurrent stochastic games with imperfect
information on both sides: model, knowledge construction, solver, and exact
evaluation oracles."""

from .errors import (
    GameError,
    InconsistentObservation,
    NotClosed,
    ResourceLimit,
    SchemaError,
    ValidationError,
)
from .evaluation import (
    EvalResult,
    ProductChain,
    best_response_full_info,
    brute_force_verdict,
    buchi_probability,
    build_chain,
    monte_carlo,
    objective_probability,
    reach_probability,
)
from .halfplayer import (
    BeliefGraph,
    OneHalfGame,
    PositiveWinReport,
    positive_cobuchi,
    positive_safety,
    sure_cobuchi_beliefs,
    sure_safety_beliefs,
)
from .knowledge import (
    Knowledge,
    KnowledgeArena,
    KnowledgeOnlyStrategy,
    KnowledgeState,
    adapt_adam_strategy,
    build_knowledge_arena,
    knowledge_update,
    lift_strategy,
    lower_strategy,
)
from .model import (
    Arena,
    Distribution,
    FiniteMemoryStrategy,
    Objective,
    parse_game,
    parse_strategy,
    serialize_game,
    serialize_strategy,
    step_distribution,
    validate_strategy,
)
from .solver import (
    AdversaryGame,
    CandidateStrategy,
    SolveReport,
    decide_almost_sure_buchi,
    decide_almost_sure_reach,
    enumerate_candidates,
    fix_candidate,
    random_safe_strategy,
)

__version__ = "0.1.0"
