from fractions import Fraction

import pytest

from stochgames import (
    Knowledge,
    NotClosed,
    Objective,
    ResourceLimit,
    best_response_full_info,
    build_chain,
    build_knowledge_arena,
    brute_force_verdict,
    decide_almost_sure_buchi,
    decide_almost_sure_reach,
    enumerate_candidates,
    fix_candidate,
    objective_probability,
    random_safe_strategy,
    validate_strategy,
)
from stochgames.model import parse_game
from stochgames.solver import CandidateStrategy, candidate_count, check_candidate
from stochgames.knowledge import KnowledgeOnlyStrategy
from instances import cycle_arena, g1, g1_prime, g2, hidden_coin, make_doc
from oracles import attractor_verdict, random_turn_based


def test_candidate_counts():
    # one knowledge, two actions -> 3 candidates
    ka = build_knowledge_arena(cycle_arena(1, 2))
    assert len(list(enumerate_candidates(ka))) == 3 == candidate_count(ka)
    # three knowledges, two actions -> 27
    ka = build_knowledge_arena(cycle_arena(3, 2))
    assert len(ka.knowledges) == 3
    assert len(list(enumerate_candidates(ka))) == 27 == candidate_count(ka)
    # singleton alphabet -> exactly one candidate
    ka = build_knowledge_arena(cycle_arena(2, 1))
    assert len(list(enumerate_candidates(ka))) == 1


def test_candidate_order_canonical():
    ka = build_knowledge_arena(cycle_arena(2, 2))
    cands = list(enumerate_candidates(ka))
    assert [c.index for c in cands] == list(range(9))
    first = cands[0]
    assert all(mask == 1 for mask in first.strategy.choice.values())
    # last component varies fastest
    assert [c.strategy.choice[ka.knowledges[1]] for c in cands[:3]] == [1, 2, 3]
    assert all(c.strategy.choice[ka.knowledges[0]] == 1 for c in cands[:3])


def test_enumeration_resource_limit():
    ka = build_knowledge_arena(cycle_arena(3, 2))
    stream = enumerate_candidates(ka, max_candidates=5)
    got = []
    with pytest.raises(ResourceLimit):
        for cand in stream:
            got.append(cand.index)
    assert got == [0, 1, 2, 3, 4]


def test_fix_candidate_uniform_mixes():
    arena = g1()
    ka = build_knowledge_arena(arena)
    uniform = CandidateStrategy(
        strategy=KnowledgeOnlyStrategy({k: 0b11 for k in ka.knowledges}), index=None
    )
    adv = fix_candidate(ka, uniform, Objective.REACHABILITY)
    init = adv.game.arena.init
    for a in range(2):
        dist = adv.game.step(init, a)
        reals = {ka.kstates[t].real: p for t, p in dist.items()}
        assert reals == {0: Fraction(1, 2), 1: Fraction(1, 2)}


def test_fix_candidate_singleton_equals_slice():
    arena = g1()
    ka = build_knowledge_arena(arena)
    point = CandidateStrategy(
        strategy=KnowledgeOnlyStrategy({k: 0b01 for k in ka.knowledges}), index=None
    )
    adv = fix_candidate(ka, point, Objective.REACHABILITY)
    pair = ka.eve_pairs.index((0, 0b01))
    for u in range(len(ka.kstates)):
        if ka.kstates[u].dom not in (0, 0b01):
            continue
        for a in range(2):
            assert adv.game.step(u, a) == ka.arena.transition[(u, pair, a)]


def test_fix_candidate_keeps_final_absorbing():
    arena = g1()
    ka = build_knowledge_arena(arena)
    uniform = CandidateStrategy(
        strategy=KnowledgeOnlyStrategy({k: 0b11 for k in ka.knowledges}), index=None
    )
    adv = fix_candidate(ka, uniform, Objective.REACHABILITY)
    for u in adv.game.arena.final:
        for a in range(2):
            assert all(t in adv.game.arena.final for t in adv.game.step(u, a).support)


def test_g1_reach_yes_with_uniform_witness():
    rep = decide_almost_sure_reach(g1())
    assert rep.verdict == "yes"
    # candidates with {a} or {b} alone at knowledge {s} fail first
    assert rep.candidates_checked == 7
    witness = rep.witness
    validate_strategy(g1(), "eve", witness)
    init_move = witness.move[witness.init_mem]
    assert dict(init_move.items()) == {"a": Fraction(1, 2), "b": Fraction(1, 2)}
    assert best_response_full_info(g1(), witness, Objective.REACHABILITY).probability == 1


def test_g2_reach_no():
    rep = decide_almost_sure_reach(g2())
    assert rep.verdict == "no"
    assert rep.witness is None
    assert rep.candidates_checked == 1
    assert rep.witness_winning_knowledges == ()


def test_init_final_trivially_yes():
    arena = parse_game(
        make_doc(["s"], "s", ["s"], ["a", "b"], ["x"], [["s"]], [["s"]], lambda s, e, a: {s: 1})
    )
    rep = decide_almost_sure_reach(arena)
    assert rep.verdict == "yes"
    assert rep.candidates_checked == 1


def test_g1_prime_buchi_yes():
    rep = decide_almost_sure_buchi(g1_prime())
    assert rep.verdict == "yes"
    assert best_response_full_info(g1_prime(), rep.witness, Objective.BUCHI).probability == 1


def test_g2_buchi_no():
    assert decide_almost_sure_buchi(g2()).verdict == "no"


def test_all_final_buchi_yes():
    arena = parse_game(
        make_doc(
            ["s", "t"], "s", ["s", "t"], ["a"], ["x", "y"],
            [["s", "t"]], [["s", "t"]],
            lambda s, e, a: {"t": 1} if s == "s" else {"s": 1},
        )
    )
    assert decide_almost_sure_buchi(arena).verdict == "yes"


def test_hidden_coin_beats_full_information_intuition():
    arena = hidden_coin()
    rep = decide_almost_sure_reach(arena)
    assert rep.verdict == "yes"
    # the witness relies on Adam's blindness: a fully informed Adam dodges
    assert best_response_full_info(arena, rep.witness, Objective.REACHABILITY).probability == 0
    assert brute_force_verdict(arena, Objective.REACHABILITY) == "unknown"


def test_report_deterministic():
    a = decide_almost_sure_reach(g1(), debug=True)
    b = decide_almost_sure_reach(g1(), debug=True)
    assert (a.verdict, a.candidates_checked, a.witness, a.witness_winning_knowledges) == (
        b.verdict,
        b.candidates_checked,
        b.witness,
        b.witness_winning_knowledges,
    )
    assert a.diagnostics == b.diagnostics


def test_parallel_matches_sequential():
    for arena in (g1(), g2(), hidden_coin()):
        seq = decide_almost_sure_reach(arena, threads=1)
        par = decide_almost_sure_reach(arena, threads=2)
        assert (seq.verdict, seq.candidates_checked, seq.witness) == (
            par.verdict,
            par.candidates_checked,
            par.witness,
        )


def test_debug_diagnostics_cover_checked_candidates():
    rep = decide_almost_sure_reach(g1(), debug=True)
    assert rep.diagnostics is not None
    assert [d["index"] for d in rep.diagnostics] == list(range(rep.candidates_checked))
    assert rep.diagnostics[0]["adam_positively_wins"] is True
    assert rep.diagnostics[-1]["adam_positively_wins"] is False


def test_no_verdict_candidates_all_defeated_by_witness():
    arena = g2()
    ka = build_knowledge_arena(arena)
    for cand in enumerate_candidates(ka):
        wins, rep, adv = check_candidate(ka, cand, Objective.REACHABILITY)
        assert not wins and rep.witness is not None
        from stochgames.model import FiniteMemoryStrategy

        trivial = FiniteMemoryStrategy.constant("eve", "*", len(adv.game.arena.eve_obs))
        chain = build_chain(adv.game.arena, trivial, rep.witness)
        assert objective_probability(chain, Objective.REACHABILITY) < 1


def test_degenerate_turn_based_matches_attractor():
    for seed in range(25):
        arena, owner, table = random_turn_based(seed)
        rep = decide_almost_sure_reach(arena)
        assert (rep.verdict == "yes") == attractor_verdict(arena, owner, table)


def test_random_safe_strategy_g1():
    arena = g1()
    ka = build_knowledge_arena(arena)
    cand = random_safe_strategy(ka, ka.knowledges)
    assert cand.index is None
    assert cand.strategy.choice[Knowledge.of([0])] == 0b11  # both actions stay in w


def test_random_safe_strategy_not_closed():
    arena = g1()
    ka = build_knowledge_arena(arena)
    with pytest.raises(NotClosed):
        random_safe_strategy(ka, [Knowledge.of([0])])  # successors escape to {f}


def test_random_safe_strategy_no_traps():
    arena = cycle_arena(3, 2)
    ka = build_knowledge_arena(arena)
    cand = random_safe_strategy(ka, ka.knowledges)
    assert all(mask == 0b11 for mask in cand.strategy.choice.values())


def test_solver_resource_limit():
    with pytest.raises(ResourceLimit):
        decide_almost_sure_reach(g1(), max_candidates=1)
