"""Decision procedures for almost-sure reachability and Buchi winning.

The solver enumerates Eve's knowledge-only uniform strategies in canonical
order.  Fixing one turns the game, from Adam's point of view, into a game
against chance with a safety (for reachability) or co-Buchi (for Buchi)
objective; the candidate is almost-surely winning exactly when Adam is not
positively winning there.  The first successful candidate in canonical
order is lowered to a finite-memory witness on the base arena.
"""

from __future__ import annotations

import time
import weakref
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import islice, product
from typing import Iterator

from .errors import NotClosed, ResourceLimit, ValidationError
from .halfplayer import (
    DEFAULT_BELIEF_CAP,
    OneHalfGame,
    PositiveWinReport,
    positive_cobuchi,
    positive_safety,
)
from .knowledge import (
    Knowledge,
    KnowledgeArena,
    KnowledgeOnlyStrategy,
    build_knowledge_arena,
    lower_strategy,
)
from .model import ADAM, Arena, Distribution, FiniteMemoryStrategy, Objective, validate_strategy

DEFAULT_CANDIDATE_CAP = 10**7


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class CandidateStrategy:
    """A knowledge-only uniform strategy with its enumeration index.

    ``index`` is the canonical position in the enumeration order, or None
    for candidates built outside the enumeration (e.g. from a winning set).
    """

    strategy: KnowledgeOnlyStrategy
    index: int | None


@dataclass(frozen=True)
class AdversaryGame:
    """The game Adam faces once Eve's candidate is fixed.

    States are the knowledge-arena states with Eve's uniform move folded
    into the transitions; Adam keeps his alphabet and observes the base
    block of the real component, refined by final-membership.
    """

    game: OneHalfGame
    ka: KnowledgeArena
    candidate: CandidateStrategy
    objective: Objective


@dataclass(frozen=True)
class SolveReport:
    verdict: str
    objective: Objective
    witness: FiniteMemoryStrategy | None
    witness_winning_knowledges: tuple[tuple[str, ...], ...]
    candidates_checked: int
    elapsed_ms: int
    diagnostics: tuple[dict, ...] | None = None


def candidate_count(ka: KnowledgeArena) -> int:
    """Closed form: (2^|eve actions| - 1) ** number of reachable knowledges."""
    k = len(ka.base.eve_actions)
    return ((1 << k) - 1) ** len(ka.knowledges)


def enumerate_candidates(
    ka: KnowledgeArena, max_candidates: int = DEFAULT_CANDIDATE_CAP
) -> Iterator[CandidateStrategy]:
    """Yield every map from reachable knowledges to non-empty action subsets.

    Canonical lexicographic order: knowledges in construction order, subsets
    by ascending bitmask.  Raises ResourceLimit when a candidate beyond the
    cap is requested, so a prefix of the stream can still be consumed.
    """
    k = len(ka.base.eve_actions)
    masks = range(1, 1 << k)
    for index, assignment in enumerate(product(masks, repeat=len(ka.knowledges))):
        if index >= max_candidates:
            raise ResourceLimit(
                f"candidate enumeration exceeds cap of {max_candidates}", checked=max_candidates
            )
        choice = dict(zip(ka.knowledges, assignment))
        yield CandidateStrategy(strategy=KnowledgeOnlyStrategy(choice), index=index)


# folded transition rows keyed by (knowledge state, action mask, adam action);
# they do not depend on the rest of the candidate, so they are shared across
# the whole enumeration for a given knowledge arena (cache keyed by identity,
# evicted when the arena is collected)
_FOLD_CACHE: dict[int, dict] = {}


def _folded_row(ka: KnowledgeArena, u: int, cmask: int, a: int) -> Distribution:
    cache = _FOLD_CACHE.get(id(ka))
    if cache is None:
        cache = {"pairs": {pair: p for p, pair in enumerate(ka.eve_pairs)}}
        _FOLD_CACHE[id(ka)] = cache
        weakref.finalize(ka, _FOLD_CACHE.pop, id(ka), None)
    key = (u, cmask, a)
    dist = cache.get(key)
    if dist is None:
        pair_index = cache["pairs"]
        pairs = [pair_index[(e, cmask)] for e in _bits(cmask)]
        share = Fraction(1, len(pairs))
        weights: dict[int, Fraction] = {}
        for p in pairs:
            for t, q in ka.arena.transition[(u, p, a)].items():
                weights[t] = weights.get(t, Fraction(0)) + share * q
        dist = Distribution(weights)
        cache[key] = dist
    return dist


def fix_candidate(ka: KnowledgeArena, cand: CandidateStrategy, objective: Objective) -> AdversaryGame:
    """Fold the candidate's uniform move into the knowledge arena.

    The result is a game in which only Adam plays; his objective is the
    complement of Eve's, i.e. safety against reachability and co-Buchi
    against Buchi.
    """
    if objective is Objective.REACHABILITY:
        adversary_objective = Objective.SAFETY
    elif objective is Objective.BUCHI:
        adversary_objective = Objective.COBUCHI
    else:
        raise ValidationError(f"no decision procedure for objective {objective.value!r}")

    kaa = ka.arena
    n_adam = len(kaa.adam_actions)
    transition: dict[tuple[int, int, int], Distribution] = {}
    for u, ks in enumerate(ka.kstates):
        try:
            cmask = cand.strategy.choice[ks.know]
        except KeyError:
            raise ValidationError(
                f"candidate undefined for knowledge {ks.know.label(ka.base)}"
            ) from None
        for a in range(n_adam):
            transition[(u, 0, a)] = _folded_row(ka, u, cmask, a)

    folded = Arena(
        states=kaa.states,
        init=kaa.init,
        eve_actions=("*",),
        adam_actions=kaa.adam_actions,
        transition=transition,
        eve_obs=(tuple(range(len(kaa.states))),),
        adam_obs=kaa.adam_obs,
        final=kaa.final,
    )
    return AdversaryGame(
        game=OneHalfGame.from_arena(folded, ADAM),
        ka=ka,
        candidate=cand,
        objective=adversary_objective,
    )


def check_candidate(
    ka: KnowledgeArena,
    cand: CandidateStrategy,
    objective: Objective,
    max_beliefs: int = DEFAULT_BELIEF_CAP,
) -> tuple[bool, PositiveWinReport, AdversaryGame]:
    """Returns (candidate almost-surely wins, Adam's report, adversary game)."""
    adv = fix_candidate(ka, cand, objective)
    if objective is Objective.REACHABILITY:
        rep = positive_safety(adv.game, max_beliefs)
    else:
        rep = positive_cobuchi(adv.game, max_beliefs)
    return adv.game.arena.init not in rep.winning_states, rep, adv


def _diag_entry(ka: KnowledgeArena, cand: CandidateStrategy, rep: PositiveWinReport) -> dict:
    base = ka.base
    return {
        "index": cand.index,
        "assignment": {
            know.label(base): list(cand.strategy.action_names(know, base))
            for know in ka.knowledges
        },
        "adam_positively_wins": ka.arena.init in rep.winning_states,
        "adam_winning_states": len(rep.winning_states),
        "sure_beliefs": len(rep.sure_beliefs),
        "iterations": rep.iterations,
        "adam_witness_memory": len(rep.witness.memory) if rep.witness else None,
    }


_WORKER_STATE: dict = {}


def _worker_init(ka, objective, max_beliefs, debug):
    _WORKER_STATE["args"] = (ka, objective, max_beliefs, debug)


def _worker_chunk(chunk):
    ka, objective, max_beliefs, debug = _WORKER_STATE["args"]
    out = []
    for index, assignment in chunk:
        cand = CandidateStrategy(
            strategy=KnowledgeOnlyStrategy(dict(zip(ka.knowledges, assignment))), index=index
        )
        wins, rep, _adv = check_candidate(ka, cand, objective, max_beliefs)
        out.append((index, wins, _diag_entry(ka, cand, rep) if debug else None))
    return out


def _report(
    arena: Arena,
    ka: KnowledgeArena,
    objective: Objective,
    winner: CandidateStrategy | None,
    winner_rep: PositiveWinReport | None,
    checked: int,
    t0: float,
    diagnostics: list[dict] | None,
) -> SolveReport:
    witness = None
    winning_knowledges: tuple[tuple[str, ...], ...] = ()
    if winner is not None:
        witness = lower_strategy(arena, winner.strategy)
        validate_strategy(arena, "eve", witness)
        assert winner_rep is not None
        losing_for_adam = [
            know
            for know in ka.knowledges
            if all(
                u not in winner_rep.winning_states
                for u, ks in enumerate(ka.kstates)
                if ks.know == know
            )
        ]
        winning_knowledges = tuple(
            tuple(arena.states[s] for s in know.states) for know in losing_for_adam
        )
    return SolveReport(
        verdict="yes" if winner is not None else "no",
        objective=objective,
        witness=witness,
        witness_winning_knowledges=winning_knowledges,
        candidates_checked=checked,
        elapsed_ms=int((time.perf_counter() - t0) * 1000),
        diagnostics=tuple(diagnostics) if diagnostics is not None else None,
    )


def _decide(
    arena: Arena,
    objective: Objective,
    max_candidates: int,
    max_beliefs: int,
    threads: int,
    debug: bool,
) -> SolveReport:
    t0 = time.perf_counter()
    ka = build_knowledge_arena(arena, max_beliefs)
    diagnostics: list[dict] | None = [] if debug else None

    if threads > 1:
        return _decide_parallel(arena, ka, objective, max_candidates, max_beliefs, threads, debug, t0)

    checked = 0
    for cand in enumerate_candidates(ka, max_candidates):
        checked += 1
        wins, rep, _adv = check_candidate(ka, cand, objective, max_beliefs)
        if diagnostics is not None:
            diagnostics.append(_diag_entry(ka, cand, rep))
        if wins:
            return _report(arena, ka, objective, cand, rep, checked, t0, diagnostics)
    return _report(arena, ka, objective, None, None, checked, t0, diagnostics)


def _decide_parallel(arena, ka, objective, max_candidates, max_beliefs, threads, debug, t0):
    total = candidate_count(ka)
    k = len(ka.base.eve_actions)
    masks = range(1, 1 << k)
    chunk_size = max(1, min(64, total // (threads * 4) or 1))

    def chunks():
        chunk = []
        for index, assignment in enumerate(product(masks, repeat=len(ka.knowledges))):
            if index >= max_candidates:
                break
            chunk.append((index, assignment))
            if len(chunk) == chunk_size:
                yield chunk
                chunk = []
        if chunk:
            yield chunk

    diagnostics = [] if debug else None
    winner_index = None
    chunk_iter = chunks()
    with ProcessPoolExecutor(
        max_workers=threads, initializer=_worker_init, initargs=(ka, objective, max_beliefs, debug)
    ) as pool:
        # keep a bounded window of in-flight chunks; results are consumed in
        # submission order so the least winning index is seen first
        pending = deque()
        for chunk in islice(chunk_iter, threads * 2):
            pending.append(pool.submit(_worker_chunk, chunk))
        while pending:
            results = pending.popleft().result()
            for index, wins, diag in results:
                if diagnostics is not None and diag is not None:
                    diagnostics.append(diag)
                if wins and winner_index is None:
                    winner_index = index
            if winner_index is not None:
                break
            for chunk in islice(chunk_iter, 1):
                pending.append(pool.submit(_worker_chunk, chunk))
    if winner_index is not None:
        # rebuild the winning candidate and its report deterministically
        assignment = _assignment_for_index(winner_index, len(masks), len(ka.knowledges))
        cand = CandidateStrategy(
            strategy=KnowledgeOnlyStrategy(
                dict(zip(ka.knowledges, [m + 1 for m in assignment]))
            ),
            index=winner_index,
        )
        _wins, rep, _adv = check_candidate(ka, cand, objective, max_beliefs)
        if diagnostics is not None:
            diagnostics = [d for d in diagnostics if d["index"] <= winner_index]
            diagnostics.sort(key=lambda d: d["index"])
        return _report(arena, ka, objective, cand, rep, winner_index + 1, t0, diagnostics)
    if total > max_candidates:
        raise ResourceLimit(
            f"candidate enumeration exceeds cap of {max_candidates}", checked=max_candidates
        )
    if diagnostics is not None:
        diagnostics.sort(key=lambda d: d["index"])
    return _report(arena, ka, objective, None, None, total, t0, diagnostics)


def _assignment_for_index(index: int, base: int, width: int) -> list[int]:
    """Digits (0-based) of ``index`` in the enumeration's mixed radix; the
    last knowledge varies fastest."""
    digits = [0] * width
    for pos in range(width - 1, -1, -1):
        digits[pos] = index % base
        index //= base
    return digits


def decide_almost_sure_reach(
    arena: Arena,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
    max_beliefs: int = DEFAULT_BELIEF_CAP,
    threads: int = 1,
    debug: bool = False,
) -> SolveReport:
    """Does Eve have an almost-surely winning strategy for reachability?

    On "yes" the report carries the lowered finite-memory witness of the
    canonically least successful candidate.
    """
    return _decide(arena, Objective.REACHABILITY, max_candidates, max_beliefs, threads, debug)


def decide_almost_sure_buchi(
    arena: Arena,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
    max_beliefs: int = DEFAULT_BELIEF_CAP,
    threads: int = 1,
    debug: bool = False,
) -> SolveReport:
    """Does Eve have an almost-surely winning strategy for Buchi?"""
    return _decide(arena, Objective.BUCHI, max_candidates, max_beliefs, threads, debug)


def random_safe_strategy(ka: KnowledgeArena, w) -> CandidateStrategy:
    """Candidate that plays, at each knowledge of ``w``, uniformly over the
    actions whose every consistent successor knowledge stays in ``w``.

    An action is judged safe on its own: playing it as a point distribution
    must keep every compatible observation inside ``w``.  Raises NotClosed
    if some knowledge has no safe action.
    """
    from .knowledge import _post_masks, _update_mask  # shared bitmask helpers

    base = ka.base
    post = _post_masks(base)
    block_masks = []
    for block in base.eve_obs:
        m = 0
        for s in block:
            m |= 1 << s
        block_masks.append(m)
    wset = {know.mask for know in w}
    choice: dict[Knowledge, int] = {}
    for know in w:
        safe = 0
        for e in range(len(base.eve_actions)):
            ok = True
            for bm in block_masks:
                result = _update_mask(post, know.mask, bm, 1 << e)
                if result and result not in wset:
                    ok = False
                    break
            if ok:
                safe |= 1 << e
        if safe == 0:
            raise NotClosed(f"knowledge {know.label(base)} has no safe action within w")
        choice[know] = safe
    return CandidateStrategy(strategy=KnowledgeOnlyStrategy(choice), index=None)
