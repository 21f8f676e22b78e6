"""Ground-truth evaluation of fixed strategy pairs.

A pair of finite-memory strategies induces a finite Markov chain over
(state, eve memory, adam memory) triples; objective probabilities are
computed on it exactly, in rational arithmetic, via graph analysis plus
linear systems restricted to the relevant nodes.  Monte Carlo simulation
gives an independent statistical cross-check and never decides anything.
The module also hosts two adversary oracles: the fully informed best
response (a sound over-approximation of any observation-constrained
adversary) and a brute-force verdict for tiny games.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import ValidationError
from .model import (
    ADAM,
    EVE,
    Arena,
    Distribution,
    FiniteMemoryStrategy,
    Objective,
    validate_strategy,
)

GENERATOR_ID = "python-random-mt19937"

_ZERO = Fraction(0)
_ONE = Fraction(1)


class _Compiled:
    """Index-level view of a strategy against a fixed arena."""

    def __init__(self, arena: Arena, strat: FiniteMemoryStrategy, owner: str):
        validate_strategy(arena, owner, strat)
        action_index = {a: i for i, a in enumerate(arena.actions(owner))}
        mem_index = {m: i for i, m in enumerate(strat.memory)}
        self.init = mem_index[strat.init_mem]
        self.move = [
            [(action_index[a], p) for a, p in sorted(strat.move[m].items())]
            for m in strat.memory
        ]
        n_blocks = len(arena.obs_blocks(owner))
        self.update = [
            [mem_index[strat.update[m][b]] for b in range(n_blocks)] for m in strat.memory
        ]
        self.block_of = arena.block_of(owner)


@dataclass(frozen=True)
class ProductChain:
    """Markov chain induced by an arena and a pair of strategies.

    ``nodes[i]`` is a (state, eve memory, adam memory) triple; ``edges[i]``
    maps successor node indices to exact probabilities summing to 1.
    """

    nodes: tuple[tuple[int, int, int], ...]
    edges: tuple[dict[int, Fraction], ...]
    init: int
    final: frozenset[int]


@dataclass(frozen=True)
class EvalResult:
    probability: Fraction
    method: str
    samples: int | None = None
    half_width: float | None = None
    approximate: bool = False


def build_chain(arena: Arena, eve: FiniteMemoryStrategy, adam: FiniteMemoryStrategy) -> ProductChain:
    """Reachable product construction; each edge weight is the one-step
    mixture of the transition function under both moves."""
    ce = _Compiled(arena, eve, EVE)
    ca = _Compiled(arena, adam, ADAM)
    start = (arena.init, ce.init, ca.init)
    nodes: list[tuple[int, int, int]] = [start]
    index = {start: 0}
    edges: list[dict[int, Fraction]] = []
    qi = 0
    while qi < len(nodes):
        s, me, ma = nodes[qi]
        qi += 1
        out: dict[int, Fraction] = {}
        for e, pe in ce.move[me]:
            for a, pa in ca.move[ma]:
                w = pe * pa
                for t, q in arena.transition[(s, e, a)].items():
                    node = (t, ce.update[me][ce.block_of[t]], ca.update[ma][ca.block_of[t]])
                    v = index.get(node)
                    if v is None:
                        v = len(nodes)
                        nodes.append(node)
                        index[node] = v
                    out[v] = out.get(v, _ZERO) + w * q
        edges.append(out)
    final = frozenset(i for i, (s, _me, _ma) in enumerate(nodes) if s in arena.final)
    return ProductChain(nodes=tuple(nodes), edges=tuple(edges), init=0, final=final)


# ---------------------------------------------------------------------------
# Graph machinery


def strongly_connected_components(edges) -> list[list[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    n = len(edges)
    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    result: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(edges[root]))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(edges[w])))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                result.append(comp)
    return result


def bottom_sccs(edges) -> list[list[int]]:
    sccs = strongly_connected_components(edges)
    comp_of = {}
    for i, comp in enumerate(sccs):
        for v in comp:
            comp_of[v] = i
    out = []
    for i, comp in enumerate(sccs):
        if all(comp_of[w] == i for v in comp for w in edges[v]):
            out.append(comp)
    return out


def _reachable(edges, init: int) -> set[int]:
    seen = {init}
    queue = [init]
    while queue:
        v = queue.pop()
        for w in edges[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def _solve_linear(unknowns: list[int], rows: dict[int, dict[int, Fraction]], rhs: dict[int, Fraction]) -> dict[int, Fraction]:
    """Solve A x = b by exact Gaussian elimination.

    ``rows[u]`` holds the coefficients of equation u over the unknowns.
    """
    pos = {u: i for i, u in enumerate(unknowns)}
    n = len(unknowns)
    a = [[_ZERO] * n for _ in range(n)]
    b = [_ZERO] * n
    for u in unknowns:
        i = pos[u]
        b[i] = rhs.get(u, _ZERO)
        for v, c in rows[u].items():
            a[i][pos[v]] = c
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ValidationError("singular linear system in exact solve")
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        inv = 1 / a[col][col]
        a[col] = [c * inv for c in a[col]]
        b[col] = b[col] * inv
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [cr - f * cc for cr, cc in zip(a[r], a[col])]
                b[r] = b[r] - f * b[col]
    return {u: b[pos[u]] for u in unknowns}


def absorption_values(edges, targets: set[int]) -> list[Fraction]:
    """Exact probability, from every node, of ever hitting ``targets``.

    Nodes without a path to the target set get 0, which also makes the
    restricted linear system non-singular.
    """
    n = len(edges)
    reverse: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        for v in edges[u]:
            reverse[v].append(u)
    relevant = set(targets)
    queue = list(targets)
    while queue:
        v = queue.pop()
        for u in reverse[v]:
            if u not in relevant:
                relevant.add(u)
                queue.append(u)
    unknowns = [u for u in range(n) if u in relevant and u not in targets]
    rows: dict[int, dict[int, Fraction]] = {}
    rhs: dict[int, Fraction] = {}
    for u in unknowns:
        row = {u: _ONE}
        acc = _ZERO
        for v, p in edges[u].items():
            if v in targets:
                acc += p
            elif v in relevant:
                row[v] = row.get(v, _ZERO) - p
        rows[u] = row
        rhs[u] = acc
    solved = _solve_linear(unknowns, rows, rhs) if unknowns else {}
    values = [_ZERO] * n
    for t in targets:
        values[t] = _ONE
    for u, x in solved.items():
        values[u] = x
    return values


def reach_probability(chain: ProductChain) -> Fraction:
    """Exact probability of reaching the final node set from the initial node."""
    if chain.init in chain.final:
        return _ONE
    return absorption_values(chain.edges, set(chain.final))[chain.init]


def _buchi_targets(chain: ProductChain) -> set[int]:
    targets: set[int] = set()
    for comp in bottom_sccs(chain.edges):
        if any(v in chain.final for v in comp):
            targets.update(comp)
    return targets


def buchi_probability(chain: ProductChain) -> Fraction:
    """Exact probability of visiting final nodes infinitely often: the
    probability of reaching a bottom SCC that contains a final node."""
    targets = _buchi_targets(chain)
    if not targets:
        return _ZERO
    if chain.init in targets:
        return _ONE
    return absorption_values(chain.edges, targets)[chain.init]


def objective_probability(chain: ProductChain, objective: Objective) -> Fraction:
    if objective is Objective.REACHABILITY:
        return reach_probability(chain)
    if objective is Objective.SAFETY:
        return _ONE - reach_probability(chain)
    if objective is Objective.BUCHI:
        return buchi_probability(chain)
    return _ONE - buchi_probability(chain)


def almost_sure(chain: ProductChain, objective: Objective) -> bool:
    """Qualitative check that the objective probability is exactly 1,
    by graph analysis only."""
    if objective is Objective.REACHABILITY:
        absorbed = [
            {u: _ONE} if u in chain.final else chain.edges[u] for u in range(len(chain.nodes))
        ]
        reachable = _reachable(absorbed, chain.init)
        for comp in bottom_sccs(absorbed):
            if comp[0] in reachable and not all(v in chain.final for v in comp):
                return False
        return True
    if objective is Objective.SAFETY:
        return not (_reachable(chain.edges, chain.init) & chain.final)
    if objective is Objective.BUCHI:
        reachable = _reachable(chain.edges, chain.init)
        for comp in bottom_sccs(chain.edges):
            if comp[0] in reachable and not any(v in chain.final for v in comp):
                return False
        return True
    # co-Buchi: no reachable bottom SCC may contain a final node
    reachable = _reachable(chain.edges, chain.init)
    for comp in bottom_sccs(chain.edges):
        if comp[0] in reachable and any(v in chain.final for v in comp):
            return False
    return True


# ---------------------------------------------------------------------------
# Monte Carlo


def simulate_play(
    arena: Arena,
    eve: FiniteMemoryStrategy,
    adam: FiniteMemoryStrategy,
    horizon: int,
    rng: random.Random,
) -> list[int]:
    """Sample one play of ``horizon`` steps; returns the state sequence."""
    ce = _Compiled(arena, eve, EVE)
    ca = _Compiled(arena, adam, ADAM)
    return _simulate(arena, ce, ca, horizon, rng)


def _float_cdf(pairs):
    acc = 0.0
    out = []
    for elem, p in pairs:
        acc += float(p)
        out.append((acc, elem))
    return out


def _draw(cdf, rng):
    r = rng.random()
    for acc, elem in cdf:
        if r < acc:
            return elem
    return cdf[-1][1]


def _simulate(arena, ce, ca, horizon, rng, trans_cache=None, move_cache=None):
    if trans_cache is None:
        trans_cache = {}
    if move_cache is None:
        move_cache = {}
    s, me, ma = arena.init, ce.init, ca.init
    states = [s]
    for _ in range(horizon):
        ke = ("e", id(ce), me)
        if ke not in move_cache:
            move_cache[ke] = _float_cdf(ce.move[me])
        ka = ("a", id(ca), ma)
        if ka not in move_cache:
            move_cache[ka] = _float_cdf(ca.move[ma])
        e = _draw(move_cache[ke], rng)
        a = _draw(move_cache[ka], rng)
        key = (s, e, a)
        if key not in trans_cache:
            trans_cache[key] = _float_cdf(arena.transition[key].items())
        s = _draw(trans_cache[key], rng)
        me = ce.update[me][ce.block_of[s]]
        ma = ca.update[ma][ca.block_of[s]]
        states.append(s)
    return states


def monte_carlo(
    arena: Arena,
    eve: FiniteMemoryStrategy,
    adam: FiniteMemoryStrategy,
    objective: Objective,
    samples: int,
    horizon: int = 1000,
    seed: int = 0,
) -> EvalResult:
    """Frequency estimate with a 95% confidence half-width.

    Buchi and co-Buchi are tail properties; they are approximated by
    final-state visits within the trailing window (the last 10% of the
    horizon) and flagged approximate.  Sampling uses the generator
    identified by GENERATOR_ID, seeded with ``seed``.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    ce = _Compiled(arena, eve, EVE)
    ca = _Compiled(arena, adam, ADAM)
    rng = random.Random(seed)
    window = max(1, horizon // 10)
    hits = 0
    trans_cache: dict = {}
    move_cache: dict = {}
    for _ in range(samples):
        states = _simulate(arena, ce, ca, horizon, rng, trans_cache, move_cache)
        if objective is Objective.REACHABILITY:
            ok = any(s in arena.final for s in states)
        elif objective is Objective.SAFETY:
            ok = not any(s in arena.final for s in states)
        elif objective is Objective.BUCHI:
            ok = any(s in arena.final for s in states[-window:])
        else:
            ok = not any(s in arena.final for s in states[-window:])
        hits += ok
    p_hat = Fraction(hits, samples)
    half_width = 1.96 * (float(p_hat) * (1.0 - float(p_hat)) / samples) ** 0.5
    return EvalResult(
        probability=p_hat,
        method="monte_carlo",
        samples=samples,
        half_width=half_width,
        approximate=objective in (Objective.BUCHI, Objective.COBUCHI),
    )


# ---------------------------------------------------------------------------
# Fully informed best response


class _Mdp:
    """Adversary decision process over (state, eve memory) nodes."""

    def __init__(self, arena: Arena, eve: FiniteMemoryStrategy):
        ce = _Compiled(arena, eve, EVE)
        n_adam = len(arena.adam_actions)
        start = (arena.init, ce.init)
        nodes = [start]
        index = {start: 0}
        trans: list[list[dict[int, Fraction]]] = []
        qi = 0
        while qi < len(nodes):
            s, me = nodes[qi]
            qi += 1
            per_action = []
            for a in range(n_adam):
                out: dict[int, Fraction] = {}
                for e, pe in ce.move[me]:
                    for t, q in arena.transition[(s, e, a)].items():
                        node = (t, ce.update[me][ce.block_of[t]])
                        v = index.get(node)
                        if v is None:
                            v = len(nodes)
                            nodes.append(node)
                            index[node] = v
                        out[v] = out.get(v, _ZERO) + pe * q
                per_action.append(out)
            trans.append(per_action)
        self.nodes = nodes
        self.trans = trans
        self.init = 0
        self.final = {i for i, (s, _me) in enumerate(nodes) if s in arena.final}
        self.n_actions = n_adam


def _policy_values(mdp: _Mdp, policy: list[int], targets: set[int]) -> list[Fraction]:
    edges = [mdp.trans[v][policy[v]] for v in range(len(mdp.nodes))]
    return absorption_values(edges, targets)


_MAX_PI_ROUNDS = 10_000


def _mdp_min_reach(mdp: _Mdp) -> Fraction:
    """Minimal probability of reaching the final nodes, exact.

    The value-0 region (nodes from which the adversary can avoid the final
    set surely) is computed graph-theoretically first; with it pinned, the
    Bellman system has a unique solution and policy iteration converges to
    the true minimum.
    """
    n = len(mdp.nodes)
    zero = {v for v in range(n) if v not in mdp.final}
    changed = True
    while changed:
        changed = False
        for v in list(zero):
            if not any(
                all(t in zero for t in mdp.trans[v][a]) for a in range(mdp.n_actions)
            ):
                zero.discard(v)
                changed = True
    work = [v for v in range(n) if v not in zero and v not in mdp.final]

    def values_for(policy):
        rows = {}
        rhs = {}
        unknown = set(work)
        for u in work:
            row = {u: _ONE}
            acc = _ZERO
            for v, p in mdp.trans[u][policy[u]].items():
                if v in mdp.final:
                    acc += p
                elif v in unknown:
                    row[v] = row.get(v, _ZERO) - p
            rows[u] = row
            rhs[u] = acc
        solved = _solve_linear(work, rows, rhs) if work else {}
        vals = [_ZERO] * n
        for f in mdp.final:
            vals[f] = _ONE
        for u, x in solved.items():
            vals[u] = x
        return vals

    policy = [0] * n
    for _ in range(_MAX_PI_ROUNDS):
        vals = values_for(policy)
        improved = False
        for v in work:
            best_a, best_q = policy[v], None
            for a in range(mdp.n_actions):
                q = sum((p * vals[t] for t, p in mdp.trans[v][a].items()), _ZERO)
                if best_q is None or q < best_q:
                    best_q = q
                    best_a = a
            if best_q < vals[v]:
                policy[v] = best_a
                improved = True
        if not improved:
            return vals[mdp.init]
    raise RuntimeError("policy iteration failed to converge")


def _mdp_max_reach(mdp: _Mdp, targets: set[int]) -> Fraction:
    """Maximal probability of reaching ``targets``, exact.

    Evaluation always computes the true (least-fixpoint) value of the
    current policy, so the iteration terminates at the optimum.
    """
    if mdp.init in targets:
        return _ONE
    n = len(mdp.nodes)
    policy = [0] * n
    for _ in range(_MAX_PI_ROUNDS):
        vals = _policy_values(mdp, policy, targets)
        improved = False
        for v in range(n):
            if v in targets:
                continue
            best_a, best_q = policy[v], None
            for a in range(mdp.n_actions):
                q = sum((p * vals[t] for t, p in mdp.trans[v][a].items()), _ZERO)
                if best_q is None or q > best_q:
                    best_q = q
                    best_a = a
            if best_q > vals[v]:
                policy[v] = best_a
                improved = True
        if not improved:
            return vals[mdp.init]
    raise RuntimeError("policy iteration failed to converge")


def _maximal_end_components(n: int, allowed_actions, trans) -> list[set[int]]:
    """Standard iterative MEC decomposition.

    ``allowed_actions(v)`` lists the initially allowed actions at v;
    ``trans[v][a]`` is the successor distribution (a dict).
    """
    states = set(range(n))
    actions = {v: list(allowed_actions(v)) for v in states}
    while True:
        # drop states with no actions closing inside the current state set
        changed = True
        while changed:
            changed = False
            for v in list(states):
                actions[v] = [
                    a for a in actions[v] if all(t in states for t in trans[v][a])
                ]
                if not actions[v]:
                    states.discard(v)
                    changed = True
        if not states:
            return []
        order = sorted(states)
        pos = {v: i for i, v in enumerate(order)}
        edges = [
            sorted({pos[t] for a in actions[v] for t in trans[v][a]}) for v in order
        ]
        comp_of = {}
        sccs = strongly_connected_components(edges)
        for i, comp in enumerate(sccs):
            for p in comp:
                comp_of[order[p]] = i
        changed = False
        for v in list(states):
            kept = [
                a
                for a in actions[v]
                if all(comp_of[t] == comp_of[v] for t in trans[v][a])
            ]
            if not kept:
                states.discard(v)
                changed = True
            else:
                actions[v] = kept
        if not changed:
            groups: dict[int, set[int]] = {}
            for v in states:
                groups.setdefault(comp_of[v], set()).add(v)
            return list(groups.values())


def best_response_full_info(arena: Arena, eve: FiniteMemoryStrategy, objective: Objective) -> EvalResult:
    """Minimal objective probability a fully informed adversary can enforce.

    The adversary sees the exact (state, eve memory) node, so the result is
    a lower bound on what any observation-constrained adversary allows; a
    value of exactly 1 certifies the strategy almost-surely winning against
    every adversary.
    """
    if objective not in (Objective.REACHABILITY, Objective.BUCHI):
        raise ValidationError("best response supports reach and buchi objectives only")
    mdp = _Mdp(arena, eve)
    if objective is Objective.REACHABILITY:
        value = _mdp_min_reach(mdp)
    else:
        nonfinal = set(range(len(mdp.nodes))) - mdp.final

        def allowed(v):
            if v not in nonfinal:
                return []
            return [
                a
                for a in range(mdp.n_actions)
                if all(t in nonfinal for t in mdp.trans[v][a])
            ]

        mecs = _maximal_end_components(len(mdp.nodes), allowed, mdp.trans)
        safe_union: set[int] = set()
        for comp in mecs:
            safe_union.update(comp)
        value = _ONE - (_mdp_max_reach(mdp, safe_union) if safe_union else _ZERO)
    return EvalResult(probability=value, method="exact")


# ---------------------------------------------------------------------------
# Brute-force verdict for tiny games


def _nonempty_subsets(items) -> list[tuple]:
    items = list(items)
    out = []
    for mask in range(1, 1 << len(items)):
        out.append(tuple(items[i] for i in range(len(items)) if mask >> i & 1))
    return out


def adam_uniform_strategies(arena: Arena, max_memory: int) -> Iterator[FiniteMemoryStrategy]:
    """All of Adam's uniform finite-memory strategies up to the memory bound."""
    from itertools import product

    n_blocks = len(arena.adam_obs)
    subsets = _nonempty_subsets(arena.adam_actions)
    for m in range(1, max_memory + 1):
        memory = tuple(f"m{i}" for i in range(m))
        for moves in product(subsets, repeat=m):
            for flat in product(range(m), repeat=m * n_blocks):
                update = {
                    memory[i]: {
                        b: memory[flat[i * n_blocks + b]] for b in range(n_blocks)
                    }
                    for i in range(m)
                }
                yield FiniteMemoryStrategy(
                    owner=ADAM,
                    memory=memory,
                    init_mem=memory[0],
                    move={memory[i]: Distribution.uniform(moves[i]) for i in range(m)},
                    update=update,
                )


def brute_force_verdict(
    arena: Arena,
    objective: Objective,
    adam_memory: int = 2,
    max_candidates: int = 10**5,
) -> str:
    """Independent yes/no/unknown oracle for tiny games.

    Enumerates the same knowledge-only uniform candidates as the solver.
    "yes" when some candidate survives the fully informed best response;
    "no" when every candidate is refuted by an explicit observation-based
    adversary within the memory bound; "unknown" otherwise.
    """
    from .knowledge import build_knowledge_arena, lower_strategy
    from .solver import enumerate_candidates

    ka = build_knowledge_arena(arena)
    lowered = []
    for cand in enumerate_candidates(ka, max_candidates):
        low = lower_strategy(arena, cand.strategy)
        if best_response_full_info(arena, low, objective).probability == 1:
            return "yes"
        lowered.append(low)
    for low in lowered:
        refuted = False
        for adam in adam_uniform_strategies(arena, adam_memory):
            chain = build_chain(arena, low, adam)
            if not almost_sure(chain, objective):
                refuted = True
                break
        if not refuted:
            return "unknown"
    return "no"
