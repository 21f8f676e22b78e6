"""Belief tracking for the imperfectly informed protagonist.

The knowledge of Eve is the set of states she considers possible.  It is
updated deterministically from the observation block of the new state and
the support of the distribution she just played.  The knowledge arena makes
both pieces of information explicit in the state, so that strategies over it
may depend on knowledge alone; this module also provides the two strategy
translations between the base arena and the knowledge arena.

Knowledges are stored as bitmasks over the state index for O(1) set algebra
and canonical hashing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InconsistentObservation, ResourceLimit, ValidationError
from .model import ADAM, EVE, Arena, Distribution, FiniteMemoryStrategy, validate_strategy

DEFAULT_KNOWLEDGE_CAP = 10**6


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


@dataclass(frozen=True)
class Knowledge:
    """Non-empty set of states the player considers possible."""

    mask: int

    def __post_init__(self):
        if self.mask <= 0:
            raise ValidationError("knowledge must be a non-empty state set")

    @classmethod
    def of(cls, states: Iterable[int]) -> "Knowledge":
        return cls(_mask_of(states))

    @property
    def states(self) -> tuple[int, ...]:
        return tuple(_bits(self.mask))

    def __contains__(self, s: int) -> bool:
        return bool(self.mask >> s & 1)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def issubset(self, other: "Knowledge") -> bool:
        return self.mask & ~other.mask == 0

    def label(self, arena: Arena) -> str:
        return "{" + ",".join(arena.states[s] for s in self.states) + "}"


@dataclass(frozen=True)
class KnowledgeState:
    """Real state plus Eve's knowledge and the domain of her last move.

    ``dom`` is a bitmask over Eve's actions; 0 is the distinguished empty
    sentinel used only by the initial state, before Eve has played anything.
    """

    real: int
    know: Knowledge
    dom: int

    def __post_init__(self):
        if self.real not in self.know:
            raise ValidationError("real state must belong to the knowledge")


@dataclass(frozen=True)
class KnowledgeOnlyStrategy:
    """Strategy that looks at the current knowledge alone.

    Maps each knowledge to a non-empty set of Eve's actions (bitmask); the
    emitted distribution is uniform over that set.
    """

    choice: Mapping[Knowledge, int]

    def __post_init__(self):
        for k, mask in self.choice.items():
            if mask <= 0:
                raise ValidationError(f"empty action set for knowledge {k}")

    def action_names(self, k: Knowledge, arena: Arena) -> tuple[str, ...]:
        return tuple(arena.eve_actions[i] for i in _bits(self.choice[k]))


@dataclass(frozen=True)
class KnowledgeArena:
    """Arena over (real state, knowledge, last domain) triples.

    ``arena`` is a full Arena value: its states are the reachable knowledge
    states, its Eve actions are the playable (action, support) pairs, its
    Adam actions are unchanged.  Back-maps tie every piece to the base arena.
    """

    arena: Arena
    base: Arena
    kstates: tuple[KnowledgeState, ...]
    eve_pairs: tuple[tuple[int, int], ...]
    knowledges: tuple[Knowledge, ...]
    eve_block_info: tuple[tuple[Knowledge, int], ...]
    adam_block_base: tuple[int, ...]
    n_edges: int

    @property
    def census(self) -> tuple[int, int, int]:
        """(knowledge states, distinct knowledges, support edges)."""
        return (len(self.kstates), len(self.knowledges), self.n_edges)

    def pair_name(self, action: int, dom: int) -> str:
        return f"{self.base.eve_actions[action]}|{_dom_label(self.base, dom)}"


def _dom_label(arena: Arena, dom: int) -> str:
    return "{" + ",".join(arena.eve_actions[i] for i in _bits(dom)) + "}"


def _kstate_name(arena: Arena, ks: KnowledgeState) -> str:
    return f"{arena.states[ks.real]}|{ks.know.label(arena)}|{_dom_label(arena, ks.dom)}"


def _post_masks(arena: Arena) -> list[list[int]]:
    """post[s][e] = states reachable from s playing e, under any adam action."""
    n_eve = len(arena.eve_actions)
    n_adam = len(arena.adam_actions)
    post = [[0] * n_eve for _ in range(arena.n_states)]
    for s in range(arena.n_states):
        for e in range(n_eve):
            acc = 0
            for a in range(n_adam):
                acc |= _mask_of(arena.transition[(s, e, a)].support)
            post[s][e] = acc
    return post


def _update_mask(post: list[list[int]], kmask: int, block_mask: int, dom: int) -> int:
    acc = 0
    for r in _bits(kmask):
        row = post[r]
        for e in _bits(dom):
            acc |= row[e]
    return acc & block_mask


def knowledge_update(arena: Arena, k: Knowledge, obs_block: int, dom: Iterable[int]) -> Knowledge:
    """New knowledge after observing block ``obs_block`` having played a
    distribution with support ``dom``.

    Returns the set of states in the observed block that are reachable from
    some state of ``k`` under some action of ``dom`` and any adam action.
    Raises InconsistentObservation when that set is empty.
    """
    dom_mask = dom if isinstance(dom, int) else _mask_of(dom)
    if dom_mask == 0:
        raise ValueError("dom must be non-empty")
    post = _post_masks(arena)
    block_mask = _mask_of(arena.eve_obs[obs_block])
    result = _update_mask(post, k.mask, block_mask, dom_mask)
    if result == 0:
        raise InconsistentObservation(
            f"observation block {obs_block} cannot follow knowledge {k.label(arena)} under the played domain"
        )
    return Knowledge(result)


def build_knowledge_arena(arena: Arena, max_states: int = DEFAULT_KNOWLEDGE_CAP) -> KnowledgeArena:
    """Breadth-first closure of the knowledge arena from (init, {init}, empty).

    Eve's alphabet consists of the playable (action, support) pairs: pairs
    whose action lies in the support.  Letters with the action outside the
    support can never carry probability under a well-formed distribution, so
    dropping them keeps the transition function total without changing any
    strategy or any probability.
    """
    post = _post_masks(arena)
    n_eve = len(arena.eve_actions)
    n_adam = len(arena.adam_actions)
    eve_block_masks = [_mask_of(b) for b in arena.eve_obs]

    pairs = [(e, dom) for dom in range(1, 1 << n_eve) for e in _bits(dom)]

    initial = KnowledgeState(real=arena.init, know=Knowledge(1 << arena.init), dom=0)
    kstates: list[KnowledgeState] = [initial]
    index: dict[KnowledgeState, int] = {initial: 0}
    transition: dict[tuple[int, int, int], Distribution] = {}
    edges: set[tuple[int, int]] = set()

    frontier = 0
    while frontier < len(kstates):
        u = frontier
        ks = kstates[u]
        frontier += 1
        for p, (e, dom) in enumerate(pairs):
            # the successor knowledge per target state is the same for every
            # adam action: it depends only on the played domain and the block
            know_cache: dict[int, Knowledge] = {}
            for a in range(n_adam):
                weights = {}
                for t, q in arena.transition[(ks.real, e, a)].items():
                    know = know_cache.get(t)
                    if know is None:
                        block = arena.eve_block_of[t]
                        know = Knowledge(_update_mask(post, ks.know.mask, eve_block_masks[block], dom))
                        know_cache[t] = know
                    target = KnowledgeState(real=t, know=know, dom=dom)
                    v = index.get(target)
                    if v is None:
                        v = len(kstates)
                        if v >= max_states:
                            raise ResourceLimit(
                                f"knowledge arena exceeds {max_states} states", checked=v
                            )
                        kstates.append(target)
                        index[target] = v
                    weights[v] = q
                    edges.add((u, v))
                transition[(u, p, a)] = Distribution(weights)

    # observation partitions: Eve sees (knowledge, domain); Adam sees the
    # base block of the real component
    eve_groups: dict[tuple[int, int], list[int]] = {}
    adam_groups: dict[int, list[int]] = {}
    for i, ks in enumerate(kstates):
        eve_groups.setdefault((ks.know.mask, ks.dom), []).append(i)
        adam_groups.setdefault(arena.adam_block_of[ks.real], []).append(i)

    eve_obs = tuple(tuple(members) for members in eve_groups.values())
    eve_block_info = tuple((Knowledge(kmask), dom) for (kmask, dom) in eve_groups.keys())
    adam_obs = tuple(tuple(members) for members in adam_groups.values())
    adam_block_base = tuple(adam_groups.keys())

    knowledges: list[Knowledge] = []
    seen_masks: set[int] = set()
    for ks in kstates:
        if ks.know.mask not in seen_masks:
            seen_masks.add(ks.know.mask)
            knowledges.append(ks.know)

    ka_arena = Arena(
        states=tuple(_kstate_name(arena, ks) for ks in kstates),
        init=0,
        eve_actions=tuple(f"{arena.eve_actions[e]}|{_dom_label(arena, dom)}" for e, dom in pairs),
        adam_actions=arena.adam_actions,
        transition=transition,
        eve_obs=eve_obs,
        adam_obs=adam_obs,
        final=frozenset(i for i, ks in enumerate(kstates) if ks.real in arena.final),
    )
    return KnowledgeArena(
        arena=ka_arena,
        base=arena,
        kstates=tuple(kstates),
        eve_pairs=tuple(pairs),
        knowledges=tuple(knowledges),
        eve_block_info=eve_block_info,
        adam_block_base=adam_block_base,
        n_edges=len(edges),
    )


def lift_strategy(ka: KnowledgeArena, strat: FiniteMemoryStrategy) -> FiniteMemoryStrategy:
    """Translate an Eve strategy on the base arena to the knowledge arena.

    Each move distribution d becomes the well-formed distribution that plays
    (action, support of d) with the same weights; memory is preserved and
    updates are re-keyed through the knowledge-arena observation blocks.
    """
    base = ka.base
    if strat.owner != EVE:
        raise ValidationError("only Eve's strategies live on the knowledge arena")
    validate_strategy(base, EVE, strat)

    move = {}
    for m, dist in strat.move.items():
        supp = _mask_of(base.eve_action_index[a] for a in dist.support)
        move[m] = Distribution(
            {ka.pair_name(base.eve_action_index[a], supp): p for a, p in dist.items()}
        )

    base_block_of_ka = [
        base.eve_block_of[next(_bits(know.mask))] for know, _dom in ka.eve_block_info
    ]
    update = {
        m: {kb: strat.update[m][base_block_of_ka[kb]] for kb in range(len(ka.eve_block_info))}
        for m in strat.memory
    }
    return FiniteMemoryStrategy(
        owner=EVE, memory=strat.memory, init_mem=strat.init_mem, move=move, update=update
    )


def adapt_adam_strategy(ka: KnowledgeArena, strat: FiniteMemoryStrategy) -> FiniteMemoryStrategy:
    """Re-key an Adam strategy to the knowledge arena's observation blocks.

    Adam observes exactly what he observes in the base arena, so this only
    translates block indices; moves and memory are untouched.
    """
    if strat.owner != ADAM:
        raise ValidationError("expected an Adam strategy")
    validate_strategy(ka.base, ADAM, strat)
    update = {
        m: {kb: strat.update[m][b] for kb, b in enumerate(ka.adam_block_base)}
        for m in strat.memory
    }
    return FiniteMemoryStrategy(
        owner=ADAM, memory=strat.memory, init_mem=strat.init_mem, move=strat.move, update=update
    )


def lower_strategy(arena: Arena, phi: KnowledgeOnlyStrategy) -> FiniteMemoryStrategy:
    """Turn a knowledge-only strategy into a transducer on the base arena.

    The memory is the set of reachable (knowledge, domain) pairs; the update
    applies the knowledge update on the fly and the move is uniform over the
    chosen action set of the current knowledge.
    """
    post = _post_masks(arena)
    eve_block_masks = [_mask_of(b) for b in arena.eve_obs]

    initial = (Knowledge(1 << arena.init), 0)
    mems: list[tuple[Knowledge, int]] = [initial]
    seen = {initial}
    update_raw: dict[tuple[Knowledge, int], dict[int, tuple[Knowledge, int]]] = {}
    queue = [initial]
    while queue:
        mem = queue.pop(0)
        know, _dom = mem
        if know not in phi.choice:
            raise ValidationError(f"knowledge-only strategy undefined for knowledge {know.label(arena)}")
        played = phi.choice[know]
        row = {}
        for b in range(len(arena.eve_obs)):
            result = _update_mask(post, know.mask, eve_block_masks[b], played)
            if result == 0:
                row[b] = mem  # observation impossible under this strategy
                continue
            succ = (Knowledge(result), played)
            row[b] = succ
            if succ not in seen:
                seen.add(succ)
                mems.append(succ)
                queue.append(succ)
        update_raw[mem] = row

    def name(mem: tuple[Knowledge, int]) -> str:
        know, dom = mem
        return f"{know.label(arena)}|{_dom_label(arena, dom)}"

    move = {
        name(mem): Distribution.uniform(
            arena.eve_actions[i] for i in _bits(phi.choice[mem[0]])
        )
        for mem in mems
    }
    update = {
        name(mem): {b: name(target) for b, target in update_raw[mem].items()} for mem in mems
    }
    return FiniteMemoryStrategy(
        owner=EVE,
        memory=tuple(name(mem) for mem in mems),
        init_mem=name(initial),
        move=move,
        update=update,
    )
