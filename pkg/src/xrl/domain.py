"""Bounded state domains for obligation checking.

A domain describes a finite space of small states: a pointer pool over a
bounded address range with classes drawn from the program, per-field value
generators keyed on the declared field types, and a cap deciding between
exhaustive enumeration and deterministic seeded sampling.

Two enumeration streams are produced: complete small worlds (every heap over
one or two pointers, including cyclic ones) followed by larger worlds in
which each pointer's fields reference only pointers at addresses up to its
own. The second stream keeps the count polynomial while still containing
the linked structures recursive programs traverse.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .state import Loc, State
from .syntax import Program
from .values import (EMPTY_REGION, FALSE, NULL, Ptr, TRUE, Value, VBool,
                     VNat, VRegion)


@dataclass
class BoundedDomain:
    addresses: int = 3
    max_region: int = 2
    nat_pool: tuple[int, ...] = (0, 1, 2)
    cap: int = 1_000_000
    samples: int = 2000
    seed: int = 0
    #: Explicit state list overriding enumeration (used by focused checks).
    states: list[State] | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def pointer_pool(self, prog: Program) -> list[Ptr]:
        classes = list(prog.classes)
        if not classes:
            return []
        return [Ptr(i + 1, classes[i % len(classes)])
                for i in range(self.addresses)]


def _subsets(ptrs: list[Ptr], max_card: int) -> list[VRegion]:
    out = [EMPTY_REGION]
    for k in range(1, min(max_card, len(ptrs)) + 1):
        for combo in itertools.combinations(ptrs, k):
            out.append(VRegion(frozenset(combo)))
    return out


def field_choices(ftype: str | None, visible: list[Ptr],
                  domain: BoundedDomain) -> list[Value]:
    """Candidate values for a field, from its declared type annotation."""
    if ftype is not None and ftype.startswith("set<"):
        return _subsets(visible, domain.max_region)
    if ftype == "bool":
        return [FALSE, TRUE]
    if ftype == "int" or ftype is None:
        return [VNat(n) for n in domain.nat_pool]
    # class/trait-typed (possibly nullable): pointers
    return [NULL, *visible]


def value_pool(world: list[Ptr], domain: BoundedDomain) -> list[Value]:
    """Generic stack-variable candidates over a world's pointers."""
    pool: list[Value] = [VNat(0), VNat(1), EMPTY_REGION, NULL, FALSE, TRUE]
    pool.extend(world)
    pool.extend(VRegion(frozenset((p,))) for p in world)
    if world:
        pool.append(VRegion(frozenset(world)))
    return pool


def _world_locs(prog: Program, ptrs: list[Ptr], dag: bool,
                domain: BoundedDomain) -> list[tuple[Loc, list[Value]]]:
    fields = prog.field_names
    out = []
    for i, p in enumerate(ptrs):
        visible = ptrs[:i + 1] if dag else ptrs
        for f in fields:
            out.append((Loc(p, f), field_choices(prog.field_type(f), visible, domain)))
    return out


def _iter_world(ptrs: list[Ptr], locs: list[tuple[Loc, list[Value]]]):
    alloc = frozenset(ptrs)
    keys = [loc for loc, _ in locs]
    for combo in itertools.product(*(choices for _, choices in locs)):
        yield State({}, dict(zip(keys, combo)), alloc)


def _class_tuples(prog: Program, n: int):
    return itertools.product(prog.classes, repeat=n)


def iter_base_states(prog: Program, domain: BoundedDomain):
    """All domain heaps as states with empty stacks."""
    if domain.states is not None:
        yield from domain.states
        return
    classes = list(prog.classes)
    if not classes:
        yield State()
        return
    for n in range(1, min(2, domain.addresses) + 1):
        for assignment in _class_tuples(prog, n):
            ptrs = [Ptr(i + 1, c) for i, c in enumerate(assignment)]
            yield from _iter_world(ptrs, _world_locs(prog, ptrs, False, domain))
    if domain.addresses > 2:
        ptrs = domain.pointer_pool(prog)
        yield from _iter_world(ptrs, _world_locs(prog, ptrs, True, domain))


def count_base_states(prog: Program, domain: BoundedDomain) -> int:
    if domain.states is not None:
        return len(domain.states)
    classes = list(prog.classes)
    if not classes:
        return 1
    total = 0
    for n in range(1, min(2, domain.addresses) + 1):
        per_world = 1
        ptrs = [Ptr(i + 1, classes[0]) for i in range(n)]
        for _, choices in _world_locs(prog, ptrs, False, domain):
            per_world *= len(choices)
        total += per_world * len(classes) ** n
    if domain.addresses > 2:
        per_world = 1
        ptrs = domain.pointer_pool(prog)
        for _, choices in _world_locs(prog, ptrs, True, domain):
            per_world *= len(choices)
        total += per_world
    return total


def base_states(prog: Program, domain: BoundedDomain) -> list[State]:
    """Materialized base-state list, cached per program identity."""
    key = id(prog)
    cached = domain._cache.get(key)
    if cached is None:
        cached = list(iter_base_states(prog, domain))
        domain._cache[key] = cached
    return cached


def random_base_state(prog: Program, domain: BoundedDomain,
                      rng: random.Random) -> State:
    """One random world; fields may reference any pointer (cycles included)."""
    classes = list(prog.classes)
    if not classes:
        return State()
    n = rng.randint(1, domain.addresses)
    ptrs = [Ptr(i + 1, rng.choice(classes)) for i in range(n)]
    heap = {}
    for p in ptrs:
        for f in prog.field_names:
            choices = field_choices(prog.field_type(f), ptrs, domain)
            heap[Loc(p, f)] = rng.choice(choices)
    return State({}, heap, frozenset(ptrs))


def reduced_value_pool(prog: Program, domain: BoundedDomain) -> list[Value]:
    """Measure-value candidates for well-foundedness checks on reduced entries."""
    pool: list[Value] = [VNat(n) for n in domain.nat_pool]
    pool.extend(_subsets(domain.pointer_pool(prog), domain.max_region))
    pool.extend((FALSE, TRUE, NULL))
    return pool
