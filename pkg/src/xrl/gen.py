"""Seeded state generators for differential runs and randomized testing.

Chain states are linked structures satisfying the corpus-style validity
discipline: each object's footprint contains itself and its next link's
footprint, strictly growing along the chain. Method entry states bind the
parameters that the precondition pins with equality conjuncts (`f ==
this.fp`) by evaluating the pinned expression, then reject against the
reflected precondition.
"""

from __future__ import annotations

import random

from .callfree import eval_alpha
from .domain import BoundedDomain, random_base_state, value_pool
from .state import Loc, State, heap_update, lookup, update
from .syntax import MSE_VAR, Program
from .values import Ptr, Value, VRegion
from .wd import eval_b2


def build_chain(classes: list[str], base_addr: int = 1,
                extra_stack: dict[str, Value] | None = None) -> State:
    """A linked chain, first class at the bottom; `this` points at the top.

    Footprints grow along the chain (fp of level i holds levels 0..i) and
    nt links one level down.
    """
    ptrs = [Ptr(base_addr + i, c) for i, c in enumerate(classes)]
    heap: dict[Loc, Value] = {}
    for i, p in enumerate(ptrs):
        heap[Loc(p, "fp")] = VRegion(frozenset(ptrs[:i + 1]))
        if i > 0:
            heap[Loc(p, "nt")] = ptrs[i - 1]
    stack: dict[str, Value] = {"this": ptrs[-1]}
    if extra_stack:
        stack.update(extra_stack)
    return State(stack, heap, frozenset(ptrs))


def _required_pre(prog: Program, cls: str, m: str):
    from .checker import (required_partial_conclusion,
                          required_total_conclusion)
    if prog.total(cls, m):
        return required_total_conclusion(prog, cls, m).pre
    return required_partial_conclusion(prog, cls, m).pre


def seed_params(prog: Program, cls: str, m: str, s: State) -> State:
    """Bind method parameters pinned by equality conjuncts in the precondition."""
    from .obligations import Obligation, _apply_plan, _binding_plan
    pre = _required_pre(prog, cls, m)
    params = prog.method(cls, m).params
    probe = Obligation("seed", "IMPLIES", hyp=pre, stack_vars=tuple(params))
    plan, _hard = _binding_plan(probe)
    return _apply_plan(plan, s, prog)


def method_entry_state(prog: Program, cls: str, m: str, s: State,
                       with_mse: bool = True) -> State:
    """Extend `s` with seeded parameters and, for total runs, the mse
    snapshot of the method's measure."""
    out = seed_params(prog, cls, m, s)
    if with_mse:
        measure = prog.member_measure(cls, m)
        if measure is not None:
            out = update(out, MSE_VAR, eval_alpha(measure, out, prog))
    return out


def rema_entry_state(prog: Program, classes: list[str],
                     with_mse: bool = True) -> State:
    """Entry state for remA at the top of a chain (f, p, mse seeded)."""
    return method_entry_state(prog, classes[-1], "remA", build_chain(classes),
                              with_mse=with_mse)


def generated_entry_states(prog: Program, cls: str, m: str, seed: int,
                           count: int, domain: BoundedDomain | None = None,
                           max_depth: int = 6):
    """Yield `count` seeded entry states satisfying the method precondition.

    Chain-shaped states dominate when the program has the fp/nt linking
    fields; generic random worlds fill in, filtered by the reflected
    precondition.
    """
    rng = random.Random((seed, cls, m).__repr__())
    domain = domain or BoundedDomain()
    want_pre = _required_pre(prog, cls, m)
    class_names = list(prog.classes)
    chain_shaped = {"fp", "nt"} <= set(prog.field_names) and len(class_names) > 1
    base_cls = class_names[0] if class_names else cls
    toppings = tuple(c for c in class_names if c != base_cls)
    produced = 0
    rejected = 0
    while produced < count:
        use_chain = chain_shaped and (rejected > 50 or rng.random() < 0.7)
        if use_chain:
            if cls == base_cls:
                classes = [base_cls]
            else:
                classes = [base_cls]
                classes += [rng.choice(toppings)
                            for _ in range(rng.randint(0, max_depth - 1))]
                classes.append(cls)
            s = method_entry_state(prog, cls, m, build_chain(classes),
                                   with_mse=prog.total(cls, m))
        else:
            base = random_base_state(prog, domain, rng)
            ptrs = [p for p in base.alloc if p.cls == cls]
            if not ptrs:
                rejected += 1
                continue
            s = update(base, "this", rng.choice(ptrs))
            pool = value_pool(sorted(base.alloc, key=lambda p: p.addr), domain)
            for param in prog.method(cls, m).params:
                s = update(s, param, rng.choice(pool))
            s = method_entry_state(prog, cls, m, s,
                                   with_mse=prog.total(cls, m))
        if eval_b2(want_pre, s, prog):
            produced += 1
            yield s
        else:
            rejected += 1
            if rejected > 100 * (count + 1):
                raise RuntimeError(
                    f"could not generate entry states for {cls}.{m}")


def mutate_heap_outside(s: State, protected, rng: random.Random,
                        prog: Program) -> State | None:
    """Randomly overwrite one heap location outside `protected`; None when
    no such location exists."""
    candidates = []
    for p in s.alloc:
        for f in prog.field_names:
            loc = Loc(p, f)
            if loc not in protected:
                candidates.append(loc)
    fresh = Ptr(max((p.addr for p in s.alloc), default=0) + 1,
                next(iter(prog.classes), "Null"))
    for f in prog.field_names:
        candidates.append(Loc(fresh, f))
    if not candidates:
        return None
    candidates.sort(key=lambda l: (l.ptr.addr, l.ptr.cls, l.field))
    loc = rng.choice(candidates)
    pool = value_pool(sorted(s.alloc, key=lambda p: p.addr), BoundedDomain())
    return heap_update(s, loc, rng.choice(pool))
