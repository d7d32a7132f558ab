"""Program states: stack, heap, allocation set, and the operators over them.

Stacks and heaps are total maps realized as normalized dicts: entries equal
to the default value are dropped, so structural equality coincides with
semantic (total-map) equality. All update operators are functional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .values import (DEFAULT_VALUE, NULL, Ptr, Value, VRegion, cast_ptr,
                     value_from_json, value_to_json)

#: Variable whose lookup yields the allocation set instead of a stack entry.
ALLOC_VAR = "alloc"


@dataclass(frozen=True)
class Loc:
    """A heap location: pointer plus field name."""

    ptr: Ptr
    field: str

    def __repr__(self) -> str:
        return f"Loc({self.ptr.addr},{self.ptr.cls},{self.field})"


def _normalize(m: Mapping) -> dict:
    return {k: v for k, v in m.items() if v != DEFAULT_VALUE}


class State:
    """An immutable (stack, heap, allocation set) triple."""

    __slots__ = ("stack", "heap", "alloc")

    def __init__(self, stack: Mapping[str, Value] | None = None,
                 heap: Mapping[Loc, Value] | None = None,
                 alloc: Iterable[Ptr] = ()):
        object.__setattr__(self, "stack", _normalize(stack or {}))
        object.__setattr__(self, "heap", _normalize(heap or {}))
        object.__setattr__(self, "alloc", frozenset(alloc))

    def __setattr__(self, *_):
        raise AttributeError("State is immutable")

    def __eq__(self, other):
        return (isinstance(other, State) and self.stack == other.stack
                and self.heap == other.heap and self.alloc == other.alloc)

    def __hash__(self):
        return hash((frozenset(self.stack.items()), frozenset(self.heap.items()), self.alloc))

    def __repr__(self):
        return f"State(stack={self.stack}, heap={self.heap}, alloc={set(self.alloc)})"


EMPTY_STATE = State()


def _make(stack: dict, heap: dict, alloc: frozenset) -> State:
    """Internal constructor for components already normalized."""
    out = object.__new__(State)
    object.__setattr__(out, "stack", stack)
    object.__setattr__(out, "heap", heap)
    object.__setattr__(out, "alloc", alloc)
    return out


def lookup(s: State, x: str) -> Value:
    """Stack lookup; the variable `alloc` reads the allocation set."""
    if x == ALLOC_VAR:
        return VRegion(s.alloc)
    return s.stack.get(x, DEFAULT_VALUE)


def heap_read(s: State, loc: Loc) -> Value:
    return s.heap.get(loc, DEFAULT_VALUE)


def update(s: State, x: str, v: Value) -> State:
    if x == ALLOC_VAR:
        raise ValueError("the alloc variable cannot be assigned directly")
    stack = dict(s.stack)
    if v == DEFAULT_VALUE:
        stack.pop(x, None)
    else:
        stack[x] = v
    return _make(stack, s.heap, s.alloc)


def heap_update(s: State, loc: Loc, v: Value) -> State:
    heap = dict(s.heap)
    if v == DEFAULT_VALUE:
        heap.pop(loc, None)
    else:
        heap[loc] = v
    return _make(s.stack, heap, s.alloc)


def allocate(s: State, cls: str) -> tuple[Ptr, State]:
    """Allocate a fresh pointer of class `cls`.

    The address is the least natural >= 1 unused by the allocation set;
    address 0 is reserved for null. Fields of the fresh object read as
    defaults (the heap is total).
    """
    used = {p.addr for p in s.alloc}
    addr = 1
    while addr in used:
        addr += 1
    ptr = Ptr(addr, cls)
    return ptr, _make(s.stack, s.heap, s.alloc | {ptr})


def trunc_subst(s: State, bindings: list[tuple[str, Value]]) -> State:
    """Truncating substitution: stack holds exactly `bindings`, rest default.

    Heap and allocation set are preserved unchanged.
    """
    names = [x for x, _ in bindings]
    if len(names) != len(set(names)):
        raise ValueError(f"duplicate bound variables: {names}")
    if ALLOC_VAR in names:
        raise ValueError("cannot bind the alloc variable")
    return _make(_normalize(dict(bindings)), s.heap, s.alloc)


def eq_except(s: State, t: State, vars_except: Iterable[str],
              locs_except: Iterable[Loc], alloc_may_grow: bool) -> bool:
    """Frame equality: stacks agree off `vars_except`, heaps off `locs_except`,
    allocation sets equal (or grow when `alloc_may_grow`)."""
    ve = set(vars_except)
    le = set(locs_except)
    for x in s.stack.keys() | t.stack.keys():
        if x not in ve and lookup(s, x) != lookup(t, x):
            return False
    for loc in s.heap.keys() | t.heap.keys():
        if loc not in le and heap_read(s, loc) != heap_read(t, loc):
            return False
    if alloc_may_grow:
        return t.alloc >= s.alloc
    return t.alloc == s.alloc


def state_to_json(s: State) -> dict:
    return {
        "stack": {x: value_to_json(v) for x, v in sorted(s.stack.items())},
        "heap": sorted(
            ([[loc.ptr.addr, loc.ptr.cls], loc.field, value_to_json(v)]
             for loc, v in s.heap.items()),
        ),
        "alloc": sorted([p.addr, p.cls] for p in s.alloc),
    }


def state_from_json(obj: dict) -> State:
    stack = {x: value_from_json(v) for x, v in obj.get("stack", {}).items()}
    heap = {Loc(Ptr(a, c), f): value_from_json(v)
            for (a, c), f, v in obj.get("heap", [])}
    alloc = frozenset(Ptr(a, c) for a, c in obj.get("alloc", []))
    return State(stack, heap, alloc)


def dump_state(s: State) -> str:
    """Canonical JSON encoding (sorted keys) used by the CLI and golden tests."""
    return json.dumps(state_to_json(s), sort_keys=True, separators=(",", ":"))


def null_ptr() -> Ptr:
    return NULL


def class_of(v: Value) -> str:
    """Dynamic class of a value's pointer cast."""
    return cast_ptr(v).cls
