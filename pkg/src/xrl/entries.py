"""Entries, reduced entries, and the well-founded orders on them.

An entry pairs an entry head (owner;member) with the state at member entry.
Measures reduce entries to (head, value) pairs; a program-supplied order
from a fixed catalogue compares reduced entries. The top-level head
Object;main sits above every member head, so assertion evaluation may call
any function.
"""

from __future__ import annotations

from dataclasses import dataclass

from .callfree import eval_alpha
from .state import State
from .syntax import Expr, OrderSpec, Program
from .values import Value, cast_nat, cast_region


@dataclass(frozen=True)
class EntryHead:
    owner: str   # class or trait name; "Object" for the top head
    member: str

    def __str__(self) -> str:
        return f"{self.owner};{self.member}"

    @staticmethod
    def parse(text: str) -> "EntryHead":
        owner, _, member = text.partition(";")
        if not owner or not member:
            raise ValueError(f"malformed entry head {text!r}")
        return EntryHead(owner, member)


TOP_HEAD = EntryHead("Object", "main")


@dataclass(frozen=True)
class Entry:
    head: EntryHead
    state: State


@dataclass(frozen=True)
class ReducedEntry:
    head: EntryHead
    value: Value


class MissingMeasure(Exception):
    """An entry head without a declared measure reached an order (caller bug)."""


def measure_expr(head: EntryHead, prog: Program) -> Expr:
    if head == TOP_HEAD:
        raise MissingMeasure("the top-level head has no measure")
    m = prog.member_measure(head.owner, head.member)
    if m is None:
        raise MissingMeasure(f"no measure declared for {head}")
    return m


def reduce_entry(entry: Entry, prog: Program) -> ReducedEntry:
    """Evaluate the head's measure in the entry state (measures are call-free)."""
    if entry.head == TOP_HEAD:
        from .values import NAT0
        return ReducedEntry(TOP_HEAD, NAT0)
    return ReducedEntry(entry.head,
                        eval_alpha(measure_expr(entry.head, prog), entry.state, prog))


def _eq_under(spec: OrderSpec, a: Value, b: Value) -> bool:
    if spec.kind == "nat":
        return cast_nat(a) == cast_nat(b)
    if spec.kind == "subset":
        return cast_region(a) == cast_region(b)
    s1, s2 = spec.sub
    return _eq_under(s1, a, b) and _eq_under(s2, a, b)


def value_lt(spec: OrderSpec, a: Value, b: Value) -> bool:
    """Strict well-founded comparison of measure values under a catalogue order."""
    if spec.kind == "nat":
        return cast_nat(a) < cast_nat(b)
    if spec.kind == "subset":
        return cast_region(a) < cast_region(b)
    if spec.kind == "lex":
        s1, s2 = spec.sub
        return value_lt(s1, a, b) or (_eq_under(s1, a, b) and value_lt(s2, a, b))
    raise ValueError(f"unknown order {spec.kind}")


def _spec_for(prog: Program, overrides: dict[str, OrderSpec],
              default: OrderSpec, a: ReducedEntry, b: ReducedEntry) -> OrderSpec:
    if a.head.member == b.head.member and a.head.member in overrides:
        return overrides[a.head.member]
    return default


def f_v(prog: Program, a: ReducedEntry, b: ReducedEntry) -> bool:
    """The program's order on reduced function entries (top head is maximal)."""
    if b.head == TOP_HEAD:
        return a.head != TOP_HEAD
    if a.head == TOP_HEAD:
        return False
    spec = _spec_for(prog, prog.func_order_overrides, prog.func_order, a, b)
    return value_lt(spec, a.value, b.value)


def m_v(prog: Program, a: ReducedEntry, b: ReducedEntry) -> bool:
    """The program's order on reduced method entries."""
    if b.head == TOP_HEAD:
        return a.head != TOP_HEAD
    if a.head == TOP_HEAD:
        return False
    spec = _spec_for(prog, prog.method_order_overrides, prog.method_order, a, b)
    return value_lt(spec, a.value, b.value)


def forder(a: Entry, b: Entry, prog: Program) -> bool:
    """FOrder: compare two function entries through their reduced forms."""
    return f_v(prog, reduce_entry(a, prog), reduce_entry(b, prog))


def morder(a: Entry, b: Entry, prog: Program) -> bool:
    """MOrder: compare two method entries through their reduced forms."""
    return m_v(prog, reduce_entry(a, prog), reduce_entry(b, prog))
