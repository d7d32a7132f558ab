"""Syntactic effects r`f and the separation predicates over them.

Effects pair a call-free region expression with a field name; an effect
list denotes, per state, the union of region-members crossed with fields.
`reff` computes read effects for call-free expressions; `read_effects`
extends it to expressions with shallow calls by charging a call with the
callee's declared reads region. `region_to_effects` pairs a region with
every declared field.
"""

from __future__ import annotations

from dataclasses import dataclass

from .callfree import eval_alpha
from .state import Loc, State
from .syntax import (AllocCmd, Assign, Binary, Call, CallCmd, Cmd, Expr,
                     FieldAcc, FieldWrite, IfCmd, Ite, Lit, Program, SeqCmd,
                     SING, Skip, TypeTest, Unary, Var, call_free, subst_vars)
from .values import cast_region


@dataclass(frozen=True)
class Effect:
    region: Expr   # call-free
    fname: str


EffectList = tuple[Effect, ...]

EMPTY_EFFECTS: EffectList = ()


def locs(effects: EffectList, s: State, prog: Program) -> frozenset[Loc]:
    """Concrete locations an effect list denotes in a state."""
    out: set[Loc] = set()
    for eff in effects:
        for p in cast_region(eval_alpha(eff.region, s, prog)):
            out.add(Loc(p, eff.fname))
    return frozenset(out)


class ReffDefect(Exception):
    """A call node reached reff (use read_effects for shallow-call exprs)."""


def reff(e: Expr) -> EffectList:
    """Read effects of a call-free expression.

    Field access charges the singleton region of the receiver; conditionals
    are branch-insensitive so the result is state-independent.
    """
    if isinstance(e, (Var, Lit)):
        return ()
    if isinstance(e, FieldAcc):
        return reff(e.obj) + (Effect(Unary(SING, e.obj), e.fname),)
    if isinstance(e, Ite):
        return reff(e.guard) + reff(e.then) + reff(e.els)
    if isinstance(e, Unary):
        return reff(e.e)
    if isinstance(e, Binary):
        return reff(e.lhs) + reff(e.rhs)
    if isinstance(e, TypeTest):
        return reff(e.e)
    if isinstance(e, Call):
        raise ReffDefect(f"call {e.at}.{e.func} has no call-free read effects")
    raise TypeError(f"not an expression: {e!r}")


def read_effects(e: Expr, prog: Program) -> EffectList:
    """Read effects allowing calls, charged by the callee's reads clause."""
    if isinstance(e, Call):
        decl = prog.func(e.at, e.func)
        rds = subst_vars(decl.reads, {"this": e.recv, decl.param: e.args[0]})
        return (read_effects(e.recv, prog) + read_effects(e.args[0], prog)
                + region_to_effects(rds, prog))
    if isinstance(e, (Var, Lit)):
        return ()
    if isinstance(e, FieldAcc):
        return read_effects(e.obj, prog) + (Effect(Unary(SING, e.obj), e.fname),)
    if isinstance(e, Ite):
        return (read_effects(e.guard, prog) + read_effects(e.then, prog)
                + read_effects(e.els, prog))
    if isinstance(e, Unary):
        return read_effects(e.e, prog)
    if isinstance(e, Binary):
        return read_effects(e.lhs, prog) + read_effects(e.rhs, prog)
    if isinstance(e, TypeTest):
        return read_effects(e.e, prog)
    raise TypeError(f"not an expression: {e!r}")


def region_to_effects(r: Expr, prog: Program) -> EffectList:
    """Pair a region expression with every declared field (declaration order)."""
    return tuple(Effect(r, f) for f in prog.field_names)


def disjoint_locs(a: frozenset[Loc], b: frozenset[Loc]) -> bool:
    return not (a & b)


def separates(eta: EffectList, eps: EffectList, s: State, prog: Program) -> bool:
    """Separator: the two lists denote disjoint location sets in `s`."""
    return disjoint_locs(locs(eta, s, prog), locs(eps, s, prog))


def subeffect(eps_sub: EffectList, eps: EffectList, s: State, prog: Program) -> bool:
    """Pointwise subeffect: locations of the first list within the second."""
    return locs(eps_sub, s, prog) <= locs(eps, s, prog)


def immune(eps2: EffectList, eps1: EffectList, s: State, prog: Program) -> bool:
    """Each region expression of eps2 reads nothing eps1 writes (in `s`)."""
    written = locs(eps1, s, prog)
    for eff in eps2:
        if not disjoint_locs(locs(reff(eff.region), s, prog), written):
            return False
    return True


def disjoint_from_region(eps: EffectList, r2: Expr, s: State, prog: Program) -> bool:
    """Each effect's region denotes pointers disjoint from r2's (in `s`)."""
    other = cast_region(eval_alpha(r2, s, prog))
    for eff in eps:
        if cast_region(eval_alpha(eff.region, s, prog)) & other:
            return False
    return True


def mod_vars(c: Cmd) -> frozenset[str]:
    """Stack variables a command modifies.

    Allocation and method calls add both the target and `alloc`; field
    writes modify no stack variable (heap writes live in effect lists).
    """
    if isinstance(c, (Skip, FieldWrite)):
        return frozenset()
    if isinstance(c, Assign):
        return frozenset((c.x,))
    if isinstance(c, (AllocCmd, CallCmd)):
        return frozenset((c.x, "alloc"))
    if isinstance(c, IfCmd):
        return mod_vars(c.then) | mod_vars(c.els)
    if isinstance(c, SeqCmd):
        return mod_vars(c.c1) | mod_vars(c.c2)
    raise TypeError(f"not a command: {c!r}")


def effect_to_json(eff: Effect) -> dict:
    from .printer import print_expr
    return {"region": print_expr(eff.region), "field": eff.fname}


def effects_to_json(effects: EffectList) -> list[dict]:
    return [effect_to_json(e) for e in effects]


def effects_from_json(items, prog: Program) -> EffectList:
    from .parser import parse_expr_text
    out = []
    for item in items:
        region = parse_expr_text(item["region"], prog)
        if not call_free(region):
            raise ValueError(f"effect region not call-free: {item['region']}")
        out.append(Effect(region, item["field"]))
    return tuple(out)


def effect_fv(effects: EffectList) -> frozenset[str]:
    from .syntax import free_vars
    out: frozenset[str] = frozenset()
    for eff in effects:
        out |= free_vars(eff.region)
    return out
