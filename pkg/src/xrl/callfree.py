"""Structural-recursion semantics and footprints for call-free expressions.

This is the base layer of the stratification: measures, guards and call
arguments are evaluated here, with no entry bookkeeping. Both functions are
total on call-free input; hitting a call node is a defect in the caller.
"""

from __future__ import annotations

from .state import Loc, State, heap_read, lookup
from .syntax import (Binary, Call, Expr, FieldAcc, Ite, Lit, NOT, Program,
                     SING, TypeTest, Unary, Var)
from .values import (FALSE, Ptr, TRUE, Value, VBool, VNat, VRegion, cast_bool,
                     cast_nat, cast_ptr, cast_region)


class CallFreeDefect(Exception):
    """A call node reached the call-free evaluator (caller bug)."""


def type_test(v: Value, tname: str, prog: Program) -> bool:
    cls = cast_ptr(v).cls
    if prog.is_class(tname):
        return cls == tname
    return prog.is_t(cls, tname)


def apply_binary(op: str, a: Value, b: Value) -> Value:
    both_regions = isinstance(a, VRegion) and isinstance(b, VRegion)
    # comparisons treat a region on either side as a region comparison of
    # the casts, so assertion-level `<` coincides with the proper-subset
    # termination order on measure values
    any_region = isinstance(a, VRegion) or isinstance(b, VRegion)
    if op == "+":
        if both_regions:
            return VRegion(a.ptrs | b.ptrs)
        return VNat(cast_nat(a) + cast_nat(b))
    if op == "-":
        if both_regions:
            return VRegion(a.ptrs - b.ptrs)
        return VNat(max(0, cast_nat(a) - cast_nat(b)))
    if op == "*":
        return VNat(cast_nat(a) * cast_nat(b))
    if op == "<":
        if any_region:
            return VBool(cast_region(a) < cast_region(b))
        return VBool(cast_nat(a) < cast_nat(b))
    if op == "<=":
        if any_region:
            return VBool(cast_region(a) <= cast_region(b))
        return VBool(cast_nat(a) <= cast_nat(b))
    if op == "==":
        return VBool(a == b)
    if op == "in":
        return VBool(cast_ptr(a) in cast_region(b))
    if op == "&&":
        return VBool(cast_bool(a) and cast_bool(b))
    if op == "||":
        return VBool(cast_bool(a) or cast_bool(b))
    raise ValueError(f"unknown binary operator {op}")


def eval_alpha(e: Expr, s: State, prog: Program) -> Value:
    """Value of a call-free expression, by structural recursion."""
    if isinstance(e, Var):
        return lookup(s, e.name)
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, FieldAcc):
        p = cast_ptr(eval_alpha(e.obj, s, prog))
        return heap_read(s, Loc(p, e.fname))
    if isinstance(e, Ite):
        if cast_bool(eval_alpha(e.guard, s, prog)):
            return eval_alpha(e.then, s, prog)
        return eval_alpha(e.els, s, prog)
    if isinstance(e, Unary):
        v = eval_alpha(e.e, s, prog)
        if e.op == NOT:
            return FALSE if cast_bool(v) else TRUE
        if e.op == SING:
            return VRegion(frozenset((cast_ptr(v),)))
        raise ValueError(f"unknown unary operator {e.op}")
    if isinstance(e, Binary):
        return apply_binary(e.op, eval_alpha(e.lhs, s, prog),
                            eval_alpha(e.rhs, s, prog))
    if isinstance(e, TypeTest):
        return VBool(type_test(eval_alpha(e.e, s, prog), e.tname, prog))
    if isinstance(e, Call):
        raise CallFreeDefect(f"call {e.at}.{e.func} in call-free evaluation")
    raise TypeError(f"not an expression: {e!r}")


def fp_alpha(e: Expr, s: State, prog: Program) -> frozenset[Loc]:
    """Footprint of a call-free expression: the locations its value reads."""
    if isinstance(e, (Var, Lit)):
        return frozenset()
    if isinstance(e, FieldAcc):
        p = cast_ptr(eval_alpha(e.obj, s, prog))
        return fp_alpha(e.obj, s, prog) | {Loc(p, e.fname)}
    if isinstance(e, Ite):
        taken = e.then if cast_bool(eval_alpha(e.guard, s, prog)) else e.els
        return fp_alpha(e.guard, s, prog) | fp_alpha(taken, s, prog)
    if isinstance(e, Unary):
        return fp_alpha(e.e, s, prog)
    if isinstance(e, Binary):
        return fp_alpha(e.lhs, s, prog) | fp_alpha(e.rhs, s, prog)
    if isinstance(e, TypeTest):
        return fp_alpha(e.e, s, prog)
    if isinstance(e, Call):
        raise CallFreeDefect(f"call {e.at}.{e.func} in call-free footprint")
    raise TypeError(f"not an expression: {e!r}")


def eval_bool_alpha(e: Expr, s: State, prog: Program) -> bool:
    return cast_bool(eval_alpha(e, s, prog))
