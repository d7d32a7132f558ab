"""Well-definedness predicates and entry-indexed expression semantics.

The stratification has two entry-indexed layers above the call-free base:

  - the kind-1 layer (`df`, `eval_a`, `fp_a`) permits calls to kind-1
    functions only; their well-definedness preconditions are call-free and
    evaluated by the base layer;
  - the kind-2 layer (`df2`, `eval_a2`, `fp_a2`) permits calls to any
    declared function; a callee's well-definedness precondition is checked
    with the kind-1 layer at the caller's entry.

A call is well-defined only when the callee's entry lies strictly below the
caller's in the program-supplied order, so evaluation terminates without
fuel; a depth watchdog and a concrete order monitor turn obligation-suite
bugs into MonitorViolation instead of divergence. `eval_b`/`eval_b2` are
the reflected boolean forms: true iff well-defined and true.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .callfree import apply_binary, eval_alpha, fp_alpha, type_test
from .entries import (Entry, EntryHead, ReducedEntry, TOP_HEAD, f_v,
                      reduce_entry)
from .runtime import (DF, DISPATCH, DIVERGENCE_SUSPECTED, MEASURE,
                      MonitorViolationError)
from .state import Loc, State, lookup, trunc_subst
from .syntax import (Binary, Call, Expr, FieldAcc, Ite, Lit, NOT, Program,
                     SING, TypeTest, Unary, Var, call_free)
from .values import (DEFAULT_VALUE, FALSE, NAT0, TRUE, Value, VBool, VRegion,
                     cast_bool, cast_ptr, value_to_json)


class WellDefinednessDefect(Exception):
    """eval was invoked on input whose well-definedness does not hold."""


@dataclass
class EvalOptions:
    depth_limit: int = 100_000
    check_order: bool = True      # concrete entry-order monitor at each call
    debug_recheck: bool = False   # re-establish df at every call boundary
    trace: Optional[Callable[[dict], None]] = None


_DEFAULT_OPTS = EvalOptions()


_MISS = object()


@dataclass
class _Ctx:
    prog: Program
    kind2: bool
    opts: EvalOptions
    depth: int = 0
    #: call-result cache for one evaluation; sound because expression
    #: evaluation never writes the heap, so a call's value is a function of
    #: (class, function, receiver, argument). The call-site order monitor
    #: still runs on every hit.
    memo: dict | None = None


def _guard_value(guard: Expr, s: State, prog: Program) -> bool:
    if not call_free(guard):
        raise WellDefinednessDefect("conditional guard must be call-free")
    return cast_bool(eval_alpha(guard, s, prog))


def _static_ok(prog: Program, cls: str, at: str) -> bool:
    if prog.is_trait(at):
        return prog.is_t(cls, at)
    return prog.is_class(at) and cls == at


def _call_entry(e: Call, s: State, prog: Program) -> tuple[str, State]:
    """Dynamic class of the receiver and the truncated entry state."""
    if not (call_free(e.recv) and call_free(e.args[0])):
        raise WellDefinednessDefect("call receiver and argument must be call-free")
    recv_v = eval_alpha(e.recv, s, prog)
    arg_v = eval_alpha(e.args[0], s, prog)
    decl = prog.func(e.at, e.func)
    ens = trunc_subst(s, [("this", recv_v), (decl.param, arg_v)])
    return cast_ptr(recv_v).cls, ens


def _df(caller: ReducedEntry, e: Expr, s: State, prog: Program,
        kind2: bool, memo: dict | None = None) -> bool:
    if isinstance(e, (Var, Lit)):
        return True
    if isinstance(e, FieldAcc):
        return _df(caller, e.obj, s, prog, kind2, memo)
    if isinstance(e, Unary):
        return _df(caller, e.e, s, prog, kind2, memo)
    if isinstance(e, Binary):
        return (_df(caller, e.lhs, s, prog, kind2, memo)
                and _df(caller, e.rhs, s, prog, kind2, memo))
    if isinstance(e, TypeTest):
        return _df(caller, e.e, s, prog, kind2, memo)
    if isinstance(e, Ite):
        if _guard_value(e.guard, s, prog):
            return _df(caller, e.then, s, prog, kind2, memo)
        return _df(caller, e.els, s, prog, kind2, memo)
    if isinstance(e, Call):
        if not prog.has_f(e.at, e.func):
            return False
        cls, ens = _call_entry(e, s, prog)
        if not _static_ok(prog, cls, e.at):
            return False
        decl = prog.func(e.at, e.func)
        if not kind2 and decl.kind != 1:
            return False
        callee = ReducedEntry(EntryHead(e.at, e.func),
                              eval_alpha(decl.measure, ens, prog))
        if not f_v(prog, callee, caller):
            return False
        # The callee's well-definedness precondition, at the caller's entry.
        if not kind2:
            return cast_bool(eval_alpha(decl.dfc, ens, prog))
        if memo is not None:
            # the verdict depends on the caller entry (order conjuncts) and
            # on the static target (whose precondition is evaluated)
            key = ("df", caller, e.at, e.func, lookup(ens, "this"),
                   lookup(ens, decl.param))
            hit = memo.get(key, _MISS)
            if hit is not _MISS:
                return hit
        ok = (_df(caller, decl.dfc, ens, prog, False, memo)
              and cast_bool(_eval(_Ctx(prog, False, _DEFAULT_OPTS, memo=memo),
                                  caller, decl.dfc, ens)))
        if memo is not None:
            memo[key] = ok
        return ok
    raise TypeError(f"not an expression: {e!r}")


def df(entry: Entry, e: Expr, s: State, prog: Program) -> bool:
    """Kind-1 well-definedness of `e` in `s` under the given entry."""
    return _df(reduce_entry(entry, prog), e, s, prog, kind2=False, memo={})


def df2(entry: Entry, e: Expr, s: State, prog: Program) -> bool:
    """Kind-2 well-definedness of `e` in `s` under the given entry."""
    return _df(reduce_entry(entry, prog), e, s, prog, kind2=True, memo={})


def _eval(ctx: _Ctx, caller: ReducedEntry, e: Expr, s: State) -> Value:
    prog = ctx.prog
    if isinstance(e, Var):
        return lookup(s, e.name)
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, FieldAcc):
        p = cast_ptr(_eval(ctx, caller, e.obj, s))
        return s.heap.get(Loc(p, e.fname), DEFAULT_VALUE)
    if isinstance(e, Ite):
        if _guard_value(e.guard, s, prog):
            return _eval(ctx, caller, e.then, s)
        return _eval(ctx, caller, e.els, s)
    if isinstance(e, Unary):
        v = _eval(ctx, caller, e.e, s)
        if e.op == NOT:
            return FALSE if cast_bool(v) else TRUE
        if e.op == SING:
            return VRegion(frozenset((cast_ptr(v),)))
        raise ValueError(f"unknown unary operator {e.op}")
    if isinstance(e, Binary):
        return apply_binary(e.op, _eval(ctx, caller, e.lhs, s),
                            _eval(ctx, caller, e.rhs, s))
    if isinstance(e, TypeTest):
        return VBool(type_test(_eval(ctx, caller, e.e, s), e.tname, prog))
    if isinstance(e, Call):
        cls, ens = _call_entry(e, s, prog)
        impl = prog.classes.get(cls)
        if impl is None or e.func not in impl.funcs:
            raise MonitorViolationError(DISPATCH, f"{e.at}.{e.func}", s,
                                        f"no implementation in class {cls!r}")
        decl = impl.funcs[e.func]
        head = EntryHead(cls, e.func)
        callee = ReducedEntry(head, eval_alpha(decl.measure, ens, prog))
        if ctx.opts.check_order and not f_v(prog, callee, caller):
            raise MonitorViolationError(
                MEASURE, str(head), s,
                "function entry does not decrease under the program order")
        if ctx.memo is not None:
            key = (cls, e.func, lookup(ens, "this"), lookup(ens, decl.param))
            hit = ctx.memo.get(key, _MISS)
            if hit is not _MISS:
                return hit
        if ctx.opts.trace is not None:
            ctx.opts.trace({"event": "fcall", "head": str(head),
                            "measure": value_to_json(callee.value),
                            "depth": ctx.depth})
        if ctx.opts.debug_recheck and not _df(callee, decl.body, ens, prog,
                                              ctx.kind2, ctx.memo):
            raise MonitorViolationError(DF, str(head), ens,
                                        "callee body not well-defined at entry")
        ctx.depth += 1
        if ctx.depth > ctx.opts.depth_limit:
            raise MonitorViolationError(DIVERGENCE_SUSPECTED, str(head), ens,
                                        f"call depth exceeded {ctx.opts.depth_limit}")
        try:
            out = _eval(ctx, callee, decl.body, ens)
        finally:
            ctx.depth -= 1
        if ctx.memo is not None:
            ctx.memo[key] = out
        return out
    raise TypeError(f"not an expression: {e!r}")



def _boundary(entry: Entry, e: Expr, s: State, prog: Program, kind2: bool,
              opts: EvalOptions | None) -> tuple[_Ctx, ReducedEntry]:
    caller = reduce_entry(entry, prog)
    memo: dict = {}
    if not _df(caller, e, s, prog, kind2, memo):
        raise WellDefinednessDefect(
            f"expression not well-defined at entry {entry.head}")
    return _Ctx(prog, kind2, opts or _DEFAULT_OPTS, memo=memo), caller


def eval_a(e: Expr, entry: Entry, s: State, prog: Program,
           opts: EvalOptions | None = None) -> Value:
    """Kind-1 entry-indexed value; requires (and checks) `df` at the boundary."""
    ctx, caller = _boundary(entry, e, s, prog, False, opts)
    try:
        return _eval(ctx, caller, e, s)
    except RecursionError:
        raise MonitorViolationError(DIVERGENCE_SUSPECTED, str(entry.head), s,
                                    "host recursion limit reached") from None


def eval_a2(e: Expr, entry: Entry, s: State, prog: Program,
            opts: EvalOptions | None = None) -> Value:
    """Kind-2 entry-indexed value; requires (and checks) `df2` at the boundary."""
    ctx, caller = _boundary(entry, e, s, prog, True, opts)
    try:
        return _eval(ctx, caller, e, s)
    except RecursionError:
        raise MonitorViolationError(DIVERGENCE_SUSPECTED, str(entry.head), s,
                                    "host recursion limit reached") from None


def _fp(ctx: _Ctx, caller: ReducedEntry, e: Expr, s: State) -> frozenset[Loc]:
    prog = ctx.prog
    if isinstance(e, (Var, Lit)):
        return frozenset()
    if isinstance(e, FieldAcc):
        p = cast_ptr(_eval(ctx, caller, e.obj, s))
        return _fp(ctx, caller, e.obj, s) | {Loc(p, e.fname)}
    if isinstance(e, Ite):
        taken = e.then if _guard_value(e.guard, s, prog) else e.els
        return fp_alpha(e.guard, s, prog) | _fp(ctx, caller, taken, s)
    if isinstance(e, Unary):
        return _fp(ctx, caller, e.e, s)
    if isinstance(e, Binary):
        return _fp(ctx, caller, e.lhs, s) | _fp(ctx, caller, e.rhs, s)
    if isinstance(e, TypeTest):
        return _fp(ctx, caller, e.e, s)
    if isinstance(e, Call):
        cls, ens = _call_entry(e, s, prog)
        static_decl = prog.func(e.at, e.func)
        out = fp_alpha(e.recv, s, prog) | fp_alpha(e.args[0], s, prog)
        out |= fp_alpha(static_decl.measure, ens, prog)
        if ctx.kind2:
            kind1 = _Ctx(prog, False, ctx.opts, ctx.depth)
            out |= _fp(kind1, caller, static_decl.dfc, ens)
        else:
            out |= fp_alpha(static_decl.dfc, ens, prog)
        impl = prog.classes.get(cls)
        if impl is None or e.func not in impl.funcs:
            raise MonitorViolationError(DISPATCH, f"{e.at}.{e.func}", s,
                                        f"no implementation in class {cls!r}")
        decl = impl.funcs[e.func]
        callee = ReducedEntry(EntryHead(cls, e.func),
                              eval_alpha(decl.measure, ens, prog))
        ctx.depth += 1
        if ctx.depth > ctx.opts.depth_limit:
            raise MonitorViolationError(DIVERGENCE_SUSPECTED, str(callee.head),
                                        ens, "footprint depth limit")
        try:
            return out | _fp(ctx, callee, decl.body, ens)
        finally:
            ctx.depth -= 1
    raise TypeError(f"not an expression: {e!r}")


def fp_a(e: Expr, entry: Entry, s: State, prog: Program,
         opts: EvalOptions | None = None) -> frozenset[Loc]:
    """Kind-1 entry-indexed footprint: locations the reflected value reads."""
    ctx, caller = _boundary(entry, e, s, prog, False, opts)
    return _fp(ctx, caller, e, s)


def fp_a2(e: Expr, entry: Entry, s: State, prog: Program,
          opts: EvalOptions | None = None) -> frozenset[Loc]:
    """Kind-2 entry-indexed footprint."""
    ctx, caller = _boundary(entry, e, s, prog, True, opts)
    return _fp(ctx, caller, e, s)


def top_entry(s: State) -> Entry:
    return Entry(TOP_HEAD, s)


def eval_b(e: Expr, s: State, prog: Program,
           opts: EvalOptions | None = None) -> bool:
    """Reflected kind-1 semantics: well-defined at the top entry and true."""
    caller = ReducedEntry(TOP_HEAD, NAT0)
    memo: dict = {}
    if not _df(caller, e, s, prog, kind2=False, memo=memo):
        return False
    ctx = _Ctx(prog, False, opts or _DEFAULT_OPTS, memo=memo)
    try:
        return cast_bool(_eval(ctx, caller, e, s))
    except RecursionError:
        raise MonitorViolationError(DIVERGENCE_SUSPECTED, str(TOP_HEAD), s,
                                    "host recursion limit reached") from None


def eval_b2(e: Expr, s: State, prog: Program,
            opts: EvalOptions | None = None) -> bool:
    """Reflected kind-2 semantics: the assertion semantics of the logic."""
    caller = ReducedEntry(TOP_HEAD, NAT0)
    memo: dict = {}
    if not _df(caller, e, s, prog, kind2=True, memo=memo):
        return False
    ctx = _Ctx(prog, True, opts or _DEFAULT_OPTS, memo=memo)
    try:
        return cast_bool(_eval(ctx, caller, e, s))
    except RecursionError:
        raise MonitorViolationError(DIVERGENCE_SUSPECTED, str(TOP_HEAD), s,
                                    "host recursion limit reached") from None

