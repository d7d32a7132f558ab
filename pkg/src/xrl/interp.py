"""Derivation-guided interpreters and the plain big-step oracle.

`inter_t` executes a checked total-correctness certificate with no fuel
anywhere: recursion is justified by the entry order, and monitors assert at
every node the contracts the judgment promises (precondition, mse
invariant, postcondition, frame equality, measure decrease at calls).
`inter_p` executes partial certificates with a fuel parameter consumed
only by partial call nodes; cast nodes set the mse snapshot, delegate to
the total interpreter fuel-free, and restore mse afterwards.

`oracle_run` is an independent big-step semantics over raw commands (no
derivations, no monitors) used for differential testing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .callfree import apply_binary, eval_alpha, type_test
from .checker import CheckedCertificates, CheckedDerivation, Conclusion
from .derivation import DNode, derivation_size
from .effects import locs, mod_vars
from .entries import EntryHead, ReducedEntry, m_v
from .printer import print_cmd
from .runtime import (DF, DISPATCH, DIVERGENCE_SUSPECTED, FRAME, FRAME_R,
                      MEASURE, MSE, Monitors, MonitorViolation,
                      MonitorViolationError, Ok, POST, PRE, RunOutcome,
                      StuckSignal, Timeout, TimeoutSignal, run_deep)
from .state import (Loc, State, allocate, eq_except, heap_update, lookup,
                    trunc_subst, update)
from .syntax import (AllocCmd, Assign, Binary, Call, CallCmd, Cmd, Expr,
                     FieldAcc, FieldWrite, IfCmd, Ite, Lit, MSE_VAR, NOT,
                     Program, SING, SeqCmd, Skip, TypeTest, Unary, Var)
from .values import (DEFAULT_VALUE, Value, VBool, VRegion, cast_bool,
                     cast_ptr, value_to_json)
from .wd import EvalOptions, df2, eval_a2, eval_b2, top_entry


@dataclass
class _RunCtx:
    prog: Program
    table: CheckedCertificates
    mon: Monitors
    depth: int = 0
    fuel: int | None = None   # None in total runs


def _assert_eval(ctx: _RunCtx, e: Expr, s: State, path: str) -> Value:
    """Evaluate a rule-position expression (kind-2, top entry).

    Function-call entries made during this evaluation land in the trace, so
    traced runs expose the full call-entry sequence.
    """
    if not df2(top_entry(s), e, s, ctx.prog):
        raise MonitorViolationError(DF, path, s,
                                    "expression not well-defined here")
    opts = EvalOptions(trace=ctx.mon.trace) if ctx.mon.trace else None
    return eval_a2(e, top_entry(s), s, ctx.prog, opts)


def _check_b2(ctx: _RunCtx, e: Expr, s: State) -> bool:
    return eval_b2(e, s, ctx.prog)


def _trace(ctx: _RunCtx, event: dict) -> None:
    if ctx.mon.trace is not None:
        ctx.mon.trace(event)


def _enter_activation(ctx: _RunCtx, checked: CheckedDerivation, s: State,
                      mse_expr: Expr | None, path: str) -> Value | None:
    ctx.depth += 1
    if ctx.depth > ctx.mon.depth_limit:
        raise MonitorViolationError(DIVERGENCE_SUSPECTED, path, s,
                                    f"activation depth exceeded "
                                    f"{ctx.mon.depth_limit}")
    mse_val = None
    if mse_expr is not None:
        mse_val = eval_alpha(mse_expr, s, ctx.prog)
        if ctx.mon.mse_invariant and lookup(s, MSE_VAR) != mse_val:
            raise MonitorViolationError(MSE, path, s,
                                        "mse does not hold the entry measure")
    _trace(ctx, {"event": "enter", "head": f"{checked.owner};{checked.member}",
                 "judgment": checked.judgment, "depth": ctx.depth,
                 "measure": value_to_json(mse_val) if mse_val is not None else None,
                 "fuel": ctx.fuel})
    return mse_val


def _node_pre(ctx: _RunCtx, concl: Conclusion, s: State, path: str,
              entry_state: State, mse_val: Value | None) -> None:
    if ctx.mon.pre and not _check_b2(ctx, concl.pre, s):
        raise MonitorViolationError(PRE, path, s, "precondition does not hold")
    if (mse_val is not None and ctx.mon.mse_invariant
            and lookup(s, MSE_VAR) != mse_val):
        raise MonitorViolationError(MSE, path, s,
                                    "mse changed during the activation")


def _node_post(ctx: _RunCtx, concl: Conclusion, s: State, out: State,
               path: str) -> None:
    if ctx.mon.post and not _check_b2(ctx, concl.post, out):
        raise MonitorViolationError(POST, path, out,
                                    "postcondition does not hold")
    if ctx.mon.frame:
        mv = mod_vars(concl.cmd)
        written = locs(concl.eps, s, ctx.prog)
        if not eq_except(s, out, mv - {"alloc"}, written, "alloc" in mv):
            raise MonitorViolationError(FRAME, path, out,
                                        "frame contract violated")


def _exec(ctx: _RunCtx, checked: CheckedDerivation, node: DNode, path: str,
          s: State, head: EntryHead | None, entry_state: State,
          mse_val: Value | None, total: bool) -> State:
    concl = checked.conclusions[path]
    _node_pre(ctx, concl, s, path or "root", entry_state, mse_val)
    _trace(ctx, {"event": "node", "rule": node.rule, "path": path or "root",
                 "size": derivation_size(node), "depth": ctx.depth})
    rule = node.rule

    if rule == "assign":
        cmd = node.cmd
        out = update(s, cmd.x, _assert_eval(ctx, cmd.e, s, path))
    elif rule == "write":
        cmd = node.cmd
        p = cast_ptr(lookup(s, cmd.x))
        out = heap_update(s, Loc(p, cmd.fname), eval_alpha(cmd.e, s, ctx.prog))
    elif rule == "skip":
        out = s
    elif rule == "alloc":
        cmd = node.cmd
        ptr, out = allocate(s, cmd.cls)
        out = update(out, cmd.x, ptr)
    elif rule == "if":
        taken = 0 if cast_bool(_assert_eval(ctx, node.guard, s, path)) else 1
        out = _exec(ctx, checked, node.children[taken],
                    _sub(path, taken), s, head, entry_state, mse_val, total)
    elif rule == "seq":
        mid = _exec(ctx, checked, node.children[0], _sub(path, 0), s, head,
                    entry_state, mse_val, total)
        out = _exec(ctx, checked, node.children[1], _sub(path, 1), mid, head,
                    entry_state, mse_val, total)
    elif rule == "frame":
        out = _exec(ctx, checked, node.children[0], _sub(path, 0), s, head,
                    entry_state, mse_val, total)
        if ctx.mon.post and not _check_b2(ctx, node.R, out):
            raise MonitorViolationError(FRAME_R, path or "root", out,
                                        "framed assertion not re-established")
    elif rule == "conseq":
        out = _exec(ctx, checked, node.children[0], _sub(path, 0), s, head,
                    entry_state, mse_val, total)
    elif rule == "call":
        out = _call(ctx, node, path, s, head, total)
    elif rule == "cast":
        out = _cast(ctx, checked, node, path, s)
    else:
        raise MonitorViolationError(DISPATCH, path or "root", s,
                                    f"unknown rule {rule}")
    _node_post(ctx, concl, s, out, path or "root")
    return out


def _sub(path: str, i: int) -> str:
    return f"{path}.{i}" if path else str(i)


def _call(ctx: _RunCtx, node: DNode, path: str, s: State,
          head: EntryHead | None, total: bool) -> State:
    cmd: CallCmd = node.cmd
    recv_val = lookup(s, cmd.recv)
    cls = cast_ptr(recv_val).cls
    table = ctx.table.total if total else ctx.table.partial
    callee = table.get((cls, cmd.method))
    if callee is None:
        raise MonitorViolationError(
            DISPATCH, path or "root", s,
            f"no checked {'total' if total else 'partial'} certificate for "
            f"{cls}.{cmd.method} (receiver {cmd.recv})")
    decl = ctx.prog.method(cls, cmd.method)
    bindings = [("this", recv_val)]
    bindings += [(p, lookup(s, z)) for p, z in zip(decl.params, cmd.args)]
    ens = trunc_subst(s, bindings)

    if total:
        measure_val = eval_alpha(decl.measure, ens, ctx.prog)
        ens = update(ens, MSE_VAR, measure_val)
        if ctx.mon.measure_decrease and head is not None:
            caller_red = ReducedEntry(head, lookup(s, MSE_VAR))
            callee_red = ReducedEntry(EntryHead(cls, cmd.method), measure_val)
            if not m_v(ctx.prog, callee_red, caller_red):
                raise MonitorViolationError(
                    MEASURE, path or "root", s,
                    f"call entry {cls};{cmd.method} does not decrease")
        _trace(ctx, {"event": "call", "head": f"{cls};{cmd.method}",
                     "measure": value_to_json(measure_val),
                     "depth": ctx.depth, "path": path or "root"})
        xs = _run_checked(ctx, callee, ens)
    else:
        if ctx.fuel is not None and ctx.fuel <= 0:
            raise TimeoutSignal()
        if ctx.fuel is not None:
            ctx.fuel -= 1
        _trace(ctx, {"event": "call", "head": f"{cls};{cmd.method}",
                     "measure": None, "depth": ctx.depth,
                     "fuel": ctx.fuel, "path": path or "root"})
        xs = _run_checked(ctx, callee, ens)

    stack = dict(s.stack)
    ret = lookup(xs, "ret")
    if ret == DEFAULT_VALUE:
        stack.pop(cmd.x, None)
    else:
        stack[cmd.x] = ret
    return State(stack, xs.heap, xs.alloc)


def _cast(ctx: _RunCtx, checked: CheckedDerivation, node: DNode, path: str,
          s: State) -> State:
    head = node.head
    measure = ctx.prog.member_measure(head.owner, head.member)
    ins = update(s, MSE_VAR, eval_alpha(measure, s, ctx.prog))
    child = node.children[0]
    mse_val = lookup(ins, MSE_VAR)
    _trace(ctx, {"event": "cast", "head": str(head), "depth": ctx.depth,
                 "measure": value_to_json(mse_val), "fuel": ctx.fuel})
    outs = _exec(ctx, checked, child, _sub(path, 0), ins, head, ins, mse_val,
                 total=True)
    return update(outs, MSE_VAR, lookup(s, MSE_VAR))


def _run_checked(ctx: _RunCtx, checked: CheckedDerivation, s: State) -> State:
    total = checked.judgment == "total"
    mse_expr = None
    if total:
        mse_expr = ctx.prog.member_measure(checked.owner, checked.member)
    mse_val = _enter_activation(ctx, checked, s, mse_expr, checked.owner)
    try:
        return _exec(ctx, checked, checked.node, "", s, checked.head, s,
                     mse_val, total)
    finally:
        ctx.depth -= 1


def inter_t(checked: CheckedDerivation, s: State,
            monitors: Monitors | None = None) -> RunOutcome:
    """Run a total-correctness certificate. There is no fuel: termination is
    carried by the entry order, and monitors convert any breach into a
    MonitorViolation outcome."""
    if checked.judgment != "total":
        raise ValueError("inter_t runs total-correctness certificates")
    ctx = _RunCtx(checked.table.prog, checked.table,
                  monitors or Monitors(), fuel=None)
    try:
        return Ok(run_deep(lambda: _run_checked(ctx, checked, s)))
    except MonitorViolationError as v:
        return MonitorViolation(v.kind, v.path, v.state, v.detail)
    except RecursionError:
        return MonitorViolation(DIVERGENCE_SUSPECTED, "host",
                                detail="host recursion limit reached")


def inter_p(checked: CheckedDerivation, fuel: int, s: State,
            monitors: Monitors | None = None) -> RunOutcome:
    """Run a partial-correctness certificate with the given fuel. Only
    partial call nodes consume fuel; cast-wrapped total subderivations run
    fuel-free."""
    if checked.judgment != "partial":
        raise ValueError("inter_p runs partial-correctness certificates")
    ctx = _RunCtx(checked.table.prog, checked.table,
                  monitors or Monitors(), fuel=fuel)
    try:
        return Ok(run_deep(lambda: _run_checked(ctx, checked, s)))
    except TimeoutSignal:
        return Timeout()
    except MonitorViolationError as v:
        return MonitorViolation(v.kind, v.path, v.state, v.detail)
    except RecursionError:
        return MonitorViolation(DIVERGENCE_SUSPECTED, "host",
                                detail="host recursion limit reached")


# ---------------------------------------------------------------------------
# Independent big-step oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stuck:
    reason: str


OracleOutcome = Ok | Timeout | Stuck


def _oracle_eval(e: Expr, s: State, prog: Program, fuel: list[int]) -> Value:
    if isinstance(e, Var):
        return lookup(s, e.name)
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, FieldAcc):
        p = cast_ptr(_oracle_eval(e.obj, s, prog, fuel))
        return s.heap.get(Loc(p, e.fname), DEFAULT_VALUE)
    if isinstance(e, Ite):
        if cast_bool(_oracle_eval(e.guard, s, prog, fuel)):
            return _oracle_eval(e.then, s, prog, fuel)
        return _oracle_eval(e.els, s, prog, fuel)
    if isinstance(e, Unary):
        v = _oracle_eval(e.e, s, prog, fuel)
        if e.op == NOT:
            return VBool(not cast_bool(v))
        if e.op == SING:
            return VRegion(frozenset((cast_ptr(v),)))
    if isinstance(e, Binary):
        return apply_binary(e.op, _oracle_eval(e.lhs, s, prog, fuel),
                            _oracle_eval(e.rhs, s, prog, fuel))
    if isinstance(e, TypeTest):
        return VBool(type_test(_oracle_eval(e.e, s, prog, fuel), e.tname, prog))
    if isinstance(e, Call):
        if fuel[0] <= 0:
            raise TimeoutSignal()
        fuel[0] -= 1
        recv = _oracle_eval(e.recv, s, prog, fuel)
        arg = _oracle_eval(e.args[0], s, prog, fuel)
        cls = cast_ptr(recv).cls
        impl = prog.classes.get(cls)
        if impl is None or e.func not in impl.funcs:
            raise StuckSignal(f"no function {e.func} on receiver class {cls}")
        decl = impl.funcs[e.func]
        ens = trunc_subst(s, [("this", recv), (decl.param, arg)])
        return _oracle_eval(decl.body, ens, prog, fuel)
    raise TypeError(f"not an expression: {e!r}")


def _oracle_exec(c: Cmd, s: State, prog: Program, fuel: list[int]) -> State:
    if isinstance(c, Skip):
        return s
    if isinstance(c, Assign):
        return update(s, c.x, _oracle_eval(c.e, s, prog, fuel))
    if isinstance(c, FieldWrite):
        target = lookup(s, c.x)
        p = cast_ptr(target)
        if p.addr == 0:
            raise StuckSignal(f"field write through null ({c.x}.{c.fname})")
        return heap_update(s, Loc(p, c.fname),
                           _oracle_eval(c.e, s, prog, fuel))
    if isinstance(c, AllocCmd):
        ptr, out = allocate(s, c.cls)
        return update(out, c.x, ptr)
    if isinstance(c, IfCmd):
        if cast_bool(_oracle_eval(c.guard, s, prog, fuel)):
            return _oracle_exec(c.then, s, prog, fuel)
        return _oracle_exec(c.els, s, prog, fuel)
    if isinstance(c, SeqCmd):
        return _oracle_exec(c.c2, _oracle_exec(c.c1, s, prog, fuel), prog, fuel)
    if isinstance(c, CallCmd):
        if fuel[0] <= 0:
            raise TimeoutSignal()
        fuel[0] -= 1
        recv = lookup(s, c.recv)
        cls = cast_ptr(recv).cls
        impl = prog.classes.get(cls)
        if impl is None or c.method not in impl.methods:
            raise StuckSignal(f"dispatch of {c.method} on class {cls}")
        decl = impl.methods[c.method]
        bindings = [("this", recv)]
        bindings += [(p, lookup(s, z)) for p, z in zip(decl.params, c.args)]
        ens = trunc_subst(s, bindings)
        out = _oracle_exec(decl.body, ens, prog, fuel)
        stack = dict(s.stack)
        ret = lookup(out, "ret")
        if ret == DEFAULT_VALUE:
            stack.pop(c.x, None)
        else:
            stack[c.x] = ret
        return State(stack, out.heap, out.alloc)
    raise TypeError(f"not a command: {c!r}")


def oracle_run(c: Cmd, fuel: int, s: State, prog: Program) -> OracleOutcome:
    """Plain dynamic-dispatch big-step execution; no derivations, no monitors.

    Function calls inside expressions share the same fuel budget."""
    cell = [fuel]
    try:
        return Ok(run_deep(lambda: _oracle_exec(c, s, prog, cell)))
    except TimeoutSignal:
        return Timeout()
    except StuckSignal as sig:
        return Stuck(sig.reason)
    except RecursionError:
        return Stuck("host recursion limit reached")
