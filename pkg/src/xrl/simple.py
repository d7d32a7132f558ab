"""A self-contained entry-indexed total-correctness logic for a procedures-only
language, with its fuel-free interpreter and the cast to partial correctness.

This is the minimal setting for entry-indexing: states are stacks only,
assertions are call-free boolean expressions (so obligations are decidable
by bounded enumeration), and each procedure carries a call-free natural
measure over its single parameter `x`. The order on entries compares
measure values at entry; calls must strictly decrease it, which the
interpreter both assumes (no fuel) and monitors (true entry states, not
the static proxy used by the checker's obligations).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

from .callfree import eval_alpha
from .diagnostics import Diagnostic
from .obligations import (FAIL, Obligation, ObligationReport, PASS, SAMPLED,
                          TRUSTED)
from .parser import parse_expr_text
from .printer import print_expr
from .runtime import (DIVERGENCE_SUSPECTED, MEASURE, Monitors,
                      MonitorViolation, MonitorViolationError, Ok, PRE, POST,
                      FRAME, RunOutcome, Timeout, TimeoutSignal, run_deep)
from .state import State, eq_except, lookup, trunc_subst, update
from .syntax import (Binary, Expr, Program, TRUE_EXPR, Var, call_free, eq,
                     free_vars, neg, subst_vars)
from .values import VBool, VNat, cast_bool, cast_nat, value_to_json

# ---------------------------------------------------------------------------
# Language
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SSkip:
    pass


@dataclass(frozen=True)
class SAssign:
    x: str
    e: Expr


@dataclass(frozen=True)
class SSeq:
    c1: "SimpleCmd"
    c2: "SimpleCmd"


@dataclass(frozen=True)
class SIf:
    guard: Expr
    then: "SimpleCmd"
    els: "SimpleCmd"


@dataclass(frozen=True)
class SCall:
    a: str
    proc: str
    e: Expr


SimpleCmd = SSkip | SAssign | SSeq | SIf | SCall


@dataclass
class SimpleProc:
    name: str
    pre: Expr = TRUE_EXPR
    post: Expr = TRUE_EXPR
    measure: Expr = Var("x")     # call-free, over x only
    body: SimpleCmd = SSkip()


@dataclass
class SimpleProgram:
    procs: dict[str, SimpleProc] = field(default_factory=dict)


def smod_vars(c: SimpleCmd) -> frozenset[str]:
    if isinstance(c, SSkip):
        return frozenset()
    if isinstance(c, SAssign):
        return frozenset((c.x,))
    if isinstance(c, SSeq):
        return smod_vars(c.c1) | smod_vars(c.c2)
    if isinstance(c, SIf):
        return smod_vars(c.then) | smod_vars(c.els)
    if isinstance(c, SCall):
        return frozenset((c.a,))
    raise TypeError(f"not a simple command: {c!r}")


_EMPTY_PROGRAM = Program()


def _eval(e: Expr, s: State) -> bool:
    return cast_bool(eval_alpha(e, s, _EMPTY_PROGRAM))


def _measure_at(proc: SimpleProc, s: State) -> int:
    return cast_nat(eval_alpha(proc.measure, s, _EMPTY_PROGRAM))


def porder(prog: SimpleProgram, p: str, ens: State, q: str, t: State) -> bool:
    """The well-founded order on entries: strict measure decrease."""
    return _measure_at(prog.procs[p], ens) < _measure_at(prog.procs[q], t)


# ---------------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------------

SIMPLE_RULES = ("asn", "skip", "seq", "if", "cal", "con", "cast")


@dataclass
class SNode:
    rule: str
    cmd: SimpleCmd | None = None
    P: Expr | None = None
    Q: Expr | None = None
    guard: Expr | None = None
    children: tuple["SNode", ...] = ()


def snode_size(node: SNode) -> int:
    return 1 + sum(snode_size(c) for c in node.children)


@dataclass(frozen=True)
class SConclusion:
    pre: Expr
    cmd: SimpleCmd
    post: Expr


@dataclass
class SimpleChecked:
    prog: SimpleProgram
    total: dict[str, "SimpleCheckedProc"] = field(default_factory=dict)
    partial: dict[str, "SimpleCheckedProc"] = field(default_factory=dict)
    obligations: list[Obligation] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


@dataclass
class SimpleCheckedProc:
    proc: str
    judgment: str
    node: SNode
    conclusion: SConclusion
    conclusions: dict[str, SConclusion]
    table: SimpleChecked


def _split_and(e: Expr):
    if isinstance(e, Binary) and e.op == "&&":
        return e.lhs, e.rhs
    return None


class _SChecker:
    def __init__(self, prog: SimpleProgram, proc: str, total: bool,
                 prefix: str):
        self.prog = prog
        self.proc = proc
        self.total = total
        self.prefix = prefix
        self.obligations: list[Obligation] = []
        self.diagnostics: list[Diagnostic] = []
        self.conclusions: dict[str, SConclusion] = {}

    def bad(self, path: str, premise: str, msg: str) -> None:
        self.diagnostics.append(Diagnostic(
            "premise-failed", f"{self.prefix}/{path} [{premise}]: {msg}"))

    def _callfree(self, e: Expr, path: str) -> bool:
        if not call_free(e):
            self.bad(path, "call-free", "simple assertions and expressions "
                     "must be call-free")
            return False
        return True

    def check(self, node: SNode, path: str) -> SConclusion | None:
        out = getattr(self, f"rule_{node.rule}", self._unknown)(node, path)
        if out is not None:
            self.conclusions[path] = out
        return out

    def _unknown(self, node: SNode, path: str):
        self.bad(path, "rule", f"unknown rule {node.rule!r}")
        return None

    def rule_asn(self, node: SNode, path: str):
        if not isinstance(node.cmd, SAssign) or node.Q is None:
            self.bad(path, "shape", "asn needs cmd `a := e` and Q")
            return None
        if not (self._callfree(node.cmd.e, path) and self._callfree(node.Q, path)):
            return None
        pre = subst_vars(node.Q, {node.cmd.x: node.cmd.e})
        return SConclusion(pre, node.cmd, node.Q)

    def rule_skip(self, node: SNode, path: str):
        if node.P is None:
            self.bad(path, "shape", "skip needs P")
            return None
        return SConclusion(node.P, SSkip(), node.P)

    def rule_seq(self, node: SNode, path: str):
        if len(node.children) != 2:
            self.bad(path, "shape", "seq takes two subderivations")
            return None
        k1 = self.check(node.children[0], f"{path}.0" if path else "0")
        k2 = self.check(node.children[1], f"{path}.1" if path else "1")
        if k1 is None or k2 is None:
            return None
        if k1.post != k2.pre:
            self.bad(path, "chain", "intermediate assertions differ")
            return None
        return SConclusion(k1.pre, SSeq(k1.cmd, k2.cmd), k2.post)

    def rule_if(self, node: SNode, path: str):
        if node.guard is None or len(node.children) != 2:
            self.bad(path, "shape", "if needs a guard and two subderivations")
            return None
        if not self._callfree(node.guard, path):
            return None
        k1 = self.check(node.children[0], f"{path}.0" if path else "0")
        k2 = self.check(node.children[1], f"{path}.1" if path else "1")
        if k1 is None or k2 is None:
            return None
        split = _split_and(k1.pre)
        if split is None or split[1] != node.guard:
            self.bad(path, "branch-preconditions",
                     "then-branch precondition must be `P && guard`")
            return None
        P = split[0]
        if k2.pre != Binary("&&", P, neg(node.guard)):
            self.bad(path, "branch-preconditions",
                     "else-branch precondition must be `P && !guard`")
            return None
        if k1.post != k2.post:
            self.bad(path, "posts-equal", "branch postconditions differ")
            return None
        return SConclusion(P, SIf(node.guard, k1.cmd, k2.cmd), k1.post)

    def rule_cal(self, node: SNode, path: str):
        if not isinstance(node.cmd, SCall) or node.P is None:
            self.bad(path, "shape", "cal needs cmd `a := p(e)` and P")
            return None
        c = node.cmd
        if c.proc not in self.prog.procs:
            self.bad(path, "proc-declared", f"unknown procedure {c.proc}")
            return None
        if not (self._callfree(c.e, path) and self._callfree(node.P, path)):
            return None
        if c.a in free_vars(node.P) | free_vars(c.e):
            self.bad(path, "target-not-free",
                     f"{c.a} occurs free in the precondition or argument")
            return None
        callee = self.prog.procs[c.proc]
        P, e = node.P, c.e
        pre_inst = subst_vars(callee.pre, {"x": e})
        self.obligations.append(_simple_ob(
            f"{self.prefix}/{path}/cal-pre", "IMPLIES",
            P, pre_inst, lambda s: (not _eval(P, s)) or _eval(pre_inst, s)))
        if self.total:
            caller = self.prog.procs[self.proc]

            def dec(s: State, callee=callee, caller=caller, P=P, e=e) -> bool:
                if not _eval(P, s):
                    return True
                ens = trunc_subst(s, [("x", eval_alpha(e, s, _EMPTY_PROGRAM))])
                cur = trunc_subst(s, [("x", lookup(s, "x"))])
                return _measure_at(callee, ens) < _measure_at(caller, cur)

            self.obligations.append(_simple_ob(
                f"{self.prefix}/{path}/cal-decrease", "MEASURE_DECREASE",
                P, Binary("<", subst_vars(callee.measure, {"x": e}),
                          self.prog.procs[self.proc].measure), dec))
        post = Binary("&&", subst_vars(callee.post, {"x": e, "ret": Var(c.a)}),
                      node.P)
        return SConclusion(node.P, c, post)

    def rule_con(self, node: SNode, path: str):
        if node.P is None or node.Q is None or len(node.children) != 1:
            self.bad(path, "shape", "con needs P, Q and one subderivation")
            return None
        if not (self._callfree(node.P, path) and self._callfree(node.Q, path)):
            return None
        k1 = self.check(node.children[0], f"{path}.0" if path else "0")
        if k1 is None:
            return None
        P, Q = node.P, node.Q
        self.obligations.append(_simple_ob(
            f"{self.prefix}/{path}/con-pre", "IMPLIES", P, k1.pre,
            lambda s: (not _eval(P, s)) or _eval(k1.pre, s)))
        self.obligations.append(_simple_ob(
            f"{self.prefix}/{path}/con-post", "IMPLIES", k1.post, Q,
            lambda s: (not _eval(k1.post, s)) or _eval(Q, s)))
        return SConclusion(P, k1.cmd, Q)

    def rule_cast(self, node: SNode, path: str):
        if self.total:
            self.bad(path, "partial-context",
                     "cast may appear only in partial derivations")
            return None
        if len(node.children) != 1:
            self.bad(path, "shape", "cast takes one subderivation")
            return None
        inner = _SChecker(self.prog, self.proc, True, self.prefix)
        k1 = inner.check(node.children[0], f"{path}.0" if path else "0")
        self.obligations.extend(inner.obligations)
        self.diagnostics.extend(inner.diagnostics)
        self.conclusions.update(inner.conclusions)
        if k1 is None:
            return None
        return SConclusion(k1.pre, k1.cmd, k1.post)


def _simple_ob(oid: str, kind: str, hyp: Expr, concl: Expr, check) -> Obligation:
    ob = Obligation(oid, kind,
                    payload={"hyp": print_expr(hyp), "concl": print_expr(concl)},
                    hyp=hyp, check=check,
                    stack_vars=tuple(sorted((free_vars(hyp) | free_vars(concl))
                                            - {"alloc"})))
    if concl == TRUE_EXPR or concl == hyp:
        ob.mode, ob.status = "syntactic", PASS
    return ob


def simple_discharge(obligations: list[Obligation],
                     nat_pool: tuple[int, ...] = tuple(range(9)),
                     ) -> ObligationReport:
    """Exhaustive enumeration over stack assignments.

    Simple-language states range over naturals (guards compute booleans but
    are never stored), so the pool is the bounded natural domain; the
    interpreter's entry monitor still guards runs from arbitrary states.
    """
    values = [VNat(n) for n in nat_pool]
    for ob in obligations:
        if ob.status is not None:
            continue
        ob.status = PASS
        names = ob.stack_vars
        for combo in itertools.product(values, repeat=len(names)):
            s = State(dict(zip(names, combo)))
            if not ob.check(s):
                ob.status = FAIL
                ob.witness = s
                break
    return ObligationReport(list(obligations))


def simple_check(prog: SimpleProgram,
                 certs: dict[str, SNode],
                 partial_certs: dict[str, SNode] | None = None
                 ) -> SimpleChecked:
    """Check per-procedure derivations against [Pre p] Body p [Post p]."""
    out = SimpleChecked(prog)
    for pname, proc in prog.procs.items():
        node = certs.get(pname)
        if node is None:
            out.diagnostics.append(Diagnostic(
                "missing-certificate", f"no derivation for procedure {pname}"))
            continue
        checker = _SChecker(prog, pname, True, f"{pname}/total")
        concl = checker.check(node, "")
        out.obligations.extend(checker.obligations)
        out.diagnostics.extend(checker.diagnostics)
        if concl is None:
            continue
        want = SConclusion(proc.pre, proc.body, proc.post)
        if concl != want:
            out.diagnostics.append(Diagnostic(
                "conclusion-shape",
                f"{pname}: derivation concludes [{print_expr(concl.pre)}] .. "
                f"[{print_expr(concl.post)}], expected "
                f"[{print_expr(want.pre)}] .. [{print_expr(want.post)}]"))
            continue
        out.total[pname] = SimpleCheckedProc(pname, "total", node, concl,
                                             checker.conclusions, out)
        pnode = (partial_certs or {}).get(pname,
                                          SNode("cast", children=(node,)))
        pchecker = _SChecker(prog, pname, False, f"{pname}/partial")
        pconcl = pchecker.check(pnode, "")
        out.obligations.extend(pchecker.obligations)
        out.diagnostics.extend(pchecker.diagnostics)
        if pconcl is not None and pconcl == want:
            out.partial[pname] = SimpleCheckedProc(
                pname, "partial", pnode, pconcl, pchecker.conclusions, out)
    return out


# ---------------------------------------------------------------------------
# Interpreters
# ---------------------------------------------------------------------------


@dataclass
class _SCtx:
    prog: SimpleProgram
    table: SimpleChecked
    mon: Monitors
    depth: int = 0
    fuel: int | None = None
    tentry: tuple | None = None   # (proc, entry state) of the activation


def _strace(ctx: _SCtx, event: dict) -> None:
    if ctx.mon.trace is not None:
        ctx.mon.trace(event)


def _sexec(ctx: _SCtx, checked: SimpleCheckedProc, node: SNode, path: str,
           s: State, total: bool) -> State:
    concl = checked.conclusions[path]
    if ctx.mon.pre and not _eval(concl.pre, s):
        raise MonitorViolationError(PRE, path or "root", s)
    rule = node.rule
    if rule == "asn":
        out = update(s, node.cmd.x, eval_alpha(node.cmd.e, s, _EMPTY_PROGRAM))
    elif rule == "skip":
        out = s
    elif rule == "seq":
        mid = _sexec(ctx, checked, node.children[0],
                     f"{path}.0" if path else "0", s, total)
        out = _sexec(ctx, checked, node.children[1],
                     f"{path}.1" if path else "1", mid, total)
    elif rule == "if":
        taken = 0 if _eval(node.guard, s) else 1
        out = _sexec(ctx, checked, node.children[taken],
                     f"{path}.{taken}" if path else str(taken), s, total)
    elif rule == "cal":
        out = _scall(ctx, node, path, s, total)
    elif rule == "con":
        out = _sexec(ctx, checked, node.children[0],
                     f"{path}.0" if path else "0", s, total)
    elif rule == "cast":
        out = _sexec(ctx, checked, node.children[0],
                     f"{path}.0" if path else "0", s, True)
    else:
        raise MonitorViolationError(PRE, path or "root", s, f"bad rule {rule}")
    if ctx.mon.post and not _eval(concl.post, out):
        raise MonitorViolationError(POST, path or "root", out)
    if ctx.mon.frame and not eq_except(s, out, smod_vars(concl.cmd), (), False):
        raise MonitorViolationError(FRAME, path or "root", out)
    return out


def _scall(ctx: _SCtx, node: SNode, path: str, s: State, total: bool) -> State:
    c: SCall = node.cmd
    callee_table = ctx.table.total if total else ctx.table.partial
    callee = callee_table.get(c.proc)
    if callee is None:
        raise MonitorViolationError(PRE, path or "root", s,
                                    f"no checked derivation for {c.proc}")
    ens = trunc_subst(s, [("x", eval_alpha(c.e, s, _EMPTY_PROGRAM))])
    if total:
        # the true entry-indexed decrease, against the caller's entry state
        if ctx.mon.measure_decrease and not porder(
                ctx.prog, c.proc, ens, ctx.tentry[0], ctx.tentry[1]):
            raise MonitorViolationError(
                MEASURE, path or "root", s,
                f"call entry {c.proc} does not decrease the measure")
    else:
        if ctx.fuel is not None and ctx.fuel <= 0:
            raise TimeoutSignal()
        if ctx.fuel is not None:
            ctx.fuel -= 1
    xs = _srun(ctx, callee, ens, total)
    return update(s, c.a, lookup(xs, "ret"))


def _srun(ctx: _SCtx, checked: SimpleCheckedProc, s: State,
          total: bool) -> State:
    ctx.depth += 1
    if ctx.depth > ctx.mon.depth_limit:
        raise MonitorViolationError(DIVERGENCE_SUSPECTED, checked.proc, s,
                                    "activation depth limit")
    proc = ctx.prog.procs[checked.proc]
    _strace(ctx, {"event": "enter", "proc": checked.proc,
                  "measure": _measure_at(proc, s), "depth": ctx.depth,
                  "fuel": ctx.fuel})
    saved = ctx.tentry
    ctx.tentry = (checked.proc, s)
    try:
        return _sexec(ctx, checked, checked.node, "", s, total)
    finally:
        ctx.tentry = saved
        ctx.depth -= 1


def simple_inter_t(checked: SimpleCheckedProc, s: State,
                   monitors: Monitors | None = None) -> RunOutcome:
    """Fuel-free total-correctness interpreter for the simple logic."""
    if checked.judgment != "total":
        raise ValueError("simple_inter_t runs total derivations")
    ctx = _SCtx(checked.table.prog, checked.table, monitors or Monitors())
    try:
        return Ok(run_deep(lambda: _srun(ctx, checked, s, True)))
    except MonitorViolationError as v:
        return MonitorViolation(v.kind, v.path, v.state, v.detail)
    except RecursionError:
        return MonitorViolation(DIVERGENCE_SUSPECTED, "host",
                                detail="host recursion limit reached")


def simple_inter_p(checked: SimpleCheckedProc, fuel: int, s: State,
                   monitors: Monitors | None = None) -> RunOutcome:
    """Fuel-based partial interpreter; cast nodes delegate fuel-free."""
    if checked.judgment != "partial":
        raise ValueError("simple_inter_p runs partial derivations")
    ctx = _SCtx(checked.table.prog, checked.table, monitors or Monitors(),
                fuel=fuel)
    try:
        return Ok(run_deep(lambda: _srun(ctx, checked, s, False)))
    except TimeoutSignal:
        return Timeout()
    except MonitorViolationError as v:
        return MonitorViolation(v.kind, v.path, v.state, v.detail)


# ---------------------------------------------------------------------------
# Countdown, the canonical example program
# ---------------------------------------------------------------------------


def countdown_program() -> SimpleProgram:
    pe = parse_expr_text
    body = SIf(pe("x == 0"), SSkip(), SCall("y", "count", pe("x - 1")))
    proc = SimpleProc("count", pre=TRUE_EXPR, post=TRUE_EXPR,
                      measure=Var("x"), body=body)
    return SimpleProgram({"count": proc})


def countdown_certificate() -> SNode:
    pe = parse_expr_text
    guard = pe("x == 0")
    then = SNode("con", P=Binary("&&", TRUE_EXPR, guard), Q=TRUE_EXPR,
                 children=(SNode("skip", P=Binary("&&", TRUE_EXPR, guard)),))
    cal = SNode("cal", cmd=SCall("y", "count", pe("x - 1")),
                P=Binary("&&", TRUE_EXPR, neg(guard)))
    els = SNode("con", P=Binary("&&", TRUE_EXPR, neg(guard)), Q=TRUE_EXPR,
                children=(cal,))
    return SNode("if", guard=guard, children=(then, els))
