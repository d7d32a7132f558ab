"""The rule-by-rule derivation checker and method-certificate packaging.

Every decidable premise is verified in-process; every semantic premise is
emitted as exactly one obligation (see RULE_TABLE, which the meta-tests
walk). Conclusions are recomputed from the rule instantiations and matched
against what certificates claim, so a checked derivation is a capability:
interpreters accept only CheckedDerivation values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .derivation import CertificateFile, DNode
from .diagnostics import Diagnostic
from .effects import (Effect, EffectList, effect_fv, mod_vars, read_effects,
                      reff, region_to_effects)
from .entries import EntryHead
from .obligations import (Obligation, df_holds_ob, disjoint_ob, immune_ob,
                          implies_ob, measure_decrease_ob, separates_ob,
                          subeffect_ob)
from .printer import print_cmd, print_expr
from .syntax import (AllocCmd, Assign, Binary, CallCmd, Cmd, Expr, FieldAcc,
                     FieldWrite, IfCmd, Lit, MSE_VAR, Program, SING, SeqCmd,
                     Skip, TypeTest, Unary, Var, call_free, conj, eq,
                     free_vars, neg, pure, subst_vars)
from .values import NULL
from .wellformed import expr_constraints

#: decidable premises and obligation kinds per rule, for the meta-tests
RULE_TABLE = {
    "assign": {"decidable": ("target-not-free",), "obligations": ("DF_HOLDS",)},
    "write": {"decidable": ("pure", "call-free"), "obligations": ()},
    "skip": {"decidable": (), "obligations": ()},
    "alloc": {"decidable": ("class-declared", "target-not-free",
                            "snapshot-fresh"), "obligations": ()},
    "if": {"decidable": ("branch-preconditions", "posts-equal"),
           "obligations": ("DF_HOLDS",)},
    "seq": {"decidable": ("chain", "mse-unmodified", "effect-split"),
            "obligations": ("IMMUNE", "DISJOINT")},
    "frame": {"decidable": ("frame-vars-disjoint", "read-effects-recomputed"),
              "obligations": ("SEPARATES",)},
    "conseq": {"decidable": (), "obligations": ("IMPLIES", "IMPLIES",
                                                "SUBEFFECT")},
    "call": {"decidable": ("member-declared", "arity", "target-distinct",
                           "totality"), "obligations": ("IMPLIES",
                                                        "MEASURE_DECREASE")},
    "cast": {"decidable": ("partial-context", "measure-conjunct",
                           "mse-not-free"), "obligations": ()},
}


@dataclass(frozen=True)
class Conclusion:
    pre: Expr
    cmd: Cmd
    post: Expr
    eps: EffectList


@dataclass
class CheckOutcome:
    conclusion: Conclusion | None
    obligations: list[Obligation]
    diagnostics: list[Diagnostic]
    conclusions: dict[str, Conclusion] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.conclusion is not None and not self.diagnostics


@dataclass
class CheckedDerivation:
    """Capability handed to the interpreters: a derivation that checked."""

    owner: str
    member: str
    judgment: str                     # "total" | "partial"
    head: EntryHead | None
    node: DNode
    conclusion: Conclusion
    conclusions: dict[str, Conclusion]
    table: "CheckedCertificates | None" = None


@dataclass
class CheckedCertificates:
    prog: Program
    total: dict[tuple[str, str], CheckedDerivation] = field(default_factory=dict)
    partial: dict[tuple[str, str], CheckedDerivation] = field(default_factory=dict)
    obligations: list[Obligation] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


class _Checker:
    def __init__(self, prog: Program, head: EntryHead | None, total: bool,
                 prefix: str):
        self.prog = prog
        self.head = head
        self.total = total
        self.prefix = prefix
        self.obligations: list[Obligation] = []
        self.diagnostics: list[Diagnostic] = []
        self.conclusions: dict[str, Conclusion] = {}

    def bad(self, path: str, premise: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(
            "premise-failed", f"{self.prefix}/{path} [{premise}]: {message}"))

    def oid(self, path: str, name: str) -> str:
        return f"{self.prefix}/{path}/{name}"

    def validate_expr(self, e: Expr, path: str) -> None:
        expr_constraints(e, self.prog, f"{self.prefix}/{path}", self.diagnostics)

    # -- rule dispatch -------------------------------------------------------

    def check(self, node: DNode, path: str) -> Conclusion | None:
        handler = getattr(self, f"rule_{node.rule}", None)
        if handler is None:
            self.bad(path, "rule", f"unknown rule {node.rule!r}")
            return None
        want = _CHILD_COUNT[node.rule]
        if len(node.children) != want:
            self.bad(path, "children",
                     f"{node.rule} takes {want} subderivations, "
                     f"got {len(node.children)}")
            return None
        concl = handler(node, path)
        if concl is not None:
            self.conclusions[path] = concl
        return concl

    def child(self, node: DNode, path: str, i: int) -> Conclusion | None:
        return self.check(node.children[i], f"{path}.{i}" if path else str(i))

    # -- leaves --------------------------------------------------------------

    def rule_assign(self, node: DNode, path: str) -> Conclusion | None:
        if not isinstance(node.cmd, Assign) or node.P is None:
            self.bad(path, "shape", "assign needs cmd `x := e` and P")
            return None
        x, e, P = node.cmd.x, node.cmd.e, node.P
        self.validate_expr(e, path)
        self.validate_expr(P, path)
        if x in free_vars(e) | free_vars(P):
            self.bad(path, "target-not-free",
                     f"{x} occurs free in the expression or precondition")
            return None
        self.obligations.append(df_holds_ob(self.oid(path, "df"), P, e, self.prog))
        return Conclusion(P, node.cmd, Binary("&&", eq(Var(x), e), P), ())

    def rule_write(self, node: DNode, path: str) -> Conclusion | None:
        if not isinstance(node.cmd, FieldWrite):
            self.bad(path, "shape", "write needs cmd `x.f := e`")
            return None
        x, fname, e = node.cmd.x, node.cmd.fname, node.cmd.e
        self.validate_expr(e, path)
        if not call_free(e):
            self.bad(path, "call-free", "written expression must be call-free")
            return None
        if not pure(e):
            self.bad(path, "pure", "written expression must not read the heap")
            return None
        pre = neg(eq(Var(x), Lit(NULL)))
        post = eq(FieldAcc(Var(x), fname), e)
        return Conclusion(pre, node.cmd, post,
                          (Effect(Unary(SING, Var(x)), fname),))

    def rule_skip(self, node: DNode, path: str) -> Conclusion | None:
        if node.P is None:
            self.bad(path, "shape", "skip needs P")
            return None
        self.validate_expr(node.P, path)
        return Conclusion(node.P, Skip(), node.P, ())

    def rule_alloc(self, node: DNode, path: str) -> Conclusion | None:
        if not isinstance(node.cmd, AllocCmd) or node.P is None or node.snap is None:
            self.bad(path, "shape", "alloc needs cmd `x := C`, P and meta.snap")
            return None
        x, cls, P, r = node.cmd.x, node.cmd.cls, node.P, node.snap
        self.validate_expr(P, path)
        if not self.prog.is_class(cls):
            self.bad(path, "class-declared", f"unknown class {cls}")
            return None
        fv = free_vars(P)
        if x in fv or "alloc" in fv:
            self.bad(path, "target-not-free",
                     "precondition may mention neither the target nor alloc")
            return None
        if r in fv or r == x or r in ("this", "alloc", MSE_VAR):
            self.bad(path, "snapshot-fresh", f"snapshot {r} is not fresh")
            return None
        pre = Binary("&&", P, eq(Var(r), Var("alloc")))
        post = conj(P, TypeTest(Var(x), cls),
                    neg(Binary("in", Var(x), Var(r))),
                    Binary("in", Var(x), Var("alloc")))
        return Conclusion(pre, node.cmd, post, ())

    # -- composites -----------------------------------------------------------

    def rule_if(self, node: DNode, path: str) -> Conclusion | None:
        if node.guard is None:
            self.bad(path, "shape", "if needs a guard")
            return None
        self.validate_expr(node.guard, path)
        k1 = self.child(node, path, 0)
        k2 = self.child(node, path, 1)
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
        self.obligations.append(df_holds_ob(self.oid(path, "df"), P,
                                            node.guard, self.prog))
        cmd = IfCmd(node.guard, k1.cmd, k2.cmd)
        return self._with_cmd(node, path, Conclusion(P, cmd, k1.post,
                                                     k1.eps + k2.eps))

    def rule_seq(self, node: DNode, path: str) -> Conclusion | None:
        k1 = self.child(node, path, 0)
        k2 = self.child(node, path, 1)
        if k1 is None or k2 is None:
            return None
        if k2.pre != k1.post:
            self.bad(path, "chain",
                     f"second precondition {print_expr(k2.pre)} differs from "
                     f"first postcondition {print_expr(k1.post)}")
            return None
        if MSE_VAR in mod_vars(k1.cmd):
            self.bad(path, "mse-unmodified", "first command modifies mse")
            return None
        carry = node.carry if node.carry is not None else len(k2.eps)
        if not 0 <= carry <= len(k2.eps):
            self.bad(path, "effect-split", f"carry {carry} out of range")
            return None
        eps2, eps2p = k2.eps[:carry], k2.eps[carry:]
        cmd = SeqCmd(k1.cmd, k2.cmd)
        if node.snap is None:
            if eps2p:
                self.bad(path, "effect-split",
                         "effects beyond the carry point need meta.snap")
                return None
            P = k1.pre
        else:
            r = node.snap
            split = _split_and(k1.pre)
            if split is None or split[1] != eq(Var(r), Var("alloc")):
                self.bad(path, "effect-split",
                         f"first precondition must end with `{r} == alloc`")
                return None
            P = split[0]
            if r in free_vars(P) or r in mod_vars(cmd) or r == MSE_VAR:
                self.bad(path, "effect-split", f"snapshot {r} is not fresh")
                return None
            self.obligations.append(disjoint_ob(
                self.oid(path, "disjoint"), k2.pre, eps2p, Var(r), self.prog))
        self.obligations.append(immune_ob(
            self.oid(path, "immune"), eps2, P, k1.eps, self.prog))
        return self._with_cmd(node, path,
                              Conclusion(k1.pre, cmd, k2.post, k1.eps + eps2))

    def rule_frame(self, node: DNode, path: str) -> Conclusion | None:
        if node.R is None:
            self.bad(path, "shape", "frame needs R")
            return None
        R = node.R
        self.validate_expr(R, path)
        k1 = self.child(node, path, 0)
        if k1 is None:
            return None
        if mod_vars(k1.cmd) & free_vars(R):
            self.bad(path, "frame-vars-disjoint",
                     "command modifies free variables of the framed assertion")
            return None
        try:
            eta = reff(R) if call_free(R) else read_effects(R, self.prog)
        except Exception as err:
            self.bad(path, "read-effects-recomputed", str(err))
            return None
        self.obligations.append(separates_ob(
            self.oid(path, "separates"), Binary("&&", k1.pre, R), k1.eps, eta,
            self.prog))
        return self._with_cmd(node, path, Conclusion(
            Binary("&&", k1.pre, R), k1.cmd, Binary("&&", k1.post, R), k1.eps))

    def rule_conseq(self, node: DNode, path: str) -> Conclusion | None:
        if node.P is None or node.Q is None or node.eps is None:
            self.bad(path, "shape", "conseq needs P, Q and eps")
            return None
        self.validate_expr(node.P, path)
        self.validate_expr(node.Q, path)
        k1 = self.child(node, path, 0)
        if k1 is None:
            return None
        self.obligations.append(implies_ob(
            self.oid(path, "implies-pre"), node.P, k1.pre, self.prog))
        self.obligations.append(implies_ob(
            self.oid(path, "implies-post"), k1.post, node.Q, self.prog))
        self.obligations.append(subeffect_ob(
            self.oid(path, "subeffect"), node.P, k1.eps, node.eps, self.prog))
        return self._with_cmd(node, path,
                              Conclusion(node.P, k1.cmd, node.Q, node.eps))

    def rule_call(self, node: DNode, path: str) -> Conclusion | None:
        if not isinstance(node.cmd, CallCmd) or node.P is None:
            self.bad(path, "shape", "call needs cmd `x := y.m@N(z...)` and P")
            return None
        self.validate_expr(node.P, path)
        c = node.cmd
        if not self.prog.has_m(c.at, c.method):
            self.bad(path, "member-declared", f"unknown method {c.at}.{c.method}")
            return None
        decl = self.prog.method(c.at, c.method)
        if len(c.args) != len(decl.params):
            self.bad(path, "arity",
                     f"{c.at}.{c.method} takes {len(decl.params)} arguments")
            return None
        if c.x == c.recv or c.x in c.args:
            self.bad(path, "target-distinct",
                     "call target must differ from receiver and arguments")
            return None
        call_sub: dict[str, Expr] = {"this": Var(c.recv)}
        call_sub.update({p: Var(z) for p, z in zip(decl.params, c.args)})
        pre_req = Binary("&&", TypeTest(Var(c.recv), c.at),
                         subst_vars(decl.pre, call_sub))
        self.obligations.append(implies_ob(
            self.oid(path, "implies-pre"), node.P, pre_req, self.prog))
        if self.total:
            if not decl.total:
                self.bad(path, "totality",
                         f"{c.at}.{c.method} is not total (decreases *)")
                return None
            if self.head is None:
                self.bad(path, "totality", "total derivation lacks an entry head")
                return None
            self.obligations.append(measure_decrease_ob(
                self.oid(path, "measure"), node.P, EntryHead(c.at, c.method),
                decl.measure, c.recv, c.args, decl.params, self.head, self.prog))
        post_sub = dict(call_sub)
        post_sub["ret"] = Var(c.x)
        post = subst_vars(decl.post, post_sub)
        eps = region_to_effects(subst_vars(decl.wrt, call_sub), self.prog)
        return Conclusion(node.P, c, post, eps)

    def rule_cast(self, node: DNode, path: str) -> Conclusion | None:
        if self.total:
            self.bad(path, "partial-context",
                     "cast may appear only in partial-correctness derivations")
            return None
        if node.head is None:
            self.bad(path, "shape", "cast needs meta.entryHead")
            return None
        measure = self.prog.member_measure(node.head.owner, node.head.member)
        if measure is None:
            self.bad(path, "measure-conjunct",
                     f"{node.head} has no measure (declared decreases *)")
            return None
        inner = _Checker(self.prog, node.head, True, self.prefix)
        k1 = inner.check(node.children[0], f"{path}.0" if path else "0")
        self.obligations.extend(inner.obligations)
        self.diagnostics.extend(inner.diagnostics)
        self.conclusions.update(inner.conclusions)
        if k1 is None:
            return None
        split = _split_and(k1.pre)
        if split is None or split[1] != eq(Var(MSE_VAR), measure):
            self.bad(path, "measure-conjunct",
                     f"total precondition must end with `mse == "
                     f"{print_expr(measure)}`")
            return None
        P = split[0]
        leaked = ({MSE_VAR} & (free_vars(P) | free_vars(k1.post)
                               | effect_fv(k1.eps)))
        if leaked:
            self.bad(path, "mse-not-free",
                     "mse occurs in the cast precondition, postcondition or "
                     "effects")
            return None
        return self._with_cmd(node, path, Conclusion(P, k1.cmd, k1.post, k1.eps))

    def _with_cmd(self, node: DNode, path: str,
                  concl: Conclusion) -> Conclusion | None:
        if node.cmd is not None and node.cmd != concl.cmd:
            self.bad(path, "command",
                     f"derivation command {print_cmd(concl.cmd)} differs from "
                     f"stated {print_cmd(node.cmd)}")
            return None
        return concl


_CHILD_COUNT = {"assign": 0, "write": 0, "skip": 0, "alloc": 0,
                "if": 2, "seq": 2, "frame": 1, "conseq": 1, "call": 0,
                "cast": 1}


def _split_and(e: Expr):
    if isinstance(e, Binary) and e.op == "&&":
        return e.lhs, e.rhs
    return None


def check_derivation(node: DNode, prog: Program,
                     head: EntryHead | None = None, total: bool = True,
                     prefix: str = "deriv") -> CheckOutcome:
    """Check one derivation tree; decidable premises in-process, the rest
    returned as obligations."""
    checker = _Checker(prog, head, total, prefix)
    conclusion = checker.check(node, "")
    if checker.diagnostics:
        conclusion = None
    return CheckOutcome(conclusion, checker.obligations, checker.diagnostics,
                        checker.conclusions)


def required_total_conclusion(prog: Program, cls: str, m: str) -> Conclusion:
    decl = prog.method(cls, m)
    pre = Binary("&&", Binary("&&", decl.pre, TypeTest(Var("this"), cls)),
                 eq(Var(MSE_VAR), decl.measure))
    return Conclusion(pre, decl.body, decl.post,
                      region_to_effects(decl.wrt, prog))


def required_partial_conclusion(prog: Program, cls: str, m: str) -> Conclusion:
    decl = prog.method(cls, m)
    pre = Binary("&&", decl.pre, TypeTest(Var("this"), cls))
    return Conclusion(pre, decl.body, decl.post,
                      region_to_effects(decl.wrt, prog))


def _explain_mismatch(found: Conclusion, want: Conclusion) -> str:
    parts = []
    if found.pre != want.pre:
        parts.append(f"pre: found {print_expr(found.pre)}, "
                     f"expected {print_expr(want.pre)}")
    if found.cmd != want.cmd:
        parts.append("command differs from the method body")
    if found.post != want.post:
        parts.append(f"post: found {print_expr(found.post)}, "
                     f"expected {print_expr(want.post)}")
    if found.eps != want.eps:
        parts.append("write effects differ from the declared modifies region")
    return "; ".join(parts)


def check_method_specs(prog: Program,
                       certfile: CertificateFile) -> CheckedCertificates:
    """Check each method's certificates against the required judgment shapes:
    a total certificate for every total method, a partial one for all."""
    out = CheckedCertificates(prog)
    for cname, cdecl in prog.classes.items():
        for m in cdecl.methods:
            total_needed = prog.total(cname, m)
            for judgment in (("total", "partial") if total_needed
                             else ("partial",)):
                cert = certfile.find(cname, m, judgment)
                if cert is None:
                    out.diagnostics.append(Diagnostic(
                        "missing-certificate",
                        f"no {judgment} certificate for {cname}.{m}"))
                    continue
                prefix = f"{cname}.{m}/{judgment}"
                head = EntryHead(cname, m) if judgment == "total" else None
                outc = check_derivation(cert.derivation, prog, head=head,
                                        total=judgment == "total",
                                        prefix=prefix)
                out.obligations.extend(outc.obligations)
                out.diagnostics.extend(outc.diagnostics)
                if outc.conclusion is None:
                    continue
                want = (required_total_conclusion(prog, cname, m)
                        if judgment == "total"
                        else required_partial_conclusion(prog, cname, m))
                if outc.conclusion != want:
                    out.diagnostics.append(Diagnostic(
                        "conclusion-shape",
                        f"{prefix}: {_explain_mismatch(outc.conclusion, want)}"))
                    continue
                checked = CheckedDerivation(cname, m, judgment, head,
                                            cert.derivation, outc.conclusion,
                                            outc.conclusions, out)
                (out.total if judgment == "total" else out.partial)[
                    (cname, m)] = checked
    return out
