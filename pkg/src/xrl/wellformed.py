"""Program well-formedness: name resolution, arities, call-freeness, kinds.

Every violated constraint yields one diagnostic; nothing short-circuits, so
permuting declarations permutes but never changes the diagnostic multiset.
"""

from __future__ import annotations

from .diagnostics import Diagnostic
from .syntax import (AllocCmd, Assign, Call, CallCmd, Cmd, Expr, FieldAcc,
                     FieldWrite, IfCmd, Ite, MSE_VAR, Program, SeqCmd, Skip,
                     TypeTest, call_free, free_vars, subexprs)

RESERVED_OWNERS = ("Object", "Null")
RESERVED_TARGETS = ("this", "alloc", MSE_VAR)


def expr_constraints(e: Expr, prog: Program, where: str,
                      diags: list[Diagnostic]) -> None:
    """Constraints every expression in the program obeys, wherever it sits."""
    for sub in subexprs(e):
        if isinstance(sub, FieldAcc):
            if sub.fname not in prog.field_names:
                diags.append(Diagnostic("unresolved-field",
                                        f"{where}: unknown field {sub.fname}"))
        elif isinstance(sub, TypeTest):
            if not (prog.is_class(sub.tname) or prog.is_trait(sub.tname)):
                diags.append(Diagnostic("unresolved-type",
                                        f"{where}: unknown type {sub.tname} in is-test"))
        elif isinstance(sub, Ite):
            if not call_free(sub.guard):
                diags.append(Diagnostic("guard-not-call-free",
                                        f"{where}: conditional guard must be call-free"))
        elif isinstance(sub, Call):
            if not prog.has_f(sub.at, sub.func):
                diags.append(Diagnostic("unresolved-function",
                                        f"{where}: unknown function {sub.at}.{sub.func}"))
            if not call_free(sub.recv) or any(not call_free(a) for a in sub.args):
                diags.append(Diagnostic("call-args-not-call-free",
                                        f"{where}: call receiver and argument of "
                                        f"{sub.at}.{sub.func} must be call-free"))
            if len(sub.args) != 1:
                diags.append(Diagnostic("function-arity",
                                        f"{where}: function {sub.at}.{sub.func} "
                                        "takes exactly one argument"))


def _region_clause(e: Expr, prog: Program, where: str,
                   diags: list[Diagnostic]) -> None:
    expr_constraints(e, prog, where, diags)
    if not call_free(e):
        diags.append(Diagnostic("region-not-call-free",
                                f"{where}: region expression must be call-free"))


def _measure_clause(e: Expr, prog: Program, where: str,
                    diags: list[Diagnostic]) -> None:
    expr_constraints(e, prog, where, diags)
    if not call_free(e):
        diags.append(Diagnostic("measure-not-call-free",
                                f"{where}: measure not call-free"))
    if MSE_VAR in free_vars(e):
        diags.append(Diagnostic("measure-uses-mse",
                                f"{where}: measure may not mention {MSE_VAR}"))


def _cmd_constraints(c: Cmd, prog: Program, where: str, params: tuple[str, ...],
                     diags: list[Diagnostic]) -> None:
    if isinstance(c, Skip):
        return
    if isinstance(c, (Assign, AllocCmd, CallCmd)):
        if c.x in RESERVED_TARGETS:
            diags.append(Diagnostic("reserved-assignment",
                                    f"{where}: cannot assign to {c.x}"))
        if c.x in params:
            diags.append(Diagnostic("param-assignment",
                                    f"{where}: parameters are immutable, "
                                    f"cannot assign {c.x}"))
    if isinstance(c, Assign):
        expr_constraints(c.e, prog, where, diags)
    elif isinstance(c, FieldWrite):
        expr_constraints(c.e, prog, where, diags)
        if c.fname not in prog.field_names:
            diags.append(Diagnostic("unresolved-field",
                                    f"{where}: unknown field {c.fname}"))
    elif isinstance(c, AllocCmd):
        if not prog.is_class(c.cls):
            diags.append(Diagnostic("unresolved-class",
                                    f"{where}: unknown class {c.cls}"))
    elif isinstance(c, IfCmd):
        expr_constraints(c.guard, prog, where, diags)
        _cmd_constraints(c.then, prog, where, params, diags)
        _cmd_constraints(c.els, prog, where, params, diags)
    elif isinstance(c, SeqCmd):
        _cmd_constraints(c.c1, prog, where, params, diags)
        _cmd_constraints(c.c2, prog, where, params, diags)
    elif isinstance(c, CallCmd):
        if not prog.has_m(c.at, c.method):
            diags.append(Diagnostic("unresolved-method",
                                    f"{where}: unknown method {c.at}.{c.method}"))
        else:
            want = len(prog.method(c.at, c.method).params)
            if len(c.args) != want:
                diags.append(Diagnostic("method-arity",
                                        f"{where}: {c.at}.{c.method} takes {want} "
                                        f"arguments, got {len(c.args)}"))


def _dfc_kind(d, prog: Program, where: str, diags: list[Diagnostic]) -> None:
    if d.kind == 1:
        if not call_free(d.dfc):
            diags.append(Diagnostic("kind1-dfc-not-call-free",
                                    f"{where}: kind-1 function needs a call-free "
                                    "well-definedness precondition"))
    else:
        for sub in subexprs(d.dfc):
            if isinstance(sub, Call) and prog.has_f(sub.at, sub.func):
                if prog.func(sub.at, sub.func).kind != 1:
                    diags.append(Diagnostic(
                        "kind2-dfc-calls-kind2",
                        f"{where}: kind-2 well-definedness precondition may "
                        f"call only kind-1 functions, calls {sub.at}.{sub.func}"))


def _match(a: Expr, b: Expr) -> bool:
    return a == b


def check_wellformed(prog: Program) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    for name in (*prog.traits, *prog.classes):
        if name in RESERVED_OWNERS:
            diags.append(Diagnostic("reserved-name", f"{name} is reserved"))

    for t in prog.traits.values():
        for d in t.funcs.values():
            where = f"{t.name}.{d.name}"
            expr_constraints(d.dfc, prog, where, diags)
            expr_constraints(d.post, prog, where, diags)
            _region_clause(d.reads, prog, where, diags)
            _measure_clause(d.measure, prog, where, diags)
            _dfc_kind(d, prog, where, diags)
        for d in t.methods.values():
            where = f"{t.name}.{d.name}"
            expr_constraints(d.pre, prog, where, diags)
            expr_constraints(d.post, prog, where, diags)
            _region_clause(d.wrt, prog, where, diags)
            if d.measure is not None:
                _measure_clause(d.measure, prog, where, diags)

    for c in prog.classes.values():
        trait = prog.traits.get(c.extends)
        if trait is None:
            diags.append(Diagnostic("unresolved-trait",
                                    f"class {c.name} extends unknown trait {c.extends}"))
        else:
            for g, sig in trait.funcs.items():
                if g not in c.funcs:
                    diags.append(Diagnostic("missing-member",
                                            f"class {c.name} does not implement "
                                            f"function {g}"))
            for m in trait.methods:
                if m not in c.methods:
                    diags.append(Diagnostic("missing-member",
                                            f"class {c.name} does not implement "
                                            f"method {m}"))
        for d in c.funcs.values():
            where = f"{c.name}.{d.name}"
            expr_constraints(d.dfc, prog, where, diags)
            expr_constraints(d.post, prog, where, diags)
            _region_clause(d.reads, prog, where, diags)
            _measure_clause(d.measure, prog, where, diags)
            _dfc_kind(d, prog, where, diags)
            if d.body is not None:
                expr_constraints(d.body, prog, where, diags)
            sig = trait.funcs.get(d.name) if trait else None
            if sig is not None:
                if d.kind != sig.kind:
                    diags.append(Diagnostic("kind-mismatch",
                                            f"{where}: kind differs from trait"))
                if d.param != sig.param:
                    diags.append(Diagnostic("param-mismatch",
                                            f"{where}: parameter name differs from trait"))
                if not _match(d.reads, sig.reads):
                    diags.append(Diagnostic("spec-mismatch",
                                            f"{where}: reads clause differs from trait"))
        for d in c.methods.values():
            where = f"{c.name}.{d.name}"
            expr_constraints(d.pre, prog, where, diags)
            expr_constraints(d.post, prog, where, diags)
            _region_clause(d.wrt, prog, where, diags)
            if d.measure is not None:
                _measure_clause(d.measure, prog, where, diags)
            if d.body is not None:
                _cmd_constraints(d.body, prog, where, d.params, diags)
            sig = trait.methods.get(d.name) if trait else None
            if sig is not None:
                if d.params != sig.params:
                    diags.append(Diagnostic("param-mismatch",
                                            f"{where}: parameter list differs from trait"))
                for clause, mine, theirs in (("requires", d.pre, sig.pre),
                                             ("ensures", d.post, sig.post),
                                             ("modifies", d.wrt, sig.wrt)):
                    if not _match(mine, theirs):
                        diags.append(Diagnostic(
                            "spec-mismatch",
                            f"{where}: {clause} clause differs from trait "
                            "(behavioral subtyping is by inherited text)"))
    return diags
