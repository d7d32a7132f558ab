"""Canonical pretty-printer. parse(print(ast)) is the identity on ASTs."""

from __future__ import annotations

from .syntax import (AllocCmd, Assign, Binary, Call, CallCmd, ClassDecl, Cmd,
                     Expr, FieldAcc, FieldWrite, FuncDecl, IfCmd, Ite, Lit,
                     MethodDecl, NOT, OrderSpec, Program, SeqCmd, SING, Skip,
                     TraitDecl, TypeTest, Unary, Var)
from .values import NULL, Ptr, VBool, VNat, VRegion

_PREC = {"||": 1, "&&": 2, "==": 3, "<": 3, "<=": 3, "in": 3, "+": 4, "-": 4, "*": 5}
_UNARY_PREC = 6
_POSTFIX_PREC = 7


def _lit(v) -> str:
    if isinstance(v, VNat):
        return str(v.n)
    if isinstance(v, VBool):
        return "true" if v.b else "false"
    if isinstance(v, Ptr):
        return "null" if v == NULL else f"<ptr {v.addr} {v.cls}>"
    if isinstance(v, VRegion):
        if not v.ptrs:
            return "{}"
        inner = ", ".join(f"<ptr {p.addr} {p.cls}>"
                          for p in sorted(v.ptrs, key=lambda p: (p.addr, p.cls)))
        return f"<region {inner}>"
    raise TypeError(f"not a value: {v!r}")


def print_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Lit):
        return _lit(e.value)
    if isinstance(e, FieldAcc):
        return f"{print_expr(e.obj, _POSTFIX_PREC)}.{e.fname}"
    if isinstance(e, Call):
        args = ", ".join(print_expr(a) for a in e.args)
        return f"{print_expr(e.recv, _POSTFIX_PREC)}.{e.func}@{e.at}({args})"
    if isinstance(e, Ite):
        return (f"(if {print_expr(e.guard)} then {print_expr(e.then)} "
                f"else {print_expr(e.els)})")
    if isinstance(e, Unary):
        if e.op == SING:
            return "{" + print_expr(e.e) + "}"
        body = f"{NOT}{print_expr(e.e, _UNARY_PREC)}"
        return f"({body})" if prec > _UNARY_PREC else body
    if isinstance(e, TypeTest):
        body = f"{print_expr(e.e, _PREC['in'] + 1)} is {e.tname}"
        return f"({body})" if prec >= _PREC["in"] else body
    if isinstance(e, Binary):
        p = _PREC[e.op]
        # comparisons are non-associative; &&/||/arithmetic associate left
        lp, rp = (p + 1, p + 1) if p == 3 else (p, p + 1)
        body = f"{print_expr(e.lhs, lp)} {e.op} {print_expr(e.rhs, rp)}"
        return f"({body})" if prec > p or (p == 3 and prec == 3) else body
    raise TypeError(f"not an expression: {e!r}")


def print_cmd(c: Cmd) -> str:
    """Single-line canonical command form."""
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Assign):
        return f"{c.x} := {print_expr(c.e)}"
    if isinstance(c, FieldWrite):
        return f"{c.x}.{c.fname} := {print_expr(c.e)}"
    if isinstance(c, AllocCmd):
        return f"{c.x} := {c.cls}"
    if isinstance(c, IfCmd):
        return (f"if {print_expr(c.guard)} {{ {print_cmd(c.then)} }} "
                f"else {{ {print_cmd(c.els)} }}")
    if isinstance(c, SeqCmd):
        return f"{print_cmd(c.c1)}; {print_cmd(c.c2)}"
    if isinstance(c, CallCmd):
        return f"{c.x} := {c.recv}.{c.method}@{c.at}({', '.join(c.args)})"
    raise TypeError(f"not a command: {c!r}")


def _clauses(indent: str, lines: list[str]) -> str:
    return "".join(f"{indent}{ln}\n" for ln in lines)


def _func_text(d: FuncDecl, indent: str) -> str:
    out = f"{indent}function {d.name}({d.param}: int): (ret: int)\n"
    inner = indent + "  "
    out += _clauses(inner, [
        f"kind {d.kind}",
        f"requires {print_expr(d.dfc)}",
        f"reads {print_expr(d.reads)}",
        f"decreases {print_expr(d.measure)}",
        f"ensures {print_expr(d.post)}",
    ])
    if d.body is not None:
        out += f"{indent}{{ {print_expr(d.body)} }}\n"
    return out


def _method_text(d: MethodDecl, indent: str) -> str:
    params = ", ".join(f"{p}: int" for p in d.params)
    out = f"{indent}method {d.name}({params}) returns (ret: int)\n"
    inner = indent + "  "
    measure = "*" if d.measure is None else print_expr(d.measure)
    out += _clauses(inner, [
        f"requires {print_expr(d.pre)}",
        f"modifies {print_expr(d.wrt)}",
        f"decreases {measure}",
        f"ensures {print_expr(d.post)}",
    ])
    if d.body is not None:
        out += f"{indent}{{\n{_body_text(d.body, inner)}{indent}}}\n"
    return out


def _body_text(c: Cmd, indent: str) -> str:
    stmts = []
    while isinstance(c, SeqCmd):
        stmts.append(c.c1)
        c = c.c2
    stmts.append(c)
    return "".join(f"{indent}{print_cmd(s)};\n" for s in stmts)


def print_program(p: Program) -> str:
    """Canonical program form; parsing it back yields the same Program.

    All inherited clauses are printed explicitly, so the output is
    self-contained. Field type annotations are preserved.
    """
    out: list[str] = []
    out.append(f"order functions {p.func_order}\n")
    for member, spec in sorted(p.func_order_overrides.items()):
        out.append(f"order functions {member} {spec}\n")
    out.append(f"order methods {p.method_order}\n")
    for member, spec in sorted(p.method_order_overrides.items()):
        out.append(f"order methods {member} {spec}\n")
    for t in p.traits.values():
        out.append(f"\ntrait {t.name} {{\n")
        for fname, ftype in t.fields.items():
            out.append(f"  var {fname}: {ftype}\n")
        for d in t.funcs.values():
            out.append(_func_text(d, "  "))
        for d in t.methods.values():
            out.append(_method_text(d, "  "))
        out.append("}\n")
    for c in p.classes.values():
        out.append(f"\nclass {c.name} extends {c.extends} {{\n")
        for fname, ftype in c.fields.items():
            out.append(f"  var {fname}: {ftype}\n")
        for d in c.funcs.values():
            out.append(_func_text(d, "  "))
        for d in c.methods.values():
            out.append(_method_text(d, "  "))
        out.append("}\n")
    return "".join(out)
