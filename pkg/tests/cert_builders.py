"""Builders for the shipped corpus certificates.

The derivations are constructed as node trees here and frozen into
corpus/*.xrlproof; test_checker asserts the shipped files stay in sync.
"""

from __future__ import annotations

from xrl.checker import required_total_conclusion
from xrl.derivation import (Certificate, CertificateFile, DNode,
                            dump_certificates)
from xrl.effects import Effect, region_to_effects
from xrl.entries import EntryHead
from xrl.parser import parse_cmd_text, parse_expr_text
from xrl.syntax import Binary, Program, Unary, SING, Var, eq


def _and(a, b):
    return Binary("&&", a, b)


def assign(prog: Program, cmd: str, P) -> DNode:
    return DNode("assign", cmd=parse_cmd_text(cmd, prog), P=P)


def write(prog: Program, cmd: str) -> DNode:
    return DNode("write", cmd=parse_cmd_text(cmd, prog))


def call(prog: Program, cmd: str, P) -> DNode:
    return DNode("call", cmd=parse_cmd_text(cmd, prog), P=P)


def seq(d1: DNode, d2: DNode) -> DNode:
    return DNode("seq", children=(d1, d2))


def frame(d: DNode, R) -> DNode:
    return DNode("frame", R=R, children=(d,))


def conseq(d: DNode, P, Q, eps) -> DNode:
    return DNode("conseq", P=P, Q=Q, eps=tuple(eps), children=(d,))


def cast(owner: str, member: str, d: DNode) -> DNode:
    return DNode("cast", head=EntryHead(owner, member), children=(d,))


def sing(name: str):
    return Unary(SING, Var(name))


def crust_rema(prog: Program) -> DNode:
    want = required_total_conclusion(prog, "Crust", "remA")
    body = assign(prog, "ret := this", want.pre)
    return conseq(body, want.pre, want.post, want.eps)


def _topping_prefix(prog: Program, cls: str):
    """Shared front of the Anchovy/Cheese bodies: bind n, f1, p1 and call."""
    pe = lambda t: parse_expr_text(t, prog)
    want = required_total_conclusion(prog, cls, "remA")
    P0 = want.pre
    d1 = assign(prog, "n := this.nt", P0)
    P1 = _and(eq(Var("n"), pe("this.nt")), P0)
    d2 = assign(prog, "f1 := n.fp", P1)
    P2 = _and(eq(Var("f1"), pe("n.fp")), P1)
    d3 = assign(prog, "p1 := n.price@Pizza()", P2)
    P3 = _and(eq(Var("p1"), pe("n.price@Pizza()")), P2)
    Pc = pe("n is Pizza && n.valid@Pizza() && f1 == n.fp && "
            "p1 == n.price@Pizza() && n.fp < mse")
    call_node = call(prog, "r := n.remA@Pizza(f1, p1)", Pc)
    post_sub = pe("r.valid@Pizza() && r.fp <= f1 && r.price@Pizza() <= p1")
    e4 = region_to_effects(pe("n.fp"), prog)
    return want, (d1, d2, d3), (P0, P1, P2, P3), Pc, call_node, post_sub, e4


def anchovy_rema(prog: Program) -> DNode:
    pe = lambda t: parse_expr_text(t, prog)
    want, (d1, d2, d3), (P0, P1, P2, P3), Pc, call_node, post_sub, e4 = \
        _topping_prefix(prog, "Anchovy")
    R = pe("f1 < f && p == p1 + 1")
    framed = frame(call_node, R)
    Q4 = _and(post_sub, R)
    c4 = conseq(framed, P3, Q4, e4)
    d5 = assign(prog, "ret := r", Q4)
    P5 = _and(eq(Var("ret"), Var("r")), Q4)
    n45 = seq(c4, d5)                      # [P3] c4;c5 [P5] [e4]
    n4s = conseq(n45, P3, P5, want.eps)    # shrink n.fp effects to this.fp
    n3 = seq(d3, n4s)
    n2 = seq(d2, n3)
    n1 = seq(d1, n2)
    return conseq(n1, P0, want.post, want.eps)


def cheese_rema(prog: Program) -> DNode:
    pe = lambda t: parse_expr_text(t, prog)
    want, (d1, d2, d3), (P0, P1, P2, P3), Pc, call_node, post_sub, e4 = \
        _topping_prefix(prog, "Cheese")
    R4 = pe("this is Cheese && this !in f1 && this in f && f1 < f && "
            "p == p1 + 1")
    framed4 = frame(call_node, R4)
    Q4 = _and(post_sub, R4)
    c4 = conseq(framed4, P3, Q4, e4)

    w5 = write(prog, "this.nt := r")
    f5 = frame(w5, Q4)
    nt_eq_r = eq(pe("this.nt"), Var("r"))
    Q5 = _and(nt_eq_r, Q4)
    eps5 = (Effect(sing("this"), "nt"),)
    c5 = conseq(f5, Q4, Q5, eps5)

    d6 = assign(prog, "f2 := r.fp", Q5)
    P6 = _and(eq(Var("f2"), pe("r.fp")), Q5)

    w7 = write(prog, "this.fp := f2 + {this}")
    f7 = frame(w7, P6)
    fp_eq = eq(pe("this.fp"), pe("f2 + {this}"))
    Q7 = _and(fp_eq, P6)
    eps7 = (Effect(sing("this"), "fp"),)
    c7 = conseq(f7, P6, Q7, eps7)

    d8 = assign(prog, "ret := this", Q7)
    P8 = _and(eq(Var("ret"), Var("this")), Q7)

    n78 = seq(c7, d8)          # [P6] c7;c8 [P8] [eps7]
    n678 = seq(d6, n78)        # [Q5] ...   [eps7]
    n5678 = seq(c5, n678)      # [Q4] ...   [eps5 + eps7]
    n45678 = seq(c4, n5678)    # [P3] ...   [e4 + eps5 + eps7]
    n4s = conseq(n45678, P3, P8, want.eps)
    n3 = seq(d3, n4s)
    n2 = seq(d2, n3)
    n1 = seq(d1, n2)
    return conseq(n1, P0, want.post, want.eps)


def pizza_certificates(prog: Program) -> CertificateFile:
    builders = {"Crust": crust_rema, "Anchovy": anchovy_rema,
                "Cheese": cheese_rema}
    cf = CertificateFile(dialect="xrl")
    for cls, build in builders.items():
        total = build(prog)
        cf.certificates.append(Certificate(cls, "remA", "total", total))
        cf.certificates.append(Certificate(
            cls, "remA", "partial", cast(cls, "remA", total)))
    return cf


def loop_certificates(prog: Program) -> CertificateFile:
    pe = lambda t: parse_expr_text(t, prog)
    P = pe("true && this is Omega")
    call_node = call(prog, "r := this.spin@Worker()", P)
    d2 = assign(prog, "ret := r", pe("true"))
    body = seq(call_node, d2)
    root = conseq(body, P, pe("true"), ())
    cf = CertificateFile(dialect="xrl")
    cf.certificates.append(Certificate("Omega", "spin", "partial", root))
    return cf


def dump_pizza(prog: Program) -> str:
    return dump_certificates(pizza_certificates(prog))


def dump_loop(prog: Program) -> str:
    return dump_certificates(loop_certificates(prog))
