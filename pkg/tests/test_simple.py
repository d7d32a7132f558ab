import random

from xrl.parser import parse_expr_text as pe
from xrl.runtime import MEASURE, Monitors, MonitorViolation, Ok, Timeout
from xrl.simple import (SAssign, SCall, SIf, SNode, SSeq, SSkip, SimpleProc,
                        SimpleProgram, countdown_certificate,
                        countdown_program, simple_check, simple_discharge,
                        simple_inter_p, simple_inter_t, smod_vars)
from xrl.state import State, eq_except, lookup
from xrl.syntax import Binary, TRUE_EXPR, Var, eq, neg
from xrl.values import VNat


def checked_countdown():
    prog = countdown_program()
    table = simple_check(prog, {"count": countdown_certificate()})
    assert table.ok, table.diagnostics
    return prog, table


def test_countdown_checks_and_discharges():
    _, table = checked_countdown()
    rep = simple_discharge(table.obligations)
    assert rep.ok, [o.id for o in rep.failures()]
    decreases = [o for o in rep.obligations if o.kind == "MEASURE_DECREASE"]
    assert decreases and all(o.status == "pass" for o in decreases)


def test_asn_substitution_instance():
    # [Q[e/a]] a := e [Q] with Q = (a == 3), e = 3 gives precondition 3 == 3
    prog = SimpleProgram({"p": SimpleProc("p", body=SAssign("a", pe("3")),
                                          post=pe("a == 3"))})
    node = SNode("con", P=TRUE_EXPR, Q=pe("a == 3"), children=(
        SNode("asn", cmd=SAssign("a", pe("3")), Q=pe("a == 3")),))
    table = simple_check(prog, {"p": node})
    assert table.ok, table.diagnostics
    rep = simple_discharge(table.obligations)
    assert rep.ok
    pre_ob = [o for o in rep.obligations if o.id.endswith("con-pre")][0]
    assert pre_ob.payload["concl"] == "3 == 3"


def test_cal_without_decrease_fails():
    prog = countdown_program()
    guard = pe("x == 0")
    prog.procs["count"].body = SIf(guard, SSkip(), SCall("y", "count", pe("x")))
    then = SNode("con", P=Binary("&&", TRUE_EXPR, guard), Q=TRUE_EXPR,
                 children=(SNode("skip", P=Binary("&&", TRUE_EXPR, guard)),))
    cal = SNode("cal", cmd=SCall("y", "count", pe("x")),
                P=Binary("&&", TRUE_EXPR, neg(guard)))
    els = SNode("con", P=Binary("&&", TRUE_EXPR, neg(guard)), Q=TRUE_EXPR,
                children=(cal,))
    table = simple_check(prog, {"count": SNode("if", guard=guard,
                                               children=(then, els))})
    assert table.ok
    rep = simple_discharge(table.obligations)
    fails = rep.failures()
    assert fails and all(o.kind == "MEASURE_DECREASE" for o in fails)


def test_interT_countdown_entry_trace():
    prog, table = checked_countdown()
    events = []
    out = simple_inter_t(table.total["count"], State({"x": VNat(100)}),
                         Monitors(trace=events.append))
    assert isinstance(out, Ok)
    entries = [e for e in events if e["event"] == "enter"]
    assert len(entries) == 101
    assert [e["measure"] for e in entries] == list(range(100, -1, -1))


def test_interT_asn_updates_target_only():
    prog = SimpleProgram({"p": SimpleProc("p", body=SAssign("a", pe("x + 1")))})
    node = SNode("con", P=TRUE_EXPR, Q=TRUE_EXPR, children=(
        SNode("asn", cmd=SAssign("a", pe("x + 1")), Q=TRUE_EXPR),))
    table = simple_check(prog, {"p": node})
    assert table.ok
    s = State({"x": VNat(4), "b": VNat(9)})
    out = simple_inter_t(table.total["p"], s)
    assert isinstance(out, Ok)
    assert lookup(out.state, "a") == VNat(5)
    assert eq_except(s, out.state, {"a"}, (), False)


def test_interP_cast_agrees_at_fuel_zero():
    prog, table = checked_countdown()
    s = State({"x": VNat(5)})
    total = simple_inter_t(table.total["count"], s)
    partial = simple_inter_p(table.partial["count"], 0, s)
    assert isinstance(total, Ok) and isinstance(partial, Ok)
    assert total.state == partial.state


def test_mod_frame_property():
    prog, table = checked_countdown()
    rng = random.Random(6)
    body = prog.procs["count"].body
    for _ in range(30):
        s = State({"x": VNat(rng.randrange(8)), "z": VNat(rng.randrange(8))})
        out = simple_inter_t(table.total["count"], s)
        assert isinstance(out, Ok)
        assert eq_except(s, out.state, smod_vars(body), (), False)


def test_if_modifies_subset_of_both_branches():
    body = SIf(pe("x == 0"), SAssign("a", pe("1")), SAssign("b", pe("2")))
    assert smod_vars(body) == {"a", "b"}
    assert smod_vars(body.then) <= smod_vars(body)


def test_runtime_measure_monitor_catches_stale_proxy():
    """A body that bumps x before calling defeats the static proxy; the
    entry-indexed runtime monitor still fires."""
    guard = pe("x == 0")
    body = SIf(guard, SSkip(),
               SSeq(SAssign("w", pe("x + 1")),
                    SCall("y", "count", pe("w - 1"))))
    prog = SimpleProgram({"count": SimpleProc("count", measure=Var("x"),
                                              body=body)})
    then = SNode("con", P=Binary("&&", TRUE_EXPR, guard), Q=TRUE_EXPR,
                 children=(SNode("skip", P=Binary("&&", TRUE_EXPR, guard)),))
    inner_q = Binary("&&", eq(Var("w"), pe("x + 1")),
                     Binary("&&", TRUE_EXPR, neg(guard)))
    asn = SNode("asn", cmd=SAssign("w", pe("x + 1")), Q=inner_q)
    cal = SNode("cal", cmd=SCall("y", "count", pe("w - 1")), P=inner_q)
    seqd = SNode("seq", children=(asn, SNode("con", P=inner_q, Q=TRUE_EXPR,
                                             children=(cal,))))
    els = SNode("con", P=Binary("&&", TRUE_EXPR, neg(guard)), Q=TRUE_EXPR,
                children=(seqd,))
    table = simple_check(prog, {"count": SNode("if", guard=guard,
                                               children=(then, els))})
    assert table.ok, table.diagnostics
    # the static proxy (w - 1 < x with w == x + 1) is satisfiable to fail:
    rep = simple_discharge(table.obligations)
    proxy = [o for o in rep.obligations if o.kind == "MEASURE_DECREASE"][0]
    # whether or not enumeration finds it, the interpreter must trip
    out = simple_inter_t(table.total["count"], State({"x": VNat(3)}))
    assert isinstance(out, MonitorViolation) or proxy.status == "fail"
    if isinstance(out, MonitorViolation):
        assert out.kind == MEASURE
