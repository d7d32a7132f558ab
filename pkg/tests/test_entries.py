import random

import pytest

from xrl.domain import BoundedDomain
from xrl.entries import (Entry, EntryHead, MissingMeasure, ReducedEntry,
                         TOP_HEAD, f_v, forder, m_v, morder, reduce_entry)
from xrl.gen import build_chain
from xrl.obligations import (FAIL, PASS, check_entry_obligations,
                             check_wellfoundedness, func_heads, method_heads)
from xrl.parser import parse_expr_text
from xrl.state import State, Loc, trunc_subst, update
from xrl.syntax import EMPTY_REGION_EXPR, OrderSpec
from xrl.values import EMPTY_REGION, Ptr, VNat, VRegion

from conftest import fresh_pizza


def test_forder_chain_example(pizza):
    s = build_chain(["Crust", "Anchovy"])
    c0 = Ptr(1, "Crust")
    ens = trunc_subst(s, [("this", c0)])
    a = Entry(EntryHead("Pizza", "valid"), ens)
    b = Entry(EntryHead("Anchovy", "valid"), s)
    # the measures reduce to this.nt.fp and this.fp: proper subset holds
    assert forder(a, b, pizza)
    assert not forder(b, a, pizza)


def test_forder_irreflexive(pizza):
    s = build_chain(["Crust"])
    a = Entry(EntryHead("Crust", "valid"), s)
    assert not forder(a, a, pizza)


def test_forder_empty_measures(pizza):
    s = State()  # all footprints default to the empty region
    a = Entry(EntryHead("Crust", "price"), s)
    b = Entry(EntryHead("Crust", "price"), update(s, "x", VNat(1)))
    assert not forder(a, b, pizza)


def test_morder_examples(pizza):
    s = build_chain(["Crust", "Anchovy", "Anchovy"])
    nested = trunc_subst(s, [("this", Ptr(2, "Anchovy"))])
    a = Entry(EntryHead("Pizza", "remA"), nested)
    b = Entry(EntryHead("Anchovy", "remA"), s)
    assert morder(a, b, pizza)
    assert not morder(b, b, pizza)
    empty = trunc_subst(s, [("this", VNat(0))])
    assert not morder(Entry(EntryHead("Pizza", "remA"), empty),
                      Entry(EntryHead("Pizza", "remA"), empty), pizza)


def test_missing_measure_is_defect(loop_program):
    s = State()
    with pytest.raises(MissingMeasure):
        morder(Entry(EntryHead("Worker", "spin"), s),
               Entry(EntryHead("Worker", "spin"), s), loop_program)


def test_reduction_commutes(pizza):
    rng = random.Random(8)
    for _ in range(40):
        depth = rng.randrange(1, 4)
        s = build_chain(["Crust"] + ["Anchovy"] * depth)
        a = Entry(EntryHead("Anchovy", "valid"), s)
        b = Entry(EntryHead("Pizza", "valid"),
                  trunc_subst(s, [("this", Ptr(1, "Crust"))]))
        assert forder(b, a, pizza) == f_v(pizza, reduce_entry(b, pizza),
                                          reduce_entry(a, pizza))


def test_order_depends_only_on_measure_value(pizza):
    s = build_chain(["Crust", "Anchovy"])
    a = Entry(EntryHead("Pizza", "valid"),
              trunc_subst(s, [("this", Ptr(1, "Crust"))]))
    b = Entry(EntryHead("Anchovy", "valid"), s)
    before = forder(a, b, pizza)
    # replace b's state with any state yielding the same measure value
    same_val = State({"this": Ptr(9, "Anchovy")},
                     {Loc(Ptr(9, "Anchovy"), "fp"):
                      s.heap[Loc(Ptr(2, "Anchovy"), "fp")]},
                     {Ptr(9, "Anchovy")})
    b2 = Entry(EntryHead("Anchovy", "valid"), same_val)
    assert reduce_entry(b, pizza).value == reduce_entry(b2, pizza).value
    assert forder(a, b2, pizza) == before


def test_top_head_is_maximal(pizza):
    red = ReducedEntry(EntryHead("Crust", "valid"), EMPTY_REGION)
    top = ReducedEntry(TOP_HEAD, VNat(0))
    assert f_v(pizza, red, top)
    assert not f_v(pizza, top, red)
    assert not f_v(pizza, top, top)


def test_lex_order():
    spec = OrderSpec("lex", (OrderSpec("subset"), OrderSpec("nat")))
    from xrl.entries import value_lt
    p = Ptr(1, "C")
    small, big = VRegion(frozenset()), VRegion(frozenset({p}))
    assert value_lt(spec, small, big)
    assert not value_lt(spec, big, small)
    assert value_lt(spec, VNat(1), VNat(2))       # equal region casts
    assert not value_lt(spec, VNat(2), VNat(2))


def test_entry_obligations_corpus_all_pass(pizza):
    rep = check_entry_obligations(pizza, BoundedDomain(addresses=3))
    assert rep.ok
    assert all(ob.status == PASS for ob in rep.obligations)
    ves = [ob for ob in rep.obligations if ob.kind == "VIRTUAL_ENTRY_F"]
    assert ves and all("syntactically equal" in ob.note for ob in ves)


def test_entry_obligations_measure_mutation_fails_fdf1():
    prog = fresh_pizza()
    prog.classes["Anchovy"].funcs["valid"].measure = EMPTY_REGION_EXPR
    rep = check_entry_obligations(prog, BoundedDomain(addresses=3))
    fails = {ob.id: ob for ob in rep.failures()}
    assert "entry/FDF1/Pizza.valid/Anchovy" in fails
    witness = fails["entry/FDF1/Pizza.valid/Anchovy"].witness
    assert witness is not None


def test_total_abstraction_fail():
    prog = fresh_pizza()
    prog.classes["Cheese"].methods["remA"].measure = None  # decreases *
    rep = check_entry_obligations(prog, BoundedDomain(addresses=3))
    fails = [ob for ob in rep.failures() if ob.kind == "TOTAL_ABSTRACTION"]
    assert len(fails) == 1 and "Cheese" in fails[0].id


def test_wellfoundedness_subset_passes(pizza):
    domain = BoundedDomain(addresses=4)
    status, _, note = check_wellfoundedness(
        lambda a, b: f_v(pizza, a, b), func_heads(pizza), pizza, domain)
    assert status == PASS, note


def test_wellfoundedness_true_everywhere_fails(pizza):
    domain = BoundedDomain(addresses=2)
    status, _, note = check_wellfoundedness(
        lambda a, b: True, func_heads(pizza), pizza, domain)
    assert status == FAIL
    assert "1-cycle" in note or "reflexive" in note


def test_wellfoundedness_nat_order(pizza):
    from xrl.entries import value_lt
    order = lambda a, b: value_lt(OrderSpec("nat"), a.value, b.value)
    status, _, note = check_wellfoundedness(order, method_heads(pizza),
                                            pizza, BoundedDomain(addresses=2))
    assert status == PASS, note
