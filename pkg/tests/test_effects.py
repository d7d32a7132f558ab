import random

import pytest

from xrl.callfree import fp_alpha
from xrl.effects import (Effect, ReffDefect, disjoint_from_region, immune,
                         locs, mod_vars, read_effects, reff,
                         region_to_effects, separates, subeffect)
from xrl.gen import build_chain
from xrl.parser import parse_cmd_text, parse_expr_text
from xrl.state import Loc, State, update
from xrl.syntax import SING, Unary, Var, call_free
from xrl.values import Ptr, VNat, VRegion

from test_callfree import _random_state
from test_parser import _random_expr


def test_locs_singleton_region(pizza):
    a1 = Ptr(1, "Anchovy")
    s = State({"x": a1}, {}, {a1})
    eps = (Effect(parse_expr_text("{x}"), "fp"),)
    assert locs(eps, s, pizza) == {Loc(a1, "fp")}


def test_locs_region_times_fields(pizza):
    s = build_chain(["Crust", "Anchovy"])
    c0, a1 = Ptr(1, "Crust"), Ptr(2, "Anchovy")
    eps = (Effect(parse_expr_text("this.fp"), "fp"),
           Effect(parse_expr_text("this.fp"), "nt"))
    assert locs(eps, s, pizza) == {Loc(a1, "fp"), Loc(c0, "fp"),
                                   Loc(a1, "nt"), Loc(c0, "nt")}


def test_locs_empty(pizza):
    assert locs((), State(), pizza) == frozenset()


def test_reff_examples(pizza):
    assert reff(parse_expr_text("this.fp")) == \
        (Effect(Unary(SING, Var("this")), "fp"),)
    assert reff(parse_expr_text("x")) == ()
    e = parse_expr_text("this.nt.fp")
    assert reff(e) == (Effect(Unary(SING, Var("this")), "nt"),
                       Effect(Unary(SING, parse_expr_text("this.nt")), "fp"))


def test_reff_defect_on_calls(pizza):
    with pytest.raises(ReffDefect):
        reff(parse_expr_text("this.valid@Pizza()", pizza))


def test_reff_soundness_random(pizza):
    rng = random.Random(99)
    checked = 0
    for _ in range(400):
        e = _random_expr(rng, rng.randrange(1, 5))
        if not call_free(e):
            continue
        s = _random_state(rng, pizza)
        assert fp_alpha(e, s, pizza) <= locs(reff(e), s, pizza)
        checked += 1
    assert checked > 150


def test_read_effects_charges_reads_clause(pizza):
    e = parse_expr_text("r.valid@Pizza()", pizza)
    eta = read_effects(e, pizza)
    regions = [eff.region for eff in eta]
    want = parse_expr_text("{r} + r.fp")
    assert regions == [want, want]
    assert [eff.fname for eff in eta] == ["fp", "nt"]


def test_region_to_effects(pizza):
    eps = region_to_effects(parse_expr_text("this.fp"), pizza)
    assert eps == (Effect(parse_expr_text("this.fp"), "fp"),
                   Effect(parse_expr_text("this.fp"), "nt"))
    empty = region_to_effects(parse_expr_text("{}"), pizza)
    assert locs(empty, build_chain(["Crust"]), pizza) == frozenset()


def test_region_to_effects_no_fields():
    from xrl.parser import parse_program
    res = parse_program("trait T { }\nclass C extends T { }")
    prog = res.program
    assert region_to_effects(parse_expr_text("{}"), prog) == ()


def test_subeffect_chain_example(pizza):
    # with n bound to this.nt, the callee's effects shrink into the caller's
    s = build_chain(["Crust", "Anchovy"])
    s = update(s, "n", Ptr(1, "Crust"))
    sub = region_to_effects(parse_expr_text("n.fp"), pizza)
    sup = region_to_effects(parse_expr_text("this.fp"), pizza)
    assert subeffect(sub, sup, s, pizza)
    assert not subeffect(sup, sub, s, pizza)


def test_separates_examples(pizza):
    s = build_chain(["Crust", "Anchovy"])
    eps = region_to_effects(parse_expr_text("this.fp"), pizza)
    assert separates((), eps, s, pizza)
    assert not separates(eps, eps, s, pizza)


def test_separates_symmetric(pizza):
    rng = random.Random(4)
    for _ in range(100):
        s = _random_state(rng, pizza)
        e1 = (Effect(parse_expr_text("this.fp"), "fp"),)
        e2 = (Effect(parse_expr_text("{y}"), rng.choice(["fp", "nt"])),)
        assert separates(e1, e2, s, pizza) == separates(e2, e1, s, pizza)


def test_disjoint_self_overlap(pizza):
    s = build_chain(["Crust", "Anchovy"])
    eps = (Effect(parse_expr_text("this.fp"), "fp"),)
    assert not disjoint_from_region(eps, parse_expr_text("this.fp"), s, pizza)
    assert disjoint_from_region((), parse_expr_text("this.fp"), s, pizza)


def test_immune_examples(pizza):
    s = build_chain(["Crust", "Anchovy"])
    stack_only = (Effect(parse_expr_text("{x}"), "fp"),)
    heapy = (Effect(parse_expr_text("this.fp"), "fp"),)
    assert immune(stack_only, heapy, s, pizza)      # {x} reads no heap
    assert not immune(heapy, heapy, s, pizza)       # this.fp reads (this,fp)
    assert immune(heapy, (), s, pizza)


def test_subeffect_pointwise_refl_trans(pizza):
    rng = random.Random(12)
    for _ in range(60):
        s = _random_state(rng, pizza)
        a = (Effect(parse_expr_text("{this}"), "fp"),)
        b = a + (Effect(parse_expr_text("this.fp"), "fp"),)
        c = b + (Effect(parse_expr_text("this.fp"), "nt"),)
        assert subeffect(a, a, s, pizza)
        if subeffect(a, b, s, pizza) and subeffect(b, c, s, pizza):
            assert subeffect(a, c, s, pizza)


def test_locs_monotone(pizza):
    rng = random.Random(13)
    for _ in range(60):
        s = _random_state(rng, pizza)
        e1 = (Effect(parse_expr_text("this.fp"), "fp"),)
        e2 = e1 + (Effect(parse_expr_text("{y}"), "nt"),)
        assert locs(e1, s, pizza) <= locs(e2, s, pizza)


def test_mod_vars(pizza):
    assert mod_vars(parse_cmd_text("x := 1", pizza)) == {"x"}
    c = parse_cmd_text("if b { x := 1 } else { y := 2 }", pizza)
    assert mod_vars(c) == {"x", "y"}
    assert mod_vars(parse_cmd_text("x.fp := y", pizza)) == frozenset()
    alloc_prog = _alloc_prog()
    assert mod_vars(parse_cmd_text("x := C", alloc_prog)) == {"x", "alloc"}
    call = parse_cmd_text("x := y.remA@Pizza(f, p)", pizza)
    assert mod_vars(call) == {"x", "alloc"}


def _alloc_prog():
    from xrl.parser import parse_program
    return parse_program("trait T { }\nclass C extends T { }").program
