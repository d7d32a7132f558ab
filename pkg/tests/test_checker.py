import copy
import json

from xrl.checker import (RULE_TABLE, check_derivation, check_method_specs,
                         required_partial_conclusion,
                         required_total_conclusion)
from xrl.derivation import (DNode, derivation_size, dump_certificates,
                            load_certificates, node_from_json, node_to_json)
from xrl.domain import BoundedDomain
from xrl.entries import EntryHead
from xrl.gen import build_chain
from xrl.obligations import (FAIL, PASS, DischargePolicy, discharge,
                             implies_ob, subeffect_ob)
from xrl.parser import parse_cmd_text, parse_expr_text
from xrl.printer import print_expr
from xrl.state import State, update
from xrl.syntax import Binary, MSE_VAR, TRUE_EXPR, Var, eq
from xrl.values import NULL, Ptr, VNat

import cert_builders
from conftest import corpus_text


def test_shipped_certificates_in_sync(pizza):
    assert corpus_text("pizza.xrlproof") == cert_builders.dump_pizza(pizza)


def test_shipped_loop_certificates_in_sync(loop_program):
    assert corpus_text("loop.xrlproof") == cert_builders.dump_loop(loop_program)


def test_corpus_certificates_check(pizza, pizza_table):
    assert pizza_table.ok
    assert set(pizza_table.total) == {("Crust", "remA"), ("Anchovy", "remA"),
                                      ("Cheese", "remA")}
    assert set(pizza_table.partial) == set(pizza_table.total)


def test_derivation_size_golden(pizza, pizza_certs):
    sizes = {(c.owner, c.judgment): derivation_size(c.derivation)
             for c in pizza_certs.certificates if c.member == "remA"}
    assert sizes[("Crust", "total")] == 2
    assert sizes[("Anchovy", "total")] == 13
    assert sizes[("Cheese", "total")] == 23
    assert sizes[("Anchovy", "partial")] == 14     # cast wrapper adds one


def test_node_json_roundtrip(pizza, pizza_certs):
    for cert in pizza_certs.certificates:
        blob = node_to_json(cert.derivation)
        again = node_from_json(json.loads(json.dumps(blob)), pizza)
        assert node_to_json(again) == blob


def test_assign_rejects_target_in_precondition(pizza):
    node = DNode("assign", cmd=parse_cmd_text("ret := this", pizza),
                 P=parse_expr_text("ret == ret"))
    outcome = check_derivation(node, pizza, head=EntryHead("Crust", "remA"))
    assert outcome.conclusion is None
    assert any("target-not-free" in d.message for d in outcome.diagnostics)


def test_cast_rejects_mse_leak(pizza):
    inner = DNode("assign", cmd=parse_cmd_text("ret := this", pizza),
                  P=Binary("&&", parse_expr_text("mse == mse"),
                           eq(Var(MSE_VAR), parse_expr_text("this.fp"))))
    node = DNode("cast", head=EntryHead("Crust", "remA"), children=(inner,))
    outcome = check_derivation(node, pizza, head=None, total=False)
    assert outcome.conclusion is None
    assert any("mse" in d.message for d in outcome.diagnostics)


def test_cast_requires_measure_conjunct(pizza):
    inner = DNode("assign", cmd=parse_cmd_text("ret := this", pizza),
                  P=TRUE_EXPR)
    node = DNode("cast", head=EntryHead("Crust", "remA"), children=(inner,))
    outcome = check_derivation(node, pizza, head=None, total=False)
    assert outcome.conclusion is None
    assert any("measure-conjunct" in d.message for d in outcome.diagnostics)


def test_cast_on_partial_method_rejected(loop_program):
    inner = DNode("skip", P=TRUE_EXPR)
    node = DNode("cast", head=EntryHead("Omega", "spin"), children=(inner,))
    outcome = check_derivation(node, loop_program, head=None, total=False)
    assert outcome.conclusion is None
    assert any("no measure" in d.message for d in outcome.diagnostics)


def test_call_rejects_nontotal_in_total_mode(loop_program):
    node = DNode("call", cmd=parse_cmd_text("r := this.spin@Worker()",
                                            loop_program),
                 P=TRUE_EXPR)
    outcome = check_derivation(node, loop_program,
                               head=EntryHead("Omega", "spin"), total=True)
    assert outcome.conclusion is None
    assert any("totality" in d.message for d in outcome.diagnostics)


def test_write_rejects_heap_reading_expression(pizza):
    node = DNode("write", cmd=parse_cmd_text("this.fp := this.fp + {this}",
                                             pizza))
    outcome = check_derivation(node, pizza, head=EntryHead("Cheese", "remA"))
    assert outcome.conclusion is None
    assert any("pure" in d.message for d in outcome.diagnostics)


def test_implies_reflexive_shortcut(pizza):
    P = parse_expr_text("this.valid@Pizza()", pizza)
    ob = implies_ob("t", P, P, pizza)
    assert ob.mode == "syntactic" and ob.status == PASS


def test_subeffect_chain_domain(pizza):
    """Under n == this.nt and a valid chain, the callee effects shrink."""
    from xrl.effects import region_to_effects
    states = []
    for depth in (1, 2, 3):
        s = build_chain(["Crust"] + ["Anchovy"] * depth)
        s = update(s, "n", Ptr(depth, "Anchovy" if depth > 1 else "Crust"))
        states.append(s)
    domain = BoundedDomain(states=states)
    pre = parse_expr_text("n == this.nt && this.valid@Pizza()", pizza)
    ob = subeffect_ob("t", pre,
                      region_to_effects(parse_expr_text("n.fp"), pizza),
                      region_to_effects(parse_expr_text("this.fp"), pizza),
                      pizza)
    rep = discharge([ob], pizza, domain)
    assert rep.obligations[0].status == PASS


def test_implies_false_fact_fails_with_witness(pizza):
    ob = implies_ob("t", TRUE_EXPR,
                    parse_expr_text("this.valid@Pizza()", pizza), pizza)
    rep = discharge([ob], pizza, BoundedDomain(addresses=2))
    out = rep.obligations[0]
    assert out.status == FAIL
    assert out.witness is not None  # e.g. a fresh unlinked Anchovy


def test_method_specs_missing_certificate(pizza, pizza_certs):
    import copy as _copy
    cf = _copy.deepcopy(pizza_certs)
    cf.certificates = [c for c in cf.certificates
                       if not (c.owner == "Cheese" and c.judgment == "total")]
    table = check_method_specs(pizza, cf)
    assert any(d.code == "missing-certificate" for d in table.diagnostics)


def test_method_specs_shape_mismatch_without_mse_fact(pizza, pizza_certs):
    cf = copy.deepcopy(pizza_certs)
    cert = cf.find("Crust", "remA", "total")
    # drop the `mse == this.fp` conjunct from the packaged precondition
    pre = required_total_conclusion(pizza, "Crust", "remA").pre.lhs
    cert.derivation.P = pre
    cert.derivation.children[0].P = pre
    table = check_method_specs(pizza, cf)
    assert any(d.code == "conclusion-shape" and "Crust" in d.message
               for d in table.diagnostics)


def test_recheck_is_idempotent(pizza, pizza_certs):
    t1 = check_method_specs(pizza, pizza_certs)
    t2 = check_method_specs(pizza, pizza_certs)
    r1 = discharge(t1.obligations, pizza, BoundedDomain(addresses=2, seed=5))
    r2 = discharge(t2.obligations, pizza, BoundedDomain(addresses=2, seed=5))
    assert json.dumps(r1.to_json()) == json.dumps(r2.to_json())


def _walk(node, path=""):
    yield node, path
    for i, child in enumerate(node.children):
        yield from _walk(child, f"{path}.{i}" if path else str(i))


def test_every_premise_decided_or_one_obligation(pizza, pizza_certs):
    """Each rule emits exactly the obligation kinds in RULE_TABLE."""
    for cert in pizza_certs.certificates:
        head = EntryHead(cert.owner, cert.member)
        total = cert.judgment == "total"
        outcome = check_derivation(cert.derivation, pizza,
                                   head=head if total else None,
                                   total=total, prefix="m")
        assert outcome.conclusion is not None
        by_path: dict[str, list[str]] = {}
        for ob in outcome.obligations:
            path = ob.id.split("/")[1]
            node_path = path if path != "" else ""
            by_path.setdefault(node_path, []).append(ob.kind)
        for node, path in _walk(cert.derivation):
            table_kinds = list(RULE_TABLE[node.rule]["obligations"])
            if node.rule == "seq" and node.snap is None:
                table_kinds.remove("DISJOINT")
            if node.rule == "call" and not total:
                table_kinds.remove("MEASURE_DECREASE")
            if node.rule == "cast":
                # the cast child is checked in total mode under its head
                total = True
            got = sorted(by_path.get(path, []))
            assert got == sorted(table_kinds), (cert.owner, cert.judgment,
                                                path, node.rule, got,
                                                table_kinds)


def test_rule_table_covers_all_rules():
    from xrl.derivation import RULES
    assert set(RULE_TABLE) == set(RULES)
