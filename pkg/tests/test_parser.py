import random

from xrl.parser import parse_expr_text, parse_program
from xrl.printer import print_expr, print_program
from xrl.syntax import (Binary, Call, FieldAcc, Ite, Lit, NOT, SING, TypeTest,
                        Unary, Var, call_free, pure, subexprs)
from xrl.values import EMPTY_REGION, FALSE, NULL, TRUE, VNat
from xrl.wellformed import check_wellformed

from conftest import corpus_text, fresh_pizza


def test_corpus_shape(pizza):
    assert list(pizza.traits) == ["Pizza"]
    assert list(pizza.classes) == ["Crust", "Anchovy", "Cheese"]
    for c in pizza.classes.values():
        assert list(c.funcs) == ["valid", "price"]
        assert list(c.methods) == ["remA"]
    assert pizza.field_names == ("fp", "nt")
    assert pizza.func("Pizza", "valid").kind == 1
    assert pizza.func("Pizza", "price").kind == 2
    assert pizza.total("Anchovy", "remA")


def test_empty_file():
    res = parse_program("// nothing here\n")
    assert res.program is None
    assert any(d.code == "no-declarations" for d in res.diagnostics)


def test_truncated_corpus_still_parses(pizza_source):
    start = pizza_source.index("class Cheese")
    res = parse_program(pizza_source[:start])
    assert res.program is not None and not res.diagnostics
    assert "Cheese" not in res.program.classes


def test_duplicate_declaration():
    src = "trait T { }\ntrait T { }\n"
    res = parse_program(src)
    assert res.program is None
    assert any(d.code == "duplicate-declaration" for d in res.diagnostics)


def test_syntax_error_has_position():
    res = parse_program("trait T {\n  var x %\n}")
    assert res.program is None
    (diag,) = [d for d in res.diagnostics if d.code == "syntax-error"]
    assert diag.line == 2


def test_sugar_forms(pizza):
    e = parse_expr_text("a ==> b")
    assert e == Ite(Var("a"), Var("b"), Lit(TRUE))
    e = parse_expr_text("a != b")
    assert e == Unary(NOT, Binary("==", Var("a"), Var("b")))
    e = parse_expr_text("a !in b")
    assert e == Unary(NOT, Binary("in", Var("a"), Var("b")))
    assert parse_expr_text("{}") == Lit(EMPTY_REGION)
    e = parse_expr_text("{a, b}")
    assert e == Binary("+", Unary(SING, Var("a")), Unary(SING, Var("b")))
    e = parse_expr_text("this.valid@Pizza()", pizza)
    assert e == Call(Var("this"), "valid", "Pizza", (Lit(VNat(0)),))


def test_return_and_var_sugar(pizza):
    body = pizza.method("Crust", "remA").body
    from xrl.syntax import Assign
    assert body == Assign("ret", Var("this"))


def test_alloc_resolution():
    src = """
    trait T { method m() returns (ret: int) requires true modifies {} decreases {} ensures true }
    class C extends T { method m() returns (ret: int) { x := C; return x; } }
    """
    res = parse_program(src)
    assert res.program is not None, res.diagnostics
    from xrl.syntax import AllocCmd, SeqCmd
    body = res.program.method("C", "m").body
    assert isinstance(body, SeqCmd) and body.c1 == AllocCmd("x", "C")


def _random_expr(rng: random.Random, depth: int):
    atoms = [Var("x"), Var("this"), Var("y"), Lit(VNat(rng.randrange(5))),
             Lit(TRUE), Lit(FALSE), Lit(NULL), Lit(EMPTY_REGION)]
    if depth <= 0:
        return rng.choice(atoms)
    kind = rng.randrange(7)
    sub = lambda: _random_expr(rng, depth - 1)
    if kind == 0:
        return Binary(rng.choice(["+", "-", "*", "<", "<=", "==", "in",
                                  "&&", "||"]), sub(), sub())
    if kind == 1:
        return Unary(NOT, sub())
    if kind == 2:
        return Unary(SING, sub())
    if kind == 3:
        return FieldAcc(sub(), rng.choice(["fp", "nt"]))
    if kind == 4:
        return Ite(sub(), sub(), sub())
    if kind == 5:
        return TypeTest(sub(), rng.choice(["Crust", "Pizza"]))
    return Call(sub(), "valid", "Pizza", (sub(),))


def wf_expr_ok(e) -> bool:
    """Shapes check_wellformed guarantees: call-free guards and call args."""
    for sub in subexprs(e):
        if isinstance(sub, Ite) and not call_free(sub.guard):
            return False
        if isinstance(sub, Call):
            if not call_free(sub.recv) or not all(call_free(a)
                                                  for a in sub.args):
                return False
    return True


def test_print_parse_roundtrip_random():
    rng = random.Random(42)
    for _ in range(300):
        e = _random_expr(rng, rng.randrange(1, 6))
        assert parse_expr_text(print_expr(e)) == e, print_expr(e)


def test_corpus_program_roundtrip(pizza):
    reparsed = parse_program(print_program(pizza))
    assert reparsed.program is not None, reparsed.diagnostics
    q = reparsed.program
    assert q.traits == pizza.traits
    assert q.classes == pizza.classes
    assert q.func_order == pizza.func_order
    assert q.method_order == pizza.method_order


def test_call_free_examples(pizza):
    assert call_free(parse_expr_text("this.fp"))
    assert not call_free(parse_expr_text("this.nt.valid@Pizza()", pizza))
    e = parse_expr_text("(if x is Crust then 1 else y.price@Pizza(0))", pizza)
    assert not call_free(e)


def test_call_free_hereditary():
    rng = random.Random(7)
    for _ in range(200):
        e = _random_expr(rng, rng.randrange(1, 5))
        if call_free(e):
            assert all(call_free(sub) for sub in subexprs(e))


def test_pure_examples():
    assert pure(parse_expr_text("x + 1"))
    assert pure(parse_expr_text("{this}"))
    assert not pure(parse_expr_text("this.fp"))


def test_wellformed_corpus_clean(pizza):
    assert check_wellformed(pizza) == []


def test_wellformed_measure_not_call_free():
    prog = fresh_pizza()
    prog.classes["Anchovy"].funcs["valid"].measure = parse_expr_text(
        "this.nt.valid@Pizza()", prog)
    diags = check_wellformed(prog)
    assert any(d.code == "measure-not-call-free" for d in diags)


def test_wellformed_unknown_field():
    prog = fresh_pizza()
    prog.classes["Crust"].funcs["valid"].body = parse_expr_text("this.z")
    diags = check_wellformed(prog)
    assert any(d.code == "unresolved-field" for d in diags)


def test_wellformed_order_independent(pizza_source):
    base = parse_program(pizza_source).program
    # permute class declarations by slicing the source blocks around
    blocks = pizza_source.split("\nclass ")
    head, classes = blocks[0], ["class " + b.strip() + "\n" for b in blocks[1:]]
    permuted = head + "\n" + classes[2] + "\n" + classes[0] + "\n" + classes[1]
    prog2 = parse_program(permuted).program
    assert prog2 is not None
    d1 = sorted((d.code, d.message) for d in check_wellformed(base))
    d2 = sorted((d.code, d.message) for d in check_wellformed(prog2))
    assert d1 == d2 == []
    # now with an injected defect in both orders
    for prog in (base, prog2):
        prog.classes["Crust"].funcs["valid"].body = parse_expr_text("this.z")
    d1 = sorted((d.code, d.message) for d in check_wellformed(base))
    d2 = sorted((d.code, d.message) for d in check_wellformed(prog2))
    assert d1 == d2 and d1


def test_wellformed_reserved_assignment():
    src = corpus_text("pizza.xrl").replace("var n := this.nt;",
                                           "var n := this.nt; mse := 1;", 1)
    res = parse_program(src)
    assert res.program is not None
    diags = check_wellformed(res.program)
    assert any(d.code == "reserved-assignment" for d in diags)


def test_wellformed_spec_mismatch():
    src = corpus_text("pizza.xrl").replace(
        "class Crust extends Pizza {\n  function valid(): (ret: bool)\n",
        "class Crust extends Pizza {\n  function valid(): (ret: bool)\n"
        "    reads {this}\n", 1)
    res = parse_program(src)
    assert res.program is not None, res.diagnostics
    diags = check_wellformed(res.program)
    assert any(d.code == "spec-mismatch" for d in diags)


def test_wellformed_kind2_dfc_calls_only_kind1():
    # a kind-2 precondition calling a kind-2 function is flagged
    prog = fresh_pizza()
    prog.traits["Pizza"].funcs["price"].dfc = parse_expr_text(
        "this.price@Pizza()", prog)
    diags = check_wellformed(prog)
    assert any(d.code == "kind2-dfc-calls-kind2" for d in diags)


def test_wellformed_kind1_dfc_must_be_call_free():
    prog = fresh_pizza()
    prog.traits["Pizza"].funcs["valid"].dfc = parse_expr_text(
        "this.valid@Pizza()", prog)
    diags = check_wellformed(prog)
    assert any(d.code == "kind1-dfc-not-call-free" for d in diags)
