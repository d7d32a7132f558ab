from __future__ import annotations

from pathlib import Path

import pytest

from xrl.checker import check_method_specs
from xrl.derivation import load_certificates
from xrl.parser import parse_program

CORPUS = Path(__file__).resolve().parent.parent / "src" / "xrl" / "corpus"


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def pizza_source() -> str:
    return corpus_text("pizza.xrl")


@pytest.fixture(scope="session")
def pizza(pizza_source):
    res = parse_program(pizza_source)
    assert res.program is not None and not res.diagnostics, res.diagnostics
    return res.program


@pytest.fixture(scope="session")
def pizza_certs(pizza):
    return load_certificates(corpus_text("pizza.xrlproof"), pizza)


@pytest.fixture(scope="session")
def pizza_table(pizza, pizza_certs):
    table = check_method_specs(pizza, pizza_certs)
    assert table.ok, table.diagnostics
    return table


@pytest.fixture(scope="session")
def loop_program():
    res = parse_program(corpus_text("loop.xrl"))
    assert res.program is not None and not res.diagnostics
    return res.program


@pytest.fixture(scope="session")
def loop_table(loop_program):
    certs = load_certificates(corpus_text("loop.xrlproof"), loop_program)
    table = check_method_specs(loop_program, certs)
    assert table.ok, table.diagnostics
    return table


def fresh_pizza():
    """A mutable copy of the corpus program for mutation tests."""
    res = parse_program(corpus_text("pizza.xrl"))
    assert res.program is not None
    return res.program
