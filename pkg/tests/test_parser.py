import random

import pytest

from rwlab.parser import (ParseError, parse_assertions, parse_program,
                          parse_query, parse_term, FunctionalAssertion,
                          SystemAssertion)
from rwlab.printer import render, render_rule, render_equation
from rwlab.terms import Hole, Wildcard, canonical

from conftest import EXAMPLE4_INIT, bundled_text
from oracles import SigSpec, random_ground


def test_stock_program_shape(stock):
    assert [r.label for r in stock.rules] == \
        ["next-rnd", "open-ord", "close-ord-SL", "close-ord-PT"]
    labels = [e.label for e in stock.equations]
    assert "updP" in labels and "updP-owise" in labels and "prefT" in labels
    assert stock.equation_by_label("updP-owise").owise


def test_empty_module():
    m = parse_program("")
    assert m.rules == [] and m.equations == []


def test_duplicate_rule_label():
    src = """
sorts U .
op a : -> U .
op f : U -> U .
var X : U .
rl [r] : f(X) => X .
rl [r] : f(X) => f(f(X)) .
"""
    with pytest.raises(ParseError, match="duplicate label"):
        parse_program(src)


def test_unlabeled_rule_rejected():
    with pytest.raises(ParseError):
        parse_program("sorts U .\nop a : -> U .\nop f : U -> U .\n"
                      "rl : f(a) => a .")


def test_rhs_variable_scope_checked():
    src = """
sorts U .
op f : U -> U .
var X : U . var Y : U .
rl [r] : f(X) => f(Y) .
"""
    with pytest.raises(ParseError, match="not in left side"):
        parse_program(src)


def test_example4_state_roundtrip(stock_paper):
    t = parse_term(EXAMPLE4_INIT, stock_paper)
    text = render(t)
    assert parse_term(text, stock_paper) == t


def test_hole_only_in_slice_context(stock_paper):
    with pytest.raises(ParseError):
        parse_term("tr(•,9)", stock_paper)
    t = parse_term("tr(•,9)", stock_paper, mode="slice")
    assert isinstance(t.args[0], Hole)


def test_fresh_rejected_in_user_source(stock_paper):
    with pytest.raises(ParseError):
        parse_term("tr(%1,9)", stock_paper)
    t = parse_term("tr(%1,9)", stock_paper, allow_fresh=True)
    assert render(t) == "tr(%1,9)"


def test_system_assertion_parse(stock_paper):
    assns = parse_assertions(bundled_text("stock.assn"), stock_paper)
    assert len(assns) == 1
    a = assns[0]
    assert isinstance(a, SystemAssertion)
    assert len(a.formula) == 1
    assert render(a.formula[0]) == \
        "ordinary(tr(TID:TraderID,C:Int)) implies C:Int >= 0"


def test_functional_assertion_parse(stock_paper):
    assns = parse_assertions(bundled_text("stock_updp.assn"), stock_paper)
    a = assns[0]
    assert isinstance(a, FunctionalAssertion)
    assert render(a.precondition[0]) == "P:Int > 0"
    assert render(a.postcondition[0]) == "P':Int > 0"


def test_empty_formula_rejected(stock_paper):
    with pytest.raises(ParseError, match="empty assertion formula"):
        parse_assertions("tr(TID:TraderID,C:Int) { } .", stock_paper)


def test_formula_variables_must_come_from_template(stock_paper):
    with pytest.raises(ParseError, match="not bound"):
        parse_assertions("tr(TID:TraderID,C:Int) { P:Int > 0 } .", stock_paper)


def test_query_parse_and_numbering(stock_paper):
    q = parse_query("st(_, - ?)", stock_paper)
    minus = q.args[1]
    assert isinstance(q.args[0], Wildcard) and not q.args[0].reported
    assert minus.op.name == "-_"
    assert isinstance(minus.args[0], Wildcard) and minus.args[0].index == 1


def test_query_needs_anchor(stock_paper):
    with pytest.raises(ParseError, match="at least one"):
        parse_query("_", stock_paper)


def test_comments_and_owise(stock):
    src = bundled_text("stock.rwl")
    assert "***" in src  # comments present and accepted by the fixture parse


def test_random_roundtrip():
    rng = random.Random(31)
    from rwlab.module import ProgramModule
    for case in range(120):
        spec = SigSpec(random.Random(400 + case))
        module = spec.module()
        t = canonical(random_ground(rng, spec, rng.randint(1, 10),
                                    allow_identity=True))
        text = render(t)
        assert parse_term(text, module) == t, text


def test_rule_rendering_reparses(stock):
    for rule in stock.rules:
        text = render_rule(rule)
        m2 = parse_program(bundled_text("stock.rwl").replace(
            "rl [next-rnd]", "rl [next-rnd2]"))  # fresh module, label free
        assert text.startswith(("rl", "crl"))
    for eq in stock.equations:
        assert render_equation(eq).endswith(".")
