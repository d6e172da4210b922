import pytest

from rwlab.assertions import (check_simplification, check_state,
                              check_trace_async, eval_formula,
                              run_checked_sync)
from rwlab.engine import execute, normalize
from rwlab.parser import parse_assertions, parse_program, parse_term
from rwlab.printer import render
from rwlab.terms import Var

from conftest import EXAMPLE4_INIT, LONG_INIT, bundled_text


def _theta(module, **bindings):
    out = {}
    for key, text in bindings.items():
        name, _, sort = key.partition("__")
        out[Var(name, sort)] = parse_term(text, module)
    return out


def test_eval_formula_ordinary_negative(stock_paper, stock_assertions):
    conj = stock_assertions[0].formula[0]
    theta = _theta(stock_paper, TID__TraderID="'T1", C__Int="-3")
    assert eval_formula(conj, theta, stock_paper) is False


def test_eval_formula_premium_trader(stock_paper, stock_assertions):
    conj = stock_assertions[0].formula[0]
    theta = _theta(stock_paper, TID__TraderID="'T2", C__Int="-5")
    assert eval_formula(conj, theta, stock_paper) is True


def test_eval_formula_even(toy_comm):
    assns = parse_assertions("c(2,m(Z:Int,5)) { even(Z:Int) } .", toy_comm)
    conj = assns[0].formula[0]
    assert eval_formula(conj, _theta(toy_comm, Z__Int="3"), toy_comm) is False
    assert eval_formula(conj, _theta(toy_comm, Z__Int="4"), toy_comm) is True


def test_eval_formula_stuck(stock_paper):
    assns = parse_assertions(
        "tr(TID:TraderID,C:Int) { member(TID:TraderID, TID:TraderID) } .",
        stock_paper)
    # member of a lone id against a non-set reduces, so build a real stuck:
    m = parse_program("sorts U .\nop a : -> U .\nop p : U -> Bool .")
    assns = parse_assertions("p(X:U) { p(X:U) } .", m)
    theta = {Var("X", "U"): parse_term("a", m)}
    assert eval_formula(assns[0].formula[0], theta, m) is None


def test_check_state_violation(stock_paper, stock_assertions, paper_trace):
    report = check_state(paper_trace.states[2], stock_assertions, stock_paper,
                         state_index=2)
    assert len(report.violations) == 1
    v = report.violations[0]
    assert v.kind == "system" and v.bug_position == () and v.failed == (0,)
    assert render(v.theta[Var("TID", "TraderID")]) == "'T1"


def test_check_state_clean(stock_paper, stock_assertions, paper_trace):
    report = check_state(paper_trace.states[0], stock_assertions, stock_paper)
    assert report.violations == []


def test_check_state_two_violations(stock_paper, stock_assertions):
    s = parse_term("1 : st('S1,5) | (tr('T1,-1), tr('T3,-7)) | empty",
                   stock_paper)
    report = check_state(s, stock_assertions, stock_paper)
    assert len(report.violations) == 2
    tids = sorted(render(v.theta[Var("TID", "TraderID")])
                  for v in report.violations)
    assert tids == ["'T1", "'T3"]


def test_functional_violation_on_nonpositive_price(stock_paper):
    assns = parse_assertions(bundled_text("stock_updp.assn"), stock_paper)
    # seed 1, delta rnd(2*1)=rndDelta(2)=(69 rem 11)=3, odd branch: 1-3 = -2
    t = parse_term("updP(2, 1, st('S1,5))", stock_paper)
    nf, _ = normalize(t, stock_paper, record=False)
    assert "-" in render(nf)
    report = check_simplification(t, nf, assns, stock_paper)
    assert len(report.violations) == 1
    v = report.violations[0]
    assert v.kind == "functional" and v.output_matched and v.failed == (0,)


def test_functional_vacuous_when_no_input_match(stock_paper):
    assns = parse_assertions(bundled_text("stock_updp.assn"), stock_paper)
    t = parse_term("reSeed(3)", stock_paper)
    nf, _ = normalize(t, stock_paper, record=False)
    assert check_simplification(t, nf, assns, stock_paper).violations == []


def test_functional_guarded_by_precondition(stock_paper):
    assns = parse_assertions(bundled_text("stock_updp.assn"), stock_paper)
    t = parse_term("updP(2, 1, st('S1,-5))", stock_paper)  # P <= 0: no check
    nf, _ = normalize(t, stock_paper, record=False)
    assert check_simplification(t, nf, assns, stock_paper).violations == []


def test_async_example4(stock_paper, stock_assertions, paper_trace):
    v = check_trace_async(paper_trace, stock_assertions, stock_paper)
    assert v is not None and v.state_index == 2
    assert render(v.theta[Var("C", "Int")]) == "-3"


def test_async_empty_assertions(stock_paper, paper_trace):
    assert check_trace_async(paper_trace, [], stock_paper) is None


def test_async_reports_earliest_violation(stock_paper, stock_assertions):
    # hand-built three-state run whose middle state already violates
    t0 = parse_term("1 : st('S2,12) | tr('T1,9) | "
                    "(ord('O1,'T1,'S2,12,4,3,closed), "
                    "ord('O2,'T1,'S2,30,4,20,closed))", stock_paper)
    trace = execute(t0, stock_paper, 2, strategy=["open-ord", "open-ord"])
    v = check_trace_async(trace, stock_assertions, stock_paper)
    assert v is not None and v.state_index == 1


def test_sync_async_agreement(stock_paper, stock_assertions):
    t0 = parse_term(EXAMPLE4_INIT, stock_paper)
    trace, v_sync = run_checked_sync(t0, stock_paper, stock_assertions, 2,
                                     strategy=["next-rnd", "open-ord"])
    v_async = check_trace_async(trace, stock_assertions, stock_paper)
    assert v_sync is not None and v_async is not None
    assert v_sync.state_index == v_async.state_index
    assert v_sync.theta == v_async.theta
    assert v_sync.failed == v_async.failed


def test_sync_halts_at_violation(stock_paper, stock_assertions):
    t0 = parse_term(EXAMPLE4_INIT, stock_paper)
    trace, v = run_checked_sync(t0, stock_paper, stock_assertions, 2,
                                strategy=["next-rnd", "open-ord"])
    assert v is not None and len(trace.bigsteps) == 2
    assert trace.states[-1] == trace.states[v.state_index]


def test_sync_bound_zero_clean(stock_paper, stock_assertions):
    t0 = parse_term(EXAMPLE4_INIT, stock_paper)
    trace, v = run_checked_sync(t0, stock_paper, stock_assertions, 0)
    assert v is None and trace.bigsteps == []


def test_initial_state_already_violating(stock_paper, stock_assertions):
    t0 = parse_term("1 : st('S1,5) | tr('T1,-2) | empty", stock_paper)
    trace, v = run_checked_sync(t0, stock_paper, stock_assertions, 10)
    assert v is not None and v.state_index == 0
    assert trace.bigsteps == []


def test_witness_validity(stock_paper, stock_assertions, paper_trace):
    from rwlab.assertions import eval_formula as ev
    report = check_state(paper_trace.states[2], stock_assertions, stock_paper, 2)
    for v in report.violations:
        witness = paper_trace.states[2].subterm_at(v.bug_position)
        assert witness == v.witness
        for ci in v.failed:
            assert ev(v.assertion.formula[ci], v.theta, stock_paper) is False


def test_no_false_positive_on_guarded(stock_guarded):
    assns = parse_assertions(bundled_text("stock.assn"), stock_guarded)
    t0 = parse_term(LONG_INIT, stock_guarded)
    trace, v = run_checked_sync(t0, stock_guarded, assns, 500)
    assert v is None
    assert len(trace.bigsteps) == 500
