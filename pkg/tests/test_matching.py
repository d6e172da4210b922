import random

from rwlab.matching import match_modulo
from rwlab.module import ANY_SORT
from rwlab.parser import parse_program, parse_term
from rwlab.printer import render
from rwlab.terms import Var, canonical

from oracles import (SigSpec, brute_matchers, match_key_set, random_ground,
                     random_pattern)


def test_free_theory_match(stock_paper):
    pat = parse_term("tr(TID:TraderID,C:Int)", stock_paper)
    sub = parse_term("tr('T1,-3)", stock_paper)
    ms = match_modulo(pat, sub, stock_paper)
    assert len(ms) == 1
    theta = {repr(v): render(t) for v, t in ms[0].subst.items()}
    assert theta == {"TID:TraderID": "'T1", "C:Int": "-3"}


def test_comm_match(toy_comm):
    pat = parse_term("m(Z:Int,5)", toy_comm)
    sub = parse_term("m(5,3)", toy_comm)
    ms = match_modulo(pat, sub, toy_comm)
    assert len(ms) == 1
    (v, img), = ms[0].subst.items()
    assert render(img) == "3"


def test_acu_two_matchers(stock_paper):
    pat = parse_term("(st(SID:StockID,P:Int), SS:Set{Stock})", stock_paper)
    sub = parse_term("(st('S1,23), st('S2,8))", stock_paper)
    ms = match_modulo(pat, sub, stock_paper)
    sids = sorted(render(m.subst[Var("SID", "StockID")]) for m in ms)
    assert sids == ["'S1", "'S2"]


def test_acu_identity_absorption(stock_paper):
    pat = parse_term("(st(SID:StockID,P:Int), SS:Set{Stock})", stock_paper)
    sub = parse_term("st('S2,8)", stock_paper)
    ms = match_modulo(pat, sub, stock_paper)
    assert len(ms) == 1
    assert render(ms[0].subst[Var("SS", "Set{Stock}")]) == "empty"


def test_subject_variables_are_constants(stock_paper):
    pat = parse_term("tr(TID:TraderID,C:Int)", stock_paper)
    sub = parse_term("tr(X:TraderID,5)", stock_paper)
    ms = match_modulo(pat, sub, stock_paper)
    assert len(ms) == 1
    assert ms[0].subst[Var("TID", "TraderID")] == Var("X", "TraderID")


def test_sort_compatibility_prunes(stock_paper):
    pat = parse_term("st(SID:StockID, P:Int)", stock_paper)
    # R:Nat cannot bind a negative literal
    nat_pat = parse_term("tr(TID:TraderID, R:Nat)", stock_paper)
    sub = parse_term("tr('T1,-3)", stock_paper)
    assert not match_modulo(nat_pat, sub, stock_paper)


def test_truncation_flag():
    spec = SigSpec(random.Random(1))
    module = spec.module()
    xs = [Var(f"X{i}", "U") for i in range(6)]
    from rwlab.terms import App, make_app
    pat = canonical(App(spec.f, (xs[0], App(spec.f, (xs[1], App(spec.f, (xs[2], xs[3])))))))
    sub = canonical(random_ground(random.Random(2), spec, 14))
    if spec.f.assoc and spec.f.comm:
        ms = match_modulo(pat, sub, module, limit=3)
        assert ms.truncated or len(ms) <= 3


def test_matcher_set_equals_brute_force_oracle():
    rng = random.Random(77)
    cases = 0
    attempts = 0
    while cases < 120 and attempts < 3000:
        attempts += 1
        spec = SigSpec(random.Random(1000 + attempts))
        module = spec.module()
        vars_pool = [Var(n, "U") for n in ("X", "Y", "Z")]
        pat = canonical(random_pattern(rng, spec, rng.randint(1, 7), vars_pool))
        sub = canonical(random_ground(rng, spec, rng.randint(1, 7),
                                      allow_identity=True))
        if not sub.is_ground():
            continue
        try:
            expected = brute_matchers(pat, sub, module)
        except RuntimeError:
            continue
        got = match_key_set(match_modulo(pat, sub, module))
        assert got == expected, (render(pat), render(sub),
                                 sorted(got), sorted(expected))
        cases += 1
    assert cases == 120
