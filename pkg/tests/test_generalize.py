import random

from rwlab.generalize import lgg_modulo
from rwlab.matching import match_modulo
from rwlab.parser import parse_program, parse_term
from rwlab.printer import render
from rwlab.terms import Fresh, canonical, substitute

from oracles import (SigSpec, lgg_candidates, random_ground,
                     strictly_more_specific)


def test_lgg_identical(stock_paper):
    t = parse_term("tr('T1,-3)", stock_paper)
    g, l, r = lgg_modulo(t, t, stock_paper)
    assert g == t and l == {} and r == {}


def test_lgg_single_disagreement(stock_paper):
    t1 = parse_term("tr('T1,-3)", stock_paper)
    t2 = parse_term("tr('T1,5)", stock_paper)
    g, l, r = lgg_modulo(t1, t2, stock_paper)
    assert render(g) == "tr('T1,%1)"
    assert render(l[Fresh(1)]) == "-3" and render(r[Fresh(1)]) == "5"


def test_lgg_comm(toy_comm):
    t1 = parse_term("m(5,3)", toy_comm)
    t2 = parse_term("m(3,7)", toy_comm)
    g, l, r = lgg_modulo(t1, t2, toy_comm)
    assert render(g) == "m(3,%1)"
    assert substitute(g, l) == t1 and substitute(g, r) == t2


def test_lgg_shared_disagreements(toy_comm):
    # the same pair of subterms must reuse one variable
    t1 = parse_term("c(g(1,1), g(1,1))", toy_comm)
    t2 = parse_term("c(g(2,2), g(2,2))", toy_comm)
    g, l, r = lgg_modulo(t1, t2, toy_comm)
    assert len(l) == 1  # a single shared %1


def test_lgg_instantiation_and_minimality_against_enumeration():
    rng = random.Random(91)
    checked = 0
    attempts = 0
    while checked < 150 and attempts < 3000:
        attempts += 1
        spec = SigSpec(random.Random(4000 + attempts))
        module = spec.module()
        t1 = canonical(random_ground(rng, spec, rng.randint(1, 6),
                                     allow_identity=True))
        t2 = canonical(random_ground(rng, spec, rng.randint(1, 6),
                                     allow_identity=True))
        g, l, r = lgg_modulo(t1, t2, module)
        assert substitute(g, l) == t1, (render(t1), render(t2), render(g))
        assert substitute(g, r) == t2, (render(t1), render(t2), render(g))
        try:
            candidates = lgg_candidates(t1, t2)
        except RuntimeError:
            continue
        for cand in candidates:
            if not match_modulo(cand, t1, module) or \
                    not match_modulo(cand, t2, module):
                continue  # enumeration may propose junk; only generalizers count
            assert not strictly_more_specific(cand, g, module), \
                (render(t1), render(t2), render(g), render(cand))
        checked += 1
    assert checked == 150
