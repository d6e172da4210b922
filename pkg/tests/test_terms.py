import random

import pytest

from rwlab.parser import parse_program, parse_term
from rwlab.printer import render
from rwlab.terms import (App, InvalidPosition, canonical, replace_at,
                         subtree_positions)

from oracles import (SigSpec, ax_equal_oracle, closure, random_ground,
                     strip_identities)


def test_subterm_at_root(stock_paper):
    t = parse_term("tr('T1,-3)", stock_paper)
    assert t.subterm_at(()) == t


def test_subterm_at_nested(toy_comm):
    t = parse_term("c(2,m(5,3))", toy_comm)
    assert render(t.subterm_at((2, 1))) == "3"  # comm-canonical order


def test_subterm_flattened_matches_binary_traversal():
    spec = SigSpec(random.Random(7))
    rng = random.Random(8)
    for _ in range(60):
        raw = random_ground(rng, spec, rng.randint(2, 8))
        t = canonical(raw)
        # walking the flattened positions must visit exactly the symbols of
        # the identity-stripped binary tree
        flat_syms = sorted(render(t.subterm_at(p)) for p in t.positions()
                           if not isinstance(t.subterm_at(p), App)
                           or not t.subterm_at(p).args)
        stripped = strip_identities(raw)

        def leaves(u):
            if isinstance(u, App) and u.args:
                if u.op.key() == spec.f.key():
                    out = []
                    for a in u.args:
                        out.extend(leaves(a))
                    return out
                return [x for a in u.args for x in leaves(a)]
            return [render(u)]
        assert sorted(leaves(stripped)) == flat_syms


def test_invalid_position(stock_paper):
    t = parse_term("tr('T1,-3)", stock_paper)
    with pytest.raises(InvalidPosition):
        t.subterm_at((7,))


def test_replace_at_root(stock_paper):
    t = parse_term("tr('T1,9)", stock_paper)
    s = parse_term("tr('T2,0)", stock_paper)
    assert replace_at(t, (), s) == s


def test_replace_at_example5_position(toy_comm):
    t = parse_term("c(2,g(5,3))", toy_comm)
    s = parse_term("m(5,3)", toy_comm)
    assert replace_at(t, (2,), s) == parse_term("c(2,m(5,3))", toy_comm)


def test_replace_identity_collapses(stock_paper):
    t = parse_term("(st('S1,1), st('S2,2))", stock_paper)
    empty = parse_term("updP(1,1,empty)", stock_paper).args[2]
    out = replace_at(t, (1,), empty)
    # the singleton set collapses to the remaining element
    assert out == parse_term("st('S2,2)", stock_paper)


def test_canonicalization_agrees_with_closure_oracle():
    rng = random.Random(101)
    for case in range(40):
        spec = SigSpec(random.Random(200 + case))
        t1 = random_ground(rng, spec, rng.randint(2, 7), allow_identity=True)
        variants = list(closure(t1, cap=30_000))
        t2 = variants[rng.randrange(len(variants))]
        assert canonical(t1) == canonical(t2), (render(t1), render(t2))
        # and a structurally unrelated term should not collide
        t3 = random_ground(rng, spec, rng.randint(2, 7), allow_identity=True)
        assert (canonical(t1) == canonical(t3)) == ax_equal_oracle(t1, t3)


def test_flattened_invariants():
    rng = random.Random(11)
    for case in range(60):
        spec = SigSpec(random.Random(300 + case))
        t = canonical(random_ground(rng, spec, rng.randint(2, 9),
                                    allow_identity=True))
        for pos in t.positions():
            sub = t.subterm_at(pos)
            if isinstance(sub, App) and sub.op.assoc:
                assert len(sub.args) >= 2
                assert all(not (isinstance(a, App) and
                                a.op.key() == sub.op.key())
                           for a in sub.args)
            if isinstance(sub, App) and sub.op.identity is not None:
                assert all(a != sub.op.identity for a in sub.args)


def test_subtree_positions(stock_paper):
    t = parse_term("tr('T1,-3)", stock_paper)
    assert subtree_positions(t, ()) == {(), (1,), (2,), (2, 1)}
