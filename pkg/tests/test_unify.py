import random

import pytest

from rwlab.engine import normalize
from rwlab.parser import parse_program, parse_term
from rwlab.printer import render
from rwlab.terms import Fresh, Int, Var, canonical, substitute
from rwlab.unify import compose_parallel, syntactic_mgu, unify_modulo

from oracles import SigSpec, random_ground, random_pattern


def _pairs_as_text(result):
    return sorted(
        (tuple(sorted((repr(v), render(t)) for v, t in p.left.items())),
         tuple(sorted((repr(v), render(t)) for v, t in p.right.items())))
        for p in result)


def test_unify_with_equation_and_comm():
    m = parse_program("""
sorts U .
subsort Int < U .
op m : U -> U .
op c : U -> U .
op f : U U -> U [comm] .
op zero : -> U .
var X : U .
eq [e] : m(X) = c(X) .
""")
    res = unify_modulo(parse_term("f(m(X:U), zero)", m),
                       parse_term("f(zero, c(Z:U))", m), m)
    assert _pairs_as_text(res) == [((("X:U", "%1"),), (("Z:U", "%1"),))]
    assert not res.incomplete


def test_unify_example5_two_unifiers(toy_comm):
    res = unify_modulo(parse_term("c(2, g(X:U, Y:U))", toy_comm),
                       parse_term("c(2, m(Z:U, 5))", toy_comm), toy_comm)
    assert _pairs_as_text(res) == [
        ((("X:U", "%1"), ("Y:U", "5")), (("Z:U", "%1"),)),
        ((("X:U", "5"), ("Y:U", "%1")), (("Z:U", "%1"),)),
    ]


def test_unify_ground_identity(toy_comm):
    t = parse_term("c(1,2)", toy_comm)
    res = unify_modulo(t, parse_term("c(1,2)", toy_comm), toy_comm)
    assert len(res) == 1
    assert res[0].left == {} and res[0].right == {}


def test_unify_rejects_shared_variables(toy_comm):
    t = parse_term("m(X:U, 1)", toy_comm)
    with pytest.raises(ValueError):
        unify_modulo(t, t, toy_comm)


def test_unifier_pairs_satisfy_equation_on_random_cases():
    rng = random.Random(55)
    checked = 0
    attempts = 0
    while checked < 120 and attempts < 2500:
        attempts += 1
        spec = SigSpec(random.Random(2000 + attempts))
        module = spec.module()
        left_vars = [Var(n, "U") for n in ("X", "Y")]
        right_vars = [Var(n, "U") for n in ("Z", "W")]
        t1 = canonical(random_pattern(rng, spec, rng.randint(1, 6), left_vars))
        t2 = canonical(random_pattern(rng, spec, rng.randint(1, 6), right_vars))
        res = unify_modulo(t1, t2, module, limit=4000)
        for pair in res:
            i1 = substitute(t1, pair.left)
            i2 = substitute(t2, pair.right)
            n1, _ = normalize(i1, module, record=False)
            n2, _ = normalize(i2, module, record=False)
            assert n1 == n2, (render(t1), render(t2), repr(pair))
            shared = set(i1.variables()) & set(i2.variables())
            assert all(isinstance(v, Fresh) for v in shared)
        checked += 1 if res else 0
    assert checked == 120


def test_compose_parallel_clash():
    X, Y = Var("X", "Int"), Var("Y", "Int")
    assert compose_parallel({X: Fresh(1), Y: Int(5)},
                            {X: Int(5), Y: Int(3)}) is None


def test_compose_parallel_consistent():
    X, Y = Var("X", "Int"), Var("Y", "Int")
    mgu = compose_parallel({X: Int(5), Y: Fresh(1)}, {X: Int(5), Y: Int(3)})
    assert mgu is not None
    assert mgu[Fresh(1)] == Int(3)


def test_compose_parallel_empty_left():
    Y = Var("Y", "Int")
    sigma = {Y: Int(3)}
    assert compose_parallel({}, sigma) == sigma


def test_compose_parallel_idempotent_never_inconsistent():
    rng = random.Random(9)
    for case in range(60):
        spec = SigSpec(random.Random(3000 + case))
        sigma = {Var(n, "U"): canonical(random_ground(rng, spec,
                                                      rng.randint(1, 4)))
                 for n in ("X", "Y", "Z")}
        assert compose_parallel(sigma, sigma) is not None


def test_occurs_check():
    X = Var("X", "U")
    spec = SigSpec(random.Random(0))
    from rwlab.terms import App
    assert syntactic_mgu([(X, App(spec.g, (X,)))]) is None
