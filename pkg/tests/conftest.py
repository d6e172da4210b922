import importlib.resources as resources
import json

import pytest

from rwlab.engine import execute
from rwlab.parser import parse_assertions, parse_program, parse_term

BUNDLED = resources.files("rwlab") / "bundled"

EXAMPLE4_INIT = ("1 : (st('S1,23), st('S2,8)) | (tr('T1,9), tr('T2,20)) | "
                 "ord('O1,'T1,'S2,12,4,3,closed)")
LONG_INIT = ("0 : (st('S1,23), st('S2,50)) | (tr('T1,9), tr('T2,20)) | "
             "ord('O1,'T1,'S2,12,4,3,closed)")
SMALL_INIT = "1 : st('S,8) | tr('T,9) | ord('O,'T,'S,12,4,3,closed)"


def bundled_text(name: str) -> str:
    return (BUNDLED / name).read_text()


@pytest.fixture(scope="session")
def stock():
    return parse_program(bundled_text("stock.rwl"))


@pytest.fixture(scope="session")
def stock_paper():
    return parse_program(bundled_text("stock_paper.rwl"))


@pytest.fixture(scope="session")
def stock_long():
    return parse_program(bundled_text("stock_long.rwl"))


@pytest.fixture(scope="session")
def stock_guarded():
    return parse_program(bundled_text("stock_guarded.rwl"))


@pytest.fixture(scope="session")
def stock_assertions(stock_paper):
    return parse_assertions(bundled_text("stock.assn"), stock_paper)


@pytest.fixture(scope="session")
def paper_trace(stock_paper):
    """The reference two-step run: s0 -next-rnd-> s1 -open-ord-> s2."""
    t0 = parse_term(EXAMPLE4_INIT, stock_paper)
    return execute(t0, stock_paper, bound=2, strategy=["next-rnd", "open-ord"])


@pytest.fixture(scope="session")
def example4_wire():
    return json.loads(bundled_text("example4.trace.json"))


@pytest.fixture(scope="session")
def toy_comm():
    return parse_program("""
sorts U .
subsort Int < U .
op c : U U -> U .
op g : U U -> U .
op m : U U -> U [comm] .
op f : U U -> U .
op even : Int -> Bool .
vars X Y : U .
var N : Int .
eq [e] : g(X,Y) = m(X,Y) .
eq [even] : even(N) = (N rem 2) == 0 .
crl [r] : f(X,Y) => c(2,g(X,Y)) if X =/= Y .
""")
