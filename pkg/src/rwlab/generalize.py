"""Least general generalization (anti-unification) modulo operator axioms.

Disagreements become shared fresh `%n` variables (the same pair of subterms
always maps to the same variable).  For commutative/associative operators the
child alignment is chosen by bounded enumeration, keeping a most specific
candidate: larger generalizers first, then fewer fresh occurrences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .module import ProgramModule
from .terms import App, Fresh, Subst, Term, make_app

DEFAULT_ALIGNMENT_BOUND = 10_000


@dataclass
class _State:
    memo: dict[tuple[Term, Term], Fresh] = field(default_factory=dict)
    left: Subst = field(default_factory=dict)
    right: Subst = field(default_factory=dict)
    budget: int = DEFAULT_ALIGNMENT_BOUND

    def fresh_for(self, a: Term, b: Term) -> Fresh:
        v = self.memo.get((a, b))
        if v is None:
            v = Fresh(len(self.memo) + 1)
            self.memo[(a, b)] = v
            self.left[v] = a
            self.right[v] = b
        return v


def _fresh_occurrences(t: Term) -> int:
    if isinstance(t, Fresh):
        return 1
    if isinstance(t, App):
        return sum(_fresh_occurrences(a) for a in t.args)
    return 0


def _score(t: Term) -> tuple[int, int]:
    return (t.size(), -_fresh_occurrences(t))


def _pieces_or_identity(op, t: Term) -> list[Term]:
    if isinstance(t, App) and t.op.key() == op.key():
        return list(t.args)
    if op.identity is not None and t == op.identity:
        return []
    return [t]


def _lgg(a: Term, b: Term, st: _State) -> Term:
    if a == b:
        return a
    if isinstance(a, App) and isinstance(b, App) and a.op.key() == b.op.key():
        op = a.op
        if not (op.assoc or op.comm or op.identity is not None):
            if len(a.args) == len(b.args):
                return make_app(op, [_lgg(x, y, st)
                                     for x, y in zip(a.args, b.args)])
            return st.fresh_for(a, b)
        return _lgg_axiom(op, a, b, st)
    # A lone piece can still align against a flattened node when the
    # operator has an identity to absorb the difference.
    for x, y in ((a, b), (b, a)):
        if isinstance(x, App) and x.op.identity is not None and \
                not (isinstance(y, App) and y.op.key() == x.op.key()):
            return _lgg_axiom(x.op, a, b, st)
    return st.fresh_for(a, b)


def _block(op, parts: list[Term]) -> Optional[Term]:
    if not parts:
        return op.identity
    if len(parts) == 1:
        return parts[0]
    if not op.assoc:
        return None
    return make_app(op, parts)


class _Best:
    def __init__(self):
        self.term: Optional[Term] = None
        self.snapshot = None

    def consider(self, candidate: Term, st: _State):
        if self.term is None or _score(candidate) > _score(self.term) or \
                (_score(candidate) == _score(self.term) and
                 repr(candidate) < repr(self.term)):
            self.term = candidate
            self.snapshot = (dict(st.memo), dict(st.left), dict(st.right))


def _lgg_axiom(op, a: Term, b: Term, st: _State) -> Term:
    left, right = _pieces_or_identity(op, a), _pieces_or_identity(op, b)
    best = _Best()
    if op.comm:
        _align_multiset(op, left, right, st, best)
    else:
        _align_ordered(op, left, right, st, best)
    if best.term is None:
        return st.fresh_for(a, b)
    # Rebuild with the winning alignment so the memo reflects only it.
    st.memo, st.left, st.right = best.snapshot
    return best.term


def _align_multiset(op, left, right, st: _State, best: _Best):
    skipped: list[Term] = []

    def align(i: int, remaining: list[Term], parts: list[Term]):
        if st.budget <= 0:
            return
        st.budget -= 1
        if i == len(left):
            finish(parts, list(remaining))
            return
        x = left[i]
        for j, y in enumerate(remaining):
            sub = _lgg(x, y, st)
            align(i + 1, remaining[:j] + remaining[j + 1:], parts + [sub])
        skipped.append(x)
        align(i + 1, remaining, parts)
        skipped.pop()

    def finish(parts: list[Term], leftovers_r: list[Term]):
        leftovers_l = list(skipped)
        if not leftovers_l and not leftovers_r:
            if len(parts) >= 2:
                best.consider(make_app(op, parts), st)
            return
        lblock = _block(op, leftovers_l)
        rblock = _block(op, leftovers_r)
        if lblock is None or rblock is None:
            return
        v = st.fresh_for(lblock, rblock)
        if parts:
            best.consider(make_app(op, parts + [v]), st)

    align(0, right, [])


def _align_ordered(op, left, right, st: _State, best: _Best):
    """Order-preserving alignments for associative, non-commutative
    operators: paired children interleaved with double-sided gap variables."""

    def go(li: int, ri: int, parts: list[Term], after_gap: bool):
        if st.budget <= 0:
            return
        st.budget -= 1
        if li == len(left) and ri == len(right):
            if len(parts) >= 2:
                best.consider(make_app(op, parts), st)
            return
        if li < len(left) and ri < len(right):
            sub = _lgg(left[li], right[ri], st)
            go(li + 1, ri + 1, parts + [sub], False)
        if after_gap:
            return
        lo = 0 if op.identity is not None else 1
        for gl in range(lo, len(left) - li + 1):
            for gr in range(lo, len(right) - ri + 1):
                if gl == 0 and gr == 0:
                    continue
                lblock = _block(op, left[li:li + gl])
                rblock = _block(op, right[ri:ri + gr])
                if lblock is None or rblock is None:
                    continue
                v = st.fresh_for(lblock, rblock)
                go(li + gl, ri + gr, parts + [v], True)

    go(0, 0, [], False)


def lgg_modulo(t1: Term, t2: Term, module: ProgramModule,
               limit: int = DEFAULT_ALIGNMENT_BOUND):
    """Return (generalizer, theta1, theta2) with generalizer*theta_i = t_i."""
    from .terms import substitute
    st = _State(budget=limit)
    g = _lgg(t1, t2, st)
    used = [v for v in g.variables() if isinstance(v, Fresh)]
    ren: Subst = {v: Fresh(i + 1) for i, v in enumerate(used)}
    g = substitute(g, ren)
    left = {ren[v]: img for v, img in st.left.items() if v in ren}
    right = {ren[v]: img for v, img in st.right.items() if v in ren}
    return g, left, right
