"""Unification: syntactic mgu, parallel composition, and bounded unification
modulo operator axioms.

`unify_modulo` normalizes both unificands with the oriented equations first
and then unifies modulo the declared axioms.  That reproduces all unifier
sets this toolkit needs but is weaker than narrowing-based unification; when
the child-assignment enumeration bound is hit or a variable-splitting case is
cut short, the result carries `incomplete = True`.

Unifiers are presented as pairs of substitutions, one per unificand, sharing
only fresh `%n` variables (numbered in first-use order per pair).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .module import ProgramModule
from .printer import render
from .terms import (App, Fresh, Int, Qid, Subst, Term, Var, canonical,
                    make_app, occurs_in, substitute)

DEFAULT_SOLUTION_BOUND = 10_000


def syntactic_mgu(equations: list[tuple[Term, Term]]) -> Optional[Subst]:
    """Robinson unification on the structural (canonical) representation."""
    sigma: Subst = {}
    work = list(equations)
    while work:
        a, b = work.pop()
        a, b = substitute(a, sigma), substitute(b, sigma)
        if a == b:
            continue
        if isinstance(b, (Var, Fresh)) and not isinstance(a, (Var, Fresh)):
            a, b = b, a
        if isinstance(a, (Var, Fresh)):
            if occurs_in(a, b):
                return None
            bind = {a: b}
            sigma = {v: substitute(img, bind) for v, img in sigma.items()}
            sigma[a] = b
            continue
        if isinstance(a, App) and isinstance(b, App) and \
                a.op.key() == b.op.key() and len(a.args) == len(b.args):
            work.extend(zip(a.args, b.args))
            continue
        return None
    return sigma


def compose_parallel(sa: Subst, sb: Subst) -> Optional[Subst]:
    """Mgu of all bindings of both substitutions read as equations, or None."""
    eqs: list[tuple[Term, Term]] = []
    for s in (sa, sb):
        eqs.extend((v, img) for v, img in sorted(s.items(), key=lambda kv: repr(kv[0])))
    return syntactic_mgu(eqs)


@dataclass
class UnifierPair:
    left: Subst
    right: Subst
    fresh_count: int

    def __repr__(self):
        def side(s):
            return "{" + ", ".join(f"{v!r}/{img!r}" for v, img in sorted(
                s.items(), key=lambda kv: repr(kv[0]))) + "}"
        return f"({side(self.left)}, {side(self.right)})"


class UnifyResult(list):
    incomplete = False


class _Bound:
    def __init__(self, limit: int):
        self.left = limit
        self.hit = False

    def tick(self) -> bool:
        if self.left <= 0:
            self.hit = True
            return False
        self.left -= 1
        return True


class _Unifier:
    def __init__(self, module: ProgramModule, bound: _Bound):
        self.module = module
        self.sig = module.signature
        self.bound = bound

    def solve(self, eqs: list[tuple[Term, Term]], sigma: Subst) -> Iterator[Subst]:
        if not eqs:
            yield dict(sigma)
            return
        if not self.bound.tick():
            return
        (ra, rb), rest = eqs[0], eqs[1:]
        a, b = substitute(ra, sigma), substitute(rb, sigma)
        if a == b:
            yield from self.solve(rest, sigma)
            return
        if isinstance(b, (Var, Fresh)) and not isinstance(a, (Var, Fresh)):
            a, b = b, a
        if isinstance(a, (Var, Fresh)):
            if occurs_in(a, b):
                return
            if not self.sig.fits(b, a.sort) and not isinstance(b, (Var, Fresh)):
                return
            bind = {a: b}
            sigma2 = {v: substitute(img, bind) for v, img in sigma.items()}
            sigma2[a] = b
            yield from self.solve(rest, sigma2)
            return
        if isinstance(a, App) and isinstance(b, App) and a.op.key() == b.op.key():
            op = a.op
            if not (op.assoc or op.comm or op.identity is not None):
                if len(a.args) != len(b.args):
                    return
                yield from self.solve(list(zip(a.args, b.args)) + rest, sigma)
                return
            yield from self._ac(op, self._pieces(op, a), self._pieces(op, b),
                                rest, sigma)
            return
        if isinstance(a, App) and (a.op.assoc or a.op.identity is not None):
            yield from self._ac(a.op, self._pieces(a.op, a),
                                self._pieces(a.op, b), rest, sigma)
            return
        if isinstance(b, App) and (b.op.assoc or b.op.identity is not None):
            yield from self._ac(b.op, self._pieces(b.op, b),
                                self._pieces(b.op, a), rest, sigma)
            return
        return

    def _pieces(self, op, t: Term) -> list[Term]:
        if isinstance(t, App) and t.op.key() == op.key():
            return list(t.args)
        if op.identity is not None and t == op.identity:
            return []
        return [t]

    def _ac(self, op, left: list[Term], right: list[Term], rest, sigma
            ) -> Iterator[Subst]:
        if op.assoc and not op.comm:
            yield from self._ordered(op, left, right, rest, sigma)
            return
        # Cancel structurally equal pieces first.
        left, right = list(left), list(right)
        for x in list(left):
            if x in right:
                left.remove(x)
                right.remove(x)
        lv = [t for t in left if isinstance(t, (Var, Fresh))]
        ln = [t for t in left if not isinstance(t, (Var, Fresh))]
        rv = [t for t in right if isinstance(t, (Var, Fresh))]
        rn = [t for t in right if not isinstance(t, (Var, Fresh))]
        buckets: dict[int, list[Term]] = {}
        all_vars = lv + rv
        paired_vars: set[int] = set()

        def finish(pairs: list[tuple[Term, Term]]) -> Iterator[Subst]:
            eqs = list(pairs)
            for i, v in enumerate(all_vars):
                parts = buckets.get(i, [])
                if not parts:
                    if i in paired_vars:
                        continue
                    if op.identity is None:
                        return
                    eqs.append((v, op.identity))
                elif len(parts) == 1:
                    eqs.append((v, parts[0]))
                else:
                    if not op.assoc:
                        return
                    eqs.append((v, make_app(op, parts)))
            yield from self.solve(eqs + rest, sigma)

        def var_slots(side_is_left: bool):
            # Items from the left may go into right-variable buckets and
            # vice versa.
            if side_is_left:
                return [len(lv) + j for j in range(len(rv))]
            return list(range(len(lv)))

        def cap_ok(slot: int) -> bool:
            return op.assoc or len(buckets.get(slot, [])) == 0

        def assign_items(items, side_is_left, k, pairs, opposite_pool,
                         cont) -> Iterator[Subst]:
            if k == len(items):
                yield from cont(pairs)
                return
            item = items[k]
            if not self.bound.tick():
                return
            for j, other in enumerate(opposite_pool):
                if other is None or isinstance(other, (Var, Fresh)):
                    continue
                opposite_pool[j] = None
                yield from assign_items(items, side_is_left, k + 1,
                                        pairs + [(item, other)], opposite_pool, cont)
                opposite_pool[j] = other
            for slot in var_slots(side_is_left):
                if cap_ok(slot):
                    buckets.setdefault(slot, []).append(item)
                    yield from assign_items(items, side_is_left, k + 1, pairs,
                                            opposite_pool, cont)
                    buckets[slot].pop()

        def assign_right(pairs) -> Iterator[Subst]:
            remaining = [t for t in rn_pool if t is not None]

            def go(k, pairs2) -> Iterator[Subst]:
                if k == len(remaining):
                    yield from assign_vars(pairs2)
                    return
                item = remaining[k]
                if not self.bound.tick():
                    return
                for slot in var_slots(False):
                    if cap_ok(slot):
                        buckets.setdefault(slot, []).append(item)
                        yield from go(k + 1, pairs2)
                        buckets[slot].pop()
            yield from go(0, pairs)

        def assign_vars(pairs) -> Iterator[Subst]:
            # Remaining variables with empty buckets may capture an opposite
            # variable; everything else falls through to identity in finish().
            free_l = [i for i, v in enumerate(lv) if i not in buckets or
                      not buckets[i]]
            free_r = [len(lv) + j for j, v in enumerate(rv)
                      if (len(lv) + j) not in buckets or not buckets[len(lv) + j]]

            def pair_vars(ls, rs, pairs2) -> Iterator[Subst]:
                if not ls or not rs:
                    yield from finish(pairs2)
                    return
                i, rest_l = ls[0], ls[1:]
                # Leave unpaired (identity) or pair with each free right var.
                yield from pair_vars(rest_l, rs, pairs2)
                for j in rs:
                    if not self.bound.tick():
                        return
                    paired_vars.update((i, j))
                    yield from pair_vars(rest_l, [x for x in rs if x != j],
                                         pairs2 + [(all_vars[i], all_vars[j])])
                    paired_vars.difference_update((i, j))
            yield from pair_vars(free_l, free_r, pairs)

        rn_pool: list[Optional[Term]] = list(rn)
        yield from assign_items(ln, True, 0, [], rn_pool, assign_right)

    def _ordered(self, op, left: list[Term], right: list[Term], rest, sigma
                 ) -> Iterator[Subst]:
        """Associative (order-preserving) unification of child sequences."""
        def block(parts: list[Term]) -> Optional[Term]:
            if not parts:
                return op.identity
            if len(parts) == 1:
                return parts[0]
            return make_app(op, parts)

        def go(li: int, ri: int, eqs) -> Iterator[Subst]:
            if not self.bound.tick():
                return
            if li == len(left) and ri == len(right):
                yield from self.solve(eqs + rest, sigma)
                return
            l = left[li] if li < len(left) else None
            r = right[ri] if ri < len(right) else None
            if l is not None and r is not None and \
                    not isinstance(l, (Var, Fresh)) and \
                    not isinstance(r, (Var, Fresh)):
                yield from go(li + 1, ri + 1, eqs + [(l, r)])
                return
            if l is not None and isinstance(l, (Var, Fresh)):
                lo = 0 if op.identity is not None else 1
                for n in range(lo, len(right) - ri + 1):
                    img = block(right[ri:ri + n])
                    if img is None:
                        continue
                    yield from go(li + 1, ri + n, eqs + [(l, img)])
            if r is not None and isinstance(r, (Var, Fresh)):
                lo = 0 if op.identity is not None else 1
                for n in range(lo, len(left) - li + 1):
                    img = block(left[li:li + n])
                    if img is None:
                        continue
                    yield from go(li + n, ri + 1, eqs + [(r, img)])

        yield from go(0, 0, [])


def _idempotent(sigma: Subst) -> Subst:
    out = dict(sigma)
    for _ in range(len(out) + 1):
        nxt = {v: substitute(img, out) for v, img in out.items()}
        if nxt == out:
            return out
        out = nxt
    return out


def _present(sigma: Subst, t1: Term, t2: Term) -> UnifierPair:
    i1, i2 = substitute(t1, sigma), substitute(t2, sigma)
    ren: Subst = {}

    def scan(t: Term):
        if isinstance(t, (Var, Fresh)):
            if t not in ren:
                ren[t] = Fresh(len(ren) + 1)
        elif isinstance(t, App):
            for a in t.args:
                scan(a)
    scan(i1)
    scan(i2)
    left: Subst = {}
    right: Subst = {}
    for v in t1.variables():
        left[v] = substitute(substitute(v, sigma), ren)
    for v in t2.variables():
        right[v] = substitute(substitute(v, sigma), ren)
    return UnifierPair(left, right, len(ren))


def unify_modulo(t1: Term, t2: Term, module: ProgramModule,
                 limit: int = DEFAULT_SOLUTION_BOUND) -> UnifyResult:
    """E-unify two variable-disjoint terms: normalize, then unify modulo axioms."""
    from .engine import normalize
    shared = set(t1.variables()) & set(t2.variables())
    if shared:
        raise ValueError(f"unificands share variables: {sorted(map(repr, shared))}")
    n1, _ = normalize(canonical(t1), module, record=False)
    n2, _ = normalize(canonical(t2), module, record=False)
    bound = _Bound(limit)
    solver = _Unifier(module, bound)
    pairs: list[UnifierPair] = []
    seen = set()
    for sigma in solver.solve([(n1, n2)], {}):
        pair = _present(_idempotent(sigma), n1, n2)
        key = (tuple(sorted((repr(v), img) for v, img in pair.left.items())),
               tuple(sorted((repr(v), img) for v, img in pair.right.items())))
        if key in seen:
            continue
        seen.add(key)
        pairs.append(pair)
    pairs.sort(key=lambda p: (p.fresh_count, len(p.left), repr(p)))
    out = UnifyResult(pairs)
    out.incomplete = bound.hit
    return out
