"""Pattern matching modulo operator axioms (assoc, comm, identity).

`match_modulo` returns the complete matcher set for desk-scale terms by
enumerating child assignments of flattened nodes, with a configurable bound
on candidate assignments per node.  Each matcher also records where every
piece of a variable image came from in the subject (`zones`) and where each
non-variable pattern symbol landed (`skeleton`); the slicer builds its
antecedent maps from these.
"""

from __future__ import annotations

from typing import Iterator, Optional, Union

from .module import ProgramModule
from .terms import (App, Fresh, Hole, Int, OperatorDecl, Position, Qid, Subst,
                    Term, Var, Wildcard, make_app, order_key)

DEFAULT_ASSIGNMENT_BOUND = 10_000

# A zone maps positions inside a variable image back to subject positions:
# ordered (image_prefix, subject_prefix) entries, longest prefix wins.  A
# None subject prefix means the piece has no subject origin (identity fills).
Zone = tuple[tuple[Position, Optional[Position]], ...]


def zone_lookup(zone: Zone, img_pos: Position) -> Optional[Position]:
    best = None
    best_len = -1
    for img_prefix, subj_prefix in zone:
        n = len(img_prefix)
        if n > best_len and img_pos[:n] == img_prefix:
            best, best_len = subj_prefix, n
    if best is None:
        return None
    return best + img_pos[best_len:]


class Match:
    __slots__ = ("subst", "zones", "skeleton", "reported")

    def __init__(self, subst: Subst, zones, skeleton, reported):
        self.subst = subst
        self.zones: dict[Union[Var, Fresh], list[Zone]] = zones
        self.skeleton: dict[Position, Position] = skeleton
        self.reported: dict[int, Term] = reported

    def key(self):
        items = tuple(sorted(((repr(v), t) for v, t in self.subst.items())))
        rep = tuple(sorted(self.reported.items()))
        return (items, rep)

    def __repr__(self):
        inner = ", ".join(f"{v!r}/{t!r}" for v, t in sorted(
            self.subst.items(), key=lambda kv: repr(kv[0])))
        return "{" + inner + "}"


class MatchList(list):
    """Matcher list; `truncated` is set when the enumeration bound was hit."""

    truncated = False


class _Bound:
    def __init__(self, limit: int):
        self.left = limit
        self.truncated = False

    def tick(self) -> bool:
        if self.left <= 0:
            self.truncated = True
            return False
        self.left -= 1
        return True


class _Matcher:
    def __init__(self, module: ProgramModule, bound: _Bound):
        self.sig = module.signature
        self.bound = bound
        self.env: Subst = {}
        self.zones: dict = {}
        self.skeleton: dict = {}
        self.reported: dict = {}

    # -- helpers ----------------------------------------------------------

    def _flat_subject(self, op: OperatorDecl, subj: Term, spos: Position):
        """Subject pieces of an axiom node: (term, subject position) pairs."""
        if isinstance(subj, App) and subj.op.key() == op.key():
            return [(a, spos + (i,)) for i, a in enumerate(subj.args, start=1)]
        if op.identity is not None and subj == op.identity:
            return []
        return [(subj, spos)]

    def _block_image(self, op: OperatorDecl, parts, parent_spos,
                     identity_pos: Optional[Position] = None):
        """Image term and zone for a variable absorbing `parts` of an axiom node."""
        if not parts:
            return op.identity, (((), identity_pos),)
        if len(parts) == 1:
            t, sp = parts[0]
            return t, (((), sp),)
        ordered = sorted(parts, key=lambda p: order_key(p[0])) if op.comm else list(parts)
        image = make_app(op, [t for t, _ in ordered])
        zone = [((), parent_spos)]
        zone += [((i,), sp) for i, (_, sp) in enumerate(ordered, start=1)]
        return image, tuple(zone)

    def _bind(self, var, image: Term, zone: Zone) -> Iterator[None]:
        if isinstance(var, Wildcard):
            if not var.reported:
                yield None
                return
            prev = self.reported.get(var.index)
            if prev is not None:
                if prev == image:
                    yield None
                return
            self.reported[var.index] = image
            yield None
            del self.reported[var.index]
            return
        if not self.sig.fits(image, var.sort):
            return
        prev = self.env.get(var)
        if prev is not None:
            if prev == image:
                self.zones.setdefault(var, []).append(zone)
                yield None
                self.zones[var].pop()
            return
        self.env[var] = image
        self.zones.setdefault(var, []).append(zone)
        yield None
        self.zones[var].pop()
        del self.env[var]

    # -- core -------------------------------------------------------------

    def match(self, pat: Term, subj: Term, ppos: Position, spos: Position
              ) -> Iterator[None]:
        if isinstance(pat, (Var, Fresh, Wildcard)):
            yield from self._bind(pat, subj, (((), spos),))
            return
        if isinstance(pat, (Int, Qid, Hole)):
            if pat == subj:
                self.skeleton[ppos] = spos
                yield None
                del self.skeleton[ppos]
            return
        assert isinstance(pat, App)
        op = pat.op
        plain = not (op.assoc or op.comm or op.identity is not None)
        if plain:
            if not (isinstance(subj, App) and subj.op.key() == op.key()
                    and len(subj.args) == len(pat.args)):
                return
            self.skeleton[ppos] = spos
            yield from self._match_args(pat.args, subj.args, ppos, spos, 0)
            del self.skeleton[ppos]
            return
        # Axiom node: a subject that is not built with this operator is a
        # single piece; identity absorption may still complete the match.
        pieces = self._flat_subject(op, subj, spos)
        if (not isinstance(subj, App) or subj.op.key() != op.key()) \
                and op.identity is None and len(pieces) < len(pat.args):
            return
        # An axiom node is not skeleton when the match would survive the
        # whole subject collapsing to one opaque piece: identity for every
        # repeated variable plus one linear variable or wildcard to absorb
        # the piece.
        named = [a for a in pat.args if isinstance(a, (Var, Fresh))]
        linear_absorber = any(isinstance(a, Wildcard) for a in pat.args) or \
            any(named.count(v) == 1 for v in named)
        load_bearing = op.identity is None or \
            any(not isinstance(a, (Var, Fresh, Wildcard)) for a in pat.args) \
            or not linear_absorber
        id_pos = spos if (op.identity is not None and subj == op.identity) \
            else None
        if load_bearing:
            self.skeleton[ppos] = spos
        if op.assoc and not op.comm:
            yield from self._match_seq(op, list(pat.args), pieces, ppos, spos,
                                       0, 0, id_pos)
        else:
            yield from self._match_multiset(op, pat, pieces, ppos, spos, id_pos)
        if load_bearing:
            del self.skeleton[ppos]

    def _match_args(self, pats, subjs, ppos, spos, i) -> Iterator[None]:
        if i == len(pats):
            yield None
            return
        for _ in self.match(pats[i], subjs[i], ppos + (i + 1,), spos + (i + 1,)):
            yield from self._match_args(pats, subjs, ppos, spos, i + 1)

    def _match_seq(self, op, pats, pieces, ppos, spos, pi, si,
                   id_pos=None) -> Iterator[None]:
        """Associative (ordered) matching: consecutive blocks per pattern child."""
        if pi == len(pats):
            if si == len(pieces):
                yield None
            return
        p = pats[pi]
        cpos = ppos + (pi + 1,)
        if isinstance(p, (Var, Fresh, Wildcard)):
            # wildcards stand for actual subterms, never for nothing
            min_len = 0 if op.identity is not None and \
                not isinstance(p, Wildcard) else 1
            remaining_pats = len(pats) - pi - 1
            max_len = len(pieces) - si - (0 if op.identity is not None
                                          else remaining_pats)
            for n in range(min_len, max_len + 1):
                if not self.bound.tick():
                    return
                image, zone = self._block_image(op, pieces[si:si + n], spos,
                                                id_pos)
                for _ in self._bind(p, image, zone):
                    yield from self._match_seq(op, pats, pieces, ppos, spos,
                                               pi + 1, si + n, id_pos)
        else:
            if si >= len(pieces):
                return
            t, sp = pieces[si]
            for _ in self.match(p, t, cpos, sp):
                yield from self._match_seq(op, pats, pieces, ppos, spos,
                                           pi + 1, si + 1, id_pos)

    def _match_multiset(self, op, pat: App, pieces, ppos, spos,
                        id_pos=None) -> Iterator[None]:
        nonvars = [(i, p) for i, p in enumerate(pat.args)
                   if not isinstance(p, (Var, Fresh, Wildcard))]
        vars_ = [(i, p) for i, p in enumerate(pat.args)
                 if isinstance(p, (Var, Fresh, Wildcard))]
        if op.identity is None:
            if len(pieces) < len(pat.args):
                return
            if len(pieces) > len(pat.args) and not op.assoc:
                return
        used: set[int] = set()

        def assign_nonvars(k: int) -> Iterator[None]:
            if k == len(nonvars):
                yield from distribute(0, sorted(set(range(len(pieces))) - used))
                return
            idx, p = nonvars[k]
            for j, (t, sp) in enumerate(pieces):
                if j in used:
                    continue
                if not self.bound.tick():
                    return
                used.add(j)
                for _ in self.match(p, t, ppos + (idx + 1,), sp):
                    yield from assign_nonvars(k + 1)
                used.discard(j)

        def distribute(k: int, remaining: list[int]) -> Iterator[None]:
            if k == len(vars_):
                if not remaining:
                    yield None
                return
            idx, v = vars_[k]
            bound_img = self.env.get(v) if isinstance(v, (Var, Fresh)) else None
            if bound_img is not None:
                need = self._flat_subject(op, bound_img, ())
                take: list[int] = []
                pool = list(remaining)
                ok = True
                for nt, _ in need:
                    hit = next((j for j in pool if pieces[j][0] == nt), None)
                    if hit is None:
                        ok = False
                        break
                    pool.remove(hit)
                    take.append(hit)
                if not ok:
                    return
                parts = [pieces[j] for j in take]
                image, zone = self._block_image(op, parts, spos, id_pos)
                if image != bound_img:
                    return
                for _ in self._bind(v, image, zone):
                    yield from distribute(k + 1, pool)
                return
            sizes = self._sizes(op, len(remaining), len(vars_) - k - 1,
                                wildcard=isinstance(v, Wildcard))
            for size in sizes:
                for combo in _combinations(remaining, size):
                    if not self.bound.tick():
                        return
                    parts = [pieces[j] for j in combo]
                    image, zone = self._block_image(op, parts, spos, id_pos)
                    if image is None:
                        continue
                    rest = [j for j in remaining if j not in combo]
                    for _ in self._bind(v, image, zone):
                        yield from distribute(k + 1, rest)

        yield from assign_nonvars(0)

    def _sizes(self, op, available: int, vars_after: int,
               wildcard: bool = False):
        lo = 0 if op.identity is not None and not wildcard else 1
        hi = available if op.assoc else min(available, 1)
        if op.identity is None:
            hi = min(hi, available - vars_after)
        return list(range(lo, hi + 1))

    def snapshot(self) -> Match:
        zones = {v: [tuple(z) for z in zs] for v, zs in self.zones.items() if zs}
        return Match(dict(self.env), zones, dict(self.skeleton), dict(self.reported))


def _combinations(items: list[int], size: int):
    if size == 0:
        yield ()
        return
    for i, x in enumerate(items):
        for rest in _combinations(items[i + 1:], size - 1):
            yield (x,) + rest


def match_modulo(pattern: Term, subject: Term, module: ProgramModule,
                 limit: int = DEFAULT_ASSIGNMENT_BOUND) -> MatchList:
    """All matchers of `pattern` against ground-treated `subject`, modulo axioms."""
    bound = _Bound(limit)
    m = _Matcher(module, bound)
    out = MatchList()
    seen = set()
    for _ in m.match(pattern, subject, (), ()):
        snap = m.snapshot()
        k = snap.key()
        if k not in seen:
            seen.add(k)
            out.append(snap)
    out.truncated = bound.truncated
    return out


def matches(pattern: Term, subject: Term, module: ProgramModule) -> bool:
    return bool(match_modulo(pattern, subject, module))
