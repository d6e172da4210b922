"""Terms over a user-declared signature, kept in a canonical flattened form.

Operators may carry `assoc`, `comm`, and `identity` attributes.  Every public
constructor and editing helper returns canonical terms:

* arguments of an associative operator are flattened (no nested child with the
  same operator, always >= 2 children),
* arguments of a commutative operator are sorted by a total term order,
* identity elements never appear as arguments of their own operator.

Positions are 1-based paths into the flattened representation; the empty path
is the root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

Position = tuple[int, ...]

ROOT: Position = ()

HOLE_GLYPH = "•"

# Opaque wrapper used by test oracles; terms wrapped by an operator with this
# name keep the ordering key of their argument so masking a subterm does not
# shift sibling order inside commutative operators.
OPAQUE_WRAPPER = "~opaque~"


class TermError(Exception):
    """Malformed term construction or an invalid position."""


class InvalidPosition(TermError):
    pass


class SortMismatch(TermError):
    pass


@dataclass(frozen=True)
class OperatorDecl:
    """A declared operator: name, argument sorts, result sort, attributes."""

    name: str
    arg_sorts: tuple[str, ...]
    result_sort: str
    assoc: bool = False
    comm: bool = False
    identity: Optional["Term"] = None
    trusted: bool = False
    builtin: bool = False

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    def __post_init__(self):
        if self.assoc:
            if self.arity != 2 or self.arg_sorts[0] != self.arg_sorts[1]:
                raise TermError(
                    f"operator {self.name} declared assoc but is not binary "
                    "over a uniform argument sort")
        if self.identity is not None and not self.assoc and not self.comm:
            raise TermError(f"operator {self.name}: identity needs assoc/comm")

    def key(self) -> tuple[str, int]:
        return (self.name, self.arity)

    def __repr__(self):
        return f"op({self.name}/{self.arity})"


class Term:
    """Base class; concrete terms are Var, Fresh, Hole, Wildcard, Int, Qid, App."""

    __slots__ = ("_hash",)

    def subterm_at(self, pos: Position) -> "Term":
        t = self
        for i in pos:
            if not isinstance(t, App) or not (1 <= i <= len(t.args)):
                raise InvalidPosition(f"position {'.'.join(map(str, pos))} not in term")
            t = t.args[i - 1]
        return t

    def positions(self, prefix: Position = ()) -> Iterator[Position]:
        yield prefix
        if isinstance(self, App):
            for i, a in enumerate(self.args, start=1):
                yield from a.positions(prefix + (i,))

    def size(self) -> int:
        if isinstance(self, App):
            return 1 + sum(a.size() for a in self.args)
        return 1

    def depth(self) -> int:
        if isinstance(self, App) and self.args:
            return 1 + max(a.depth() for a in self.args)
        return 1

    def variables(self) -> list[Union["Var", "Fresh"]]:
        out, seen = [], set()
        for p in self.positions():
            t = self.subterm_at(p)
            if isinstance(t, (Var, Fresh)) and t not in seen:
                seen.add(t)
                out.append(t)
        return out

    def is_ground(self) -> bool:
        return not any(isinstance(self.subterm_at(p), (Var, Fresh, Hole, Wildcard))
                       for p in self.positions())

    def __hash__(self):
        h = getattr(self, "_hash", None)
        if h is None:
            h = self._compute_hash()
            object.__setattr__(self, "_hash", h)
        return h

    def _compute_hash(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class Var(Term):
    """A named variable with a sort; `masked` marks names written with '#'."""

    name: str
    sort: str
    masked: bool = False

    def _compute_hash(self):
        return hash(("var", self.name, self.sort, self.masked))

    def __repr__(self):
        return f"{'#' if self.masked else ''}{self.name}:{self.sort}"


@dataclass(frozen=True, eq=True)
class Fresh(Term):
    """A fresh unification variable, rendered %n."""

    index: int

    @property
    def sort(self) -> str:
        return "Any"

    def _compute_hash(self):
        return hash(("fresh", self.index))

    def __repr__(self):
        return f"%{self.index}"


@dataclass(frozen=True, eq=True)
class Hole(Term):
    """Masked-out content in a trace slice."""

    def _compute_hash(self):
        return hash("hole")

    def __repr__(self):
        return HOLE_GLYPH


@dataclass(frozen=True, eq=True)
class Wildcard(Term):
    """Query wildcards: '_' (hidden) or '?' (reported, numbered)."""

    reported: bool
    index: int = 0

    def _compute_hash(self):
        return hash(("wild", self.reported, self.index))

    def __repr__(self):
        return "?" if self.reported else "_"


@dataclass(frozen=True, eq=True)
class Int(Term):
    """A non-negative integer literal; negatives are built with unary minus."""

    value: int

    def __post_init__(self):
        if self.value < 0:
            raise TermError("negative literals are applications of unary -")

    def _compute_hash(self):
        return hash(("int", self.value))

    def __repr__(self):
        return str(self.value)


@dataclass(frozen=True, eq=True)
class Qid(Term):
    """A quoted identifier constant, e.g. 'T1."""

    name: str

    def _compute_hash(self):
        return hash(("qid", self.name))

    def __repr__(self):
        return f"'{self.name}"


@dataclass(frozen=True, eq=True)
class App(Term):
    op: OperatorDecl
    args: tuple[Term, ...] = field(default_factory=tuple)

    def _compute_hash(self):
        return hash(("app", self.op.name, self.op.arity, self.args))

    def __repr__(self):
        if not self.args:
            return self.op.name
        return f"{self.op.name}({', '.join(map(repr, self.args))})"


def order_key(t: Term):
    """Total order used for commutative-argument canonicalization.

    Applications sort by (name, arity, argument keys); variables sort last,
    by name.  The opaque test wrapper inherits its argument's key so masking
    does not reorder siblings.
    """
    if isinstance(t, App):
        if t.op.name == OPAQUE_WRAPPER and len(t.args) == 1:
            return order_key(t.args[0])
        return ((0, t.op.name, t.op.arity),) + tuple(
            k for a in t.args for k in order_key(a))
    if isinstance(t, Int):
        return ((1, "", t.value),)
    if isinstance(t, Qid):
        return ((2, t.name, 0),)
    if isinstance(t, Hole):
        return ((6, "", 0),)
    if isinstance(t, Wildcard):
        return ((7, "?" if t.reported else "_", t.index),)
    if isinstance(t, Fresh):
        return ((8, "", t.index),)
    if isinstance(t, Var):
        return ((9, t.name, t.sort),)
    raise TermError(f"unorderable term {t!r}")


def canonical(t: Term) -> Term:
    """Return the canonical form of `t` (flattened, sorted, identity-free)."""
    if not isinstance(t, App):
        return t
    args = [canonical(a) for a in t.args]
    return _canonical_app(t.op, args)


def _canonical_app(op: OperatorDecl, args: list[Term]) -> Term:
    if op.assoc:
        flat: list[Term] = []
        for a in args:
            if isinstance(a, App) and a.op.key() == op.key():
                flat.extend(a.args)
            else:
                flat.append(a)
        args = flat
    if op.identity is not None:
        args = [a for a in args if a != op.identity]
        if not args:
            return op.identity
        if len(args) == 1 and op.assoc:
            return args[0]
    if op.comm:
        args = sorted(args, key=order_key)
    return App(op, tuple(args))


def make_app(op: OperatorDecl, args: list[Term]) -> Term:
    """Build a canonical application from canonical arguments."""
    return _canonical_app(op, list(args))


def replace_at(t: Term, pos: Position, sub: Term) -> Term:
    """Return t with the subterm at `pos` replaced by `sub`, re-canonicalized.

    Replacement can flatten into the parent or collapse identities, so the
    result's positions need not superimpose on the input's.
    """
    if not pos:
        return canonical(sub)
    if not isinstance(t, App) or not (1 <= pos[0] <= len(t.args)):
        raise InvalidPosition(f"position {'.'.join(map(str, pos))} not in term")
    i = pos[0] - 1
    args = list(t.args)
    args[i] = replace_at(args[i], pos[1:], sub)
    return _canonical_app(t.op, args)


Subst = dict[Union[Var, Fresh], Term]


def substitute(t: Term, sigma: Subst) -> Term:
    """Apply a substitution and re-canonicalize."""
    if isinstance(t, (Var, Fresh)):
        return sigma.get(t, t)
    if isinstance(t, App):
        return _canonical_app(t.op, [substitute(a, sigma) for a in t.args])
    return t


def compose(sigma: Subst, update: Subst) -> Subst:
    """sigma;update -- apply `update` to sigma's images, then add new bindings."""
    out: Subst = {v: substitute(img, update) for v, img in sigma.items()}
    for v, img in update.items():
        out.setdefault(v, img)
    return out


def occurs_in(v: Union[Var, Fresh], t: Term) -> bool:
    if t == v:
        return True
    if isinstance(t, App):
        return any(occurs_in(v, a) for a in t.args)
    return False


def is_idempotent(sigma: Subst) -> bool:
    return not any(occurs_in(v, img) for v in sigma for img in sigma.values())


def render_position(pos: Position) -> str:
    return "Λ" if not pos else ".".join(str(i) for i in pos)


def parse_position(text: str) -> Position:
    text = text.strip()
    if text in ("", "Λ"):
        return ()
    return tuple(int(p) for p in text.split("."))


def ancestors(pos: Position) -> Iterator[Position]:
    for k in range(len(pos)):
        yield pos[:k]


def ancestor_closure(positions: set[Position]) -> set[Position]:
    out = set(positions)
    for p in positions:
        out.update(ancestors(p))
    return out


def subtree_positions(t: Term, root: Position) -> set[Position]:
    sub = t.subterm_at(root)
    return {root + p for p in sub.positions()}
