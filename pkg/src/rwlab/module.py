"""Program modules: signature, rules, oriented equations, and built-ins.

A signature is a set of sorts with a declared-subsort compatibility relation
(no least-sort inference) plus operator declarations indexed by name and
arity.  The built-in prelude provides integers, booleans, comparisons and
`if_then_else_fi`; built-in operators are trusted by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .terms import App, Fresh, Hole, Int, OperatorDecl, Qid, Term, TermError, Var, Wildcard

ANY_SORT = "Any"

BUILTIN_SORTS = ("Bool", "Nat", "Int", "Qid")


class ModuleError(TermError):
    pass


@dataclass
class Rule:
    label: str
    lhs: Term
    rhs: Term
    condition: tuple[Term, ...] = ()

    def is_conditional(self) -> bool:
        return bool(self.condition)


@dataclass
class Equation:
    label: str
    lhs: Term
    rhs: Term
    condition: tuple[Term, ...] = ()
    owise: bool = False


class Signature:
    def __init__(self):
        self.sorts: set[str] = set(BUILTIN_SORTS) | {ANY_SORT}
        self._subsorts: set[tuple[str, str]] = {("Nat", "Int")}
        self.ops: dict[tuple[str, int], list[OperatorDecl]] = {}
        self._closure: Optional[set[tuple[str, str]]] = None

    def declare_sort(self, name: str):
        self.sorts.add(name)

    def declare_subsort(self, sub: str, sup: str):
        for s in (sub, sup):
            if s not in self.sorts:
                raise ModuleError(f"unknown sort {s}")
        self._subsorts.add((sub, sup))
        self._closure = None

    def declare_op(self, decl: OperatorDecl) -> OperatorDecl:
        for s in decl.arg_sorts + (decl.result_sort,):
            if s not in self.sorts:
                raise ModuleError(f"operator {decl.name}: unknown sort {s}")
        bucket = self.ops.setdefault(decl.key(), [])
        for existing in bucket:
            if existing.arg_sorts == decl.arg_sorts and \
                    existing.result_sort == decl.result_sort:
                raise ModuleError(f"duplicate operator {decl.name}/{decl.arity}")
        bucket.append(decl)
        return decl

    def _subsort_closure(self) -> set[tuple[str, str]]:
        if self._closure is None:
            closure = set(self._subsorts)
            changed = True
            while changed:
                changed = False
                for a, b in list(closure):
                    for c, d in list(closure):
                        if b == c and (a, d) not in closure:
                            closure.add((a, d))
                            changed = True
            self._closure = closure
        return self._closure

    def leq(self, sub: str, sup: str) -> bool:
        """Sort compatibility: equality, declared subsort, or the Any sort."""
        if sub == sup or ANY_SORT in (sub, sup):
            return True
        return (sub, sup) in self._subsort_closure()

    def find_ops(self, name: str, arity: int) -> list[OperatorDecl]:
        return self.ops.get((name, arity), [])

    def find_op(self, name: str, arity: int) -> Optional[OperatorDecl]:
        ops = self.find_ops(name, arity)
        return ops[0] if ops else None

    def sort_of(self, t: Term) -> str:
        if isinstance(t, Int):
            return "Nat"
        if isinstance(t, Qid):
            return "Qid"
        if isinstance(t, Var):
            return t.sort
        if isinstance(t, (Fresh, Hole, Wildcard)):
            return ANY_SORT
        if isinstance(t, App):
            return t.op.result_sort
        raise ModuleError(f"no sort for {t!r}")

    def fits(self, t: Term, sort: str) -> bool:
        return self.leq(self.sort_of(t), sort)


def _mk(sig: Signature, name, args, res, **kw) -> OperatorDecl:
    return sig.declare_op(OperatorDecl(name, tuple(args), res, builtin=True,
                                       trusted=True, **kw))


def builtin_signature() -> Signature:
    sig = Signature()
    _mk(sig, "true", [], "Bool")
    _mk(sig, "false", [], "Bool")
    for op in ("_+_", "_-_", "_*_", "_rem_"):
        _mk(sig, op, ["Int", "Int"], "Int")
    _mk(sig, "-_", ["Int"], "Int")
    for op in ("_<_", "_<=_", "_>_", "_>=_"):
        _mk(sig, op, ["Int", "Int"], "Bool")
    _mk(sig, "_==_", [ANY_SORT, ANY_SORT], "Bool")
    _mk(sig, "_=/=_", [ANY_SORT, ANY_SORT], "Bool")
    for op in ("_and_", "_or_", "_implies_"):
        _mk(sig, op, ["Bool", "Bool"], "Bool")
    _mk(sig, "not_", ["Bool"], "Bool")
    _mk(sig, "if_then_else_fi", ["Bool", ANY_SORT, ANY_SORT], ANY_SORT)
    return sig


@dataclass
class ProgramModule:
    signature: Signature = field(default_factory=builtin_signature)
    rules: list[Rule] = field(default_factory=list)
    equations: list[Equation] = field(default_factory=list)
    var_decls: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self._eqs_by_symbol: dict[tuple[str, int], list[Equation]] = {}
        for eq in self.equations:
            self._index_equation(eq)

    def _index_equation(self, eq: Equation):
        lhs = eq.lhs
        if not isinstance(lhs, App):
            raise ModuleError(f"equation {eq.label}: left side must be an application")
        self._eqs_by_symbol.setdefault(lhs.op.key(), []).append(eq)

    def add_rule(self, rule: Rule):
        if any(r.label == rule.label for r in self.rules) or \
           any(e.label == rule.label for e in self.equations):
            raise ModuleError(f"duplicate label {rule.label}")
        _check_rule_vars(rule.label, rule.lhs, rule.rhs, rule.condition)
        self.rules.append(rule)

    def add_equation(self, eq: Equation):
        if any(r.label == eq.label for r in self.rules) or \
           any(e.label == eq.label for e in self.equations):
            raise ModuleError(f"duplicate label {eq.label}")
        _check_rule_vars(eq.label, eq.lhs, eq.rhs, eq.condition)
        self.equations.append(eq)
        self._index_equation(eq)

    def equations_for(self, op: OperatorDecl) -> list[Equation]:
        return self._eqs_by_symbol.get(op.key(), [])

    def rule_by_label(self, label: str) -> Rule:
        for r in self.rules:
            if r.label == label:
                return r
        raise ModuleError(f"no rule labeled {label}")

    def equation_by_label(self, label: str) -> Equation:
        for e in self.equations:
            if e.label == label:
                return e
        raise ModuleError(f"no equation labeled {label}")

    def bool_true(self) -> Term:
        return App(self.signature.find_op("true", 0), ())

    def bool_false(self) -> Term:
        return App(self.signature.find_op("false", 0), ())


def _check_rule_vars(label: str, lhs: Term, rhs: Term, condition: tuple[Term, ...]):
    if isinstance(lhs, (Var, Fresh)):
        raise ModuleError(f"{label}: left side must not be a variable")
    lhs_vars = set(lhs.variables())
    used = set(rhs.variables())
    for c in condition:
        used.update(c.variables())
    extra = used - lhs_vars
    if extra:
        names = ", ".join(sorted(repr(v) for v in extra))
        raise ModuleError(f"{label}: right side/condition variables not in left side: {names}")
