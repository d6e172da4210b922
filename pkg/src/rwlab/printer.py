"""Canonical text rendering of terms, rules, and assertions.

The grammar is fixed, so the printer carries a fixed precedence table; output
re-parses to the same canonical term.  `render_with_spans` additionally
reports the byte span of every subterm so clients can map clicks back to
positions without a term parser.
"""

from __future__ import annotations

from .terms import (App, Fresh, Hole, Int, Position, Qid, Term, Var, Wildcard)

ATOM = 10

_PRECEDENCE = {
    "_:_|_|_": 0,
    "_,_": 1,
    "_implies_": 2,
    "_or_": 3,
    "_and_": 4,
    "not_": 5,
    "_<_": 6, "_<=_": 6, "_>_": 6, "_>=_": 6, "_==_": 6, "_=/=_": 6,
    "_+_": 7, "_-_": 7,
    "_*_": 8, "_rem_": 8,
    "-_": 9,
}

_RIGHT_ASSOC = {"_implies_"}
_NON_ASSOC = {"_<_", "_<=_", "_>_", "_>=_", "_==_", "_=/=_"}


def _mixfix_pieces(name: str) -> list[str]:
    return name.split("_")


class _Renderer:
    def __init__(self, var_sorts: bool):
        self.var_sorts = var_sorts
        self.chunks: list[str] = []
        self.spans: list[tuple[Position, int, int]] = []

    def emit(self, text: str):
        self.chunks.append(text)

    @property
    def offset(self) -> int:
        return sum(len(c) for c in self.chunks)

    def term(self, t: Term, level: int, pos: Position):
        start = self.offset
        if isinstance(t, App) and t.args:
            self._app(t, level, pos)
        else:
            self.emit(self._leaf(t))
        self.spans.append((pos, start, self.offset))

    def _leaf(self, t: Term) -> str:
        if isinstance(t, Var):
            prefix = "#" if t.masked else ""
            if self.var_sorts:
                return f"{prefix}{t.name}:{t.sort}"
            return f"{prefix}{t.name}"
        if isinstance(t, Fresh):
            return f"%{t.index}"
        if isinstance(t, Hole):
            return "•"
        if isinstance(t, Wildcard):
            return "?" if t.reported else "_"
        if isinstance(t, Int):
            return str(t.value)
        if isinstance(t, Qid):
            return f"'{t.name}"
        if isinstance(t, App):
            return t.op.name
        raise TypeError(f"unrenderable {t!r}")

    def _app(self, t: App, level: int, pos: Position):
        name = t.op.name
        if name == "if_then_else_fi":
            self.emit("if ")
            self.term(t.args[0], 0, pos + (1,))
            self.emit(" then ")
            self.term(t.args[1], 0, pos + (2,))
            self.emit(" else ")
            self.term(t.args[2], 0, pos + (3,))
            self.emit(" fi")
            return
        if name == "-_":
            arg = t.args[0]
            if isinstance(arg, Int):
                self.emit(f"-{arg.value}")
                self.spans.append((pos + (1,), self.offset - len(str(arg.value)),
                                   self.offset))
                return
            self.emit("- ")
            self.term(arg, _PRECEDENCE["-_"], pos + (1,))
            return
        if name == "not_":
            self.emit("not ")
            self.term(t.args[0], _PRECEDENCE["not_"], pos + (1,))
            return
        if "_" not in name:
            self.emit(name)
            self.emit("(")
            for i, a in enumerate(t.args, start=1):
                if i > 1:
                    self.emit(",")
                self.term(a, _PRECEDENCE["_,_"] + 1, pos + (i,))
            self.emit(")")
            return
        self._infix(t, level, pos)

    def _infix(self, t: App, level: int, pos: Position):
        name = t.op.name
        prec = _PRECEDENCE.get(name, 6)
        wrap = prec < level
        if wrap:
            self.emit("(")
        if name == "_,_":
            for i, a in enumerate(t.args, start=1):
                if i > 1:
                    self.emit(",")
                self.term(a, prec + 1, pos + (i,))
        elif name == "_:_|_|_":
            seps = [" : ", " | ", " | "]
            for i, a in enumerate(t.args, start=1):
                if i > 1:
                    self.emit(seps[i - 2])
                self.term(a, prec + 1, pos + (i,))
        else:
            pieces = _mixfix_pieces(name)
            n = len(t.args)
            # Flattened assoc chains render left-associatively; only the
            # first child of a left-assoc chain may repeat the operator.
            for i, a in enumerate(t.args, start=1):
                if i > 1:
                    self.emit(f" {pieces[i - 1] or pieces[1]} ")
                if name in _NON_ASSOC:
                    child = prec + 1
                elif name in _RIGHT_ASSOC:
                    child = prec if i == n else prec + 1
                else:
                    child = prec if i == 1 else prec + 1
                self.term(a, child, pos + (i,))
        if wrap:
            self.emit(")")


def render(t: Term, var_sorts: bool = True) -> str:
    r = _Renderer(var_sorts)
    r.term(t, 0, ())
    return "".join(r.chunks)


def render_with_spans(t: Term, var_sorts: bool = True):
    """Render and return (text, [(position, start, end), ...]) sorted by position."""
    r = _Renderer(var_sorts)
    r.term(t, 0, ())
    return "".join(r.chunks), sorted(r.spans)


def render_condition(condition) -> str:
    return " /\\ ".join(render(c, var_sorts=False) for c in condition)


def render_rule(rule) -> str:
    head = f"crl [{rule.label}] : " if rule.is_conditional() else f"rl [{rule.label}] : "
    text = head + render(rule.lhs, var_sorts=False) + " => " + \
        render(rule.rhs, var_sorts=False)
    if rule.is_conditional():
        text += " if " + render_condition(rule.condition)
    return text + " ."


def render_equation(eq) -> str:
    head = f"ceq [{eq.label}] : " if eq.condition else f"eq [{eq.label}] : "
    text = head + render(eq.lhs, var_sorts=False) + " = " + render(eq.rhs, var_sorts=False)
    if eq.condition:
        text += " if " + render_condition(eq.condition)
    if eq.owise:
        text += " [owise]"
    return text + " ."
