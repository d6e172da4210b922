"""Parser for the Maude-like surface language.

Covers program files (sort/subsort/op/var declarations, rl/crl/eq/ceq with
labels and `owise`), assertion files, plain terms, and query patterns.  The
mixfix grammar is fixed: one `_:_|_|_` state constructor, `_,_` collections,
arithmetic/comparison/boolean operators, `if_then_else_fi`.

Overloaded names (several `_,_` instances, one `empty` per collection sort)
are resolved by sort compatibility, using the expected sort where the context
provides one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .module import ANY_SORT, Equation, ModuleError, ProgramModule, Rule, Signature
from .terms import (App, Fresh, Hole, Int, OperatorDecl, Qid, Term, Var,
                    Wildcard, canonical, make_app)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


_SYMBOLS = ["=/=", "==", "=>", "->", "<=", ">=", "/\\", "(", ")", "{", "}",
            "[", "]", ",", "|", ":", "<", ">", "=", "+", "-", "*", "_", "?",
            "•"]

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9'\-]*")
_SORT_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*(\{[A-Za-z][A-Za-z0-9]*\})?")


@dataclass
class Token:
    kind: str  # int, qid, var, ident, sym, fresh, masked, end
    text: str
    value: object
    line: int
    col: int


class Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1
        self._peeked: list[Token] = []

    def _advance(self, n: int):
        for ch in self.text[self.pos:self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def _skip_space(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in " \t\r\n":
                self._advance(1)
            elif self.text.startswith("***", self.pos):
                end = self.text.find("\n", self.pos)
                self._advance((end if end != -1 else len(self.text)) - self.pos)
            else:
                return

    def raw_word(self) -> Token:
        """Read a whitespace-delimited word, bypassing tokenization (op names)."""
        if self._peeked:
            raise ParseError("internal: raw_word after peek")
        self._skip_space()
        line, col = self.line, self.col
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in " \t\r\n":
            self._advance(1)
        if start == self.pos:
            raise ParseError("unexpected end of input", line, col)
        return Token("ident", self.text[start:self.pos], None, line, col)

    def _lex(self) -> Token:
        self._skip_space()
        line, col = self.line, self.col
        if self.pos >= len(self.text):
            return Token("end", "", None, line, col)
        ch = self.text[self.pos]
        if ch.isdigit():
            m = re.match(r"\d+", self.text[self.pos:])
            self._advance(len(m.group()))
            return Token("int", m.group(), int(m.group()), line, col)
        if ch == "'":
            m = re.match(r"'[A-Za-z0-9][A-Za-z0-9\-]*", self.text[self.pos:])
            if not m:
                raise ParseError("malformed quoted identifier", line, col)
            self._advance(len(m.group()))
            return Token("qid", m.group(), m.group()[1:], line, col)
        if ch == "%":
            m = re.match(r"%\d+", self.text[self.pos:])
            if not m:
                raise ParseError("malformed %n variable", line, col)
            self._advance(len(m.group()))
            return Token("fresh", m.group(), int(m.group()[1:]), line, col)
        if ch == "#":
            m = re.match(r"#([A-Za-z][A-Za-z0-9'\-]*):", self.text[self.pos:])
            if not m:
                raise ParseError("malformed #-variable (expecting #Name:Sort)", line, col)
            sm = _SORT_RE.match(self.text, self.pos + len(m.group()))
            if not sm:
                raise ParseError("malformed sort in #-variable", line, col)
            self._advance(sm.end() - self.pos)
            return Token("masked", m.group() + sm.group(), (m.group(1), sm.group()),
                         line, col)
        m = _IDENT_RE.match(self.text, self.pos)
        if m and not self.text.startswith("_", self.pos):
            name = m.group()
            after = m.end()
            # Name:Sort glued together is a single on-the-fly variable token.
            if after < len(self.text) and self.text[after] == ":":
                sm = _SORT_RE.match(self.text, after + 1)
                if sm:
                    self._advance(sm.end() - self.pos)
                    return Token("var", f"{name}:{sm.group()}", (name, sm.group()),
                                 line, col)
            self._advance(len(name))
            return Token("ident", name, None, line, col)
        if self.text.startswith(".", self.pos):
            nxt = self.text[self.pos + 1:self.pos + 2]
            if nxt == "" or nxt in " \t\r\n)":
                self._advance(1)
                return Token("sym", ".", None, line, col)
        for sym in _SYMBOLS:
            if self.text.startswith(sym, self.pos):
                self._advance(len(sym))
                return Token("sym", sym, None, line, col)
        raise ParseError(f"unexpected character {ch!r}", line, col)

    def peek(self, k: int = 0) -> Token:
        while len(self._peeked) <= k:
            self._peeked.append(self._lex())
        return self._peeked[k]

    def next(self) -> Token:
        if self._peeked:
            return self._peeked.pop(0)
        return self._lex()

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text


# --- term AST prior to operator resolution -------------------------------

@dataclass
class Node:
    kind: str  # app, comma, state, int, qid, var, fresh, hole, wild
    line: int
    col: int
    name: str = ""
    children: tuple["Node", ...] = ()
    value: object = None


class TermParser:
    """Precedence-climbing parser producing unresolved Nodes."""

    _CMP = {"<", "<=", ">", ">=", "==", "=/="}

    def __init__(self, lex: Lexer, mode: str, allow_fresh: bool):
        self.lex = lex
        self.mode = mode
        self.allow_fresh = allow_fresh

    def _node(self, kind, tok, **kw) -> Node:
        return Node(kind, tok.line, tok.col, **kw)

    def term(self) -> Node:
        return self.state()

    def state(self) -> Node:
        left = self.comma()
        if self.lex.at(":"):
            tok = self.lex.next()
            parts = [left, self.comma()]
            for _ in range(2):
                self.lex.expect("|")
                parts.append(self.comma())
            return self._node("state", tok, name="_:_|_|_", children=tuple(parts))
        return left

    def comma(self) -> Node:
        parts = [self.implies()]
        while self.lex.at(","):
            tok = self.lex.next()
            parts.append(self.implies())
        if len(parts) == 1:
            return parts[0]
        return Node("comma", parts[0].line, parts[0].col, name="_,_",
                    children=tuple(parts))

    def implies(self) -> Node:
        left = self.disj()
        if self.lex.peek().text == "implies":
            tok = self.lex.next()
            right = self.implies()
            return self._node("app", tok, name="_implies_", children=(left, right))
        return left

    def disj(self) -> Node:
        left = self.conj()
        while self.lex.peek().text == "or":
            tok = self.lex.next()
            left = self._node("app", tok, name="_or_", children=(left, self.conj()))
        return left

    def conj(self) -> Node:
        left = self.neg()
        while self.lex.peek().text == "and":
            tok = self.lex.next()
            left = self._node("app", tok, name="_and_", children=(left, self.neg()))
        return left

    def neg(self) -> Node:
        if self.lex.peek().text == "not":
            tok = self.lex.next()
            return self._node("app", tok, name="not_", children=(self.neg(),))
        return self.cmp()

    def cmp(self) -> Node:
        left = self.add()
        if self.lex.peek().text in self._CMP:
            tok = self.lex.next()
            return self._node("app", tok, name=f"_{tok.text}_",
                              children=(left, self.add()))
        return left

    def add(self) -> Node:
        left = self.mul()
        while self.lex.peek().text in ("+", "-"):
            tok = self.lex.next()
            left = self._node("app", tok, name=f"_{tok.text}_",
                              children=(left, self.mul()))
        return left

    def mul(self) -> Node:
        left = self.unary()
        while self.lex.peek().text in ("*", "rem"):
            tok = self.lex.next()
            left = self._node("app", tok, name=f"_{tok.text}_",
                              children=(left, self.unary()))
        return left

    def unary(self) -> Node:
        if self.lex.at("-"):
            tok = self.lex.next()
            return self._node("app", tok, name="-_", children=(self.unary(),))
        return self.atom()

    def atom(self) -> Node:
        tok = self.lex.peek()
        if tok.kind == "int":
            self.lex.next()
            return self._node("int", tok, value=tok.value)
        if tok.kind == "qid":
            self.lex.next()
            return self._node("qid", tok, value=tok.value)
        if tok.kind == "var":
            self.lex.next()
            return self._node("var", tok, value=(tok.value[0], tok.value[1], False))
        if tok.kind == "masked":
            self.lex.next()
            return self._node("var", tok, value=(tok.value[0], tok.value[1], True))
        if tok.kind == "fresh":
            if not self.allow_fresh:
                raise ParseError("%n variables are internal and not allowed here",
                                 tok.line, tok.col)
            self.lex.next()
            return self._node("fresh", tok, value=tok.value)
        if tok.text == "•":
            if self.mode != "slice":
                raise ParseError("• is only valid in slice renderings",
                                 tok.line, tok.col)
            self.lex.next()
            return self._node("hole", tok)
        if tok.text in ("_", "?"):
            if self.mode != "query":
                raise ParseError(f"{tok.text!r} wildcard only valid in queries",
                                 tok.line, tok.col)
            self.lex.next()
            return self._node("wild", tok, value=(tok.text == "?"))
        if tok.text == "(":
            self.lex.next()
            inner = self.term()
            self.lex.expect(")")
            return inner
        if tok.text == "if":
            self.lex.next()
            guard = self.term()
            self.lex.expect("then")
            then = self.term()
            self.lex.expect("else")
            other = self.term()
            self.lex.expect("fi")
            return self._node("app", tok, name="if_then_else_fi",
                              children=(guard, then, other))
        if tok.kind == "ident":
            self.lex.next()
            if self.lex.at("("):
                self.lex.next()
                args = [self.implies()]
                while self.lex.at(","):
                    self.lex.next()
                    args.append(self.implies())
                self.lex.expect(")")
                return self._node("app", tok, name=tok.text, children=tuple(args))
            return self._node("app", tok, name=tok.text)
        raise ParseError(f"unexpected token {tok.text or 'end of input'!r}",
                         tok.line, tok.col)


class Resolver:
    """Resolve Nodes to canonical Terms against a signature, by sorts."""

    def __init__(self, module: ProgramModule, local_vars: dict[str, Var]):
        self.module = module
        self.sig = module.signature
        self.local_vars = local_vars
        self.question_count = 0

    def resolve(self, node: Node, expected: str) -> Term:
        candidates = self._candidates(node, expected)
        if not candidates:
            raise ParseError(self._why(node, expected), node.line, node.col)
        uniq: list[Term] = []
        for c in candidates:
            if c not in uniq:
                uniq.append(c)
        if len(uniq) > 1:
            raise ParseError(f"ambiguous term (could have sorts "
                             f"{sorted(self.sig.sort_of(t) for t in uniq)})",
                             node.line, node.col)
        return uniq[0]

    def _why(self, node: Node, expected: str) -> str:
        if node.kind == "app" and not node.children and \
                node.name not in self.local_vars and \
                node.name not in self.module.var_decls and \
                not self.sig.find_ops(node.name, 0):
            return f"unknown identifier {node.name!r}"
        if node.kind == "app" and node.children and \
                not self.sig.find_ops(node.name, len(node.children)):
            return f"unknown operator {node.name}/{len(node.children)}"
        return f"no parse of this term with sort {expected}"

    def _candidates(self, node: Node, expected: str) -> list[Term]:
        out: list[Term] = []
        if node.kind == "int":
            out = [Int(node.value)]
        elif node.kind == "qid":
            out = [Qid(node.value)]
        elif node.kind == "fresh":
            out = [Fresh(node.value)]
        elif node.kind == "hole":
            out = [Hole()]
        elif node.kind == "wild":
            if node.value:
                self.question_count += 1
                out = [Wildcard(True, self.question_count)]
            else:
                out = [Wildcard(False)]
        elif node.kind == "var":
            name, sort, masked = node.value
            if sort not in self.sig.sorts:
                raise ParseError(f"unknown sort {sort}", node.line, node.col)
            prev = self.local_vars.get(name)
            if prev is not None and (prev.sort != sort or prev.masked != masked):
                raise ParseError(f"variable {name} used with two sorts",
                                 node.line, node.col)
            v = Var(name, sort, masked)
            self.local_vars[name] = v
            out = [v]
        elif node.kind in ("app", "comma", "state"):
            out = self._app_candidates(node)
        else:
            raise ParseError(f"internal: bad node {node.kind}", node.line, node.col)
        return [t for t in out if self.sig.fits(t, expected)]

    def _app_candidates(self, node: Node) -> list[Term]:
        name, nargs = node.name, len(node.children)
        if node.kind == "app" and nargs == 0:
            v = self.local_vars.get(name)
            if v is None and name in self.module.var_decls:
                v = Var(name, self.module.var_decls[name])
                self.local_vars[name] = v
            out: list[Term] = [v] if v is not None else []
            for op in self.sig.find_ops(name, 0):
                out.append(App(op, ()))
            return out
        if node.kind == "comma":
            # Flattened n-ary comma resolves against binary _,_ declarations.
            return self._fold_overloaded("_,_", node)
        decls = self.sig.find_ops(name, nargs)
        out = []
        for op in decls:
            args = self._args_for(op, node)
            if args is not None:
                out.append(make_app(op, args))
        if not out and nargs > 2:
            # Flattened application of an associative binary operator.
            out = self._fold_overloaded(name, node)
        return out

    def _args_for(self, op: OperatorDecl, node: Node) -> Optional[list[Term]]:
        args = []
        for child, sort in zip(node.children, op.arg_sorts):
            cands = self._candidates(child, sort)
            if len(cands) != 1:
                if not cands:
                    return None
                raise ParseError("ambiguous argument", child.line, child.col)
            args.append(cands[0])
        return args

    def _fold_overloaded(self, name: str, node: Node) -> list[Term]:
        out = []
        for op in self.sig.find_ops(name, 2):
            if name != "_,_" and not op.assoc:
                continue
            sort = op.arg_sorts[0]
            args = []
            ok = True
            for child in node.children:
                cands = self._candidates(child, sort)
                if len(cands) != 1:
                    ok = False
                    break
                args.append(cands[0])
            if ok:
                out.append(make_app(op, args))
        return out


def _parse_one_term(lex: Lexer, module: ProgramModule, mode: str,
                    allow_fresh: bool, local_vars: dict[str, Var],
                    expected: str = ANY_SORT):
    node = TermParser(lex, mode, allow_fresh).term()
    resolver = Resolver(module, local_vars)
    return resolver.resolve(node, expected)


def parse_term(text: str, module: ProgramModule, mode: str = "program",
               allow_fresh: bool = False, expected: str = ANY_SORT) -> Term:
    lex = Lexer(text)
    term = _parse_one_term(lex, module, mode, allow_fresh, {}, expected)
    tok = lex.peek()
    if tok.kind != "end" and tok.text != ".":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return canonical(term)


def parse_query(text: str, module: ProgramModule):
    """Parse a query pattern; '?' wildcards are numbered left to right."""
    lex = Lexer(text)
    node = TermParser(lex, "query", False).term()
    resolver = Resolver(module, {})
    pattern = resolver.resolve(node, ANY_SORT)
    tok = lex.peek()
    if tok.kind != "end" and tok.text != ".":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    has_anchor = any(isinstance(pattern.subterm_at(p), (App, Int, Qid)) or
                     (isinstance(pattern.subterm_at(p), Wildcard) and
                      pattern.subterm_at(p).reported)
                     for p in pattern.positions())
    if not has_anchor:
        raise ParseError("query needs at least one '?' or concrete symbol")
    return canonical(pattern)


# --- program files --------------------------------------------------------

class ProgramParser:
    def __init__(self, text: str):
        self.lex = Lexer(text)
        self.module = ProgramModule()

    def parse(self) -> ProgramModule:
        while self.lex.peek().kind != "end":
            self.statement()
        return self.module

    def statement(self):
        tok = self.lex.peek()
        word = tok.text
        if word in ("sort", "sorts"):
            self.lex.next()
            self._sorts()
        elif word in ("subsort", "subsorts"):
            self.lex.next()
            self._subsorts()
        elif word == "op":
            self.lex.next()
            self._op()
        elif word in ("var", "vars"):
            self.lex.next()
            self._vars()
        elif word in ("rl", "crl"):
            self.lex.next()
            self._rule(conditional=(word == "crl"))
        elif word in ("eq", "ceq"):
            self.lex.next()
            self._equation(conditional=(word == "ceq"))
        else:
            raise ParseError(f"expected a declaration, found {word!r}",
                             tok.line, tok.col)

    def _sorts(self):
        saw = False
        while not self.lex.at("."):
            tok = self.lex.next()
            if tok.kind != "ident" and tok.kind != "var":
                raise ParseError("expected sort name", tok.line, tok.col)
            self.module.signature.declare_sort(self._sort_name(tok))
            saw = True
        self.lex.expect(".")
        if not saw:
            raise ParseError("empty sorts declaration")

    def _sort_name(self, tok: Token) -> str:
        # Set{Stock} lexes as a var token ("Set" ":" would not); handle both.
        if tok.kind == "ident" and self.lex.at("{"):
            self.lex.next()
            inner = self.lex.next()
            self.lex.expect("}")
            return f"{tok.text}{{{inner.text}}}"
        return tok.text

    def _subsorts(self):
        subs = []
        while not self.lex.at("<"):
            subs.append(self._sort_name(self.lex.next()))
        self.lex.expect("<")
        sups = []
        while not self.lex.at("."):
            sups.append(self._sort_name(self.lex.next()))
        self.lex.expect(".")
        try:
            for sub in subs:
                for sup in sups:
                    self.module.signature.declare_subsort(sub, sup)
        except ModuleError as e:
            raise ParseError(str(e))

    def _op(self):
        name_tok = self.lex.raw_word()
        name = name_tok.text
        self.lex.expect(":")
        arg_sorts = []
        while not self.lex.at("->"):
            arg_sorts.append(self._sort_name(self.lex.next()))
        self.lex.expect("->")
        result = self._sort_name(self.lex.next())
        assoc = comm = trusted = False
        identity = None
        if self.lex.at("["):
            self.lex.next()
            while not self.lex.at("]"):
                attr = self.lex.next()
                if attr.text == "assoc":
                    assoc = True
                elif attr.text == "comm":
                    comm = True
                elif attr.text == "trusted":
                    trusted = True
                elif attr.text == "id":
                    self.lex.expect(":")
                    identity = _parse_one_term(self.lex, self.module, "program",
                                               False, {},
                                               arg_sorts[0] if arg_sorts else ANY_SORT)
                    if not identity.is_ground():
                        raise ParseError("identity must be a ground constant",
                                         attr.line, attr.col)
                else:
                    raise ParseError(f"unknown attribute {attr.text!r}",
                                     attr.line, attr.col)
            self.lex.expect("]")
        self.lex.expect(".")
        underscores = name.count("_")
        if underscores and underscores != len(arg_sorts):
            raise ParseError(f"operator {name}: arity mismatch with mixfix name",
                             name_tok.line, name_tok.col)
        try:
            self.module.signature.declare_op(OperatorDecl(
                name, tuple(arg_sorts), result, assoc=assoc, comm=comm,
                identity=identity, trusted=trusted))
        except ModuleError as e:
            raise ParseError(str(e), name_tok.line, name_tok.col)

    def _vars(self):
        names = []
        while not self.lex.at(":"):
            tok = self.lex.next()
            if tok.kind != "ident":
                raise ParseError("expected variable name", tok.line, tok.col)
            names.append(tok.text)
        self.lex.expect(":")
        sort = self._sort_name(self.lex.next())
        self.lex.expect(".")
        if sort not in self.module.signature.sorts:
            raise ParseError(f"unknown sort {sort}")
        for n in names:
            self.module.var_decls[n] = sort

    def _label(self) -> str:
        self.lex.expect("[")
        tok = self.lex.next()
        if tok.kind != "ident":
            raise ParseError("expected rule label", tok.line, tok.col)
        self.lex.expect("]")
        self.lex.expect(":")
        return tok.text

    def _condition(self, local_vars) -> tuple[Term, ...]:
        conds = [_parse_one_term(self.lex, self.module, "program", False,
                                 local_vars, "Bool")]
        while self.lex.at("/\\"):
            self.lex.next()
            conds.append(_parse_one_term(self.lex, self.module, "program", False,
                                         local_vars, "Bool"))
        return tuple(conds)

    def _rule(self, conditional: bool):
        label = self._label()
        local_vars: dict[str, Var] = {}
        lhs = _parse_one_term(self.lex, self.module, "program", False, local_vars)
        self.lex.expect("=>")
        rhs = _parse_one_term(self.lex, self.module, "program", False, local_vars,
                              self.module.signature.sort_of(lhs))
        condition: tuple[Term, ...] = ()
        if conditional:
            self.lex.expect("if")
            condition = self._condition(local_vars)
        self.lex.expect(".")
        try:
            self.module.add_rule(Rule(label, lhs, rhs, condition))
        except ModuleError as e:
            raise ParseError(str(e))

    def _equation(self, conditional: bool):
        label = self._label()
        local_vars: dict[str, Var] = {}
        lhs = _parse_one_term(self.lex, self.module, "program", False, local_vars)
        self.lex.expect("=")
        rhs = _parse_one_term(self.lex, self.module, "program", False, local_vars,
                              self.module.signature.sort_of(lhs))
        condition: tuple[Term, ...] = ()
        if conditional:
            self.lex.expect("if")
            condition = self._condition(local_vars)
        owise = False
        if self.lex.at("["):
            self.lex.next()
            tok = self.lex.next()
            if tok.text != "owise":
                raise ParseError(f"unknown equation attribute {tok.text!r}",
                                 tok.line, tok.col)
            owise = True
            self.lex.expect("]")
        self.lex.expect(".")
        try:
            self.module.add_equation(Equation(label, lhs, rhs, condition, owise))
        except ModuleError as e:
            raise ParseError(str(e))


def parse_program(text: str) -> ProgramModule:
    return ProgramParser(text).parse()


# --- assertion files ------------------------------------------------------

@dataclass
class SystemAssertion:
    template: Term
    formula: tuple[Term, ...]
    source: str = ""


@dataclass
class FunctionalAssertion:
    input_template: Term
    precondition: tuple[Term, ...]
    output_template: Term
    postcondition: tuple[Term, ...]
    source: str = ""


Assertion = SystemAssertion | FunctionalAssertion


def _parse_formula(lex: Lexer, module: ProgramModule, local_vars) -> tuple[Term, ...]:
    lex.expect("{")
    if lex.at("}"):
        tok = lex.peek()
        raise ParseError("empty assertion formula", tok.line, tok.col)
    conds = [_parse_one_term(lex, module, "program", False, local_vars, "Bool")]
    while lex.at("/\\"):
        lex.next()
        conds.append(_parse_one_term(lex, module, "program", False, local_vars, "Bool"))
    lex.expect("}")
    return tuple(conds)


def parse_assertions(text: str, module: ProgramModule) -> list[Assertion]:
    lex = Lexer(text)
    out: list[Assertion] = []
    while lex.peek().kind != "end":
        local_vars: dict[str, Var] = {}
        template = _parse_one_term(lex, module, "program", False, local_vars)
        template_vars = set(template.variables())
        formula = _parse_formula(lex, module, local_vars)
        if lex.at("->"):
            lex.next()
            out_vars: dict[str, Var] = dict(local_vars)
            output = _parse_one_term(lex, module, "program", False, out_vars)
            post = _parse_formula(lex, module, out_vars)
            allowed = template_vars | set(output.variables())
            for c in post:
                bad = set(c.variables()) - allowed
                if bad:
                    raise ParseError(
                        f"postcondition variables {sorted(map(repr, bad))} not bound "
                        "by the input or output template")
            for c in formula:
                bad = set(c.variables()) - template_vars
                if bad:
                    raise ParseError(
                        f"precondition variables {sorted(map(repr, bad))} not bound "
                        "by the input template")
            out.append(FunctionalAssertion(template, formula, output, post))
        else:
            for c in formula:
                bad = set(c.variables()) - template_vars
                if bad:
                    raise ParseError(
                        f"formula variables {sorted(map(repr, bad))} not bound "
                        "by the state template")
            out.append(SystemAssertion(template, formula))
        lex.expect(".")
    return out
