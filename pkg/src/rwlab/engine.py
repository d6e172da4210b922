"""Tracing execution engine: equational normalization, conditional rule
application, bounded runs, breadth-first search, and computation-space
exploration.

Every rewrite is recorded as a MicroStep (rule, equation, or built-in) with
its position, substitution, and full before/after states; a BigStep is one
rule application followed by the simplification to canonical form.  The
`backmap` helper reconstructs, for any recorded step, where each position of
the after state came from; the slicer folds over these maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .matching import Match, match_modulo, zone_lookup
from .module import Equation, ProgramModule, Rule
from .printer import render
from .terms import (App, Fresh, Int, Position, Qid, Subst, Term, Var, canonical,
                    order_key, replace_at, substitute)

INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1


class EngineError(Exception):
    pass


class StepLimitExceeded(EngineError):
    pass


class NodeLimitExceeded(EngineError):
    pass


class ArithmeticOverflow(EngineError):
    pass


class StrategyStuck(EngineError):
    pass


@dataclass
class Limits:
    micro_steps: int = 100_000
    ac_assignments: int = 10_000
    nodes: int = 10_000


class Budget:
    def __init__(self, limits: Limits):
        self.limits = limits
        self.left = limits.micro_steps

    def spend(self):
        if self.left <= 0:
            raise StepLimitExceeded(
                f"more than {self.limits.micro_steps} micro-steps; "
                "suspected non-termination")
        self.left -= 1


@dataclass
class MicroStep:
    kind: str  # rule | equation | builtin
    label: str
    position: Position
    sigma: Subst
    before: Term
    after: Term
    condition_traces: tuple[tuple["MicroStep", ...], ...] = ()
    condition_instances: tuple[Term, ...] = ()


@dataclass
class BigStep:
    rule_step: MicroStep
    simplification: tuple[MicroStep, ...]
    canonical: Term


@dataclass
class Trace:
    module: ProgramModule
    initial: Term
    init_steps: tuple[MicroStep, ...]
    states: list[Term]
    bigsteps: list[BigStep]

    @property
    def final(self) -> Term:
        return self.states[-1]

    def all_micro(self) -> Iterable[tuple[int, MicroStep]]:
        """(bigstep index, step) pairs in execution order; init steps are -1."""
        for s in self.init_steps:
            yield (-1, s)
        for i, b in enumerate(self.bigsteps):
            yield (i, b.rule_step)
            for s in b.simplification:
                yield (i, s)


# --- built-in evaluation ---------------------------------------------------

def int_value(t: Term) -> Optional[int]:
    if isinstance(t, Int):
        return t.value
    if isinstance(t, App) and t.op.name == "-_" and len(t.args) == 1 \
            and isinstance(t.args[0], Int):
        return -t.args[0].value
    return None


def make_int(module: ProgramModule, v: int) -> Term:
    if not (INT_MIN <= v <= INT_MAX):
        raise ArithmeticOverflow(f"integer result {v} exceeds 64-bit range")
    if v >= 0:
        return Int(v)
    return App(module.signature.find_op("-_", 1), (Int(-v),))


def bool_value(module: ProgramModule, t: Term) -> Optional[bool]:
    if t == module.bool_true():
        return True
    if t == module.bool_false():
        return False
    return None


def _rem(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    r = abs(a) - q * abs(b)
    return -r if a < 0 else r


def builtin_reduce(t: App, module: ProgramModule) -> Optional[Term]:
    """One-step value of a built-in redex, or None when not reducible."""
    name = t.op.name
    if not t.op.builtin:
        return None
    if name in ("_+_", "_-_", "_*_", "_rem_", "_<_", "_<=_", "_>_", "_>=_"):
        a, b = int_value(t.args[0]), int_value(t.args[1])
        if a is None or b is None:
            return None
        if name == "_+_":
            return make_int(module, a + b)
        if name == "_-_":
            return make_int(module, a - b)
        if name == "_*_":
            return make_int(module, a * b)
        if name == "_rem_":
            if b == 0:
                return None
            return make_int(module, _rem(a, b))
        res = {"_<_": a < b, "_<=_": a <= b, "_>_": a > b, "_>=_": a >= b}[name]
        return module.bool_true() if res else module.bool_false()
    if name == "-_":
        arg = t.args[0]
        if isinstance(arg, Int) and arg.value == 0:
            return Int(0)
        if isinstance(arg, App) and arg.op.name == "-_":
            return arg.args[0]
        return None
    if name in ("_==_", "_=/=_"):
        a, b = t.args
        if not (a.is_ground() and b.is_ground()):
            return None
        eq = (a == b)
        if name == "_=/=_":
            eq = not eq
        return module.bool_true() if eq else module.bool_false()
    if name in ("_and_", "_or_", "_implies_"):
        a = bool_value(module, t.args[0])
        b = bool_value(module, t.args[1])
        if a is None or b is None:
            return None
        res = {"_and_": a and b, "_or_": a or b,
               "_implies_": (not a) or b}[name]
        return module.bool_true() if res else module.bool_false()
    if name == "not_":
        a = bool_value(module, t.args[0])
        if a is None:
            return None
        return module.bool_false() if a else module.bool_true()
    return None


# --- normalization ---------------------------------------------------------

@dataclass
class _Redex:
    position: Position
    kind: str  # equation | builtin
    label: str
    sigma: Subst
    result: Term  # instantiated right side (not yet spliced)
    condition_traces: tuple = ()
    condition_instances: tuple[Term, ...] = ()


def _eval_condition(condition, subst: Subst, module, budget: Budget):
    """Evaluate conjuncts left to right; returns (verdict, traces, instances).

    verdict is True (all reduced to true), False (some reduced to false) or
    None (a conjunct got stuck on a non-boolean normal form).
    """
    traces = []
    instances = []
    for conj in condition:
        inst = substitute(conj, subst)
        instances.append(inst)
        nf, steps = normalize(inst, module, budget=budget)
        traces.append(tuple(steps))
        v = bool_value(module, nf)
        if v is None:
            return None, tuple(traces), tuple(instances)
        if not v:
            return False, tuple(traces), tuple(instances)
    return True, tuple(traces), tuple(instances)


def _find_redex(t: Term, pos: Position, module, budget) -> Optional[_Redex]:
    if not isinstance(t, App):
        return None
    if t.op.name == "if_then_else_fi" and t.op.builtin:
        r = _find_redex(t.args[0], pos + (1,), module, budget)
        if r is not None:
            return r
        v = bool_value(module, t.args[0])
        if v is not None:
            chosen = t.args[1] if v else t.args[2]
            return _Redex(pos, "builtin", "if_then_else_fi", {}, chosen)
        return None  # stuck guard: branches stay unevaluated
    for i, a in enumerate(t.args, start=1):
        r = _find_redex(a, pos + (i,), module, budget)
        if r is not None:
            return r
    if t.op.builtin:
        v = builtin_reduce(t, module)
        if v is not None:
            return _Redex(pos, "builtin", t.op.name, {}, v)
    eqs = module.equations_for(t.op)
    for phase in (False, True):
        for eq in eqs:
            if eq.owise != phase:
                continue
            for m in match_modulo(eq.lhs, t, module,
                                  limit=budget.limits.ac_assignments):
                if eq.condition:
                    ok, traces, insts = _eval_condition(eq.condition, m.subst,
                                                        module, budget)
                    if ok is not True:
                        continue
                else:
                    traces, insts = (), ()
                return _Redex(pos, "equation", eq.label, m.subst,
                              substitute(eq.rhs, m.subst), traces, insts)
    return None


def normalize(t: Term, module: ProgramModule, budget: Optional[Budget] = None,
              record: bool = True, limits: Optional[Limits] = None):
    """Innermost-leftmost equational simplification to canonical form."""
    if budget is None:
        budget = Budget(limits or Limits())
    t = canonical(t)
    steps: list[MicroStep] = []
    while True:
        r = _find_redex(t, (), module, budget)
        if r is None:
            return t, steps
        budget.spend()
        if r.kind == "builtin" and r.label == "if_then_else_fi":
            guard = t.subterm_at(r.position).args[0]
            chosen = 2 if guard == module.bool_true() else 3
            after = replace_at(t, r.position, t.subterm_at(r.position + (chosen,)))
        else:
            after = replace_at(t, r.position, r.result)
        if record:
            steps.append(MicroStep(r.kind, r.label, r.position, r.sigma, t, after,
                                   r.condition_traces, r.condition_instances))
        t = after


# --- rule application ------------------------------------------------------

@dataclass
class RuleApp:
    rule: Rule
    position: Position
    match: Match
    after: Term  # before[rhs sigma]_w, flattened but not normalized
    condition_traces: tuple = ()
    condition_instances: tuple[Term, ...] = ()


def apply_rule(t: Term, rule: Rule, module: ProgramModule,
               limits: Optional[Limits] = None,
               diagnostics: Optional[list] = None) -> list[RuleApp]:
    """All applications of `rule` on canonical `t`, outermost-leftmost first."""
    limits = limits or Limits()
    out: list[RuleApp] = []
    for pos in t.positions():
        sub = t.subterm_at(pos)
        for m in match_modulo(rule.lhs, sub, module, limit=limits.ac_assignments):
            if rule.condition:
                budget = Budget(limits)
                ok, traces, insts = _eval_condition(rule.condition, m.subst,
                                                    module, budget)
                if ok is None and diagnostics is not None:
                    diagnostics.append(
                        f"rule {rule.label}: condition stuck on a non-boolean "
                        f"at {render(insts[-1])}")
                if ok is not True:
                    continue
            else:
                traces, insts = (), ()
            after = replace_at(t, pos, substitute(rule.rhs, m.subst))
            out.append(RuleApp(rule, pos, m, after, traces, insts))
    return out


Strategy = Optional[list[str]]


def execute(t0: Term, module: ProgramModule, bound: int,
            strategy: Strategy = None, limits: Optional[Limits] = None,
            stop: Optional[Callable[[Trace], bool]] = None) -> Trace:
    """Run up to `bound` rule steps; deterministic first-rule-first-match
    unless an explicit label sequence pins the interleaving."""
    limits = limits or Limits()
    budget = Budget(limits)
    t0 = canonical(t0)
    s0, init_steps = normalize(t0, module, budget=budget)
    trace = Trace(module, t0, tuple(init_steps), [s0], [])
    if stop is not None and stop(trace):
        return trace
    for i in range(bound):
        app = _pick(trace.final, module, strategy, i, limits)
        if app is None:
            break
        rule_step = MicroStep("rule", app.rule.label, app.position,
                              app.match.subst, trace.final, app.after,
                              app.condition_traces, app.condition_instances)
        nf, steps = normalize(app.after, module, budget=budget)
        trace.bigsteps.append(BigStep(rule_step, tuple(steps), nf))
        trace.states.append(nf)
        if stop is not None and stop(trace):
            break
    return trace


def _pick(state: Term, module, strategy: Strategy, i: int, limits) -> Optional[RuleApp]:
    if strategy is None:
        for rule in module.rules:
            apps = apply_rule(state, rule, module, limits)
            if apps:
                return apps[0]
        return None
    if i >= len(strategy):
        return None
    rule = module.rule_by_label(strategy[i])
    apps = apply_rule(state, rule, module, limits)
    if not apps:
        raise StrategyStuck(
            f"step {i}: rule {rule.label} is not applicable at {render(state)}")
    return apps[0]


# --- search and exploration ------------------------------------------------

@dataclass
class SearchSolution:
    state: Term
    matcher: Subst
    path: tuple[str, ...]
    depth: int


@dataclass
class SearchResult:
    solutions: list[SearchSolution]
    bound_exhausted: bool
    states_visited: int


def _successors(state: Term, module, limits) -> list[tuple[str, Term]]:
    out = []
    for rule in module.rules:
        for app in apply_rule(state, rule, module, limits):
            nf, _ = normalize(app.after, module, record=False, limits=limits)
            out.append((rule.label, nf))
    return out


def search(t0: Term, goal: Term, module: ProgramModule, bound: int,
           limits: Optional[Limits] = None) -> SearchResult:
    """Breadth-first reachability: every state whose term matches `goal`."""
    limits = limits or Limits()
    start, _ = normalize(canonical(t0), module, record=False, limits=limits)
    seen = {start: ((), 0)}
    order = [start]
    frontier = [start]
    depth = 0
    exhausted = False
    while frontier and depth < bound:
        depth += 1
        nxt = []
        for state in frontier:
            path, _ = seen[state]
            for label, succ in _successors(state, module, limits):
                if succ not in seen:
                    if len(seen) >= limits.nodes:
                        raise NodeLimitExceeded(f"more than {limits.nodes} states")
                    seen[succ] = (path + (label,), depth)
                    order.append(succ)
                    nxt.append(succ)
        frontier = nxt
    if frontier and depth >= bound:
        exhausted = True
    solutions = []
    for state in order:
        path, d = seen[state]
        for m in match_modulo(goal, state, module, limit=limits.ac_assignments):
            solutions.append(SearchSolution(state, m.subst, path, d))
    return SearchResult(solutions, exhausted, len(seen))


@dataclass
class TreeNode:
    id: int
    state: Term
    parent: Optional[int]
    rule: Optional[str]
    depth: int


@dataclass
class GraphNode:
    id: int
    state: Term
    members: list[int]
    anchor: int  # first tree node in breadth-first (topmost leftmost) order


@dataclass
class StateGraph:
    tree: list[TreeNode]
    graph: list[GraphNode]
    edges: list[tuple[int, int, str]]
    tree_to_graph: dict[int, int]


def explore(t0: Term, module: ProgramModule, depth: int,
            limits: Optional[Limits] = None) -> StateGraph:
    """Full computation tree to `depth` plus its quotient modulo state equality."""
    limits = limits or Limits()
    start, _ = normalize(canonical(t0), module, record=False, limits=limits)
    tree = [TreeNode(0, start, None, None, 0)]
    frontier = [0]
    for d in range(depth):
        nxt = []
        for nid in frontier:
            node = tree[nid]
            for label, succ in _successors(node.state, module, limits):
                if len(tree) >= limits.nodes:
                    raise NodeLimitExceeded(f"more than {limits.nodes} tree nodes")
                child = TreeNode(len(tree), succ, nid, label, d + 1)
                tree.append(child)
                nxt.append(child.id)
        frontier = nxt
    graph: list[GraphNode] = []
    by_state: dict[Term, int] = {}
    tree_to_graph: dict[int, int] = {}
    for node in tree:  # tree ids are in breadth-first order
        gid = by_state.get(node.state)
        if gid is None:
            gid = len(graph)
            by_state[node.state] = gid
            graph.append(GraphNode(gid, node.state, [], node.id))
        graph[gid].members.append(node.id)
        tree_to_graph[node.id] = gid
    edges = []
    seen_edges = set()
    for node in tree:
        if node.parent is None:
            continue
        e = (tree_to_graph[node.parent], tree_to_graph[node.id], node.rule)
        if e not in seen_edges:
            seen_edges.add(e)
            edges.append(e)
    return StateGraph(tree, graph, edges, tree_to_graph)


# --- position provenance (backmaps) ----------------------------------------

# Tags: ("ctx", before_pos) for copied context, ("img", var, rel, before_pos)
# for variable-image pieces (before_pos None when filled by an identity),
# ("intro", rule_pos) for symbols introduced by the applied right side.
Tag = tuple


@dataclass
class _TNode:
    term: Term
    tag: Tag
    children: list["_TNode"]

    def strip(self) -> Term:
        return self.term


def _tag_subtree(t: Term, make_tag) -> _TNode:
    def walk(sub: Term, rel: Position) -> _TNode:
        kids = []
        if isinstance(sub, App):
            kids = [walk(a, rel + (i,)) for i, a in enumerate(sub.args, start=1)]
        return _TNode(sub, make_tag(rel), kids)
    return walk(t, ())


def _canonical_tnode(tn: _TNode) -> _TNode:
    t = tn.term
    if not isinstance(t, App):
        return tn
    kids = [_canonical_tnode(k) for k in tn.children]
    op = t.op
    if op.assoc:
        flat = []
        for k in kids:
            if isinstance(k.term, App) and k.term.op.key() == op.key():
                flat.extend(k.children)
            else:
                flat.append(k)
        kids = flat
    if op.identity is not None:
        kids = [k for k in kids if k.term != op.identity]
        if not kids:
            return _TNode(op.identity, tn.tag, [])
        if len(kids) == 1 and op.assoc:
            return kids[0]
    if op.comm:
        kids = sorted(kids, key=lambda k: order_key(k.term))
    from .terms import make_app
    return _TNode(make_app(op, [k.term for k in kids]), tn.tag, kids)


def _splice(base: Term, pos: Position, rhs: _TNode, prefix: Position = ()) -> _TNode:
    if not pos:
        return rhs
    assert isinstance(base, App)
    kids = []
    for i, a in enumerate(base.args, start=1):
        here = prefix + (i,)
        if i == pos[0]:
            kids.append(_splice(a, pos[1:], rhs, here))
        else:
            kids.append(_tag_subtree(a, lambda rel, h=here: ("ctx", h + rel)))
    return _TNode(App(base.op, base.args), ("ctx", prefix), kids)


def _collect_tags(tn: _TNode, pos: Position, out: dict):
    out[pos] = tn.tag
    for i, k in enumerate(tn.children, start=1):
        _collect_tags(k, pos + (i,), out)


def _tagged_rhs(rhs: Term, match: Match, w: Position) -> _TNode:
    def walk(sub: Term, rpos: Position) -> _TNode:
        if isinstance(sub, (Var, Fresh)):
            image = match.subst[sub]
            zone = match.zones[sub][0]

            def img_tag(rel: Position, v=sub, z=zone):
                bp = zone_lookup(z, rel)
                return ("img", v, rel, None if bp is None else w + bp)
            return _tag_subtree(image, img_tag)
        if isinstance(sub, App) and sub.args:
            kids = [walk(a, rpos + (i,)) for i, a in enumerate(sub.args, start=1)]
            raw = App(sub.op, tuple(k.term for k in kids))
            return _TNode(raw, ("intro", rpos), kids)
        return _TNode(sub, ("intro", rpos), [])
    return walk(rhs, ())


def recover_match(step: MicroStep, module: ProgramModule,
                  limits: Optional[Limits] = None) -> Optional[Match]:
    """Re-derive the matcher (with zones) a recorded step used."""
    limits = limits or Limits()
    if step.kind == "builtin":
        return None
    if step.kind == "rule":
        lhs = module.rule_by_label(step.label).lhs
    else:
        lhs = module.equation_by_label(step.label).lhs
    redex = step.before.subterm_at(step.position)
    for m in match_modulo(lhs, redex, module, limit=limits.ac_assignments):
        if m.subst == step.sigma:
            return m
    return None


def backmap(step: MicroStep, module: ProgramModule,
            limits: Optional[Limits] = None):
    """(tags, match) for a step: tags maps every after-position to its origin."""
    w = step.position
    if step.kind == "builtin":
        if step.label == "if_then_else_fi":
            redex = step.before.subterm_at(w)
            v = redex.args[0] == module.bool_true()
            branch = 2 if v else 3
            rhs = _tag_subtree(step.before.subterm_at(w + (branch,)),
                               lambda rel: ("ctx", w + (branch,) + rel))
        else:
            rhs = _tag_subtree(_builtin_result(step, module),
                               lambda rel: ("intro", rel))
        match = None
    else:
        match = recover_match(step, module, limits)
        if match is None:
            raise EngineError(
                f"cannot re-derive matcher for step {step.label} at "
                f"{step.position}")
        if step.kind == "rule":
            rhs_term = module.rule_by_label(step.label).rhs
        else:
            rhs_term = module.equation_by_label(step.label).rhs
        rhs = _canonical_tnode(_tagged_rhs(rhs_term, match, w))
    spliced = _canonical_tnode(_splice(step.before, w, rhs))
    if spliced.term != step.after:
        raise EngineError(
            f"provenance mismatch replaying {step.kind} {step.label} at "
            f"{step.position}")
    tags: dict[Position, Tag] = {}
    _collect_tags(spliced, (), tags)
    return tags, match


def _builtin_result(step: MicroStep, module: ProgramModule) -> Term:
    redex = step.before.subterm_at(step.position)
    v = builtin_reduce(redex, module)
    if v is None:
        raise EngineError(f"builtin step {step.label} does not replay")
    return v


def replay_microstep(step: MicroStep, module: ProgramModule) -> Term:
    """Recompute `after` from `before` and the recorded data (exact replay)."""
    w = step.position
    redex = step.before.subterm_at(w)
    if step.kind == "builtin":
        if step.label == "if_then_else_fi":
            v = bool_value(module, redex.args[0])
            if v is None:
                raise EngineError("if step does not replay: guard not boolean")
            return replace_at(step.before, w, redex.args[1 if v else 2])
        v = builtin_reduce(redex, module)
        if v is None:
            raise EngineError(f"builtin step {step.label} does not replay")
        return replace_at(step.before, w, v)
    if step.kind == "rule":
        rhs = module.rule_by_label(step.label).rhs
    else:
        rhs = module.equation_by_label(step.label).rhs
    return replace_at(step.before, w, substitute(rhs, step.sigma))
