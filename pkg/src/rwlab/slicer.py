"""Backward trace slicing with automatic criterion synthesis.

A slicing criterion is a set of observed positions in one trace state.
`slice_backward` folds `antecedents_step` over the recorded micro-steps,
tracking for every earlier state exactly the positions that fed the observed
data: copied context and variable images map positionally; when an applied
right side contributed a symbol, the step becomes relevant and its matched
left-side skeleton plus everything its condition evaluation consumed become
relevant too.  Irrelevant positions render as holes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .engine import (Limits, MicroStep, Trace, _canonical_tnode, _collect_tags,
                     _tagged_rhs, backmap)
from .generalize import lgg_modulo
from .matching import Match, match_modulo, zone_lookup
from .module import Equation, ProgramModule, Rule
from .parser import FunctionalAssertion, SystemAssertion
from .printer import render
from .terms import (App, Fresh, Hole, Position, Term, Var, ancestor_closure,
                    subtree_positions, substitute)
from .assertions import Violation


class SliceError(Exception):
    pass


class EmptyCriterion(SliceError):
    """Every variable of the failed conjuncts is masked."""


class InvalidRefinement(SliceError):
    pass


@dataclass(frozen=True)
class Criterion:
    state_index: int
    positions: frozenset[Position]

    def root(self) -> Position:
        """Longest common prefix of the criterion positions."""
        it = iter(sorted(self.positions))
        prefix = next(it)
        for p in it:
            k = 0
            while k < len(prefix) and k < len(p) and prefix[k] == p[k]:
                k += 1
            prefix = prefix[:k]
        return prefix

    def rendered(self, trace: Trace) -> str:
        """The observed subterm, with excluded positions shown as holes."""
        state = trace.states[self.state_index]
        root = self.root()
        rel = {p[len(root):] for p in self.positions if p[:len(root)] == root}
        return render(mask_term(state.subterm_at(root), ancestor_closure(rel)))


def criterion_from_roots(state: Term, roots, state_index: int) -> Criterion:
    positions: set[Position] = set()
    for r in roots:
        positions |= subtree_positions(state, tuple(r))
    return Criterion(state_index, frozenset(positions))


@dataclass
class StepInfo:
    relevant: bool
    trusted: bool
    after_mask: frozenset[Position]


@dataclass
class TraceSlice:
    trace: Trace
    criterion: Criterion
    trusted_mode: bool
    state_masks: list[frozenset[Position]]
    initial_mask: frozenset[Position]
    init_info: list[StepInfo]
    step_info: list[list[StepInfo]]  # per bigstep: [rule step, micro...]
    bigstep_relevant: list[bool]
    relevant_labels: list[str]

    def masked_state(self, i: int) -> Term:
        return mask_term(self.trace.states[i], self.state_masks[i])

    def concretize(self, i: int) -> Term:
        return self.trace.states[i]


@dataclass
class ProgramSlice:
    rules: list[Rule]
    equations: list[Equation]

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rules] + [e.label for e in self.equations]


def mask_term(t: Term, relevant: frozenset[Position] | set[Position],
              pos: Position = ()) -> Term:
    """Replace maximal subtrees holding no relevant position with holes.

    The result keeps the flattened arity of `t` so positions line up with the
    original; it is intentionally not re-canonicalized.
    """
    if pos not in relevant:
        return Hole()
    if isinstance(t, App) and t.args:
        return App(t.op, tuple(mask_term(a, relevant, pos + (i,))
                               for i, a in enumerate(t.args, start=1)))
    return t


# --- criterion synthesis ----------------------------------------------------

def _smallest_covering(template: Term, wanted: set) -> Position:
    """Position of the smallest non-variable subterm containing all of `wanted`."""
    best: Optional[Position] = None
    best_size = None
    for p in template.positions():
        sub = template.subterm_at(p)
        if isinstance(sub, (Var, Fresh)):
            continue
        if wanted <= set(sub.variables()):
            if best_size is None or sub.size() < best_size:
                best, best_size = p, sub.size()
    if best is None:
        raise SliceError("template has no covering subterm")
    return best


def _recover_assertion_match(template: Term, witness: Term, theta,
                             module: ProgramModule) -> Match:
    for m in match_modulo(template, witness, module):
        if m.subst == theta:
            return m
    raise SliceError("violation matcher does not replay against the witness")


def _masked_zone_positions(match: Match, base: Position, theta) -> set[Position]:
    out: set[Position] = set()
    for v, zones in match.zones.items():
        if not (isinstance(v, Var) and v.masked):
            continue
        image = theta[v]
        for zone in zones:
            for ip in image.positions():
                sp = zone_lookup(zone, ip)
                if sp is not None:
                    out.add(base + sp)
    return out


def synthesize_criterion(violation: Violation, trace: Trace,
                         module: ProgramModule) -> Criterion:
    state = trace.states[violation.state_index]
    if violation.kind == "system":
        assertion = violation.assertion
        assert isinstance(assertion, SystemAssertion)
        m = _recover_assertion_match(assertion.template, violation.witness,
                                     violation.theta, module)
        positions: set[Position] = set()
        saw_unmasked = False
        for ci in violation.failed:
            conj = assertion.formula[ci]
            wanted = {v for v in conj.variables() if not
                      (isinstance(v, Var) and v.masked)}
            if not wanted:
                continue
            saw_unmasked = True
            qs = _smallest_covering(assertion.template, wanted)
            root = violation.bug_position + m.skeleton[qs]
            positions |= subtree_positions(state, root)
        if not saw_unmasked:
            raise EmptyCriterion(
                "all variables of the failed conjuncts are masked")
        positions -= _masked_zone_positions(m, violation.bug_position,
                                            violation.theta)
        return Criterion(violation.state_index, frozenset(positions))

    assertion = violation.assertion
    assert isinstance(assertion, FunctionalAssertion)
    nf = state.subterm_at(violation.bug_position)
    theta_in = {v: img for v, img in violation.theta.items()
                if v in set(assertion.input_template.variables())}
    expected = substitute(assertion.output_template, theta_in)
    g, _, right = lgg_modulo(nf, expected, module)
    if violation.output_matched:
        deviating = set()
        for ci in violation.failed:
            for v in assertion.postcondition[ci].variables():
                if not (isinstance(v, Var) and v.masked):
                    deviating.add(v)
        def include(img: Term) -> bool:
            return bool(set(img.variables()) & deviating)
    else:
        def include(img: Term) -> bool:
            return not isinstance(img, (Var, Fresh))
    gm = None
    for cand in match_modulo(g, nf, module):
        gm = cand
        break
    positions: set[Position] = set()
    if gm is not None:
        for v, zones in gm.zones.items():
            if not isinstance(v, Fresh) or v not in right:
                continue
            if not include(right[v]):
                continue
            image = gm.subst[v]
            for zone in zones:
                for ip in image.positions():
                    sp = zone_lookup(zone, ip)
                    if sp is not None:
                        positions.add(violation.bug_position + sp)
    if not positions:
        positions = subtree_positions(state, violation.bug_position)
    return Criterion(violation.state_index, frozenset(positions))


# --- antecedents ------------------------------------------------------------

def _all_children_observed(term: Term, pos: Position,
                           relevant: set[Position]) -> bool:
    node = term.subterm_at(pos)
    kids = len(node.args) if isinstance(node, App) else 0
    return all(any(p[:len(pos) + 1] == pos + (i,) for p in relevant)
               for i in range(1, kids + 1))


def _fold_condition(steps: tuple[MicroStep, ...], module: ProgramModule,
                    labels: set, limits) -> set[Position]:
    """Backward-slice a condition evaluation from its final (boolean) root."""
    rel: set[Position] = {()}
    for step in reversed(steps):
        rel, _, _ = antecedents_step(step, rel, module, labels, limits)
        rel = ancestor_closure(rel)
    return rel


def _instance_origins(conj: Term, match: Match, w: Position,
                      rel_positions: set[Position]) -> set[Position]:
    """Map relevant positions of an instantiated conjunct back to the state."""
    node = _canonical_tnode(_tagged_rhs(conj, match, w))
    tags: dict = {}
    _collect_tags(node, (), tags)
    out: set[Position] = set()
    for q in rel_positions:
        tag = tags.get(q)
        if tag is None:
            continue
        if tag[0] == "img":
            _, var, rel_in_img, bpos = tag
            if bpos is not None:
                out.add(bpos)
            for zone in match.zones.get(var, [])[1:]:
                other = zone_lookup(zone, rel_in_img)
                if other is not None:
                    out.add(w + other)
    return out


def antecedents_step(step: MicroStep, relevant_after: set[Position],
                     module: ProgramModule, labels: Optional[set] = None,
                     limits: Optional[Limits] = None
                     ) -> tuple[set[Position], bool, bool]:
    """One backward step: (relevant positions in `before`, step relevant,
    trusted).  Positions outside the rewritten zone map to themselves;
    positions inside variable images map to every matched occurrence; if any
    introduced symbol is relevant, the matched skeleton and the data consumed
    by the condition evaluation become relevant and the step's label joins
    the program slice."""
    tags, match = backmap(step, module, limits)
    w = step.position
    is_if = step.kind == "builtin" and step.label == "if_then_else_fi"
    rel_before: set[Position] = set()
    zone_hit = False
    redex = step.before.subterm_at(w)

    def same_node(a: Term, b: Term) -> bool:
        if isinstance(a, App) and isinstance(b, App):
            return a.op.key() == b.op.key()
        return a == b

    def skip_visible_at(q: Position) -> bool:
        """Would the un-rewritten redex look different at observed q?"""
        rel = q[len(w):]
        try:
            old = redex.subterm_at(rel)
        except Exception:
            return True
        return not same_node(step.after.subterm_at(q), old)

    need_cache: list[Optional[tuple[set[Position], set[str]]]] = [None]

    def structural_need() -> tuple[set[Position], set[str]]:
        """Skeleton positions plus everything the condition evaluation
        consumed, and the equation labels that evaluation used."""
        if need_cache[0] is not None:
            return need_cache[0]
        out: set[Position] = set()
        used_labels: set[str] = set()
        if match is not None:
            out |= {w + sp for sp in match.skeleton.values()}
            if step.kind == "rule":
                condition = module.rule_by_label(step.label).condition
            elif step.kind == "equation":
                condition = module.equation_by_label(step.label).condition
            else:
                condition = ()
            for conj, steps in zip(condition, step.condition_traces):
                rel_c = _fold_condition(steps, module, used_labels, limits)
                out |= _instance_origins(conj, match, w, rel_c)
        need_cache[0] = (out, used_labels)
        return need_cache[0]

    def repeated_zones() -> set[Position]:
        out: set[Position] = set()
        if match is None:
            return out
        for var, zones in match.zones.items():
            if len(zones) < 2:
                continue
            image = match.subst.get(var)
            if image is None:
                continue
            for zone in zones:
                for ip in image.positions():
                    sp = zone_lookup(zone, ip)
                    if sp is not None:
                        out.add(w + sp)
        return out

    for q in relevant_after:
        tag = tags.get(q)
        if tag is None:
            continue
        kind = tag[0]
        if kind == "ctx":
            rel_before.add(tag[1])
            if is_if and q[:len(w)] == w and tag[1] != q:
                zone_hit = True  # the branch hoist moved the observed data
        elif kind == "img":
            _, var, rel_in_img, bpos = tag
            if bpos is not None:
                rel_before.add(bpos)
            if bpos != q:
                zone_hit = True
            elif rel_in_img == () and bpos is not None:
                # A block image that stayed in place may still have lost the
                # skeleton siblings it was carved away from.
                a_node = step.after.subterm_at(q)
                b_node = step.before.subterm_at(bpos)
                a_kids = len(a_node.args) if isinstance(a_node, App) else 0
                b_kids = len(b_node.args) if isinstance(b_node, App) else 0
                if (not same_node(a_node, b_node) or a_kids != b_kids) and \
                        _all_children_observed(step.after, q, relevant_after):
                    zone_hit = True
            if match is not None:
                # Every matched occurrence of the variable fed the value.
                for zone in match.zones.get(var, [])[1:]:
                    other = zone_lookup(zone, rel_in_img)
                    if other is not None:
                        rel_before.add(w + other)
        else:  # intro
            if skip_visible_at(q):
                zone_hit = True
            else:
                # The introduced symbol coincides with what it replaced; the
                # older occurrence still feeds the observation wherever the
                # match or condition would notice it changing.
                aligned = w + q[len(w):]
                if aligned in structural_need()[0] or \
                        aligned in repeated_zones():
                    rel_before.add(aligned)
    if not zone_hit and not any(t[0] != "ctx" for t in tags.values()):
        # The rewrite result vanished (identity collapse): the removal is
        # observable at the deepest surviving ancestor of the redex, unless
        # a masked sibling absorbs the leftover.
        anchor = w
        while anchor and anchor not in tags:
            anchor = anchor[:-1]
        if anchor in relevant_after and _all_children_observed(
                step.after, anchor, relevant_after):
            zone_hit = True
    if zone_hit:
        if is_if:
            # The guard decided which branch survived; branch data itself
            # flows positionally through the context mapping.
            rel_before.add(w)
            rel_before |= subtree_positions(step.before, w + (1,))
        elif step.kind == "builtin":
            rel_before |= subtree_positions(step.before, w)
        else:
            assert match is not None
            needed, cond_labels = structural_need()
            rel_before |= needed
            if labels is not None:
                labels.add(step.label)
                labels |= cond_labels
            src = module.rule_by_label(step.label) if step.kind == "rule" \
                else module.equation_by_label(step.label)
            # Images erased by identity collapse left no after positions but
            # the collapse itself consumed them.
            surviving = {t[1] for t in tags.values() if t[0] == "img"}
            for x in set(src.rhs.variables()) - surviving:
                image = match.subst.get(x)
                if image is None:
                    continue
                for zone in match.zones.get(x, []):
                    for ip in image.positions():
                        sp = zone_lookup(zone, ip)
                        if sp is not None:
                            rel_before.add(w + sp)
    trusted = step.kind == "builtin"
    return rel_before, zone_hit, trusted


# --- backward slicing --------------------------------------------------------

def slice_backward(trace: Trace, criterion: Criterion, module: ProgramModule,
                   trusted: bool = True,
                   limits: Optional[Limits] = None) -> TraceSlice:
    n = len(trace.states)
    if not (0 <= criterion.state_index < n):
        raise SliceError(f"criterion state {criterion.state_index} out of range")
    state = trace.states[criterion.state_index]
    valid = set(state.positions())
    if not criterion.positions or not set(criterion.positions) <= valid:
        raise SliceError("criterion positions not valid in the criterion state")
    masks: list[frozenset] = [frozenset()] * n
    rel = ancestor_closure(set(criterion.positions))
    masks[criterion.state_index] = frozenset(rel)
    labels: set[str] = set()
    step_info: list[list[StepInfo]] = [[] for _ in trace.bigsteps]
    bigstep_relevant = [False] * len(trace.bigsteps)
    cursor = set(rel)
    for i in range(criterion.state_index - 1, -1, -1):
        big = trace.bigsteps[i]
        infos: list[StepInfo] = []
        any_rel = False
        for step in reversed([big.rule_step, *big.simplification]):
            after_mask = frozenset(cursor)
            before, hit, trusted_step = antecedents_step(step, cursor, module,
                                                         labels, limits)
            infos.append(StepInfo(hit, trusted_step and trusted, after_mask))
            any_rel = any_rel or hit
            cursor = ancestor_closure(before)
        infos.reverse()
        step_info[i] = infos
        bigstep_relevant[i] = any_rel
        masks[i] = frozenset(cursor)
    init_info: list[StepInfo] = []
    for step in reversed(list(trace.init_steps)):
        after_mask = frozenset(cursor)
        before, hit, trusted_step = antecedents_step(step, cursor, module,
                                                     labels, limits)
        init_info.append(StepInfo(hit, trusted_step and trusted, after_mask))
        cursor = ancestor_closure(before)
    init_info.reverse()
    return TraceSlice(trace, criterion, trusted, masks, frozenset(cursor),
                      init_info, step_info, bigstep_relevant, sorted(labels))


def refine(slice_: TraceSlice, trace: Trace, new_criterion: Criterion,
           module: ProgramModule, limits: Optional[Limits] = None) -> TraceSlice:
    mask = slice_.state_masks[new_criterion.state_index]
    bad = [p for p in new_criterion.positions if p not in mask]
    if bad:
        raise InvalidRefinement(
            f"criterion positions already sliced away: "
            f"{sorted('.'.join(map(str, p)) or 'root' for p in bad)}")
    return slice_backward(trace, new_criterion, module,
                          trusted=slice_.trusted_mode, limits=limits)


def program_slice(slice_: TraceSlice, module: ProgramModule) -> ProgramSlice:
    labels = set(slice_.relevant_labels)
    return ProgramSlice([r for r in module.rules if r.label in labels],
                        [e for e in module.equations if e.label in labels])


# --- rendering ----------------------------------------------------------------

def render_trace_lines(trace: Trace) -> list[str]:
    lines = [render(trace.states[0])]
    for i, big in enumerate(trace.bigsteps):
        lines.append(f"=[{big.rule_step.label}]=> {render(trace.states[i + 1])}")
    return lines


def render_slice_lines(slice_: TraceSlice) -> list[str]:
    lines = [render(slice_.masked_state(0))]
    for i, _ in enumerate(slice_.trace.bigsteps):
        label = slice_.trace.bigsteps[i].rule_step.label
        lines.append(f"=[{label}]=> {render(slice_.masked_state(i + 1))}")
    return lines


def render_trace_extended(trace: Trace) -> str:
    lines = [render(trace.initial)]
    for step in trace.init_steps:
        lines.append(f"  ~[{step.label}]~> {render(step.after)}")
    for big in trace.bigsteps:
        lines.append(f"=[{big.rule_step.label}]=> {render(big.rule_step.after)}")
        for step in big.simplification:
            lines.append(f"  ~[{step.label}]~> {render(step.after)}")
    return "\n".join(lines) + "\n"


def render_slice_extended(slice_: TraceSlice) -> str:
    """Extended rendering of the slice: relevant, untrusted steps only, with
    masked states."""
    trace = slice_.trace
    lines = [render(mask_term(trace.states[0], slice_.state_masks[0]))]
    for i, big in enumerate(trace.bigsteps):
        if i >= slice_.criterion.state_index:
            break
        infos = slice_.step_info[i]
        steps = [big.rule_step, *big.simplification]
        for step, info in zip(steps, infos):
            if not info.relevant or info.trusted:
                continue
            marker = "=" if step.kind == "rule" else "~"
            lines.append(f"{marker}[{step.label}]{marker}> "
                         f"{render(mask_term(step.after, info.after_mask))}")
    return "\n".join(lines) + "\n"
