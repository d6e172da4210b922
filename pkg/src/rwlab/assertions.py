"""Runtime checking of system and functional assertions.

System assertions are state invariants checked at every position of every
state; functional assertions are pre/postconditions on the equational
simplification that closes each rule step (and on the initial
normalization).  Checking happens synchronously while executing or
asynchronously over a stored trace; both report the same violations in the
same order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .engine import Limits, MicroStep, Trace, execute, normalize
from .matching import match_modulo
from .module import ProgramModule
from .parser import Assertion, FunctionalAssertion, SystemAssertion
from .terms import Position, Subst, Term, substitute


@dataclass
class CheckStats:
    checks: int = 0


@dataclass
class Violation:
    kind: str  # system | functional
    assertion_index: int
    assertion: Assertion
    state_index: int
    bug_position: Position
    theta: Subst
    failed: tuple[int, ...]
    witness: Term
    # Functional-only context:
    output_matched: bool = True
    theta_out: Optional[Subst] = None
    bigstep_index: Optional[int] = None


@dataclass
class CheckReport:
    violations: list[Violation] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def eval_formula(conjunct: Term, theta: Subst, module: ProgramModule,
                 limits: Optional[Limits] = None) -> Optional[bool]:
    """Normalize the instantiated conjunct; True/False, or None when stuck."""
    from .engine import bool_value
    nf, _ = normalize(substitute(conjunct, theta), module, record=False,
                      limits=limits)
    return bool_value(module, nf)


def check_state(state: Term, assertions: list[Assertion], module: ProgramModule,
                state_index: int = 0, limits: Optional[Limits] = None,
                stats: Optional[CheckStats] = None) -> CheckReport:
    """Check every system assertion at every position of `state`."""
    report = CheckReport()
    for ai, assertion in enumerate(assertions):
        if not isinstance(assertion, SystemAssertion):
            continue
        if stats is not None:
            stats.checks += 1
        for pos in state.positions():
            sub = state.subterm_at(pos)
            for m in match_modulo(assertion.template, sub, module,
                                  limit=(limits or Limits()).ac_assignments):
                failed = []
                for ci, conj in enumerate(assertion.formula):
                    v = eval_formula(conj, m.subst, module, limits)
                    if v is None:
                        report.diagnostics.append(
                            f"assertion {ai}, conjunct {ci}: stuck (did not "
                            f"reduce to a boolean) at state {state_index}")
                    elif not v:
                        failed.append(ci)
                if failed:
                    report.violations.append(Violation(
                        "system", ai, assertion, state_index, pos, m.subst,
                        tuple(failed), sub))
    return report


def _zone_position(t_before: Term, q: Position, canonical_state: Term,
                   nf: Term) -> Position:
    """Locate the normal form of t_before|_q inside the canonical state."""
    try:
        if canonical_state.subterm_at(q) == nf:
            return q
    except Exception:
        pass
    for p in canonical_state.positions():
        if canonical_state.subterm_at(p) == nf:
            return p
    return ()


def check_simplification(t: Term, canonical_state: Term,
                         assertions: list[Assertion], module: ProgramModule,
                         state_index: int = 0,
                         bigstep_index: Optional[int] = None,
                         limits: Optional[Limits] = None,
                         stats: Optional[CheckStats] = None) -> CheckReport:
    """Check functional assertions over the simplification of `t`."""
    report = CheckReport()
    lim = (limits or Limits()).ac_assignments
    for ai, assertion in enumerate(assertions):
        if not isinstance(assertion, FunctionalAssertion):
            continue
        if stats is not None:
            stats.checks += 1
        for q in t.positions():
            sub = t.subterm_at(q)
            for m in match_modulo(assertion.input_template, sub, module, limit=lim):
                pre_ok = True
                for ci, conj in enumerate(assertion.precondition):
                    v = eval_formula(conj, m.subst, module, limits)
                    if v is None:
                        report.diagnostics.append(
                            f"assertion {ai}: stuck precondition conjunct {ci}")
                    if v is not True:
                        pre_ok = False
                        break
                if not pre_ok:
                    continue
                nf, _ = normalize(sub, module, record=False, limits=limits)
                p = _zone_position(t, q, canonical_state, nf)
                out_matchers = match_modulo(assertion.output_template, nf,
                                            module, limit=lim)
                if not out_matchers:
                    report.violations.append(Violation(
                        "functional", ai, assertion, state_index, p,
                        dict(m.subst), (), nf, output_matched=False,
                        bigstep_index=bigstep_index))
                    continue
                satisfied = False
                first_failure = None
                for om in out_matchers:
                    theta = dict(m.subst)
                    theta.update(om.subst)
                    failed = []
                    for ci, conj in enumerate(assertion.postcondition):
                        v = eval_formula(conj, theta, module, limits)
                        if v is None:
                            report.diagnostics.append(
                                f"assertion {ai}: stuck postcondition "
                                f"conjunct {ci}")
                        if v is not True:
                            failed.append(ci)
                    if not failed:
                        satisfied = True
                        break
                    if first_failure is None:
                        first_failure = (theta, om.subst, tuple(failed))
                if not satisfied and first_failure is not None:
                    theta, theta_out, failed = first_failure
                    report.violations.append(Violation(
                        "functional", ai, assertion, state_index, p, theta,
                        failed, nf, output_matched=True, theta_out=theta_out,
                        bigstep_index=bigstep_index))
    return report


def _first(report: CheckReport) -> Optional[Violation]:
    return report.violations[0] if report.violations else None


def check_trace_async(trace: Trace, assertions: list[Assertion],
                      module: ProgramModule, limits: Optional[Limits] = None,
                      stats: Optional[CheckStats] = None,
                      collect: Optional[CheckReport] = None) -> Optional[Violation]:
    """Scan a stored trace in execution order; return the earliest violation."""
    sink = collect if collect is not None else CheckReport()

    def merge(r: CheckReport) -> Optional[Violation]:
        sink.violations.extend(r.violations)
        sink.diagnostics.extend(r.diagnostics)
        return _first(r)

    if trace.initial != trace.states[0] or trace.init_steps:
        v = merge(check_simplification(trace.initial, trace.states[0],
                                       assertions, module, 0, None, limits, stats))
        if v:
            return v
    v = merge(check_state(trace.states[0], assertions, module, 0, limits, stats))
    if v:
        return v
    for i, big in enumerate(trace.bigsteps):
        v = merge(check_simplification(big.rule_step.after, big.canonical,
                                       assertions, module, i + 1, i, limits, stats))
        if v:
            return v
        v = merge(check_state(big.canonical, assertions, module, i + 1,
                              limits, stats))
        if v:
            return v
    return None


def run_checked_sync(t0: Term, module: ProgramModule,
                     assertions: list[Assertion], bound: int,
                     strategy=None, limits: Optional[Limits] = None,
                     stats: Optional[CheckStats] = None,
                     collect: Optional[CheckReport] = None
                     ) -> tuple[Trace, Optional[Violation]]:
    """Execute stepwise, checking after each step; halt at the first violation."""
    sink = collect if collect is not None else CheckReport()
    found: list[Violation] = []

    def merge(r: CheckReport) -> Optional[Violation]:
        sink.violations.extend(r.violations)
        sink.diagnostics.extend(r.diagnostics)
        return _first(r)

    def stop(trace: Trace) -> bool:
        if not trace.bigsteps:
            v = None
            if trace.initial != trace.states[0] or trace.init_steps:
                v = merge(check_simplification(
                    trace.initial, trace.states[0], assertions, module, 0,
                    None, limits, stats))
            if v is None:
                v = merge(check_state(trace.states[0], assertions, module, 0,
                                      limits, stats))
        else:
            i = len(trace.bigsteps) - 1
            big = trace.bigsteps[-1]
            v = merge(check_simplification(big.rule_step.after, big.canonical,
                                           assertions, module, i + 1, i,
                                           limits, stats))
            if v is None:
                v = merge(check_state(big.canonical, assertions, module, i + 1,
                                      limits, stats))
        if v is not None:
            found.append(v)
            return True
        return False

    trace = execute(t0, module, bound, strategy=strategy, limits=limits,
                    stop=stop)
    return trace, (found[0] if found else None)
