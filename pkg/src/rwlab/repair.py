"""Automatic repair of rewrite rules that violate a state invariant.

Phase 1 unifies the applied rule's right side with the violated state
template, each inside its state context, and keeps the unifiers whose
rule-side bindings compose consistently with the substitution the faulty
step actually used.  Phase 2 splits the kept bindings into ground rule-side
constraints and fresh-variable instantiations, and emits a copy of the rule
whose condition is strengthened with the constrained invariant instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .assertions import Violation
from .engine import BigStep, Limits, apply_rule, normalize
from .module import ProgramModule, Rule
from .parser import SystemAssertion
from .printer import render, render_condition
from .terms import (App, Fresh, Subst, Term, Var, make_app, replace_at,
                    substitute)
from .unify import UnifierPair, compose_parallel, unify_modulo


class RepairError(Exception):
    pass


class NoUnifier(RepairError):
    """Rule and assertion are structurally unrelatable, even in context."""


class NoConsistentUnifier(RepairError):
    pass


@dataclass
class RepairSuggestion:
    original: Rule
    fixed: Rule
    sigma_rho: Subst
    sigma_s: Subst
    sigma_rule: Subst
    sigma_new: Subst
    source: str


def _prime_apart(assertion: SystemAssertion) -> SystemAssertion:
    ren: Subst = {}
    for v in assertion.template.variables():
        if isinstance(v, Var):
            ren[v] = Var(v.name + "'", v.sort, v.masked)
    return SystemAssertion(substitute(assertion.template, ren),
                           tuple(substitute(c, ren) for c in assertion.formula),
                           assertion.source)


def split_bindings(sigma_rho: Subst, rho: Term) -> tuple[Subst, Subst]:
    """Partition unifier bindings into ground rule-side constraints
    (variables of the right side bound to fresh-free terms) and the rest."""
    rho_vars = set(rho.variables())
    sigma_rule: Subst = {}
    sigma_new: Subst = {}
    for v, img in sigma_rho.items():
        if v in rho_vars and not any(isinstance(x, Fresh) for x in img.variables()):
            sigma_rule[v] = img
        else:
            sigma_new[v] = img
    return sigma_rule, sigma_new


def _conjoin(module: ProgramModule, terms: list[Term]) -> Term:
    out = terms[0]
    and_op = module.signature.find_op("_and_", 2)
    for t in terms[1:]:
        out = App(and_op, (out, t))
    return out


def _guard_term(module: ProgramModule, sigma_rule: Subst,
                formula_inst: list[Term]) -> tuple[Term, str]:
    body = _conjoin(module, formula_inst)
    body_text = " /\\ ".join(render(c, var_sorts=False) for c in formula_inst) \
        if len(formula_inst) > 1 else render(body, var_sorts=False)
    if not sigma_rule:
        return body, body_text
    eq_op = module.signature.find_op("_==_", 2)
    premises = [App(eq_op, (v, img)) for v, img in
                sorted(sigma_rule.items(), key=lambda kv: repr(kv[0]))]
    premise = _conjoin(module, premises)
    impl_op = module.signature.find_op("_implies_", 2)
    guard = App(impl_op, (premise, body))
    text = f"(({render(premise, var_sorts=False)}) implies " \
           f"{render(body, var_sorts=False)})"
    return guard, text


def _render_fix(rule: Rule, guard_text: str) -> str:
    text = f"crl [{rule.label}] : {render(rule.lhs, var_sorts=False)} => " \
           f"{render(rule.rhs, var_sorts=False)} if "
    parts = [render(c, var_sorts=False) for c in rule.condition[:-1]]
    parts.append(guard_text)
    return text + " /\\ ".join(parts) + " ."


def repair_rule(last_step: BigStep, violation: Violation,
                module: ProgramModule,
                limits: Optional[Limits] = None) -> list[RepairSuggestion]:
    """Suggest strengthened replacements for the rule `last_step` applied."""
    if violation.kind != "system":
        raise RepairError("repair is defined for system assertion violations")
    assertion = violation.assertion
    assert isinstance(assertion, SystemAssertion)
    rule = module.rule_by_label(last_step.rule_step.label)
    sigma = last_step.rule_step.sigma
    w = last_step.rule_step.position
    p = violation.bug_position
    primed = _prime_apart(assertion)
    t_prime = last_step.rule_step.after
    in_context_rho = replace_at(t_prime, w, rule.rhs)
    in_context_s = replace_at(last_step.canonical, p, primed.template)
    unifiers = unify_modulo(in_context_rho, in_context_s, module,
                            limit=(limits or Limits()).ac_assignments)
    if not unifiers:
        raise NoUnifier(
            f"no unifier between the right side of {rule.label} and the "
            "assertion template, even in context")
    suggestions = []
    for pair in unifiers:
        if compose_parallel(pair.left, sigma) is None:
            continue
        sigma_rho = {v: img for v, img in pair.left.items()
                     if v in set(rule.rhs.variables()) | set(rule.lhs.variables())}
        sigma_rule, sigma_new = split_bindings(sigma_rho, rule.rhs)
        formula_inst = [substitute(c, pair.right) for c in primed.formula]
        guard, guard_text = _guard_term(module, sigma_rule, formula_inst)
        fixed = Rule(f"{rule.label}-fix",
                     substitute(rule.lhs, sigma_new),
                     substitute(rule.rhs, sigma_new),
                     tuple(substitute(c, sigma_new) for c in rule.condition)
                     + (guard,))
        if not _well_formed(fixed):
            continue
        source = _render_fix(fixed, guard_text)
        suggestions.append(RepairSuggestion(rule, fixed, sigma_rho, pair.right,
                                            sigma_rule, sigma_new, source))
    if not suggestions:
        raise NoConsistentUnifier(
            f"every unifier clashes with the recorded substitution of "
            f"{rule.label}")
    suggestions.sort(key=lambda s: (
        sum(1 for img in s.sigma_new.values()
            for x in img.variables() if isinstance(x, Fresh)),
        len(s.sigma_rule), s.source))
    return suggestions


def _well_formed(rule: Rule) -> bool:
    lhs_vars = set(rule.lhs.variables())
    used = set(rule.rhs.variables())
    for c in rule.condition:
        used.update(c.variables())
    return used <= lhs_vars


def blocks_violation(suggestion: RepairSuggestion, last_step: BigStep,
                     violation: Violation, module: ProgramModule,
                     limits: Optional[Limits] = None) -> bool:
    """True when re-applying the fixed rule at the original redex yields no
    state that still violates the triggering assertion."""
    from .assertions import check_state
    before = last_step.rule_step.before
    w = last_step.rule_step.position
    assertion = violation.assertion
    for app in apply_rule(before, suggestion.fixed, module, limits):
        if app.position != w:
            continue
        nf, _ = normalize(app.after, module, record=False, limits=limits)
        report = check_state(nf, [assertion], module)
        if report.violations:
            return False
    return True
