"""JSON wire formats and trace (re)loading.

Field order is fixed; golden files depend on it.  Loaded traces are fully
validated by replay: every micro-step must recompute from the recorded label,
position, and substitution, and the state chain must close.  Condition
evaluation traces are re-derived during loading (they are deterministic and
not part of the wire format).
"""

from __future__ import annotations

import json
import re
from typing import Optional

from .assertions import Violation
from .engine import (BigStep, EngineError, Limits, MicroStep, Trace,
                     _eval_condition, Budget, replay_microstep)
from .module import ProgramModule
from .parser import ParseError, parse_term
from .printer import render, render_with_spans
from .slicer import TraceSlice
from .repair import RepairSuggestion
from .terms import Fresh, Position, Subst, Term, Var, canonical


class MalformedTrace(Exception):
    pass


_VAR_KEY = re.compile(r"^(#?)([A-Za-z][A-Za-z0-9'\-]*):(.+)$")


def _subst_to_wire(sigma: Subst) -> dict:
    out = {}
    for v, img in sorted(sigma.items(), key=lambda kv: repr(kv[0])):
        out[repr(v)] = render(img)
    return out


def _subst_from_wire(data: dict, module: ProgramModule) -> Subst:
    sigma: Subst = {}
    for key, text in data.items():
        if key.startswith("%"):
            var: Var | Fresh = Fresh(int(key[1:]))
        else:
            m = _VAR_KEY.match(key)
            if not m:
                raise MalformedTrace(f"bad substitution key {key!r}")
            var = Var(m.group(2), m.group(3), masked=bool(m.group(1)))
        sigma[var] = parse_term(text, module, allow_fresh=True,
                                expected=var.sort)
    return sigma


def _micro_to_wire(step: MicroStep) -> dict:
    return {"kind": step.kind, "label": step.label,
            "position": list(step.position),
            "sigma": _subst_to_wire(step.sigma)}


def trace_to_wire(trace: Trace) -> dict:
    return {
        "states": [render(s) for s in trace.states],
        "bigsteps": [
            {"rule": b.rule_step.label,
             "position": list(b.rule_step.position),
             "sigma": _subst_to_wire(b.rule_step.sigma),
             "micro": [_micro_to_wire(s) for s in b.simplification]}
            for b in trace.bigsteps
        ],
        "canonical": render(trace.final),
    }


def _replay_micro(cur: Term, entry: dict, module: ProgramModule,
                  budget: Budget) -> MicroStep:
    kind = entry["kind"]
    label = entry["label"]
    pos = tuple(entry["position"])
    sigma = _subst_from_wire(entry.get("sigma", {}), module)
    cond_traces: tuple = ()
    cond_insts: tuple = ()
    if kind == "equation":
        eq = module.equation_by_label(label)
        if eq.condition:
            ok, cond_traces, cond_insts = _eval_condition(eq.condition, sigma,
                                                          module, budget)
            if ok is not True:
                raise MalformedTrace(
                    f"condition of equation {label} does not hold under the "
                    "recorded substitution")
    step = MicroStep(kind, label, pos, sigma, cur, cur, cond_traces, cond_insts)
    try:
        after = replay_microstep(step, module)
    except EngineError as e:
        raise MalformedTrace(str(e))
    step.after = after
    return step


def trace_from_wire(data: dict, module: ProgramModule,
                    limits: Optional[Limits] = None) -> Trace:
    """Parse, replay, and validate a wire-format trace."""
    limits = limits or Limits()
    budget = Budget(limits)
    try:
        states = [canonical(parse_term(s, module, allow_fresh=True))
                  for s in data["states"]]
    except ParseError as e:
        raise MalformedTrace(f"unparseable state: {e}")
    if not states:
        raise MalformedTrace("trace has no states")
    bigsteps = []
    for i, entry in enumerate(data.get("bigsteps", [])):
        before = states[i]
        rule = module.rule_by_label(entry["rule"])
        sigma = _subst_from_wire(entry.get("sigma", {}), module)
        pos = tuple(entry["position"])
        cond_traces: tuple = ()
        cond_insts: tuple = ()
        if rule.condition:
            ok, cond_traces, cond_insts = _eval_condition(rule.condition, sigma,
                                                          module, budget)
            if ok is not True:
                raise MalformedTrace(
                    f"condition of rule {rule.label} does not hold under the "
                    f"recorded substitution at big step {i}")
        rule_step = MicroStep("rule", rule.label, pos, sigma, before, before,
                              cond_traces, cond_insts)
        try:
            redex = before.subterm_at(pos)
        except Exception:
            raise MalformedTrace(f"big step {i}: position out of range")
        from .matching import match_modulo
        if not any(m.subst == sigma for m in
                   match_modulo(rule.lhs, redex, module,
                                limit=limits.ac_assignments)):
            raise MalformedTrace(
                f"big step {i}: recorded substitution is not a matcher of "
                f"{rule.label} at its position")
        rule_step.after = replay_microstep(rule_step, module)
        cur = rule_step.after
        micro = []
        for m_entry in entry.get("micro", []):
            step = _replay_micro(cur, m_entry, module, budget)
            micro.append(step)
            cur = step.after
        if i + 1 >= len(states) or cur != states[i + 1]:
            raise MalformedTrace(
                f"big step {i}: replayed state does not chain with the "
                "recorded states")
        bigsteps.append(BigStep(rule_step, tuple(micro), cur))
    if "canonical" in data:
        final = canonical(parse_term(data["canonical"], module, allow_fresh=True))
        if final != states[-1]:
            raise MalformedTrace("final state does not match 'canonical'")
    return Trace(module, states[0], (), states, bigsteps)


def violation_to_wire(v: Violation) -> dict:
    return {"kind": v.kind, "assertion": v.assertion_index,
            "state": v.state_index, "position": list(v.bug_position),
            "theta": _subst_to_wire(v.theta), "failed": list(v.failed)}


def slice_to_wire(s: TraceSlice) -> dict:
    wire = trace_to_wire(s.trace)
    wire["states"] = [render(s.masked_state(i)) for i in range(len(s.trace.states))]
    wire["canonical"] = wire["states"][-1]
    wire["masks"] = [sorted(list(p) for p in mask) for mask in s.state_masks]
    trusted: list[bool] = []
    for infos in s.step_info:
        trusted.extend(info.trusted for info in infos)
    wire["trusted"] = trusted
    wire["criterion"] = {"state": s.criterion.state_index,
                         "positions": sorted(list(p) for p in s.criterion.positions)}
    wire["bigstepRelevant"] = list(s.bigstep_relevant)
    return wire


def suggestion_to_wire(s: RepairSuggestion) -> dict:
    return {"rule": s.original.label, "fixed": s.source,
            "sigmaRho": _subst_to_wire(s.sigma_rho),
            "sigmaS": _subst_to_wire(s.sigma_s),
            "sigmaRule": _subst_to_wire(s.sigma_rule),
            "sigmaNew": _subst_to_wire(s.sigma_new)}


def term_tree(t: Term) -> dict:
    """Term as a JSON tree (kind/op/children); holes have kind 'hole'."""
    from .terms import App, Hole, Int, Qid, Wildcard
    if isinstance(t, App):
        return {"kind": "app", "op": t.op.name,
                "children": [term_tree(a) for a in t.args]}
    if isinstance(t, Hole):
        return {"kind": "hole"}
    if isinstance(t, Int):
        return {"kind": "int", "value": t.value}
    if isinstance(t, Qid):
        return {"kind": "qid", "name": t.name}
    if isinstance(t, Fresh):
        return {"kind": "fresh", "index": t.index}
    if isinstance(t, Wildcard):
        return {"kind": "wildcard", "reported": t.reported, "index": t.index}
    return {"kind": "var", "name": t.name, "sort": t.sort, "masked": t.masked}


def state_spans(t: Term) -> dict:
    text, spans = render_with_spans(t)
    return {"text": text,
            "spans": [{"position": list(p), "start": a, "end": b}
                      for p, a, b in spans]}


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, ensure_ascii=False) + "\n"
