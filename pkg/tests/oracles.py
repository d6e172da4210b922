"""Independent brute-force oracles and random generators for the test suite.

Nothing here reuses the canonicalization, matching, or slicing logic under
test beyond what the oracle explicitly validates at a lower layer:
  - axiom-closure equality works on raw binary trees;
  - the brute matcher enumerates candidate images from subject blocks;
  - the slicing oracle replays recorded steps with one position masked by an
    opaque wrapper and watches whether the observed criterion view survives.
"""

from __future__ import annotations

import random
from typing import Optional

from rwlab.engine import Budget, Limits, builtin_reduce, bool_value, normalize
from rwlab.matching import match_modulo
from rwlab.module import ANY_SORT, ProgramModule
from rwlab.terms import (App, Hole, OPAQUE_WRAPPER, OperatorDecl, Position,
                         Subst, Term, Var, Wildcard, canonical, replace_at,
                         substitute)

CLOSURE_CAP = 60_000


# --- axiom-closure equality on raw binary trees ------------------------------

def strip_identities(t: Term) -> Term:
    if not isinstance(t, App):
        return t
    args = [strip_identities(a) for a in t.args]
    if t.op.identity is not None and len(args) == 2:
        if args[0] == t.op.identity:
            return args[1]
        if args[1] == t.op.identity:
            return args[0]
    return App(t.op, tuple(args))


def _rewrites(t: Term):
    """One-step comm/assoc variants at the root."""
    if not isinstance(t, App):
        return
    op = t.op
    if op.comm and len(t.args) == 2:
        yield App(op, (t.args[1], t.args[0]))
    if op.assoc and len(t.args) == 2:
        a, b = t.args
        if isinstance(a, App) and a.op.key() == op.key() and len(a.args) == 2:
            yield App(op, (a.args[0], App(op, (a.args[1], b))))
        if isinstance(b, App) and b.op.key() == op.key() and len(b.args) == 2:
            yield App(op, (App(op, (a, b.args[0])), b.args[1]))


def _variants_step(t: Term):
    yield from _rewrites(t)
    if isinstance(t, App):
        for i, a in enumerate(t.args):
            for v in _variants_step(a):
                args = list(t.args)
                args[i] = v
                yield App(t.op, tuple(args))


def closure(t: Term, cap: int = CLOSURE_CAP) -> set[Term]:
    t = strip_identities(t)
    seen = {t}
    frontier = [t]
    while frontier:
        nxt = []
        for u in frontier:
            for v in _variants_step(u):
                if v not in seen:
                    if len(seen) >= cap:
                        raise RuntimeError("closure cap exceeded")
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen


def ax_equal_oracle(t1: Term, t2: Term) -> bool:
    c1 = closure(t1)
    u = strip_identities(t2)
    if u in c1:
        return True
    return bool(c1 & closure(t2))


# --- brute-force matcher ------------------------------------------------------

def _blocks(subject: Term, module: ProgramModule) -> list[Term]:
    """Candidate variable images: subterms, wrapped sub-multisets of axiom
    nodes, and identity constants of every declared operator."""
    out: list[Term] = []
    seen = set()

    def add(t: Term):
        if t not in seen:
            seen.add(t)
            out.append(t)

    for ops in module.signature.ops.values():
        for op in ops:
            if op.identity is not None:
                add(op.identity)
    for pos in subject.positions():
        sub = subject.subterm_at(pos)
        add(sub)
        if isinstance(sub, App):
            op = sub.op
            if op.assoc and len(sub.args) > 2:
                n = len(sub.args)
                for mask in range(1, 2 ** n - 1):
                    parts = [sub.args[i] for i in range(n) if mask >> i & 1]
                    if len(parts) >= 2:
                        add(canonical(App(op, tuple(parts))))
    return out


def brute_matchers(pattern: Term, subject: Term, module: ProgramModule,
                   cap: int = 300_000) -> set:
    """All substitutions sigma with pattern*sigma equal to the subject modulo
    axioms, images drawn from subject blocks."""
    variables = [v for v in pattern.variables()]
    candidates = _blocks(subject, module)
    results = set()
    budget = [cap]

    def assign(i: int, sigma: Subst):
        if budget[0] <= 0:
            raise RuntimeError("brute matcher cap exceeded")
        if i == len(variables):
            budget[0] -= 1
            inst = substitute(pattern, sigma)
            if inst == subject:  # canonical identity, validated separately
                results.add(tuple(sorted((repr(v), img)
                                         for v, img in sigma.items())))
            return
        v = variables[i]
        for img in candidates:
            if module.signature.fits(img, v.sort):
                sigma[v] = img
                assign(i + 1, sigma)
                del sigma[v]

    assign(0, {})
    return results


def match_key_set(matches) -> set:
    return {tuple(sorted((repr(v), img) for v, img in m.subst.items()))
            for m in matches}


# --- exhaustive lgg candidates -------------------------------------------------

def lgg_candidates(t1: Term, t2: Term, bound: int = 30_000) -> list[Term]:
    """Every generalizer reachable by exhaustively enumerating child
    alignments; disagreements share variables via a threaded environment."""
    count = [0]

    def var_for(env: dict, a: Term, b: Term):
        env = dict(env)
        key = (a, b)
        if key not in env:
            env[key] = Var(f"G{len(env) + 1}", ANY_SORT)
        return env[key], env

    def tick():
        count[0] += 1
        if count[0] > bound:
            raise RuntimeError("lgg candidate cap exceeded")

    def gen(a: Term, b: Term, env: dict):
        tick()
        if a == b:
            yield (a, env)
        if isinstance(a, App) and isinstance(b, App) and a.op.key() == b.op.key():
            op = a.op
            if not (op.assoc or op.comm or op.identity is not None):
                yield from zip_all(op, list(a.args), list(b.args), env)
            elif op.comm:
                yield from multiset(op, list(a.args), list(b.args), env)
            else:
                yield from ordered(op, list(a.args), list(b.args), env)
        v, env2 = var_for(env, a, b)
        yield (v, env2)

    def zip_all(op, la, lb, env):
        def go(i, acc, env2):
            if i == len(la):
                yield (App(op, tuple(acc)), env2)
                return
            for sub, env3 in gen(la[i], lb[i], env2):
                yield from go(i + 1, acc + [sub], env3)
        if len(la) == len(lb):
            yield from go(0, [], env)

    def mk_block(op, parts):
        if not parts:
            return op.identity
        if len(parts) == 1:
            return parts[0]
        if not op.assoc:
            return None
        return canonical(App(op, tuple(parts)))

    def multiset(op, la, lb, env):
        def go(i, remaining, acc, env2, skipped):
            tick()
            if i == len(la):
                if not skipped and not remaining:
                    if len(acc) >= 2:
                        yield (canonical(App(op, tuple(acc))), env2)
                    return
                lblock = mk_block(op, skipped)
                rblock = mk_block(op, list(remaining))
                if lblock is None or rblock is None:
                    return
                if not acc:
                    return
                v, env3 = var_for(env2, lblock, rblock)
                yield (canonical(App(op, tuple(acc + [v]))), env3)
                return
            x = la[i]
            for j, y in enumerate(remaining):
                for sub, env3 in gen(x, y, env2):
                    yield from go(i + 1, remaining[:j] + remaining[j + 1:],
                                  acc + [sub], env3, skipped)
            yield from go(i + 1, remaining, acc, env2, skipped + [x])
        yield from go(0, list(lb), [], env, [])

    def ordered(op, la, lb, env):
        def go(li, ri, acc, env2, after_gap):
            tick()
            if li == len(la) and ri == len(lb):
                if len(acc) >= 2:
                    yield (App(op, tuple(acc)), env2)
                return
            if li < len(la) and ri < len(lb):
                for sub, env3 in gen(la[li], lb[ri], env2):
                    yield from go(li + 1, ri + 1, acc + [sub], env3, False)
            if after_gap:
                return
            lo = 0 if op.identity is not None else 1
            for gl in range(lo, len(la) - li + 1):
                for gr in range(lo, len(lb) - ri + 1):
                    if gl == 0 and gr == 0:
                        continue
                    lblock = mk_block(op, la[li:li + gl])
                    rblock = mk_block(op, lb[ri:ri + gr])
                    if lblock is None or rblock is None:
                        continue
                    v, env3 = var_for(env2, lblock, rblock)
                    yield from go(li + gl, ri + gr, acc + [v], env3, True)
        yield from go(0, 0, [], env, False)

    seen = set()
    out: list[Term] = []
    for term, _env in gen(canonical(t1), canonical(t2), {}):
        t = canonical(term)
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def generalizes(g: Term, t: Term, module: ProgramModule) -> bool:
    return bool(match_modulo(g, t, module))


def strictly_more_specific(a: Term, b: Term, module: ProgramModule) -> bool:
    """a is an instance of b but not vice versa (a is less general)."""
    a_inst_b = bool(match_modulo(b, a, module))
    b_inst_a = bool(match_modulo(a, b, module))
    return a_inst_b and not b_inst_a


# --- masking replay oracle for slicing -----------------------------------------

def make_opaque_op() -> OperatorDecl:
    return OperatorDecl(OPAQUE_WRAPPER, (ANY_SORT,), ANY_SORT)


_OPAQUE = make_opaque_op()


def mask_at(state: Term, pos: Position) -> Term:
    return replace_at(state, pos, App(_OPAQUE, (state.subterm_at(pos),)))


def _steps_between(trace, start_state: int, end_state: int):
    steps = []
    for i in range(start_state, end_state):
        big = trace.bigsteps[i]
        steps.append(big.rule_step)
        steps.extend(big.simplification)
    return steps


def _condition_holds(condition, sigma, module) -> bool:
    try:
        for conj in condition:
            nf, _ = normalize(substitute(conj, sigma), module, record=False,
                              limits=Limits(micro_steps=2000))
            if bool_value(module, nf) is not True:
                return False
        return True
    except Exception:
        return False


def _apply_recorded(cur: Term, step, w: Position, module) -> Optional[Term]:
    """Try to re-apply one recorded step at position w of `cur`."""
    try:
        redex = cur.subterm_at(w)
    except Exception:
        return None
    if step.kind == "builtin":
        if step.label == "if_then_else_fi":
            if not (isinstance(redex, App) and
                    redex.op.name == "if_then_else_fi"):
                return None
            v = bool_value(module, redex.args[0])
            if v is None:
                return None
            return replace_at(cur, w, redex.args[1 if v else 2])
        if not isinstance(redex, App):
            return None
        result = builtin_reduce(redex, module)
        if result is None:
            return None
        return replace_at(cur, w, result)
    if step.kind == "rule":
        src = module.rule_by_label(step.label)
    else:
        src = module.equation_by_label(step.label)
    for m in match_modulo(src.lhs, redex, module):
        if src.condition and not _condition_holds(src.condition, m.subst,
                                                  module):
            continue
        return replace_at(cur, w, substitute(src.rhs, m.subst))
    return None


def skip_replay(trace, module, state_index: int, mask_pos: Position,
                upto_state: int) -> Term:
    """Replay the recorded steps with one position masked.  A step is first
    tried at its recorded position; if that fails (positions drift once a
    step was skipped), the recorded redex is located elsewhere by structural
    equality.  Steps that still fail are skipped."""
    cur = mask_at(trace.states[state_index], mask_pos)
    for step in _steps_between(trace, state_index, upto_state):
        recorded_redex = step.before.subterm_at(step.position)
        nxt = None
        try:
            in_place = cur.subterm_at(step.position) == recorded_redex
        except Exception:
            in_place = False
        if in_place:
            nxt = _apply_recorded(cur, step, step.position, module)
        if nxt is None:
            hidden: set[Position] = set()
            for p in cur.positions():
                sub = cur.subterm_at(p)
                if isinstance(sub, App) and sub.op.name == OPAQUE_WRAPPER:
                    hidden.update(p + rest for rest in sub.positions() if rest)
                if p in hidden or p == step.position:
                    continue
                if sub == recorded_redex:
                    nxt = _apply_recorded(cur, step, p, module)
                    if nxt is not None:
                        break
        if nxt is None and not in_place:
            # poisoned or reshaped redex: the recorded spot is still the
            # genuine target
            nxt = _apply_recorded(cur, step, step.position, module)
        if nxt is not None:
            cur = nxt
    return cur


def view_pattern(state: Term, relevant: set[Position], pos: Position = ()
                 ) -> Term:
    """The criterion view as a pattern: kept positions stay literal, masked
    subtrees become '_' wildcards (merged under flattened operators)."""
    if pos not in relevant:
        return Wildcard(False)
    if isinstance(state, App) and state.args:
        kids = [view_pattern(a, relevant, pos + (i,))
                for i, a in enumerate(state.args, start=1)]
        if state.op.comm and (state.op.assoc or state.op.identity is not None):
            # multiset node: one wildcard absorbs all masked children
            solid = [k for k in kids if not isinstance(k, Wildcard)]
            merged = solid + ([Wildcard(False)] if len(solid) < len(kids)
                              else [])
        elif state.op.assoc:
            merged = []
            for k in kids:
                if isinstance(k, Wildcard) and merged and \
                        isinstance(merged[-1], Wildcard):
                    continue
                merged.append(k)
        else:
            return App(state.op, tuple(kids))
        if len(merged) == 1:
            return merged[0]
        return App(state.op, tuple(merged))
    return state


def oracle_relevant_positions(trace, criterion_state: int,
                              criterion_positions: set[Position],
                              module) -> list[set[Position]]:
    """For each state up to the criterion state, the positions whose masking
    changes the observed criterion view under skip-replay."""
    from rwlab.terms import ancestor_closure
    crit_closed = ancestor_closure(set(criterion_positions))
    final = trace.states[criterion_state]
    pattern = view_pattern(final, crit_closed)
    out = []
    for i in range(criterion_state + 1):
        rel = set()
        for q in trace.states[i].positions():
            divergent = skip_replay(trace, module, i, q, criterion_state)
            if not match_modulo(pattern, divergent, module):
                rel.add(q)
        out.append(rel)
    return out


# --- random generators ---------------------------------------------------------

class SigSpec:
    """A small randomized signature over one sort plus Int."""

    def __init__(self, rng: random.Random, with_acu: bool = True):
        from rwlab.module import builtin_signature
        self.sig = builtin_signature()
        self.sig.declare_sort("U")
        self.sig.declare_subsort("Int", "U")
        mk = self.sig.declare_op
        self.consts = [mk(OperatorDecl(n, (), "U")) for n in "abcd"]
        self.e = mk(OperatorDecl("e", (), "U"))
        style = rng.choice(["acu", "ac", "a", "c"]) if with_acu else "free"
        identity = App(self.e, ()) if style == "acu" else None
        self.f = mk(OperatorDecl("f", ("U", "U"), "U",
                                 assoc=style in ("acu", "ac", "a"),
                                 comm=style in ("acu", "ac", "c"),
                                 identity=identity))
        self.g = mk(OperatorDecl("g", ("U",), "U"))
        self.h = mk(OperatorDecl("h", ("U", "U"), "U"))
        # reserved for equation right sides; rules never introduce it
        self.k = mk(OperatorDecl("k", ("U",), "U"))
        self.style = style

    def module(self) -> ProgramModule:
        return ProgramModule(signature=self.sig)


def random_ground(rng: random.Random, spec: SigSpec, size: int,
                  allow_identity: bool = False) -> Term:
    consts = list(spec.consts) + ([spec.e] if allow_identity else [])
    if size <= 1:
        return App(rng.choice(consts), ())
    op = rng.choice([spec.g] if size < 3 else [spec.g, spec.h, spec.f, spec.f])
    if op.arity == 1:
        return App(op, (random_ground(rng, spec, size - 1, allow_identity),))
    left = rng.randint(1, size - 2)
    return App(op, (random_ground(rng, spec, left, allow_identity),
                    random_ground(rng, spec, size - 1 - left, allow_identity)))


def random_pattern(rng: random.Random, spec: SigSpec, size: int,
                   vars_pool: list[Var]) -> Term:
    if size <= 1:
        if rng.random() < 0.55:
            return rng.choice(vars_pool)
        return App(rng.choice(spec.consts), ())
    op = rng.choice([spec.g] if size < 3 else [spec.g, spec.h, spec.f, spec.f])
    if op.arity == 1:
        return App(op, (random_pattern(rng, spec, size - 1, vars_pool),))
    left = rng.randint(1, size - 2)
    return App(op, (random_pattern(rng, spec, left, vars_pool),
                    random_pattern(rng, spec, size - 1 - left, vars_pool)))


def has_duplicate_siblings(t: Term) -> bool:
    """Flattened nodes with equal children: interchangeable for matching and
    for hole-absorbing view comparison, so masking oracles cannot tell the
    copies apart."""
    if not isinstance(t, App):
        return False
    if (t.op.assoc or t.op.comm) and len(t.args) != len(set(t.args)):
        return True
    return any(has_duplicate_siblings(a) for a in t.args)
