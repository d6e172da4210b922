"""rwlab: tracing interpreter, runtime assertion checker, backward trace
slicer, and rule repairer for a Maude-like conditional rewriting language."""

from .terms import (App, Fresh, Hole, Int, OperatorDecl, Position, Qid, Subst,
                    Term, Var, canonical, make_app, replace_at, substitute)
from .module import Equation, ProgramModule, Rule, Signature
from .parser import (FunctionalAssertion, ParseError, SystemAssertion,
                     parse_assertions, parse_program, parse_query, parse_term)
from .printer import render, render_with_spans
from .matching import Match, match_modulo
from .unify import UnifierPair, compose_parallel, unify_modulo
from .generalize import lgg_modulo
from .engine import (BigStep, Limits, MicroStep, Trace, apply_rule, execute,
                     explore, normalize, search)
from .assertions import (Violation, check_simplification, check_state,
                         check_trace_async, eval_formula, run_checked_sync)
from .slicer import (Criterion, TraceSlice, criterion_from_roots,
                     program_slice, refine, slice_backward,
                     synthesize_criterion)
from .repair import RepairSuggestion, repair_rule, split_bindings
from .query import QueryHit, query_trace

__version__ = "0.1.0"
