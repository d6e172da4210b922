"""Session-oriented HTTP API for the analysis toolkit.

Endpoints (JSON bodies/responses):
  POST   /sessions                          create/analyze a session
  GET    /sessions/{id}                     full stored session
  POST   /sessions/{id}/slice              slice (auto or explicit criterion)
  POST   /sessions/{id}/refine             refine the active slice
  POST   /sessions/{id}/query              run a trace query
  GET    /sessions/{id}/graph?depth=N      computation tree + quotient graph
  GET    /sessions/{id}/repairs            repair suggestions
  DELETE /sessions/{id}

Parse errors are 400 with line/column, unknown sessions 404, invalid
criteria/refinements 422, engine limits 507.
"""

from __future__ import annotations

import hashlib
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import wire as wire_mod
from .config import Config
from .engine import (EngineError, NodeLimitExceeded, StepLimitExceeded,
                     explore)
from .parser import ParseError, parse_query, parse_term
from .query import query_trace
from .repair import RepairError, repair_rule
from .session import SessionInputs, SessionStore
from .slicer import (Criterion, EmptyCriterion, InvalidRefinement, SliceError,
                     criterion_from_roots, render_slice_lines, refine,
                     slice_backward, synthesize_criterion)


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _slice_id(criterion: Criterion, trusted: bool) -> str:
    payload = f"{criterion.state_index}|{sorted(criterion.positions)}|{trusted}"
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def create_app(config: Optional[Config] = None,
               ui_dir: Optional[str] = None) -> FastAPI:
    config = config or Config()
    store = SessionStore(config.session_dir, config.limits())
    app = FastAPI(title="rwlab", version="0.1.0")
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse({"error": exc.message}, status_code=exc.status)

    def _get(sid: str):
        session = store.get(sid)
        if session is None:
            raise ApiError(404, f"unknown session {sid}")
        return session

    def _wrap(fn):
        try:
            return fn()
        except ParseError as e:
            raise ApiError(400, str(e))
        except wire_mod.MalformedTrace as e:
            raise ApiError(400, f"malformed trace: {e}")
        except (InvalidRefinement, EmptyCriterion) as e:
            raise ApiError(422, str(e))
        except SliceError as e:
            raise ApiError(422, str(e))
        except (StepLimitExceeded, NodeLimitExceeded) as e:
            raise ApiError(507, str(e))
        except (EngineError, RepairError) as e:
            raise ApiError(422, str(e))

    def _session_response(session) -> dict:
        trace_wire = wire_mod.trace_to_wire(session.trace)
        dup = []
        seen = set()
        for s in session.trace.states:
            dup.append(s in seen)
            seen.add(s)
        return {
            "id": session.id,
            "trace": trace_wire,
            "violation": wire_mod.violation_to_wire(session.violation)
            if session.violation else None,
            "diagnostics": list(session.report.diagnostics),
            "spans": [wire_mod.state_spans(s) for s in session.trace.states],
            "dupStates": dup,
        }

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        def go():
            inputs = SessionInputs(
                program=body.get("program", ""),
                assertions=body.get("assertions", ""),
                initial=body.get("initial", ""),
                bound=int(body.get("bound", 0)),
                mode=body.get("mode", "sync"),
                strategy=body.get("strategy"),
                trace=body.get("trace"),
            )
            if not inputs.program.strip():
                raise ApiError(400, "missing program")
            if inputs.trace is None and not inputs.initial.strip():
                raise ApiError(400, "missing initial term (or input trace)")
            session = store.create(inputs)
            return _session_response(session)
        return _wrap(go)

    @app.get("/sessions/{sid}")
    async def get_session(sid: str):
        session = _get(sid)
        payload = session.to_payload()
        payload.update(_session_response(session))
        return payload

    def _criterion_from_body(session, body) -> Criterion:
        if body.get("auto") or "criterion" not in body:
            if session.violation is None:
                raise ApiError(422, "no violation to synthesize a criterion from")
            return synthesize_criterion(session.violation, session.trace,
                                        session.module)
        crit = body["criterion"]
        state = int(crit["state"])
        if not (0 <= state < len(session.trace.states)):
            raise ApiError(422, f"criterion state {state} out of range")
        roots = [tuple(p) for p in crit.get("roots", crit.get("positions", []))]
        if not roots:
            raise ApiError(422, "criterion needs at least one position")
        state_term = session.trace.states[state]
        valid = set(state_term.positions())
        for r in roots:
            if r not in valid:
                raise ApiError(422, f"position {list(r)} not in state {state}")
        return criterion_from_roots(state_term, roots, state)

    def _slice_response(session, sl, sid_slice) -> dict:
        payload = wire_mod.slice_to_wire(sl)
        return {
            "id": sid_slice,
            "slice": payload,
            "lines": render_slice_lines(sl),
            "criterion": {"state": sl.criterion.state_index,
                          "positions": sorted(list(p) for p in
                                              sl.criterion.positions),
                          "rendered": sl.criterion.rendered(sl.trace)},
            "relevantLabels": sl.relevant_labels,
            "spans": [wire_mod.state_spans(sl.masked_state(i))
                      for i in range(len(sl.trace.states))],
        }

    @app.post("/sessions/{sid}/slice")
    async def make_slice(sid: str, body: dict):
        session = _get(sid)

        def go():
            with store.lock_for(sid):
                trusted = bool(body.get("trusted", config.trusted_default))
                criterion = _criterion_from_body(session, body)
                sl = slice_backward(session.trace, criterion, session.module,
                                    trusted=trusted, limits=session.limits)
                slice_id = _slice_id(criterion, trusted)
                response = _slice_response(session, sl, slice_id)
                session.slices[slice_id] = {
                    "criterion": response["criterion"], "trusted": trusted,
                    "wire": response["slice"]}
                session._slice_objects[slice_id] = sl
                store.save(session)
                return response
        return _wrap(go)

    @app.post("/sessions/{sid}/refine")
    async def refine_slice(sid: str, body: dict):
        session = _get(sid)

        def go():
            with store.lock_for(sid):
                base_id = body.get("slice")
                if base_id is None and session._slice_objects:
                    base_id = sorted(session._slice_objects)[-1]
                base = session._slice_objects.get(base_id)
                if base is None:
                    raise ApiError(422, "no slice to refine; POST /slice first")
                criterion = _criterion_from_body(session, body)
                sl = refine(base, session.trace, criterion, session.module,
                            limits=session.limits)
                slice_id = _slice_id(criterion, base.trusted_mode)
                response = _slice_response(session, sl, slice_id)
                session.slices[slice_id] = {
                    "criterion": response["criterion"],
                    "trusted": base.trusted_mode, "wire": response["slice"]}
                session._slice_objects[slice_id] = sl
                store.save(session)
                return response
        return _wrap(go)

    @app.post("/sessions/{sid}/query")
    async def run_query(sid: str, body: dict):
        session = _get(sid)

        def go():
            pattern = parse_query(body.get("pattern", ""), session.module)
            hits = query_trace(session.trace, pattern, session.module,
                               session.limits)
            from .printer import render
            return {"hits": [
                {"state": h.state_index, "position": list(h.position),
                 "reported": {str(k): render(v) for k, v in
                              sorted(h.reported.items())}}
                for h in hits]}
        return _wrap(go)

    @app.get("/sessions/{sid}/graph")
    async def graph(sid: str, depth: int = 1):
        session = _get(sid)

        def go():
            from .printer import render
            g = explore(session.trace.states[0], session.module, depth,
                        session.limits)
            return {
                "tree": [{"id": n.id, "state": render(n.state),
                          "parent": n.parent, "rule": n.rule,
                          "depth": n.depth} for n in g.tree],
                "graph": [{"id": n.id, "state": render(n.state),
                           "members": n.members, "anchor": n.anchor}
                          for n in g.graph],
                "edges": [{"src": a, "dst": b, "rule": r}
                          for a, b, r in g.edges],
                "treeToGraph": {str(k): v for k, v in g.tree_to_graph.items()},
            }
        return _wrap(go)

    @app.get("/sessions/{sid}/repairs")
    async def repairs(sid: str):
        session = _get(sid)

        def go():
            with store.lock_for(sid):
                if session.repairs is not None:
                    return {"suggestions": session.repairs}
                v = session.violation
                if v is None:
                    raise ApiError(422, "no violation to repair")
                if v.kind != "system" or v.state_index == 0:
                    raise ApiError(422, "repair needs a system violation "
                                        "caused by a rule step")
                big = session.trace.bigsteps[v.state_index - 1]
                suggestions = repair_rule(big, v, session.module,
                                          session.limits)
                session.repairs = [wire_mod.suggestion_to_wire(s)
                                   for s in suggestions]
                store.save(session)
                return {"suggestions": session.repairs}
        return _wrap(go)

    @app.delete("/sessions/{sid}")
    async def delete_session(sid: str):
        if not store.delete(sid):
            raise ApiError(404, f"unknown session {sid}")
        return {"deleted": sid}

    return app
