"""File-backed analysis sessions.

A session captures one analysis run: program, assertions, initial term or
input trace, bound, mode, and every derived artifact (trace, violations,
slices, repairs).  Ids are content hashes, so identical inputs share a
session; stored sessions reload to equal state.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .assertions import CheckReport, check_trace_async, run_checked_sync
from .engine import Limits, Trace, execute
from .module import ProgramModule
from .parser import parse_assertions, parse_program, parse_term
from . import wire as wire_mod


@dataclass
class SessionInputs:
    program: str
    assertions: str = ""
    initial: str = ""
    bound: int = 0
    mode: str = "sync"  # sync | async | plain
    strategy: Optional[list[str]] = None
    trace: Optional[dict] = None  # wire-format trace for async checking

    def digest(self) -> str:
        payload = json.dumps({
            "program": self.program, "assertions": self.assertions,
            "initial": self.initial, "bound": self.bound, "mode": self.mode,
            "strategy": self.strategy, "trace": self.trace,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


class Session:
    def __init__(self, inputs: SessionInputs, limits: Limits):
        self.inputs = inputs
        self.id = inputs.digest()
        self.limits = limits
        self.created_at = time.time()
        self.module: ProgramModule = parse_program(inputs.program)
        self.assertions = parse_assertions(inputs.assertions, self.module) \
            if inputs.assertions.strip() else []
        self.report = CheckReport()
        self.trace: Trace = self._build_trace()
        self.violation = self._check()
        self.slices: dict[str, dict] = {}  # slice id -> stored payload
        self.repairs: Optional[list[dict]] = None
        self._slice_objects: dict[str, object] = {}

    def _build_trace(self) -> Trace:
        ins = self.inputs
        if ins.trace is not None:
            return wire_mod.trace_from_wire(ins.trace, self.module, self.limits)
        t0 = parse_term(ins.initial, self.module)
        if ins.mode == "sync" and self.assertions:
            trace, violation = run_checked_sync(
                t0, self.module, self.assertions, ins.bound,
                strategy=ins.strategy, limits=self.limits,
                collect=self.report)
            self._sync_violation = violation
            return trace
        self._sync_violation = None
        return execute(t0, self.module, ins.bound, strategy=ins.strategy,
                       limits=self.limits)

    def _check(self):
        if self.inputs.mode == "plain" or not self.assertions:
            return None
        if self.inputs.mode == "sync" and self.inputs.trace is None:
            return self._sync_violation
        return check_trace_async(self.trace, self.assertions, self.module,
                                 self.limits, collect=self.report)

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "createdAt": self.created_at,
            "inputs": {
                "program": self.inputs.program,
                "assertions": self.inputs.assertions,
                "initial": self.inputs.initial,
                "bound": self.inputs.bound,
                "mode": self.inputs.mode,
                "strategy": self.inputs.strategy,
                "trace": self.inputs.trace,
            },
            "trace": wire_mod.trace_to_wire(self.trace),
            "violation": wire_mod.violation_to_wire(self.violation)
            if self.violation else None,
            "diagnostics": list(self.report.diagnostics),
            "slices": self.slices,
            "repairs": self.repairs,
        }


class SessionStore:
    def __init__(self, directory: str, limits: Optional[Limits] = None):
        self.directory = directory
        self.limits = limits or Limits()
        os.makedirs(directory, exist_ok=True)
        self._lock = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._live: dict[str, Session] = {}

    def lock_for(self, sid: str) -> threading.Lock:
        with self._lock:
            return self._locks.setdefault(sid, threading.Lock())

    def _path(self, sid: str) -> str:
        return os.path.join(self.directory, f"{sid}.json")

    def _index_path(self) -> str:
        return os.path.join(self.directory, "index.json")

    def _update_index(self, session: Session):
        index = {}
        if os.path.exists(self._index_path()):
            with open(self._index_path()) as f:
                index = json.load(f)
        index[session.id] = {
            "createdAt": session.created_at,
            "mode": session.inputs.mode,
            "violation": session.violation is not None,
        }
        with open(self._index_path(), "w") as f:
            json.dump(index, f, indent=1, sort_keys=True)

    def create(self, inputs: SessionInputs) -> Session:
        sid = inputs.digest()
        existing = self.get(sid)
        if existing is not None:
            return existing
        session = Session(inputs, self.limits)
        self.save(session)
        return session

    def save(self, session: Session):
        with open(self._path(session.id), "w") as f:
            f.write(wire_mod.dumps(session.to_payload()))
        self._update_index(session)
        self._live[session.id] = session

    def get(self, sid: str) -> Optional[Session]:
        if sid in self._live:
            return self._live[sid]
        path = self._path(sid)
        if not os.path.exists(path):
            return None
        with open(path) as f:
            payload = json.load(f)
        ins = payload["inputs"]
        inputs = SessionInputs(ins["program"], ins["assertions"], ins["initial"],
                               ins["bound"], ins["mode"], ins["strategy"],
                               ins["trace"])
        session = Session(inputs, self.limits)
        session.created_at = payload["createdAt"]
        session.slices = payload.get("slices") or {}
        session.repairs = payload.get("repairs")
        self._live[sid] = session
        return session

    def delete(self, sid: str) -> bool:
        self._live.pop(sid, None)
        path = self._path(sid)
        if not os.path.exists(path):
            return False
        os.remove(path)
        if os.path.exists(self._index_path()):
            with open(self._index_path()) as f:
                index = json.load(f)
            index.pop(sid, None)
            with open(self._index_path(), "w") as f:
                json.dump(index, f, indent=1, sort_keys=True)
        return True

    def list_ids(self) -> list[str]:
        if not os.path.exists(self._index_path()):
            return []
        with open(self._index_path()) as f:
            return sorted(json.load(f).keys())
