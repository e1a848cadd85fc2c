"""Session service exposing the subspace workflow over HTTP JSON.

A session owns a source mesh, a case assignment, and the cached basis
and spectrum for it.  Changing the assignment bumps the revision and
recomputes asynchronously; compute endpoints reject stale revisions so
a UI can discard out-of-date responses.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .deform import DeformParams, Handle, deform
from .dual import dual_edit, polar_dual
from .errors import PMError
from .mesh import Mesh, counts, planarity_report
from .shapes import Spectrum, bandpass_apply, eigenshapes, graph_laplacian
from .subspace import (
    CaseAssignment,
    build_subspace,
    min_ndof_bound,
    mixed_ndof_bound,
)


@dataclass
class Session:
    id: str
    source: Mesh
    assignment: CaseAssignment
    revision: int = 0
    ready: bool = False
    error: dict | None = None
    constraint: object = None
    basis: object = None
    spectrum: Spectrum | None = None
    current: Mesh | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """In-memory sessions plus the shared recompute pool."""

    def __init__(self, max_workers=4):
        self.sessions = {}
        self.executor = ThreadPoolExecutor(max_workers=max_workers)
        self.recompute_count = 0  # observability for the protocol tests

    def create(self, mesh: Mesh, assignment: CaseAssignment) -> Session:
        sid = uuid.uuid4().hex[:12]
        session = Session(id=sid, source=mesh, assignment=assignment,
                          current=mesh)
        self.sessions[sid] = session
        self._schedule(session)
        return session

    def get(self, sid) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise KeyError(sid)
        return session

    def set_cases(self, session: Session, assignment: CaseAssignment):
        with session.lock:
            session.assignment = assignment
            session.revision += 1
            session.ready = False
            session.error = None
            session.current = session.source
        self._schedule(session)

    def _schedule(self, session: Session):
        revision = session.revision
        self.recompute_count += 1
        self.executor.submit(self._recompute, session, revision)

    def _recompute(self, session: Session, revision):
        try:
            constraint, basis = build_subspace(session.source,
                                               session.assignment)
            spectrum = eigenshapes(basis, graph_laplacian(session.source),
                                   constraint=constraint)
            error = None
        except PMError as exc:
            constraint = basis = spectrum = None
            error = _error_payload(exc)
        with session.lock:
            if session.revision != revision:
                return  # a newer assignment superseded this job
            session.constraint = constraint
            session.basis = basis
            session.spectrum = spectrum
            session.error = error
            session.ready = True


def _error_payload(exc: PMError):
    payload = {"code": type(exc).__name__, "message": str(exc)}
    for attr in ("faces", "vertices", "residuals", "face_id", "edge"):
        value = getattr(exc, attr, None)
        if value is not None:
            payload[attr] = value if not isinstance(value, np.ndarray) \
                else value.tolist()
    return payload


def _mesh_payload(mesh: Mesh, session: Session):
    return {
        "vertices": mesh.vertices.tolist(),
        "faces": [list(f) for f in mesh.faces],
        "revision": session.revision,
        "ready": session.ready,
    }


class MeshIn(BaseModel):
    vertices: list
    faces: list
    cases: dict | str | None = None


class CasesIn(BaseModel):
    default: str | dict | None = None
    faces: dict | None = None


class BandpassIn(BaseModel):
    low: float
    high: float
    gain: float
    revision: int


class HandleIn(BaseModel):
    vertex: int
    target: list
    mode: str = "soft"
    weight: float | None = None


class DeformIn(BaseModel):
    handles: list[HandleIn]
    energy: str = "arap"
    iterations: int = 50
    revision: int


class DualIn(BaseModel):
    on: bool
    shape_index: int = 0
    amplitude: float = 0.0
    revision: int


def _parse_cases(raw):
    if raw is None:
        return CaseAssignment("affine")
    if isinstance(raw, str):
        return CaseAssignment(raw)
    return CaseAssignment.from_json_dict(raw)


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="pmspace service")
    app.state.store = store or SessionStore()

    def _get(sid) -> Session:
        try:
            return app.state.store.get(sid)
        except KeyError:
            raise _HTTPStop(404, {"code": "NoSuchSession", "message": sid})

    def _require_ready(session: Session):
        if not session.ready:
            raise _HTTPStop(409, {
                "code": "Recomputing",
                "message": "basis recompute in progress",
                "revision": session.revision,
                "ready": False,
            })
        if session.error is not None:
            raise _HTTPStop(422, session.error)

    def _require_revision(session: Session, revision):
        if revision != session.revision:
            raise _HTTPStop(409, {
                "code": "StaleRevision",
                "message": f"request revision {revision}, "
                           f"current {session.revision}",
                "revision": session.revision,
                "ready": session.ready,
            })

    class _HTTPStop(Exception):
        def __init__(self, status, payload):
            self.status = status
            self.payload = payload

    @app.exception_handler(_HTTPStop)
    async def _stop_handler(_req, exc: _HTTPStop):
        return JSONResponse(status_code=exc.status, content=exc.payload)

    @app.exception_handler(PMError)
    async def _pm_handler(_req, exc: PMError):
        return JSONResponse(status_code=422, content=_error_payload(exc))

    @app.post("/sessions")
    def create_session(body: MeshIn):
        mesh = Mesh(body.vertices, body.faces)
        session = app.state.store.create(mesh, _parse_cases(body.cases))
        return {"id": session.id, "revision": session.revision,
                "ready": session.ready}

    @app.get("/sessions/{sid}/status")
    def status(sid: str):
        session = _get(sid)
        return {"revision": session.revision, "ready": session.ready,
                "error": session.error}

    @app.put("/sessions/{sid}/cases")
    def set_cases(sid: str, body: CasesIn):
        session = _get(sid)
        raw = {"default": body.default or "affine",
               "faces": body.faces or {}}
        app.state.store.set_cases(session,
                                  CaseAssignment.from_json_dict(raw))
        return {"revision": session.revision, "ready": session.ready}

    @app.get("/sessions/{sid}/analysis")
    def analysis(sid: str):
        session = _get(sid)
        _require_ready(session)
        c = counts(session.source)
        if session.assignment.overrides:
            bound, heuristic = mixed_ndof_bound(session.source,
                                                session.assignment)
        else:
            bound = min_ndof_bound(c, session.assignment.default)
            heuristic = False
        return {
            "revision": session.revision,
            "ready": True,
            "counts": {"N_v": c.N_v, "N_e": c.N_e, "N_f": c.N_f,
                       "N_c": c.N_c, "N_b": c.N_b, "b": c.b,
                       "g_paper": c.g_paper},
            "ndof": session.basis.ndof,
            "min_ndof_bound": bound,
            "bound_heuristic": heuristic,
            "decoupled": session.constraint.decoupled,
            "frequencies": list(map(float, session.spectrum.frequencies)),
        }

    @app.post("/sessions/{sid}/bandpass")
    def bandpass(sid: str, body: BandpassIn):
        session = _get(sid)
        _require_ready(session)
        _require_revision(session, body.revision)
        out = bandpass_apply(session.source, session.spectrum,
                             body.low, body.high, body.gain)
        with session.lock:
            session.current = out
        return _mesh_payload(out, session)

    @app.post("/sessions/{sid}/deform")
    def drag_handles(sid: str, body: DeformIn):
        session = _get(sid)
        _require_ready(session)
        _require_revision(session, body.revision)
        if not body.handles:
            payload = _mesh_payload(session.current, session)
            payload["energy"] = []
            return payload
        handles = [Handle(vertex=h.vertex, target=h.target, mode=h.mode,
                          weight=h.weight) for h in body.handles]
        params = DeformParams(energy=body.energy,
                              iterations=body.iterations)
        out, trace = deform(session.basis, session.source, handles, params)
        with session.lock:
            session.current = out
        payload = _mesh_payload(out, session)
        payload["energy"] = [float(e) for e in trace]
        return payload

    @app.post("/sessions/{sid}/dual")
    def dual_view(sid: str, body: DualIn):
        session = _get(sid)
        _require_ready(session)
        _require_revision(session, body.revision)
        if not body.on:
            return _mesh_payload(session.current, session)
        if body.amplitude == 0.0:
            d = polar_dual(session.source)
            return _mesh_payload(d.mesh, session)
        out, residuals = dual_edit(session.source, session.assignment,
                                   shape_index=body.shape_index,
                                   amplitude=body.amplitude)
        with session.lock:
            session.current = out
        payload = _mesh_payload(out, session)
        payload["dual_residuals"] = [float(r) for r in residuals]
        return payload

    @app.get("/sessions/{sid}/export")
    def export(sid: str):
        session = _get(sid)
        mesh = session.current or session.source
        lines = [
            "v " + " ".join(f"{c:.12g}" for c in v) for v in mesh.vertices
        ] + [
            "f " + " ".join(str(i + 1) for i in f) for f in mesh.faces
        ]
        _, worst = planarity_report(mesh)
        return {
            "obj": "\n".join(lines) + "\n",
            "cases": session.assignment.to_json_dict(),
            "revision": session.revision,
            "planarity": worst,
        }

    return app


app = create_app()
