"""Handle-based deformation restricted to a mesh subspace.

Alternates a per-face Procrustes local step with a subspace-constrained
global least-squares step, so the result never leaves the span of the
basis.  Rigid (rotation only) and similarity (scaled rotation) fits are
both supported.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import InfeasibleConstraintError, PMError
from .mesh import Mesh
from .subspace import SubspaceBasis

ARAP = "arap"
ASAP = "asap"

# similarity fits are kept away from collapse / blowup
SCALE_MIN = 1e-3
SCALE_MAX = 1e3


@dataclass(frozen=True)
class Handle:
    """A vertex pinned to a target position, hard or softly weighted."""

    vertex: int
    target: tuple
    mode: str = "soft"  # "hard" or "soft"
    weight: float | None = None  # None: use DeformParams.soft_weight

    def __post_init__(self):
        if self.mode not in ("hard", "soft"):
            raise PMError(f"unknown handle mode {self.mode!r}")
        if self.weight is not None and self.weight <= 0:
            raise PMError("soft handle weight must be positive")
        object.__setattr__(self, "target", tuple(float(c) for c in self.target))


@dataclass
class DeformParams:
    energy: str = ARAP
    iterations: int = 50
    soft_weight: float = 1e4
    convergence_tol: float = 1e-7  # on relative vertex motion

    def __post_init__(self):
        if self.energy not in (ARAP, ASAP):
            raise PMError(f"energy must be {ARAP!r} or {ASAP!r}")
        if self.iterations < 1:
            raise PMError("iterations must be positive")


def _check_handles(handles, n):
    seen = set()
    for h in handles:
        if not 0 <= h.vertex < n:
            raise PMError(f"handle vertex {h.vertex} out of range")
        if h.vertex in seen:
            raise PMError(f"duplicate handle vertex {h.vertex}")
        seen.add(h.vertex)


def local_step(rest: Mesh, current: Mesh, energy=ARAP):
    """Best per-face rotation (or similarity) from rest to current.

    Classic Procrustes on the centered face vertex sets; the sign of the
    smallest singular direction is flipped when needed so every rotation
    has determinant +1.
    """
    if rest.faces != current.faces or rest.n_vertices != current.n_vertices:
        raise PMError("rest and current meshes must share topology")
    transforms = []
    for fid, f in enumerate(rest.faces):
        P = rest.vertices[list(f)]
        X = current.vertices[list(f)]
        P = P - P.mean(axis=0)
        X = X - X.mean(axis=0)
        np_, nx = np.linalg.norm(P), np.linalg.norm(X)
        if np_ < 1e-12 or nx < 1e-12:
            warnings.warn(f"degenerate face {fid} in local step; using identity")
            transforms.append(np.eye(3))
            continue
        S = P.T @ X  # cross-covariance
        U, sig, Vt = np.linalg.svd(S)
        d = np.sign(np.linalg.det(Vt.T @ U.T))
        D = np.diag([1.0, 1.0, d])
        R = Vt.T @ D @ U.T
        if energy == ASAP:
            s = float((sig * np.diag(D)).sum() / (np_**2))
            s = min(max(s, SCALE_MIN), SCALE_MAX)
            R = s * R
        transforms.append(R)
    return transforms


def _face_system(rest: Mesh, transforms):
    """Sparse rows of the stacked face-fitting least squares in vec layout."""
    n = rest.n_vertices
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for f, T in zip(rest.faces, transforms):
        idx = list(f)
        k = len(idx)
        P = rest.vertices[idx]
        G = (P - P.mean(axis=0)) @ T.T  # target centered coordinates
        C = np.eye(k) - np.ones((k, k)) / k
        for ax in range(3):
            for i in range(k):
                for j in range(k):
                    if C[i, j] != 0:
                        rows.append(r + i)
                        cols.append(ax * n + idx[j])
                        vals.append(C[i, j])
                rhs.append(G[i, ax])
            r += k
    A = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(r, 3 * n))
    return A, np.array(rhs)


def global_step(basis: SubspaceBasis, rest: Mesh, transforms, handles,
                soft_weight=1e4) -> Mesh:
    """Best in-subspace mesh fitting the face transforms and the handles.

    Soft handles enter the least squares as weighted point terms; hard
    handles are enforced exactly through the normal-equation KKT system.
    """
    n = rest.n_vertices
    _check_handles(handles, n)
    A, b = _face_system(rest, transforms)
    r0 = rest.vec()
    M = A @ basis.Q
    c = b - A @ r0
    rows_M, rows_c = [M], [c]
    hard_rows, hard_rhs = [], []
    for h in handles:
        coords = [ax * n + h.vertex for ax in range(3)]
        delta = np.asarray(h.target) - rest.vertices[h.vertex]
        if h.mode == "hard":
            hard_rows.append(basis.Q[coords, :])
            hard_rhs.append(delta)
        else:
            w = np.sqrt(soft_weight if h.weight is None else h.weight)
            rows_M.append(w * basis.Q[coords, :])
            rows_c.append(w * delta)
    M = np.vstack(rows_M)
    c = np.concatenate(rows_c)
    if hard_rows:
        H = np.vstack(hard_rows)
        d = np.concatenate(hard_rhs)
        w_f, *_ = np.linalg.lstsq(H, d, rcond=None)
        feas = np.linalg.norm(H @ w_f - d)
        scale = max(np.linalg.norm(d), 1.0)
        if feas > 1e-8 * scale:
            raise InfeasibleConstraintError(
                float(feas), "hard handles unreachable in subspace"
            )
        # KKT for min ||Mw - c||^2 subject to Hw = d
        m = basis.ndof
        p = H.shape[0]
        K = np.zeros((m + p, m + p))
        K[:m, :m] = 2 * M.T @ M
        K[:m, m:] = H.T
        K[m:, :m] = H
        g = np.concatenate([2 * M.T @ c, d])
        sol, *_ = np.linalg.lstsq(K, g, rcond=None)
        w = sol[:m]
    else:
        w, *_ = np.linalg.lstsq(M, c, rcond=None)
    return rest.with_vec(r0 + basis.Q @ w)


def _energy(rest: Mesh, current: Mesh, transforms, handles, soft_weight):
    e = 0.0
    for f, T in zip(rest.faces, transforms):
        idx = list(f)
        P = rest.vertices[idx]
        X = current.vertices[idx]
        G = (P - P.mean(axis=0)) @ T.T
        e += float(np.sum((X - X.mean(axis=0) - G) ** 2))
    for h in handles:
        if h.mode == "soft":
            w = soft_weight if h.weight is None else h.weight
            e += w * float(
                np.sum((current.vertices[h.vertex] - np.asarray(h.target)) ** 2)
            )
    return e


def deform(basis: SubspaceBasis, rest: Mesh, handles,
           params: DeformParams | None = None):
    """Alternating local/global deformation; returns (mesh, energy trace).

    Each iteration fits per-face transforms to the current state, then
    re-solves for the closest in-subspace mesh; the recorded energy is
    therefore nonincreasing.  Stops early when relative vertex motion
    drops below the convergence tolerance.
    """
    params = params or DeformParams()
    _check_handles(handles, rest.n_vertices)
    if not handles:
        return rest, []
    current = rest
    trace = []
    scale = max(rest.bbox_diagonal(), 1e-12)
    for _ in range(params.iterations):
        transforms = local_step(rest, current, params.energy)
        nxt = global_step(basis, rest, transforms, handles, params.soft_weight)
        trace.append(_energy(rest, nxt, transforms, handles, params.soft_weight))
        motion = np.linalg.norm(nxt.vertices - current.vertices)
        current = nxt
        if motion / scale < params.convergence_tol:
            break
    return current, trace
