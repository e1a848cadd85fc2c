"""Meaningful spanning shapes of a subspace.

Eigenshapes are the harmonics of the mesh Laplacian restricted to the
subspace; band-pass filtering adds a frequency band of them to the source.
Sparse shapes move as few vertices as possible; fundamental shapes are the
regularized response to a single-vertex impulse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import PMError, SparseShapeError
from .mesh import Mesh
from .subspace import ConstraintMatrix, SubspaceBasis, project

UNIFORM = "uniform"


@dataclass(frozen=True)
class Shape:
    """A displacement field in (or near) the subspace."""

    displacement: np.ndarray
    label: str
    residual: float


@dataclass
class Spectrum:
    shapes: list
    frequencies: np.ndarray
    L_kind: str = UNIFORM


def graph_laplacian(mesh: Mesh):
    """Uniform (combinatorial) vertex Laplacian, n x n sparse."""
    adj = mesh.adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    return (scipy.sparse.diags(deg) - adj).tocsr()


def laplacian3(L):
    """Per-axis extension of an n x n Laplacian to the 3n-vector layout."""
    return scipy.sparse.kron(scipy.sparse.eye(3), L).tocsr()


def _residual(constraint: ConstraintMatrix | None, disp):
    if constraint is None or constraint.B.shape[0] == 0:
        return 0.0
    nrm = np.linalg.norm(disp)
    if nrm == 0:
        return 0.0
    return float(np.linalg.norm(constraint.B @ disp) / nrm)


def eigenshapes(basis: SubspaceBasis, L, count=None, constraint=None) -> Spectrum:
    """Spectrum of Q^T L Q: frequencies ascending, shapes Q w_k."""
    if basis.ndof == 0:
        raise PMError("subspace is trivial; no eigenshapes")
    n3 = basis.Q.shape[0]
    L3 = laplacian3(L) if L.shape[0] * 3 == n3 else L
    M = basis.Q.T @ (L3 @ basis.Q)
    M = (M + M.T) / 2
    lam, W = np.linalg.eigh(M)
    if count is not None and count < len(lam):
        lam, W = lam[:count], W[:, :count]
    shapes = []
    for k in range(len(lam)):
        disp = basis.Q @ W[:, k]
        shapes.append(
            Shape(displacement=disp, label=f"eigenshape({k})",
                  residual=_residual(constraint, disp))
        )
    return Spectrum(shapes=shapes, frequencies=lam)


def bandpass_apply(source: Mesh, spectrum: Spectrum, low, high, gain,
                   weights=None) -> Mesh:
    """source + gain * sum of eigenshapes with frequency in [low, high]."""
    if low > high:
        raise PMError(f"empty band: low {low} > high {high}")
    sel = [k for k, f in enumerate(spectrum.frequencies) if low <= f <= high]
    if gain == 0 or not sel:
        return source
    disp = np.zeros(3 * source.n_vertices)
    for k in sel:
        w = 1.0 if weights is None else weights[k]
        disp += w * spectrum.shapes[k].displacement
    return source.with_vec(source.vec() + gain * disp)


def _seeded_fit(constraint: ConstraintMatrix, support, seed_coord):
    """min ||B x|| over x supported on ``support`` with x[seed_coord] = 1.

    Returns the unit-normalized displacement and its relative residual.
    """
    n = constraint.n_vertices
    cols = []
    for v in sorted(support):
        cols.extend([v, n + v, 2 * n + v])
    free = [c for c in cols if c != seed_coord]
    disp = np.zeros(3 * n)
    disp[seed_coord] = 1.0
    if constraint.B.shape[0]:
        rhs = -np.asarray(constraint.B[:, seed_coord].todense()).ravel()
        Bf = constraint.B[:, free].toarray()
        y, *_ = np.linalg.lstsq(Bf, rhs, rcond=None)
        disp[free] = y
    nrm = np.linalg.norm(disp)
    disp /= nrm
    if constraint.B.shape[0]:
        sigma = float(np.linalg.norm(constraint.B @ disp))
    else:
        sigma = 0.0
    return disp, sigma


def _reweighted_ranking(constraint: ConstraintMatrix, seed_coord,
                        iters=120, stiffness=1e7):
    """Vertex importance ranking via iteratively reweighted least squares.

    Minimizes stiffness * ||B x||^2 + sum_v w_v ||x_v||^2 with the seed
    coordinate pinned to 1, sharpening the weights toward a sparse support.
    The heavy nullspace penalty keeps x near the subspace without forcing
    exact membership, so approximate sparse shapes rank correctly too.
    """
    n = constraint.n_vertices
    K = stiffness * (constraint.B.T @ constraint.B).toarray()
    free = np.array([i for i in range(3 * n) if i != seed_coord])
    x = np.zeros(3 * n)
    x[seed_coord] = 1.0
    eps = 1.0
    for _ in range(iters):
        mags2 = np.sum(x.reshape(3, n) ** 2, axis=0)
        w = 1.0 / (mags2 + eps**2)
        A = K + np.diag(np.tile(w, 3))
        xf = np.linalg.solve(A[np.ix_(free, free)], -A[free, seed_coord])
        x = np.zeros(3 * n)
        x[seed_coord] = 1.0
        x[free] = xf
        eps = max(eps * 0.85, 1e-6)
    return np.linalg.norm(x.reshape(3, n), axis=0)


def sparse_shape(constraint: ConstraintMatrix, seed_vertex=None,
                 target_support=8, residual_tol=1e-10) -> Shape:
    """Vertex-support pursuit of a (near) nullspace element.

    Ranks vertices by a reweighted least-squares sharpening of the seeded
    impulse inside the subspace, restricts to the top ``target_support``
    vertices, and re-solves the restricted fit.  The support is then shrunk
    further while the residual still meets ``residual_tol``.  Raises when
    the tolerance is unattainable at the requested support.
    """
    n = constraint.n_vertices
    if target_support < 1 or target_support > n:
        raise PMError(f"target_support must be in [1, {n}]")
    seed = 0 if seed_vertex is None else int(seed_vertex)
    seed_coord = 2 * n + seed  # +z impulse, matching the vertical emphasis
    mags = _reweighted_ranking(constraint, seed_coord)
    mags[seed] = np.inf  # the seed is always kept
    order = np.argsort(-mags)
    support = set(int(v) for v in order[:target_support])
    disp, sigma = _seeded_fit(constraint, support, seed_coord)
    # shrink further while still acceptable
    while sigma <= residual_tol and len(support) > 1:
        ranked = [int(v) for v in order if int(v) in support and int(v) != seed]
        if not ranked:
            break
        cand = support - {ranked[-1]}
        d2, s2 = _seeded_fit(constraint, cand, seed_coord)
        if s2 <= residual_tol:
            support, disp, sigma = cand, d2, s2
        else:
            break
    if sigma > residual_tol:
        raise SparseShapeError(sigma, sorted(support))
    return Shape(displacement=disp, label="sparse", residual=sigma)


def sparse_shape_best(constraint: ConstraintMatrix, seed_vertex=None,
                      target_support=8) -> Shape:
    """Like :func:`sparse_shape` but always returns the best shape found."""
    try:
        return sparse_shape(constraint, seed_vertex, target_support,
                            residual_tol=-1.0)
    except SparseShapeError as exc:
        n = constraint.n_vertices
        seed = 0 if seed_vertex is None else int(seed_vertex)
        disp, sigma = _seeded_fit(constraint, set(exc.support), 2 * n + seed)
        return Shape(displacement=disp, label="sparse", residual=sigma)


def fundamental_shape(basis: SubspaceBasis, L, vertex, lam=1.0,
                      direction=(0.0, 0.0, 1.0), constraint=None) -> Shape:
    """Subspace response to a unit impulse at one vertex.

    Solves (I + lam * Q^T L^T L Q) w = Q^T delta and returns Q w; the
    impulse direction defaults to +z.
    """
    if lam < 0:
        raise PMError("lambda must be nonnegative")
    n3 = basis.Q.shape[0]
    n = n3 // 3
    if not 0 <= vertex < n:
        raise PMError(f"vertex {vertex} out of range")
    delta = np.zeros(n3)
    d = np.asarray(direction, float)
    for ax in range(3):
        delta[ax * n + vertex] = d[ax]
    rhs = basis.Q.T @ delta
    if lam == 0:
        w = rhs
    else:
        L3 = laplacian3(L) if L.shape[0] * 3 == n3 else L
        LQ = L3 @ basis.Q
        A = np.eye(basis.ndof) + lam * (LQ.T @ LQ)
        w = np.linalg.solve(A, rhs)
    disp = basis.Q @ w
    return Shape(displacement=disp, label=f"fundamental({vertex})",
                 residual=_residual(constraint, disp))
