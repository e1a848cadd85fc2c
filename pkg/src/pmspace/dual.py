"""Polar dual transform and primal reconstruction.

The polar dual of a closed mesh maps every face plane to a point and
every vertex to a face; editing in the dual (normal) domain and mapping
back gives a planarity-preserving exploration channel, exact whenever
the primal is 3-regular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DualError, PMError
from .mesh import Mesh, face_plane, planarity_report

OFFSET_RTOL = 1e-6  # min |face plane offset| relative to the bbox diagonal
RECON_TOL = 1e-8  # per-vertex reconstruction residual gate


@dataclass(frozen=True)
class DualMesh:
    """Polar dual: vertex i <-> primal face i, face j <-> primal vertex j."""

    mesh: Mesh
    center: np.ndarray
    scale: float = 1.0


def _vertex_fans(mesh: Mesh):
    """Faces around each vertex in consistent cyclic order (closed mesh)."""
    by_edge = {}  # directed edge -> (face id, index of edge start)
    for fid, f in enumerate(mesh.faces):
        k = len(f)
        for i in range(k):
            by_edge[(f[i], f[(i + 1) % k])] = fid
    fans = []
    start_face = [None] * mesh.n_vertices
    for fid, f in enumerate(mesh.faces):
        for v in f:
            if start_face[v] is None:
                start_face[v] = fid
    for v in range(mesh.n_vertices):
        fid = start_face[v]
        fan = []
        while True:
            fan.append(fid)
            f = mesh.faces[fid]
            prev = f[f.index(v) - 1]
            fid = by_edge[(v, prev)]  # neighbor across the incoming edge
            if fid == fan[0]:
                break
        fans.append(fan)
    return fans


def polar_dual(mesh: Mesh, center=None, scale=1.0) -> DualMesh:
    """Dual vertex per face plane, dual face per primal vertex fan.

    Every face plane must keep a minimal offset from the polarity
    center; when the centroid fails that, the center slides toward the
    average foot point of the offending planes before giving up.
    """
    if mesh.boundary_edges():
        raise DualError("polar dual requires a closed mesh")
    diag = mesh.bbox_diagonal()
    planes = [face_plane(mesh, fid) for fid in range(len(mesh.faces))]
    c = mesh.vertices.mean(axis=0) if center is None else np.asarray(center, float)
    for _ in range(8):
        deltas = np.array([p.offset - p.normal @ c for p in planes])
        bad = np.where(np.abs(deltas) < OFFSET_RTOL * diag)[0]
        if len(bad) == 0:
            break
        if center is not None:
            raise DualError(
                "face planes pass through the polarity center",
                faces=[int(f) for f in bad],
            )
        feet = np.array([c + deltas[f] * planes[f].normal for f in bad])
        c = c + 0.5 * (feet.mean(axis=0) - c)
    else:
        raise DualError(
            "no polarity center clears the face planes",
            faces=[int(f) for f in bad],
        )
    U = np.array([scale**2 * p.normal / d for p, d in zip(planes, deltas)])
    faces = _vertex_fans(mesh)
    return DualMesh(mesh=Mesh(c + U, faces), center=c, scale=scale)


def primal_from_dual(dual: DualMesh, primal_faces) -> Mesh:
    """Solve the primal vertices back from a (possibly edited) dual.

    Each primal vertex is the common solution of u_f . (x - center) =
    scale^2 over its incident dual vertices; exact for degree-3
    vertices, least squares with a residual gate otherwise.
    """
    U = dual.mesh.vertices - dual.center
    r2 = dual.scale**2
    n_vertices = max(max(f) for f in primal_faces) + 1
    incident = [[] for _ in range(n_vertices)]
    for fid, f in enumerate(primal_faces):
        for v in f:
            incident[v].append(fid)
    verts = np.zeros((n_vertices, 3))
    bad, bad_res = [], []
    for v in range(n_vertices):
        A = U[incident[v]]
        b = np.full(len(incident[v]), r2)
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        res = np.linalg.norm(A @ x - b) / r2
        if res > RECON_TOL:
            bad.append(v)
            bad_res.append(float(res))
        verts[v] = dual.center + x
    if bad:
        raise DualError(
            "inconsistent dual: primal vertices unreachable",
            vertices=bad, residuals=bad_res,
        )
    out = Mesh(verts, primal_faces)
    errs, worst = planarity_report(out)
    if worst > 1e-8:
        raise DualError(
            f"reconstructed faces not planar (max {worst:.3e})",
            faces=[fid for fid, e in enumerate(errs) if e > 1e-8],
        )
    return out


def dual_edit(mesh: Mesh, dual_assignment, shape_index=0, amplitude=0.0,
              center=None, scale=1.0):
    """Edit in the normal domain: dual, add an eigenshape, reconstruct.

    Builds the requested subspace on the polar dual, adds ``amplitude``
    times its ``shape_index``-th eigenshape to the dual vertices, and
    solves the primal back.  Returns the new primal mesh and the
    per-vertex reconstruction residuals.
    """
    from .shapes import eigenshapes, graph_laplacian
    from .subspace import build_subspace

    d = polar_dual(mesh, center=center, scale=scale)
    if amplitude != 0.0:
        constraint, basis = build_subspace(d.mesh, dual_assignment)
        spectrum = eigenshapes(basis, graph_laplacian(d.mesh),
                               constraint=constraint)
        if not 0 <= shape_index < len(spectrum.shapes):
            raise PMError(f"eigenshape index {shape_index} out of range")
        disp = spectrum.shapes[shape_index].displacement
        edited = d.mesh.with_vec(d.mesh.vec() + amplitude * disp)
        d = DualMesh(mesh=edited, center=d.center, scale=d.scale)
    U = d.mesh.vertices - d.center
    out = primal_from_dual(d, mesh.faces)
    res = []
    for v in range(mesh.n_vertices):
        fids = [fid for fid, f in enumerate(mesh.faces) if v in f]
        A = U[fids]
        b = np.full(len(fids), d.scale**2)
        res.append(float(np.linalg.norm(A @ (out.vertices[v] - d.center) - b)))
    return out, np.array(res)
