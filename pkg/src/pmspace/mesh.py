"""Polygonal mesh representation, OBJ I/O, planarity measurement and counts.

Vertices are stored as an (n, 3) float array; faces as tuples of vertex
indices (oriented, length >= 3).  The vectorized view used by the constraint
machinery stacks coordinates axis-major: ``[x_1..x_n, y_1..y_n, z_1..z_n]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import (
    DegenerateFaceError,
    MeshError,
    NonManifoldError,
    ParseError,
)

DEGENERACY_RTOL = 1e-9


class Mesh:
    """Immutable polygonal mesh.

    Parameters
    ----------
    vertices : (n, 3) array_like
    faces : sequence of index sequences, each oriented and of length >= 3
    """

    def __init__(self, vertices, faces, validate=True):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        self.vertices = v
        self.vertices.setflags(write=False)
        self.faces = tuple(tuple(int(i) for i in f) for f in faces)
        if validate:
            self._validate()

    def _validate(self):
        n = len(self.vertices)
        for fid, f in enumerate(self.faces):
            if len(f) < 3:
                raise MeshError(f"face {fid} has fewer than 3 vertices")
            if any(i < 0 or i >= n for i in f):
                raise MeshError(f"face {fid} references vertex outside [0, {n})")
            if len(set(f)) != len(f):
                raise MeshError(f"face {fid} repeats a vertex")
        seen = {}
        for fid, f in enumerate(self.faces):
            for a, b in zip(f, f[1:] + f[:1]):
                key = (min(a, b), max(a, b))
                direction = a < b
                uses = seen.setdefault(key, [])
                if len(uses) >= 2 or direction in uses:
                    raise NonManifoldError(key)
                uses.append(direction)

    @property
    def n_vertices(self):
        return len(self.vertices)

    def vec(self):
        """Axis-major vectorization: [x_1..x_n, y_1..y_n, z_1..z_n]."""
        return self.vertices.T.reshape(-1).copy()

    def with_vec(self, v):
        """New mesh with the same topology and vectorized geometry ``v``."""
        n = self.n_vertices
        return Mesh(np.asarray(v, float).reshape(3, n).T, self.faces, validate=False)

    def with_vertices(self, vertices):
        return Mesh(vertices, self.faces, validate=False)

    def face_coords(self, fid):
        """Vertex geometry of face ``fid`` as a 3 x k matrix."""
        return self.vertices[list(self.faces[fid])].T

    def bbox_diagonal(self):
        ext = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(ext))

    def edges(self):
        """Sorted unique undirected edges as an (e, 2) int array."""
        pairs = set()
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                pairs.add((min(a, b), max(a, b)))
        return np.array(sorted(pairs), dtype=int).reshape(-1, 2)

    def boundary_edges(self):
        """Undirected edges used by exactly one face."""
        count = {}
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                key = (min(a, b), max(a, b))
                count[key] = count.get(key, 0) + 1
        return [e for e, c in count.items() if c == 1]

    def adjacency(self):
        """Symmetric vertex adjacency as a CSR matrix."""
        e = self.edges()
        n = self.n_vertices
        if len(e) == 0:
            return scipy.sparse.csr_matrix((n, n))
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def __eq__(self, other):
        return (
            isinstance(other, Mesh)
            and self.faces == other.faces
            and np.array_equal(self.vertices, other.vertices)
        )

    def __repr__(self):
        return f"Mesh(n_vertices={self.n_vertices}, n_faces={len(self.faces)})"


@dataclass(frozen=True)
class FacePlane:
    """Best-fit plane of a face; ``offset`` is normal . centroid."""

    centroid: np.ndarray
    normal: np.ndarray
    offset: float


@dataclass(frozen=True)
class MeshCounts:
    N_v: int
    N_e: int
    N_f: int
    N_c: int
    N_b: int
    b: int
    g_paper: float


def load_mesh(path) -> Mesh:
    """Read an ASCII OBJ file (``v`` and ``f`` records, 1-based indices)."""
    vertices = []
    faces = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ParseError("vertex needs 3 coordinates", lineno)
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError:
                    raise ParseError(f"bad vertex coordinate in {line!r}", lineno)
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    tok = tok.split("/")[0]
                    try:
                        i = int(tok)
                    except ValueError:
                        raise ParseError(f"bad face index {tok!r}", lineno)
                    if i == 0:
                        raise ParseError("OBJ face indices are 1-based, got 0", lineno)
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                if len(idx) < 3:
                    raise ParseError("face needs at least 3 vertices", lineno)
                faces.append(idx)
            # other records (vn, vt, o, g, ...) are ignored
    try:
        return Mesh(vertices, faces)
    except MeshError as exc:
        raise type(exc)(*exc.args) from None


def save_mesh(mesh: Mesh, path, precision=12):
    """Write an ASCII OBJ file; floats at ``precision`` significant digits."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write("v {:.{p}g} {:.{p}g} {:.{p}g}\n".format(*v, p=precision))
        for f in mesh.faces:
            fh.write("f " + " ".join(str(i + 1) for i in f) + "\n")


def _newell_normal(coords):
    """Winding-consistent normal of a 3 x k polygon (not normalized)."""
    p = coords.T
    q = np.roll(p, -1, axis=0)
    return np.array(
        [
            np.sum((p[:, 1] - q[:, 1]) * (p[:, 2] + q[:, 2])),
            np.sum((p[:, 2] - q[:, 2]) * (p[:, 0] + q[:, 0])),
            np.sum((p[:, 0] - q[:, 0]) * (p[:, 1] + q[:, 1])),
        ]
    )


def face_plane(mesh: Mesh, fid, scale=None) -> FacePlane:
    """Least-squares plane of a face, oriented to match the face winding."""
    coords = mesh.face_coords(fid)
    centroid = coords.mean(axis=1)
    centered = coords - centroid[:, None]
    u, s, _ = np.linalg.svd(centered, full_matrices=True)
    if scale is None:
        scale = mesh.bbox_diagonal() or 1.0
    if s[1] < DEGENERACY_RTOL * scale:
        raise DegenerateFaceError(fid)
    normal = u[:, 2]
    if np.dot(normal, _newell_normal(coords)) < 0:
        normal = -normal
    return FacePlane(centroid=centroid, normal=normal, offset=float(normal @ centroid))


def planarity_error(mesh: Mesh, fid, scale=None) -> float:
    """Max vertex distance to the best-fit plane over the bbox diagonal."""
    if len(mesh.faces[fid]) == 3:
        return 0.0
    if scale is None:
        scale = mesh.bbox_diagonal() or 1.0
    plane = face_plane(mesh, fid, scale=scale)
    d = np.abs(plane.normal @ (mesh.face_coords(fid) - plane.centroid[:, None]))
    return float(d.max() / scale)


def planarity_report(mesh: Mesh):
    """Per-face relative planarity errors and their maximum."""
    scale = mesh.bbox_diagonal() or 1.0
    errs = [planarity_error(mesh, fid, scale=scale) for fid in range(len(mesh.faces))]
    return errs, (max(errs) if errs else 0.0)


def _boundary_loops(mesh: Mesh):
    """Boundary loops as ordered vertex lists."""
    bedges = mesh.boundary_edges()
    succ = {}
    # orient boundary edges as they appear in their single face, reversed,
    # so loops run opposite to face winding (consistent either way)
    used_once = set(bedges)
    for f in mesh.faces:
        for a, b in zip(f, f[1:] + f[:1]):
            if (min(a, b), max(a, b)) in used_once:
                succ[b] = a
    loops = []
    remaining = set(succ)
    while remaining:
        start = min(remaining)
        loop = [start]
        remaining.discard(start)
        cur = succ[start]
        while cur != start:
            loop.append(cur)
            remaining.discard(cur)
            cur = succ[cur]
        loops.append(loop)
    return loops


def counts(mesh: Mesh) -> MeshCounts:
    """Combinatorial counts; genus recorded via N_v - N_e + N_f - b = 2g."""
    N_v = mesh.n_vertices
    N_f = len(mesh.faces)
    N_c = sum(len(f) for f in mesh.faces)
    N_e = len(mesh.edges())
    loops = _boundary_loops(mesh)
    b = len(loops)
    N_b = sum(len(l) for l in loops)
    g2 = N_v - N_e + N_f - b
    g_paper = g2 / 2 if g2 % 2 else g2 // 2
    return MeshCounts(N_v=N_v, N_e=N_e, N_f=N_f, N_c=N_c, N_b=N_b, b=b, g_paper=g_paper)


def halfedge_subdivide(mesh: Mesh) -> Mesh:
    """Insert edge midpoints; each k-gon becomes a 2k-gon through them."""
    n = mesh.n_vertices
    edge_list = [tuple(e) for e in mesh.edges()]
    mid_index = {e: n + i for i, e in enumerate(edge_list)}
    midpoints = np.array(
        [(mesh.vertices[a] + mesh.vertices[b]) / 2 for a, b in edge_list]
    ).reshape(-1, 3)
    vertices = np.vstack([mesh.vertices, midpoints])
    faces = []
    for f in mesh.faces:
        new = []
        for a, b in zip(f, f[1:] + f[:1]):
            new.append(a)
            new.append(mid_index[(min(a, b), max(a, b))])
        faces.append(new)
    return Mesh(vertices, faces)


def tutte_flatten(mesh: Mesh, boundary_shape) -> Mesh:
    """Spring embedding into a convex polygon; disk topology required.

    Boundary vertices are spread by uniform arclength along the polygon
    perimeter starting at its first corner; interior vertices solve the
    uniform-weight averaging system.  Output lies in z = 0.
    """
    loops = _boundary_loops(mesh)
    if len(loops) != 1:
        raise MeshError(f"tutte_flatten needs disk topology (b=1), got b={len(loops)}")
    poly = np.asarray(boundary_shape, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise MeshError("boundary_shape must be an (m, 2) convex polygon")
    loop = loops[0]
    # positions on the polygon perimeter at uniform spacing
    seglen = np.linalg.norm(np.roll(poly, -1, axis=0) - poly, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    perim = cum[-1]
    targets = np.zeros((len(loop), 2))
    for i in range(len(loop)):
        t = perim * i / len(loop)
        seg = int(np.searchsorted(cum, t, side="right") - 1)
        seg = min(seg, len(poly) - 1)
        frac = (t - cum[seg]) / seglen[seg]
        targets[i] = poly[seg] + frac * (np.roll(poly, -1, axis=0)[seg] - poly[seg])

    n = mesh.n_vertices
    boundary = {v: targets[i] for i, v in enumerate(loop)}
    interior = [v for v in range(n) if v not in boundary]
    pos = np.zeros((n, 2))
    for v, p in boundary.items():
        pos[v] = p
    if interior:
        adj = mesh.adjacency()
        idx = {v: i for i, v in enumerate(interior)}
        A = scipy.sparse.lil_matrix((len(interior), len(interior)))
        rhs = np.zeros((len(interior), 2))
        for v in interior:
            nbrs = adj[v].indices
            A[idx[v], idx[v]] = len(nbrs)
            for w in nbrs:
                if w in idx:
                    A[idx[v], idx[w]] = -1.0
                else:
                    rhs[idx[v]] += boundary[w]
        sol = scipy.sparse.linalg.spsolve(A.tocsr(), rhs)
        pos[interior] = sol.reshape(len(interior), 2)
    return Mesh(np.column_stack([pos, np.zeros(n)]), mesh.faces, validate=False)
