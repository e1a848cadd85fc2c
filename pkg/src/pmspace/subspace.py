"""Per-face planarity-relationship constraints, the sparse global operator,
its orthonormal nullspace basis, and degree-of-freedom accounting.

Three relationship cases generate a linear space of planar-faced meshes from
a source mesh: ``affine`` (target face is an affine image of the source),
``parallel`` (target face parallel to the source), and a prescribed-normal
case whose ``vertical`` shorthand prescribes the +z direction.  All face
constraints are applied to per-face *centered* coordinates, which keeps the
rows linear while making translation invariance explicit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse

from .errors import DegenerateFaceError, InfeasibleConstraintError, NonPlanarError, PMError
from .mesh import Mesh, MeshCounts, face_plane, planarity_report

RANK_RTOL = 1e-10
NORMAL_PARALLEL_TOL = 1e-8

AFFINE = "affine"
PARALLEL = "parallel"
NORMAL = "normal"  # prescribed-normal; carries a unit 3-vector


@dataclass(frozen=True)
class FaceCase:
    kind: str
    normal: tuple | None = None

    def __post_init__(self):
        if self.kind not in (AFFINE, PARALLEL, NORMAL):
            raise PMError(f"unknown face case {self.kind!r}")
        if self.kind == NORMAL:
            n = np.asarray(self.normal, float)
            nn = np.linalg.norm(n)
            if nn == 0:
                raise PMError("prescribed normal must be nonzero")
            object.__setattr__(self, "normal", tuple(n / nn))


def affine_case() -> FaceCase:
    return FaceCase(AFFINE)


def parallel_case() -> FaceCase:
    return FaceCase(PARALLEL)


def prescribed_normal_case(normal) -> FaceCase:
    return FaceCase(NORMAL, tuple(np.asarray(normal, float)))


def vertical_case() -> FaceCase:
    return prescribed_normal_case((0.0, 0.0, 1.0))


class CaseAssignment:
    """Per-face relationship case, with a default and sparse overrides."""

    def __init__(self, default=AFFINE, overrides=None):
        self.default = _coerce_case(default)
        self.overrides = {int(k): _coerce_case(v) for k, v in (overrides or {}).items()}

    def case_for(self, fid) -> FaceCase:
        return self.overrides.get(fid, self.default)

    def cases(self, mesh: Mesh):
        return [self.case_for(fid) for fid in range(len(mesh.faces))]

    def is_uniform(self, kind):
        return self.default.kind == kind and all(
            c.kind == kind for c in self.overrides.values()
        )

    def to_json_dict(self):
        def enc(c):
            return {"normal": list(c.normal)} if c.kind == NORMAL else c.kind

        return {
            "default": enc(self.default),
            "faces": {str(k): enc(v) for k, v in sorted(self.overrides.items())},
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(default=d.get("default", AFFINE), overrides=d.get("faces", {}))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _coerce_case(value) -> FaceCase:
    if isinstance(value, FaceCase):
        return value
    if isinstance(value, str):
        key = value.lower()
        if key == "vertical":
            return vertical_case()
        return FaceCase(key)
    if isinstance(value, dict) and "normal" in value:
        return prescribed_normal_case(value["normal"])
    raise PMError(f"cannot interpret case spec {value!r}")


@dataclass(frozen=True)
class ConstraintDerivation:
    """Internal record of a prescribed-normal face block (frame and kernel)."""

    N: np.ndarray          # intersection direction (prescribed x source normal)
    E_Y: np.ndarray        # in-plane direction N x N_Y
    Y_1: np.ndarray        # source row coefficients along N
    Y_2: np.ndarray        # source row coefficients along E_Y
    M: np.ndarray          # k x (k-1) basis of null(Y_2)


@dataclass(frozen=True)
class FaceBlock:
    """Orthonormal constraint rows of one face.

    ``per_axis`` blocks have k columns and apply identically to x, y and z;
    coupled blocks have 3k columns in [x-coords, y-coords, z-coords] layout.
    """

    face_id: int
    kind: str              # effective case after any fallback
    rows: np.ndarray
    per_axis: bool
    scale: float           # largest singular value of the raw rows
    derivation: ConstraintDerivation | None = None
    fallback: bool = False


def _centering(k):
    return np.eye(k) - np.ones((k, k)) / k


def _reduce_rows(raw, rtol=RANK_RTOL):
    """Orthonormal rows spanning the row space of ``raw`` (SVD cutoff)."""
    if raw.size == 0:
        return np.zeros((0, raw.shape[1])), 0.0
    u, s, vt = np.linalg.svd(raw, full_matrices=False)
    if s[0] == 0:
        return np.zeros((0, raw.shape[1])), 0.0
    rank = int(np.sum(s > rtol * s[0]))
    return vt[:rank], float(s[0])


def build_face_constraints(source_coords, case: FaceCase, face_id=0, scale=None) -> FaceBlock:
    """Constraint rows of one face from its 3 x k source geometry."""
    Y = np.asarray(source_coords, float)
    k = Y.shape[1]
    if k == 3:
        return FaceBlock(face_id, case.kind, np.zeros((0, k)), True, 0.0)
    C = _centering(k)
    Yc = Y @ C
    u, s, _ = np.linalg.svd(Yc)
    if scale is None:
        scale = max(np.ptp(Y, axis=1).max(), 1.0)
    if s[1] < 1e-9 * scale:
        raise DegenerateFaceError(face_id)
    n_src = u[:, 2]

    if case.kind == AFFINE:
        P = np.linalg.pinv(Yc) @ Yc
        raw = (C @ (P - np.eye(k))).T  # rows constrain each axis identically
        rows, smax = _reduce_rows(raw)
        return FaceBlock(face_id, AFFINE, rows, True, smax)

    if case.kind == NORMAL:
        n_pre = np.asarray(case.normal, float)
        N = np.cross(n_pre, n_src)
        if np.linalg.norm(N) < NORMAL_PARALLEL_TOL:
            block = _parallel_block(Yc, n_src, k, C, face_id)
            return FaceBlock(
                face_id, PARALLEL, block.rows, False, block.scale, fallback=True
            )
        return _prescribed_block(Yc, n_src, N, k, C, face_id)

    return _parallel_block(Yc, n_src, k, C, face_id)


def _parallel_block(Yc, n_src, k, C, face_id) -> FaceBlock:
    # n . (x_i - x_{i+1}) = 0 over k-1 edges: the centered, sparse form
    D = np.zeros((k - 1, k))
    for i in range(k - 1):
        D[i, i], D[i, i + 1] = 1.0, -1.0
    raw = np.zeros((k - 1, 3 * k))
    for ax in range(3):
        raw[:, ax * k : (ax + 1) * k] = n_src[ax] * D
    rows, smax = _reduce_rows(raw)
    return FaceBlock(face_id, PARALLEL, rows, False, smax)


def _prescribed_block(Yc, n_src, N, k, C, face_id) -> FaceBlock:
    N = N / np.linalg.norm(N)
    E_Y = np.cross(N, n_src)
    Y_1 = N @ Yc
    Y_2 = E_Y @ Yc
    # null(Y_2): k-1 directions the constraint (X_f x N) M = 0 acts on
    _, _, vt = np.linalg.svd(Y_2.reshape(1, -1), full_matrices=True)
    M = vt[1:].T
    cross_N = np.array(
        [[0, -N[2], N[1]], [N[2], 0, -N[0]], [-N[1], N[0], 0]]
    )
    # rows: for each column m of M and output axis a:
    #   sum_b cross_N[a, b] * (C m)[v] * X[b, v] = 0
    CM = C @ M
    raw = np.zeros((3 * (k - 1), 3 * k))
    for j in range(k - 1):
        for a in range(3):
            for bax in range(3):
                if cross_N[a, bax] != 0.0:
                    raw[3 * j + a, bax * k : (bax + 1) * k] += (
                        cross_N[a, bax] * CM[:, j]
                    )
    rows, smax = _reduce_rows(raw)
    deriv = ConstraintDerivation(N=N, E_Y=E_Y, Y_1=Y_1, Y_2=Y_2, M=M)
    return FaceBlock(face_id, NORMAL, rows, False, smax, derivation=deriv)


@dataclass
class ConstraintMatrix:
    """Sparse global operator B acting on [x_1..x_n, y_1..y_n, z_1..z_n]."""

    B: scipy.sparse.csr_matrix
    n_vertices: int
    provenance: list = field(default_factory=list)  # (row0, row1, face_id, kind)
    row_scaling: dict = field(default_factory=dict)
    decoupled: bool = False
    axis_block: scipy.sparse.csr_matrix | None = None  # set when decoupled
    blocks: list = field(default_factory=list)

    @property
    def shape(self):
        return self.B.shape

    def laplacian_like(self):
        """The derived operator B^T B (shares the nullspace with B)."""
        return (self.B.T @ self.B).tocsr()


def assemble(mesh: Mesh, assignment: CaseAssignment, planarity_tol=1e-6) -> ConstraintMatrix:
    """Build B from the mesh and the per-face case assignment.

    Source faces must be planar within ``planarity_tol`` (relative to the
    bounding-box diagonal); otherwise the constraint rows are meaningless.
    """
    errs, _ = planarity_report(mesh)
    bad = [fid for fid, e in enumerate(errs) if e > planarity_tol]
    if bad:
        raise NonPlanarError(bad, errors=[errs[f] for f in bad])

    n = mesh.n_vertices
    scale = mesh.bbox_diagonal() or 1.0
    blocks = []
    for fid in range(len(mesh.faces)):
        case = assignment.case_for(fid)
        blocks.append(
            build_face_constraints(mesh.face_coords(fid), case, face_id=fid, scale=scale)
        )

    decoupled = all(b.per_axis for b in blocks)
    rows_i, cols_i, vals = [], [], []
    provenance = []
    row_scaling = {}
    r = 0
    axis_rows_i, axis_cols_i, axis_vals = [], [], []
    ra = 0
    for block in blocks:
        f = list(mesh.faces[block.face_id])
        k = len(f)
        nrows = block.rows.shape[0]
        if nrows == 0:
            continue
        if block.per_axis:
            if decoupled:
                for i in range(nrows):
                    for j, v in enumerate(f):
                        axis_rows_i.append(ra + i)
                        axis_cols_i.append(v)
                        axis_vals.append(block.rows[i, j])
                ra += nrows
            # expand to the three axis copies in the global matrix
            for ax in range(3):
                for i in range(nrows):
                    for j, v in enumerate(f):
                        rows_i.append(r + ax * nrows + i)
                        cols_i.append(ax * n + v)
                        vals.append(block.rows[i, j])
            provenance.append((r, r + 3 * nrows, block.face_id, block.kind))
            row_scaling[block.face_id] = block.scale
            r += 3 * nrows
        else:
            for i in range(nrows):
                for ax in range(3):
                    for j, v in enumerate(f):
                        val = block.rows[i, ax * k + j]
                        if val != 0.0:
                            rows_i.append(r + i)
                            cols_i.append(ax * n + v)
                            vals.append(val)
            provenance.append((r, r + nrows, block.face_id, block.kind))
            row_scaling[block.face_id] = block.scale
            r += nrows

    B = scipy.sparse.csr_matrix(
        (vals, (rows_i, cols_i)), shape=(r, 3 * n)
    )
    axis_block = None
    if decoupled:
        axis_block = scipy.sparse.csr_matrix(
            (axis_vals, (axis_rows_i, axis_cols_i)), shape=(ra, n)
        )
    return ConstraintMatrix(
        B=B,
        n_vertices=n,
        provenance=provenance,
        row_scaling=row_scaling,
        decoupled=decoupled,
        axis_block=axis_block,
        blocks=blocks,
    )


@dataclass
class SubspaceBasis:
    """Column-orthonormal basis Q of null(B)."""

    Q: np.ndarray
    ndof: int
    decoupled: bool
    tol: float

    def projector(self):
        """Dense projector Q Q^T onto the subspace."""
        return self.Q @ self.Q.T


def _dense_nullspace(A, rtol):
    if A.shape[0] == 0:
        return np.eye(A.shape[1])
    u, s, vt = np.linalg.svd(A, full_matrices=True)
    if s.size and s[0] > 0:
        rank = int(np.sum(s > rtol * s[0]))
    else:
        rank = 0
    return vt[rank:].T


def nullspace_basis(constraint: ConstraintMatrix, tol=RANK_RTOL) -> SubspaceBasis:
    """Orthonormal nullspace basis; per-axis computation when B decouples."""
    n = constraint.n_vertices
    if constraint.decoupled:
        Qa = _dense_nullspace(constraint.axis_block.toarray(), tol)
        d = Qa.shape[1]
        Q = np.zeros((3 * n, 3 * d))
        for ax in range(3):
            Q[ax * n : (ax + 1) * n, ax * d : (ax + 1) * d] = Qa
        return SubspaceBasis(Q=Q, ndof=3 * d, decoupled=True, tol=tol)
    Q = _dense_nullspace(constraint.B.toarray(), tol)
    return SubspaceBasis(Q=Q, ndof=Q.shape[1], decoupled=False, tol=tol)


def build_subspace(mesh: Mesh, assignment: CaseAssignment, planarity_tol=1e-6, tol=RANK_RTOL):
    """Convenience: assemble B and compute its nullspace basis."""
    constraint = assemble(mesh, assignment, planarity_tol=planarity_tol)
    return constraint, nullspace_basis(constraint, tol=tol)


def project(basis: SubspaceBasis, vector_field):
    """Orthogonal projection onto the subspace (the operator Q Q^T)."""
    v = np.asarray(vector_field, float).reshape(-1)
    return basis.Q @ (basis.Q.T @ v)


def closest_pm(basis: SubspaceBasis, target: Mesh, hard_constraints=(), feas_tol=1e-8) -> Mesh:
    """Closest subspace member to ``target``, with exact pinned vertices.

    Minimizes ||Q w - vec(target)|| subject to the constrained vertices
    matching their prescribed positions exactly.
    """
    t = target.vec()
    n = target.n_vertices
    w0 = basis.Q.T @ t
    if not hard_constraints:
        return target.with_vec(basis.Q @ w0)
    rows = []
    rhs = []
    for vid, point in hard_constraints:
        p = np.asarray(point, float)
        for ax in range(3):
            rows.append(basis.Q[ax * n + vid])
            rhs.append(p[ax])
    A = np.array(rows)
    bvec = np.array(rhs)
    # feasibility of the constraint block inside the subspace
    w_feas, res, *_ = np.linalg.lstsq(A, bvec, rcond=None)
    feas_res = np.linalg.norm(A @ w_feas - bvec)
    if feas_res > feas_tol * max(1.0, np.linalg.norm(bvec)):
        raise InfeasibleConstraintError(feas_res)
    # min ||w - w0|| s.t. A w = b  ->  w = w0 + A^T (A A^T)^+ (b - A w0)
    lam, *_ = np.linalg.lstsq(A @ A.T, bvec - A @ w0, rcond=None)
    w = w0 + A.T @ lam
    return target.with_vec(basis.Q @ w)


def min_ndof_bound(c: MeshCounts, case) -> int:
    """Topology-only lower bound on the subspace dimension (non-mixed)."""
    kind = _coerce_case(case).kind
    if kind == AFFINE:
        return 3 * (c.N_v + 3 * c.N_f - c.N_c)
    if kind == PARALLEL:
        return 3 * c.N_v - c.N_c + c.N_f
    return 3 * c.N_v - 2 * (c.N_c - 2 * c.N_f)


def mixed_ndof_bound(mesh: Mesh, assignment: CaseAssignment):
    """Per-face summed bound for mixed assignments; heuristic flag attached."""
    per_face = {AFFINE: lambda k: 3 * (k - 3), PARALLEL: lambda k: k - 1,
                NORMAL: lambda k: 2 * (k - 2)}
    total = 0
    kinds = set()
    for fid, f in enumerate(mesh.faces):
        kind = assignment.case_for(fid).kind
        kinds.add(kind)
        if len(f) > 3:
            total += per_face[kind](len(f))
    return 3 * mesh.n_vertices - total, len(kinds) > 1


def table1_min_nfv(family, case, N_v, N_b, b, g) -> Fraction:
    """Minimal number of free vertices for quad/hex meshes per case."""
    kind = _coerce_case(case).kind
    N_v, N_b, b, g = (Fraction(x).limit_denominator(10**6) for x in (N_v, N_b, b, g))
    if kind == NORMAL:
        return -N_v / 3 + 2 * N_b / 3 + 4 * b / 3 + 8 * g / 3
    if family == "quad":
        return N_b / 2 + b + 2 * g
    if family == "hex":
        if kind == AFFINE:
            return -N_v / 2 + 3 * N_b / 4 + 3 * b / 2 + 3 * g
        return N_v / 6 + 5 * N_b / 12 + 5 * b / 6 + 5 * g / 3
    raise PMError(f"unknown mesh family {family!r}")


CONTAINMENT_DISJOINT = "disjoint"
CONTAINMENT_A_IN_B = "A subset of B"
CONTAINMENT_B_IN_A = "B subset of A"
CONTAINMENT_EQUAL = "equal"
CONTAINMENT_OVERLAPPING = "overlapping"


def containment_check(basis_a: SubspaceBasis, basis_b: SubspaceBasis, tol=1e-8) -> str:
    """Relation between two subspaces of the same ambient space, by rank."""
    A, Bq = basis_a.Q, basis_b.Q
    ra, rb = A.shape[1], Bq.shape[1]

    def rank(m):
        if m.size == 0:
            return 0
        s = np.linalg.svd(m, compute_uv=False)
        return int(np.sum(s > tol * s[0])) if s[0] > 0 else 0

    rab = rank(np.hstack([A, Bq]))
    if rab == ra == rb:
        return CONTAINMENT_EQUAL
    if rab == rb:
        return CONTAINMENT_A_IN_B
    if rab == ra:
        return CONTAINMENT_B_IN_A
    if rab == ra + rb:
        return CONTAINMENT_DISJOINT
    return CONTAINMENT_OVERLAPPING
