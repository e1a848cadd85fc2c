"""Local/global alternation inside the subspace."""

import numpy as np
import pytest
from scipy.linalg import orthogonal_procrustes

from pmspace import corpus
from pmspace.deform import (
    ARAP,
    ASAP,
    DeformParams,
    Handle,
    deform,
    global_step,
    local_step,
)
from pmspace.errors import InfeasibleConstraintError, PMError
from pmspace.mesh import Mesh
from pmspace.subspace import CaseAssignment, build_subspace


def rotation(theta, axis=2):
    c, s = np.cos(theta), np.sin(theta)
    R = np.eye(3)
    i, j = (axis + 1) % 3, (axis + 2) % 3
    R[i, i] = R[j, j] = c
    R[i, j], R[j, i] = -s, s
    return R


def test_local_step_identity():
    m = corpus.cube()
    for T in local_step(m, m):
        assert np.allclose(T, np.eye(3))


def test_local_step_recovers_global_rotation():
    m = corpus.cube()
    R = rotation(0.7) @ rotation(0.3, axis=0)
    rotated = Mesh(m.vertices @ R.T, m.faces)
    for T in local_step(m, rotated):
        assert np.allclose(T, R, atol=1e-12)


def test_local_step_matches_procrustes_oracle():
    rng = np.random.default_rng(5)
    v = np.column_stack([rng.standard_normal((5, 2)), np.zeros(5)])
    rest = Mesh(v, [[0, 1, 2, 3, 4]], validate=False)
    R = rotation(1.1, axis=1)
    cur = Mesh(v @ R.T + rng.standard_normal(3), rest.faces, validate=False)
    T = local_step(rest, cur)[0]
    P = v - v.mean(axis=0)
    X = cur.vertices - cur.vertices.mean(axis=0)
    R_oracle, _ = orthogonal_procrustes(P, X)
    assert np.allclose(T, R_oracle.T, atol=1e-10)


def test_local_step_asap_recovers_scale():
    m = corpus.cube()
    scaled = Mesh(2.5 * m.vertices, m.faces)
    for T in local_step(m, scaled, energy=ASAP):
        assert np.allclose(T, 2.5 * np.eye(3), atol=1e-12)
    # rigid fit ignores the scale
    for T in local_step(m, scaled, energy=ARAP):
        assert np.allclose(T, np.eye(3), atol=1e-12)


def test_local_step_degenerate_face_warns():
    rest = Mesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2, 3]])
    collapsed = Mesh(np.zeros((4, 3)), rest.faces, validate=False)
    with pytest.warns(UserWarning):
        T = local_step(rest, collapsed)[0]
    assert np.allclose(T, np.eye(3))


def test_global_step_identity_transforms():
    mesh = corpus.cube()
    _, basis = build_subspace(mesh, CaseAssignment("affine"))
    out = global_step(basis, mesh, [np.eye(3)] * 6, [])
    assert np.allclose(out.vertices, mesh.vertices, atol=1e-10)


def test_global_step_translation_through_hard_handles():
    mesh = corpus.cube()
    _, basis = build_subspace(mesh, CaseAssignment("affine"))
    t = np.array([0.4, -0.1, 0.9])
    handles = [Handle(v, tuple(mesh.vertices[v] + t), "hard")
               for v in (0, 3, 5)]
    out = global_step(basis, mesh, [np.eye(3)] * 6, handles)
    assert np.allclose(out.vertices, mesh.vertices + t, atol=1e-9)


def test_global_step_infeasible_hard_handles():
    mesh = corpus.cube()
    _, basis = build_subspace(mesh, CaseAssignment("parallel"))
    handles = [Handle(0, (0, 0, 0), "hard"), Handle(7, (9, 9, 9), "hard"),
               Handle(1, (-4, 2, 2), "hard"), Handle(6, (1, 1, 8), "hard"),
               Handle(3, (0.3, 0.1, 0.7), "hard")]
    with pytest.raises(InfeasibleConstraintError):
        global_step(basis, mesh, [np.eye(3)] * 6, handles)


def test_deform_no_handles_is_identity():
    mesh = corpus.hex_prism()
    _, basis = build_subspace(mesh, CaseAssignment("affine"))
    out, trace = deform(basis, mesh, [])
    assert out is mesh
    assert trace == []


def test_deform_energy_trace_nonincreasing_and_in_subspace():
    mesh = corpus.hex_prism()
    constraint, basis = build_subspace(mesh, CaseAssignment("affine"))
    handles = [Handle(0, (1.5, 0.3, 0.2)),
               Handle(9, tuple(mesh.vertices[9] + [0, 0, 0.6]), "hard")]
    out, trace = deform(basis, mesh, handles,
                        DeformParams(energy=ASAP, iterations=40))
    assert len(trace) >= 2
    for a, b in zip(trace, trace[1:]):
        assert b <= a + 1e-9 * max(1.0, abs(a))
    disp = out.vec() - mesh.vec()
    assert (np.linalg.norm(constraint.B @ disp)
            <= 1e-9 * np.linalg.norm(disp))


def test_deform_affine_hex_solid_gives_global_affine_image():
    # closed hexagonal solid, affine case: the 12-dim subspace is exactly
    # the global affine family, so any handle drag lands on A x + t
    mesh = corpus.hex_prism()
    _, basis = build_subspace(mesh, CaseAssignment("affine"))
    handles = [Handle(0, (1.4, 0.5, -0.2)), Handle(8, (0.3, 1.2, 1.4))]
    out, _ = deform(basis, mesh, handles,
                    DeformParams(energy=ASAP, iterations=60))
    P = np.hstack([mesh.vertices, np.ones((mesh.n_vertices, 1))])
    sol, *_ = np.linalg.lstsq(P, out.vertices, rcond=None)
    assert np.abs(P @ sol - out.vertices).max() < 1e-6


def test_deform_matches_dense_alternation_oracle():
    # independent dense implementation of the same alternation on a
    # quad strip with two handles
    mesh = corpus.quad_grid(2, 5)
    constraint, basis = build_subspace(mesh, CaseAssignment("affine"))
    handles = [Handle(0, (0.0, 0.0, 0.5)), Handle(9, (4.0, 1.0, -0.5))]
    params = DeformParams(energy=ARAP, iterations=50, soft_weight=1e4)
    out, _ = deform(basis, mesh, handles, params)

    n = mesh.n_vertices
    Q = basis.Q
    cur = mesh.vertices.copy()
    for _ in range(50):
        rows, rhs = [], []
        for f in mesh.faces:
            idx = list(f)
            P = mesh.vertices[idx] - mesh.vertices[idx].mean(axis=0)
            X = cur[idx] - cur[idx].mean(axis=0)
            R, _ = orthogonal_procrustes(P, X)
            if np.linalg.det(R) < 0:
                U, _, Vt = np.linalg.svd(P.T @ X)
                R = U @ np.diag([1, 1, -1]) @ Vt
            G = P @ R
            k = len(idx)
            C = np.eye(k) - np.ones((k, k)) / k
            for ax in range(3):
                block = np.zeros((k, 3 * n))
                block[:, [ax * n + v for v in idx]] = C
                rows.append(block)
                rhs.append(G[:, ax])
        for h in handles:
            w = np.sqrt(1e4)
            for ax in range(3):
                row = np.zeros((1, 3 * n))
                row[0, ax * n + h.vertex] = w
                rows.append(row)
                rhs.append([w * h.target[ax]])
        A = np.vstack(rows)
        b = np.concatenate([np.atleast_1d(r) for r in rhs])
        M = A @ Q
        c = b - A @ mesh.vec()
        w_opt, *_ = np.linalg.lstsq(M, c, rcond=None)
        cur = (mesh.vec() + Q @ w_opt).reshape(3, n).T
    assert np.abs(out.vertices - cur).max() < 1e-6


def test_deform_rotation_equivariance():
    mesh = corpus.hex_prism()
    _, basis = build_subspace(mesh, CaseAssignment("affine"))
    handles = [Handle(0, (1.3, 0.4, 0.1)), Handle(7, (-0.5, 0.8, 1.2))]
    params = DeformParams(energy=ARAP, iterations=30)
    out, _ = deform(basis, mesh, handles, params)

    R = rotation(0.9) @ rotation(0.4, axis=0)
    rotated = Mesh(mesh.vertices @ R.T, mesh.faces)
    _, basis_r = build_subspace(rotated, CaseAssignment("affine"))
    handles_r = [Handle(h.vertex, tuple(R @ np.asarray(h.target)), h.mode)
                 for h in handles]
    out_r, _ = deform(basis_r, rotated, handles_r, params)
    assert np.abs(out_r.vertices - out.vertices @ R.T).max() < 1e-8


def test_deform_params_validation():
    with pytest.raises(PMError):
        DeformParams(energy="bogus")
    with pytest.raises(PMError):
        DeformParams(iterations=0)
    with pytest.raises(PMError):
        Handle(0, (0, 0, 0), mode="pinned")
    with pytest.raises(PMError):
        Handle(0, (0, 0, 0), mode="soft", weight=-1.0)
