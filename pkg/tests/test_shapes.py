"""Eigenshapes, band-pass filtering, sparse and fundamental shapes."""

import numpy as np
import pytest

from pmspace import corpus
from pmspace.errors import PMError, SparseShapeError
from pmspace.mesh import planarity_report
from pmspace.shapes import (
    bandpass_apply,
    eigenshapes,
    fundamental_shape,
    graph_laplacian,
    laplacian3,
    sparse_shape,
    sparse_shape_best,
)
from pmspace.subspace import CaseAssignment, build_subspace


def setup_mesh(name, case="affine"):
    mesh = corpus.CORPUS[name]()
    constraint, basis = build_subspace(mesh, CaseAssignment(case))
    return mesh, constraint, basis


def support_of(disp, n):
    mags = np.linalg.norm(disp.reshape(3, n), axis=0)
    return sorted(int(v) for v in np.where(mags > 1e-9)[0])


def test_eigenshapes_match_dense_projector_oracle():
    mesh, constraint, basis = setup_mesh("cube")
    L3 = laplacian3(graph_laplacian(mesh)).toarray()
    spec = eigenshapes(basis, graph_laplacian(mesh), constraint=constraint)
    # oracle: nonzero spectrum of P L P with P the subspace projector
    P = basis.Q @ basis.Q.T
    lam_oracle = np.linalg.eigvalsh(P @ L3 @ P)
    lam_oracle = np.sort(lam_oracle)[-basis.ndof:]
    assert np.allclose(np.sort(spec.frequencies), lam_oracle, atol=1e-8)
    for s in spec.shapes:
        assert s.residual < 1e-10


def test_affine_cube_zero_modes_contain_translations():
    mesh, constraint, basis = setup_mesh("cube")
    spec = eigenshapes(basis, graph_laplacian(mesh), constraint=constraint)
    zero = [s.displacement for s, f in zip(spec.shapes, spec.frequencies)
            if f < 1e-10]
    Z = np.array(zero).T
    n = mesh.n_vertices
    for ax in range(3):
        t = np.zeros(3 * n)
        t[ax * n:(ax + 1) * n] = 1.0
        resid = t - Z @ np.linalg.lstsq(Z, t, rcond=None)[0]
        assert np.linalg.norm(resid) < 1e-10


def test_bandpass_gain_zero_is_identity():
    mesh, constraint, basis = setup_mesh("grid5")
    spec = eigenshapes(basis, graph_laplacian(mesh), constraint=constraint)
    out = bandpass_apply(mesh, spec, 0.0, 10.0, 0.0)
    assert np.allclose(out.vertices, mesh.vertices)


def test_bandpass_output_stays_planar():
    mesh, constraint, basis = setup_mesh("grid5")
    spec = eigenshapes(basis, graph_laplacian(mesh), constraint=constraint)
    out = bandpass_apply(mesh, spec, 0.1, 3.0, 0.4)
    assert not np.allclose(out.vertices, mesh.vertices)
    _, worst = planarity_report(out)
    assert worst <= 1e-8


def test_bandpass_rejects_empty_band():
    mesh, constraint, basis = setup_mesh("grid5")
    spec = eigenshapes(basis, graph_laplacian(mesh), constraint=constraint)
    with pytest.raises(PMError):
        bandpass_apply(mesh, spec, 2.0, 1.0, 0.5)


def test_sparse_shape_grid_line():
    # on a flat grid the sparsest z-motion through the center lifts one
    # whole grid line (rows 10..14 for the 5 x 5 vertex grid)
    mesh, constraint, _ = setup_mesh("grid5")
    shape = sparse_shape(constraint, seed_vertex=12, target_support=8)
    assert shape.residual <= 1e-10
    assert support_of(shape.displacement, 25) == [10, 11, 12, 13, 14]


def test_sparse_shape_subdivided_cube_belt():
    # the equatorial belt of midpoints and centers moves in isolation
    mesh, constraint, _ = setup_mesh("subdivided_cube")
    shape = sparse_shape(constraint, seed_vertex=8, target_support=8)
    assert shape.residual <= 1e-10
    belt = sorted(int(v) for v in
                  np.where(np.abs(mesh.vertices[:, 2]) < 1e-12)[0])
    assert support_of(shape.displacement, 26) == belt


def test_sparse_shape_raises_when_unattainable():
    mesh, constraint, _ = setup_mesh("grid5")
    with pytest.raises(SparseShapeError) as exc:
        sparse_shape(constraint, seed_vertex=12, target_support=2)
    assert exc.value.best_residual > 1e-10


def test_sparse_residual_monotone_in_support():
    # asymmetric variant: only approximate sparse shapes exist, and the
    # attainable residual can only improve as the support grows
    mesh = corpus.perturbed_subdivided_cube(amplitude=1e-4)
    constraint, _ = build_subspace(mesh, CaseAssignment("affine"))
    residuals = [sparse_shape_best(constraint, 8, k).residual
                 for k in (5, 8, 12, 16)]
    assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
    # the paper-scale regime: near-belt support at 8 vertices
    assert residuals[1] < 1e-3


def test_fundamental_lambda_zero_is_projection():
    mesh, constraint, basis = setup_mesh("grid5")
    shape = fundamental_shape(basis, graph_laplacian(mesh), 12, lam=0.0)
    n = mesh.n_vertices
    delta = np.zeros(3 * n)
    delta[2 * n + 12] = 1.0
    assert np.allclose(shape.displacement,
                       basis.Q @ (basis.Q.T @ delta), atol=1e-10)


def test_fundamental_regularization_spreads_impulse():
    mesh, constraint, basis = setup_mesh("grid5")
    sharp = fundamental_shape(basis, graph_laplacian(mesh), 12, lam=0.0,
                              constraint=constraint)
    smooth = fundamental_shape(basis, graph_laplacian(mesh), 12, lam=10.0,
                               constraint=constraint)
    assert smooth.residual < 1e-10
    L3 = laplacian3(graph_laplacian(mesh))
    assert (np.linalg.norm(L3 @ smooth.displacement)
            < np.linalg.norm(L3 @ sharp.displacement))


def test_fundamental_validates_arguments():
    mesh, constraint, basis = setup_mesh("cube")
    L = graph_laplacian(mesh)
    with pytest.raises(PMError):
        fundamental_shape(basis, L, 99)
    with pytest.raises(PMError):
        fundamental_shape(basis, L, 0, lam=-1.0)
