"""Theory audits: polygon spans, maximality, stencil, dof tables."""

import numpy as np
import pytest

from pmspace import corpus
from pmspace.mesh import Mesh
from pmspace.subspace import CaseAssignment, build_subspace
from pmspace.verify import (
    BOTH,
    NONE,
    STENCIL,
    TYPE1,
    TYPE2,
    maximality_probe,
    regular3_checks,
    relationship_type,
    spans_planar_space,
    stencil_check,
    table1_audit,
)

RNG = np.random.default_rng(11)


def planar_polygon(k=6, rng=RNG):
    normal = rng.standard_normal(3)
    normal /= np.linalg.norm(normal)
    u, _, _ = np.linalg.svd(np.outer(normal, normal))
    return u[:, 1:] @ rng.standard_normal((2, k))


def slide_onto_plane(Y, rng=RNG):
    """Move each vertex along a fixed line direction onto a new plane."""
    d = rng.standard_normal(3)
    nx = rng.standard_normal(3)
    nx /= np.linalg.norm(nx)
    t = -(nx @ Y) / (nx @ d)
    return Y + np.outer(d, t)


def test_affine_image_is_type1():
    Y = planar_polygon()
    X = RNG.standard_normal((3, 3)) @ Y
    w = relationship_type(X, Y)
    assert w.kind in (TYPE1, BOTH)
    assert w.A is not None
    assert w.residuals[TYPE1] <= 1e-10


def test_coplanar_quads_are_type2_with_free_scalar():
    z0 = np.zeros((1, 5))
    X = np.vstack([RNG.standard_normal((2, 5)), z0])
    Y = np.vstack([RNG.standard_normal((2, 5)), z0])
    w = relationship_type(X, Y)
    assert w.kind in (TYPE2, BOTH)
    # both cross-evaluations vanish so c is unconstrained
    assert w.c is None
    assert w.residuals[TYPE2] <= 1e-12


def test_slid_vertices_give_type2():
    # vertices slide along fixed lines onto another plane; the pencil of
    # combinations stays planar throughout
    Y = planar_polygon()
    X = slide_onto_plane(Y)
    w = relationship_type(X, Y)
    assert w.kind in (TYPE2, BOTH)
    assert w.residuals[TYPE2] <= 1e-9
    ok, worst = spans_planar_space(X, Y)
    assert ok and worst <= 1e-9


def test_unrelated_polygons_do_not_span():
    X, Y = planar_polygon(), planar_polygon()
    ok, worst = spans_planar_space(X, Y)
    assert not ok
    assert worst > 1e-6
    assert relationship_type(X, Y).kind == NONE


def test_span_iff_relationship_on_random_pairs():
    rng = np.random.default_rng(7)
    for trial in range(200):
        u = rng.random()
        Y = planar_polygon(rng=rng)
        if u < 0.4:
            X = rng.standard_normal((3, 3)) @ Y
        elif u < 0.7:
            X = slide_onto_plane(Y, rng=rng)
        else:
            X = planar_polygon(rng=rng)
        spans, _ = spans_planar_space(X, Y, samples=30, seed=trial)
        related = relationship_type(X, Y).kind != NONE
        assert spans == related, f"pair {trial}"


def test_relationship_rejects_triangles():
    Y = planar_polygon(k=3)
    with pytest.raises(Exception):
        relationship_type(Y, Y)


def test_maximality_probe_cube_containments():
    report = maximality_probe(corpus.cube(), CaseAssignment("affine"),
                              trials=5, seed=0)
    assert report["all_certified"]
    assert report["containments"]["affine/parallel"] == "B subset of A"


def test_maximality_probe_open_cube_no_containment():
    mesh = corpus.cube()
    open_cube = Mesh(mesh.vertices, mesh.faces[:-1])
    report = maximality_probe(open_cube, CaseAssignment("affine"),
                              trials=3, seed=0)
    assert report["containments"]["affine/parallel"] == "overlapping"


def test_maximality_probe_grid_certifies_sampled_directions():
    report = maximality_probe(corpus.quad_grid(5, 5),
                              CaseAssignment("affine"), trials=20, seed=1)
    assert report["all_certified"]
    assert len(report["trials"]) == 20


@pytest.mark.parametrize("m,n", [(4, 4), (6, 6), (10, 10)])
def test_stencil_check_grids(m, n):
    report = stencil_check(m, n)
    assert report["ok"]
    assert report["scalar"] > 0
    assert np.allclose(report["stencil"],
                       report["scalar"] * STENCIL, atol=1e-10)
    assert report["separable_max_residual"] <= 1e-10
    assert report["mixed_residual"] > 1e-3


def test_regular3_cube_and_prism():
    for mesh in (corpus.cube(), corpus.hex_prism()):
        report = regular3_checks(mesh)
        assert not report["skipped"]
        assert report["ok"]
        assert report["affine_ndof"] == 12
        assert report["parallel_eq_Nf"]


def test_regular3_skips_non_3_regular():
    base = regular3_checks(corpus.cube())
    report = regular3_checks(corpus.subdivided_cube())
    assert report["skipped"]
    assert "notice" in report
    # refining the cube into planar quads strictly enlarges the space
    assert report["affine_ndof"] > base["affine_ndof"]


def test_table1_audit_zero_violations():
    report = table1_audit(corpus.CORPUS)
    assert report["ok"]
    assert all(r["nfv_ok"] and r["dof_ok"] for r in report["rows"])
    # the pure quad/hex formulas apply to pure meshes only
    fams = {r["mesh"]: r["family"] for r in report["rows"]}
    assert fams["cube"] == "quad"
    assert fams["hex_flower"] == "hex"
    assert fams["hex_prism"] is None
