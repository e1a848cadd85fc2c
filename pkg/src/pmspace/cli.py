"""Command line front end.

Every operation of the library is reachable as a subcommand; artifacts
are OBJ, JSON, and CSV files with fixed float formatting so identical
invocations produce identical bytes.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import corpus as corpus_mod
from .deform import ARAP, ASAP, DeformParams, Handle, deform
from .dual import dual_edit, polar_dual
from .errors import PMError
from .mesh import (
    Mesh,
    counts,
    halfedge_subdivide,
    load_mesh,
    planarity_report,
    save_mesh,
    tutte_flatten,
)
from .shapes import (
    bandpass_apply,
    eigenshapes,
    fundamental_shape,
    graph_laplacian,
    sparse_shape_best,
)
from .subspace import (
    CaseAssignment,
    build_subspace,
    closest_pm,
    min_ndof_bound,
    mixed_ndof_bound,
)
from . import verify as verify_mod

PRECISION = 12


def _fmt(value):
    """Round floats to the artifact precision, recursively."""
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.{PRECISION}g}")
    if isinstance(value, (int, np.integer, bool)) or value is None:
        return value
    if isinstance(value, np.ndarray):
        return _fmt(value.tolist())
    if isinstance(value, dict):
        return {k: _fmt(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_fmt(v) for v in value]
    return value


def _emit_json(data, output):
    text = json.dumps(_fmt(data), indent=2, sort_keys=True) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _load_cases(spec):
    if spec in ("affine", "parallel", "vertical"):
        return CaseAssignment(spec)
    try:
        return CaseAssignment.load(spec)
    except (OSError, json.JSONDecodeError) as exc:
        raise PMError(f"cannot read case assignment {spec!r}: {exc}")


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                f"{v:.{PRECISION}g}" if isinstance(v, float) else str(v)
                for v in row
            ) + "\n")


class _Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PMError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_Cli)
def main():
    """Linear subspace toolkit for planar-faced meshes."""


_cases_opt = click.option(
    "--cases", default="affine", show_default=True,
    help="affine | parallel | vertical, or a JSON assignment path",
)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("-o", "--output", type=click.Path(), default=None,
              help="write the JSON report here instead of stdout")
def analyze(mesh_path, cases, output):
    """Counts, subspace dimension, and bounds for one mesh."""
    mesh = load_mesh(mesh_path)
    assignment = _load_cases(cases)
    c = counts(mesh)
    constraint, basis = build_subspace(mesh, assignment)
    _, worst = planarity_report(mesh)
    report = {
        "counts": {"N_v": c.N_v, "N_e": c.N_e, "N_f": c.N_f, "N_c": c.N_c,
                   "N_b": c.N_b, "b": c.b, "g_paper": c.g_paper},
        "ndof": basis.ndof,
        "nfv": basis.ndof / 3,
        "decoupled": constraint.decoupled,
        "planarity": worst,
    }
    if not assignment.overrides:
        report["min_ndof_bound"] = min_ndof_bound(c, assignment.default)
    else:
        bound, heuristic = mixed_ndof_bound(mesh, assignment)
        report["min_ndof_bound"] = bound
        report["bound_heuristic"] = heuristic
    _emit_json(report, output)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("-o", "--output", type=click.Path(), required=True,
              help="CSV path: one basis vector per row")
def basis(mesh_path, cases, output):
    """Orthonormal nullspace basis of the constraint matrix."""
    mesh = load_mesh(mesh_path)
    _, b = build_subspace(mesh, _load_cases(cases))
    header = [f"c{j}" for j in range(b.Q.shape[0])]
    _write_csv(output, header, [list(map(float, b.Q[:, k]))
                                for k in range(b.ndof)])
    _emit_json({"ndof": b.ndof, "decoupled": b.decoupled}, None)


@main.command("eigenshapes")
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("--count", type=int, default=None, help="keep the lowest k")
@click.option("-o", "--output", type=click.Path(), required=True,
              help="CSV path: index, frequency, residual")
def eigenshapes_cmd(mesh_path, cases, count, output):
    """Laplacian harmonics restricted to the subspace."""
    mesh = load_mesh(mesh_path)
    constraint, b = build_subspace(mesh, _load_cases(cases))
    spec = eigenshapes(b, graph_laplacian(mesh), count=count,
                       constraint=constraint)
    rows = [(k, float(spec.frequencies[k]), float(s.residual))
            for k, s in enumerate(spec.shapes)]
    _write_csv(output, ["index", "frequency", "residual"], rows)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("--low", type=float, required=True)
@click.option("--high", type=float, required=True)
@click.option("--gain", type=float, required=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def bandpass(mesh_path, cases, low, high, gain, output):
    """Add the eigenshapes of one frequency band to the mesh."""
    mesh = load_mesh(mesh_path)
    constraint, b = build_subspace(mesh, _load_cases(cases))
    spec = eigenshapes(b, graph_laplacian(mesh), constraint=constraint)
    out = bandpass_apply(mesh, spec, low, high, gain)
    save_mesh(out, output)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("--seed-vertex", type=int, default=None)
@click.option("--support", type=int, default=8, show_default=True)
@click.option("--amplitude", type=float, default=0.0,
              help="also write mesh + amplitude * shape")
@click.option("-o", "--output", type=click.Path(), default=None,
              help="OBJ path for the displaced mesh (needs --amplitude)")
@click.option("--report", type=click.Path(), default=None,
              help="JSON path for support and residual")
def sparse(mesh_path, cases, seed_vertex, support, amplitude, output, report):
    """Few-vertex shape seeded at one vertex; best residual reported."""
    mesh = load_mesh(mesh_path)
    constraint, _ = build_subspace(mesh, _load_cases(cases))
    shape = sparse_shape_best(constraint, seed_vertex, support)
    mags = np.linalg.norm(shape.displacement.reshape(3, mesh.n_vertices),
                          axis=0)
    sup = [int(v) for v in np.where(mags > 1e-9)[0]]
    _emit_json({"support": sup, "size": len(sup),
                "residual": shape.residual}, report)
    if output:
        out = mesh.with_vec(mesh.vec() + amplitude * shape.displacement)
        save_mesh(out, output)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("--vertex", type=int, required=True)
@click.option("--lam", type=float, default=1.0, show_default=True)
@click.option("--direction", default="0,0,1", show_default=True)
@click.option("--amplitude", type=float, default=1.0, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def fundamental(mesh_path, cases, vertex, lam, direction, amplitude, output):
    """Regularized single-vertex impulse response, written as OBJ."""
    mesh = load_mesh(mesh_path)
    constraint, b = build_subspace(mesh, _load_cases(cases))
    d = tuple(float(t) for t in direction.split(","))
    shape = fundamental_shape(b, graph_laplacian(mesh), vertex, lam=lam,
                              direction=d, constraint=constraint)
    out = mesh.with_vec(mesh.vec() + amplitude * shape.displacement)
    save_mesh(out, output)


@main.command("deform")
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("--handles", "handles_path", type=click.Path(exists=True),
              required=True,
              help='JSON [{"vertex":5,"target":[x,y,z],"mode":"hard"}]')
@click.option("--energy", type=click.Choice([ARAP, ASAP]), default=ARAP,
              show_default=True)
@click.option("--iterations", type=int, default=50, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="CSV path for the energy trace")
def deform_cmd(mesh_path, cases, handles_path, energy, iterations, output,
               trace_path):
    """Handle-based deformation inside the subspace."""
    mesh = load_mesh(mesh_path)
    _, b = build_subspace(mesh, _load_cases(cases))
    with open(handles_path) as fh:
        raw = json.load(fh)
    handles = [Handle(vertex=h["vertex"], target=h["target"],
                      mode=h.get("mode", "soft"), weight=h.get("weight"))
               for h in raw]
    params = DeformParams(energy=energy, iterations=iterations)
    out, trace = deform(b, mesh, handles, params)
    save_mesh(out, output)
    if trace_path:
        _write_csv(trace_path, ["iteration", "energy"],
                   [(k, float(e)) for k, e in enumerate(trace)])


@main.command("dual")
@click.argument("mesh_path", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), required=True)
@click.option("--sidecar", type=click.Path(), default=None,
              help="JSON path for center, scale, and index maps")
def dual_cmd(mesh_path, output, sidecar):
    """Polar dual of a closed mesh."""
    mesh = load_mesh(mesh_path)
    d = polar_dual(mesh)
    save_mesh(d.mesh, output)
    if sidecar:
        _emit_json({
            "center": list(d.center),
            "scale": d.scale,
            "dual_vertex_of_face": list(range(len(mesh.faces))),
            "dual_face_of_vertex": list(range(mesh.n_vertices)),
        }, sidecar)


@main.command("dual-edit")
@click.argument("mesh_path", type=click.Path(exists=True))
@_cases_opt
@click.option("--shape-index", type=int, default=0, show_default=True)
@click.option("--amplitude", type=float, default=0.0, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
@click.option("--report", type=click.Path(), default=None)
def dual_edit_cmd(mesh_path, cases, shape_index, amplitude, output, report):
    """Add a dual eigenshape in the normal domain and reconstruct."""
    mesh = load_mesh(mesh_path)
    out, residuals = dual_edit(mesh, _load_cases(cases),
                               shape_index=shape_index, amplitude=amplitude)
    save_mesh(out, output)
    if report:
        _emit_json({"residuals": list(residuals),
                    "max_residual": float(residuals.max())}, report)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@click.argument("target_path", type=click.Path(exists=True))
@_cases_opt
@click.option("--hard-json", type=click.Path(exists=True), default=None,
              help='JSON [{"vertex":0,"point":[x,y,z]}] pinned exactly')
@click.option("-o", "--output", type=click.Path(), required=True)
def closest(mesh_path, target_path, cases, hard_json, output):
    """Closest subspace member to a target mesh."""
    mesh = load_mesh(mesh_path)
    target = load_mesh(target_path)
    _, b = build_subspace(mesh, _load_cases(cases))
    hard = ()
    if hard_json:
        with open(hard_json) as fh:
            hard = [(h["vertex"], h["point"]) for h in json.load(fh)]
    out = closest_pm(b, target, hard_constraints=hard)
    save_mesh(out, output)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), required=True)
def subdivide(mesh_path, output):
    """Halfedge (midpoint) subdivision; k-gons become 2k-gons."""
    save_mesh(halfedge_subdivide(load_mesh(mesh_path)), output)


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True))
@click.option("--corners", type=int, default=4, show_default=True,
              help="boundary mapped to a regular polygon with this many corners")
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def flatten(mesh_path, corners, radius, output):
    """Spring embedding of a disk mesh into a convex polygon."""
    mesh = load_mesh(mesh_path)
    ang = 2 * np.pi * np.arange(corners) / corners
    poly = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    save_mesh(tutte_flatten(mesh, poly), output)


@main.command("verify")
@click.option("--suite", default="all", show_default=True,
              help="all | stencil | regular3 | table1 | maximality | polygons")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(), default=None)
def verify_cmd(suite, seed, output):
    """Run the theory audit suite; nonzero exit on any failure."""
    report = {}
    if suite in ("all", "stencil"):
        r = verify_mod.stencil_check(6, 6, seed=seed)
        report["stencil"] = {k: v for k, v in r.items() if k != "stencil"}
    if suite in ("all", "regular3"):
        report["regular3"] = {
            name: verify_mod.regular3_checks(corpus_mod.CORPUS[name]())
            for name in ("cube", "hex_prism")
        }
    if suite in ("all", "table1"):
        report["table1"] = verify_mod.table1_audit(corpus_mod.CORPUS)
    if suite in ("all", "maximality"):
        report["maximality"] = verify_mod.maximality_probe(
            corpus_mod.CORPUS["cube"](), CaseAssignment("affine"),
            trials=5, seed=seed,
        )
    if suite in ("all", "polygons"):
        report["polygons"] = _polygon_audit(seed)
    if not report:
        raise click.UsageError(f"unknown suite {suite!r}")
    ok = _all_ok(report)
    report["ok"] = ok
    _emit_json(report, output)
    for name in sorted(k for k in report if k != "ok"):
        click.echo(f"{name}: {'ok' if _all_ok(report[name]) else 'FAIL'}",
                   err=True)
    if not ok:
        sys.exit(1)


def _all_ok(node):
    """A report subtree passes when every ok-like flag in it is true."""
    if isinstance(node, dict):
        flags = [v for k, v in node.items()
                 if k in ("ok", "all_certified", "nfv_ok", "dof_ok")]
        children = all(_all_ok(v) for v in node.values())
        return children and all(bool(f) for f in flags)
    if isinstance(node, list):
        return all(_all_ok(v) for v in node)
    return True


def _polygon_audit(seed, pairs=200):
    """Cross-validate the span test against the relationship witness."""
    rng = np.random.default_rng(seed)

    def random_planar(k=6):
        nrm = rng.standard_normal(3)
        nrm /= np.linalg.norm(nrm)
        u, _, _ = np.linalg.svd(np.outer(nrm, nrm))
        return u[:, 1:] @ rng.standard_normal((2, k))

    disagreements = 0
    for _ in range(pairs):
        u = rng.random()
        Y = random_planar()
        if u < 0.4:
            X = rng.standard_normal((3, 3)) @ Y
        elif u < 0.7:
            d = rng.standard_normal(3)
            nx = rng.standard_normal(3)
            nx /= np.linalg.norm(nx)
            t = -(nx @ Y) / (nx @ d)
            X = Y + np.outer(d, t)
        else:
            X = random_planar()
        spans, _ = verify_mod.spans_planar_space(X, Y, samples=30, seed=seed)
        related = verify_mod.relationship_type(X, Y).kind != verify_mod.NONE
        if spans != related:
            disagreements += 1
    return {"pairs": pairs, "disagreements": disagreements,
            "ok": disagreements == 0}


if __name__ == "__main__":
    main()
