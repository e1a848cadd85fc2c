"""Reference meshes used by the audit suite and the tests.

All generators return planar-faced meshes (planarity 0 up to roundoff), so
they are valid sources for subspace construction.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, halfedge_subdivide


def triangle() -> Mesh:
    return Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def single_quad() -> Mesh:
    return Mesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2, 3]])


def regular_polygon(k, radius=1.0) -> Mesh:
    """Single regular k-gon face in z = 0."""
    ang = 2 * np.pi * np.arange(k) / k
    v = np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros(k)])
    return Mesh(v, [list(range(k))])


def cube(half=1.0) -> Mesh:
    """Axis-aligned cube with vertices (+-half)^3, outward-facing quads."""
    v = half * np.array(
        [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], float
    )
    f = [
        [0, 1, 3, 2],  # x = -half
        [4, 6, 7, 5],  # x = +half
        [0, 4, 5, 1],  # y = -half
        [2, 3, 7, 6],  # y = +half
        [0, 2, 6, 4],  # z = -half
        [1, 5, 7, 3],  # z = +half
    ]
    return Mesh(v, f)


def quad_grid(m, n, spacing=1.0) -> Mesh:
    """Flat m x n vertex grid in z = 0 ((m-1)(n-1) quads, unit spacing)."""
    xs, ys = np.meshgrid(np.arange(n), np.arange(m))
    v = spacing * np.column_stack(
        [xs.ravel(), ys.ravel(), np.zeros(m * n)]
    )
    faces = []
    for i in range(m - 1):
        for j in range(n - 1):
            a = i * n + j
            faces.append([a, a + 1, a + 1 + n, a + n])
    return Mesh(v, faces)


def hex_strip(k) -> Mesh:
    """Row of k flat hexagons sharing vertical edges (disk, all boundary)."""
    verts = []
    index = {}

    def vid(p):
        key = (round(p[0], 9), round(p[1], 9))
        if key not in index:
            index[key] = len(verts)
            verts.append([p[0], p[1], 0.0])
        return index[key]

    faces = []
    w = np.sqrt(3)
    for i in range(k):
        cx = i * w
        ang = np.pi / 6 + np.pi / 3 * np.arange(6)
        pts = [(cx + np.cos(a), np.sin(a)) for a in ang]
        faces.append([vid(p) for p in pts])
    return Mesh(verts, faces)


def hex_flower() -> Mesh:
    """Central hexagon surrounded by 6 hexagons (disk with interior verts)."""
    verts = []
    index = {}

    def vid(p):
        key = (round(p[0], 9), round(p[1], 9))
        if key not in index:
            index[key] = len(verts)
            verts.append([p[0], p[1], 0.0])
        return index[key]

    faces = []
    w = np.sqrt(3)
    centers = [(0.0, 0.0)] + [
        (w * np.cos(np.pi / 3 * i), w * np.sin(np.pi / 3 * i)) for i in range(6)
    ]
    for cx, cy in centers:
        ang = np.pi / 6 + np.pi / 3 * np.arange(6)
        faces.append([vid((cx + np.cos(a), cy + np.sin(a))) for a in ang])
    return Mesh(verts, faces)


def hex_prism(radius=1.0, height=1.0) -> Mesh:
    """Closed 3-regular solid: two hexagons joined by six quads."""
    ang = 2 * np.pi * np.arange(6) / 6
    bottom = np.column_stack(
        [radius * np.cos(ang), radius * np.sin(ang), np.zeros(6)]
    )
    top = bottom + [0, 0, height]
    v = np.vstack([bottom, top])
    faces = [list(range(5, -1, -1)), [6 + i for i in range(6)]]
    for i in range(6):
        j = (i + 1) % 6
        faces.append([i, j, 6 + j, 6 + i])
    return Mesh(v, faces)


def subdivided_cube() -> Mesh:
    """Cube with edge midpoints and face centers: 24 planar quads, closed."""
    base = cube()
    sub = halfedge_subdivide(base)  # octagon faces through midpoints
    # split each octagon into 4 quads around its face center
    verts = list(sub.vertices)
    faces = []
    for f in sub.faces:
        c = sub.vertices[list(f)].mean(axis=0)
        cid = len(verts)
        verts.append(c)
        # f alternates corner, midpoint, corner, ...: quads (mid, corner, mid, c)
        k = len(f)
        for t in range(1, k, 2):
            faces.append([f[t], f[(t + 1) % k], f[(t + 2) % k], cid])
    return Mesh(verts, faces)


def perturbed_subdivided_cube(seed=0, amplitude=0.05) -> Mesh:
    """Asymmetric planar-faced variant of :func:`subdivided_cube`.

    Edge-midpoint vertices slide along their edges and face centers move
    inside their face planes, so every face stays exactly planar while the
    grid symmetry is destroyed.
    """
    rng = np.random.default_rng(seed)
    base = cube()
    mesh = subdivided_cube()
    v = mesh.vertices.copy()
    # vertices 8..19 are edge midpoints of the unit cube: slide along edge
    edges = [tuple(e) for e in base.edges()]
    for i, (a, b) in enumerate(edges):
        d = base.vertices[b] - base.vertices[a]
        v[8 + i] += amplitude * rng.uniform(-1, 1) * d
    # vertices 20.. are face centers: move within the (axis-aligned) face
    for i, f in enumerate(base.faces):
        fc = base.vertices[list(f)]
        span = fc.max(axis=0) - fc.min(axis=0)  # zero along the face normal
        v[20 + i] += amplitude * rng.uniform(-1, 1, size=3) * span
    return Mesh(v, mesh.faces, validate=False)


CORPUS = {
    "cube": cube,
    "grid5": lambda: quad_grid(5, 5),
    "hex_strip": lambda: hex_strip(4),
    "hex_flower": hex_flower,
    "hex_prism": hex_prism,
    "subdivided_cube": subdivided_cube,
}
