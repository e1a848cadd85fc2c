"""Linear subspace engine for polyhedral (planar-faced) meshes."""

from .errors import PMError
from .mesh import Mesh, counts, face_plane, load_mesh, planarity_report, save_mesh
from .subspace import (
    CaseAssignment,
    assemble,
    build_subspace,
    containment_check,
    min_ndof_bound,
    nullspace_basis,
    project,
)

__all__ = [
    "PMError",
    "Mesh",
    "counts",
    "face_plane",
    "load_mesh",
    "save_mesh",
    "planarity_report",
    "CaseAssignment",
    "assemble",
    "build_subspace",
    "nullspace_basis",
    "project",
    "containment_check",
    "min_ndof_bound",
]

__version__ = "0.1.0"
