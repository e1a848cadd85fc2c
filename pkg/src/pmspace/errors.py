"""Exception types shared across the package."""


class PMError(Exception):
    """Base class for all domain errors."""


class MeshError(PMError):
    """Invalid mesh structure (bad indices, degenerate faces, ...)."""


class ParseError(MeshError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonManifoldError(MeshError):
    """An undirected edge is used more than twice or with equal orientation."""

    def __init__(self, edge, message=None):
        self.edge = tuple(edge)
        super().__init__(message or f"non-manifold edge {self.edge}")


class DegenerateFaceError(MeshError):
    """Face with (near) collinear vertices; names the face index."""

    def __init__(self, face_id, message=None):
        self.face_id = face_id
        super().__init__(message or f"degenerate face {face_id}")


class NonPlanarError(PMError):
    """Source faces exceed the planarity tolerance; lists the faces."""

    def __init__(self, faces, errors=None):
        self.faces = list(faces)
        self.errors = errors
        super().__init__(f"faces exceed planarity tolerance: {self.faces}")


class InfeasibleConstraintError(PMError):
    """Hard constraints cannot be met inside the subspace."""

    def __init__(self, residual, message=None):
        self.residual = float(residual)
        super().__init__(
            message or f"infeasible hard constraints (residual {self.residual:.3e})"
        )


class SparseShapeError(PMError):
    """No sparse shape meets the requested support/residual budget."""

    def __init__(self, best_residual, support):
        self.best_residual = float(best_residual)
        self.support = support
        super().__init__(
            f"no sparse shape with support {support} below tolerance; "
            f"best residual {self.best_residual:.3e}"
        )


class DualError(PMError):
    """Polar dual construction or primal reconstruction failed."""

    def __init__(self, message, faces=None, vertices=None, residuals=None):
        self.faces = faces
        self.vertices = vertices
        self.residuals = residuals
        super().__init__(message)
