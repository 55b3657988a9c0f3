"""Exception hierarchy shared by the solver modules and the CLI."""


class IBFSIError(Exception):
    """Base class for all package errors."""


class ConfigError(IBFSIError, ValueError):
    """Invalid configuration, mismatched shapes or inconsistent options."""


class SolverError(IBFSIError, RuntimeError):
    """A linear or time-stepping solve failed."""


class OutOfSupportError(IBFSIError, ValueError):
    """A Lagrangian marker's kernel stencil leaves the grid."""


class DegenerateError(IBFSIError, ValueError):
    """Degenerate geometry: singular Gram matrix, zero inertia, bad normals."""


class CFLError(SolverError):
    """Time step violates the explicit stability limit."""

    def __init__(self, msg, suggested_dt):
        super().__init__(msg)
        self.suggested_dt = suggested_dt
