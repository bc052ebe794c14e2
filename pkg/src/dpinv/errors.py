"""Exception types shared across the package.

Two failure families matter to callers: bad input data (graphs that are not
strongly connected, malformed files, invalid indices) and numerical failures
(iterations that do not converge, singular systems). The CLI maps them to
distinct exit codes.
"""


class DpinvError(Exception):
    """Base class for all package-specific errors."""


class InputError(DpinvError):
    """Invalid input data: bad graph, bad file, bad index set."""


class NumericalError(DpinvError):
    """A numerical procedure failed: no convergence, singularity, NaN."""


class RankDeficiencyError(NumericalError):
    """Orthogonalization found a numerically dependent column."""

    def __init__(self, column: int, norm: float):
        self.column = column
        self.norm = norm
        super().__init__(
            f"column {column} is numerically dependent (residual norm {norm:.3e})"
        )


class NoRealEigenvalueError(NumericalError):
    """An ordered Schur step found no real eigenvalue to promote."""


class GmresNonConvergenceError(NumericalError):
    """Restarted GMRES hit its outer-iteration cap. Carries the partial report."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class MissingColumnsError(DpinvError):
    """A metric needed pseudo-inverse entries outside the computed column set."""
