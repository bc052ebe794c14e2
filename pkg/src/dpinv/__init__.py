"""Sparse stationary distributions, Laplacian pseudo-inverses, and
random-walk metrics for strongly connected digraphs."""

from ._kernels import active_backend
from .errors import (DpinvError, GmresNonConvergenceError, InputError,
                     MissingColumnsError, NoRealEigenvalueError,
                     NumericalError, RankDeficiencyError)
from .graphgen import GenConfig, preferential_attachment_digraph, random_graph
from .krylov import (GmresConfig, LinearOperator, RankOneShiftedOperator,
                     SolveReport, gmres_restarted)
from .laplacian import (EulerianSystem, GeneralLaplacian, build_laplacian,
                        check_eulerian, check_properties, embed_mmatrix,
                        eulerian_system, general_laplacian, general_pinv,
                        pinv_apply, pinv_column, pinv_columns,
                        pinv_from_reduced, pinv_from_reduced_general,
                        pinv_rank1_general, reduced_from_pinv_general,
                        reduced_inverse_from_pinv)
from .metrics import (PinvBlock, augment_evaporating, commute_time,
                      hitting_time, influence_scores, kemeny_constant,
                      pass_probability, trust_score, visits, visits_matrix)
from .sparse import (Digraph, MvCounter, SparseMatrix, build_transition,
                     is_strongly_connected, matvec, matvec_transpose,
                     strong_connectivity_certificate)
from .stationary import (StationaryResult, SubspaceConfig,
                         stationary_distribution, stationary_residual)

__version__ = "0.1.0"

__all__ = [
    "DpinvError", "InputError", "NumericalError", "RankDeficiencyError",
    "NoRealEigenvalueError", "GmresNonConvergenceError", "MissingColumnsError",
    "SparseMatrix", "Digraph", "MvCounter", "matvec", "matvec_transpose",
    "build_transition", "is_strongly_connected",
    "strong_connectivity_certificate",
    "GenConfig", "preferential_attachment_digraph", "random_graph",
    "LinearOperator", "RankOneShiftedOperator", "GmresConfig", "SolveReport",
    "gmres_restarted",
    "SubspaceConfig", "StationaryResult", "stationary_distribution",
    "stationary_residual",
    "build_laplacian", "check_eulerian", "EulerianSystem", "eulerian_system",
    "pinv_apply", "pinv_column", "pinv_columns",
    "reduced_inverse_from_pinv", "pinv_from_reduced", "pinv_rank1_general",
    "reduced_from_pinv_general", "pinv_from_reduced_general",
    "GeneralLaplacian", "general_laplacian", "general_pinv",
    "check_properties", "embed_mmatrix",
    "PinvBlock", "hitting_time", "commute_time", "visits", "visits_matrix",
    "pass_probability", "kemeny_constant", "augment_evaporating",
    "influence_scores", "trust_score",
    "active_backend",
]
