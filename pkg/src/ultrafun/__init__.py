"""Finite-level function spaces with point-evaluation representers.

A space is spanned by a tensor-product basis (sine, periodic Fourier or
piecewise-linear hats) on an interval, rectangle or box.  On top of it sit
delta and sigma bases, L2 embeddings of functions and truncated
distributions, projected operators, linear and nonlinear solvers, and a set
of worked variational problems.
"""

from importlib.metadata import PackageNotFoundError, version

from .delta_sigma import DualBasisPair, delta_at, dual_bases, interpolate, select_independent_points
from .embeddings import DistributionRep, embed_distribution, embed_function, embed_pointwise, pairing_check
from .errors import UltraError
from .function_space import (
    BasisFamily,
    Domain,
    FunctionSpace,
    Ultrafunction,
    build_space,
    evaluate,
    inner_product,
    norm,
)
from .linear_solve import (
    FredholmSolver,
    solve_fredholm,
    solve_spectral,
    solve_wave_periodic,
    spectral_decompose,
)
from .operators import OperatorMatrix, derivative_matrix, extend_apply, laplacian, second_order_matrix
from .variational import (
    CriticalPointResult,
    FunctionalSpec,
    level_convergence_report,
    minimize,
    mountain_pass,
    solve_nonlinear_continuation,
)

try:
    __version__ = version("ultrafun")
except PackageNotFoundError:  # running from a source tree without metadata
    __version__ = "0.0.0"

__all__ = [
    "BasisFamily",
    "CriticalPointResult",
    "DistributionRep",
    "Domain",
    "DualBasisPair",
    "FredholmSolver",
    "FunctionSpace",
    "FunctionalSpec",
    "OperatorMatrix",
    "Ultrafunction",
    "UltraError",
    "build_space",
    "delta_at",
    "derivative_matrix",
    "dual_bases",
    "embed_distribution",
    "embed_function",
    "embed_pointwise",
    "evaluate",
    "extend_apply",
    "inner_product",
    "interpolate",
    "laplacian",
    "level_convergence_report",
    "minimize",
    "mountain_pass",
    "norm",
    "pairing_check",
    "second_order_matrix",
    "select_independent_points",
    "solve_fredholm",
    "solve_nonlinear_continuation",
    "solve_spectral",
    "solve_wave_periodic",
    "spectral_decompose",
]
