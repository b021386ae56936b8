"""Linear generalized problems ``L u = f``.

All decisions about singularity are taken in G-orthonormal coordinates
(``c^ = R c`` with ``G = R^T R``), so singular values and kernel vectors are
measured in the L2 norm of the space rather than in raw coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import NumericError, PreconditionError, ResonanceError, SingularSpectrumError, SpaceMismatchError
from .function_space import BasisFamily, Domain, FunctionSpace, Ultrafunction, build_space, integrate_against
from .operators import OperatorMatrix

TOL_SING = 1e-10
TOL_RES = 1e-8


@dataclass(frozen=True, eq=False)
class FredholmOutcome:
    """Either ``kind == "unique"`` with `u`, or ``"singular"`` with a kernel."""

    kind: str
    u: Optional[Ultrafunction] = None
    kernel: list = field(default_factory=list)
    particular: Optional[Ultrafunction] = None
    compatible: bool = True
    residual: float = 0.0
    singular_values: np.ndarray = field(default=None, repr=False)

    @property
    def unique(self) -> bool:
        return self.kind == "unique"


class FredholmSolver:
    """SVD of ``L`` in orthonormal coordinates, reusable across right-hand sides."""

    def __init__(self, L: OperatorMatrix, tol: float = TOL_SING):
        if not np.all(np.isfinite(L.mat)):
            raise NumericError("operator matrix has non-finite entries")
        self.L = L
        self.space = L.space
        self.tol = tol
        self._R = L.space.cholesky_upper
        Lhat = self._R @ sla.solve_triangular(self._R, L.mat.T, trans="T", lower=False).T
        # Lhat = R L R^{-1}
        self._U, self._s, self._Vt = np.linalg.svd(Lhat)
        smax = self._s[0] if self._s.size else 0.0
        self.rank = int(np.sum(self._s > tol * smax)) if smax > 0 else 0

    @property
    def singular_values(self) -> np.ndarray:
        return self._s

    def _to_coeffs(self, chat):
        return sla.solve_triangular(self._R, chat, lower=False)

    def kernel(self) -> list:
        return [Ultrafunction(self.space, self._to_coeffs(v)) for v in self._Vt[self.rank :]]

    def solve(self, f: Ultrafunction, rtol: float = TOL_RES) -> FredholmOutcome:
        if not self.space.same_as(f.space):
            raise SpaceMismatchError("operator and right-hand side live on different spaces")
        fhat = self._R @ f.coeffs
        r = self.rank
        chat = self._Vt[:r].T @ ((self._U[:, :r].T @ fhat) / self._s[:r])
        res = float(np.linalg.norm(self._U @ (self._s * (self._Vt @ chat)) - fhat))
        sol = Ultrafunction(self.space, self._to_coeffs(chat))
        if r == self.space.dim:
            return FredholmOutcome("unique", u=sol, residual=res, singular_values=self._s)
        compatible = res < rtol * (1.0 + float(np.linalg.norm(fhat)))
        return FredholmOutcome(
            "singular",
            kernel=self.kernel(),
            particular=sol if compatible else None,
            compatible=compatible,
            residual=res,
            singular_values=self._s,
        )


def solve_fredholm(L: OperatorMatrix, f: Ultrafunction, tol: float = TOL_SING) -> FredholmOutcome:
    """Fredholm alternative for ``L u = f``.

    Unique when the smallest singular value exceeds ``tol`` times the largest;
    otherwise returns a G-orthonormal kernel basis and, when ``f`` is in the
    range, the minimum-norm particular solution.
    """
    return FredholmSolver(L, tol).solve(f)


@dataclass(frozen=True, eq=False)
class Spectrum:
    space: FunctionSpace
    eigenvalues: np.ndarray
    vectors: np.ndarray = field(repr=False)

    @property
    def eigenfunctions(self) -> list:
        return [Ultrafunction(self.space, v) for v in self.vectors.T]


def spectral_decompose(L: OperatorMatrix) -> Spectrum:
    """Generalized eigendecomposition ``M v = mu G v``, ascending, G-orthonormal."""
    if not L.symmetric:
        raise PreconditionError("spectral decomposition needs a symmetric operator")
    M = 0.5 * (L.bilinear + L.bilinear.T)
    mu, V = sla.eigh(M, L.space.gram)
    return Spectrum(L.space, mu, V)


def solve_spectral(spec: Spectrum, f: Ultrafunction, tol: float = TOL_SING) -> Ultrafunction:
    """``u = sum_j (f, e_j) / mu_j e_j``."""
    if not spec.space.same_as(f.space):
        raise SpaceMismatchError("spectrum and right-hand side live on different spaces")
    mu = spec.eigenvalues
    scale = float(np.abs(mu).max()) if mu.size else 0.0
    small = np.flatnonzero(np.abs(mu) <= tol * scale)
    if small.size:
        j = int(small[0])
        raise SingularSpectrumError(j, float(mu[j]))
    proj = spec.vectors.T @ (spec.space.gram @ f.coeffs)
    return Ultrafunction(spec.space, spec.vectors @ (proj / mu))


# ---------------------------------------------------------------------------
# Time-periodic D'Alembert problem
# ---------------------------------------------------------------------------


def wave_space(length: float, kappa1: int, kappa2: int) -> FunctionSpace:
    """``(0, 2 pi) x (0, length)``, periodic in t, Dirichlet in x."""
    dom = Domain.rectangle(0.0, 2 * math.pi, 0.0, length, "periodic_in_x_dirichlet_in_y")
    return build_space(dom, BasisFamily.tensor("fourier_periodic", "fourier_sine"), (kappa1, kappa2))


def wave_denominators(length: float, kappa1: int, kappa2: int) -> np.ndarray:
    """``den[k, l - 1] = (l pi / length)^2 - k^2`` for k = 0..kappa1, l = 1..kappa2."""
    k = np.arange(kappa1 + 1)[:, None]
    l = np.arange(1, kappa2 + 1)[None, :]
    return (l * math.pi / length) ** 2 - k**2


def _mode_index(kappa1: int) -> np.ndarray:
    """Temporal frequency k of each periodic basis slot (1, cos k, sin k, ...)."""
    return np.concatenate([[0], np.repeat(np.arange(1, kappa1 + 1), 2)])


@dataclass(frozen=True, eq=False)
class WaveSolution:
    u: Ultrafunction
    report: dict


def solve_wave_periodic(length: float, levels, f: Callable, tol: float = TOL_SING) -> WaveSolution:
    """Periodic-in-time solution of ``u_tt - u_xx = f`` by modal division.

    ``f(t, x)`` is projected onto ``{1, cos kt, sin kt} x {sin(l pi x / L)}``
    and each coefficient divided by ``(l pi / L)^2 - k^2``.  The real pair
    ``cos kt, sin kt`` carries the same denominator as ``exp(+-ikt)``.
    """
    kappa1, kappa2 = (int(v) for v in levels)
    den = wave_denominators(length, kappa1, kappa2)
    scale = float(np.abs(den).max())
    bad = np.argwhere(np.abs(den) <= tol * scale)
    if bad.size:
        k, l0 = (int(v) for v in bad[0])
        raise ResonanceError(k, l0 + 1, float(den[k, l0]))
    space = wave_space(length, kappa1, kappa2)
    fc = space.solve_gram(integrate_against(space, f)).reshape(space.shape)
    full_den = den[_mode_index(kappa1)]
    uc = fc / full_den
    order = np.argsort(np.abs(den), axis=None, kind="stable")[:5]
    smallest = []
    for flat in order:
        k, l0 = np.unravel_index(flat, den.shape)
        smallest.append({"k": int(k), "l": int(l0) + 1, "denominator": float(den[k, l0])})
    k_peak, l_peak = np.unravel_index(int(np.argmax(np.abs(uc))), uc.shape)
    report = {
        "length": float(length),
        "kappa1": kappa1,
        "kappa2": kappa2,
        "min_abs_denominator": float(np.abs(den).min()),
        "smallest_denominators": smallest,
        "peak_mode": {
            "k": int(_mode_index(kappa1)[k_peak]),
            "l": int(l_peak) + 1,
            "basis": _slot_name(int(k_peak)),
            "coefficient": float(uc[k_peak, l_peak]),
            "rhs_coefficient": float(fc[k_peak, l_peak]),
        },
        "basis_mapping": "real pairs cos(k t), sin(k t) stand for exp(+ik t), exp(-ik t); "
        "coefficients are in the unnormalized basis cos(k t) sin(l pi x / L)",
    }
    return WaveSolution(Ultrafunction(space, uc.ravel()), report)


def _slot_name(slot: int) -> str:
    if slot == 0:
        return "1"
    k = (slot + 1) // 2
    return f"cos({k}t)" if slot % 2 else f"sin({k}t)"
