"""Delta ultrafunctions, independent point sets and the Sigma (dual) basis.

``delta_at(space, q)`` is the Riesz representer of point evaluation at ``q``:
the unique element with ``(v, delta_q) = v(q)`` for every ``v`` in the space.
Given ``n = dim`` points at which the basis evaluation matrix ``E`` is
invertible, the Sigma basis is the interpolation basis ``sigma_a(b) = [a == b]``
and is biorthogonal to the deltas under the L2 pairing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ArityError, DegenerateCandidatesError, IndependenceError, UnsupportedFamilyError
from .function_space import FunctionSpace, Ultrafunction

COND_MAX = 1e8
TOL_BI = 1e-8


def delta_at(space: FunctionSpace, q) -> Ultrafunction:
    """Delta ultrafunction centred at `q` (zero on Dirichlet faces)."""
    e_q = space.basis_values(q)[0]
    return Ultrafunction(space, space.solve_gram(e_q))


def evaluation_matrix(space: FunctionSpace, points) -> np.ndarray:
    """``E[i, j] = e_j(q_i)``."""
    return space.basis_values(points)


def default_candidates(space: FunctionSpace) -> np.ndarray:
    return space.quadrature.nodes


def select_independent_points(space: FunctionSpace, candidates=None, cond_max=COND_MAX) -> np.ndarray:
    """Pick ``dim`` candidates with a well-conditioned evaluation matrix.

    Column-pivoted QR on ``E^T`` ranks the candidates; the first ``dim`` pivots
    are returned in their original candidate order.
    """
    cand = default_candidates(space) if candidates is None else space.as_points(candidates)
    n = space.dim
    if cand.shape[0] < n:
        raise DegenerateCandidatesError(f"need at least {n} candidates, got {cand.shape[0]}")
    E = evaluation_matrix(space, cand)
    _, _, piv = sla.qr(E.T, mode="economic", pivoting=True)
    chosen = np.sort(piv[:n])
    sub = E[chosen]
    cond = np.linalg.cond(sub)
    if not np.isfinite(cond) or cond > cond_max:
        raise DegenerateCandidatesError(f"best candidate subset has condition number {cond:.3e} > {cond_max:.1e}")
    pts = cand[chosen]
    return pts[:, 0] if space.ndim == 1 else pts


@dataclass(frozen=True, eq=False)
class DualBasisPair:
    """Delta basis at `points` and its Sigma dual.

    ``delta_coeffs[:, a]`` and ``sigma_coeffs[:, a]`` hold the coefficient
    vectors of ``delta_a`` and ``sigma_a``.
    """

    space: FunctionSpace
    points: np.ndarray
    delta_coeffs: np.ndarray = field(repr=False)
    sigma_coeffs: np.ndarray = field(repr=False)

    @property
    def delta(self) -> list:
        return [Ultrafunction(self.space, c) for c in self.delta_coeffs.T]

    @property
    def sigma(self) -> list:
        return [Ultrafunction(self.space, c) for c in self.sigma_coeffs.T]

    def biorthogonality(self) -> np.ndarray:
        """``B[a, b] = integral of delta_a sigma_b``."""
        return self.delta_coeffs.T @ self.space.gram @ self.sigma_coeffs

    def sigma_at_points(self) -> np.ndarray:
        """``S[a, b] = sigma_a(b)``."""
        return (evaluation_matrix(self.space, self.points) @ self.sigma_coeffs).T

    def sigma_at(self, q) -> Ultrafunction:
        """sigma_q for q in the point set; other points are not supported."""
        pts = self.space.as_points(self.points)
        hit = np.flatnonzero(np.all(np.isclose(pts, self.space.as_points(q)[0], rtol=0, atol=1e-12), axis=1))
        if hit.size == 0:
            raise UnsupportedFamilyError("sigma_q is only defined for q in the independent point set")
        return Ultrafunction(self.space, self.sigma_coeffs[:, hit[0]])


def dual_bases(space: FunctionSpace, points, cond_max=COND_MAX) -> DualBasisPair:
    pts = space.as_points(points)
    if pts.shape[0] != space.dim:
        raise IndependenceError(f"need exactly {space.dim} points, got {pts.shape[0]}")
    E = evaluation_matrix(space, pts)
    cond = np.linalg.cond(E)
    if not np.isfinite(cond) or cond > cond_max:
        raise IndependenceError(f"evaluation matrix is singular (cond {cond:.3e})")
    deltas = space.solve_gram(E.T)
    # E S = I gives sigma_a(b) = delta_ab; one LU factorization
    sigmas = sla.lu_solve(sla.lu_factor(E), np.eye(space.dim))
    for arr in (deltas, sigmas):
        arr.setflags(write=False)
    keep = pts[:, 0] if space.ndim == 1 else pts
    return DualBasisPair(space, keep, deltas, sigmas)


def interpolate(pair: DualBasisPair, samples) -> Ultrafunction:
    """``u = sum_q samples[q] sigma_q``."""
    s = np.asarray(samples, dtype=float).ravel()
    if s.size != pair.space.dim:
        raise ArityError(f"expected {pair.space.dim} samples, got {s.size}")
    return Ultrafunction(pair.space, pair.sigma_coeffs @ s)


def dual_expansion(pair: DualBasisPair, u: Ultrafunction) -> Ultrafunction:
    """``sum_q (integral of sigma_q u) delta_q``; reproduces u."""
    weights = pair.sigma_coeffs.T @ pair.space.gram @ u.coeffs
    return Ultrafunction(pair.space, pair.delta_coeffs @ weights)
