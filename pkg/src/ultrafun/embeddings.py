"""Embedding functions and truncated distributions into a space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .delta_sigma import DualBasisPair
from .errors import ConfigurationError, EvaluationError, UnsupportedFamilyError
from .function_space import FunctionSpace, Ultrafunction, integrate_against
from .operators import derivative_matrix


def embed_function(space: FunctionSpace, f) -> Ultrafunction:
    """L2 projection: the unique ``f~`` with ``(f~, v) = (f, v)`` for all v.

    `f` is a callback ``f(*coords)`` or an :class:`Ultrafunction` (possibly
    on another space, e.g. a coarser nested level).
    """
    if isinstance(f, Ultrafunction):
        f = as_callback(f)
    return Ultrafunction(space, space.solve_gram(integrate_against(space, f)))


def as_callback(u: Ultrafunction) -> Callable:
    """Wrap an ultrafunction as a vectorized ``f(*coords)`` callback."""

    def f(*coords):
        shape = np.shape(coords[0])
        pts = np.stack([np.ravel(c) for c in coords], axis=1)
        return (u.space.basis_values(pts) @ u.coeffs).reshape(shape)

    return f


def embed_pointwise(pair: DualBasisPair, f: Callable) -> Ultrafunction:
    """``sum_a f(a) sigma_a`` over the independent points of `pair`."""
    pts = pair.space.as_points(pair.points)
    vals = np.asarray(f(*pts.T), dtype=float).ravel()
    if vals.size != pair.space.dim or not np.all(np.isfinite(vals)):
        raise EvaluationError("f must be finite at every independent point")
    return Ultrafunction(pair.space, pair.sigma_coeffs @ vals)


@dataclass(frozen=True)
class DistributionRep:
    """``T = sum_k d^k f_k`` truncated at order ``K = max k``.

    `terms` is a sequence of ``(k, f_k)`` pairs with distinct orders.
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((int(k), f) for k, f in self.terms)
        orders = [k for k, _ in terms]
        if any(k < 0 for k in orders) or len(set(orders)) != len(orders):
            raise ConfigurationError("derivative orders must be distinct non-negative integers")
        object.__setattr__(self, "terms", tuple(sorted(terms, key=lambda t: t[0])))

    @property
    def K(self) -> int:
        return max((k for k, _ in self.terms), default=0)


def _require_1d(space):
    if space.ndim != 1:
        raise UnsupportedFamilyError("distributions are supported on 1-D spaces only")


def embed_distribution(space: FunctionSpace, T: DistributionRep) -> Ultrafunction:
    """``T~ = sum_k D^k f_k~`` with D the generalized derivative."""
    _require_1d(space)
    D = derivative_matrix(space).mat
    total = np.zeros(space.dim)
    for k, f in T.terms:
        c = embed_function(space, f).coeffs
        total += np.linalg.matrix_power(D, k) @ c
    return Ultrafunction(space, total)


def pairing_check(space: FunctionSpace, T: DistributionRep, phi: Ultrafunction):
    """Return ``(integral of T~ phi, sum_k (-1)^k integral of f_k d^k phi)``.

    The right-hand side uses analytic derivatives of phi's basis functions and
    the dense oracle quadrature, independent of the space's working rule.
    """
    _require_1d(space)
    lhs = float(embed_distribution(space, T).coeffs @ space.gram @ phi.coeffs)
    factor = space.factors[0]
    x, w = factor.dense_rule()
    rhs = 0.0
    for k, f in T.terms:
        dphi = factor.values(x, k) @ phi.coeffs
        fx = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
        rhs += (-1) ** k * float(np.sum(w * fx * dphi))
    return lhs, rhs
