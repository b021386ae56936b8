"""Projected linear operators and the extension of nonlinear ones.

Every operator ``L`` is represented by the matrix ``mat`` acting on
coefficients, defined through its bilinear form ``M[i, j] = (L e_j, e_i)`` as
``mat = G^{-1} M``.  So ``L u`` is the L2 projection of the classical ``L u``
back onto the space.

Sign convention: the Laplacian is assembled as an operator, not as a positive
form, so on ``fourier_sine`` over ``(0, pi)`` its eigenvalues are ``-k^2``.
With that convention ``laplacian u = delta_q`` gives ``u < 0`` near ``q``.

Only families whose boundary bracket ``[u v]_a^b`` vanishes are shipped
(Dirichlet sine/hats and periodic Fourier), so integration by parts needs no
boundary closure.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, SpaceMismatchError, UnsupportedFamilyError
from .function_space import FunctionSpace, Ultrafunction


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    space: FunctionSpace
    mat: np.ndarray = field(repr=False)
    symmetric: bool = False
    bilinear: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        mat = np.array(self.mat, dtype=float)
        if mat.shape != (self.space.dim, self.space.dim):
            raise SpaceMismatchError("operator matrix does not match the space dimension")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        if self.bilinear is None:
            b = self.space.gram @ mat
            b.setflags(write=False)
            object.__setattr__(self, "bilinear", b)

    def apply(self, u: Ultrafunction) -> Ultrafunction:
        if not self.space.same_as(u.space):
            raise SpaceMismatchError("operator and ultrafunction live on different spaces")
        return Ultrafunction(self.space, self.mat @ u.coeffs)

    __call__ = apply

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.space, self.mat @ other.mat)
        return self.apply(other)

    def __add__(self, other):
        return _from_bilinear(self.space, self.bilinear + other.bilinear)

    def scaled(self, alpha) -> "OperatorMatrix":
        return _from_bilinear(self.space, alpha * self.bilinear)

    def shifted(self, c) -> "OperatorMatrix":
        """``L + c I``."""
        return _from_bilinear(self.space, self.bilinear + c * self.space.gram)


def _is_symmetric(m) -> bool:
    scale = max(float(np.abs(m).max()), 1.0)
    return bool(np.allclose(m, m.T, rtol=0, atol=1e-9 * scale))


def _from_bilinear(space, M, symmetric=None) -> OperatorMatrix:
    sym = _is_symmetric(M) if symmetric is None else symmetric
    return OperatorMatrix(space, space.solve_gram(M), sym, M)


def identity(space: FunctionSpace) -> OperatorMatrix:
    return OperatorMatrix(space, np.eye(space.dim), True, space.gram)


def derivative_matrix(space: FunctionSpace, axis: int = 0) -> OperatorMatrix:
    """Generalized derivative along `axis`: ``(D u, v) = (du/dx_axis, v)``."""
    if not 0 <= axis < space.ndim:
        raise UnsupportedFamilyError(f"axis {axis} out of range for a {space.ndim}-D space")
    alpha = tuple(int(i == axis) for i in range(space.ndim))
    zero = (0,) * space.ndim
    return _from_bilinear(space, space.kron_moment(alpha, zero))


@dataclass(frozen=True)
class SecondOrderCoeffs:
    """``L u = sum a_ij d_i d_j u + sum b_i d_i u + c u``.

    Each entry is a number or a callback ``f(*coords)``; ``None`` means zero.
    """

    a: Sequence = None
    b: Sequence = None
    c: object = None

    @classmethod
    def laplacian(cls, ndim):
        return cls(a=[[1.0 if i == j else 0.0 for j in range(ndim)] for i in range(ndim)])


def _bilinear_term(space, coef, alpha, beta):
    """``M[i, j] = integral of coef * D^alpha e_j * D^beta e_i``."""
    if isinstance(coef, numbers.Number):
        return float(coef) * space.kron_moment(alpha, beta)
    # variable coefficient: dense assembly on the full quadrature grid
    vals = space.call_on_grid(coef).ravel() * space.quadrature.weights
    nodes = space.quadrature.nodes
    return space.basis_values(nodes, beta).T @ (vals[:, None] * space.basis_values(nodes, alpha))


def _is_zero(coef) -> bool:
    return coef is None or (isinstance(coef, numbers.Number) and coef == 0)


def second_order_matrix(space: FunctionSpace, coeffs: SecondOrderCoeffs, form: str = "weak") -> OperatorMatrix:
    """Assemble ``L`` in strong or weak form.

    ``strong`` integrates ``(L e_j) e_i`` directly and needs second derivatives
    (Fourier families only).  ``weak`` moves one derivative of each
    ``a_ij`` term onto the test function, i.e. it assembles the divergence-form
    operator ``d_i (a_ij d_j u)``; for constant ``a`` the two coincide.
    """
    if form not in ("strong", "weak"):
        raise UnsupportedFamilyError(f"unknown form {form!r}")
    d = space.ndim
    unit = [tuple(int(i == k) for i in range(d)) for k in range(d)]
    zero = (0,) * d
    M = np.zeros((space.dim, space.dim))
    a = coeffs.a or []
    for i, row in enumerate(a):
        for j, aij in enumerate(row):
            if _is_zero(aij):
                continue
            if form == "strong":
                alpha = tuple(unit[i][k] + unit[j][k] for k in range(d))
                M += _bilinear_term(space, aij, alpha, zero)
            else:
                M -= _bilinear_term(space, aij, unit[j], unit[i])
    for i, bi in enumerate(coeffs.b or []):
        if not _is_zero(bi):
            M += _bilinear_term(space, bi, unit[i], zero)
    if not _is_zero(coeffs.c):
        M += _bilinear_term(space, coeffs.c, zero, zero)
    return _from_bilinear(space, M)


def laplacian(space: FunctionSpace, form: str = "weak") -> OperatorMatrix:
    return second_order_matrix(space, SecondOrderCoeffs.laplacian(space.ndim), form)


def wave_operator(space: FunctionSpace, form: str = "weak") -> OperatorMatrix:
    """``d_t^2 - d_x^2`` with t the first axis."""
    if space.ndim != 2:
        raise UnsupportedFamilyError("the wave operator needs a (t, x) rectangle")
    return second_order_matrix(space, SecondOrderCoeffs(a=[[1.0, 0.0], [0.0, -1.0]]), form)


def extend_apply(space: FunctionSpace, A: Callable, u: Ultrafunction) -> Ultrafunction:
    """Projection of ``A(u)`` onto the space.

    `A` is called as ``A(coords, u, grad)`` with the quadrature-grid node
    coordinates (tuple), the values of u and the tuple of its partial
    derivatives there.
    """
    if not space.same_as(u.space):
        raise SpaceMismatchError("ultrafunction does not belong to the space")
    vals = space.grid_eval(u.coeffs)
    grad = space.grid_gradient(u.coeffs)
    out = np.broadcast_to(np.asarray(A(space.grid_coords(), vals, grad), dtype=float), vals.shape)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("A(u) is not finite at some quadrature node")
    return Ultrafunction(space, space.solve_gram(space.grid_load(out)))
