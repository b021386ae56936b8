"""Finite-level function spaces, their quadrature, and ultrafunctions.

A space is always a tensor product of one-dimensional factors (a 1D space is
the one-factor case).  Each factor is one of three families:

``fourier_sine``
    ``sin(k pi (x - a) / (b - a))``, ``k = 1..level``; vanishes at both ends.
``fourier_periodic``
    ``1, cos(k w (x - a)), sin(k w (x - a))``, ``w = 2 pi / (b - a)``,
    ``k = 1..level``; dimension ``2 level + 1``.
``pw_linear_hat``
    hat functions on the ``2 level`` uniform cells of ``[a, b]``, one per
    interior node; dimension ``2 level - 1``.

Coefficients of a tensor space are ordered x-major, matching
``numpy.kron(G_x, G_y)``.

Callbacks that return a scalar field receive one coordinate array per axis,
``f(x)`` in 1D and ``f(x, y)`` in 2D, and must broadcast elementwise.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConfigurationError,
    DomainError,
    EvaluationError,
    IllConditionedBasisError,
    SpaceMismatchError,
    UnsupportedFamilyError,
)

FAMILIES = ("fourier_sine", "fourier_periodic", "pw_linear_hat")
BOUNDARY_CONDITIONS = ("dirichlet", "periodic", "periodic_in_x_dirichlet_in_y")

TOL_QUAD = 1e-10
_KINDS = {1: "interval_1d", 2: "rectangle_2d", 3: "box_3d"}

# Gauss-Legendre points per panel for the sine family; exact to round-off for
# every product e_i e_j with level + 2 panels (checked up to level 256).
_SINE_PANEL_POINTS = 8
# Hat cells: ceil((2 * degree + p_max) / 2) + 2 points with degree 1, p_max 4.
_HAT_CELL_POINTS = math.ceil((2 * 1 + 4) / 2) + 2


def composite_gauss(a, b, panels, points):
    """Composite Gauss-Legendre rule with `panels` equal panels on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(points)
    edges = np.linspace(a, b, panels + 1)
    half = (b - a) / panels / 2.0
    nodes = (edges[:-1, None] + (x[None, :] + 1.0) * half).ravel()
    weights = np.tile(w * half, panels)
    return nodes, weights


# ---------------------------------------------------------------------------
# Domain and basis descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """A product of closed intervals plus a boundary condition.

    ``periodic_in_x_dirichlet_in_y`` means periodic along the first axis and
    Dirichlet along the second (the time-periodic wave problem uses it with
    ``x`` standing for time).
    """

    bounds: tuple
    boundary_condition: str = "dirichlet"

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if not 1 <= len(bounds) <= 3:
            raise ConfigurationError("domain must have 1, 2 or 3 axes")
        for a, b in bounds:
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ConfigurationError(f"invalid interval ({a}, {b})")
        if self.boundary_condition not in BOUNDARY_CONDITIONS:
            raise ConfigurationError(f"unknown boundary condition {self.boundary_condition!r}")
        if self.boundary_condition == "periodic_in_x_dirichlet_in_y" and len(bounds) != 2:
            raise ConfigurationError("periodic_in_x_dirichlet_in_y requires a rectangle")

    @classmethod
    def interval(cls, a, b, boundary_condition="dirichlet"):
        return cls(((a, b),), boundary_condition)

    @classmethod
    def rectangle(cls, ax, bx, ay, by, boundary_condition="dirichlet"):
        return cls(((ax, bx), (ay, by)), boundary_condition)

    @classmethod
    def box(cls, ax, bx, ay, by, az, bz, boundary_condition="dirichlet"):
        return cls(((ax, bx), (ay, by), (az, bz)), boundary_condition)

    @property
    def ndim(self) -> int:
        return len(self.bounds)

    @property
    def kind(self) -> str:
        return _KINDS[self.ndim]

    @property
    def measure(self) -> float:
        return float(np.prod([b - a for a, b in self.bounds]))

    def axis_conditions(self) -> tuple:
        if self.boundary_condition == "periodic_in_x_dirichlet_in_y":
            return ("periodic", "dirichlet")
        return (self.boundary_condition,) * self.ndim

    def contains(self, points, rtol=1e-12) -> np.ndarray:
        pts = np.atleast_2d(points)
        ok = np.ones(pts.shape[0], dtype=bool)
        for ax, (a, b) in enumerate(self.bounds):
            eps = rtol * (b - a)
            ok &= (pts[:, ax] >= a - eps) & (pts[:, ax] <= b + eps)
        return ok

    def on_boundary(self, points, rtol=1e-12) -> np.ndarray:
        """Points on a face where the boundary condition is Dirichlet."""
        pts = np.atleast_2d(points)
        hit = np.zeros(pts.shape[0], dtype=bool)
        for ax, ((a, b), bc) in enumerate(zip(self.bounds, self.axis_conditions())):
            if bc != "dirichlet":
                continue
            eps = rtol * (b - a)
            hit |= (np.abs(pts[:, ax] - a) <= eps) | (np.abs(pts[:, ax] - b) <= eps)
        return hit

    def to_dict(self) -> dict:
        return {"bounds": [list(b) for b in self.bounds], "boundary_condition": self.boundary_condition}


@dataclass(frozen=True)
class BasisFamily:
    """One family name per axis; ``tensor_product`` when more than one."""

    families: tuple

    def __post_init__(self):
        fams = (self.families,) if isinstance(self.families, str) else tuple(self.families)
        for f in fams:
            if f not in FAMILIES:
                raise ConfigurationError(f"unknown basis family {f!r}")
        object.__setattr__(self, "families", fams)

    @classmethod
    def tensor(cls, *families):
        return cls(tuple(families))

    @property
    def name(self) -> str:
        if len(self.families) == 1:
            return self.families[0]
        return "tensor_product(" + ", ".join(self.families) + ")"

    def for_domain(self, domain: Domain) -> "BasisFamily":
        """Broadcast a single family to every axis of `domain`."""
        if len(self.families) == 1 and domain.ndim > 1:
            return BasisFamily(self.families * domain.ndim)
        return self


# ---------------------------------------------------------------------------
# One-dimensional factors
# ---------------------------------------------------------------------------


class _Factor:
    """One axis of a space: family, interval, level."""

    family = ""
    boundary = ""
    max_derivative = 99

    def __init__(self, a, b, level):
        if int(level) != level or level < 1:
            raise ConfigurationError(f"level must be a positive integer, got {level!r}")
        self.a, self.b, self.level = float(a), float(b), int(level)
        self.length = self.b - self.a
        self.nodes, self.weights = self._quadrature()
        self._qvals = {}
        self._moments = {}

    def __eq__(self, other):
        return type(self) is type(other) and (self.a, self.b, self.level) == (other.a, other.b, other.level)

    def __hash__(self):
        return hash((self.family, self.a, self.b, self.level))

    def values(self, x, deriv=0) -> np.ndarray:
        """Matrix ``V[p, j] = e_j^(deriv)(x_p)``."""
        if deriv > self.max_derivative:
            raise UnsupportedFamilyError(f"{self.family}: derivative of order {deriv} not available")
        return self._values(np.asarray(x, dtype=float), deriv)

    def qvals(self, deriv=0) -> np.ndarray:
        if deriv not in self._qvals:
            v = self.values(self.nodes, deriv)
            v.setflags(write=False)
            self._qvals[deriv] = v
        return self._qvals[deriv]

    def moment(self, alpha=0, beta=0) -> np.ndarray:
        """``M[i, j] = integral of e_j^(alpha) * e_i^(beta)``."""
        key = (alpha, beta)
        if key not in self._moments:
            m = self.qvals(beta).T @ (self.weights[:, None] * self.qvals(alpha))
            m.setflags(write=False)
            self._moments[key] = m
        return self._moments[key]

    def dense_rule(self):
        """A much finer rule, used by oracles independent of the working rule."""
        return composite_gauss(self.a, self.b, 4 * self.level + 16, 16)

    def nested_in(self, other) -> bool:
        return type(self) is type(other) and (self.a, self.b) == (other.a, other.b) and other.level >= self.level

    def next_level(self) -> int:
        return self.level + 1


class _SineFactor(_Factor):
    family = "fourier_sine"
    boundary = "dirichlet"

    @property
    def dim(self):
        return self.level

    def _quadrature(self):
        return composite_gauss(self.a, self.b, self.level + 2, _SINE_PANEL_POINTS)

    def _values(self, x, deriv):
        w = np.arange(1, self.level + 1) * (math.pi / self.length)
        arg = np.multiply.outer(x - self.a, w) + deriv * (math.pi / 2)
        return np.sin(arg) * w**deriv


class _PeriodicFactor(_Factor):
    family = "fourier_periodic"
    boundary = "periodic"

    @property
    def dim(self):
        return 2 * self.level + 1

    def _quadrature(self):
        n = 4 * self.level + 8
        nodes = self.a + self.length * np.arange(n) / n
        return nodes, np.full(n, self.length / n)

    def _values(self, x, deriv):
        k = np.arange(1, self.level + 1)
        w = k * (2 * math.pi / self.length)
        arg = np.multiply.outer(x - self.a, w) + deriv * (math.pi / 2)
        out = np.empty(x.shape + (self.dim,))
        out[..., 0] = 1.0 if deriv == 0 else 0.0
        out[..., 1::2] = np.cos(arg) * w**deriv
        out[..., 2::2] = np.sin(arg) * w**deriv
        return out

    def dense_rule(self):
        n = 16 * self.level + 64
        return self.a + self.length * np.arange(n) / n, np.full(n, self.length / n)


class _HatFactor(_Factor):
    family = "pw_linear_hat"
    boundary = "dirichlet"
    max_derivative = 1

    @property
    def dim(self):
        return 2 * self.level - 1

    @property
    def h(self):
        return self.length / (2 * self.level)

    @property
    def grid_nodes(self):
        return self.a + self.h * np.arange(1, 2 * self.level)

    def _quadrature(self):
        return composite_gauss(self.a, self.b, 2 * self.level, _HAT_CELL_POINTS)

    def _values(self, x, deriv):
        t = np.subtract.outer(x, self.grid_nodes) / self.h
        if deriv == 0:
            return np.maximum(0.0, 1.0 - np.abs(t))
        # left slope +1/h, right slope -1/h; value at a kink is the average
        return np.where(np.abs(t) < 1.0, -np.sign(t), 0.0) / self.h

    def dense_rule(self):
        return composite_gauss(self.a, self.b, 8 * self.level, 16)

    def nested_in(self, other):
        return (
            type(self) is type(other)
            and (self.a, self.b) == (other.a, other.b)
            and other.level % self.level == 0
        )

    def next_level(self):
        return 2 * self.level


_FACTORS = {"fourier_sine": _SineFactor, "fourier_periodic": _PeriodicFactor, "pw_linear_hat": _HatFactor}


# ---------------------------------------------------------------------------
# Tensor helpers
# ---------------------------------------------------------------------------


def _row_kron(mats):
    """Row-wise Kronecker product of per-axis (N, n_k) matrices."""
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, :, None] * m[:, None, :]).reshape(out.shape[0], -1)
    return out


def _apply_axes(mats, tensor):
    """``out[a, b, ...] = sum M0[a, i] M1[b, j] ... T[i, j, ...]``."""
    out = tensor
    for ax, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [ax])), 0, ax)
    return out


def kron_all(mats):
    return functools.reduce(np.kron, mats)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Tensor-product rule; `axes` holds one (nodes, weights) pair per axis."""

    axes: tuple

    @property
    def nodes(self) -> np.ndarray:
        grids = np.meshgrid(*[n for n, _ in self.axes], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @property
    def weights(self) -> np.ndarray:
        return kron_all([w for _, w in self.axes])

    @property
    def shape(self) -> tuple:
        return tuple(len(n) for n, _ in self.axes)


# ---------------------------------------------------------------------------
# FunctionSpace
# ---------------------------------------------------------------------------


class FunctionSpace:
    """Finite-dimensional space spanned by a tensor-product basis.

    Immutable after construction.  Use :func:`build_space` to create one.
    """

    def __init__(self, domain: Domain, basis: BasisFamily, level):
        basis = basis.for_domain(domain)
        if len(basis.families) != domain.ndim:
            raise ConfigurationError(
                f"basis {basis.name} has {len(basis.families)} factors for a {domain.ndim}-D domain"
            )
        levels = (level,) * domain.ndim if np.ndim(level) == 0 else tuple(level)
        if len(levels) != domain.ndim:
            raise ConfigurationError("one level per axis required")
        factors = []
        for fam, bc, (a, b), lev in zip(basis.families, domain.axis_conditions(), domain.bounds, levels):
            cls = _FACTORS[fam]
            if cls.boundary != bc:
                raise ConfigurationError(f"basis {fam} is incompatible with a {bc} boundary")
            factors.append(cls(a, b, lev))
        self.domain = domain
        self.basis = basis
        self.levels = tuple(int(v) for v in levels)
        self.factors = tuple(factors)
        self.shape = tuple(f.dim for f in factors)
        self.dim = int(np.prod(self.shape))
        self.quadrature = QuadratureRule(tuple((f.nodes, f.weights) for f in factors))
        self.gram = self.kron_moment((0,) * self.ndim, (0,) * self.ndim)
        try:
            self._chol = sla.cho_factor(self.gram, lower=False)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedBasisError(f"Gram matrix of {self} is not positive definite") from exc
        diag = np.diag(self._chol[0])
        if diag.min() <= 1e-7 * diag.max():
            raise IllConditionedBasisError(f"Gram matrix of {self} is numerically singular")
        self.gram.setflags(write=False)

    # -- descriptors ------------------------------------------------------
    @property
    def ndim(self) -> int:
        return self.domain.ndim

    @property
    def level(self):
        return self.levels[0] if self.ndim == 1 else self.levels

    @property
    def family(self) -> str:
        return self.basis.name

    def __repr__(self):
        return f"FunctionSpace({self.domain.kind}, {self.family}, level={self.level}, dim={self.dim})"

    def same_as(self, other) -> bool:
        return self is other or (
            isinstance(other, FunctionSpace) and self.domain == other.domain and self.factors == other.factors
        )

    def describe(self) -> dict:
        return {"domain": self.domain.to_dict(), "basis": self.family, "level": self.level, "dim": self.dim}

    # -- linear algebra ---------------------------------------------------
    def solve_gram(self, rhs) -> np.ndarray:
        """Solve ``G c = rhs``."""
        return sla.cho_solve(self._chol, rhs)

    @property
    def cholesky_upper(self) -> np.ndarray:
        """Upper factor R with ``G = R^T R``."""
        return np.triu(self._chol[0])

    def kron_moment(self, alpha, beta) -> np.ndarray:
        """``M[i, j] = integral of D^alpha e_j * D^beta e_i`` (multi-indices per axis)."""
        return kron_all([f.moment(a, b) for f, a, b in zip(self.factors, alpha, beta)])

    def stiffness(self) -> np.ndarray:
        """``K[i, j] = integral of grad e_j . grad e_i``."""
        total = np.zeros((self.dim, self.dim))
        for ax in range(self.ndim):
            d = tuple(int(i == ax) for i in range(self.ndim))
            total += self.kron_moment(d, d)
        return total

    # -- point evaluation -------------------------------------------------
    def as_points(self, x) -> np.ndarray:
        """Normalize a point or list of points to an (N, ndim) array."""
        pts = np.asarray(x, dtype=float)
        if self.ndim == 1:
            pts = pts.reshape(-1, 1)
        else:
            pts = np.atleast_2d(pts)
            if pts.shape[-1] != self.ndim:
                raise DomainError(f"points must have {self.ndim} coordinates")
        if not np.all(self.domain.contains(pts)):
            raise DomainError(f"point(s) outside the closed domain {self.domain.bounds}")
        return pts

    def basis_values(self, x, deriv=None) -> np.ndarray:
        """``V[p, j] = D^deriv e_j(x_p)``; exact zeros on Dirichlet faces."""
        pts = self.as_points(x)
        deriv = (0,) * self.ndim if deriv is None else tuple(deriv)
        vals = _row_kron([f.values(pts[:, ax], d) for ax, (f, d) in enumerate(zip(self.factors, deriv))])
        if not any(deriv):
            vals[self.domain.on_boundary(pts)] = 0.0
        return vals

    # -- quadrature-grid helpers -----------------------------------------
    def grid_coords(self) -> tuple:
        return tuple(np.meshgrid(*[f.nodes for f in self.factors], indexing="ij"))

    def grid_weights(self) -> np.ndarray:
        w = self.factors[0].weights
        for f in self.factors[1:]:
            w = np.multiply.outer(w, f.weights)
        return w

    def grid_eval(self, coeffs, deriv=None) -> np.ndarray:
        """Values of ``D^deriv u`` on the tensor quadrature grid."""
        deriv = (0,) * self.ndim if deriv is None else deriv
        mats = [f.qvals(d) for f, d in zip(self.factors, deriv)]
        return _apply_axes(mats, np.reshape(coeffs, self.shape))

    def grid_gradient(self, coeffs) -> tuple:
        return tuple(
            self.grid_eval(coeffs, tuple(int(i == ax) for i in range(self.ndim))) for ax in range(self.ndim)
        )

    def grid_load(self, values, deriv=None) -> np.ndarray:
        """``b_j = sum_q w_q values_q D^deriv e_j(x_q)`` for values on the grid."""
        deriv = (0,) * self.ndim if deriv is None else deriv
        mats = [f.qvals(d).T for f, d in zip(self.factors, deriv)]
        return _apply_axes(mats, values * self.grid_weights()).ravel()

    def grid_integral(self, values) -> float:
        return float(np.sum(values * self.grid_weights()))

    def call_on_grid(self, f: Callable) -> np.ndarray:
        vals = np.asarray(f(*self.grid_coords()), dtype=float)
        vals = np.broadcast_to(vals, self.quadrature.shape)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("callback returned non-finite values at quadrature nodes")
        return vals

    # -- nesting ----------------------------------------------------------
    def nested_in(self, other: "FunctionSpace") -> bool:
        """True when every basis function of self is exactly representable in other."""
        return (
            self.domain == other.domain
            and self.basis == other.basis
            and all(a.nested_in(b) for a, b in zip(self.factors, other.factors))
        )

    def refine(self) -> "FunctionSpace":
        """The next nested level (Fourier: level + 1, hats: twice the cells)."""
        levels = tuple(f.next_level() for f in self.factors)
        return FunctionSpace(self.domain, self.basis, levels if self.ndim > 1 else levels[0])

    def zero(self) -> "Ultrafunction":
        return Ultrafunction(self, np.zeros(self.dim))

    def element(self, coeffs) -> "Ultrafunction":
        return Ultrafunction(self, coeffs)

    def basis_function(self, j) -> "Ultrafunction":
        c = np.zeros(self.dim)
        c[j] = 1.0
        return Ultrafunction(self, c)


def build_space(domain: Domain, basis, level) -> FunctionSpace:
    """Assemble the space, its quadrature and its Gram matrix.

    >>> s = build_space(Domain.interval(0, np.pi), BasisFamily("fourier_sine"), 4)
    >>> s.dim, bool(np.allclose(s.gram, np.pi / 2 * np.eye(4)))
    (4, True)
    """
    if not isinstance(basis, BasisFamily):
        basis = BasisFamily(basis)
    return FunctionSpace(domain, basis, level)


# ---------------------------------------------------------------------------
# Ultrafunctions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Ultrafunction:
    """``u(x) = sum_j coeffs[j] e_j(x)`` on `space`."""

    space: FunctionSpace
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.shape != (self.space.dim,):
            raise SpaceMismatchError(f"expected {self.space.dim} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise EvaluationError("ultrafunction coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x):
        return evaluate(self, x)

    def _check(self, other):
        if not self.space.same_as(other.space):
            raise SpaceMismatchError("ultrafunctions live on different spaces")

    def __add__(self, other):
        self._check(other)
        return Ultrafunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return Ultrafunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, alpha):
        return Ultrafunction(self.space, float(alpha) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return Ultrafunction(self.space, -self.coeffs)

    def norm(self) -> float:
        return norm(self)


def evaluate(u: Ultrafunction, x):
    """Point value(s) of `u`; a scalar for a single point."""
    single = np.ndim(x) == 0 if u.space.ndim == 1 else np.ndim(x) == 1
    vals = u.space.basis_values(x) @ u.coeffs
    return float(vals[0]) if single else vals


def inner_product(u: Ultrafunction, v: Ultrafunction) -> float:
    u._check(v)
    return float(u.coeffs @ u.space.gram @ v.coeffs)


def norm(u: Ultrafunction) -> float:
    return math.sqrt(max(inner_product(u, u), 0.0))


def integrate_against(space: FunctionSpace, f: Callable) -> np.ndarray:
    """Load vector ``b_j = integral of f e_j`` by the space's quadrature."""
    return space.grid_load(space.call_on_grid(f))


def uniform_grid(space: FunctionSpace, n: int = 101) -> np.ndarray:
    """Uniform output grid (N, ndim) over the closed domain."""
    axes = [np.linspace(a, b, n) for a, b in space.domain.bounds]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def gram_report(space: FunctionSpace) -> dict:
    eig = np.linalg.eigvalsh(space.gram)
    return {
        **space.describe(),
        "gram_min_eig": float(eig[0]),
        "gram_max_eig": float(eig[-1]),
        "gram_cond": float(eig[-1] / eig[0]),
        "quadrature_points": int(np.prod(space.quadrature.shape)),
    }


def dense_integral(space: FunctionSpace, f: Callable) -> float:
    """Integral of f(*coords) by the dense per-axis rules (oracle use)."""
    rules = [fac.dense_rule() for fac in space.factors]
    coords = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    w = rules[0][1]
    for r in rules[1:]:
        w = np.multiply.outer(w, r[1])
    return float(np.sum(np.asarray(f(*coords)) * w))


__all__ = [
    "Domain",
    "BasisFamily",
    "QuadratureRule",
    "FunctionSpace",
    "Ultrafunction",
    "build_space",
    "evaluate",
    "inner_product",
    "norm",
    "integrate_against",
    "uniform_grid",
    "gram_report",
    "dense_integral",
    "composite_gauss",
    "TOL_QUAD",
]

