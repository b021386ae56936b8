"""Worked problems: a membrane loaded by a point mass, a charge in a grounded
box, the non-attained minimum of a double-well gradient energy, and a
p-Laplacian equation solved by continuation.

Sign conventions.  The point load solves ``laplacian u = delta_q``, i.e.
``-K c = e(q)`` with ``K`` the stiffness matrix and ``e(q)`` the basis values
at q.  Testing this against ``u`` gives ``integral |grad u|^2 = -u(q)``, so

* membrane energy ``E = 1/2 integral |grad u|^2 + u(q) = 1/2 u(q) <= 0``;
* electrostatic energy ``E_el = 1/2 integral |grad u|^2 = -1/2 u(q) >= 0``.

Both identities are checked on every solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .delta_sigma import delta_at
from .errors import PreconditionError, SolverError
from .function_space import Domain, FunctionSpace, Ultrafunction, build_space
from .linear_solve import FredholmSolver
from .operators import laplacian
from .sweep import SweepReport, SweepRow
from .variational import (
    ContinuationOptions,
    MinimizeOptions,
    default_starts,
    level_convergence_report,
    minimize,
    plaplace_functional,
    sawtooth_functional,
    solve_nonlinear_continuation,
)

TOL_IDENTITY = 1e-6
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _require_dirichlet(space: FunctionSpace):
    if any(bc != "dirichlet" for bc in space.domain.axis_conditions()):
        raise PreconditionError("point-load problems need Dirichlet conditions on every face")


class PointLoadSolver:
    """Green's-function solves ``laplacian u = delta_q`` on one space."""

    def __init__(self, space: FunctionSpace):
        _require_dirichlet(space)
        self.space = space
        self._solver = FredholmSolver(laplacian(space))
        if self._solver.rank < space.dim:
            raise SolverError("the Laplacian is singular on this space")
        self._K = space.stiffness()

    def solve(self, q) -> Ultrafunction:
        return self._solver.solve(delta_at(self.space, q)).u

    def energies(self, q) -> dict:
        """Membrane and electrostatic energies at q, by both formulas."""
        u = self.solve(q)
        uq = float(self.space.basis_values(q)[0] @ u.coeffs)
        dirichlet = float(u.coeffs @ self._K @ u.coeffs)
        membrane = 0.5 * dirichlet + uq
        electro = 0.5 * dirichlet
        err = max(abs(membrane - 0.5 * uq) / (1 + abs(membrane)), abs(electro + 0.5 * uq) / (1 + abs(electro)))
        if err > TOL_IDENTITY:
            raise SolverError(f"energy identity violated by {err:.3e} at q = {q}")
        return {"u": u, "u_q": uq, "membrane": membrane, "electrostatic": electro, "identity_error": err}


# ---------------------------------------------------------------------------
# Membrane with a material point
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MembraneResult:
    q_star: tuple
    u_star: Ultrafunction
    energy: float
    grid_energies: list = field(default_factory=list)
    energy_by_level: list = field(default_factory=list)
    identity_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "q_star": list(self.q_star),
            "energy": self.energy,
            "grid": [{"q": list(q), "energy": e} for q, e in self.grid_energies],
            "energy_by_level": [{"level": lv, "energy": e} for lv, e in self.energy_by_level],
            "identity_error": self.identity_error,
            "dim": self.u_star.space.dim,
        }


def _golden_min(fun, lo, hi, iters):
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = fun(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _as_point_list(space, q_grid) -> list:
    pts = space.as_points(q_grid)
    return [tuple(float(v) for v in p) for p in pts]


def membrane_equilibrium(space: FunctionSpace, q_grid, refine_iters: int = 20, bracket=None) -> MembraneResult:
    """Minimize ``E(u, q)`` jointly: exact inner solve in u, grid plus
    golden-section polish in q.

    `bracket` is the half-width of the per-coordinate search interval around
    the grid minimizer; by default the grid spacing along each axis (or a
    tenth of the side for a single-point grid).
    """
    grid = _as_point_list(space, q_grid)
    if not grid:
        raise PreconditionError("q_grid is empty")
    inside = ~space.domain.on_boundary(np.array(grid))
    solver = PointLoadSolver(space)
    results = [solver.energies(q) for q in grid]
    grid_energies = [(q, r["membrane"]) for q, r in zip(grid, results)]
    worst = max(r["identity_error"] for r in results)
    best = int(np.argmin([e for _, e in grid_energies]))
    q = list(grid[best])
    energy = grid_energies[best][1]
    if refine_iters > 0 and inside[best]:
        pts = np.array(grid)
        for ax, (a, b) in enumerate(space.domain.bounds):
            if bracket is not None:
                half = float(bracket)
            else:
                coords = np.unique(pts[:, ax])
                half = float(np.min(np.diff(coords))) if coords.size > 1 else 0.1 * (b - a)
            lo, hi = max(a, q[ax] - half), min(b, q[ax] + half)

            def along(t, ax=ax):
                p = list(q)
                p[ax] = t
                return solver.energies(tuple(p))["membrane"]

            t, e = _golden_min(along, lo, hi, refine_iters)
            if e < energy:
                q[ax], energy = t, e
    final = solver.energies(tuple(q))
    return MembraneResult(
        tuple(q), final["u"], final["membrane"], grid_energies, [], max(worst, final["identity_error"])
    )


def membrane_center_sweep(domain: Domain, basis, levels, q=None) -> SweepReport:
    """Membrane energy at a fixed point (default: the centre) across levels.

    The energy of a point load has no finite limit in two or more dimensions;
    the report's trend fit exposes the ``c1 - c2 log n`` growth.
    """
    q = tuple(0.5 * (a + b) for a, b in domain.bounds) if q is None else tuple(q)
    rows = []
    for lv in levels:
        sp = build_space(domain, basis, lv)
        e = PointLoadSolver(sp).energies(q)
        rows.append(SweepRow(int(lv), sp.dim, e["membrane"], e["identity_error"], None))
    report = SweepReport.build(rows, verdict="diverging" if _strictly_decreasing([r.value for r in rows]) else "oscillating")
    report.meta.update({"problem": "membrane", "q": list(q), "basis": sp.family})
    report.meta["log_fit"] = next((c for c in report.trend.get("candidates", []) if c["kind"] == "log"), None)
    return report


def _strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# Charged particle in a grounded box
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChargeProfile:
    grid: list
    energies: list
    argmin: tuple
    on_boundary: list = field(default_factory=list)
    near_boundary: list = field(default_factory=list)
    identity_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "grid": [list(q) for q in self.grid],
            "energies": list(self.energies),
            "argmin": list(self.argmin),
            "on_boundary": list(self.on_boundary),
            "near_boundary": self.near_boundary,
            "identity_error": self.identity_error,
        }


def resolution_scale(space: FunctionSpace) -> float:
    """Smallest feature size resolved by the basis along any axis."""
    scales = []
    for f in space.factors:
        length = f.b - f.a
        if hasattr(f, "h"):
            scales.append(f.h)
        else:
            scales.append(length / (f.level + 1))
    return min(scales)


def charged_particle_profile(space: FunctionSpace, q_grid, probe_axis: int = 0) -> ChargeProfile:
    """Electrostatic energy ``E_el(q)`` over `q_grid`, plus a near-wall probe.

    The probe moves from the wall ``x_axis = a`` towards the centre at
    distances ``h, 2h, 4h`` (h = :func:`resolution_scale`) with the other
    coordinates at the centre; it is reported for inspection only.
    """
    grid = _as_point_list(space, q_grid)
    if not grid:
        raise PreconditionError("q_grid is empty")
    solver = PointLoadSolver(space)
    results = [solver.energies(q) for q in grid]
    energies = [r["electrostatic"] for r in results]
    bnd = [bool(b) for b in space.domain.on_boundary(np.array(grid))]
    best = int(np.argmin(energies))
    h = resolution_scale(space)
    centre = [0.5 * (a + b) for a, b in space.domain.bounds]
    near = []
    a = space.domain.bounds[probe_axis][0]
    for mult in (1, 2, 4):
        p = list(centre)
        p[probe_axis] = a + mult * h
        e = solver.energies(tuple(p))
        near.append({"distance": mult * h, "q": p, "energy": e["electrostatic"]})
    return ChargeProfile(
        grid, energies, grid[best], bnd, near, max(r["identity_error"] for r in results)
    )


def square_grid(n: int, bounds=((0.0, 1.0), (0.0, 1.0))) -> np.ndarray:
    """``n x n`` grid including the boundary, in row-major order."""
    axes = [np.linspace(a, b, n) for a, b in bounds]
    gx, gy = np.meshgrid(*axes, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


# ---------------------------------------------------------------------------
# Double-well gradient energy
# ---------------------------------------------------------------------------


def sawtooth_start(space: FunctionSpace) -> Ultrafunction:
    """Nodal sawtooth with slopes +-1: zero at even nodes, ``h`` at odd ones.

    Its energy under the double-well functional is ``h^2 / 3``, the
    competitor bound for ``2m`` cells of width ``h = 1/(2m)``.
    """
    f = space.factors[0]
    if space.ndim != 1 or not hasattr(f, "grid_nodes"):
        raise PreconditionError("the sawtooth start needs a 1-D hat space")
    c = np.where(np.arange(space.dim) % 2 == 0, f.h, 0.0)
    return Ultrafunction(space, c)


def level_rng(seed: int, level) -> np.random.Generator:
    """Generator for one level of a sweep, independent of execution order.

    `level` may be an integer or a per-axis sequence.
    """
    lv = [int(v) for v in np.atleast_1d(level)] if level is not None else []
    return np.random.default_rng([int(seed), *lv])


def sawtooth_level(level: int, seed: int = 0, n_random: int = 5, interval=(0.0, 1.0), opts=None):
    """One level of :func:`sawtooth_sweep`: ``(CriticalPointResult, detail dict)``."""
    dom = Domain.interval(interval[0], interval[1], "dirichlet")
    sp = build_space(dom, "pw_linear_hat", level)
    spec = sawtooth_functional(sp)
    starts = default_starts(sp, level_rng(seed, level), endpoint=sawtooth_start(sp), n_random=n_random)
    res = minimize(sp, spec, starts, opts)
    h = sp.factors[0].h
    detail = {
        "level": int(level),
        "cells": sp.dim + 1,
        "value": res.value,
        "bound": h * h / 3.0,
        "sup_norm": float(np.max(np.abs(res.u.coeffs))),
        "grad_norm": res.grad_norm,
        "status": res.status,
        "iterations": res.iterations,
        "zero_value": float(spec.energy(np.zeros(sp.dim))),
    }
    return res, detail


def sawtooth_report(levels, outcomes, seed: int = 0) -> SweepReport:
    """Assemble per-level ``(result, detail)`` pairs into a sweep report."""
    report = level_convergence_report([(lv, res) for lv, (res, _) in zip(levels, outcomes)], seminorm="h1")
    report.meta.update({"problem": "sawtooth", "seed": int(seed), "levels": [d for _, d in outcomes]})
    return report


def sawtooth_sweep(
    levels,
    seed: int = 0,
    n_random: int = 5,
    interval=(0.0, 1.0),
    opts: Optional[MinimizeOptions] = None,
) -> SweepReport:
    """Minimize the double-well energy on hat spaces of doubling level.

    Each level runs 8 starts (zero, +-sawtooth and `n_random` random ones)
    and records the minimum value, the sup-norm of the minimizer (= largest
    nodal value for hats), and the bound ``h^2/3``.  Distances between
    successive minimizers are measured in the H1 seminorm.
    """
    outcomes = [sawtooth_level(lv, seed, n_random, interval, opts) for lv in levels]
    return sawtooth_report(list(levels), outcomes, seed)


# ---------------------------------------------------------------------------
# p-Laplacian by continuation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PLaplaceResult:
    u: Ultrafunction
    report: dict


def w1p_norm(space: FunctionSpace, p: float) -> Callable:
    """``u -> (integral of |grad u|^p)^(1/p)`` by the space's quadrature."""

    def norm(u: Ultrafunction) -> float:
        grad = space.grid_gradient(u.coeffs)
        mag = np.sqrt(sum(g * g for g in grad))
        return space.grid_integral(mag**p) ** (1.0 / p)

    return norm


def plaplacian_demo(
    space: FunctionSpace,
    p: float,
    f: Callable,
    R: Optional[float] = None,
    opts: Optional[ContinuationOptions] = None,
) -> PLaplaceResult:
    """Solve ``-(Delta_p u - Delta u) = f`` weakly and check the energy identity.

    Testing the equation against ``u`` itself gives
    ``integral |grad u|^p - integral |grad u|^2 = integral f u``; the report
    holds both sides and their difference.  With `R` omitted the ball radius
    is found by doubling from 1 until the boundary sign test passes.
    """
    if not p > 2:
        raise PreconditionError("p must exceed 2 (at p = 2 the operator vanishes identically)")
    _require_dirichlet(space)
    spec = plaplace_functional(space, p, f)
    norm = w1p_norm(space, p)

    def A(u: Ultrafunction) -> Ultrafunction:
        return Ultrafunction(space, space.solve_gram(spec.dual_gradient(u.coeffs)))

    if R is None:
        R = 1.0
        for _ in range(30):
            try:
                sol = solve_nonlinear_continuation(space, A, R, norm=norm, opts=opts)
                break
            except PreconditionError:
                R *= 2.0
        else:
            raise PreconditionError("no radius up to 2^30 satisfies the boundary sign test")
    else:
        sol = solve_nonlinear_continuation(space, A, R, norm=norm, opts=opts)
    u = sol.u
    grad = space.grid_gradient(u.coeffs)
    mag2 = sum(g * g for g in grad)
    lhs = space.grid_integral(mag2 ** (p / 2)) - space.grid_integral(mag2)
    rhs = space.grid_integral(space.call_on_grid(f) * space.grid_eval(u.coeffs))
    report = {
        "p": float(p),
        "radius": float(R),
        "residual": sol.residual,
        "steps": sol.steps,
        "w1p_norm": norm(u),
        "identity": {"lhs": lhs, "rhs": rhs, "difference": abs(lhs - rhs)},
    }
    return PLaplaceResult(u, report)
