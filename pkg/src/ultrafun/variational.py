"""Critical points of functionals on a finite-level space.

Optimizers work in G-orthonormal coordinates ``x = R c`` (``G = R^T R``), so
the Euclidean gradient there has the length of the G-gradient and
``grad_norm`` is an L2 quantity independent of the basis scaling.

Three solvers live here:

* :func:`minimize` -- multistart L-BFGS with Armijo backtracking;
* :func:`mountain_pass` -- string deformation of a path from 0 to an endpoint
  with a climbing maximal node, finished by a Newton polish;
* :func:`solve_nonlinear_continuation` -- pseudo-arclength continuation of
  ``H(u, s) = (1 - s) u + s A(u)``, confined to a ball.

Existence in the last two cases is topological (max-min, degree) and the
solvers are heuristic realizations of it: failure to converge is reported,
never papered over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    ContinuationFailedError,
    GeometryViolatedError,
    NestingError,
    NonCoerciveError,
    PreconditionError,
)
from .embeddings import embed_function
from .function_space import FunctionSpace, Ultrafunction
from .operators import OperatorMatrix
from .sweep import SweepReport, SweepRow, distance_verdict

GTOL = 1e-7
MAX_ITER = 5000
DIVERGENCE_LEVEL = 1e12


@dataclass(frozen=True, eq=False)
class FunctionalSpec:
    """``J`` on `space`, given through coefficient-space callbacks.

    ``energy(c)`` returns ``J(u)``; ``dual_gradient(c)`` returns the vector
    ``b_i = J'(u)[e_i]``.  The G-gradient is ``G^{-1} b``.
    """

    space: FunctionSpace
    energy: Callable
    dual_gradient: Callable
    coercivity_radius: Optional[Callable] = None
    name: str = "functional"

    def value(self, u: Ultrafunction) -> float:
        return float(self.energy(u.coeffs))

    def gradient(self, u: Ultrafunction) -> Ultrafunction:
        return Ultrafunction(self.space, self.space.solve_gram(self.dual_gradient(u.coeffs)))

    def grad_norm(self, coeffs) -> float:
        b = self.dual_gradient(coeffs)
        return math.sqrt(max(float(b @ self.space.solve_gram(b)), 0.0))


# ---------------------------------------------------------------------------
# Shipped functionals
# ---------------------------------------------------------------------------


def integral_functional(space, F, F_u, F_grad, name="integral") -> FunctionalSpec:
    """``J(u) = integral of F(x, u, grad u)``.

    ``F``, ``F_u`` are called as ``f(coords, u, grad)`` on the quadrature grid;
    ``F_grad`` returns one array per axis (the partials in ``grad u``).
    """
    units = [tuple(int(i == ax) for i in range(space.ndim)) for ax in range(space.ndim)]
    coords = space.grid_coords()

    def energy(c):
        u = space.grid_eval(c)
        return space.grid_integral(F(coords, u, space.grid_gradient(c)))

    def dual_gradient(c):
        u = space.grid_eval(c)
        grad = space.grid_gradient(c)
        b = space.grid_load(np.broadcast_to(F_u(coords, u, grad), u.shape))
        for ax, g in enumerate(F_grad(coords, u, grad)):
            b = b + space.grid_load(np.broadcast_to(g, u.shape), units[ax])
        return b

    return FunctionalSpec(space, energy, dual_gradient, name=name)


def quadratic_functional(L: OperatorMatrix, f: Ultrafunction) -> FunctionalSpec:
    """``J(u) = 1/2 (u, L u) - (f, u)``."""
    M = L.bilinear
    Ms = 0.5 * (M + M.T)
    g = L.space.gram @ f.coeffs
    return FunctionalSpec(
        L.space,
        lambda c: 0.5 * float(c @ M @ c) - float(g @ c),
        lambda c: Ms @ c - g,
        name="quadratic",
    )


def sawtooth_functional(space: FunctionSpace) -> FunctionalSpec:
    """``J0(u) = integral of (|grad u|^2 - 1)^2 + u^2``."""

    def F(x, u, grad):
        return (sum(g * g for g in grad) - 1.0) ** 2 + u * u

    def F_u(x, u, grad):
        return 2.0 * u

    def F_grad(x, u, grad):
        s = sum(g * g for g in grad) - 1.0
        return tuple(4.0 * s * g for g in grad)

    return integral_functional(space, F, F_u, F_grad, name="sawtooth_j0")


def power_mountain_functional(space: FunctionSpace, p: float = 2.0, q: float = 4.0) -> FunctionalSpec:
    """``J(u) = 1/p integral |grad u|^p - 1/q integral |u|^q`` with ``q > p >= 2``."""
    if not (p >= 2 and q > p):
        raise PreconditionError("need p >= 2 and q > p")

    def F(x, u, grad):
        return np.sqrt(sum(g * g for g in grad)) ** p / p - np.abs(u) ** q / q

    def F_u(x, u, grad):
        return -np.abs(u) ** (q - 2) * u

    def F_grad(x, u, grad):
        m = np.sqrt(sum(g * g for g in grad)) ** (p - 2)
        return tuple(m * g for g in grad)

    return integral_functional(space, F, F_u, F_grad, name=f"mountain_p{p:g}_q{q:g}")


def plaplace_functional(space: FunctionSpace, p: float, f) -> FunctionalSpec:
    """``J(u) = integral 1/p |grad u|^p - 1/2 |grad u|^2 - f u``.

    Its critical points solve ``(Delta_p u - Delta u, phi) = (f, phi)``.
    """
    fvals = space.call_on_grid(f)

    def F(x, u, grad):
        m2 = sum(g * g for g in grad)
        return m2 ** (p / 2) / p - 0.5 * m2 - fvals * u

    def F_u(x, u, grad):
        return -fvals

    def F_grad(x, u, grad):
        m = sum(g * g for g in grad) ** ((p - 2) / 2) - 1.0
        return tuple(m * g for g in grad)

    return integral_functional(space, F, F_u, F_grad, name=f"plaplace_p{p:g}")


def scalar_model(space: FunctionSpace) -> FunctionalSpec:
    """``J(c) = c^2 - c^4`` in the single coefficient of a 1-dim space."""
    if space.dim != 1:
        raise PreconditionError("the scalar model needs a 1-dimensional space")
    return FunctionalSpec(
        space,
        lambda c: float(c[0] ** 2 - c[0] ** 4),
        lambda c: np.array([2 * c[0] - 4 * c[0] ** 3]),
        name="scalar_model",
    )


def gradient_check(spec: FunctionalSpec, rng, n_dirs=20, step=1e-6) -> float:
    """Worst relative mismatch between central differences and ``(grad, d)``."""
    n = spec.space.dim
    worst = 0.0
    for _ in range(n_dirs):
        c = rng.standard_normal(n) * 0.5
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        fd = (spec.energy(c + step * d) - spec.energy(c - step * d)) / (2 * step)
        an = float(spec.dual_gradient(c) @ d)
        worst = max(worst, abs(fd - an) / max(abs(an), abs(fd), 1.0))
    return worst


# ---------------------------------------------------------------------------
# Results and options
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CriticalPointResult:
    u: Ultrafunction
    value: float
    grad_norm: float
    iterations: int
    status: str
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "status": self.status,
            "dim": self.u.space.dim,
            "coeffs": self.u.coeffs.tolist(),
        }


@dataclass(frozen=True)
class MinimizeOptions:
    gtol: float = GTOL
    max_iter: int = MAX_ITER
    memory: int = 10
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60


class _Coords:
    """Map between coefficients c and orthonormal coordinates x = R c."""

    def __init__(self, spec: FunctionalSpec):
        self.spec = spec
        self.R = spec.space.cholesky_upper

    def c(self, x):
        return sla.solve_triangular(self.R, x, lower=False)

    def x(self, c):
        return self.R @ c

    def f(self, x):
        return float(self.spec.energy(self.c(x)))

    def g(self, x):
        return sla.solve_triangular(self.R, self.spec.dual_gradient(self.c(x)), trans="T", lower=False)


def _two_loop(g, S, Y):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        q -= a * y
        alphas.append((rho, a))
    gamma = (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1]) if S else 1.0
    r = gamma * q
    for (s, y), (rho, a) in zip(zip(S, Y), reversed(alphas)):
        r += s * (a - rho * (y @ r))
    return r


def _lbfgs(cs: _Coords, x0, opts: MinimizeOptions):
    x = np.array(x0, dtype=float)
    f = cs.f(x)
    g = cs.g(x)
    S, Y = [], []
    trace = [(0, f, float(np.linalg.norm(g)))]
    status = "max_iter"
    it = 0
    for it in range(1, opts.max_iter + 1):
        gn = float(np.linalg.norm(g))
        if gn < opts.gtol:
            status = "converged"
            it -= 1
            break
        if f < -DIVERGENCE_LEVEL:
            status = "diverged"
            break
        d = -_two_loop(g, S, Y) if S else -g / max(1.0, gn)
        slope = float(g @ d)
        if slope >= 0:
            S, Y = [], []
            d = -g / max(1.0, gn)
            slope = float(g @ d)
        step, accepted = 1.0, False
        eps_f = 1e-13 * (1.0 + abs(f))
        gnew = None
        for _ in range(opts.max_backtracks):
            xn = x + step * d
            fn = cs.f(xn)
            if fn <= f + opts.armijo * step * slope and f - fn > eps_f:
                accepted = True
                break
            if 0.0 <= f - fn <= eps_f:
                # value differences are at rounding level: fall back on the
                # approximate-Armijo test through the directional derivative
                gnew = cs.g(xn)
                if float(gnew @ d) <= (1 - 2 * opts.armijo) * abs(slope) and np.linalg.norm(gnew) < gn:
                    accepted = True
                    break
                gnew = None
            step *= opts.shrink
        if not accepted:
            if S:
                S, Y = [], []
                continue
            status = "line_search_failure"
            break
        if not S and step == 1.0 and gnew is None:
            # no curvature information yet: expand while the decrease keeps
            # pace, so that unbounded directions are recognized quickly
            for _ in range(60):
                xt = xn + step * d
                ft = cs.f(xt)
                if not ft <= fn + opts.armijo * step * slope:
                    break
                xn, fn, step = xt, ft, 2 * step
                if fn < -DIVERGENCE_LEVEL:
                    break
        if gnew is None:
            gnew = cs.g(xn)
        s, y = xn - x, gnew - g
        if s @ y > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
            if len(S) > opts.memory:
                S.pop(0)
                Y.pop(0)
        x, f, g = xn, fn, gnew
        trace.append((it, f, float(np.linalg.norm(g))))
    else:
        it = opts.max_iter
    if status == "max_iter" and float(np.linalg.norm(g)) < opts.gtol:
        status = "converged"
    return x, f, float(np.linalg.norm(g)), it, status, trace


def _better(a: CriticalPointResult, b: CriticalPointResult) -> bool:
    ka = (a.value, a.grad_norm, tuple(a.u.coeffs))
    kb = (b.value, b.grad_norm, tuple(b.u.coeffs))
    return ka < kb


def minimize(space: FunctionSpace, spec: FunctionalSpec, starts, opts: MinimizeOptions = None) -> CriticalPointResult:
    """Best local minimizer over descent runs from each start."""
    opts = opts or MinimizeOptions()
    cs = _Coords(spec)
    best = None
    diverged = 0
    for start in starts:
        c0 = start.coeffs if isinstance(start, Ultrafunction) else np.asarray(start, dtype=float)
        x, f, gn, it, status, trace = _lbfgs(cs, cs.x(c0), opts)
        if status == "diverged":
            diverged += 1
            continue
        res = CriticalPointResult(Ultrafunction(space, cs.c(x)), f, gn, it, status, trace)
        if best is None or _better(res, best):
            best = res
    if best is None:
        raise NonCoerciveError(f"all {diverged} descent runs diverged below -{DIVERGENCE_LEVEL:g}")
    return best


def default_starts(space: FunctionSpace, rng, endpoint: Optional[Ultrafunction] = None, n_random=5, scale=0.1) -> list:
    """Zero, +/- endpoint (when given) and `n_random` random starts.

    Random starts are Gaussian in orthonormal coordinates, scaled so that
    their expected L2 norm is `scale`.
    """
    starts = [space.zero()]
    if endpoint is not None:
        starts += [endpoint, -endpoint]
    R = space.cholesky_upper
    for _ in range(n_random):
        x = rng.standard_normal(space.dim) * (scale / math.sqrt(space.dim))
        starts.append(Ultrafunction(space, sla.solve_triangular(R, x, lower=False)))
    return starts


# ---------------------------------------------------------------------------
# Mountain pass
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MountainPassOptions:
    nodes: int = 33
    gtol: float = GTOL
    max_iter: int = 5000
    trust_fraction: float = 0.1
    reparam_every: int = 10
    margin: float = 1e-8
    n_probe: int = 20
    probe_fraction: float = 1e-3
    newton_iters: int = 30
    seed: int = 0


def _fd_hessian(cs: _Coords, x, eps=1e-5):
    n = x.size
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = eps
        H[:, j] = (cs.g(x + e) - cs.g(x - e)) / (2 * eps)
    return 0.5 * (H + H.T)


def _newton_critical(cs: _Coords, x, max_iter, gtol):
    """Damped Newton on grad J = 0; returns (x, |g|)."""
    g = cs.g(x)
    gn = float(np.linalg.norm(g))
    for _ in range(max_iter):
        if gn < gtol:
            break
        H = _fd_hessian(cs, x, eps=1e-5 * (1.0 + float(np.linalg.norm(x))) / math.sqrt(x.size))
        step = np.linalg.lstsq(H, -g, rcond=None)[0]
        t = 1.0
        while t > 1e-4:
            xn = x + t * step
            gn_new = float(np.linalg.norm(cs.g(xn)))
            if gn_new < gn:
                break
            t *= 0.5
        else:
            break
        x, g, gn = xn, cs.g(xn), gn_new
    return x, gn


def _reparametrize(path):
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return path
    target = np.linspace(0.0, s[-1], path.shape[0])
    out = np.empty_like(path)
    for k in range(path.shape[1]):
        out[:, k] = np.interp(target, s, path[:, k])
    return out


def _curvature_bound(cs: _Coords, x, rng, iters=12):
    """Power-iteration estimate of the largest |eigenvalue| of the Hessian at x."""
    v = rng.standard_normal(x.size)
    v /= np.linalg.norm(v)
    eps = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    g0 = cs.g(x)
    lam = 1.0
    for _ in range(iters):
        w = (cs.g(x + eps * v) - g0) / eps
        lam = float(np.linalg.norm(w))
        if lam == 0:
            return 1.0
        v = w / lam
    return max(lam, 1e-12)


def mountain_pass(space: FunctionSpace, spec: FunctionalSpec, endpoint: Ultrafunction, opts: MountainPassOptions = None) -> CriticalPointResult:
    """Mountain-pass critical point between 0 and `endpoint`.

    The path's interior nodes descend along the gradient component normal to
    the path, the highest node climbs along the path tangent, and the path is
    reparametrized by arclength every few sweeps.  Once the highest node is
    close to critical it is polished by Newton's method on the gradient.
    """
    opts = opts or MountainPassOptions()
    rng = np.random.default_rng(opts.seed)
    cs = _Coords(spec)
    J0 = cs.f(np.zeros(space.dim))
    if abs(J0) > 1e-12:
        raise PreconditionError(f"J(0) must be 0, got {J0:.3e}")
    x_end = cs.x(endpoint.coeffs)
    r_end = float(np.linalg.norm(x_end))
    if r_end == 0 or cs.f(x_end) > J0:
        raise PreconditionError("endpoint must be nonzero with J(endpoint) <= J(0)")
    r_probe = opts.probe_fraction * r_end
    for _ in range(opts.n_probe):
        d = rng.standard_normal(space.dim)
        if cs.f(r_probe * d / np.linalg.norm(d)) <= J0:
            raise PreconditionError("0 is not a strict local minimum at the probe radius")

    trust = opts.trust_fraction * r_end
    path = np.linspace(0.0, 1.0, opts.nodes)[:, None] * x_end[None, :]
    trace = []
    lam = _curvature_bound(cs, path[opts.nodes // 2], rng)
    for sweep in range(1, opts.max_iter + 1):
        E = np.array([cs.f(p) for p in path])
        imax = int(np.argmax(E[1:-1])) + 1
        if E[imax] <= J0 + opts.margin:
            raise GeometryViolatedError("path energy collapsed to the level of J(0)")
        g_max = cs.g(path[imax])
        trace.append((sweep, float(E[imax]), float(np.linalg.norm(g_max))))
        if sweep % opts.reparam_every == 0:
            xc, gn = _newton_critical(cs, path[imax].copy(), opts.newton_iters, opts.gtol)
            val = cs.f(xc)
            if gn < opts.gtol and val > J0 + opts.margin:
                trace.append((sweep, val, gn))
                return CriticalPointResult(Ultrafunction(space, cs.c(xc)), val, gn, sweep, "converged", trace)
            path = _reparametrize(path)
            lam = _curvature_bound(cs, path[imax], rng)
        alpha = 0.5 / lam
        new = path.copy()
        for i in range(1, opts.nodes - 1):
            tau = path[i + 1] - path[i - 1]
            tau /= max(np.linalg.norm(tau), 1e-300)
            g = g_max if i == imax else cs.g(path[i])
            along = float(g @ tau) * tau
            d = -g + 2 * along if i == imax else -(g - along)
            step = alpha * d
            sn = float(np.linalg.norm(step))
            if sn > trust:
                step *= trust / sn
            new[i] = path[i] + step
        path = new
    E = np.array([cs.f(p) for p in path])
    imax = int(np.argmax(E[1:-1])) + 1
    gn = float(np.linalg.norm(cs.g(path[imax])))
    return CriticalPointResult(Ultrafunction(space, cs.c(path[imax])), float(E[imax]), gn, opts.max_iter, "max_iter", trace)


# ---------------------------------------------------------------------------
# Nonlinear problems by homotopy continuation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuationOptions:
    tol: float = 1e-10
    n_samples: int = 50
    h0: float = 0.05
    h_min: float = 1e-8
    h_max: float = 0.5
    max_steps: int = 2000
    corrector_iters: int = 12
    seed: int = 0


@dataclass(frozen=True, eq=False)
class ContinuationResult:
    u: Ultrafunction
    residual: float
    steps: int
    path_s: list = field(default_factory=list, repr=False)


def _fd_jacobian(r, c, r0=None):
    n = c.size
    J = np.empty((n, n))
    eps = 1e-6 * (1.0 + float(np.linalg.norm(c, np.inf)))
    for j in range(n):
        e = np.zeros(n)
        e[j] = eps
        J[:, j] = (r(c + e) - r(c - e)) / (2 * eps)
    return J


def solve_nonlinear_continuation(
    space: FunctionSpace,
    A: Callable,
    R: float,
    norm: Optional[Callable] = None,
    opts: ContinuationOptions = None,
) -> ContinuationResult:
    """Solve ``A(u) = 0`` from the homotopy ``(1 - s) u + s A(u)``.

    `A` maps an Ultrafunction to an Ultrafunction.  `norm` (default: the L2
    norm of the space) defines the ball ``|u| <= R`` the path must stay in;
    ``(A(u), u) > 0`` is sampled on its boundary first.
    """
    opts = opts or ContinuationOptions()
    rng = np.random.default_rng(opts.seed)
    G = space.gram
    norm = norm or (lambda u: u.norm())
    Rc = space.cholesky_upper

    def r(c):
        return A(Ultrafunction(space, c)).coeffs

    def gnorm(v):
        return math.sqrt(max(float(v @ G @ v), 0.0))

    for _ in range(opts.n_samples):
        d = sla.solve_triangular(Rc, rng.standard_normal(space.dim), lower=False)
        u = Ultrafunction(space, d * (R / norm(Ultrafunction(space, d))))
        if float(r(u.coeffs) @ G @ u.coeffs) <= 0:
            raise PreconditionError(f"(A(u), u) <= 0 at a sampled point with |u| = {R}")

    n = space.dim
    r0 = r(np.zeros(n))
    if gnorm(r0) < opts.tol:
        return ContinuationResult(space.zero(), gnorm(r0), 0, [0.0])

    def H(c, s):
        return (1 - s) * c + s * r(c)

    def jac(c, s):
        Jr = _fd_jacobian(r, c)
        return np.column_stack([(1 - s) * np.eye(n) + s * Jr, r(c) - c])

    def tangent(Jfull, prev=None):
        _, _, Vt = np.linalg.svd(Jfull)
        t = Vt[-1]
        if prev is not None and t @ prev < 0:
            t = -t
        elif prev is None and t[-1] < 0:
            t = -t
        return t

    y = np.zeros(n + 1)
    t = tangent(jac(y[:n], 0.0))
    h = opts.h0
    path_s = [0.0]
    steps = 0
    while steps < opts.max_steps:
        steps += 1
        yp = y + h * t
        yc = yp.copy()
        ok = False
        for k in range(opts.corrector_iters):
            F = np.concatenate([H(yc[:n], yc[n]), [t @ (yc - yp)]])
            if np.linalg.norm(F) < opts.tol * (1 + np.linalg.norm(yc)):
                ok = True
                break
            Jf = np.vstack([jac(yc[:n], yc[n]), t])
            yc = yc - np.linalg.solve(Jf, F)
        if not ok or norm(Ultrafunction(space, yc[:n])) > R * (1 + 1e-9):
            h *= 0.5
            if h < opts.h_min:
                if ok:
                    raise ContinuationFailedError(f"homotopy path left the ball of radius {R}")
                raise ContinuationFailedError("continuation stalled (corrector does not converge)")
            continue
        path_s.append(float(yc[n]))
        if yc[n] >= 1.0:
            # land on s = 1 by interpolation between the last two points
            theta = (1.0 - y[n]) / (yc[n] - y[n])
            c = y[:n] + theta * (yc[:n] - y[:n])
            c = _newton_root(r, c, opts.tol, G)
            res = gnorm(r(c))
            if norm(Ultrafunction(space, c)) > R * (1 + 1e-9):
                raise ContinuationFailedError(f"solution lies outside the ball of radius {R}")
            return ContinuationResult(Ultrafunction(space, c), res, steps, path_s)
        t = tangent(jac(yc[:n], yc[n]), t)
        y = yc
        if k <= 3:
            h = min(h * 1.5, opts.h_max)
    raise ContinuationFailedError(f"no arrival at s = 1 within {opts.max_steps} steps")


def _newton_root(r, c, tol, G, max_iter=50):
    def gn(v):
        return math.sqrt(max(float(v @ G @ v), 0.0))

    res = r(c)
    for _ in range(max_iter):
        if gn(res) < tol:
            break
        step = np.linalg.lstsq(_fd_jacobian(r, c), -res, rcond=None)[0]
        t = 1.0
        while t > 1e-6:
            cn = c + t * step
            rn = r(cn)
            if gn(rn) < gn(res):
                break
            t *= 0.5
        else:
            break
        c, res = cn, rn
    return c


# ---------------------------------------------------------------------------
# Cross-level diagnostics
# ---------------------------------------------------------------------------


def level_convergence_report(results, seminorm: str = "l2", dist_tol: float = 1e-3, **meta) -> SweepReport:
    """Distances between successive-level solutions and a trend verdict.

    `results` is a list of ``(level, CriticalPointResult)`` on nested spaces.
    ``seminorm="h1"`` measures distances by ``integral |grad(u - v)|^2``.
    The verdict describes a trend over finitely many levels and is not a
    compactness certificate.
    """
    rows = []
    dists = []
    prev = None
    for level, res in results:
        dist = None
        if prev is not None:
            if not prev.u.space.nested_in(res.u.space):
                raise NestingError(f"level {level} does not contain the previous level")
            diff = res.u.coeffs - embed_function(res.u.space, prev.u).coeffs
            M = res.u.space.stiffness() if seminorm == "h1" else res.u.space.gram
            dist = math.sqrt(max(float(diff @ M @ diff), 0.0))
            dists.append(dist)
        rows.append(SweepRow(int(level), res.u.space.dim, float(res.value), float(res.grad_norm), dist))
        prev = res
    verdict = distance_verdict(dists, dist_tol)
    return SweepReport.build(
        rows, verdict=verdict, seminorm=seminorm, basis=results[0][1].u.space.family if results else None, **meta
    )
