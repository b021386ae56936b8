import math

import numpy as np
import pytest

from ultrafun import applications as apps
from ultrafun.errors import PreconditionError
from ultrafun.function_space import Domain, build_space
from ultrafun.linear_solve import solve_fredholm
from ultrafun.operators import laplacian


def _hats(level, a=0.0, b=1.0):
    return build_space(Domain.interval(a, b), "pw_linear_hat", level)


def test_point_load_matches_green_function():
    # u'' = delta_q on (0, 1) with zero ends: u(q) = -q (1 - q), exact for hats at a node
    sp = _hats(8)
    solver = apps.PointLoadSolver(sp)
    for q in (0.25, 0.5, 0.8125):
        e = solver.energies(q)
        assert e["u_q"] == pytest.approx(-q * (1 - q), abs=1e-12)
        assert e["membrane"] == pytest.approx(-0.5 * q * (1 - q), abs=1e-12)
        assert e["electrostatic"] == pytest.approx(0.5 * q * (1 - q), abs=1e-12)
        assert e["identity_error"] < 1e-6


def test_point_load_needs_dirichlet():
    sp = build_space(Domain.interval(0, 2 * math.pi, "periodic"), "fourier_periodic", 3)
    with pytest.raises(PreconditionError):
        apps.PointLoadSolver(sp)


def test_membrane_1d_midpoint():
    r = apps.membrane_equilibrium(_hats(32), np.linspace(0, 1, 11))
    assert abs(r.q_star[0] - 0.5) <= 1 / 64
    assert r.energy == pytest.approx(-0.125, abs=1e-3)
    assert r.identity_error < 1e-6
    d = r.to_dict()
    assert set(d) >= {"q_star", "energy", "grid"}


def test_membrane_boundary_loads_have_zero_energy():
    r = apps.membrane_equilibrium(_hats(8), [0.0, 1.0])
    assert r.energy == 0.0


def test_membrane_center_sweep_2d():
    rep = apps.membrane_center_sweep(Domain.rectangle(0, 1, 0, 1), "fourier_sine", [4, 8, 16])
    values = [r.value for r in rep.rows]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert rep.verdict == "diverging"
    assert rep.meta["log_fit"]["r2"] > 0.9


def test_charge_profile_on_square():
    sp = build_space(Domain.rectangle(0, 1, 0, 1), "fourier_sine", 8)
    prof = apps.charged_particle_profile(sp, apps.square_grid(5))
    e = np.array(prof.energies)
    b = np.array(prof.on_boundary)
    assert np.all(e >= -1e-9)
    np.testing.assert_allclose(e[b], 0.0, atol=1e-9)
    assert np.all(e[~b] > 0)
    assert sp.domain.on_boundary(np.array([prof.argmin]))[0]
    # the grid is symmetric under x <-> 1 - x
    grid = np.array(prof.grid)
    for q, en in zip(grid, e):
        mirror = np.argmin(np.linalg.norm(grid - [1 - q[0], q[1]], axis=1))
        assert en == pytest.approx(e[mirror], abs=1e-12)
    assert [p["distance"] for p in prof.near_boundary] == pytest.approx([1 / 9, 2 / 9, 4 / 9])


def test_sawtooth_start_value():
    sp = _hats(4)
    u = apps.sawtooth_start(sp)
    from ultrafun.variational import sawtooth_functional

    h = sp.factors[0].h
    assert sawtooth_functional(sp).energy(u.coeffs) == pytest.approx(h * h / 3, rel=1e-12)


def test_sawtooth_small_sweep_is_deterministic():
    a = apps.sawtooth_sweep([4, 8], seed=3, n_random=2)
    b = apps.sawtooth_sweep([4, 8], seed=3, n_random=2)
    assert [r.value for r in a.rows] == [r.value for r in b.rows]
    details = a.meta["levels"]
    for d in details:
        assert d["value"] <= d["bound"] + 1e-8
        assert d["zero_value"] == pytest.approx(1.0, abs=1e-12)
    assert details[1]["sup_norm"] < details[0]["sup_norm"]
    assert a.verdict == "diverging"


def test_level_rng_separates_levels():
    x = apps.level_rng(0, 4).random()
    assert x == apps.level_rng(0, 4).random()
    assert x != apps.level_rng(0, 8).random()
    assert apps.level_rng(0, (4, 4)).random() != x


def test_plaplace_energy_identity():
    sp = _hats(8)
    out = apps.plaplacian_demo(sp, 4.0, lambda x: np.sin(np.pi * x))
    ident = out.report["identity"]
    assert abs(ident["difference"]) < 1e-8 * (1 + abs(ident["rhs"]))
    assert out.report["residual"] < 1e-8
    assert out.report["radius"] >= 1.0


def test_plaplace_zero_rhs_and_rejections():
    sp = _hats(4)
    out = apps.plaplacian_demo(sp, 3.0, lambda x: 0 * x)
    assert np.all(out.u.coeffs == 0)
    with pytest.raises(PreconditionError):
        apps.plaplacian_demo(sp, 2.0, lambda x: 1 + 0 * x)
    with pytest.raises(PreconditionError):
        apps.plaplacian_demo(sp, 1.5, lambda x: 1 + 0 * x)
