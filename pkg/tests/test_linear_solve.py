import math

import numpy as np
import pytest

from ultrafun.embeddings import embed_function
from ultrafun.errors import NumericError, PreconditionError, ResonanceError, SingularSpectrumError
from ultrafun.function_space import Domain, Ultrafunction, build_space
from ultrafun.linear_solve import (
    FredholmSolver,
    solve_fredholm,
    solve_spectral,
    solve_wave_periodic,
    spectral_decompose,
    wave_denominators,
    wave_space,
)
from ultrafun.operators import OperatorMatrix, identity, laplacian, second_order_matrix, SecondOrderCoeffs, wave_operator


def test_identity_unique(rng, sine_pi):
    f = Ultrafunction(sine_pi, rng.standard_normal(8))
    out = solve_fredholm(identity(sine_pi), f)
    assert out.unique
    np.testing.assert_allclose(out.u.coeffs, f.coeffs, atol=1e-12)


def test_laplacian_unique(sine_pi):
    f = sine_pi.basis_function(1)
    out = solve_fredholm(laplacian(sine_pi), f)
    np.testing.assert_allclose(out.u.coeffs, -0.25 * np.eye(8)[1], atol=1e-13)
    assert out.residual < 1e-8 * (1 + f.norm())


def test_singular_branch_compatible_and_incompatible(sine_pi):
    L = laplacian(sine_pi).shifted(1.0)
    out = solve_fredholm(L, sine_pi.basis_function(1))
    assert out.kind == "singular" and out.compatible
    assert len(out.kernel) == 1
    k = out.kernel[0].coeffs
    np.testing.assert_allclose(np.abs(k) / np.abs(k).max(), np.eye(8)[0], atol=1e-12)
    np.testing.assert_allclose(out.particular.coeffs, -np.eye(8)[1] / 3, atol=1e-12)
    for kv in out.kernel:
        assert np.linalg.norm(L(kv).coeffs) < 1e-8 * kv.norm()
    bad = solve_fredholm(L, sine_pi.basis_function(0))
    assert bad.kind == "singular" and not bad.compatible and bad.particular is None


def test_nonfinite_rejected(sine_pi):
    with pytest.raises(NumericError):
        FredholmSolver(OperatorMatrix(sine_pi, np.full((8, 8), np.nan)))


def test_spectrum_examples():
    sp = build_space(Domain.interval(0, math.pi), "fourier_sine", 4)
    spec = spectral_decompose(laplacian(sp))
    np.testing.assert_allclose(spec.eigenvalues, [-16, -9, -4, -1], atol=1e-10)
    V = spec.vectors
    np.testing.assert_allclose(V.T @ sp.gram @ V, np.eye(4), atol=1e-8)
    np.testing.assert_allclose(spectral_decompose(identity(sp)).eigenvalues, np.ones(4), atol=1e-12)
    ws = wave_space(1.0, 2, 2)
    mu = np.sort(spectral_decompose(wave_operator(ws)).eigenvalues)
    k = np.array([0, 1, 1, 2, 2])
    expected = np.sort(((np.arange(1, 3)[None, :] * math.pi) ** 2 - k[:, None] ** 2).ravel())
    np.testing.assert_allclose(mu, expected, atol=1e-9)


def test_spectral_requires_symmetric(hats_unit):
    L = second_order_matrix(hats_unit, SecondOrderCoeffs(b=[1.0], c=1.0))
    with pytest.raises(PreconditionError):
        spectral_decompose(L)


def test_spectral_solve(rng, sine_pi):
    L = laplacian(sine_pi)
    spec = spectral_decompose(L)
    e = spec.eigenfunctions[3]
    np.testing.assert_allclose(solve_spectral(spec, e).coeffs, e.coeffs / spec.eigenvalues[3], atol=1e-12)
    f = Ultrafunction(sine_pi, rng.standard_normal(8))
    np.testing.assert_allclose(solve_spectral(spec, f).coeffs, solve_fredholm(L, f).u.coeffs, atol=1e-8)
    assert np.all(solve_spectral(spec, sine_pi.zero()).coeffs == 0)
    with pytest.raises(SingularSpectrumError) as info:
        solve_spectral(spectral_decompose(L.shifted(4.0)), f)
    assert info.value.eigenvalue == pytest.approx(0.0, abs=1e-9)


def test_wave_single_mode():
    sol = solve_wave_periodic(1.0, (8, 8), lambda t, x: np.cos(t) * np.sin(np.pi * x))
    pm = sol.report["peak_mode"]
    assert (pm["k"], pm["l"]) == (1, 1)
    assert pm["coefficient"] == pytest.approx(1 / (math.pi**2 - 1), abs=1e-9)
    c = np.abs(sol.u.coeffs.copy())
    c[np.argmax(c)] = 0
    assert c.max() < 1e-12
    assert len(sol.report["smallest_denominators"]) == 5


def test_wave_zero_rhs_and_resonance():
    sol = solve_wave_periodic(1.0, (4, 4), lambda t, x: 0 * t)
    assert np.all(sol.u.coeffs == 0)
    with pytest.raises(ResonanceError) as info:
        solve_wave_periodic(math.pi, (4, 4), lambda t, x: np.cos(t) * np.sin(x))
    assert (info.value.k, info.value.l) == (1, 1)


def test_min_denominator_nonincreasing():
    mins = [np.abs(wave_denominators(1.0, n, n)).min() for n in (2, 4, 8, 16, 32)]
    assert all(b <= a for a, b in zip(mins, mins[1:]))
