import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultrafun.errors import ConfigurationError, DomainError, EvaluationError, SpaceMismatchError
from ultrafun.embeddings import embed_function
from ultrafun.function_space import (
    BasisFamily,
    Domain,
    Ultrafunction,
    build_space,
    evaluate,
    gram_report,
    inner_product,
    integrate_against,
    norm,
)

from conftest import random_points


def test_sine_gram_is_half_pi_identity():
    sp = build_space(Domain.interval(0, math.pi), "fourier_sine", 4)
    assert sp.dim == 4
    np.testing.assert_allclose(sp.gram, math.pi / 2 * np.eye(4), atol=1e-12)


def test_single_hat_gram():
    sp = build_space(Domain.interval(0, 1), "pw_linear_hat", 1)
    assert sp.dim == 1
    assert sp.gram[0, 0] == pytest.approx(1.0 / 3.0, abs=1e-13)
    assert evaluate(sp.basis_function(0), 0.5) == pytest.approx(1.0)


def test_tensor_dimension_count():
    dom = Domain.rectangle(0, 2 * math.pi, 0, 1, "periodic_in_x_dirichlet_in_y")
    sp = build_space(dom, BasisFamily.tensor("fourier_periodic", "fourier_sine"), (1, 1))
    assert sp.dim == 3


@pytest.mark.parametrize(
    "family,bc,level,expected",
    [
        ("fourier_sine", "dirichlet", 7, 7),
        ("fourier_periodic", "periodic", 5, 11),
        ("pw_linear_hat", "dirichlet", 16, 31),
    ],
)
def test_dimension_formula(family, bc, level, expected):
    assert build_space(Domain.interval(0, 1, bc), family, level).dim == expected


def test_incompatible_family_and_boundary():
    with pytest.raises(ConfigurationError):
        build_space(Domain.interval(0, 1, "periodic"), "fourier_sine", 3)
    with pytest.raises(ConfigurationError):
        Domain.interval(0, 1, "periodic_in_x_dirichlet_in_y")
    with pytest.raises(ConfigurationError):
        Domain.interval(1, 0)


def test_evaluate_examples(sine_pi):
    assert evaluate(sine_pi.basis_function(0), math.pi / 2) == pytest.approx(1.0, abs=1e-14)
    u = Ultrafunction(sine_pi, np.arange(1.0, 9.0))
    assert evaluate(u, 0.0) == 0.0
    assert evaluate(u, math.pi) == 0.0
    with pytest.raises(DomainError):
        evaluate(u, 4.0)


def test_projection_of_parabola_matches_closed_form(sine_pi):
    # sine coefficients of x (pi - x): 8 / (pi k^3) for odd k, zero otherwise
    u = embed_function(sine_pi, lambda x: x * (math.pi - x))
    k = np.arange(1, 9)
    coeffs = np.where(k % 2 == 1, 8.0 / (math.pi * k**3), 0.0)
    np.testing.assert_allclose(u.coeffs, coeffs, atol=1e-12)
    assert evaluate(u, 1.0) == pytest.approx(float(np.sum(coeffs * np.sin(k * 1.0))), abs=1e-10)


def test_inner_products(sine_pi):
    e1, e2 = sine_pi.basis_function(0), sine_pi.basis_function(1)
    assert inner_product(e1, e2) == pytest.approx(0.0, abs=1e-13)
    assert inner_product(e1, e1) == pytest.approx(math.pi / 2, abs=1e-13)
    assert norm(sine_pi.zero()) == 0.0
    other = build_space(Domain.interval(0, math.pi), "fourier_sine", 3)
    with pytest.raises(SpaceMismatchError):
        inner_product(e1, other.basis_function(0))


def test_load_vectors():
    sp = build_space(Domain.interval(0, math.pi), "fourier_sine", 3)
    np.testing.assert_allclose(integrate_against(sp, lambda x: np.ones_like(x)), [2.0, 0.0, 2.0 / 3.0], atol=1e-13)
    np.testing.assert_array_equal(integrate_against(sp, lambda x: 0 * x), np.zeros(3))
    np.testing.assert_allclose(integrate_against(sp, lambda x: np.sin(x)), sp.gram[:, 0], atol=1e-13)
    with pytest.raises(EvaluationError):
        integrate_against(sp, lambda x: np.full_like(x, np.nan))


@pytest.mark.parametrize(
    "family,bc,levels",
    [
        ("fourier_sine", "dirichlet", (3, 4)),
        ("fourier_periodic", "periodic", (2, 3)),
        ("pw_linear_hat", "dirichlet", (4, 8)),
    ],
)
def test_nested_levels_reproduce_basis_functions(rng, family, bc, levels):
    dom = Domain.interval(0, 1, bc)
    coarse, fine = (build_space(dom, family, lv) for lv in levels)
    assert coarse.nested_in(fine)
    x = rng.random(100)
    for j in range(coarse.dim):
        e = coarse.basis_function(j)
        up = embed_function(fine, e)
        np.testing.assert_allclose(evaluate(up, x), evaluate(e, x), atol=1e-10)


def test_hats_nest_only_on_doubling():
    dom = Domain.interval(0, 1)
    assert not build_space(dom, "pw_linear_hat", 4).nested_in(build_space(dom, "pw_linear_hat", 6))
    assert build_space(dom, "pw_linear_hat", 4).refine().level == 8


@pytest.mark.parametrize(
    "family,bc",
    [("fourier_sine", "dirichlet"), ("fourier_periodic", "periodic"), ("pw_linear_hat", "dirichlet")],
)
def test_gram_spd_up_to_level_64(family, bc):
    sp = build_space(Domain.interval(0, 2.0, bc), family, 64)
    np.testing.assert_allclose(sp.gram, sp.gram.T, atol=1e-12)
    np.linalg.cholesky(sp.gram)
    assert gram_report(sp)["gram_min_eig"] > 0


def test_quadrature_exact_for_closed_forms():
    sp = build_space(Domain.interval(0, 1), "fourier_sine", 64)
    np.testing.assert_allclose(sp.gram, 0.5 * np.eye(64), atol=1e-10)
    per = build_space(Domain.interval(0, 2 * math.pi, "periodic"), "fourier_periodic", 32)
    diag = np.r_[2 * math.pi, np.full(64, math.pi)]
    np.testing.assert_allclose(per.gram, np.diag(diag), atol=1e-10)
    hats = build_space(Domain.interval(0, 1), "pw_linear_hat", 16)
    h = 1.0 / 32
    tri = np.diag(np.full(31, 2 * h / 3)) + np.diag(np.full(30, h / 6), 1) + np.diag(np.full(30, h / 6), -1)
    np.testing.assert_allclose(hats.gram, tri, atol=1e-12)
    assert hats.quadrature.weights.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(-5, 5),
    beta=st.floats(-5, 5),
    seed=st.integers(0, 2**31),
)
def test_evaluate_is_linear(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    sp = build_space(Domain.rectangle(0, 1, 0, 2), "fourier_sine", (4, 3))
    u = Ultrafunction(sp, rng.standard_normal(sp.dim))
    v = Ultrafunction(sp, rng.standard_normal(sp.dim))
    x = random_points(rng, sp, 5)
    lhs = evaluate(u * alpha + v * beta, x)
    rhs = alpha * evaluate(u, x) + beta * evaluate(v, x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(alpha) + abs(beta)) * 10)


def test_ultrafunction_is_immutable(sine_pi):
    u = sine_pi.basis_function(2)
    with pytest.raises(ValueError):
        u.coeffs[0] = 1.0
    with pytest.raises(Exception):
        u.space = None
    with pytest.raises(SpaceMismatchError):
        Ultrafunction(sine_pi, np.ones(3))


def test_box_space_dimensions():
    sp = build_space(Domain.box(0, 1, 0, 1, 0, 1), "fourier_sine", 3)
    assert sp.dim == 27
    np.testing.assert_allclose(sp.gram, 0.125 * np.eye(27), atol=1e-12)
