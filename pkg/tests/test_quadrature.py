import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tmoment.core import IndexSet, MomentSpec, ProblemInstance, ReferenceWeight, SupportRegion
from tmoment.densities import GammaMixture, GaussianMixture, UniformMixture
from tmoment.quadrature import (CONVERGED, DIVERGENT, QuadratureFailure, density_moments, integrate_exp_poly,
                                leading_form_max, moment_integrals)

from conftest import one_d

SQRT_PI = math.sqrt(math.pi)


@pytest.mark.parametrize("lam2, expected", [(-1.0, -2.0), (1.0, 0.0), (2.0, 1.0)])
def test_leading_form_examples(lam2, expected):
    idx = IndexSet.full(1, 1)
    assert leading_form_max([0.0, 0.0, lam2], idx, ReferenceWeight.norm_power()) == pytest.approx(expected)


def test_leading_form_on_bounded_support_is_minus_infinity():
    idx = IndexSet.full(1, 1)
    T = SupportRegion.box([-1.0], [1.0])
    assert leading_form_max([0.0, 0.0, 50.0], idx, ReferenceWeight.constant(), T) == -math.inf


def test_leading_form_halfline_only_looks_at_recession_directions():
    # t^3 term is odd; on [0, inf) only the +1 direction counts
    idx = IndexSet.full(1, 2)
    lam = [0, 0, 0, 0, 0.5]
    assert leading_form_max(lam, idx, ReferenceWeight.norm_power(), SupportRegion.orthant(1)) == pytest.approx(-0.5)


def test_leading_form_two_dimensions_mixed_term():
    # exponent top part x^2 y^2 against decay (x^2 + y^2)^2: max at the diagonal, 1/4 - 1
    idx = IndexSet.full(2, 2)
    lam = np.zeros(len(idx))
    lam[idx.position[(2, 2)]] = 1.0
    assert leading_form_max(lam, idx, ReferenceWeight.norm_power()) == pytest.approx(-0.75, abs=1e-4)


@pytest.mark.parametrize("lam, expected", [((0, 0, 0), SQRT_PI), ((0, 0, -1), math.sqrt(math.pi / 2))])
def test_gaussian_integrals(lam, expected, gaussian):
    res = integrate_exp_poly(np.array(lam, float), gaussian)
    assert res.status == CONVERGED
    assert res.value == pytest.approx(expected, rel=1e-10)


def test_flat_integrand_diverges(gaussian):
    res = integrate_exp_poly(np.array([0.0, 0.0, 1.0]), gaussian)
    assert res.status == DIVERGENT
    assert res.value == math.inf


def test_moment_integral_examples(gaussian):
    m = moment_integrals(np.zeros(3), gaussian, orders=[(1,), (2,)])
    assert m[(2,)] == pytest.approx(SQRT_PI / 2, rel=1e-10)
    assert m[(1,)] == pytest.approx(0.0, abs=1e-12)


def test_moment_integrals_raise_on_divergence(gaussian):
    with pytest.raises(QuadratureFailure):
        moment_integrals(np.array([0.0, 0.0, 2.0]), gaussian)


@settings(max_examples=25)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1.5, -0.2), st.floats(-0.5, 0.5))
def test_quartic_integrals_match_scipy_quad(a1, a2, a3, a4):
    inst = one_d([1.0, 0.0, 1.0, 0.0, 3.0])
    lam = np.array([0.0, a1, a2, a4, a3])
    f = lambda x, j: x ** j * math.exp(lam[1] * x + lam[2] * x * x + lam[3] * x ** 3 + (lam[4] - 1.0) * x ** 4)
    res = integrate_exp_poly(lam, inst, orders=[[0], [1], [2]])
    for j in range(3):
        ref = integrate.quad(f, -np.inf, np.inf, args=(j,), epsabs=1e-13, epsrel=1e-12)[0]
        assert res.values[j] == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_halfline_integral_matches_closed_form():
    inst = one_d([1.0, 1.0, 2.0], support="halfline")
    # int_0^inf exp(-t) exp(-t^2) dt = sqrt(pi)/2 e^{1/4} erfc(1/2)
    res = integrate_exp_poly(np.array([0.0, -1.0, 0.0]), inst)
    assert res.value == pytest.approx(SQRT_PI / 2 * math.exp(0.25) * math.erfc(0.5), rel=1e-10)


def test_box_integral_two_dimensions():
    idx = IndexSet.full(2, 1)
    g = np.zeros(len(idx))
    g[idx.zero] = 1.0
    inst = ProblemInstance(idx, MomentSpec(idx, g), SupportRegion.box([0, 0], [1, 2]), ReferenceWeight.constant())
    lam = np.zeros(len(idx))
    lam[idx.position[(1, 0)]] = 1.0
    lam[idx.position[(0, 1)]] = -0.5
    expected = (math.e - 1) * 2 * (1 - math.exp(-1))
    assert integrate_exp_poly(lam, inst).value == pytest.approx(expected, rel=1e-10)


def test_gaussian_plane_integral():
    idx = IndexSet.full(2, 1)
    g = np.zeros(len(idx))
    g[idx.zero] = 1.0
    inst = ProblemInstance(idx, MomentSpec(idx, g), SupportRegion.full(2), ReferenceWeight.norm_power())
    assert integrate_exp_poly(np.zeros(len(idx)), inst).value == pytest.approx(math.pi, rel=1e-10)


def test_density_moment_examples():
    inst = one_d([1.0, 0.0, 1.0])
    std = GaussianMixture([1.0], [[0.0]], [[1.0]])
    np.testing.assert_allclose(density_moments(std, inst).values, [1, 0, 1])
    np.testing.assert_allclose(density_moments(std, inst, method="quadrature").values, [1, 0, 1], atol=1e-10)

    half = one_d([1.0, 1.0, 2.0], support="halfline")
    exp1 = GammaMixture([1.0], [[1.0]], [[1.0]])
    np.testing.assert_allclose(density_moments(exp1, half).values, [1, 1, 2])
    np.testing.assert_allclose(density_moments(exp1, half, method="quadrature").values, [1, 1, 2], rtol=1e-10)

    narrow = GaussianMixture([1.0], [[0.0]], [[1e-3]])
    np.testing.assert_allclose(density_moments(narrow, inst).values, [1, 0, 1e-6], rtol=1e-12)


def test_uniform_mixture_moments_quadrature_agrees():
    idx = IndexSet.full(1, 2)
    g = np.zeros(len(idx))
    g[idx.zero] = 1.0
    inst = ProblemInstance(idx, MomentSpec(idx, g), SupportRegion.box([-4.0], [4.0]), ReferenceWeight.constant())
    dens = UniformMixture([0.3, 0.7], [[-1.0], [0.5]], [[0.5], [2.0]])
    closed = density_moments(dens, inst).values
    quad = density_moments(dens, inst, method="quadrature").values
    np.testing.assert_allclose(quad, closed, rtol=1e-10, atol=1e-12)
    # first moment by hand: 0.3 * (-0.25) + 0.7 * 1.25
    assert closed[1] == pytest.approx(0.3 * -0.25 + 0.7 * 1.25)
