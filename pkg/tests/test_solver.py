import math

import numpy as np
import pytest

from tmoment.core import Polynomial
from tmoment.oracle import generate_instance
from tmoment.quadrature import leading_form_max
from tmoment.solver import (FEASIBLE_BOUNDARY, FEASIBLE_INTERIOR, INFEASIBLE, Certificate, DegeneratePolynomial,
                            maximize, polynomial_sup, reconstruct_density, verify_certificate)

from conftest import one_d

LAM_STAR = np.array([-0.5 * math.log(2 * math.pi), 0.0, 0.5])


def _monotone(trace, slack=1e-12):
    values = [r.value for r in trace]
    return all(b >= a - slack * max(1.0, abs(a)) for a, b in zip(values, values[1:]))


def test_gaussian_maximizer(gaussian):
    out = maximize(gaussian)
    assert out.status == FEASIBLE_INTERIOR
    np.testing.assert_allclose(out.lam_star, LAM_STAR, atol=1e-6)
    assert out.value == pytest.approx(-0.5 * math.log(2 * math.pi) - 0.5, abs=1e-8)
    np.testing.assert_allclose(out.achieved_moments.values, [1, 0, 1], atol=1e-6)
    assert _monotone(out.trace)


def test_negative_second_moment_is_infeasible():
    inst = one_d([1.0, 0.0, -1.0])
    out = maximize(inst)
    assert out.status == INFEASIBLE
    p = out.certificate.p.to_vector(inst.index_set)
    assert p[2] < 0
    assert out.certificate.riesz_value == pytest.approx(1.0, rel=1e-6)
    assert verify_certificate(out.certificate, inst)[0]


def test_dirac_moments_are_infeasible(dirac):
    out = maximize(dirac)
    assert out.status == INFEASIBLE
    c = out.certificate
    p = c.p.to_vector(dirac.index_set)
    assert p[2] < 0
    assert c.sign_check <= 1e-9
    assert c.riesz_value >= -1e-9
    assert verify_certificate(c, dirac)[0]


def test_exponential_moments_on_halfline():
    # rho = exp(-t^2) times exp(-t + t^2) is exactly Exp(1): the maximizer sits on the face where the
    # leading form is 0, so rounding may land the iterate on either side of it
    inst = one_d([1.0, 1.0, 2.0], support="halfline")
    out = maximize(inst)
    assert out.status in (FEASIBLE_INTERIOR, FEASIBLE_BOUNDARY)
    np.testing.assert_allclose(out.lam_star, [0.0, -1.0, 1.0], atol=1e-6)
    np.testing.assert_allclose(out.achieved_moments.values, [1, 1, 2], atol=1e-5)
    assert abs(leading_form_max(out.lam_star, inst.index_set, inst.weight, inst.support)) <= 1e-6


@pytest.mark.parametrize("p, accepted", [({(2,): -1.0}, None), ({(2,): 1.0}, False)])
def test_verify_certificate_examples(dirac, gaussian, p, accepted):
    cert = Certificate(Polynomial(1, p))
    if accepted is None:
        assert verify_certificate(cert, dirac)[0]
        assert not verify_certificate(Certificate(Polynomial(1, p)), gaussian)[0]
    else:
        ok, report = verify_certificate(cert, gaussian)
        assert not ok
        assert report["sign_check"] > 0


def test_verify_certificate_rejects_zero(gaussian):
    with pytest.raises(DegeneratePolynomial):
        verify_certificate(Certificate(Polynomial(1, {})), gaussian)


def test_reconstruct_density_gaussian(gaussian):
    samples, achieved = reconstruct_density(LAM_STAR, gaussian, [[0.0], [1.0]])
    np.testing.assert_allclose(achieved.values, [1, 0, 1], atol=1e-6)
    assert samples[0][1] == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert samples[1][1] == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi))


def test_polynomial_sup_one_dimension(gaussian):
    # 1 - (t - 2)^2 peaks at t = 2
    value, at = polynomial_sup(np.array([-3.0, 4.0, -1.0]), gaussian)
    assert value == pytest.approx(1.0)
    assert at[0] == pytest.approx(2.0)
    assert polynomial_sup(np.array([0.0, 0.0, 1.0]), gaussian)[0] == math.inf


def test_polynomial_sup_halfline():
    inst = one_d([1.0, 1.0, 2.0], support="halfline")
    value, at = polynomial_sup(np.array([0.0, -1.0, -1.0]), inst)
    assert value == pytest.approx(0.0) and at[0] == 0.0


def test_two_dimensional_gaussian_mixture_is_recovered():
    inst, _ = generate_instance(3, "gaussian", 1, n=2)
    out = maximize(inst)
    assert out.status == FEASIBLE_INTERIOR
    np.testing.assert_allclose(out.achieved_moments.values, inst.g, atol=1e-5)
    assert _monotone(out.trace)


def test_uniform_mixture_on_box_is_recovered():
    inst, _ = generate_instance(4, "uniform", 2)
    out = maximize(inst)
    assert out.status == FEASIBLE_INTERIOR
    np.testing.assert_allclose(out.achieved_moments.values, inst.g, atol=1e-5)


def test_perturbed_starts_agree(gaussian):
    rng = np.random.default_rng(7)
    ref = maximize(gaussian).lam_star
    for _ in range(3):
        start = gaussian.initial_point() + rng.uniform(-0.1, 0.1, 3)
        np.testing.assert_allclose(maximize(gaussian, start=start).lam_star, ref, atol=1e-5)


def test_report_json_is_complete(gaussian):
    out = maximize(gaussian)
    rep = out.to_json(gaussian)
    assert rep["status"] == FEASIBLE_INTERIOR
    assert len(rep["iterations"]) == len(out.trace)
    assert rep["certificate"] is None
