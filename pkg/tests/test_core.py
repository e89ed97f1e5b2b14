import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmoment.core import (IndexOutOfSpan, IndexSet, MissingTopDiagonal, MissingZeroIndex, MomentSpec, NotRegular,
                          OddMaxDegree, Polynomial, ReferenceWeight, SupportRegion, WeightError, polynomial_eval,
                          riesz_apply, sigma, support_contains, validate_index_set)

from conftest import one_d


def test_full_one_dimensional_set_is_valid():
    idx = validate_index_set([(0,), (1,), (2,)])
    assert idx.k == 1 and idx.n == 1


def test_missing_coordinate_projection_is_not_regular():
    with pytest.raises(NotRegular) as err:
        validate_index_set([(0, 0), (1, 1)])
    assert err.value.index == (1, 1)
    assert err.value.missing == (1, 0)


def test_full_degree_two_set_in_the_plane():
    idx = validate_index_set([i for i in itertools.product(range(3), repeat=2) if sum(i) <= 2])
    assert idx.k == 1
    assert len(idx) == 6


def test_odd_top_degree_rejected():
    with pytest.raises(OddMaxDegree):
        validate_index_set([(0,), (1,), (2,), (3,)])


def test_zero_index_required():
    with pytest.raises(MissingZeroIndex):
        validate_index_set([(1,), (2,)])


def test_top_diagonal_required():
    # regular and even, but X2^2 is missing
    with pytest.raises(MissingTopDiagonal):
        validate_index_set([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)])


def test_grlex_order_is_canonical():
    a = validate_index_set([(0, 2), (1, 1), (0, 0), (2, 0), (1, 0), (0, 1)])
    b = IndexSet.full(2, 1)
    assert a.indices == b.indices
    assert a.indices[:3] == ((0, 0), (1, 0), (0, 1))


@pytest.mark.parametrize("i, expected", [
    ((2, 1), {(0, 0), (2, 0), (0, 1), (2, 1)}),
    ((0, 0), {(0, 0)}),
    ((3, 0, 2), {(0, 0, 0), (3, 0, 0), (0, 0, 2), (3, 0, 2)}),
])
def test_sigma_examples(i, expected):
    assert sigma(i) == expected


@given(st.lists(st.integers(0, 4), min_size=1, max_size=4))
def test_sigma_size_and_closure(i):
    s = sigma(tuple(i))
    assert len(s) == 2 ** sum(1 for e in i if e)
    assert tuple(i) in s and (0,) * len(i) in s
    for j in s:
        assert sigma(j) <= s


@given(st.integers(1, 3), st.integers(1, 3))
def test_full_sets_are_regular(n, k):
    idx = IndexSet.full(n, k)
    for i in idx:
        assert sigma(i) <= set(idx.indices)


def test_riesz_examples():
    g = one_d([1.0, 0.0, 1.0]).moments
    assert riesz_apply(g, Polynomial(1, {(2,): 1.0})) == 1.0
    a = 2.0
    p = Polynomial(1, {(2,): 1.0, (1,): -2 * a, (0,): a * a})
    assert riesz_apply(g, p) == pytest.approx(1 + a * a)
    assert riesz_apply(g, p) == pytest.approx(5.0)
    assert riesz_apply(g, Polynomial(1, {})) == 0.0


def test_riesz_rejects_coefficients_outside_span():
    g = one_d([1.0, 0.0, 1.0]).moments
    with pytest.raises(IndexOutOfSpan):
        riesz_apply(g, Polynomial(1, {(3,): 1.0}))


@settings(max_examples=50)
@given(st.lists(st.floats(-10, 10), min_size=5, max_size=5), st.lists(st.floats(-10, 10), min_size=5, max_size=5),
       st.floats(-5, 5), st.floats(-5, 5))
def test_riesz_is_linear(c1, c2, a, b):
    g = one_d([1.0, 0.3, 1.2, -0.4, 3.0]).moments
    idx = g.index_set
    p, q = Polynomial.from_vector(idx, c1), Polynomial.from_vector(idx, c2)
    lhs = riesz_apply(g, a * p + b * q)
    rhs = a * riesz_apply(g, p) + b * riesz_apply(g, q)
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)))


def test_polynomial_eval_examples():
    assert polynomial_eval(Polynomial(2, {(2, 1): 1.0}), (2.0, 3.0)) == 12.0
    assert polynomial_eval(Polynomial(3, {(0, 0, 0): 1.0}), (0.3, -7.0, 2.0)) == 1.0
    assert polynomial_eval(Polynomial(1, {(2,): 1.0, (1,): -2.0, (0,): 1.0}), (1.0,)) == 0.0


def test_polynomial_eval_rows():
    p = Polynomial(1, {(2,): 1.0})
    np.testing.assert_allclose(polynomial_eval(p, [[1.0], [2.0], [-3.0]]), [1.0, 4.0, 9.0])


def test_polynomial_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        polynomial_eval(Polynomial(2, {(1, 0): 1.0}), (1.0,))


def test_polynomial_str():
    assert str(Polynomial(1, {(2,): -1.0, (0,): 0.5})) == "+0.5 -1*X^2"
    assert str(Polynomial(2, {})) == "0"


def test_support_contains_examples():
    assert support_contains(SupportRegion.box([0, 0], [1, 1]), (1.0, 1.0))
    assert not support_contains(SupportRegion.orthant(2), (-0.1, 0.0))
    assert support_contains(SupportRegion.full(3), (1e9, -1e9, 0.0))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_support_contains_matches_definitions(x, y):
    t = (x, y)
    assert support_contains(SupportRegion.box([-1, -2], [1, 2]), t) == (-1 <= x <= 1 and -2 <= y <= 2)
    assert support_contains(SupportRegion.orthant(2), t) == (x >= 0 and y >= 0)
    assert support_contains(SupportRegion.ball(1.5, [0, 0]), t) == (x * x + y * y <= 2.25)
    half = SupportRegion.halfspaces([[1.0, 1.0]], [1.0])
    assert support_contains(half, t) == (x + y <= 1.0)


def test_support_json_round_trip():
    for T in (SupportRegion.full(2), SupportRegion.orthant(1), SupportRegion.box([0, -1], [2, 1]),
              SupportRegion.ball(2.0, [0.5, 0.5]), SupportRegion.halfspaces([[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0])):
        assert SupportRegion.from_json(T.to_json(), T.n) == T


def test_moments_must_be_normalized():
    idx = IndexSet.full(1, 1)
    with pytest.raises(ValueError):
        MomentSpec.from_mapping(idx, {(0,): 2.0, (1,): 0.0, (2,): 1.0})


def test_constant_weight_needs_bounded_support():
    with pytest.raises(WeightError):
        one_d([1.0, 0.0, 1.0], weight=ReferenceWeight.constant())


def test_weight_coefficients_follow_the_index_set():
    inst = one_d([1.0, 0.0, 1.0, 0.0, 3.0])
    np.testing.assert_array_equal(inst.weight_coefficients, [0, 0, 0, 0, -1])
    t = np.linspace(-2, 2, 9)[:, None]
    np.testing.assert_allclose(inst.weight.log_density(t, 2), -t[:, 0] ** 4)


def test_norm_power_log_in_two_dimensions():
    # -(x^2 + y^2)^2 = -x^4 - 2 x^2 y^2 - y^4
    poly = ReferenceWeight.norm_power().polynomial_log(2, 2)
    assert poly == {(4, 0): -1.0, (2, 2): -2.0, (0, 4): -1.0}


def test_initial_point_sets_top_diagonal():
    inst = one_d([1.0, 0.0, 1.0, 0.0, 3.0])
    np.testing.assert_array_equal(inst.initial_point(), [0, 0, 0, 0, -1])
