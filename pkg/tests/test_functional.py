import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothmart.builtins import example1, example2, exp_brownian, monomial
from smoothmart.errors import DomainError, NumericOverflowError, UsageError
from smoothmart.functional import (
    brownian,
    constant,
    evaluate_full_path,
    exp_quadratic,
    freeze_evaluate,
    from_text,
    gaussian_integral,
    malliavin_at_time,
    malliavin_derivative,
    malliavin_power,
    to_text,
    wf_build,
)
from smoothmart.kernels import PathPrefix, PiecewisePolynomial as PP

W = brownian(1)


def test_build_linear_is_brownian():
    assert wf_build("linear", PP.constant(1, 1)) == W
    assert gaussian_integral(PP.constant(1, 1)) == W


def test_build_power_and_products():
    sq = wf_build("power", W, 2)
    assert len(sq) == 1 and sq.terms[0].powers == (2,)
    assert sq.terms[0].exponent.is_zero()
    assert wf_build("product", W, W) == sq
    assert wf_build("sum", sq, wf_build("scale", sq, -1)).is_zero()


def test_build_example1_shape():
    F = example1(2, 1)
    assert len(F) == 1
    assert F.terms[0].exponent.quad == ((Fr(-1, 2),),)


def test_mixed_horizon_rejected():
    with pytest.raises(DomainError):
        brownian(1) + brownian(2)


def test_distinct_exponents_are_representable():
    F = exp_brownian(1) + exp_brownian(1, 2)
    assert len(F) == 2


def test_derivative_half_square():
    F = W * W * Fr(1, 2)
    D = malliavin_derivative(F, "s")
    path = PathPrefix.line_to(Fr(1, 2), 0.4, 1)
    assert freeze_evaluate(D, path, {"s": Fr(3, 4)}) == pytest.approx(0.4)
    # kernel 1[s <= T]: the indicator matters only below the horizon
    Wh = brownian(1, at=Fr(1, 2))
    Dh = malliavin_derivative(Wh, "s")
    p0 = PathPrefix.zero(Fr(1, 4), 1)
    assert freeze_evaluate(Dh, p0, {"s": Fr(1, 3)}) == 1
    assert freeze_evaluate(Dh, p0, {"s": Fr(3, 4)}) == 0


def test_second_derivative_example2():
    F = example2(1)
    D2 = malliavin_power(F, "s", 2)
    path = PathPrefix.linear(Fr(1, 2), 1, 1.0)
    Fv = freeze_evaluate(F, path)
    for s in (Fr(1, 2), Fr(2, 3), 1):
        assert freeze_evaluate(D2, path, {"s": s}) == pytest.approx(float((1 - s) ** 2) * Fv, rel=1e-14)


def test_derivative_of_constant():
    assert malliavin_derivative(constant(3, 1), "s").is_zero()


def test_derivative_adds_free_variable():
    D = malliavin_derivative(example2(1), "s")
    assert D.free_vars == ("s",)
    with pytest.raises(UsageError):
        malliavin_derivative(D, "s")


def test_malliavin_at_time_examples():
    full = PathPrefix.line_to(1, 0.7, 1)
    D = malliavin_at_time(W**3, 2, 1)
    assert evaluate_full_path(D, full) == pytest.approx(6 * 0.7)
    assert malliavin_at_time(W**3, 4, 1).is_zero()
    assert evaluate_full_path(malliavin_at_time(W**2, 1, 1), full) == pytest.approx(1.4)


def test_freeze_examples():
    F2 = example2(1)
    assert freeze_evaluate(F2, PathPrefix.zero(Fr(1, 3), 1)) == 1.0
    lin = PathPrefix.linear(Fr(1, 2), 1, 1.0, steps=5)
    assert freeze_evaluate(F2, lin) == pytest.approx(math.exp(-0.375), rel=1e-15)
    assert freeze_evaluate(example1(2, 1), PathPrefix.zero(0, 1)) == 1.0


def test_unbound_variable():
    D = malliavin_derivative(W**2, "s")
    with pytest.raises(UsageError):
        freeze_evaluate(D, PathPrefix.zero(0, 1))


def test_overflow_raises():
    F = exp_quadratic([PP.constant(1, 1)], [[1000]])
    with pytest.raises(NumericOverflowError):
        freeze_evaluate(F, PathPrefix.line_to(Fr(1, 2), 1.0, 1))


def test_full_path_examples():
    full = PathPrefix.line_to(1, 0.7, 1)
    assert evaluate_full_path(W, full) == pytest.approx(0.7)
    assert evaluate_full_path(W**2, full) == pytest.approx(0.49)
    lin = PathPrefix.linear(1, 1, 1.0, steps=7)
    assert evaluate_full_path(example2(1), lin) == pytest.approx(math.exp(-0.5), rel=1e-15)
    with pytest.raises(UsageError):
        evaluate_full_path(W, PathPrefix.zero(Fr(1, 2), 1))


@pytest.mark.parametrize("F", [W**3 + 2, example1(2, 1), example1(3, 1), example2(1), monomial(4, Fr(3, 2)),
                               malliavin_derivative(example2(1), "s")])
def test_text_round_trip(F):
    text = to_text(F)
    G = from_text(text)
    assert G == F
    assert to_text(G) == text


def test_from_text_rejects_garbage():
    with pytest.raises(ValueError):
        from_text("{not json")


@st.composite
def polys(draw):
    n = draw(st.integers(0, 4))
    a = draw(st.fractions(min_value=-2, max_value=2, max_denominator=5))
    c = draw(st.fractions(min_value=-3, max_value=3, max_denominator=5))
    return W**n * c + exp_brownian(1, a)


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), st.floats(-1.5, 1.5))
def test_product_rule(F, G, w):
    full = PathPrefix.line_to(1, w, 1)
    lhs = evaluate_full_path(malliavin_at_time(F * G, 1, 1), full)
    rhs = evaluate_full_path(malliavin_at_time(F, 1, 1) * G + F * malliavin_at_time(G, 1, 1), full)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(polys(), st.floats(-1.5, 1.5))
def test_round_trip_property(F, w):
    G = from_text(to_text(F))
    full = PathPrefix.line_to(1, w, 1)
    assert evaluate_full_path(G, full) == evaluate_full_path(F, full)
