from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothmart.errors import DomainError
from smoothmart.kernels import (
    PathPrefix,
    PiecewisePolynomial as PP,
    as_time,
    pp_arith,
    pp_evaluate,
    pp_integrate,
    stieltjes_along_prefix,
)


def step_kernel():
    # 1 on [0, 1/2), 2u on [1/2, 1]
    return PP((0, Fr(1, 2), 1), ((1,), (0, 2)))


def test_as_time_exact():
    assert as_time("3/8") == Fr(3, 8)
    assert as_time(0.25) == Fr(1, 4)
    assert as_time(1) == 1


def test_evaluate_examples():
    assert pp_evaluate(PP.constant(1, 1), Fr(3, 10)) == 1
    assert pp_evaluate(PP.time_to_maturity(1), Fr(1, 4)) == Fr(3, 4)
    assert pp_evaluate(step_kernel(), Fr(1, 2)) == 1
    assert pp_evaluate(step_kernel(), Fr(3, 4)) == Fr(3, 2)
    assert pp_evaluate(step_kernel(), 0.75) == pytest.approx(1.5)


@pytest.mark.parametrize("u", [-0.1, Fr(11, 10)])
def test_evaluate_out_of_range(u):
    with pytest.raises(DomainError):
        pp_evaluate(PP.constant(1, 1), u)


def test_integrate_examples():
    k = PP.time_to_maturity(1)
    assert pp_integrate(pp_arith(k, k, "multiply"), 0, 1) == Fr(1, 3)
    assert pp_integrate(PP.constant(0, 1), Fr(1, 5), Fr(3, 5)) == 0
    assert pp_integrate(PP.polynomial((0, 1), 1), 0, 1) == Fr(1, 2)
    assert pp_integrate(step_kernel(), 0, 1) == Fr(1, 2) + Fr(3, 4)


@pytest.mark.parametrize("a,b", [(Fr(1, 2), Fr(1, 4)), (-1, Fr(1, 2)), (0, 2)])
def test_integrate_bad_bounds(a, b):
    with pytest.raises(DomainError):
        pp_integrate(PP.constant(1, 1), a, b)


def test_arith_examples():
    k = PP.time_to_maturity(1)
    sq = pp_arith(k, k, "multiply")
    assert sq == PP.polynomial((1, -2, 1), 1)
    assert len(sq.segments) == 1
    assert pp_arith(k, PP.constant(0, 1), "add") == k
    merged = pp_arith(PP.indicator(Fr(1, 2), 1), PP.indicator(Fr(1, 3), 1), "add")
    assert merged.breakpoints == (0, Fr(1, 3), Fr(1, 2), 1)
    assert pp_arith(k, 3, "scale") == PP.polynomial((3, -3), 1)


def test_arith_mismatched_horizon():
    with pytest.raises(DomainError):
        pp_arith(PP.constant(1, 1), PP.constant(1, 2), "add")


def test_invariants_rejected():
    with pytest.raises(DomainError):
        PP((0, Fr(1, 2), Fr(1, 2), 1), ((1,), (1,), (1,)))
    with pytest.raises(DomainError):
        PP((Fr(1, 4), 1), ((1,),))
    with pytest.raises(DomainError):
        PP((0, 1), ((1,), (2,)))


def test_canonical_merge():
    a = PP((0, Fr(1, 2), 1), ((1,), (1, 0)))
    assert a == PP.constant(1, 1)
    assert hash(a) == hash(PP.constant(1, 1))


def test_tail_integral():
    k = PP.time_to_maturity(1)
    tail = k.tail_integral()
    for x in (0, Fr(1, 3), Fr(1, 2), 1):
        assert pp_evaluate(tail, x) == pp_integrate(k, x, 1)


def test_stieltjes_examples():
    path = PathPrefix.linear(Fr(1, 2), 1, 1.0, steps=16)
    assert stieltjes_along_prefix(PP.constant(1, 1), path) == pytest.approx(0.5, abs=1e-15)
    assert stieltjes_along_prefix(PP.time_to_maturity(1), path) == pytest.approx(0.375, abs=1e-15)
    zero = PathPrefix.zero(Fr(1, 2), 1, 4)
    assert stieltjes_along_prefix(step_kernel(), zero) == 0.0


@pytest.mark.parametrize("steps", [1, 3, 50])
def test_stieltjes_grid_independent_for_linear_path(steps):
    # exact for piecewise-linear paths, so any refinement of the line agrees
    path = PathPrefix.linear(Fr(3, 4), 1, 2.0, steps=steps)
    # int_0^{3/4} (1-u) * 2 du
    assert stieltjes_along_prefix(PP.time_to_maturity(1), path) == pytest.approx(2 * (0.75 - 0.75**2 / 2))


def test_path_validation():
    with pytest.raises(DomainError):
        PathPrefix([0, Fr(1, 2)], [0.1, 0.2], 1)
    with pytest.raises(DomainError):
        PathPrefix([0, Fr(1, 2), Fr(1, 4)], [0, 0.2, 0.3], 1)
    with pytest.raises(DomainError):
        PathPrefix([0, 2], [0, 0.2], 1)


def test_bumped_path_moves_endpoint_only():
    p = PathPrefix.line_to(Fr(1, 2), 0.3, 1)
    q = p.bumped(0.1)
    assert q.endpoint == pytest.approx(0.4)
    assert np.array_equal(p.values, q.values)


def test_round_trip_dict():
    f = step_kernel()
    assert PP.from_dict(f.to_dict()) == f


coef = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def kernels(draw):
    cuts = sorted(set(draw(st.lists(st.fractions(min_value=Fr(1, 20), max_value=Fr(19, 20), max_denominator=20), max_size=3))))
    bps = (Fr(0), *cuts, Fr(1))
    segs = tuple(tuple(draw(st.lists(coef, min_size=1, max_size=3))) for _ in range(len(bps) - 1))
    return PP(bps, segs)


@settings(max_examples=60, deadline=None)
@given(kernels(), kernels(), st.fractions(min_value=0, max_value=1, max_denominator=50))
def test_arith_pointwise(f, g, u):
    assert pp_evaluate(pp_arith(f, g, "add"), u) == pp_evaluate(f, u) + pp_evaluate(g, u)
    assert pp_evaluate(pp_arith(f, g, "multiply"), u) == pp_evaluate(f, u) * pp_evaluate(g, u)


@settings(max_examples=60, deadline=None)
@given(kernels(), st.fractions(min_value=0, max_value=1, max_denominator=30), st.fractions(min_value=0, max_value=1, max_denominator=30))
def test_integral_additive(f, a, b):
    a, b = min(a, b), max(a, b)
    assert pp_integrate(f, 0, a) + pp_integrate(f, a, b) == pp_integrate(f, 0, b)
