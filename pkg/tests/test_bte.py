import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothmart.bte import BteConfig, backward_sweep, bte_step, gamma_coefficient, gamma_evaluate, truncation_bound
from smoothmart.builtins import exp_brownian, monomial
from smoothmart.errors import DomainError, ResourceError
from smoothmart.functional import brownian, constant, evaluate_full_path, freeze_evaluate
from smoothmart.kernels import PathPrefix

d, x = Fr(3, 7), Fr(-2, 5)


def test_gamma_low_orders():
    assert gamma_coefficient(0).as_dict() == {(0, 0): 1}
    assert gamma_coefficient(1).as_dict() == {(0, 1): -1}
    assert gamma_coefficient(2).as_dict() == {(0, 2): Fr(1, 2), (1, 0): Fr(1, 2)}
    assert gamma_coefficient(3)(d, x) == -x**3 / 6 - d * x / 2
    assert gamma_coefficient(4)(d, x) == x**4 / 24 + d * x**2 / 4 + d**2 / 8


@pytest.mark.parametrize("l", range(9))
def test_gamma_structure(l):
    g = gamma_coefficient(l)
    assert g.x_degree() == l
    assert g(d, -x) == (-1) ** l * g(d, x)
    frozen = g(d, 0)
    expected = (d / 2) ** (l // 2) / math.factorial(l // 2) if l % 2 == 0 else 0
    assert frozen == expected


@pytest.mark.parametrize("n", [1, 2, 5, 64])
def test_gamma_frozen_values(n):
    assert gamma_evaluate(2, Fr(1, n), 0) == Fr(1, 2 * n)
    assert gamma_evaluate(4, Fr(1, n), 0) == Fr(1, 8 * n * n)
    assert gamma_evaluate(3, Fr(1, n), 0) == 0
    assert gamma_evaluate(1, 0.25, 0.1) == pytest.approx(-0.1)


def test_gamma_bad_inputs():
    with pytest.raises(DomainError):
        gamma_coefficient(-1)
    with pytest.raises(DomainError):
        gamma_evaluate(2, 0, 0.1)


def test_gamma_array_matches_scalar():
    xs = np.linspace(-2, 2, 9)
    for l in range(6):
        arr = gamma_coefficient(l).evaluate_array(0.3, xs)
        assert arr == pytest.approx([gamma_evaluate(l, 0.3, float(v)) for v in xs], abs=1e-14)


@pytest.mark.parametrize("dW", [0.0, 0.37, -1.3])
def test_step_cubic_exact(dW):
    t, w = Fr(1, 4), 0.6
    G = bte_step(monomial(3, 1), 1, 1 - t, dW, 3)
    prefix = PathPrefix.line_to(t, w, 1)
    full = prefix.extended([1], [w + dW])
    assert evaluate_full_path(G, full) == pytest.approx(w**3 + 3 * 0.75 * w, rel=1e-13)


def test_step_constant_and_linear():
    assert bte_step(constant(5, 1), 1, Fr(1, 2), 0.3, 2) == constant(5, 1)
    G = bte_step(brownian(1), 1, Fr(1, 2), 0.3, 1)
    full = PathPrefix.line_to(Fr(1, 2), 0.2, 1).extended([1], [0.5])
    assert evaluate_full_path(G, full) == pytest.approx(0.2)


def test_sweep_square_frozen():
    cfg = BteConfig(4, Fr(1, 4), 2)
    assert backward_sweep(monomial(2, 1), cfg, PathPrefix.zero(0, 1)) == 1.0


def test_sweep_constant():
    assert backward_sweep(constant(Fr(7, 3), 1), BteConfig(3, Fr(1, 3), 1), PathPrefix.zero(0, 1)) == pytest.approx(7 / 3)


def test_sweep_chosen_path():
    cfg = BteConfig(3, Fr(1, 3), 4, increments=(0.3, -0.8, 1.1))
    assert backward_sweep(monomial(4, 1), cfg, PathPrefix.zero(0, 1)) == pytest.approx(3.0, rel=1e-12)


def test_sweep_exp_rate():
    # frozen scheme, L=2: each step is (1 + delta/2) on exp(W), so the global error halves with delta
    errs = [abs(backward_sweep(exp_brownian(1), BteConfig(m, Fr(1, m), 2), PathPrefix.zero(0, 1)) - math.exp(0.5))
            for m in (8, 16, 32)]
    assert errs[0] == pytest.approx(math.exp(0.5) - (1 + 1 / 16) ** 8, rel=1e-12)
    assert 1.8 < errs[0] / errs[1] < 2.2 and 1.8 < errs[1] / errs[2] < 2.2


def test_sweep_span_mismatch():
    with pytest.raises(DomainError):
        backward_sweep(monomial(2, 1), BteConfig(3, Fr(1, 4), 2), PathPrefix.zero(0, 1))


def test_sweep_term_cap():
    with pytest.raises(ResourceError, match="step"):
        backward_sweep(monomial(6, 1), BteConfig(4, Fr(1, 4), 6, term_cap=2), PathPrefix.zero(0, 1))


def test_truncation_bound():
    assert truncation_bound(1, 0.5, 1) == pytest.approx(0.25)
    assert truncation_bound(0, 0.5, 3) == 0
    for L in range(6):
        assert truncation_bound(1, 0.5, L + 1) <= truncation_bound(1, 0.5, L) / 2
    with pytest.raises(DomainError):
        truncation_bound(1, 1.0, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.fractions(Fr(0), Fr(9, 10), max_denominator=20), st.floats(-1, 1), st.floats(-2, 2))
def test_single_step_exact_for_monomials(n, t, w, dW):
    if t == 0:
        w = 0.0
    F = monomial(n, 1)
    G = bte_step(F, 1, 1 - t, dW, n)
    full = PathPrefix.line_to(t, w, 1).extended([1], [w + dW]) if t > 0 else PathPrefix.line_to(1, dW, 1)
    # E[W(1)^n | W(t)=w] by binomial Gaussian moments
    s2 = float(1 - t)
    ref = sum(math.comb(n, k) * w ** (n - k) * (s2 ** (k // 2) * math.prod(range(k - 1, 0, -2)) if k % 2 == 0 else 0)
              for k in range(n + 1))
    assert evaluate_full_path(G, full) == pytest.approx(ref, rel=1e-12, abs=1e-12)
