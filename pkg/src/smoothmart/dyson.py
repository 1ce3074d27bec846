"""Truncated time-ordered exponential ``T exp(1/2 int_t^T D_s^2 ds) F(omega^t)``.

Order ``k`` of the series is

    (1/2)^k  int_{t <= s_1 <= ... <= s_k <= T}  D_{s_1}^2 ... D_{s_k}^2 F(omega^t) ds,

with the innermost operator ``D_{s_k}^2`` applied first.  Because the time
dependence of every term is a product of univariate kernels, the simplex
integral is done exactly, innermost variable first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, ResourceError
from .functional import (
    WienerFunctional,
    evaluate_terms,
    freeze_evaluate,
    freeze_values,
    malliavin_at_time,
    malliavin_power,
)
from .kernels import PathPrefix, PiecewisePolynomial, as_time, pp_integrate

__all__ = [
    "DysonReport",
    "simplex_integral",
    "dyson_term",
    "dyson_evaluate",
    "ppde_evaluate",
    "vertical_derivative_check",
]

DEFAULT_ORDER = 10
DEFAULT_TERM_CAP = 10**6


@dataclass
class DysonReport:
    order: int
    term_values: list[float]
    partial_sums: list[float]
    stop_reason: str  # "reached-K" or "tolerance-met"
    tolerance: float | None = None
    term_counts: list[int] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.partial_sums[-1]


def simplex_integral(factors, t, chains: dict | None = None) -> Fraction:
    """``int_{t <= s_1 <= ... <= s_k <= T} prod_v factors[v](s_v)``.

    ``factors[0]`` belongs to the innermost (largest) variable ``s_k``,
    ``factors[-1]`` to the outermost ``s_1``.  ``chains`` memoizes the nested
    tail integrals by factor prefix; successive Dyson orders share prefixes.
    """
    t = as_time(t)
    factors = tuple(factors)
    if not factors:
        return Fraction(1)
    chains = {} if chains is None else chains
    inner = _chain(factors[:-1], chains)
    last = factors[-1] if inner is None else factors[-1] * inner
    return pp_integrate(last, t, last.horizon)


def _chain(prefix: tuple, chains: dict):
    """Kernel ``x -> int_{x <= s_{j} <= ... <= T} prod prefix`` (None for an empty prefix)."""
    if not prefix:
        return None
    hit = chains.get(prefix)
    if hit is None:
        inner = _chain(prefix[:-1], chains)
        g = prefix[-1] if inner is None else prefix[-1] * inner
        hit = chains[prefix] = g.tail_integral()
    return hit


class _Series:
    """Iterated ``D^2`` applications of one functional, built lazily."""

    def __init__(self, F: WienerFunctional, term_cap: int):
        if F.free_vars:
            raise DomainError("the Dyson series needs a functional without free variables")
        self.levels = [F]
        self.term_cap = term_cap

    def level(self, k: int) -> WienerFunctional:
        while len(self.levels) <= k:
            j = len(self.levels)
            G = malliavin_power(self.levels[-1], f"s{j}", 2)
            if len(G) > self.term_cap:
                raise ResourceError(f"Dyson order {j}: {len(G)} terms exceed cap {self.term_cap}")
            self.levels.append(G)
        return self.levels[k]


def _term_value(G: WienerFunctional, k: int, path: PathPrefix, cache: dict) -> float:
    if G.is_zero():
        return 0.0
    t = path.t
    chains = cache.setdefault("chains", {})
    weights = []
    for term in G.terms:
        key = term.factors
        if key not in cache:
            cache[key] = simplex_integral(term.factors, t, chains)
        weights.append(cache[key])
    z = freeze_values(G, path)
    return float(evaluate_terms(G, z, weights)) / 2**k


def dyson_term(F: WienerFunctional, t, path: PathPrefix, k: int, term_cap: int = DEFAULT_TERM_CAP) -> float:
    """Order-``k`` term of the Dyson series along the frozen path."""
    _check_time(F, t, path)
    if k < 0:
        raise DomainError("order must be >= 0")
    if k == 0:
        return freeze_evaluate(F, path)
    return _term_value(_Series(F, term_cap).level(k), k, path, {})


def _check_time(F, t, path):
    t = as_time(t)
    if path.t != t:
        raise DomainError(f"path ends at {path.t}, expected t={t}")
    if not 0 <= t <= F.horizon:
        raise DomainError(f"t={t} outside [0, {F.horizon}]")


def dyson_evaluate(F: WienerFunctional, t, path: PathPrefix, order: int = DEFAULT_ORDER, tol=None,
                   term_cap: int = DEFAULT_TERM_CAP) -> DysonReport:
    """Partial sums of the Dyson series up to ``order``.

    With ``tol``, stops once two consecutive terms are below
    ``tol * max(1, |partial sum|)``.
    """
    _check_time(F, t, path)
    if order < 0:
        raise DomainError("order must be >= 0")
    series = _Series(F, term_cap)
    cache: dict = {}
    terms, sums, counts = [], [], []
    small = 0
    reason = "reached-K"
    for k in range(order + 1):
        G = series.level(k)
        v = freeze_evaluate(F, path) if k == 0 else _term_value(G, k, path, cache)
        terms.append(v)
        sums.append(v if k == 0 else sums[-1] + v)
        counts.append(len(G))
        if tol is not None:
            small = small + 1 if abs(v) < tol * max(1.0, abs(sums[-1])) else 0
            if small >= 2:
                reason = "tolerance-met"
                break
    return DysonReport(len(terms) - 1, terms, sums, reason, tol, counts)


def ppde_evaluate(G: WienerFunctional, t, path: PathPrefix, order: int = DEFAULT_ORDER, tol=None) -> float:
    """Solution ``v(x_t, t)`` of the path-dependent heat equation with terminal functional ``G``."""
    return dyson_evaluate(G, t, path, order, tol).value


def vertical_derivative_check(G: WienerFunctional, t, path: PathPrefix, order: int, h: float,
                              K: int = DEFAULT_ORDER, tol=None):
    """Compare a finite-difference vertical derivative of the PPDE solution with
    the Dyson evaluation of ``D_t^order G``.

    Returns ``(finite_difference, malliavin)``.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    if h <= 0:
        raise DomainError("bump size must be positive")
    up = ppde_evaluate(G, t, path.bumped(h), K, tol)
    down = ppde_evaluate(G, t, path.bumped(-h), K, tol)
    if order == 1:
        fd = (up - down) / (2 * h)
    else:
        mid = ppde_evaluate(G, t, path, K, tol)
        fd = (up - 2 * mid + down) / (h * h)
    mall = ppde_evaluate(malliavin_at_time(G, order, t), t, path, K, tol)
    return fd, mall
