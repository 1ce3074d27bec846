"""Backward Taylor expansion of discrete-time Brownian martingales.

One step from ``t`` to ``t + delta`` writes

    E[F | F_t] = sum_l Gamma_l(delta, dW) * E[D^l_{t+delta} F | F_{t+delta}],

with universal polynomials ``Gamma_l`` in the step size and the increment of
the chosen backward path.  Chaining steps backward gives the multi-index sum
evaluated by :func:`backward_sweep`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError, ResourceError, UsageError
from .functional import WienerFunctional, evaluate_full_path, freeze_evaluate, malliavin_at_time, wf_scale, wf_sum
from .kernels import PathPrefix, as_time

__all__ = [
    "GammaPolynomial",
    "BteConfig",
    "gamma_coefficient",
    "gamma_evaluate",
    "bte_step",
    "backward_sweep",
    "truncation_bound",
]

DEFAULT_TERM_CAP = 10**6


@dataclass(frozen=True)
class GammaPolynomial:
    """``Gamma_l`` as ``{(i, j): c}`` meaning ``c * delta**i * x**j``."""

    order: int
    coeffs: tuple[tuple[tuple[int, int], Fraction], ...]

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def __call__(self, delta, x):
        """Evaluate; exact when both arguments are rational."""
        exact = all(isinstance(v, (int, Fraction)) for v in (delta, x))
        if exact:
            return sum((c * Fraction(delta) ** i * Fraction(x) ** j for (i, j), c in self.coeffs), Fraction(0))
        d, xx = float(delta), float(x)
        return math.fsum(float(c) * d**i * xx**j for (i, j), c in self.coeffs)

    def evaluate_array(self, delta: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for (i, j), c in self.coeffs:
            out += float(c) * float(delta) ** i * x**j
        return out

    def x_degree(self) -> int:
        return max((j for (_, j), _ in self.coeffs), default=-1)

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for (i, j), c in sorted(self.coeffs, key=lambda kv: (-kv[0][1], kv[0][0])):
            mono = "*".join(s for s in (f"delta^{i}" if i > 1 else "delta" if i else "", f"x^{j}" if j > 1 else "x" if j else "") if s)
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            k = (i1 + i2, j1 + j2)
            out[k] = out.get(k, 0) + c1 * c2
    return {k: v for k, v in out.items() if v != 0}


@lru_cache(maxsize=None)
def gamma_coefficient(order: int) -> GammaPolynomial:
    """Exact ``Gamma_order(delta, x)`` from the recursion

    ``Gamma_L = 1{L even} (delta/2)^(L/2) / (L/2)! - sum_{l<L} Gamma_l x^(L-l) / (L-l)!``.

    Cached; concurrent first use only recomputes the same value.
    """
    if order < 0:
        raise DomainError("order must be >= 0")
    if order == 0:
        return GammaPolynomial(0, (((0, 0), Fraction(1)),))
    acc: dict = {}
    if order % 2 == 0:
        h = order // 2
        acc[(h, 0)] = Fraction(1, 2**h * math.factorial(h))
    for l in range(order):
        g = gamma_coefficient(l).as_dict()
        term = _poly_mul(g, {(0, order - l): Fraction(1, math.factorial(order - l))})
        for k, v in term.items():
            acc[k] = acc.get(k, 0) - v
    items = tuple(sorted((k, v) for k, v in acc.items() if v != 0))
    return GammaPolynomial(order, items)


def gamma_evaluate(order: int, delta, dW):
    """``Gamma_order(delta, dW)``; float unless both inputs are rational."""
    if (isinstance(delta, (int, Fraction)) and delta <= 0) or (not isinstance(delta, (int, Fraction)) and float(delta) <= 0):
        raise DomainError("step size must be positive")
    return gamma_coefficient(order)(delta, dW)


@dataclass(frozen=True)
class BteConfig:
    """Uniform backward grid ``t + k*delta``, ``k = 1..steps``.

    ``increments`` is the chosen backward path: ``None`` for the frozen
    (certainty-equivalent) path with zero increments, otherwise one increment
    per step in forward order.
    """

    steps: int
    delta: Fraction
    order: int
    increments: tuple | None = None
    term_cap: int = DEFAULT_TERM_CAP

    def __post_init__(self):
        object.__setattr__(self, "delta", as_time(self.delta))
        if self.steps < 1:
            raise DomainError("need at least one step")
        if self.delta <= 0:
            raise DomainError("step size must be positive")
        if self.order < 0:
            raise DomainError("truncation order must be >= 0")
        if self.increments is not None:
            inc = tuple(self.increments)
            if len(inc) != self.steps:
                raise DomainError(f"expected {self.steps} increments, got {len(inc)}")
            object.__setattr__(self, "increments", inc)

    @property
    def frozen(self) -> bool:
        return self.increments is None

    def increment(self, k: int):
        """Increment of step ``k`` (1-based, forward order)."""
        return Fraction(0) if self.increments is None else self.increments[k - 1]


def bte_step(F: WienerFunctional, step_end, delta, dW, order: int) -> WienerFunctional:
    """``sum_{l<=order} Gamma_l(delta, dW) * D^l_{step_end} F`` as a functional.

    Evaluating the result on a path with ``W(step_end) - W(step_end - delta) = dW``
    approximates ``E[F | F_{step_end - delta}]``; exact when ``D^{order+1} F = 0``.
    """
    step_end = as_time(step_end)
    if not 0 < step_end <= F.horizon:
        raise DomainError(f"step end {step_end} outside (0, {F.horizon}]")
    if F.free_vars:
        raise UsageError("bte_step needs a functional without free variables")
    out = None
    D = F
    for l in range(order + 1):
        if l:
            D = malliavin_at_time(D, 1, step_end)
        if D.is_zero():
            break
        g = gamma_evaluate(l, delta, dW)
        if g == 0:
            continue
        piece = wf_scale(D, g)
        out = piece if out is None else wf_sum(out, piece)
    return out if out is not None else wf_scale(F, 0)


def backward_sweep(F: WienerFunctional, cfg: BteConfig, path: PathPrefix, return_functional=False):
    """Apply :func:`bte_step` from ``T`` back to ``t = path.t`` and evaluate.

    With the frozen path the result is ``G(omega^t)``; with chosen increments
    the prefix is extended linearly through ``W(t) + cumsum(increments)`` and
    the result is evaluated on that full path.
    """
    if F.free_vars:
        raise UsageError("backward_sweep needs a functional without free variables")
    t = path.t
    if t + cfg.steps * cfg.delta != F.horizon:
        raise DomainError(f"steps*delta = {cfg.steps * cfg.delta} does not span [{t}, {F.horizon}]")
    G = F
    for k in range(cfg.steps, 0, -1):
        G = bte_step(G, t + k * cfg.delta, cfg.delta, cfg.increment(k), cfg.order)
        if len(G) > cfg.term_cap:
            raise ResourceError(f"term count {len(G)} exceeds cap {cfg.term_cap} at step {k} (time {t + k * cfg.delta})")
    if cfg.frozen:
        value = freeze_evaluate(G, path)
    else:
        times = [t + k * cfg.delta for k in range(1, cfg.steps + 1)]
        values = path.endpoint + np.cumsum([float(x) for x in cfg.increments])
        value = evaluate_full_path(G, path.extended(times, values))
    return (value, G) if return_functional else value


def truncation_bound(bound_m: float, delta: float, order: int) -> float:
    """Mean-square truncation bound ``delta^(L+1)/(L+1)! * M/(1 - delta)``."""
    if not 0 < delta < 1:
        raise DomainError("bound needs 0 < delta < 1")
    if bound_m < 0:
        raise DomainError("bound_m must be nonnegative")
    return delta ** (order + 1) / math.factorial(order + 1) * bound_m / (1 - delta)
