"""Ground truth: seeded Monte Carlo and exact Gaussian-moment conditional expectations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rng
from .errors import DomainError, UnsupportedFunctionalError, UsageError
from .functional import WienerFunctional, evaluate_terms, freeze_values
from .kernels import PathPrefix, as_time, interval_means, pp_integrate

__all__ = ["McConfig", "McEstimate", "mc_conditional_expectation", "gaussian_moment_expectation"]

CHUNK = 4096


@dataclass(frozen=True)
class McConfig:
    n: int
    seed: int = 0
    grid: int = 64
    antithetic: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("need at least 2 samples")
        if self.grid < 1:
            raise DomainError("continuation grid needs at least one step")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 bits")
        if self.antithetic and self.n < 2:
            raise DomainError("antithetic sampling needs n >= 2")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n: int
    nonfinite: int = 0

    @property
    def flagged(self) -> bool:
        return self.nonfinite > 0


def _stable_mean_var(x: np.ndarray):
    # shifted, exactly-rounded sums: independent of chunking and exact for constants
    x0 = float(x[0])
    d = x - x0
    mean = x0 + math.fsum(d) / len(x)
    with np.errstate(over="ignore"):
        sq = (x - mean) ** 2
    # huge but finite samples may square to inf; the standard error is then inf
    var = (math.inf if not np.all(np.isfinite(sq)) else math.fsum(sq) / (len(x) - 1)) if len(x) > 1 else 0.0
    return mean, var


def mc_conditional_expectation(F: WienerFunctional, path: PathPrefix, cfg: McConfig,
                               chunk: int = CHUNK) -> McEstimate:
    """Estimate ``E[F | F_t]`` by simulating Brownian continuations of ``path``.

    Increments on the continuation grid come from the keyed stream
    ``(seed, sample, time index)``, so the estimate does not depend on
    ``chunk``.  Non-finite samples are excluded from the mean and counted.
    """
    if F.free_vars:
        raise UsageError("Monte Carlo needs a functional without free variables")
    if path.horizon != F.horizon:
        raise DomainError("path horizon differs from functional horizon")
    t, T = path.t, F.horizon
    z0 = freeze_values(F, path)
    k = len(F.basis)
    if t == T or k == 0:
        v = float(evaluate_terms(F, z0))
        return McEstimate(v, 0.0, cfg.n, 0 if math.isfinite(v) else cfg.n)
    grid = [t + (T - t) * Fraction(j, cfg.grid) for j in range(cfg.grid + 1)]
    # continuation contribution to Z_i is sum_j mean_j(f_i) * dW_j
    A = np.stack([interval_means(f, grid) for f in F.basis], axis=1)  # (grid, k)
    sd = math.sqrt(float((T - t) / cfg.grid))
    n_draws = cfg.n // 2 if cfg.antithetic else cfg.n
    out = []
    for start in range(0, n_draws, chunk):
        m = min(chunk, n_draws - start)
        dW = rng.normal_block(cfg.seed, rng.TAG_CONTINUATION, start, m, 0, cfg.grid) * sd
        with np.errstate(over="ignore", invalid="ignore"):
            vals = evaluate_terms(F, z0 + dW @ A, check_overflow=False)
            if cfg.antithetic:
                vals = 0.5 * (vals + evaluate_terms(F, z0 - dW @ A, check_overflow=False))
        out.append(vals)
    x = np.concatenate(out)
    finite = np.isfinite(x)
    bad = int((~finite).sum())
    x = x[finite]
    if len(x) == 0:
        return McEstimate(float("nan"), float("nan"), 0, bad)
    mean, var = _stable_mean_var(x)
    used = 2 * len(x) if cfg.antithetic else len(x)
    return McEstimate(mean, math.sqrt(var / len(x)), used, bad)


# -- exact Gaussian moments -------------------------------------------------------------

def _normal_moment(n: int, m: float, s2: float) -> float:
    """``E[Y^n]`` for ``Y ~ N(m, s2)``."""
    return math.fsum(
        math.comb(n, k) * m ** (n - k) * s2 ** (k // 2) * _double_factorial(k - 1)
        for k in range(0, n + 1, 2)
    )


def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def gaussian_moment_expectation(F: WienerFunctional, path: PathPrefix, max_power: int = 12) -> float:
    """Exact ``E[F | F_t]`` for ``F = sum c * Z^n * exp(a Z^2 + b Z + c0)`` over a single kernel.

    Given ``F_t``, ``Z ~ N(mu, v)`` with ``mu`` the frozen value of ``Z`` along
    ``path`` and ``v = int_t^T f^2``; each term is a Gaussian integral in closed
    form (requires ``1 - 2 a v > 0``).
    """
    if F.free_vars:
        raise UnsupportedFunctionalError("functional has free variables")
    if len(F.basis) > 1:
        raise UnsupportedFunctionalError("only functionals of a single Gaussian integral are supported")
    if not F.basis:
        return float(sum(float(t.coeff) for t in F.terms))
    f = F.basis[0]
    mu = float(freeze_values(F, path)[0])
    v = float(pp_integrate(f * f, path.t, F.horizon))
    parts = []
    for term in F.terms:
        n = term.powers[0]
        if n > max_power:
            raise UnsupportedFunctionalError(f"power {n} exceeds {max_power}")
        a = float(term.exponent.quad[0][0])
        b = float(term.exponent.lin[0])
        c0 = float(term.exponent.const)
        if v == 0:
            parts.append(float(term.coeff) * mu**n * math.exp(a * mu * mu + b * mu + c0))
            continue
        prec = 1.0 / v - 2.0 * a
        if prec <= 0:
            raise UnsupportedFunctionalError("exponential moment does not exist (1 - 2 a v <= 0)")
        m2 = (mu / v + b) / prec
        log_scale = c0 + 0.5 * prec * m2 * m2 - mu * mu / (2 * v)
        scale = math.exp(log_scale) / math.sqrt(v * prec)
        parts.append(float(term.coeff) * scale * _normal_moment(n, m2, 1.0 / prec))
    return math.fsum(parts)
