"""Built-in functionals and their closed-form conditional expectations.

The closed forms are written out directly (no Dyson or moment machinery), so
they serve as independent references for every method.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DomainError
from .functional import WienerFunctional, brownian, exp_quadratic, from_text, wf_scale
from .kernels import PathPrefix, PiecewisePolynomial, as_time

__all__ = ["example1", "example2", "monomial", "exp_brownian", "make_functional", "closed_form"]


def _exact_sqrt(q: Fraction):
    """``sqrt(q)`` as a Fraction when ``q`` is a rational square, else a float."""
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return math.sqrt(q)


def example1(tau, T) -> WienerFunctional:
    """``(tau - T)^(-1/2) exp(-W(T)^2 / (2 (tau - T)))`` for ``tau > T``."""
    tau, T = as_time(tau), as_time(T)
    if tau <= T:
        raise DomainError("example 1 needs tau > T")
    gap = tau - T
    G = exp_quadratic([PiecewisePolynomial.constant(1, T)], [[-1 / (2 * gap)]])
    return wf_scale(G, 1 / _exact_sqrt(gap))


def example2(T) -> WienerFunctional:
    """``exp(-int_0^T W(s) ds) = exp(-int_0^T (T - u) dW(u))``."""
    T = as_time(T)
    return exp_quadratic([PiecewisePolynomial.time_to_maturity(T)], [[0]], [-1])


def monomial(n: int, T) -> WienerFunctional:
    return brownian(T) ** n


def exp_brownian(T, a=1) -> WienerFunctional:
    """``exp(a W(T))``."""
    return exp_quadratic([PiecewisePolynomial.constant(1, T)], [[0]], [a])


_MONO = re.compile(r"^monomial\((\d+)\)$")
_EXPW = re.compile(r"^expW(?:\(([^)]+)\))?$")


def make_functional(spec, T, tau=None) -> tuple[str, WienerFunctional]:
    """Resolve a functional spec to ``(name, functional)``.

    ``spec`` is a built-in name (``example1``, ``example2``, ``monomial(n)``,
    ``expW`` or ``expW(a)``), or a dict with ``dsl`` (serialized text) or
    ``dsl_file``.
    """
    T = as_time(T)
    if isinstance(spec, str) and spec.lstrip().startswith("{"):
        import json

        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ConfigError("functional", str(exc)) from exc
    if isinstance(spec, dict):
        if "dsl" in spec:
            text = spec["dsl"] if isinstance(spec["dsl"], str) else _dump(spec["dsl"])
        elif "dsl_file" in spec:
            with open(spec["dsl_file"]) as fh:
                text = fh.read()
        else:
            raise ConfigError("functional", "expected 'dsl' or 'dsl_file'")
        try:
            F = from_text(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError("functional", f"bad DSL text: {exc}") from exc
        if F.horizon != T:
            raise ConfigError("functional", f"DSL horizon {F.horizon} differs from T={T}")
        return spec.get("name", "dsl"), F
    if not isinstance(spec, str):
        raise ConfigError("functional", f"cannot interpret {spec!r}")
    s = spec.replace(" ", "")
    if s == "example1":
        if tau is None:
            raise ConfigError("tau", "example1 needs tau")
        return s, example1(tau, T)
    if s == "example2":
        return s, example2(T)
    m = _MONO.match(s)
    if m:
        return s, monomial(int(m.group(1)), T)
    m = _EXPW.match(s)
    if m:
        return s, exp_brownian(T, Fraction(m.group(1)) if m.group(1) else 1)
    raise ConfigError("functional", f"unknown built-in {spec!r}")


def _dump(obj):
    import json

    return json.dumps(obj)


def _trapezoid(path: PathPrefix) -> float:
    t = np.array(path.times)
    v = np.asarray(path.values)
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t))) if len(t) > 1 else 0.0


def _gauss_moment(n: int, w: float, var: float) -> float:
    # E[(w + sqrt(var) N)^n]
    return math.fsum(
        math.comb(n, k) * w ** (n - k) * var ** (k // 2) * math.prod(range(k - 1, 0, -2))
        for k in range(0, n + 1, 2)
    )


def closed_form(name: str, path: PathPrefix, T, tau=None):
    """``E[F | F_t]`` for a built-in functional along ``path``; None if unknown."""
    T = as_time(T)
    t = float(path.t)
    w = path.endpoint
    if name == "example1":
        gap = float(as_time(tau)) - t
        return math.exp(-w * w / (2 * gap)) / math.sqrt(gap)
    if name == "example2":
        r = float(T) - t
        # a vertical jump at t moves W(t) but not the time integral
        return math.exp(-_trapezoid(path) - w * r + r**3 / 6)
    m = _MONO.match(name)
    if m:
        return _gauss_moment(int(m.group(1)), w, float(T) - t)
    m = _EXPW.match(name)
    if m:
        a = float(Fraction(m.group(1))) if m.group(1) else 1.0
        return math.exp(a * w + 0.5 * a * a * (float(T) - t))
    return None
