"""Exact piecewise-polynomial time kernels and pathwise stochastic integrals.

Kernels live on ``[0, T]`` with rational breakpoints and rational coefficients
(stored in the global variable ``u``, index = degree).  Evaluation at an
interior breakpoint uses the segment to the *left*, so ``1[s <= a]`` is a
constant segment on ``[0, a]`` followed by a zero segment.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real
from typing import Sequence

import numpy as np

from .errors import DomainError, UsageError

__all__ = [
    "as_time",
    "PiecewisePolynomial",
    "PathPrefix",
    "pp_evaluate",
    "pp_integrate",
    "pp_arith",
    "stieltjes_along_prefix",
    "interval_means",
]


def as_time(x) -> Fraction:
    """Convert ``x`` to an exact rational.

    Accepts ints, Fractions, strings such as ``"3/8"`` or ``"0.25"``, and floats
    (converted exactly, so ``0.1`` becomes its binary value).
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a time")
    if isinstance(x, (int, Rational, str)):
        return Fraction(x)
    if isinstance(x, Real):
        if not np.isfinite(float(x)):
            raise DomainError(f"non-finite time {x!r}")
        return Fraction(float(x))
    raise TypeError(f"cannot interpret {x!r} as a time")


# -- dense coefficient-tuple helpers -----------------------------------------

def _trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))


def _pmul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim(out)


def _peval(c, u):
    acc = 0
    for x in reversed(c):
        acc = acc * u + x
    return acc


def _pantideriv(c):
    return (Fraction(0),) + tuple(Fraction(x) / (k + 1) for k, x in enumerate(c))


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Exact univariate piecewise polynomial on ``[0, T]``.

    Instances are canonical: adjacent equal segments are merged and trailing
    zero coefficients dropped, so structural equality is mathematical
    equality (up to values at breakpoints, which left-continuity pins down).
    """

    breakpoints: tuple[Fraction, ...]
    segments: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        bps = tuple(as_time(b) for b in self.breakpoints)
        segs = tuple(_trim(Fraction(c) for c in s) for s in self.segments)
        if len(bps) < 2:
            raise DomainError("need at least the breakpoints 0 and T")
        if bps[0] != 0:
            raise DomainError("first breakpoint must be 0")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if len(segs) != len(bps) - 1:
            raise DomainError("segment count must equal breakpoint count - 1")
        # canonical merge of equal neighbours
        mb, ms = [bps[0]], []
        for b, s in zip(bps[1:], segs):
            if ms and ms[-1] == s:
                mb[-1] = b
            else:
                ms.append(s)
                mb.append(b)
        object.__setattr__(self, "breakpoints", tuple(mb))
        object.__setattr__(self, "segments", tuple(ms))

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, c, horizon) -> "PiecewisePolynomial":
        return cls((0, as_time(horizon)), ((Fraction(c),),))

    @classmethod
    def polynomial(cls, coeffs: Sequence, horizon) -> "PiecewisePolynomial":
        """Single-segment kernel ``sum coeffs[k] u**k``."""
        return cls((0, as_time(horizon)), (tuple(Fraction(c) for c in coeffs),))

    @classmethod
    def indicator(cls, a, horizon) -> "PiecewisePolynomial":
        """``1[u <= a]``; with ``a = T`` this is the constant 1."""
        a, T = as_time(a), as_time(horizon)
        if not 0 <= a <= T:
            raise DomainError(f"indicator cut {a} outside [0, {T}]")
        if a == T:
            return cls.constant(1, T)
        if a == 0:
            # only u = 0 would be covered; a zero kernel in L2
            return cls.constant(0, T)
        return cls((0, a, T), ((Fraction(1),), ()))

    @classmethod
    def time_to_maturity(cls, horizon) -> "PiecewisePolynomial":
        """The kernel ``T - u``."""
        T = as_time(horizon)
        return cls.polynomial((T, -1), T)

    # -- basic properties --------------------------------------------------
    @property
    def horizon(self) -> Fraction:
        return self.breakpoints[-1]

    @property
    def degree(self) -> int:
        return max((len(s) - 1 for s in self.segments), default=-1)

    def is_zero(self) -> bool:
        return all(not s for s in self.segments)

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.breakpoints, self.segments))
            object.__setattr__(self, "_hash", h)
        return h

    def sort_key(self):
        return (self.breakpoints, self.segments)

    def _segment_index(self, u) -> int:
        # left-continuity: u in (b_i, b_{i+1}] -> i, u = 0 -> 0
        i = bisect.bisect_left(self.breakpoints, u) - 1
        return max(i, 0)

    def __call__(self, u):
        return pp_evaluate(self, u)

    # -- arithmetic --------------------------------------------------------
    def _check_horizon(self, other):
        if self.horizon != other.horizon:
            raise DomainError(f"horizon mismatch: {self.horizon} vs {other.horizon}")

    def _refined(self, bps):
        """Segments of ``self`` re-expressed on the finer breakpoint list ``bps``."""
        out = []
        for a in bps[:-1]:
            # a is a left end, so the segment containing (a, next] is the one right of a
            i = bisect.bisect_right(self.breakpoints, a) - 1
            out.append(self.segments[min(i, len(self.segments) - 1)])
        return out

    def _merged(self, other):
        self._check_horizon(other)
        bps = tuple(sorted(set(self.breakpoints) | set(other.breakpoints)))
        return bps, self._refined(bps), other._refined(bps)

    def __add__(self, other):
        if not isinstance(other, PiecewisePolynomial):
            return NotImplemented
        bps, a, b = self._merged(other)
        return PiecewisePolynomial(bps, tuple(_padd(x, y) for x, y in zip(a, b)))

    def __mul__(self, other):
        if isinstance(other, PiecewisePolynomial):
            bps, a, b = self._merged(other)
            return PiecewisePolynomial(bps, tuple(_pmul(x, y) for x, y in zip(a, b)))
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "PiecewisePolynomial":
        c = Fraction(c)
        return PiecewisePolynomial(self.breakpoints, tuple(tuple(c * x for x in s) for s in self.segments))

    def content(self) -> Fraction:
        """First nonzero coefficient in storage order (0 for the zero kernel)."""
        for s in self.segments:
            for x in s:
                if x != 0:
                    return x
        return Fraction(0)

    def integrate(self, a, b) -> Fraction:
        return pp_integrate(self, a, b)

    def tail_integral(self) -> "PiecewisePolynomial":
        """The kernel ``x -> int_x^T self(s) ds`` (continuous, degree + 1)."""
        bps = self.breakpoints
        anti = [_pantideriv(s) for s in self.segments]
        # mass of each segment and of everything to its right
        mass = [_peval(P, b) - _peval(P, a) for P, a, b in zip(anti, bps, bps[1:])]
        right = [Fraction(0)] * len(mass)
        acc = Fraction(0)
        for j in range(len(mass) - 1, -1, -1):
            right[j] = acc
            acc += mass[j]
        segs = []
        for j, P in enumerate(anti):
            const = _peval(P, bps[j + 1]) + right[j]
            segs.append(_padd((const,), tuple(-x for x in P)))
        return PiecewisePolynomial(bps, tuple(segs))

    def derivative(self) -> "PiecewisePolynomial":
        """Segment-wise derivative (jumps at breakpoints are not represented)."""
        return PiecewisePolynomial(
            self.breakpoints, tuple(tuple((k + 1) * x for k, x in enumerate(s[1:])) for s in self.segments)
        )

    def to_dict(self) -> dict:
        return {
            "breakpoints": [str(b) for b in self.breakpoints],
            "segments": [[str(c) for c in s] for s in self.segments],
        }

    @classmethod
    def from_dict(cls, d) -> "PiecewisePolynomial":
        return cls(tuple(Fraction(b) for b in d["breakpoints"]), tuple(tuple(Fraction(c) for c in s) for s in d["segments"]))


def pp_evaluate(f: PiecewisePolynomial, u):
    """Value of ``f`` at ``u``, left segment at breakpoints.

    Rational ``u`` gives an exact Fraction; float ``u`` gives a float.
    """
    exact = isinstance(u, (int, Fraction, str))
    uu = as_time(u)
    if not 0 <= uu <= f.horizon:
        raise DomainError(f"u={u} outside [0, {f.horizon}]")
    seg = f.segments[f._segment_index(uu)]
    if exact:
        return _peval(seg, uu)
    return float(_peval(seg, uu))


def pp_integrate(f: PiecewisePolynomial, a, b) -> Fraction:
    """Exact ``int_a^b f(u) du`` for ``0 <= a <= b <= T``."""
    a, b = as_time(a), as_time(b)
    if not 0 <= a <= b <= f.horizon:
        raise DomainError(f"integration bounds [{a}, {b}] invalid on [0, {f.horizon}]")
    total = Fraction(0)
    bps = f.breakpoints
    for j, s in enumerate(f.segments):
        lo, hi = max(a, bps[j]), min(b, bps[j + 1])
        if hi <= lo or not s:
            continue
        P = _pantideriv(s)
        total += _peval(P, hi) - _peval(P, lo)
    return total


def pp_arith(f: PiecewisePolynomial, g, op: str) -> PiecewisePolynomial:
    """``op`` in {"add", "multiply", "scale"}; for "scale" ``g`` is a rational."""
    if op == "add":
        return f + g
    if op == "multiply":
        if not isinstance(g, PiecewisePolynomial):
            raise TypeError("multiply needs two kernels")
        return f * g
    if op == "scale":
        return f.scale(g)
    raise ValueError(f"unknown op {op!r}")


@dataclass(frozen=True, eq=False)
class PathPrefix:
    """Sampled Brownian path ``W(u_0..u_n)`` on ``[0, t]`` with ``u_0 = 0``, ``W(0) = 0``.

    ``endpoint_jump`` is a jump of the cadlag path exactly at ``t`` (a vertical
    perturbation); it shifts ``W(t)`` without touching the path on ``[0, t)``.
    """

    times: tuple
    values: np.ndarray
    horizon: Fraction
    endpoint_jump: float = 0.0
    _exact_times: tuple = field(init=False, repr=False)

    def __post_init__(self):
        ts = tuple(as_time(u) for u in self.times)
        vals = np.asarray(self.values, dtype=float).copy()
        vals.setflags(write=False)
        T = as_time(self.horizon)
        if len(ts) == 0 or len(ts) != len(vals):
            raise UsageError("path needs matching, nonempty times and values")
        if ts[0] != 0 or vals[0] != 0:
            raise DomainError("path must start at W(0) = 0")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DomainError("path times must be strictly increasing")
        if ts[-1] > T:
            raise DomainError(f"path end {ts[-1]} beyond horizon {T}")
        object.__setattr__(self, "_exact_times", ts)
        object.__setattr__(self, "times", tuple(float(u) for u in ts))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "horizon", T)

    @property
    def t(self) -> Fraction:
        return self._exact_times[-1]

    @property
    def exact_times(self) -> tuple:
        return self._exact_times

    @property
    def endpoint(self) -> float:
        return float(self.values[-1]) + self.endpoint_jump

    @classmethod
    def zero(cls, t, horizon, steps: int = 1) -> "PathPrefix":
        t = as_time(t)
        if t == 0:
            return cls((0,), [0.0], horizon)
        times = [t * Fraction(i, steps) for i in range(steps + 1)]
        return cls(times, np.zeros(steps + 1), horizon)

    @classmethod
    def linear(cls, t, horizon, slope: float = 1.0, steps: int = 8) -> "PathPrefix":
        """The smooth path ``W(u) = slope * u`` sampled on a uniform grid."""
        t = as_time(t)
        if t == 0:
            return cls((0,), [0.0], horizon)
        times = [t * Fraction(i, steps) for i in range(steps + 1)]
        return cls(times, [slope * float(u) for u in times], horizon)

    @classmethod
    def line_to(cls, t, w: float, horizon) -> "PathPrefix":
        """Straight segment from ``(0, 0)`` to ``(t, w)``."""
        t = as_time(t)
        if t == 0:
            if w != 0:
                raise DomainError("a path at t = 0 must have W(0) = 0")
            return cls((0,), [0.0], horizon)
        return cls((0, t), [0.0, w], horizon)

    def bumped(self, h: float) -> "PathPrefix":
        """Vertical perturbation: add ``h`` to the endpoint only."""
        return PathPrefix(self._exact_times, self.values, self.horizon, self.endpoint_jump + h)

    def extended(self, times, values) -> "PathPrefix":
        """Concatenate later samples (``times`` strictly after ``t``)."""
        if self.endpoint_jump:
            raise UsageError("cannot extend a path with an endpoint jump")
        return PathPrefix(self._exact_times + tuple(times), np.concatenate([self.values, values]), self.horizon)


def interval_means(f: PiecewisePolynomial, times: Sequence) -> np.ndarray:
    """Exact averages of ``f`` over consecutive grid intervals, as floats.

    For a path that is linear between grid points, ``int f dW`` over an
    interval equals the increment times this average.
    """
    ts = [as_time(u) for u in times]
    return np.array([float(pp_integrate(f, a, b) / (b - a)) for a, b in zip(ts, ts[1:])], dtype=float)


def stieltjes_along_prefix(f: PiecewisePolynomial, path: PathPrefix) -> float:
    """``int_0^t f dW`` along the piecewise-linear interpolation of ``path``.

    Equivalent to the integration-by-parts form ``f(t) W(t) - int_0^t f'(u) W(u) du``
    for continuous ``f``; computed as increment-weighted interval averages, which
    also handles kernel jumps.  Exact (up to the final float sum) when the path
    is piecewise linear on its grid.
    """
    if f.horizon != path.horizon:
        raise DomainError("kernel and path horizons differ")
    z = 0.0
    if len(path.values) > 1:
        z = float(np.dot(interval_means(f, path.exact_times), np.diff(path.values)))
    if path.endpoint_jump:
        z += float(pp_evaluate(f, path.t)) * path.endpoint_jump
    return z
