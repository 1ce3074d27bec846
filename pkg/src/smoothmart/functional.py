"""Smooth Wiener functionals closed under Malliavin differentiation.

A :class:`WienerFunctional` is a finite sum of terms

    coeff * prod_v g_v(s_v) * prod_i Z_i**e_i * exp(Q(Z)),

where ``Z_i = int_0^T f_i(u) dW(u)`` are Gaussian integrals with
piecewise-polynomial kernels, ``Q`` is a quadratic form with rational
coefficients and the ``g_v`` are univariate kernels in the free time
variables ``s_v`` introduced by differentiation.  Since
``D_s Z_i = f_i(s)``, the derivative of such a term is again a finite sum of
such terms with one extra time factor.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, NumericOverflowError, UsageError
from .kernels import PathPrefix, PiecewisePolynomial, as_time, pp_evaluate, stieltjes_along_prefix

__all__ = [
    "Quadratic",
    "Term",
    "WienerFunctional",
    "constant",
    "gaussian_integral",
    "brownian",
    "exp_quadratic",
    "wf_build",
    "malliavin_derivative",
    "malliavin_power",
    "malliavin_at_time",
    "freeze_values",
    "freeze_evaluate",
    "evaluate_full_path",
    "evaluate_terms",
    "to_text",
    "from_text",
]

# exp() overflows a double just above this
_EXP_MAX = 709.0


def _num(c):
    """Keep rationals exact, everything else becomes float."""
    if isinstance(c, (int, Fraction)) and not isinstance(c, bool):
        return Fraction(c)
    if isinstance(c, Real):
        return float(c)
    raise TypeError(f"not a real coefficient: {c!r}")


@dataclass(frozen=True)
class Quadratic:
    """``Q(z) = z^T A z + b.z + c`` with symmetric rational ``A``."""

    quad: tuple[tuple[Fraction, ...], ...]
    lin: tuple[Fraction, ...]
    const: Fraction = Fraction(0)

    def __post_init__(self):
        k = len(self.lin)
        A = tuple(tuple(Fraction(x) for x in row) for row in self.quad)
        if len(A) != k or any(len(r) != k for r in A):
            raise DomainError("quadratic form dimension mismatch")
        if any(A[i][j] != A[j][i] for i in range(k) for j in range(i)):
            raise DomainError("quadratic form must be symmetric")
        object.__setattr__(self, "quad", A)
        object.__setattr__(self, "lin", tuple(Fraction(x) for x in self.lin))
        object.__setattr__(self, "const", Fraction(self.const))

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.quad, self.lin, self.const))
            object.__setattr__(self, "_hash", h)
        return h

    @classmethod
    def zero(cls, k: int) -> "Quadratic":
        return cls(tuple((Fraction(0),) * k for _ in range(k)), (Fraction(0),) * k)

    @property
    def dim(self) -> int:
        return len(self.lin)

    def is_zero(self) -> bool:
        return self.const == 0 and not any(self.lin) and not any(any(r) for r in self.quad)

    def __add__(self, other: "Quadratic") -> "Quadratic":
        k = self.dim
        return Quadratic(
            tuple(tuple(self.quad[i][j] + other.quad[i][j] for j in range(k)) for i in range(k)),
            tuple(x + y for x, y in zip(self.lin, other.lin)),
            self.const + other.const,
        )

    def gradient(self, i: int) -> list[tuple[int | None, Fraction]]:
        """dQ/dz_i as ``[(j, coeff)]`` meaning ``coeff * z_j`` (``j=None``: constant)."""
        out = [(j, 2 * a) for j, a in enumerate(self.quad[i]) if a != 0]
        if self.lin[i] != 0:
            out.append((None, self.lin[i]))
        return out

    def remap(self, index: Sequence[int], k: int) -> "Quadratic":
        A = [[Fraction(0)] * k for _ in range(k)]
        b = [Fraction(0)] * k
        for i, ii in enumerate(index):
            b[ii] = self.lin[i]
            for j, jj in enumerate(index):
                A[ii][jj] += self.quad[i][j]
        return Quadratic(tuple(map(tuple, A)), tuple(b), self.const)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Vectorized over the leading axes of ``z`` (last axis = basis)."""
        A = np.array([[float(x) for x in r] for r in self.quad], dtype=float).reshape(self.dim, self.dim)
        b = np.array([float(x) for x in self.lin], dtype=float)
        return np.einsum("...i,ij,...j->...", z, A, z) + z @ b + float(self.const)

    def sort_key(self):
        return (self.quad, self.lin, self.const)


@dataclass(frozen=True)
class Term:
    coeff: Fraction | float
    factors: tuple[PiecewisePolynomial, ...]
    powers: tuple[int, ...]
    exponent: Quadratic

    def key(self):
        return (self.powers, self.exponent, self.factors)

    def sort_key(self):
        return (self.powers, self.exponent.sort_key(), tuple(f.sort_key() for f in self.factors))


def _normalize_factor(coeff, g: PiecewisePolynomial):
    """Pull the scalar content out of a time factor so equal shapes merge."""
    c = g.content()
    if c == 0:
        return 0, g
    if c == 1:
        return coeff, g
    return coeff * c, g.scale(1 / c)


def _canonical(terms: Iterable[Term]) -> tuple[Term, ...]:
    acc: dict = {}
    proto: dict = {}
    for t in terms:
        if t.coeff == 0:
            continue
        k = t.key()
        if k in acc:
            acc[k] = acc[k] + t.coeff
        else:
            acc[k] = t.coeff
            proto[k] = t
    out = [
        Term(c, proto[k].factors, proto[k].powers, proto[k].exponent) for k, c in acc.items() if c != 0
    ]
    out.sort(key=Term.sort_key)
    return tuple(out)


@dataclass(frozen=True)
class WienerFunctional:
    """Finite sum of ``Term`` over a shared basis of Gaussian integrals."""

    horizon: Fraction
    basis: tuple[PiecewisePolynomial, ...]
    terms: tuple[Term, ...]
    free_vars: tuple[str, ...] = ()

    def __post_init__(self):
        T = as_time(self.horizon)
        object.__setattr__(self, "horizon", T)
        k = len(self.basis)
        for f in self.basis:
            if f.horizon != T:
                raise DomainError(f"kernel horizon {f.horizon} differs from functional horizon {T}")
        for t in self.terms:
            if len(t.powers) != k or t.exponent.dim != k:
                raise DomainError("term does not match the basis length")
            if len(t.factors) != len(self.free_vars):
                raise DomainError("term does not match the free variables")
        if len(set(self.free_vars)) != len(self.free_vars):
            raise DomainError("duplicate free variable")
        object.__setattr__(self, "terms", _canonical(self.terms))

    # -- introspection -------------------------------------------------------
    @property
    def is_scalar(self) -> bool:
        return not self.free_vars

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    # -- algebra ---------------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, WienerFunctional):
            return other
        if isinstance(other, Real):
            return constant(other, self.horizon)
        return None

    def __add__(self, other):
        other = self._lift(other)
        return NotImplemented if other is None else wf_sum(self, other)

    __radd__ = __add__

    def __neg__(self):
        return wf_scale(self, -1)

    def __sub__(self, other):
        other = self._lift(other)
        return NotImplemented if other is None else wf_sum(self, wf_scale(other, -1))

    def __rsub__(self, other):
        other = self._lift(other)
        return NotImplemented if other is None else wf_sum(other, wf_scale(self, -1))

    def __mul__(self, other):
        if isinstance(other, Real):
            return wf_scale(self, other)
        if isinstance(other, WienerFunctional):
            return wf_product(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, n: int):
        return wf_power(self, n)


# -- constructors ----------------------------------------------------------------

def constant(c, horizon) -> WienerFunctional:
    T = as_time(horizon)
    return WienerFunctional(T, (), (Term(_num(c), (), (), Quadratic.zero(0)),))


def gaussian_integral(kernel: PiecewisePolynomial) -> WienerFunctional:
    """``Z = int_0^T kernel dW`` as a functional."""
    return WienerFunctional(kernel.horizon, (kernel,), (Term(Fraction(1), (), (1,), Quadratic.zero(1)),))


def brownian(horizon, at=None) -> WienerFunctional:
    """``W(at)``; defaults to ``W(T)``."""
    T = as_time(horizon)
    return gaussian_integral(PiecewisePolynomial.indicator(T if at is None else at, T))


def exp_quadratic(basis: Sequence[PiecewisePolynomial], quad, lin=None, const=0) -> WienerFunctional:
    """``exp(z^T A z + b.z + c)`` over the given basis."""
    basis = tuple(basis)
    if not basis:
        raise DomainError("exp_quadratic needs at least one kernel")
    k = len(basis)
    lin = (0,) * k if lin is None else lin
    Q = Quadratic(tuple(tuple(r) for r in quad), tuple(lin), const)
    return WienerFunctional(basis[0].horizon, basis, (Term(Fraction(1), (), (0,) * k, Q),))


def _align(*fs: WienerFunctional):
    """Re-express functionals over a merged basis and merged free variables."""
    T = fs[0].horizon
    if any(f.horizon != T for f in fs):
        raise DomainError("functionals have different horizons")
    basis: list = []
    for f in fs:
        for g in f.basis:
            if g not in basis:
                basis.append(g)
    names: list = []
    for f in fs:
        for v in f.free_vars:
            if v not in names:
                names.append(v)
    k = len(basis)
    one = PiecewisePolynomial.constant(1, T)
    out = []
    for f in fs:
        idx = [basis.index(g) for g in f.basis]
        vpos = {v: i for i, v in enumerate(f.free_vars)}
        terms = []
        for t in f.terms:
            p = [0] * k
            for i, e in zip(idx, t.powers):
                p[i] += e
            facs = tuple(t.factors[vpos[v]] if v in vpos else one for v in names)
            terms.append(Term(t.coeff, facs, tuple(p), t.exponent.remap(idx, k)))
        out.append(terms)
    return T, tuple(basis), tuple(names), out


def wf_sum(f: WienerFunctional, g: WienerFunctional) -> WienerFunctional:
    T, basis, names, (a, b) = _align(f, g)
    return WienerFunctional(T, basis, a + b, names)


def wf_scale(f: WienerFunctional, c) -> WienerFunctional:
    c = _num(c)
    return WienerFunctional(
        f.horizon, f.basis, tuple(Term(t.coeff * c, t.factors, t.powers, t.exponent) for t in f.terms), f.free_vars
    )


def _term_product(s: Term, t: Term) -> Term:
    coeff = s.coeff * t.coeff
    facs = []
    for a, b in zip(s.factors, t.factors):
        coeff, g = _normalize_factor(coeff, a * b)
        facs.append(g)
    return Term(coeff, tuple(facs), tuple(x + y for x, y in zip(s.powers, t.powers)), s.exponent + t.exponent)


def wf_product(f: WienerFunctional, g: WienerFunctional) -> WienerFunctional:
    T, basis, names, (a, b) = _align(f, g)
    return WienerFunctional(T, basis, tuple(_term_product(s, t) for s in a for t in b), names)


def wf_power(f: WienerFunctional, n: int) -> WienerFunctional:
    if not isinstance(n, int) or n < 0:
        raise DomainError("power exponent must be a nonnegative integer")
    result = constant(1, f.horizon)
    base = f
    while n:
        if n & 1:
            result = wf_product(result, base)
        n >>= 1
        if n:
            base = wf_product(base, base)
    return result


def wf_build(kind: str, *args) -> WienerFunctional:
    """Dispatch over the constructor cases by name.

    ``constant(c, T)``, ``linear(kernel)``, ``power(F, n)``,
    ``exp_quadratic(basis, A, b, c)``, ``product(F, G)``, ``sum(F, G)``,
    ``scale(F, c)``.
    """
    table = {
        "constant": constant,
        "linear": gaussian_integral,
        "power": wf_power,
        "exp_quadratic": exp_quadratic,
        "product": wf_product,
        "sum": wf_sum,
        "scale": wf_scale,
    }
    try:
        return table[kind](*args)
    except KeyError:
        raise DomainError(f"unknown constructor {kind!r}") from None


# -- Malliavin derivatives -------------------------------------------------------------

def _differentiate(F: WienerFunctional, directions, attach):
    """Core product/chain rule.

    ``directions[i]`` is what ``D Z_i`` becomes (a kernel or a scalar);
    ``attach(term_coeff, factors, direction)`` returns the new (coeff, factors).
    """
    new_terms = []
    for t in F.terms:
        for i, d in enumerate(directions):
            if d is None:
                continue
            pieces = []
            if t.powers[i] > 0:
                p = list(t.powers)
                p[i] -= 1
                pieces.append((t.coeff * t.powers[i], tuple(p)))
            for j, a in t.exponent.gradient(i):
                p = list(t.powers)
                if j is not None:
                    p[j] += 1
                pieces.append((t.coeff * a, tuple(p)))
            for c, p in pieces:
                c2, facs = attach(c, t.factors, d)
                if c2 != 0:
                    new_terms.append(Term(c2, facs, p, t.exponent))
    return new_terms


def malliavin_derivative(F: WienerFunctional, var: str) -> WienerFunctional:
    """``D_var F`` with ``var`` a fresh free time variable."""
    if var in F.free_vars:
        raise UsageError(f"variable {var!r} is already free")
    dirs = [None if f.is_zero() else f for f in F.basis]

    def attach(c, facs, d):
        c, g = _normalize_factor(c, d)
        return c, facs + (g,)

    terms = _differentiate(F, dirs, attach)
    return WienerFunctional(F.horizon, F.basis, tuple(terms), F.free_vars + (var,))


def malliavin_power(F: WienerFunctional, var: str, order: int = 2) -> WienerFunctional:
    """``D_var^order F`` with a single (fresh) time variable repeated ``order`` times."""
    if order < 1:
        raise DomainError("order must be >= 1")
    G = malliavin_derivative(F, var)
    pos = len(G.free_vars) - 1
    dirs = [None if f.is_zero() else f for f in F.basis]

    def attach(c, facs, d):
        c, g = _normalize_factor(c, facs[pos] * d)
        return c, facs[:pos] + (g,) + facs[pos + 1:]

    for _ in range(order - 1):
        G = WienerFunctional(G.horizon, G.basis, tuple(_differentiate(G, dirs, attach)), G.free_vars)
    return G


def malliavin_at_time(F: WienerFunctional, order: int, time) -> WienerFunctional:
    """``D_time^order F`` with the derivative time fixed (kernels evaluated left-continuously)."""
    tau = as_time(time)
    if not 0 <= tau <= F.horizon:
        raise DomainError(f"time {tau} outside [0, {F.horizon}]")
    if order < 0:
        raise DomainError("order must be >= 0")
    vals = [pp_evaluate(f, tau) for f in F.basis]
    dirs = [None if v == 0 else v for v in vals]

    def attach(c, facs, d):
        return c * d, facs

    G = F
    for _ in range(order):
        if G.is_zero():
            break
        G = WienerFunctional(G.horizon, G.basis, tuple(_differentiate(G, dirs, attach)), G.free_vars)
    return G


# -- evaluation ----------------------------------------------------------------------

def freeze_values(F: WienerFunctional, path: PathPrefix) -> np.ndarray:
    """``Z_i(omega^t)``: each Gaussian integral frozen at the end of ``path``."""
    if path.horizon != F.horizon:
        raise DomainError("path horizon differs from functional horizon")
    return np.array([stieltjes_along_prefix(f, path) for f in F.basis], dtype=float)


def evaluate_terms(F: WienerFunctional, z: np.ndarray, weights=None, check_overflow=True) -> np.ndarray:
    """Evaluate ``sum_terms weight * coeff * z**powers * exp(Q(z))``.

    ``z`` has shape ``(..., k)``; ``weights`` (one per term) replaces the time
    factors, default 1.  Returns an array of shape ``z.shape[:-1]``.
    """
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape[:-1])
    parts = []
    for n, t in enumerate(F.terms):
        w = float(t.coeff) * (1.0 if weights is None else float(weights[n]))
        if w == 0.0:
            continue
        val = np.full(z.shape[:-1], w)
        for i, e in enumerate(t.powers):
            if e:
                val = val * z[..., i] ** e
        if not t.exponent.is_zero():
            q = t.exponent.evaluate(z)
            if check_overflow and np.any(q > _EXP_MAX):
                raise NumericOverflowError(f"exponent argument {float(np.max(q)):.6g} overflows")
            with np.errstate(over="ignore"):
                val = val * np.exp(q)
        parts.append(val)
    if not parts:
        return out
    if out.ndim == 0:
        return np.asarray(math.fsum(float(p) for p in parts))
    return np.sum(parts, axis=0)


def freeze_evaluate(F: WienerFunctional, path: PathPrefix, bindings: Mapping[str, object] | None = None) -> float:
    """``F(omega^t(omega))`` with free time variables bound to times in ``[t, T]``."""
    bindings = dict(bindings or {})
    missing = [v for v in F.free_vars if v not in bindings]
    if missing:
        raise UsageError(f"unbound free variables: {missing}")
    times = []
    for v in F.free_vars:
        s = as_time(bindings[v])
        if not path.t <= s <= F.horizon:
            raise DomainError(f"binding {v}={s} outside [{path.t}, {F.horizon}]")
        times.append(s)
    weights = [math.prod(float(pp_evaluate(g, s)) for g, s in zip(t.factors, times)) for t in F.terms]
    z = freeze_values(F, path)
    return float(evaluate_terms(F, z, weights))


def evaluate_full_path(F: WienerFunctional, path: PathPrefix) -> float:
    """``F(omega)`` for a path sampled all the way to ``T``."""
    if path.t != F.horizon:
        raise UsageError(f"path ends at {path.t}, functional needs {F.horizon}")
    if F.free_vars:
        raise UsageError("functional has free variables")
    return freeze_evaluate(F, path)


# -- text round trip ----------------------------------------------------------------------

_FORMAT = "smoothmart.functional/1"


def _enc(c):
    return str(c) if isinstance(c, Fraction) else float(c)


def _dec(c):
    return Fraction(c) if isinstance(c, str) else float(c)


def to_text(F: WienerFunctional) -> str:
    """Human-readable JSON; rationals as ``"p/q"`` strings, floats as JSON numbers (repr)."""
    doc = {
        "format": _FORMAT,
        "horizon": str(F.horizon),
        "free_vars": list(F.free_vars),
        "basis": [f.to_dict() for f in F.basis],
        "terms": [
            {
                "coeff": _enc(t.coeff),
                "powers": list(t.powers),
                "exp": {
                    "quad": [[str(x) for x in r] for r in t.exponent.quad],
                    "lin": [str(x) for x in t.exponent.lin],
                    "const": str(t.exponent.const),
                },
                "factors": [g.to_dict() for g in t.factors],
            }
            for t in F.terms
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def from_text(text: str) -> WienerFunctional:
    doc = json.loads(text)
    if doc.get("format") != _FORMAT:
        raise UsageError(f"not a {_FORMAT} document")
    T = Fraction(doc["horizon"])
    basis = tuple(PiecewisePolynomial.from_dict(d) for d in doc["basis"])
    terms = tuple(
        Term(
            _dec(t["coeff"]),
            tuple(PiecewisePolynomial.from_dict(g) for g in t["factors"]),
            tuple(int(e) for e in t["powers"]),
            Quadratic(
                tuple(tuple(Fraction(x) for x in r) for r in t["exp"]["quad"]),
                tuple(Fraction(x) for x in t["exp"]["lin"]),
                Fraction(t["exp"]["const"]),
            ),
        )
        for t in doc["terms"]
    )
    return WienerFunctional(T, basis, terms, tuple(doc["free_vars"]))
