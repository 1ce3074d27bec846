"""Experiment configuration: one JSON document per experiment, flags override fields."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

import numpy as np

from . import rng
from .errors import ConfigError
from .kernels import PathPrefix, as_time

__all__ = ["ExperimentConfig", "build_path", "load_config"]

METHODS = ("bte", "dyson", "mc", "moment-oracle", "gamma", "convergence", "profile")


def _frac(name, value):
    try:
        return as_time(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(name, f"not a rational number: {value!r}") from exc


def _int(name, value, lo=None):
    try:
        v = int(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(name, f"not an integer: {value!r}") from exc
    if isinstance(value, float) and value != v:
        raise ConfigError(name, f"not an integer: {value!r}")
    if lo is not None and v < lo:
        raise ConfigError(name, f"must be >= {lo}")
    return v


def _list(name, value, conv):
    if isinstance(value, str):
        value = [x for x in value.split(",") if x.strip()]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(name, "expected a list")
    return [conv(name, x) for x in value]


@dataclass
class ExperimentConfig:
    """All rational parameters are kept as Fractions; JSON input gives them as ``"p/q"`` strings."""

    functional: object = "example2"
    method: str = "dyson"
    t: Fraction = Fraction(0)
    T: Fraction = Fraction(1)
    tau: Fraction | None = None
    path: object = "zero"
    L: int = 2
    M: int = 4
    delta: Fraction | None = None
    increments: list | None = None
    K: int = 10
    tol: float | None = None
    n: int = 100000
    seed: int = 20240611
    grid: int = 64
    antithetic: bool = False
    L_list: list = field(default_factory=lambda: [1, 2, 3])
    delta_list: list = field(default_factory=lambda: [Fraction(1, 2**k) for k in range(3, 8)])
    output: str | None = None

    def __post_init__(self):
        self.t = _frac("t", self.t)
        self.T = _frac("T", self.T)
        if self.tau is not None:
            self.tau = _frac("tau", self.tau)
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {', '.join(METHODS)}")
        if not 0 <= self.t <= self.T:
            raise ConfigError("t", f"need 0 <= t <= T (t={self.t}, T={self.T})")
        if self.T <= 0:
            raise ConfigError("T", "must be positive")
        if self.tau is not None and self.tau <= self.T:
            raise ConfigError("tau", "must exceed T")
        self.L = _int("L", self.L, 0)
        self.M = _int("M", self.M, 1)
        self.K = _int("K", self.K, 0)
        self.n = _int("n", self.n, 2)
        self.seed = _int("seed", self.seed, 0)
        if self.seed >= 2**64:
            raise ConfigError("seed", "must fit in 64 bits")
        self.grid = _int("grid", self.grid, 1)
        if self.tol is not None:
            try:
                self.tol = float(self.tol)
            except (TypeError, ValueError) as exc:
                raise ConfigError("tol", f"not a number: {self.tol!r}") from exc
            if not self.tol > 0:
                raise ConfigError("tol", "must be positive")
        if self.delta is not None:
            self.delta = _frac("delta", self.delta)
            if self.delta <= 0:
                raise ConfigError("delta", "must be positive")
        if self.method == "bte" and self.t < self.T:
            span = self.T - self.t
            if self.delta is None:
                self.delta = span / self.M
            elif self.delta * self.M != span:
                raise ConfigError("delta", f"M*delta = {self.M * self.delta} must equal T - t = {span}")
        if self.increments is not None:
            self.increments = [float(x) for x in _list("increments", self.increments, lambda n, x: x)]
            if len(self.increments) != self.M:
                raise ConfigError("increments", f"need M={self.M} increments")
        self.L_list = _list("L_list", self.L_list, lambda n, x: _int(n, x, 0))
        self.delta_list = _list("delta_list", self.delta_list, _frac)
        self.antithetic = bool(self.antithetic)
        if isinstance(self.functional, str) and self.functional == "example1" and self.tau is None:
            raise ConfigError("tau", "example1 needs tau")

    def echo(self) -> dict:
        """JSON-safe dump of every field (rationals as strings)."""

        def enc(v):
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, list):
                return [enc(x) for x in v]
            return v

        return {f.name: enc(getattr(self, f.name)) for f in fields(self) if f.name != "output"}


_FIELD_ALIASES = {"L-list": "L_list", "delta-list": "delta_list", "out": "output"}


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    data = {_FIELD_ALIASES.get(k, k): v for k, v in data.items()}
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    return ExperimentConfig(**data)


def build_path(spec, t, T) -> PathPrefix:
    """Prefix path from a spec.

    Strings: ``zero``, ``linear`` (``W(u) = u``), ``linear:<slope>``,
    ``endpoint:<w>`` (straight line to ``w``), ``random:<seed>``.  Objects:
    ``{"type": "grid", "times": [...], "values": [...]}``, or the same names
    as ``type`` with ``slope``/``w``/``seed``/``steps`` keys.
    """
    t, T = as_time(t), as_time(T)
    if isinstance(spec, str):
        s = spec.strip()
        if s.startswith("{"):
            try:
                spec = json.loads(s)
            except json.JSONDecodeError as exc:
                raise ConfigError("path", str(exc)) from exc
        else:
            kind, _, arg = s.partition(":")
            spec = {"type": kind}
            if arg:
                spec[{"linear": "slope", "endpoint": "w", "random": "seed"}.get(kind, "arg")] = arg
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("path", f"cannot interpret {spec!r}")
    kind = spec["type"]
    try:
        steps = int(spec.get("steps", 8))
        if kind == "zero":
            return PathPrefix.zero(t, T, steps)
        if kind == "linear":
            return PathPrefix.linear(t, T, float(spec.get("slope", 1.0)), steps)
        if kind == "endpoint":
            return PathPrefix.line_to(t, float(spec["w"]), T)
        if kind in ("random", "seeded-random"):
            if t == 0:
                return PathPrefix.zero(0, T)
            seed = int(spec.get("seed", 0))
            z = rng.normal_block(seed, rng.TAG_PATH_PREFIX, 0, 1, 0, steps)[0]
            vals = np.concatenate([[0.0], np.cumsum(z * np.sqrt(float(t) / steps))])
            return PathPrefix([t * Fraction(i, steps) for i in range(steps + 1)], vals, T)
        if kind == "grid":
            times = [as_time(x) for x in spec["times"]]
            if times[-1] != t:
                raise ConfigError("path", f"grid ends at {times[-1]}, expected t={t}")
            return PathPrefix(times, [float(v) for v in spec["values"]], T)
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError("path", str(exc)) from exc
    raise ConfigError("path", f"unknown path type {kind!r}")
