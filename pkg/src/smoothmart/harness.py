"""Experiment dispatch, convergence studies, Dyson term profiles and golden cases."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rng
from .bte import BteConfig, backward_sweep, gamma_coefficient, gamma_evaluate
from .builtins import closed_form, make_functional
from .config import ExperimentConfig, build_path
from .dyson import dyson_evaluate
from .errors import AnalysisError, UnsupportedFunctionalError
from .functional import WienerFunctional, evaluate_terms, freeze_values, malliavin_at_time
from .kernels import PathPrefix, as_time, interval_means
from .oracle import McConfig, gaussian_moment_expectation, mc_conditional_expectation
from .reports import ReportRow

__all__ = [
    "run_experiment",
    "reference_value",
    "convergence_study",
    "ConvergenceResult",
    "dyson_term_profile",
    "golden_cases",
    "run_golden",
]


def reference_value(name: str, F: WienerFunctional, path: PathPrefix, cfg: ExperimentConfig):
    """Closed form for built-ins, else the moment oracle when it applies, else None."""
    ref = closed_form(name, path, cfg.T, cfg.tau)
    if ref is not None:
        return ref
    try:
        return gaussian_moment_expectation(F, path)
    except UnsupportedFunctionalError:
        return None


def _params(cfg: ExperimentConfig) -> dict:
    p = {"t": str(cfg.t), "T": str(cfg.T)}
    if cfg.tau is not None:
        p["tau"] = str(cfg.tau)
    p["path"] = cfg.path if isinstance(cfg.path, str) else "custom"
    if cfg.method == "bte":
        p.update(L=cfg.L, M=cfg.M, delta=str(cfg.delta), chosen_path="frozen" if cfg.increments is None else "user")
    elif cfg.method == "dyson":
        p.update(K=cfg.K, tol=cfg.tol)
    elif cfg.method == "mc":
        p.update(n=cfg.n, seed=cfg.seed, grid=cfg.grid, antithetic=cfg.antithetic)
    return p


def run_experiment(cfg: ExperimentConfig) -> list[ReportRow]:
    """Run one ``bte`` / ``dyson`` / ``mc`` / ``moment-oracle`` experiment."""
    name, F = make_functional(cfg.functional, cfg.T, cfg.tau)
    path = build_path(cfg.path, cfg.t, cfg.T)
    start = time.perf_counter()
    diag: dict = {}
    tol = None
    if cfg.method == "bte":
        if cfg.t == cfg.T:
            from .functional import evaluate_full_path

            value = evaluate_full_path(F, path)
        else:
            bcfg = BteConfig(cfg.M, cfg.delta, cfg.L, None if cfg.increments is None else tuple(cfg.increments))
            value, G = backward_sweep(F, bcfg, path, return_functional=True)
            diag["terms"] = len(G)
    elif cfg.method == "dyson":
        rep = dyson_evaluate(F, cfg.t, path, cfg.K, cfg.tol)
        value = rep.value
        diag.update(
            term_values=rep.term_values,
            partial_sums=rep.partial_sums,
            stop_reason=rep.stop_reason,
            term_counts=rep.term_counts,
        )
    elif cfg.method == "mc":
        est = mc_conditional_expectation(F, path, McConfig(cfg.n, cfg.seed, cfg.grid, cfg.antithetic))
        value = est.mean
        tol = 3 * est.std_error
        diag.update(std_error=est.std_error, n=est.n, nonfinite=est.nonfinite, tolerance_kind="absolute")
    elif cfg.method == "moment-oracle":
        value = gaussian_moment_expectation(F, path)
    else:
        raise ValueError(f"run_experiment does not handle method {cfg.method!r}")
    wall = time.perf_counter() - start
    ref = reference_value(name, F, path, cfg)
    return [ReportRow(cfg.method, name, _params(cfg), value, ref, tol, wall, diag)]


# -- one-step mean-square rate study -------------------------------------------------

@dataclass
class ConvergenceResult:
    orders: list
    deltas: list
    mse: dict  # order -> list of MSE per delta
    slopes: dict  # order -> slope or None when exact
    r_squared: dict
    exact: dict  # order -> bool

    def rows(self):
        for L in self.orders:
            for d, m in zip(self.deltas, self.mse[L]):
                yield L, d, m


EXACT_MSE = 1e-26


def convergence_study(F: WienerFunctional, orders, deltas, n: int = 10_000, seed: int = 0, w: float = 0.0):
    """One-step mean-square BTE error against the moment oracle, per order and step.

    For each step ``delta`` the step is ``[T - delta, T]`` with ``W(T - delta) = w``;
    increments are ``sqrt(delta) * N`` with the same normals for every step
    (common random numbers).  Slopes are least-squares fits of
    ``log MSE`` against ``log delta``.
    """
    deltas = [as_time(d) for d in deltas]
    if len(deltas) < 4:
        raise AnalysisError("need at least 4 step sizes")
    if any(not 0 < d < 1 for d in deltas):
        raise AnalysisError("step sizes must lie in (0, 1)")
    T = F.horizon
    normals = rng.normal_block(seed, rng.TAG_STEP_INCREMENT, 0, n, 0, 1)[:, 0]
    derivs = {}
    mse = {L: [] for L in orders}
    for d in deltas:
        t = T - d
        prefix = PathPrefix.line_to(t, w, T)
        ref = gaussian_moment_expectation(F, prefix)
        z0 = freeze_values(F, prefix)
        A = np.array([interval_means(f, [t, T])[0] for f in F.basis])
        x = math.sqrt(float(d)) * normals
        z = z0 + np.outer(x, A)
        dvals = []
        for l in range(max(orders) + 1):
            if l not in derivs:
                derivs[l] = malliavin_at_time(F, l, T)
            dvals.append(evaluate_terms(derivs[l], z))
        for L in orders:
            est = sum(gamma_coefficient(l).evaluate_array(float(d), x) * dvals[l] for l in range(L + 1))
            mse[L].append(float(np.mean((est - ref) ** 2)))
    slopes, r2, exact = {}, {}, {}
    logd = np.log([float(d) for d in deltas])
    for L in orders:
        m = np.array(mse[L])
        if np.all(m <= EXACT_MSE):
            slopes[L], r2[L], exact[L] = None, None, True
            continue
        ok = np.isfinite(m) & (m > 0)
        if ok.sum() < 4:
            raise AnalysisError(f"order {L}: fewer than 4 finite points for the fit")
        slope, icept = np.polyfit(logd[ok], np.log(m[ok]), 1)
        resid = np.log(m[ok]) - (slope * logd[ok] + icept)
        ss = np.sum((np.log(m[ok]) - np.mean(np.log(m[ok]))) ** 2)
        slopes[L] = float(slope)
        r2[L] = float(1 - np.sum(resid**2) / ss) if ss > 0 else 1.0
        exact[L] = False
    return ConvergenceResult(list(orders), deltas, mse, slopes, r2, exact)


def dyson_term_profile(F: WienerFunctional, t, path: PathPrefix, K: int, tol=None) -> list[dict]:
    """Per-order rows ``k, term, partial_sum, sign, ratio`` (ratio = |term_k / term_{k-1}|)."""
    rep = dyson_evaluate(F, t, path, K, tol)
    rows = []
    for k, (v, s) in enumerate(zip(rep.term_values, rep.partial_sums)):
        prev = rep.term_values[k - 1] if k else None
        ratio = abs(v / prev) if prev not in (None, 0.0) else None
        rows.append({"k": k, "term": v, "partial_sum": s, "sign": int(np.sign(v)), "ratio": ratio})
    return rows


# -- golden cases -------------------------------------------------------------------

def golden_cases() -> list[tuple[str, dict, float]]:
    """``(label, config dict, relative tolerance)``; mc cases use 3 standard errors instead."""
    return [
        ("example1-t0", dict(functional="example1", method="dyson", tau="2", T="1", t="0", K=12, path="zero"), 1e-6),
        ("example1-t0.5", dict(functional="example1", method="dyson", tau="2", T="1", t="1/2", K=12, path="endpoint:0.3"), 1e-5),
        ("example2-zero", dict(functional="example2", method="dyson", T="1", t="0", K=12, path="zero"), 1e-9),
        ("example2-linear", dict(functional="example2", method="dyson", T="1", t="1/2", K=12, path="linear"), 1e-9),
        ("monomial2-bte", dict(functional="monomial(2)", method="bte", T="1", t="0", M=4, L=2, path="zero"), 1e-12),
        ("example2-mc", dict(functional="example2", method="mc", T="1", t="0", n=100000, seed=20240611, path="zero"), None),
        ("example1-mc", dict(functional="example1", method="mc", tau="2", T="1", t="1/2", n=100000, seed=20240611, path="endpoint:0.3"), None),
    ]


def gamma_rows(max_order: int = 4, n: int = 4) -> list[ReportRow]:
    """Frozen-path gamma values at ``delta = 1/n`` against ``(delta/2)^(l/2)/(l/2)!``."""
    delta = Fraction(1, n)
    rows = []
    for l in range(max_order + 1):
        val = gamma_evaluate(l, delta, Fraction(0))
        ref = delta ** (l // 2) / (2 ** (l // 2) * math.factorial(l // 2)) if l % 2 == 0 else Fraction(0)
        rows.append(
            ReportRow(
                "gamma", f"Gamma_{l}", {"delta": str(delta), "dW": "0"}, float(val), float(ref), 0.0, 0.0,
                {"polynomial": str(gamma_coefficient(l)), "exact_value": str(val), "exact_match": val == ref},
            )
        )
    return rows


def _run_case(case):
    label, cfgd, tol = case
    cfg = ExperimentConfig(**cfgd)
    (row,) = run_experiment(cfg)
    row.diagnostics["case"] = label
    if tol is not None:
        row.tolerance = tol
    return row


def run_golden(jobs: int = 1) -> list[ReportRow]:
    cases = golden_cases()
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_run_case, cases))
    else:
        rows = [_run_case(c) for c in cases]
    return rows + gamma_rows()
