"""``smoothmart`` command line.

Exit codes: 0 success, 2 configuration/usage error, 3 numeric or resource
error, 4 a golden case missed its tolerance.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import errors
from .bte import gamma_coefficient, gamma_evaluate
from .builtins import make_functional
from .config import ExperimentConfig, build_path, load_config
from .harness import convergence_study, dyson_term_profile, gamma_rows, run_experiment, run_golden
from .reports import ReportRow, atomic_write, write_plot_data, write_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 2, 3, 4
OUTPUT_ENV = "SMOOTHMART_OUTPUT_DIR"

_CONFIG_ERRORS = (errors.ConfigError, errors.DomainError, errors.UsageError, errors.UnsupportedFunctionalError)
_NUMERIC_ERRORS = (errors.NumericOverflowError, errors.ResourceError, errors.AnalysisError, OverflowError, MemoryError)

_METHOD = {"bte": "bte", "dyson": "dyson", "mc": "mc", "oracle": "moment-oracle",
           "convergence": "convergence", "profile": "profile", "gamma": "gamma"}
# per-command defaults that differ from the dataclass defaults
_DEFAULTS = {"convergence": {"functional": "expW", "n": 10000}, "gamma": {"L": 4}}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", action="append", help="JSON experiment config (repeatable)")
    p.add_argument("--functional", help="built-in name or DSL JSON text")
    for name in ("t", "T", "tau", "delta"):
        p.add_argument(f"--{name}", help="rational, e.g. 1/2")
    for name in ("L", "M", "K", "n", "seed", "grid"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--path", help="zero | linear[:slope] | endpoint:<w> | random:<seed> | JSON")
    p.add_argument("--increments", help="comma-separated chosen-path increments for bte")
    p.add_argument("--antithetic", action="store_true", default=None)
    p.add_argument("--L-list", dest="L_list")
    p.add_argument("--delta-list", dest="delta_list")
    p.add_argument("--out", help="report stem (no extension)")
    p.add_argument("--jobs", type=int, default=1, help="run independent experiments concurrently")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothmart", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gamma": "print the Gamma_l polynomials and their frozen values",
        "bte": "backward Taylor expansion",
        "dyson": "Dyson-series evaluation",
        "mc": "Monte Carlo estimate",
        "oracle": "exact Gaussian-moment oracle",
        "convergence": "one-step mean-square rate study",
        "profile": "per-order Dyson term table",
        "golden": "run the built-in golden cases",
    }
    for name, h in helps.items():
        _add_common(sub.add_parser(name, help=h))
    return parser


def _overrides(ns) -> dict:
    keys = ("functional", "t", "T", "tau", "delta", "L", "M", "K", "n", "seed", "grid", "tol", "path",
            "increments", "antithetic", "L_list", "delta_list")
    return {k: getattr(ns, k) for k in keys if getattr(ns, k) is not None}


def _stem(command: str, cfg_path: str | None, cfg: ExperimentConfig | None, explicit: str | None) -> str:
    if explicit:
        return explicit
    if cfg is not None and cfg.output:
        return cfg.output
    base = os.environ.get(OUTPUT_ENV) or "reports"
    name = os.path.splitext(os.path.basename(cfg_path))[0] if cfg_path else command
    return os.path.join(base, name)


def _load(command, cfg_path, ns) -> ExperimentConfig:
    data = dict(_DEFAULTS.get(command, {}))
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                file_data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise errors.ConfigError("config", str(exc)) from exc
        if not isinstance(file_data, dict):
            raise errors.ConfigError("config", "top level must be an object")
        data.update(file_data)
    data.update(_overrides(ns))
    data["method"] = _METHOD[command]
    return load_config(None, data)


def _run_gamma(cfg: ExperimentConfig):
    delta = cfg.delta if cfg.delta is not None else Fraction(1, 4)
    lines = []
    for l in range(cfg.L + 1):
        lines.append(f"Gamma_{l}(delta, x) = {gamma_coefficient(l)}")
        lines.append(f"  frozen at delta={delta}: {gamma_evaluate(l, delta, Fraction(0))}")
    print("\n".join(lines))
    n = delta.denominator if delta.numerator == 1 else 4
    return gamma_rows(cfg.L, n), {}


def _run_convergence(cfg: ExperimentConfig, stem: str):
    _, F = make_functional(cfg.functional, cfg.T, cfg.tau)
    res = convergence_study(F, cfg.L_list, cfg.delta_list, cfg.n, cfg.seed)
    rows = []
    for L in res.orders:
        diag = {"mse": res.mse[L], "deltas": [str(d) for d in res.deltas], "r_squared": res.r_squared[L],
                "exact": res.exact[L], "tolerance_kind": "absolute"}
        params = {"L": L, "n": cfg.n, "seed": cfg.seed}
        if res.exact[L]:
            rows.append(ReportRow("convergence", str(cfg.functional), params, None, None, None, 0.0, diag))
        else:
            rows.append(ReportRow("convergence", str(cfg.functional), params, res.slopes[L], L + 1, 0.5, 0.0, diag))
        write_plot_data(f"{stem}.L{L}.dat", [float(d) for d in res.deltas], res.mse[L], "delta mse")
    table = ["L,delta,mse"] + [f"{L},{d},{m!r}" for L, d, m in res.rows()]
    atomic_write(stem + ".table.csv", "\n".join(table) + "\n")
    for r in rows:
        L = r.parameters["L"]
        slope = "exact" if res.exact[L] else f"{res.slopes[L]:.4f} (R^2 {res.r_squared[L]:.4f})"
        print(f"L={L}: slope {slope}")
    return rows, {"slopes": {str(L): res.slopes[L] for L in res.orders}}


def _run_profile(cfg: ExperimentConfig, stem: str):
    name, F = make_functional(cfg.functional, cfg.T, cfg.tau)
    path = build_path(cfg.path, cfg.t, cfg.T)
    prof = dyson_term_profile(F, cfg.t, path, cfg.K, cfg.tol)
    cols = ("k", "term", "partial_sum", "sign", "ratio")
    lines = [",".join(cols)] + [",".join("" if r[c] is None else repr(r[c]) for c in cols) for r in prof]
    atomic_write(stem + ".profile.csv", "\n".join(lines) + "\n")
    write_plot_data(stem + ".dat", [r["k"] for r in prof], [abs(r["term"]) for r in prof], "k |term|")
    print("\n".join(lines))
    row = ReportRow("profile", name, {"t": str(cfg.t), "T": str(cfg.T), "K": cfg.K}, prof[-1]["partial_sum"],
                    diagnostics={"profile": prof})
    return [row], {}


def run_one(command: str, cfg_path: str | None, ns) -> tuple[list, str]:
    cfg = _load(command, cfg_path, ns)
    stem = _stem(command, cfg_path, cfg, ns.out if not cfg_path or len(ns.config or []) == 1 else None)
    if command == "gamma":
        rows, extra = _run_gamma(cfg)
    elif command == "convergence":
        os.makedirs(os.path.dirname(os.path.abspath(stem)), exist_ok=True)
        rows, extra = _run_convergence(cfg, stem)
    elif command == "profile":
        rows, extra = _run_profile(cfg, stem)
    else:
        rows, extra = run_experiment(cfg), {}
    write_report(stem, command, cfg.echo(), rows, extra)
    return rows, stem


def _print_rows(rows, stem):
    for r in rows:
        ref = "" if r.reference is None else f" ref={r.reference!r} rel_err={r.rel_error:.3e}"
        status = "" if r.passed is None else (" PASS" if r.passed else " FAIL")
        label = r.diagnostics.get("case", r.functional)
        print(f"{r.method} {label}: value={r.value!r}{ref}{status}")
    print(f"wrote {stem}.csv {stem}.json")


def _run_command(ns) -> int:
    if ns.command == "golden":
        rows = run_golden(ns.jobs)
        stem = _stem("golden", None, None, ns.out)
        write_report(stem, "golden", {"cases": "built-in", "jobs": ns.jobs}, rows)
        _print_rows(rows, stem)
        return EXIT_TOLERANCE if any(r.passed is False for r in rows) else EXIT_OK
    configs = ns.config or [None]
    if ns.jobs > 1 and len(configs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=ns.jobs) as ex:
            results = list(ex.map(run_one, [ns.command] * len(configs), configs, [ns] * len(configs)))
    else:
        results = [run_one(ns.command, c, ns) for c in configs]
    for rows, stem in results:
        if ns.command not in ("gamma", "convergence", "profile"):
            _print_rows(rows, stem)
    return EXIT_OK


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return _run_command(ns)
    except _CONFIG_ERRORS as exc:
        print(f"smoothmart {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"smoothmart {ns.command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
