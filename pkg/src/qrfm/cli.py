"""Command-line entry point: ``qrfm {solve,sweep,kernel-check,resources}``.

Exit codes: 0 on success, 2 on invalid input, 3 when the condition-number
cap aborts a solve.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .constants import KAPPA_CAP
from .experiment import ExperimentConfig, emit_results, run_experiment, run_trial, summarize
from .kernel import (RffBasis, dual_to_primal, kernel_approx, kernel_error, krr_dual_solve, predict_dual,
                     predict_primal, rff_features)
from .ledger import ResourceLedger
from .oracles import CollocationGrid, random_feature_spec
from .pipeline import KappaCapExceeded, UnsupportedActivation, resource_report, run_qrfm
from .problems import helmholtz_problem

EXIT_OK, EXIT_INVALID, EXIT_KAPPA = 0, 2, 3


class ConfigError(ValueError):
    pass


def parse_m_range(text: str) -> tuple[int, ...]:
    """``"5"``, ``"3,5,7"`` or ``"3..7"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            vals = tuple(range(int(lo), int(hi) + 1))
        else:
            vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse m range {text!r}") from exc
    if not vals:
        raise ConfigError("empty m range")
    return vals


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# flag name -> converter for values coming from a config file
_CONVERTERS = {
    "n": int, "m": str, "activation": str, "trials": int, "seed": int, "eps": float, "mode": str,
    "out": str, "format": str, "alpha_w": float, "k": float, "penalties": str, "kappa_cap": float,
    "workers": int, "ux": str, "timing": lambda v: v.lower() in ("1", "true", "yes"),
    "allow_fallback": lambda v: v.lower() in ("1", "true", "yes"),
}


def apply_config(args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    for key, value in read_config_file(args.config).items():
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(args, key, _CONVERTERS[key](value))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return args


def experiment_config(args, trials: int | None = None) -> ExperimentConfig:
    acts = tuple(a.strip() for a in args.activation.split(",")) if args.activation else ("sin", "tanh")
    return ExperimentConfig(
        n=args.n, m_values=parse_m_range(args.m), activations=acts,
        trials=trials if trials is not None else args.trials, seed=args.seed, eps=args.eps,
        penalties=args.penalties, mode=args.mode, alpha_w=args.alpha_w, k=args.k, ux=args.ux,
        kappa_cap=args.kappa_cap, allow_fallback=args.allow_fallback, timing=args.timing, workers=args.workers)


def _print_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=1, default=_json_default) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o).__name__)


def cmd_solve(args) -> int:
    cfg = experiment_config(args, trials=1)
    if len(cfg.m_values) != 1 or len(cfg.activations) != 1:
        raise ConfigError("solve takes a single m and a single activation")
    rec, _ = run_trial(cfg, cfg.activations[0], cfg.m_values[0], 0)
    if rec.kappa_capped:
        raise KappaCapExceeded(rec.kappa, cfg.kappa_cap)
    _print_json(rec.row(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = experiment_config(args)
    res = run_experiment(cfg)
    out = args.out or "qrfm_results"
    paths = emit_results(res, out, args.format)
    print(summarize(res.records).table())
    for p in paths:
        print(f"wrote {p}")
    if res.capped:
        print(f"{len(res.capped)} trial(s) exceeded the condition-number cap", file=sys.stderr)
    return EXIT_OK


def cmd_kernel_check(args) -> int:
    """Primal/dual agreement and Monte Carlo kernel convergence."""
    rng = np.random.default_rng(args.seed)
    M = 2 ** int(parse_m_range(args.m)[0])
    basis = RffBasis.sample(int(np.log2(M)), args.seed)
    x = rng.uniform(-2, 2, M)
    y = np.sin(x)
    a = krr_dual_solve(kernel_approx(basis, x), y, ridge=1e-3)
    beta = dual_to_primal(rff_features(basis, x), a)
    xt = np.linspace(-2, 2, 100)
    gap = float(np.max(np.abs(predict_primal(basis, beta, xt) - predict_dual(basis, a, x, xt))))
    pts = np.linspace(-1, 1, 16)
    errs = {}
    for m in (4, 6, 8, 10):
        errs[2 ** m] = float(np.median([kernel_error(RffBasis.sample(m, args.seed * 1000 + t), pts)
                                        for t in range(args.trials)]))
    ok = gap <= 1e-10
    _print_json({"M": M, "primal_dual_gap": gap, "passed": ok,
                 "median_kernel_error": {str(k): v for k, v in errs.items()}}, args.out)
    return EXIT_OK if ok else 1


def cmd_resources(args) -> int:
    cfg = experiment_config(args, trials=1)
    problem = helmholtz_problem(cfg.k)
    grid = CollocationGrid.uniform_grid(cfg.n)
    m = cfg.m_values[0]
    spec = random_feature_spec(m, args.seed, cfg.activations[0], cfg.alpha_w)
    ledger = ResourceLedger()
    run_qrfm(problem, grid, spec, cfg.pipeline_config(), ledger)
    _print_json(resource_report(ledger, cfg.n, m, cfg.eps), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=8, help="grid qubits (N = 2**n)")
    common.add_argument("--m", default="5", help="feature qubits: 5, 3,5,7 or 3..7")
    common.add_argument("--activation", default=None, help="sin, cos, tanh, or a comma list")
    common.add_argument("--trials", type=int, default=20)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--eps", type=float, default=1e-6)
    common.add_argument("--mode", choices=("semantic", "circuit"), default="semantic")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--config", default=None, help="key=value file; its values override flags")
    common.add_argument("--alpha-w", dest="alpha_w", type=float, default=20.0)
    common.add_argument("--k", type=float, default=2.0)
    common.add_argument("--penalties", choices=("unit", "default"), default="unit")
    common.add_argument("--ux", choices=("coordinate", "cyclic"), default="coordinate")
    common.add_argument("--kappa-cap", dest="kappa_cap", type=float, default=KAPPA_CAP)
    common.add_argument("--allow-fallback", dest="allow_fallback", action="store_true")
    common.add_argument("--timing", action="store_true", help="record wall_ms (breaks byte-identical output)")
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="qrfm", description="Emulated quantum random feature method")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="single solve, JSON summary")
    sub.add_parser("sweep", parents=[common], help="trials over an m range, writes result files")
    sub.add_parser("kernel-check", parents=[common], help="random Fourier feature checks")
    sub.add_parser("resources", parents=[common], help="query ledger for one solve")
    return parser


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "kernel-check": cmd_kernel_check, "resources": cmd_resources}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        args = apply_config(args)
        if args.command in ("solve", "resources") and args.activation is None:
            args.activation = "sin"
        return COMMANDS[args.command](args)
    except KappaCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_KAPPA
    except (ConfigError, UnsupportedActivation, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
