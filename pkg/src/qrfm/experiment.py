"""Helmholtz experiment driver: per-trial records, convergence sweeps, result files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .constants import KAPPA_CAP, SOLVE_RCOND
from .ledger import ResourceLedger
from .oracles import ACTIVATIONS, CollocationGrid, random_feature_spec
from .pipeline import MODES, KappaCapExceeded, PipelineConfig, run_qrfm
from .problems import helmholtz_problem
from .rfm import assemble_feature_matrix, assemble_system, default_penalties, solve_coefficients, unit_penalties

CSV_COLUMNS = (
    "trial", "m", "n", "activation", "mode", "linf_error", "l2_error", "fidelity_vs_classical", "kappa",
    "queries_Ux", "queries_Uw", "queries_Ub", "queries_Uf", "ancilla_watermark", "wall_ms",
)
POINTS_COLUMNS = ("activation", "m", "trial", "x", "u_exact", "u_numeric")
PENALTIES = ("unit", "default")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one experiment; every field feeds :meth:`digest`."""

    n: int = 8
    m_values: tuple[int, ...] = (3, 4, 5, 6, 7)
    activations: tuple[str, ...] = ("sin", "tanh")
    trials: int = 100
    seed: int = 0
    eps: float = 1e-6
    penalties: str = "unit"
    mode: str = "semantic"
    alpha_w: float = 20.0
    k: float = 2.0
    ux: str = "coordinate"
    rcond: float = SOLVE_RCOND
    kappa_cap: float = KAPPA_CAP
    allow_fallback: bool = False
    points_trials: tuple[int, ...] = (0,)
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "m_values", tuple(int(v) for v in self.m_values))
        object.__setattr__(self, "activations", tuple(self.activations))
        object.__setattr__(self, "points_trials", tuple(int(v) for v in self.points_trials))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.m_values:
            raise ValueError("at least one m value is required")
        if any(not 1 <= m <= self.n for m in self.m_values):
            raise ValueError(f"every m must lie in [1, n={self.n}]")
        if not self.activations or any(a not in ACTIVATIONS for a in self.activations):
            raise ValueError(f"activations must be drawn from {ACTIVATIONS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.penalties not in PENALTIES:
            raise ValueError(f"penalties must be one of {PENALTIES}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.pipeline_config()

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(self.eps, self.mode, self.rcond, self.kappa_cap, self.ux, self.allow_fallback)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    m: int
    n: int
    activation: str
    mode: str
    linf_error: float
    l2_error: float
    fidelity_vs_classical: float
    kappa: float
    queries_Ux: int
    queries_Uw: int
    queries_Ub: int
    queries_Uf: int
    ancilla_watermark: int
    wall_ms: float
    kappa_capped: bool = False

    @property
    def key(self) -> tuple:
        return (self.activation, self.m, self.trial)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


@dataclass(frozen=True)
class TrialPoints:
    activation: str
    m: int
    trial: int
    x: np.ndarray
    u_exact: np.ndarray
    u_numeric: np.ndarray


def trial_seed(seed: int, m: int, trial: int) -> int:
    """Feature seed for one (m, trial); activations share it, so sin and tanh see the same w, b."""
    return int(np.random.SeedSequence([seed, m, trial]).generate_state(1)[0])


def _penalties(cfg: ExperimentConfig, grid: CollocationGrid) -> np.ndarray:
    return unit_penalties(grid) if cfg.penalties == "unit" else default_penalties(grid)


def run_trial(cfg: ExperimentConfig, activation: str, m: int, trial: int):
    """One quantum solve plus the classical reference with the same features."""
    t0 = time.perf_counter()
    problem = helmholtz_problem(cfg.k)
    grid = CollocationGrid.uniform_grid(cfg.n)
    spec = random_feature_spec(m, trial_seed(cfg.seed, m, trial), activation, cfg.alpha_w)
    lam = _penalties(cfg, grid)
    ledger = ResourceLedger()
    try:
        res = run_qrfm(problem, grid, spec, cfg.pipeline_config(), ledger, penalties=lam)
    except KappaCapExceeded as exc:
        nan = float("nan")
        rec = TrialRecord(trial, m, cfg.n, activation, cfg.mode, nan, nan, nan, float(exc.kappa),
                          0, 0, 0, 0, 0, 0.0, kappa_capped=True)
        return rec, None
    v = solve_coefficients(assemble_system(problem, spec, grid, lam), cfg.rcond)
    u_c = assemble_feature_matrix(spec, grid) @ v
    nc = np.linalg.norm(u_c)
    fid = float(abs(np.vdot(u_c / nc, res.state.amplitudes)) ** 2) if nc > 0 else 0.0
    exact = problem.exact(grid.points)
    diff = res.u - exact
    h = (grid.points[-1] - grid.points[0]) / grid.N
    q = ledger.snapshot()["queries"]
    wall = round((time.perf_counter() - t0) * 1e3, 3) if cfg.timing else 0.0
    rec = TrialRecord(trial, m, cfg.n, activation, cfg.mode,
                      float(np.max(np.abs(diff))), float(np.sqrt(h * np.sum(diff ** 2))), min(fid, 1.0),
                      float(res.qlsp.kappa), int(q.get("U_x", 0)), int(q.get("U_w", 0)), int(q.get("U_b", 0)),
                      int(q.get("U_f", 0)), int(ledger.snapshot()["ancilla_qubits"]), wall)
    pts = None
    if trial in cfg.points_trials:
        pts = TrialPoints(activation, m, trial, grid.points.copy(), exact, res.u.copy())
    return rec, pts


def _run_task(args):
    return run_trial(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    points: list[TrialPoints]

    @property
    def completed(self) -> list[TrialRecord]:
        return [r for r in self.records if not r.kappa_capped]

    @property
    def capped(self) -> list[TrialRecord]:
        return [r for r in self.records if r.kappa_capped]


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """All (activation, m, trial) combinations, sorted by key.

    Trials whose condition number exceeds the cap are kept with
    ``kappa_capped=True``; the run continues.
    """
    tasks = [(cfg, a, m, t) for a in cfg.activations for m in cfg.m_values for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            out = list(pool.map(_run_task, tasks, chunksize=4))
    else:
        out = [_run_task(t) for t in tasks]
    records = sorted((r for r, _ in out), key=lambda r: r.key)
    points = sorted((p for _, p in out if p is not None), key=lambda p: (p.activation, p.m, p.trial))
    return ExperimentResult(cfg, records, points)


# --------------------------------------------------------------------------
# convergence summary


@dataclass(frozen=True)
class SweepRow:
    activation: str
    m: int
    trials: int
    median: float
    p10: float
    p90: float


@dataclass
class SweepSummary:
    rows: list[SweepRow]

    def medians(self, activation: str) -> list[float]:
        return [r.median for r in sorted(self.rows, key=lambda r: r.m) if r.activation == activation]

    def non_increasing(self, activation: str) -> bool:
        med = self.medians(activation)
        return all(b <= a for a, b in zip(med, med[1:]))

    def table(self) -> str:
        lines = [f"{'activation':<10} {'m':>2} {'trials':>6} {'median':>11} {'p10':>11} {'p90':>11}"]
        for r in self.rows:
            lines.append(f"{r.activation:<10} {r.m:>2} {r.trials:>6} {r.median:>11.4e} {r.p10:>11.4e} {r.p90:>11.4e}")
        return "\n".join(lines)


def summarize(records: list[TrialRecord]) -> SweepSummary:
    """Median and 10th/90th percentile of the L-infinity error per (activation, m)."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in records:
        if not r.kappa_capped:
            groups.setdefault((r.activation, r.m), []).append(r.linf_error)
    rows = []
    for (act, m), errs in sorted(groups.items()):
        e = np.asarray(errs)
        rows.append(SweepRow(act, m, e.size, float(np.median(e)), float(np.percentile(e, 10)),
                             float(np.percentile(e, 90))))
    return SweepSummary(rows)


def convergence_sweep(cfg: ExperimentConfig) -> tuple[SweepSummary, ExperimentResult]:
    if cfg.trials < 20:
        raise ValueError("a convergence sweep needs at least 20 trials")
    res = run_experiment(cfg)
    return summarize(res.records), res


# --------------------------------------------------------------------------
# emission


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def records_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def points_csv(points: list[TrialPoints]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POINTS_COLUMNS)
    for p in points:
        for x, ue, un in zip(p.x, p.u_exact, p.u_numeric):
            w.writerow([p.activation, p.m, p.trial, repr(float(x)), repr(float(ue)), repr(float(un))])
    return buf.getvalue()


_INT_COLUMNS = {"trial", "m", "n", "queries_Ux", "queries_Uw", "queries_Ub", "queries_Uf", "ancilla_watermark"}
_STR_COLUMNS = {"activation", "mode"}


def parse_records_csv(text: str) -> list[TrialRecord]:
    """Inverse of :func:`records_csv`."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    out = []
    for row in reader:
        vals = {c: (int(row[c]) if c in _INT_COLUMNS else row[c] if c in _STR_COLUMNS else float(row[c]))
                for c in CSV_COLUMNS}
        out.append(TrialRecord(**vals))
    return out


def emit_results(result: ExperimentResult | list[TrialRecord], out: str | Path, fmt: str = "csv",
                 points: list[TrialPoints] | None = None) -> list[Path]:
    """Write records to ``out`` plus a ``*_points`` companion file.

    Records flagged by the condition-number cap are left out of the files and
    reported on stderr. Returns the written paths.
    """
    if isinstance(result, ExperimentResult):
        records, points = result.records, result.points if points is None else points
    else:
        records = list(result)
    if not records:
        raise ValueError("no records to emit")
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    capped = [r for r in records if r.kappa_capped]
    for r in capped:
        print(f"warning: trial {r.key} skipped, kappa {r.kappa:.3e} above cap", file=sys.stderr)
    records = sorted((r for r in records if not r.kappa_capped), key=lambda r: r.key)
    points = points or []
    path = Path(out)
    if path.suffix != f".{fmt}":
        path = path.with_suffix(f".{fmt}")
    ppath = path.with_name(f"{path.stem}_points.{fmt}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        body, pbody = records_csv(records), points_csv(points)
    else:
        body = json.dumps({"columns": list(CSV_COLUMNS), "records": [r.row() for r in records]}, indent=1) + "\n"
        pbody = json.dumps({"columns": list(POINTS_COLUMNS), "points": [
            {"activation": p.activation, "m": p.m, "trial": p.trial, "x": p.x.tolist(),
             "u_exact": p.u_exact.tolist(), "u_numeric": p.u_numeric.tolist()} for p in points]}, indent=1) + "\n"
    path.write_text(body)
    ppath.write_text(pbody)
    return [path, ppath]


__all__ = [
    "CSV_COLUMNS", "POINTS_COLUMNS", "ExperimentConfig", "TrialRecord", "TrialPoints", "ExperimentResult",
    "trial_seed", "run_trial", "run_experiment", "SweepRow", "SweepSummary", "summarize", "convergence_sweep",
    "records_csv", "points_csv", "parse_records_csv", "emit_results",
]
