"""Monte-Carlo orchestration, RMSE statistics and CSV export."""

from __future__ import annotations

import csv
import logging
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__, kernels
from .config import ExperimentConfig, Variant, dump_yaml
from .crlb import sigma_from_amplitude, sp_crlb
from .filter import Tracker
from .motion import default_los_grid
from .simulator import Realization, ScenarioConfig, los_amplitude, simulate
from .types import Scan

log = logging.getLogger(__name__)

PRE_OLOS_WINDOW = (0.0, 14.2)
LOST_TRACK_ERROR = 5.0


@dataclass
class RunResult:
    variant: str
    run: int
    t: np.ndarray  # (N,)
    true_pos: np.ndarray  # (N, 2)
    est_state: np.ndarray  # (N, 4)
    est_u: np.ndarray  # (N, J)
    est_q: np.ndarray  # (N, J)
    sp_crlb: np.ndarray  # (N,)
    lost_steps: tuple[int, ...] = ()

    @property
    def est_pos(self) -> np.ndarray:
        return self.est_state[:, :2]

    @property
    def sq_err(self) -> np.ndarray:
        return np.sum((self.est_pos - self.true_pos) ** 2, axis=1)

    @property
    def track_lost_step(self) -> int | None:
        return self.lost_steps[0] if self.lost_steps else None

    @property
    def final_error(self) -> float:
        return float(np.sqrt(self.sq_err[-1]))


def run_seeds(seed: int, run: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Independent streams for the scenario and the filter of one run.

    Every variant sees the same scenario and filter streams for a given run.
    """
    scenario, filt = np.random.SeedSequence([seed, run]).spawn(2)
    return scenario, filt


def sp_crlb_along(truth: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    """Single-position bound along a trajectory, with each anchor's sigma set by its LOS amplitude."""
    anchors = config.anchor_list
    ctx = config.crlb_context
    out = np.empty(truth.shape[0])
    for n, row in enumerate(truth):
        d = [np.hypot(*(row[:2] - a.position)) for a in anchors]
        sigmas = sigma_from_amplitude(los_amplitude(np.array(d), config), ctx)
        out[n] = sp_crlb(row[:2], anchors, sigmas)
    return out


def track_scans(
    scans: Sequence[Sequence[Scan]], config: ExperimentConfig, variant: Variant, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[int]]:
    """Run one filter over a scan sequence; returns (states, u, q, lost steps)."""
    sc, fc = config.scenario, config.filter
    tracker = Tracker(
        sc.anchor_list,
        sc.nlos,
        fc.amplitude,
        default_los_grid(),
        fc.kinematics(sc.dt),
        fc.amplitude_walk,
        variant.features,
        fc.settings,
        r_init=fc.r_init,
        r_track=fc.r_track,
        r_u=fc.r_u,
    )
    n_steps = len(scans)
    j = len(sc.anchors)
    states = np.empty((n_steps, 4))
    us = np.empty((n_steps, j))
    qs = np.empty((n_steps, j))
    tracker.reset(rng)
    for i, step in enumerate(scans):
        est = tracker.step(step, rng)
        states[i] = est.state.as_vector()
        us[i], qs[i] = est.u, est.q
    return states, us, qs, list(tracker.lost_steps)


def _run_one(args) -> list[RunResult]:
    config, run = args
    scen_seed, filt_seed = run_seeds(config.seed, run)
    real: Realization = simulate(config.scenario, np.random.default_rng(scen_seed))
    truth = real.truth[1:]
    t = config.scenario.time(np.arange(1, config.scenario.n_steps + 1))
    bound = sp_crlb_along(truth, config.scenario)
    results = []
    for variant in config.variants:
        rng = np.random.default_rng(filt_seed)
        states, us, qs, lost = track_scans(real.scans, config, variant, rng)
        results.append(RunResult(variant.label, run, t, truth[:, :2].copy(), states, us, qs, bound, tuple(lost)))
    return results


def run_experiment(config: ExperimentConfig, runs: Iterable[int] | None = None) -> dict[str, list[RunResult]]:
    """Simulate ``config.runs`` realizations and track each with every variant.

    Results are ordered by run index regardless of worker scheduling.
    """
    indices = list(range(config.runs) if runs is None else runs)
    jobs = [(config, r) for r in indices]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_run = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        per_run = []
        for job in jobs:
            per_run.append(_run_one(job))
            log.debug("run %d done", job[1])
    out: dict[str, list[RunResult]] = {v.label: [] for v in config.variants}
    for results in per_run:
        for res in results:
            out[res.variant].append(res)
    return out


# --- statistics ------------------------------------------------------------------


def rmse_over_time(results: Sequence[RunResult]) -> np.ndarray:
    """(N, 2) array of (time, RMSE across runs)."""
    if not results:
        raise ValueError("need at least one run")
    sq = np.array([r.sq_err for r in results])
    return np.column_stack([results[0].t, np.sqrt(sq.mean(axis=0))])


def rmse_cdf(results: Sequence[RunResult], t_range: tuple[float, float]) -> np.ndarray:
    """Empirical CDF of the RMSE values at steps whose time lies in ``t_range`` (inclusive)."""
    lo, hi = t_range
    curve = rmse_over_time(results)
    sel = curve[(curve[:, 0] >= lo - 1e-9) & (curve[:, 0] <= hi + 1e-9), 1]
    if sel.size == 0:
        raise ValueError(f"no time steps inside {t_range}")
    levels = np.sort(sel)
    return np.column_stack([levels, np.arange(1, levels.size + 1) / levels.size])


def mean_rmse(results: Sequence[RunResult], t_range: tuple[float, float]) -> float:
    curve = rmse_over_time(results)
    lo, hi = t_range
    mask = (curve[:, 0] >= lo - 1e-9) & (curve[:, 0] <= hi + 1e-9)
    return float(curve[mask, 1].mean())


def lost_fraction(results: Sequence[RunResult], threshold: float = LOST_TRACK_ERROR) -> float:
    return float(np.mean([r.final_error > threshold for r in results]))


def crlb_curve(results: Sequence[RunResult]) -> np.ndarray:
    """Root-mean-square SP-CRLB across runs at each step."""
    return np.sqrt(np.mean([r.sp_crlb**2 for r in results], axis=0))


# --- export ------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".10g")


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def export(results: dict[str, list[RunResult]], config: ExperimentConfig, out_dir) -> list[Path]:
    """Write rmse_vs_time.csv, rmse_cdf.csv, summary.csv, traces/<variant>.csv and manifest.yaml."""
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    labels = list(results)
    any_runs = next(iter(results.values()))
    written = []

    curves = {k: rmse_over_time(v) for k, v in results.items()}
    bound = crlb_curve(any_runs)
    path = out / "rmse_vs_time.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + labels + ["sp_crlb"])
        t = curves[labels[0]][:, 0]
        for i in range(t.size):
            w.writerow([_fmt(t[i])] + [_fmt(curves[k][i, 1]) for k in labels] + [_fmt(bound[i])])
    written.append(path)

    duration = config.scenario.duration
    windows = [(0.0, duration), PRE_OLOS_WINDOW]
    path = out / "rmse_cdf.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_start", "t_end", "variant", "rmse", "cum_freq"])
        for lo, hi in windows:
            for k in labels:
                for level, freq in rmse_cdf(results[k], (lo, hi)):
                    w.writerow([_fmt(lo), _fmt(hi), k, _fmt(level), _fmt(freq)])
    written.append(path)

    path = out / "summary.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "runs", "mean_rmse_full", "mean_rmse_pre_olos", "final_error_gt_5m", "runs_with_lost_steps"])
        for k in labels:
            res = results[k]
            w.writerow(
                [
                    k,
                    len(res),
                    _fmt(mean_rmse(res, (0.0, duration))),
                    _fmt(mean_rmse(res, PRE_OLOS_WINDOW)),
                    _fmt(lost_fraction(res)),
                    sum(1 for r in res if r.lost_steps),
                ]
            )
    written.append(path)

    j = len(config.scenario.anchors)
    for k in labels:
        path = out / "traces" / f"{k}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(
                ["run", "n", "t", "true_x", "true_y", "est_x", "est_y", "est_vx", "est_vy", "sq_err"]
                + [f"u_{a}" for a in range(1, j + 1)]
                + [f"q_{a}" for a in range(1, j + 1)]
                + ["lost"]
            )
            for r in results[k]:
                sq = r.sq_err
                lost = set(r.lost_steps)
                for i in range(r.t.size):
                    w.writerow(
                        [r.run, i + 1, _fmt(r.t[i])]
                        + [_fmt(v) for v in r.true_pos[i]]
                        + [_fmt(v) for v in r.est_state[i]]
                        + [_fmt(sq[i])]
                        + [_fmt(v) for v in r.est_u[i]]
                        + [_fmt(v) for v in r.est_q[i]]
                        + [int(i + 1 in lost)]
                    )
        written.append(path)

    manifest = {
        "config": config.to_dict(),
        "run_seeds": {"master": config.seed, "scheme": "SeedSequence([seed, run]).spawn(2) -> (scenario, filter)"},
        "build": {"package": __version__, "git": git_describe(), "kernel_backend": kernels.BACKEND},
    }
    path = out / "manifest.yaml"
    path.write_text(dump_yaml(manifest))
    written.append(path)
    return written
