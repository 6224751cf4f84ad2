"""Ground-truth trajectories and measurement scans at the estimator-output level.

No waveforms are simulated: each scan holds (distance, amplitude, distance std)
triples for the LOS component, when visible, plus Poisson-many NLOS
components drawn from the multipath/false-alarm mixture.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .crlb import CrlbContext, sigma_from_amplitude
from .types import AgentState, Anchor, NlosParams, Scan, make_anchors

SCAN_FILE_FORMAT = "apdaloc-scans"
SCAN_FILE_VERSION = 1

DEFAULT_ANCHORS = ((-1.5, -0.6), (1.5, -0.6), (0.0, 1.2))
DEFAULT_WAYPOINTS = ((-20.0, 10.0), (-12.0, 11.0), (-6.0, 6.0), (-2.0, 2.5), (0.0, 0.0))


@dataclass(frozen=True)
class OlosWindow:
    """LOS to ``anchors`` is blocked for ``start < t <= end`` (seconds)."""

    anchors: tuple[int, ...]
    start: float
    end: float

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple(int(a) for a in self.anchors))
        if self.end < self.start:
            raise ValueError("OLOS window ends before it starts")

    def blocks(self, anchor_id: int, t: float) -> bool:
        return anchor_id in self.anchors and self.start < t <= self.end


def default_olos_windows(n_anchors: int = 3) -> tuple[OlosWindow, ...]:
    return (
        OlosWindow((1,), 6.0, 8.0),
        OlosWindow(tuple(range(1, n_anchors + 1)), 14.2, 16.2),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    anchors: tuple[tuple[float, float], ...] = DEFAULT_ANCHORS
    duration: float = 20.0
    dt: float = 0.05
    speed_nominal: float = 1.4
    speed_variation: float = 0.15
    ramp_time: float = 0.0
    waypoints: tuple[tuple[float, float], ...] = DEFAULT_WAYPOINTS
    waypoint_jitter: float = 0.0
    snr_ref_db: float = 30.0
    pathloss_exponent: float = 0.4
    pathloss_domain: str = "amplitude"
    clutter_rate: float = 10.0
    nlos: NlosParams = NlosParams()
    effective_bandwidth: float = 1e8
    olos_windows: tuple[OlosWindow, ...] = field(default_factory=default_olos_windows)

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple(tuple(map(float, a)) for a in self.anchors))
        object.__setattr__(self, "waypoints", tuple(tuple(map(float, w)) for w in self.waypoints))
        n = self.duration / self.dt
        if abs(n - round(n)) > 1e-9 or n < 1:
            raise ValueError("duration must be a positive integer multiple of dt")
        if self.clutter_rate < 0 or self.speed_nominal <= 0 or self.effective_bandwidth <= 0:
            raise ValueError("rates, speeds and bandwidth must be positive")
        if self.pathloss_domain not in ("amplitude", "power"):
            raise ValueError("pathloss_domain must be 'amplitude' or 'power'")
        if len(self.waypoints) < 2:
            raise ValueError("need at least two waypoints")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def anchor_list(self) -> list[Anchor]:
        return make_anchors(self.anchors)

    @property
    def crlb_context(self) -> CrlbContext:
        return CrlbContext(beta=self.effective_bandwidth)

    def time(self, n) -> np.ndarray | float:
        """Continuous time of step ``n`` (steps are numbered from 1)."""
        return np.round(np.asarray(n) * self.dt, 9)

    def is_blocked(self, anchor_id: int, n: int) -> bool:
        t = float(self.time(n))
        return any(w.blocks(anchor_id, t) for w in self.olos_windows)


def trajectory_array(config: ScenarioConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """(N + 1, 4) array of true states for n = 0..N.

    The waypoint spline is scaled about its end point so that its arc length
    equals ``speed_nominal * duration``; speed is then modulated sinusoidally
    by ``speed_variation`` around the nominal value.
    """
    way = np.array(config.waypoints, dtype=float)
    if config.waypoint_jitter > 0:
        if rng is None:
            raise ValueError("waypoint jitter needs an rng")
        way[1:-1] += config.waypoint_jitter * rng.standard_normal(way[1:-1].shape)
    chord = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(way, axis=0).T))])
    spline = CubicSpline(chord, way, bc_type="natural")

    dense = np.linspace(0.0, chord[-1], 20001)
    pts = spline(dense)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])

    n = config.n_steps
    t = config.time(np.arange(n + 1))
    s = _distance_travelled(t, config)
    scale = s[-1] / arc[-1]
    param = np.interp(s / scale, arc, dense)
    pos = way[-1] + scale * (spline(param) - way[-1])

    vel = np.empty_like(pos)
    vel[1:] = np.diff(pos, axis=0) / config.dt
    vel[0] = vel[1]
    return np.hstack([pos, vel])


def speed_profile(t, config: ScenarioConfig) -> np.ndarray:
    """Agent speed [m/s]: sinusoidal variation around the nominal speed after a smooth start."""
    t = np.asarray(t, dtype=float)
    period = config.duration / 2.0
    v = config.speed_nominal * (1.0 + config.speed_variation * np.sin(2 * np.pi * t / period))
    if config.ramp_time > 0:
        x = np.clip(t / config.ramp_time, 0.0, 1.0)
        v = v * x * x * (3.0 - 2.0 * x)
    return v


def _distance_travelled(t: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    fine = np.linspace(0.0, config.duration, 40 * config.n_steps + 1)
    v = speed_profile(fine, config)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(fine))])
    return np.interp(t, fine, cum)


def gen_trajectory(config: ScenarioConfig, rng: np.random.Generator | None = None) -> list[AgentState]:
    """True agent states for steps n = 1..N."""
    traj = trajectory_array(config, rng)
    return [AgentState.from_vector(row) for row in traj[1:]]


def los_amplitude(d, config: ScenarioConfig):
    """Normalized LOS amplitude at distance ``d`` [m] (clamped below at 0.1 m)."""
    d = np.maximum(np.asarray(d, dtype=float), 0.1)
    u_ref = 10.0 ** (config.snr_ref_db / 20.0)
    exponent = config.pathloss_exponent if config.pathloss_domain == "amplitude" else config.pathloss_exponent / 2
    out = u_ref * d ** (-exponent)
    return out if out.ndim else float(out)


def sample_rice(nu, rng: np.random.Generator, size=None) -> np.ndarray:
    """Unit-spread Rician amplitudes: modulus of a complex Gaussian with mean ``nu``."""
    shape = np.shape(nu) if size is None else size
    return np.hypot(nu + rng.standard_normal(shape), rng.standard_normal(shape))


def sample_mp_offset(params: NlosParams, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draws from the double-exponential excess-distance density.

    The density is the convolution of two exponentials with scales ``gamma_f``
    and ``gamma_r * gamma_f / (gamma_r + gamma_f)``.
    """
    fast = params.gamma_r * params.gamma_f / (params.gamma_r + params.gamma_f)
    return rng.exponential(params.gamma_f, size) + rng.exponential(fast, size)


def _sample_nlos_distances(d_los: float, count: int, nlos: NlosParams, rng: np.random.Generator) -> np.ndarray:
    out = rng.uniform(0.0, nlos.d_max, count)
    is_mp = rng.random(count) < nlos.p_mp
    base = d_los + nlos.bias_b
    if base >= nlos.d_max:
        return out
    for i in np.flatnonzero(is_mp):
        # multipath beyond the observation window is not reported; redraw
        while True:
            d = base + float(sample_mp_offset(nlos, rng))
            if d <= nlos.d_max:
                out[i] = d
                break
    return out


def gen_scan(x_true: AgentState, anchor: Anchor, n: int, config: ScenarioConfig, rng: np.random.Generator) -> Scan:
    nlos = config.nlos
    ctx = config.crlb_context
    d_los = float(np.hypot(*(x_true.p - anchor.position)))

    count = int(rng.poisson(config.clutter_rate))
    d_hat = [_sample_nlos_distances(d_los, count, nlos, rng)]
    u_hat = [np.hypot(rng.standard_normal(count), rng.standard_normal(count))]
    is_los = [np.zeros(count, dtype=bool)]

    if not config.is_blocked(anchor.id, n):
        u = los_amplitude(d_los, config)
        u_los = sample_rice(u, rng, 1)
        d = d_los + sigma_from_amplitude(u_los, ctx) * rng.standard_normal(1)
        d_hat.append(np.clip(d, 0.0, nlos.d_max))
        u_hat.append(u_los)
        is_los.append(np.ones(1, dtype=bool))

    d_hat = np.concatenate(d_hat)
    u_hat = np.maximum(np.concatenate(u_hat), 1e-12)
    is_los = np.concatenate(is_los)
    order = rng.permutation(d_hat.size)
    d_hat, u_hat, is_los = d_hat[order], u_hat[order], is_los[order]
    sigma = sigma_from_amplitude(u_hat, ctx) if u_hat.size else np.empty(0)
    return Scan.from_arrays(anchor.id, n, d_hat, u_hat, sigma, is_los)


@dataclass
class Realization:
    """One simulated run: true states for n = 0..N and scans for n = 1..N."""

    truth: np.ndarray
    scans: list[list[Scan]]


def simulate(config: ScenarioConfig, rng: np.random.Generator) -> Realization:
    truth = trajectory_array(config, rng)
    anchors = config.anchor_list
    scans = []
    for n in range(1, config.n_steps + 1):
        state = AgentState.from_vector(truth[n])
        scans.append([gen_scan(state, a, n, config, rng) for a in anchors])
    return Realization(truth, scans)


# --- scan files -----------------------------------------------------------------


def write_scan_file(path, anchors: Sequence[Anchor], dt: float, scans: Sequence[Sequence[Scan]]) -> None:
    """Write scans as JSON lines: one header record, then one record per scan."""
    path = Path(path)
    with path.open("w") as fh:
        header = {
            "format": SCAN_FILE_FORMAT,
            "version": SCAN_FILE_VERSION,
            "dt": dt,
            "anchors": [[a.id, float(a.position[0]), float(a.position[1])] for a in anchors],
        }
        fh.write(json.dumps(header) + "\n")
        for step in scans:
            for scan in step:
                rec = {
                    "n": scan.time_index,
                    "t": round(scan.time_index * dt, 9),
                    "anchor": scan.anchor_id,
                    "z": [[m.d_hat, m.u_hat, m.sigma_d_hat] for m in scan.measurements],
                    "los": list(scan.is_los) if scan.is_los is not None else None,
                }
                fh.write(json.dumps(rec) + "\n")


def read_scan_file(path) -> tuple[list[Anchor], float, list[list[Scan]]]:
    """Inverse of :func:`write_scan_file`; scans are grouped per time step in anchor order."""
    with Path(path).open() as fh:
        header = json.loads(fh.readline())
        if header.get("format") != SCAN_FILE_FORMAT:
            raise ValueError(f"{path}: not a scan file")
        if header.get("version") != SCAN_FILE_VERSION:
            raise ValueError(f"{path}: unsupported scan file version {header.get('version')}")
        anchors = [Anchor(int(i), (x, y)) for i, x, y in header["anchors"]]
        by_time: dict[int, dict[int, Scan]] = {}
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            z = np.array(rec["z"], dtype=float).reshape(-1, 3)
            scan = Scan.from_arrays(rec["anchor"], rec["n"], z[:, 0], z[:, 1], z[:, 2], rec.get("los"))
            by_time.setdefault(rec["n"], {})[rec["anchor"]] = scan
    steps = []
    for n in sorted(by_time):
        row = by_time[n]
        steps.append([row.get(a.id, Scan(a.id, n)) for a in anchors])
    return anchors, float(header["dt"]), steps
