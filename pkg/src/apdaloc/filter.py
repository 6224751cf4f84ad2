"""Particle-based sum-product filter for adaptive PDA localization.

Beliefs are kept as three independent families per time step: weighted
agent-state particles, one weighted amplitude particle set per anchor, and one
PMF over the LOS-probability grid per anchor.  Each anchor's factor couples
the agent position, that anchor's amplitude and LOS probability, and the
association variable, which is summed out exactly.

The measurement-update messages factor per measurement, so the amplitude
integral is evaluated once per scan instead of once per agent particle:

    xi(p) = prod_m f_NL(d_m | p) * [c0 + E[q]/M * sum_m Lambda_d(m; p) * V_m]

with ``c0 = 1 - E[q] E[P_D]`` and ``V_m = E_u[P_D(u) Lambda_u(m; u)]``.
Everything is accumulated in the log domain.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DomainError, TrackLostError
from .likelihoods import check_scan, log_amplitude_ratio, log_detection_prob
from .motion import AmplitudeWalk, KinematicModel
from .types import AgentState, AmplitudeParams, Anchor, LosGrid, NlosParams, Scan, los_distances


@dataclass(frozen=True)
class FilterFeatures:
    """Switches for the ablation ladder AL1..AL5."""

    track_q: bool = True
    use_amplitude: bool = True
    nonuniform_nlos: bool = True
    crlb_sigma: bool = True

    @classmethod
    def variant(cls, name: str) -> FilterFeatures:
        try:
            return VARIANTS[name.upper()]
        except KeyError:
            raise ValueError(f"unknown algorithm variant {name!r}; expected one of {sorted(VARIANTS)}")

    @property
    def name(self) -> str | None:
        for key, flags in VARIANTS.items():
            if flags == self:
                return key
        return None


VARIANTS = {
    "AL1": FilterFeatures(False, False, False, False),
    "AL2": FilterFeatures(True, False, False, False),
    "AL3": FilterFeatures(True, True, False, False),
    "AL4": FilterFeatures(True, True, True, False),
    "AL5": FilterFeatures(True, True, True, True),
}


@dataclass(frozen=True)
class FilterSettings:
    """Constants used when a feature is switched off, plus numerical knobs."""

    q_fixed: float = 0.999
    sigma_const: float = 0.1
    resample_threshold: float = 0.5
    xi_floor: float = 1e-300


@dataclass
class Belief:
    """Particle/PMF representation of the marginal posteriors at one time.

    ``x`` is (R, 4) with rows ``[px, py, vx, vy]``; ``u`` and ``u_weights``
    are (J, R_u); ``q_pmf`` is (J, Q).
    """

    x: np.ndarray
    x_weights: np.ndarray
    u: np.ndarray
    u_weights: np.ndarray
    q_pmf: np.ndarray

    @property
    def n_particles(self) -> int:
        return self.x.shape[0]

    @property
    def n_anchors(self) -> int:
        return self.u.shape[0]

    def copy(self) -> Belief:
        return Belief(*(np.array(a, copy=True) for a in dataclasses.astuple(self)))

    def check(self, atol: float = 1e-9) -> None:
        for name, w in (("x_weights", self.x_weights), ("u_weights", self.u_weights), ("q_pmf", self.q_pmf)):
            if np.any(w < 0) or not np.allclose(w.sum(axis=-1), 1.0, rtol=0, atol=atol):
                raise ValueError(f"{name} not normalized")


@dataclass(frozen=True)
class Estimate:
    state: AgentState
    u: np.ndarray
    q: np.ndarray


def init_belief(
    anchors: Sequence[Anchor],
    d_max: float,
    amp: AmplitudeParams,
    grid: LosGrid,
    r_init: int,
    rng: np.random.Generator,
    r_u: int = 1000,
) -> Belief:
    """Uninformed prior: positions uniform on the union of range discs, zero velocity."""
    if r_init < 1 or r_u < 1 or not anchors:
        raise ValueError("need r_init >= 1, r_u >= 1 and at least one anchor")
    centers = np.array([a.position for a in anchors])
    which = rng.integers(len(anchors), size=r_init)
    radius = d_max * np.sqrt(rng.random(r_init))
    angle = 2.0 * np.pi * rng.random(r_init)
    x = np.zeros((r_init, 4))
    x[:, 0] = centers[which, 0] + radius * np.cos(angle)
    x[:, 1] = centers[which, 1] + radius * np.sin(angle)
    j = len(anchors)
    q_pmf = np.zeros((j, len(grid)))
    q_pmf[:, -1] = 1.0
    return Belief(
        x=x,
        x_weights=np.full(r_init, 1.0 / r_init),
        u=rng.uniform(0.0, amp.u_max, size=(j, r_u)),
        u_weights=np.full((j, r_u), 1.0 / r_u),
        q_pmf=q_pmf,
    )


def predict(
    belief: Belief,
    kin: KinematicModel,
    walk: AmplitudeWalk,
    grid: LosGrid,
    rng: np.random.Generator,
) -> Belief:
    """Prediction messages: move every particle through its transition kernel."""
    return Belief(
        x=kin.propagate(belief.x, rng),
        x_weights=belief.x_weights.copy(),
        u=walk.propagate(belief.u, rng),
        u_weights=belief.u_weights.copy(),
        q_pmf=belief.q_pmf @ grid.transition.T,
    )


@dataclass
class _AnchorTerms:
    log_nl_sum: np.ndarray  # (R,)
    log_ratio: np.ndarray  # (R, M) distance likelihood ratio
    log_pd: np.ndarray  # (R_u,)
    log_amp_ratio: np.ndarray  # (R_u, M)
    log_v: np.ndarray  # (M,) E_u[P_D * amplitude ratio]
    e_pd: float
    q_values: np.ndarray
    q_pmf: np.ndarray
    log_xi: np.ndarray  # (R,) before flooring

    @property
    def m_count(self) -> int:
        return self.log_ratio.shape[1]

    @property
    def e_q(self) -> float:
        return float(self.q_values @ self.q_pmf)


def _effective_params(nlos: NlosParams, features: FilterFeatures) -> NlosParams:
    return nlos if features.nonuniform_nlos else dataclasses.replace(nlos, p_mp=0.0)


def _anchor_terms(
    belief: Belief,
    j: int,
    scan: Scan,
    anchor: Anchor,
    nlos: NlosParams,
    amp: AmplitudeParams,
    features: FilterFeatures,
    settings: FilterSettings,
    grid_values: np.ndarray | None,
) -> _AnchorTerms:
    if scan.anchor_id != anchor.id:
        raise ValueError(f"scan for anchor {scan.anchor_id} passed with anchor {anchor.id}")
    check_scan(scan, nlos.d_max)
    nl = _effective_params(nlos, features)
    d_hat, u_hat, sigma = scan.arrays()
    if not features.crlb_sigma:
        sigma = np.full_like(d_hat, settings.sigma_const)
    m_count = d_hat.size

    d_los = los_distances(belief.x, anchor.position)
    log_nl_sum, log_ratio = kernels.distance_terms(
        d_los, d_hat, sigma, nl.p_mp, nl.gamma_r, nl.gamma_f, nl.bias_b, nl.d_max
    )

    u = belief.u[j]
    log_uw = _log(belief.u_weights[j])
    log_pd = log_detection_prob(u, amp.gamma)
    if features.use_amplitude and m_count:
        log_amp = log_amplitude_ratio(u_hat, u, amp)
    else:
        if np.any(u_hat < amp.gamma):
            raise DomainError("amplitude below detection threshold")
        log_amp = np.zeros((u.size, m_count))
    log_v = kernels.column_log_mix(log_amp, log_uw + log_pd) if m_count else np.empty(0)
    e_pd = float(np.exp(logsumexp(log_uw + log_pd)))

    if features.track_q:
        q_values, q_pmf = grid_values, belief.q_pmf[j]
    else:
        q_values, q_pmf = np.array([settings.q_fixed]), np.array([1.0])
    e_q = float(q_values @ q_pmf)

    log_c0 = _log(1.0 - e_q * e_pd)
    if m_count:
        log_xi = kernels.row_log_mix(log_nl_sum, log_ratio, log_c0, np.log(e_q / m_count) + log_v)
    else:
        log_xi = np.full(d_los.size, log_c0)
    return _AnchorTerms(log_nl_sum, log_ratio, log_pd, log_amp, log_v, e_pd, q_values, q_pmf, log_xi)


def logsumexp(a, axis=None):
    """Stable log-sum-exp without scipy's array-API overhead (called per anchor per step)."""
    a = np.asarray(a, dtype=float)
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - top), axis=axis, keepdims=True)) + top
    return out.item() if axis is None else np.squeeze(out, axis=axis)


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(x, 0.0))


def anchor_update_message(
    belief: Belief,
    scan: Scan,
    anchor: Anchor,
    nlos: NlosParams,
    amp: AmplitudeParams,
    features: FilterFeatures = FilterFeatures(),
    settings: FilterSettings = FilterSettings(),
    grid_values: np.ndarray | None = None,
    log: bool = False,
) -> np.ndarray:
    """Message from one anchor's factor to every agent particle.

    ``anchor.id`` selects the anchor's amplitude/LOS beliefs (ids are 1-based).
    ``grid_values`` are the LOS-probability levels matching ``belief.q_pmf``;
    they may be omitted when ``features.track_q`` is off.
    """
    if features.track_q and grid_values is None:
        raise ValueError("grid_values required when tracking q")
    terms = _anchor_terms(belief, anchor.id - 1, scan, anchor, nlos, amp, features, settings, grid_values)
    return terms.log_xi if log else np.exp(terms.log_xi)


def _normalized(log_w: np.ndarray) -> np.ndarray:
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def _ess(w: np.ndarray) -> float:
    return 1.0 / float(np.dot(w, w))


def _resample_if_needed(values, weights, threshold, rng):
    n = weights.size
    if _ess(weights) >= threshold * n:
        return values, weights
    idx = kernels.systematic_resample(weights, n, rng.random())
    return values[idx], np.full(n, 1.0 / n)


def measurement_update(
    belief: Belief,
    scans: Sequence[Scan],
    anchors: Sequence[Anchor],
    nlos: NlosParams,
    amp: AmplitudeParams,
    features: FilterFeatures,
    rng: np.random.Generator | None,
    grid_values: np.ndarray | None = None,
    settings: FilterSettings = FilterSettings(),
    resample: bool = True,
) -> Belief:
    """Combine one scan per anchor into the agent, amplitude and LOS beliefs.

    With ``resample=False`` the weights are returned exactly as the messages
    produce them, which is what the exact-enumeration tests compare against.
    """
    if len(scans) != len(anchors) or len(anchors) != belief.n_anchors:
        raise ValueError("need exactly one scan per anchor")
    if features.track_q and grid_values is None:
        raise ValueError("grid_values required when tracking q")

    terms = [
        _anchor_terms(belief, j, scan, anchor, nlos, amp, features, settings, grid_values)
        for j, (scan, anchor) in enumerate(zip(scans, anchors))
    ]
    floor = np.log(settings.xi_floor)
    log_xi = np.array([np.maximum(t.log_xi, floor) for t in terms])  # (J, R)
    if np.all(log_xi <= floor):
        raise TrackLostError("no agent particle is supported by any anchor", scans[0].time_index)

    log_prior = _log(belief.x_weights)
    log_total = log_prior + log_xi.sum(axis=0)
    if not np.any(np.isfinite(log_total)):
        raise TrackLostError("agent weights collapsed", scans[0].time_index)

    new_u = belief.u.copy()
    new_uw = belief.u_weights.copy()
    new_q = belief.q_pmf.copy()
    for j, t in enumerate(terms):
        # extrinsic information from all other anchors, weighted by the NLOS product
        log_kappa = log_total - log_xi[j] + t.log_nl_sum
        log_kappa -= logsumexp(log_kappa)
        m = t.m_count
        log_d = kernels.column_log_mix(t.log_ratio, log_kappa) if m else np.empty(0)
        e_q = t.e_q

        if m:
            los_u = np.log(e_q / m) + t.log_pd + kernels.row_log_mix(np.zeros(t.log_pd.size), t.log_amp_ratio, -np.inf, log_d)
        else:
            los_u = -np.inf
        log_nu = np.logaddexp(_log(1.0 - np.exp(t.log_pd) * e_q), los_u)
        post = _log(belief.u_weights[j]) + log_nu
        if np.any(np.isfinite(post)):
            new_uw[j] = _normalized(post)

        if features.track_q:
            los_q = np.log(t.q_values / m) + logsumexp(log_d + t.log_v) if m else -np.inf
            log_beta = np.logaddexp(_log(1.0 - t.q_values * t.e_pd), los_q)
            post_q = _log(belief.q_pmf[j]) + log_beta
            if np.any(np.isfinite(post_q)):
                new_q[j] = _normalized(post_q)

    new_x = belief.x
    new_xw = _normalized(log_total)
    if resample:
        assert rng is not None
        new_x, new_xw = _resample_if_needed(new_x, new_xw, settings.resample_threshold, rng)
        for j in range(belief.n_anchors):
            new_u[j], new_uw[j] = _resample_if_needed(new_u[j], new_uw[j], settings.resample_threshold, rng)
    return Belief(new_x.copy(), new_xw, new_u, new_uw, new_q)


def estimate(belief: Belief, q_fixed: float | None = None, grid_values: np.ndarray | None = None) -> Estimate:
    """Posterior means of agent state, per-anchor amplitude and per-anchor LOS probability."""
    x_mean = belief.x_weights @ belief.x
    u_mean = np.einsum("jr,jr->j", belief.u_weights, belief.u)
    if q_fixed is not None:
        q_mean = np.full(belief.n_anchors, q_fixed)
    else:
        if grid_values is None:
            raise ValueError("grid_values required for the LOS-probability estimate")
        q_mean = belief.q_pmf @ grid_values
    return Estimate(AgentState.from_vector(x_mean), u_mean, q_mean)


def downselect(belief: Belief, r_track: int, rng: np.random.Generator) -> Belief:
    """Systematically resample the agent particles down to ``r_track`` equally weighted ones."""
    if not 1 <= r_track <= belief.n_particles:
        raise ValueError("r_track must lie in [1, current particle count]")
    idx = kernels.systematic_resample(belief.x_weights, r_track, rng.random())
    return Belief(
        belief.x[idx].copy(),
        np.full(r_track, 1.0 / r_track),
        belief.u.copy(),
        belief.u_weights.copy(),
        belief.q_pmf.copy(),
    )


class Tracker:
    """Runs predict/update/estimate over consecutive time steps.

    The first update uses ``r_init`` particles, after which the agent belief is
    down-selected to ``r_track`` particles.  When an update raises
    :class:`TrackLostError` the predicted belief is kept and the error is
    recorded in ``lost_steps``.
    """

    def __init__(
        self,
        anchors: Sequence[Anchor],
        nlos: NlosParams,
        amp: AmplitudeParams,
        grid: LosGrid,
        kin: KinematicModel,
        walk: AmplitudeWalk,
        features: FilterFeatures = FilterFeatures(),
        settings: FilterSettings = FilterSettings(),
        r_init: int = 10_000,
        r_track: int = 1000,
        r_u: int = 1000,
    ):
        self.anchors = list(anchors)
        self.nlos, self.amp, self.grid = nlos, amp, grid
        self.kin, self.walk = kin, walk
        self.features, self.settings = features, settings
        self.r_init, self.r_track, self.r_u = r_init, r_track, r_u
        self.belief: Belief | None = None
        self.lost_steps: list[int] = []
        self._first_update_done = False

    def reset(self, rng: np.random.Generator) -> None:
        self.belief = init_belief(self.anchors, self.nlos.d_max, self.amp, self.grid, self.r_init, rng, self.r_u)
        self.lost_steps = []
        self._first_update_done = False

    def step(self, scans: Sequence[Scan], rng: np.random.Generator) -> Estimate:
        if self.belief is None:
            self.reset(rng)
        predicted = predict(self.belief, self.kin, self.walk, self.grid, rng)
        first = not self._first_update_done
        try:
            updated = measurement_update(
                predicted,
                scans,
                self.anchors,
                self.nlos,
                self.amp,
                self.features,
                rng,
                grid_values=self.grid.values,
                settings=self.settings,
                resample=not first,
            )
        except TrackLostError as err:
            self.lost_steps.append(scans[0].time_index if err.time_index is None else err.time_index)
            updated = predicted
        if first:
            updated = downselect(updated, min(self.r_track, updated.n_particles), rng)
            self._first_update_done = True
        self.belief = updated
        return self.current_estimate()

    def current_estimate(self) -> Estimate:
        q_fixed = None if self.features.track_q else self.settings.q_fixed
        return estimate(self.belief, q_fixed=q_fixed, grid_values=self.grid.values)
