"""Shared value types and geometry."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def _vec2(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite 2-vector: {value!r}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AgentState:
    """Position [m] and velocity [m/s] of the mobile agent."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _vec2(self.p))
        object.__setattr__(self, "v", _vec2(self.v))

    @classmethod
    def from_vector(cls, x) -> AgentState:
        x = np.asarray(x, dtype=float)
        return cls(x[:2], x[2:4])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v])


@dataclass(frozen=True)
class Anchor:
    id: int
    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _vec2(self.position))


def make_anchors(positions: Sequence) -> list[Anchor]:
    """Anchors with contiguous ids 1..J in the given order."""
    return [Anchor(j + 1, pos) for j, pos in enumerate(positions)]


def check_anchor_ids(anchors: Sequence[Anchor]) -> None:
    ids = sorted(a.id for a in anchors)
    if ids != list(range(1, len(anchors) + 1)):
        raise ValueError(f"anchor ids must be unique and contiguous 1..J, got {ids}")


@dataclass(frozen=True)
class Measurement:
    """One estimated component: distance, normalized amplitude, distance std."""

    d_hat: float
    u_hat: float
    sigma_d_hat: float

    def __post_init__(self):
        if self.u_hat < 0:
            raise ValueError("u_hat must be non-negative")
        if not self.sigma_d_hat > 0:
            raise ValueError("sigma_d_hat must be positive")


@dataclass(frozen=True)
class Scan:
    """All measurements of one anchor at one time step.

    ``is_los`` optionally carries the association ground truth from the
    simulator; inference never reads it.
    """

    anchor_id: int
    time_index: int
    measurements: tuple[Measurement, ...] = ()
    is_los: tuple[bool, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(self.measurements))
        if self.is_los is not None:
            object.__setattr__(self, "is_los", tuple(bool(b) for b in self.is_los))
            if len(self.is_los) != len(self.measurements):
                raise ValueError("is_los length must match measurement count")

    def __len__(self) -> int:
        return len(self.measurements)

    @classmethod
    def from_arrays(cls, anchor_id, time_index, d_hat, u_hat, sigma, is_los=None) -> Scan:
        meas = tuple(
            Measurement(float(d), float(u), float(s)) for d, u, s in zip(d_hat, u_hat, sigma)
        )
        return cls(anchor_id, time_index, meas, None if is_los is None else tuple(is_los))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(d_hat, u_hat, sigma_d_hat) as float arrays of length M."""
        if not self.measurements:
            empty = np.empty(0)
            return empty, empty, empty
        a = np.array([(m.d_hat, m.u_hat, m.sigma_d_hat) for m in self.measurements], dtype=float)
        return a[:, 0].copy(), a[:, 1].copy(), a[:, 2].copy()


@dataclass(frozen=True)
class NlosParams:
    """Clutter model: multipath weight, rise/fall distances, bias, max range."""

    p_mp: float = 0.9
    gamma_r: float = 1.5
    gamma_f: float = 6.0
    bias_b: float = 0.2
    d_max: float = 50.0

    def __post_init__(self):
        if not 0.0 <= self.p_mp <= 1.0:
            raise ValueError("p_mp must lie in [0, 1]")
        if min(self.gamma_r, self.gamma_f, self.d_max) <= 0:
            raise ValueError("gamma_r, gamma_f and d_max must be positive")
        if self.bias_b < 0:
            raise ValueError("bias_b must be non-negative")


@dataclass(frozen=True)
class AmplitudeParams:
    gamma: float = 0.0
    u_max: float = 40.0

    def __post_init__(self):
        if not self.u_max > self.gamma >= 0:
            raise ValueError("need u_max > gamma >= 0")


@dataclass(frozen=True)
class LosGrid:
    """Discrete LOS-probability values and their Markov transition matrix.

    ``transition[i, k]`` is the probability of moving to ``values[i]`` from
    ``values[k]``; columns sum to one.
    """

    values: np.ndarray
    transition: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        trans = np.asarray(self.transition, dtype=float)
        q = values.size
        if trans.shape != (q, q):
            raise ValueError(f"transition must be {q}x{q}, got {trans.shape}")
        if np.any(values <= 0) or np.any(values > 1) or np.any(np.diff(values) <= 0):
            raise ValueError("values must be strictly increasing in (0, 1]")
        if np.any(trans < 0) or not np.allclose(trans.sum(axis=0), 1.0, rtol=0, atol=1e-12):
            raise ValueError("transition must be column-stochastic")
        values.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "transition", trans)

    def __len__(self) -> int:
        return self.values.size


def los_distance(p, anchor: Anchor) -> float:
    """Euclidean distance between a position and an anchor."""
    diff = np.asarray(p, dtype=float) - anchor.position
    return float(np.hypot(diff[0], diff[1]))


def los_distances(positions: np.ndarray, anchor_position: np.ndarray) -> np.ndarray:
    """Vectorized distance from each row of ``positions`` (R, 2) to one anchor."""
    diff = positions[:, :2] - anchor_position
    return np.hypot(diff[:, 0], diff[:, 1])
