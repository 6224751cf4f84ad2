"""State-transition kernels: agent kinematics, amplitude walk, LOS-probability chain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import AgentState, LosGrid


@dataclass(frozen=True)
class KinematicModel:
    """Constant-velocity model driven by white Gaussian acceleration.

    State layout is ``[px, py, vx, vy]``.
    """

    dt: float = 0.05
    sigma_a: float = 0.3
    A: np.ndarray = field(init=False, repr=False)
    B: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.dt > 0 or self.sigma_a < 0:
            raise ValueError("need dt > 0 and sigma_a >= 0")
        dt = self.dt
        a = np.eye(4)
        a[0, 2] = a[1, 3] = dt
        b = np.zeros((4, 2))
        b[0, 0] = b[1, 1] = 0.5 * dt * dt
        b[2, 0] = b[3, 1] = dt
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    def noise_cov(self) -> np.ndarray:
        return self.sigma_a**2 * self.B @ self.B.T

    def propagate(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Propagate an (R, 4) particle array one step."""
        w = rng.standard_normal((states.shape[0], 2)) * self.sigma_a
        return states @ self.A.T + w @ self.B.T


@dataclass(frozen=True)
class AmplitudeWalk:
    """Gaussian random walk on the normalized amplitude.

    Proposals below zero are reflected and those above ``u_max`` clipped, so
    the walk stays on the support of the amplitude prior.
    """

    sigma_u: float = 0.2
    u_max: float = np.inf

    def __post_init__(self):
        if self.sigma_u < 0:
            raise ValueError("sigma_u must be non-negative")

    def propagate(self, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        prop = np.abs(u + self.sigma_u * rng.standard_normal(np.shape(u)))
        return np.minimum(prop, self.u_max)


def sample_state_transition(x: AgentState, model: KinematicModel, rng: np.random.Generator) -> AgentState:
    return AgentState.from_vector(model.propagate(x.as_vector()[None, :], rng)[0])


def sample_amplitude_transition(u: float, walk: AmplitudeWalk, rng: np.random.Generator) -> float:
    if u < 0:
        raise ValueError("u must be non-negative")
    return float(walk.propagate(np.array([u]), rng)[0])


def default_los_grid() -> LosGrid:
    """Ten LOS-probability levels 0.1..1 with a sticky, slowly drifting chain."""
    values = np.round(np.arange(1, 11) / 10.0, 12)
    trans = np.zeros((10, 10))
    trans[0, 0] = 0.9
    trans[1, 0] = 0.1
    trans[9, 9] = 0.95
    trans[8, 9] = 0.05
    for k in range(1, 9):
        trans[k, k] = 0.85
        trans[k - 1, k] = 0.05
        trans[k + 1, k] = 0.1
    return LosGrid(values, trans)


def propagate_q_pmf(pmf, grid: LosGrid) -> np.ndarray:
    """One-step prediction of a PMF over the LOS-probability grid."""
    pmf = np.asarray(pmf, dtype=float)
    if pmf.shape != grid.values.shape:
        raise ValueError(f"pmf must have {len(grid)} entries")
    if abs(pmf.sum() - 1.0) > 1e-9 or np.any(pmf < 0):
        raise ValueError("pmf must be a normalized probability vector")
    return grid.transition @ pmf
