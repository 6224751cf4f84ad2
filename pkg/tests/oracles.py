"""Independent reference computations used by the filter and acceptance tests.

Nothing here goes through the filter's log-domain message algebra: the
enumeration multiplies ``joint_factor`` values over every hypothesis, and the
PDA weight is the textbook non-parametric formula written out directly.
"""

import itertools

import numpy as np
from scipy.stats import norm

from apdaloc.filter import Belief
from apdaloc.likelihoods import joint_factor
from apdaloc.types import AmplitudeParams, Anchor, NlosParams, Scan, make_anchors


def enumerate_posterior(
    belief: Belief,
    scans: list[Scan],
    anchors: list[Anchor],
    nlos: NlosParams,
    amp: AmplitudeParams,
    grid_values: np.ndarray,
    use_amplitude: bool = True,
):
    """Exact marginals of x, u^(j), q^(j) by summing the joint over every (x, u, q, a) combination."""
    r_count = belief.n_particles
    j_count = len(anchors)
    per_anchor = [
        list(itertools.product(range(belief.u.shape[1]), range(grid_values.size), range(len(scan) + 1)))
        for scan in scans
    ]
    px = np.zeros(r_count)
    pu = np.zeros(belief.u.shape)
    pq = np.zeros(belief.q_pmf.shape)
    for r in range(r_count):
        pos = belief.x[r, :2]
        for combo in itertools.product(*per_anchor):
            w = belief.x_weights[r]
            for j, (k, i, a) in enumerate(combo):
                w *= belief.u_weights[j, k] * belief.q_pmf[j, i]
                w *= joint_factor(
                    scans[j], pos, belief.u[j, k], a, grid_values[i], anchors[j], nlos, amp, use_amplitude
                )
            px[r] += w
            for j, (k, i, _) in enumerate(combo):
                pu[j, k] += w
                pq[j, i] += w
    total = px.sum()
    return px / total, pu / total, pq / total


def tiny_instance(seed: int = 7):
    """Three agent positions on a line, two anchors on the same line, M=2, two u and two q values."""
    rng = np.random.default_rng(seed)
    anchors = make_anchors([(-4.0, 0.0), (6.0, 0.0)])
    x = np.zeros((3, 4))
    x[:, 0] = [-1.0, 0.5, 2.0]
    x_w = np.array([0.2, 0.5, 0.3])
    u = np.array([[2.0, 6.0], [1.0, 4.0]])
    u_w = np.array([[0.3, 0.7], [0.6, 0.4]])
    grid_values = np.array([0.4, 0.9])
    q_pmf = np.array([[0.25, 0.75], [0.5, 0.5]])
    belief = Belief(x, x_w, u, u_w, q_pmf)
    true_p = np.array([0.6, 0.0])
    scans = []
    for anchor in anchors:
        d = np.hypot(*(true_p - anchor.position))
        d_hat = [d + rng.normal(0, 0.3), rng.uniform(0, 20)]
        u_hat = [rng.uniform(1, 6), rng.rayleigh()]
        sigma = [0.4, 0.5]
        scans.append(Scan.from_arrays(anchor.id, 1, d_hat, u_hat, sigma))
    return belief, scans, anchors, grid_values


def textbook_pda_weight(p, scan: Scan, anchor: Anchor, p_d: float, sigma: float, volume: float) -> float:
    """Non-parametric PDA scan likelihood with uniform clutter density 1/volume and no amplitudes.

    p(Z | x) = (1 - P_D) V^-M + (P_D / M) * sum_m N(z_m; h(x), sigma^2) V^-(M-1)
    """
    z = np.array([m.d_hat for m in scan.measurements])
    m = z.size
    miss = (1.0 - p_d) * volume ** (-m)
    if m == 0:
        return miss
    h = float(np.hypot(*(np.asarray(p, dtype=float) - anchor.position)))
    return miss + p_d / m * float(np.sum(norm.pdf(z, loc=h, scale=sigma))) * volume ** (-(m - 1))
