"""Certified rate bounds and the gap-based stopping quantity."""

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .divergences import eval_divergence
from .kernel import as_pair, tilt_state, w_hat
from .prob import expected_distortion


@dataclass(frozen=True)
class BoundsPair:
    lower: float
    upper: float
    gap: float
    c_max: float
    at_D: float
    at_P: float


def gap_omega(u, c):
    """``log max c - sum_y u(y) c(y) log c(y)``; zero exactly at optimality."""
    u = np.asarray(u, dtype=float)
    c = np.asarray(c, dtype=float)
    return float(np.log(c.max()) - np.sum(u * xlogy(c, c)))


def bounds(p, u, v, u_next, c, s, d, spec, state=None):
    """Lower/upper bounds on R at the (D, P) realized by ``Q = parametric_Q(p, u, v)``.

    ``state`` optionally reuses a :func:`rdpf.kernel.tilt_state` result for
    ``(u, v)``.
    """
    s = as_pair(s)
    if state is None:
        state = tilt_state(p, u, v, s, d, spec)
    c = np.asarray(c, dtype=float)
    at_D = expected_distortion(p, state.Q, d)
    at_P = eval_divergence(spec, p, u_next) if spec is not None else 0.0
    base = w_hat(p, u, v, u_next, s, d, spec, log_z=state.log_z) - s.s_D * at_D - s.s_P * at_P
    c_max = float(c.max())
    lower = base - float(np.log(c_max))
    upper = base - float(np.sum(np.asarray(u, dtype=float) * xlogy(c, c)))
    return BoundsPair(lower, upper, upper - lower, c_max, at_D, at_P)
