"""Relaxed alternating minimization (RAM).

The kernel argument is frozen at the current iterate (auxiliary map
``v[u] = u``), which makes the marginal update explicit:
``q_{n+1} = q_n * c[q_n, q_n]``.  Works with non-smooth generators such as
total variation, but is only guaranteed to converge for ``s_P`` below a
curvature-dependent threshold.
"""

import enum
import logging
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import gap_omega
from .kernel import as_pair, tilt_state
from .nam import _assemble, prepare
from .prob import clamp_positive

log = logging.getLogger(__name__)


class SpGuard(str, enum.Enum):
    OFF = "off"
    WARN = "warn"
    REJECT = "reject"


@dataclass(frozen=True)
class RamConfig:
    eps: float = 1e-8
    max_iters: int = 100_000
    sp_guard: SpGuard = SpGuard.WARN

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        object.__setattr__(self, "sp_guard", SpGuard(self.sp_guard))


class SpThreshold(NamedTuple):
    threshold: float
    available: bool


def sp_max_estimate(p, s_D, d, spec, theta_max=None):
    """Upper end of the s_P range where RAM is expected to contract.

    Uses ``1 / f''(1)`` (curvature at likelihood ratio one, where the
    fixed point sits when the perception constraint is tight), sharpened
    to ``1 / (theta_max f''(1))`` when the spectral radius of the OAM
    Jacobian is supplied.  Non-smooth generators give ``(inf, False)``.
    """
    if not spec.smooth:
        return SpThreshold(math.inf, False)
    # a literal f''(0) reading is infinite for KL-type generators and would forbid any s_P > 0
    curv = float(spec.d2f(np.array([1.0]))[0])
    if curv <= 0:
        return SpThreshold(math.inf, True)
    if theta_max is not None and theta_max > 0:
        return SpThreshold(1.0 / (theta_max * curv), True)
    return SpThreshold(1.0 / curv, True)


def ram_step(p, q_n, s, d, spec):
    """One relaxed update; returns ``(q_next, c)`` with ``c = c[q_n, q_n]``."""
    q_n = np.asarray(q_n, dtype=float)
    c = tilt_state(p, q_n, q_n, s, d, spec).c
    return q_n * c, c


def solve_ram(p, s, d, spec, cfg=None, q0=None, record=False):
    """Run RAM at ``s = (s_D, s_P)``; non-convergence is reported, not raised."""
    cfg = cfg or RamConfig()
    s = as_pair(s)
    p, d, q = prepare(p, d, q0)
    guard = sp_max_estimate(p, s.s_D, d, spec)
    if s.s_P > guard.threshold and cfg.sp_guard is not SpGuard.OFF:
        msg = (f"s_P={s.s_P:g} exceeds the RAM contraction estimate "
               f"{guard.threshold:g} for {spec.name}")
        if cfg.sp_guard is SpGuard.REJECT:
            raise ValueError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    history = {k: [] for k in ("omega", "lower", "upper", "D", "P", "marginal")} if record else {}
    step_gap = []
    converged = False
    for n in range(1, cfg.max_iters + 1):
        st = tilt_state(p, q, q, s, d, spec)
        q_next = clamp_positive(q * st.c)
        omega = gap_omega(q, st.c)
        step_gap.append(float(np.max(np.abs(q_next - q))))
        if record:
            rep = _assemble("ram", p, q, q, q_next, st, omega, s, d, spec, n, 0, True, {})
            history["omega"].append(omega)
            history["lower"].append(rep.lower_bound)
            history["upper"].append(rep.upper_bound)
            history["D"].append(rep.D_s)
            history["P"].append(rep.P_s)
            history["marginal"].append(q.copy())
        if omega < cfg.eps:
            converged = True
            break
        q = q_next
    report = _assemble("ram", p, q, q, q_next, st, omega, s, d, spec, n, 0, converged, history)
    report.diagnostics["sp_guard"] = {"threshold": guard.threshold, "available": guard.available}
    report.diagnostics["aux_gap"] = step_gap if record else step_gap[-1000:]
    if not converged:
        log.info("RAM stopped after %d iterations with gap %.3g (s=%s)", n, omega, s)
    return report
