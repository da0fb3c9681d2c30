from dataclasses import dataclass, field

import numpy as np


class ConvergenceError(RuntimeError):
    """A solver hit an iteration cap; ``report`` holds the last state if any."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class SolveReport:
    """Outcome of one solver run at a fixed multiplier pair.

    ``rate`` is NaN when ``converged`` is false; the bounds are still those
    of the last iterate so the residual gap stays visible.  ``history`` is
    filled only when the solver was asked to record (one entry per outer
    iteration, lists keyed by quantity).
    """

    scheme: str
    s_D: float
    s_P: float
    D_s: float
    P_s: float
    rate: float
    lower_bound: float
    upper_bound: float
    omega: float
    outer_iters: int
    total_inner_iters: int
    converged: bool
    final_marginal: np.ndarray
    final_Q: np.ndarray
    certificate: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    @property
    def lagrangian(self):
        return self.rate + self.s_D * self.D_s + self.s_P * self.P_s

    def to_dict(self, history=False):
        out = {
            "scheme": self.scheme,
            "s_D": self.s_D,
            "s_P": self.s_P,
            "D": self.D_s,
            "P": self.P_s,
            "R": self.rate,
            "R_L": self.lower_bound,
            "R_U": self.upper_bound,
            "omega": self.omega,
            "outer_iters": self.outer_iters,
            "total_inner_iters": self.total_inner_iters,
            "converged": self.converged,
            "final_marginal": self.final_marginal.tolist(),
            "final_Q": self.final_Q.tolist(),
            "certificate": self.certificate.tolist(),
            "diagnostics": {k: v.tolist() if isinstance(v, np.ndarray) else v
                            for k, v in self.diagnostics.items()},
        }
        if history:
            out["history"] = {
                k: [x.tolist() if isinstance(x, np.ndarray) else x for x in v]
                for k, v in self.history.items()
            }
        return out
