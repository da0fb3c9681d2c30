"""Local convergence audit: fixed-point Jacobians and their spectra.

Near a fixed point ``q*`` the error of each scheme evolves linearly,
``e_{n+1} ~ J e_n``, so the spectral radius of ``J`` predicts the
asymptotic contraction factor.  None of this is used while solving.
"""

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .kernel import as_pair, newton_gamma, newton_m
from .nam import NewtonConfig, _require_smooth, solve_nam
from .ram import RamConfig, SpGuard, solve_ram
from .report import ConvergenceError

EXPONENTIAL_MARGIN = 1e-9
REFERENCE_EPS = 1e-14


class SingularJacobianError(ArithmeticError):
    pass


def _m_gamma(p, q_star, s, d, spec):
    _require_smooth(spec)
    s = as_pair(s)
    q = np.asarray(q_star, dtype=float)
    if np.any(q <= 0):
        raise ValueError("q_star must be strictly positive")
    M = newton_m(p, q, q, s, d, spec)
    G = np.diag(newton_gamma(p, q, q, s, spec))
    return M, G


def fixed_point_jacobian_oam(p, q_star, s, d, spec):
    """``(I + (I - M*) Gamma*)^{-1} (I - M*)``; reduces to ``I - M*`` when ``s_P = 0``."""
    M, G = _m_gamma(p, q_star, s, d, spec)
    eye = np.eye(len(M))
    lhs = eye + (eye - M) @ G
    if np.linalg.cond(lhs) > 1e14:
        raise SingularJacobianError("I + (I - M*) Gamma* is numerically singular")
    return np.linalg.solve(lhs, eye - M)


def fixed_point_jacobian_ram(p, q_star, s, d, spec):
    """``(I - M*)(I - Gamma*)`` for the relaxed scheme."""
    M, G = _m_gamma(p, q_star, s, d, spec)
    eye = np.eye(len(M))
    return (eye - M) @ (eye - G)


def distortion_full_rank(d, s_D):
    """Whether ``exp(-s_D d)`` has full numerical rank."""
    if s_D < 0:
        raise ValueError("s_D must be >= 0")
    sv = np.linalg.svd(np.exp(-s_D * np.asarray(d, dtype=float)), compute_uv=False)
    return bool(sv[-1] > 1e-10 * sv[0])


def fit_convergence_rate(error_trace):
    """Least-squares slope and R^2 of ``log(error)`` against iteration index.

    Only the trailing half of the trace is fitted.  A trace that hits exact
    zero returns ``(-inf, nan)``.
    """
    e = np.asarray(error_trace, dtype=float)
    if e.ndim != 1 or e.size < 10:
        raise ValueError("need a 1-D trace of at least 10 errors")
    if np.any(e < 0) or not np.all(np.isfinite(e)):
        raise ValueError("errors must be finite and non-negative")
    if np.any(e == 0):
        return -math.inf, math.nan
    tail = e[e.size // 2:]
    n = np.arange(e.size // 2, e.size)
    if np.ptp(tail) == 0:
        return 0.0, 1.0
    fit = stats.linregress(n, np.log(tail))
    return float(fit.slope), float(fit.rvalue ** 2)


@dataclass
class SpectralReport:
    theta_max: float
    eigs: np.ndarray
    full_rank_distortion: bool
    predicted_regime: str
    empirical_rate: Optional[float] = None
    fit_r2: Optional[float] = None

    def to_dict(self):
        out = asdict(self)
        eigs = np.asarray(self.eigs)
        out["eigs"] = eigs.real.tolist() if np.allclose(eigs.imag, 0) else [
            [z.real, z.imag] for z in eigs]
        return out


def error_trace(marginals, q_star, floor=1e-13):
    """Sup-norm distances to ``q_star``, cut before they reach round-off level."""
    e = np.array([np.max(np.abs(np.asarray(m) - q_star)) for m in marginals])
    below = np.flatnonzero(e < floor)
    return e[: below[0]] if below.size else e


def _reference_marginal(p, s, d, spec, eps):
    try:
        return solve_nam(p, s, d, spec, eps=eps).final_marginal
    except ConvergenceError as exc:
        if exc.report is None:
            raise
        return exc.report.final_marginal


def spectral_report(p, s, d, spec, scheme="nam", eps=1e-10, fit=True):
    """Run the scheme, locate ``q*`` with a tight NAM solve and analyse the scheme map there."""
    s = as_pair(s)
    if scheme == "nam":
        rep = solve_nam(p, s, d, spec, eps=eps, cfg=NewtonConfig(), record=fit)
        jac = fixed_point_jacobian_oam
    elif scheme == "ram":
        rep = solve_ram(p, s, d, spec, RamConfig(eps=eps, sp_guard=SpGuard.OFF), record=fit)
        jac = fixed_point_jacobian_ram
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    # both schemes share q*; NAM still finds it where RAM is unstable, and a
    # tighter solve keeps the error trace clean down to its floor
    q_star = _reference_marginal(p, s, d, spec, min(eps, REFERENCE_EPS))
    eigs = np.linalg.eigvals(jac(p, q_star, s, d, spec))
    theta = float(np.max(np.abs(eigs)))
    report = SpectralReport(
        theta_max=theta,
        eigs=np.sort_complex(eigs),
        full_rank_distortion=distortion_full_rank(d, s.s_D),
        predicted_regime="exponential" if theta < 1 - EXPONENTIAL_MARGIN else "at_risk",
    )
    if fit:
        trace = error_trace(rep.history["marginal"], q_star)
        if trace.size >= 10:
            report.empirical_rate, report.fit_r2 = fit_convergence_rate(trace)
    return report
