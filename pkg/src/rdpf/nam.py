"""Newton-based alternating minimization (NAM).

Each outer step needs the marginal ``u`` solving ``u = q_n * c[q_n, u]``,
where ``u`` also enters the kernel.  That implicit equation is the root of
``T[q_n, u] = u - q_n * c[q_n, u]`` and is solved by Newton's method with
the analytic Jacobian ``I + (C - M) Gamma``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .bounds import bounds, gap_omega
from .kernel import as_pair, newton_gamma, newton_m, tilt_state, descent_V
from .prob import FLOOR, DimensionError, clamp_positive, distortion_matrix, distribution
from .report import ConvergenceError, SolveReport

log = logging.getLogger(__name__)

#: Consecutive outer iterations at the floor before a coordinate is
#: reported as outside the support.
ZERO_SUPPORT_PATIENCE = 10


@dataclass(frozen=True)
class NewtonConfig:
    delta: float = 1e-12
    max_inner_iters: int = 100
    jacobian_regularization: float = 0.0
    max_outer_iters: int = 100_000

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_inner_iters < 1 or self.max_outer_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.jacobian_regularization < 0:
            raise ValueError("jacobian_regularization must be >= 0")


def prepare(p, d, q0):
    p = np.asarray(distribution(p))
    d = np.asarray(distortion_matrix(d))
    if d.shape[0] != p.size:
        raise DimensionError(f"source of size {p.size} vs distortion {d.shape}")
    q = np.full(p.size, 1.0 / p.size) if q0 is None else np.asarray(q0, dtype=float)
    if q.shape != p.shape:
        raise DimensionError(f"initial marginal {q.shape} vs source {p.shape}")
    return p, d, clamp_positive(q)


def _require_smooth(spec):
    if not spec.smooth:
        raise ValueError(
            f"NAM needs a twice-differentiable divergence; {spec.name} is not "
            "(use the RAM scheme)")


def t_func(p, q_n, u, s, d, spec):
    """``T[q_n, u] = u - q_n * c[q_n, u]``."""
    q_n = np.asarray(q_n, dtype=float)
    return np.asarray(u, dtype=float) - q_n * tilt_state(p, q_n, u, s, d, spec).c


def newton_jacobian(p, q_n, u, s, d, spec):
    _require_smooth(spec)
    c = tilt_state(p, q_n, u, s, d, spec).c
    M = newton_m(p, q_n, u, s, d, spec)
    gamma = newton_gamma(p, q_n, u, s, spec)
    return np.eye(len(c)) + (np.diag(c) - M) * gamma[None, :]


def _newton(p, q_n, s, d, spec, cfg):
    """Return ``(root, iterations, residual)``."""
    n = len(q_n)
    eye = np.eye(n)
    u = q_n.copy()
    for k in range(1, cfg.max_inner_iters + 1):
        st = tilt_state(p, q_n, u, s, d, spec)
        T = u - q_n * st.c
        gamma = newton_gamma(p, q_n, u, s, spec)
        if gamma.any():
            M = newton_m(p, q_n, u, s, d, spec)
            J = eye + (np.diag(st.c) - M) * gamma[None, :]
            step = _solve(J, T, cfg.jacobian_regularization)
        else:
            step = T
        # the root is strictly positive; shorten steps that would leave the orthant
        t = 1.0
        while np.any(u - t * step <= 0):
            t *= 0.5
            if t < 1e-12:
                raise ConvergenceError("Newton step cannot keep the iterate positive")
        # backtrack on the residual norm; full Newton steps can cycle far from the root
        t_norm = float(np.linalg.norm(T))
        while t > 1e-4 and t_norm > 1e-14:
            trial = np.maximum(u - t * step, FLOOR)
            if np.linalg.norm(trial - q_n * tilt_state(p, q_n, trial, s, d, spec).c) \
                    <= (1 - 1e-4 * t) * t_norm:
                break
            t *= 0.5
        u_new = u - t * step
        moved = float(np.max(np.abs(u_new - u)))
        u = np.maximum(u_new, FLOOR)
        if moved < cfg.delta:
            u = u / u.sum()
            residual = float(np.max(np.abs(t_func(p, q_n, u, s, d, spec))))
            return u, k, residual
    raise ConvergenceError(f"Newton inner loop did not converge in {cfg.max_inner_iters} steps")


def _solve(J, T, ridge):
    try:
        if ridge > 0 and np.linalg.cond(J) > 1e12:
            log.warning("Jacobian near-singular; adding ridge %g", ridge)
            J = J + ridge * np.eye(len(T))
        return np.linalg.solve(J, T)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Newton linear solve failed: {exc}") from exc


def newton_inner(p, q_n, s, d, spec, cfg=None):
    """Root of ``T[q_n, .]`` started from ``q_n``, clamped and renormalized."""
    _require_smooth(spec)
    cfg = cfg or NewtonConfig()
    return _newton(np.asarray(p, dtype=float), np.asarray(q_n, dtype=float),
                   as_pair(s), d, spec, cfg)[0]


def solve_nam(p, s, d, spec, eps=1e-8, cfg=None, q0=None, record=False):
    """Run NAM at multipliers ``s = (s_D, s_P)`` until the bound gap drops below ``eps``.

    Raises :class:`ConvergenceError` (with the partial report attached) when
    either iteration cap is hit.
    """
    _require_smooth(spec)
    if not eps > 0:
        raise ValueError("eps must be positive")
    cfg = cfg or NewtonConfig()
    s = as_pair(s)
    p, d, q = prepare(p, d, q0)
    history = {k: [] for k in ("omega", "lower", "upper", "D", "P", "V",
                               "marginal", "inner_iters", "residual")} if record else {}
    at_floor = np.zeros(p.size, dtype=int)
    inner_total = 0
    converged = False
    for n in range(1, cfg.max_outer_iters + 1):
        try:
            u, k, residual = _newton(p, q, s, d, spec, cfg)
        except ConvergenceError as exc:
            raise ConvergenceError(f"outer iteration {n}: {exc}") from exc
        inner_total += k
        st = tilt_state(p, q, u, s, d, spec)
        omega = gap_omega(q, st.c)
        if record:
            b = bounds(p, q, u, u, st.c, s, d, spec, state=st)
            history["omega"].append(omega)
            history["lower"].append(b.lower)
            history["upper"].append(b.upper)
            history["D"].append(b.at_D)
            history["P"].append(b.at_P)
            history["V"].append(descent_V(p, q, st.Q, u, s, d, spec))
            history["marginal"].append(q.copy())
            history["inner_iters"].append(k)
            history["residual"].append(residual)
        if omega < eps:
            converged = True
            break
        at_floor = np.where(u <= 10 * FLOOR, at_floor + 1, 0)
        q = u
    report = _assemble("nam", p, q, u, u, st, omega, s, d, spec, n, inner_total,
                       converged, history)
    report.diagnostics["newton_residual"] = residual
    report.diagnostics["zero_support"] = np.flatnonzero(
        at_floor >= ZERO_SUPPORT_PATIENCE).tolist()
    if not converged:
        raise ConvergenceError(f"NAM did not reach eps={eps} in {n} outer iterations",
                               report)
    return report


def _assemble(scheme, p, u, v, u_next, st, omega, s, d, spec, n, inner, converged,
              history):
    b = bounds(p, u, v, u_next, st.c, s, d, spec, state=st)
    rate = max(b.upper, 0.0) if converged else float("nan")
    return SolveReport(
        scheme=scheme, s_D=s.s_D, s_P=s.s_P, D_s=b.at_D, P_s=b.at_P, rate=rate,
        lower_bound=b.lower, upper_bound=b.upper, omega=omega, outer_iters=n,
        total_inner_iters=inner, converged=converged,
        final_marginal=np.asarray(u_next, dtype=float).copy(), final_Q=st.Q.copy(),
        certificate=st.c.copy(), history=history,
    )
