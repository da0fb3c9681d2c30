"""Shared core of the alternating-minimization schemes.

The exponential kernel ``A[r](x, y) = exp(-s_D d(x, y) - s_P g(p(y), r(y)))``
tilts a reweighting distribution ``u`` into the transition matrix
``Q(y|x) = u(y) A[r](x, y) / sum_i u(i) A[r](x, i)``.  ``u`` and the kernel
argument ``r`` are kept separate so that one routine serves every scheme:
NAM passes the Newton root as ``r``, RAM passes ``r = u``.

Exponents are row-shifted before exponentiation; the shift cancels in every
ratio and is restored in ``log Z``.  For small alphabets the inner loops run
in a compiled extension when it is available (``BACKEND == "compiled"``),
otherwise in NumPy; set ``RDPF_PURE_PYTHON=1`` to force the fallback.
"""

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import xlogy

from .divergences import curvature, eval_divergence, g_func

from . import _pykernels

if os.environ.get("RDPF_PURE_PYTHON"):
    _ext = None
else:
    try:
        from . import _kernels as _ext
    except ImportError:
        _ext = None
BACKEND = "python" if _ext is None else "compiled"

#: Beyond this alphabet size the BLAS-backed NumPy path is faster than the
#: compiled loops (see benchmarks/bench_kernels.py).
COMPILED_MAX_ALPHABET = 48


def _tilt(expo, u, p):
    if _ext is not None and len(u) <= COMPILED_MAX_ALPHABET:
        return _ext.tilt(expo, u, p)
    return _pykernels.tilt(expo, u, p)


def _m_matrix(expo, u, p):
    if _ext is not None and len(u) <= COMPILED_MAX_ALPHABET:
        return _ext.m_matrix(expo, u, p)
    return _pykernels.m_matrix(expo, u, p)


@dataclass(frozen=True)
class LagrangePair:
    s_D: float
    s_P: float

    def __post_init__(self):
        for name in ("s_D", "s_P"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def __iter__(self):
        return iter((self.s_D, self.s_P))


def as_pair(s):
    return s if isinstance(s, LagrangePair) else LagrangePair(float(s[0]), float(s[1]))


class Tilt(NamedTuple):
    Q: np.ndarray
    c: np.ndarray
    log_z: np.ndarray
    expo: np.ndarray


def log_kernel(p, r, s, d, spec):
    """Exponent matrix ``-s_D d(x, y) - s_P g(p(y), r(y))``."""
    s = as_pair(s)
    expo = -s.s_D * np.asarray(d, dtype=float)
    if s.s_P:
        expo = expo - s.s_P * g_func(spec, np.asarray(p, dtype=float),
                                     np.asarray(r, dtype=float))[None, :]
    if not np.all(np.isfinite(expo)):
        raise FloatingPointError("non-finite kernel exponent (divergence domain violated)")
    return np.ascontiguousarray(expo)


def tilt_state(p, u, r, s, d, spec):
    p = np.ascontiguousarray(p, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    expo = log_kernel(p, r, s, d, spec)
    Q, c, log_z = _tilt(expo, u, p)
    return Tilt(Q, c, log_z, expo)


def kernel(p, u, s, d, spec):
    """The kernel matrix ``A[u]`` itself (no shift; may overflow for huge s)."""
    with np.errstate(over="raise"):
        a = np.exp(log_kernel(p, u, s, d, spec))
    if np.any(a <= 0):
        raise FloatingPointError("kernel underflowed to zero")
    return a


def c_coeff(p, u, r, s, d, spec):
    return tilt_state(p, u, r, s, d, spec).c


def parametric_Q(p, u, r, s, d, spec):
    return tilt_state(p, u, r, s, d, spec).Q


def newton_m(p, u, r, s, d, spec):
    """``M[u, r](i, j) = u(i) sum_x p(x) A_i A_j / (sum_k u(k) A_k)^2`` with ``A = A[r]``."""
    p = np.ascontiguousarray(p, dtype=float)
    return _m_matrix(log_kernel(p, r, s, d, spec), np.ascontiguousarray(u, dtype=float), p)


def newton_gamma(p, u, r, s, spec):
    """Diagonal of ``Gamma[u, r] = s_P diag(u(i) d^2 D_f(p||v)/dv(i)^2 at v = r)``."""
    s = as_pair(s)
    if not s.s_P:
        return np.zeros(len(u))
    return s.s_P * np.asarray(u, dtype=float) * curvature(spec, p, r)


def _ratio_term(spec, p, v):
    # r f'(r) at r = p / v, with the r -> 0 limit taken as 0
    r = p / v
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] * spec.df(r[nz])
    return out


def _f_at(spec, p, v):
    r = p / v
    out = np.full_like(r, spec.f0)
    nz = r > 0
    out[nz] = spec.f(r[nz])
    return out


def w_hat(p, u, v, u_next, s, d, spec, log_z=None):
    """Dual functional behind the rate bounds.

    ``-sum_x p(x) log sum_y u(y) A[v](x, y)
      + s_P sum_y u_next(y) (p(y)/v(y)) f'(p(y)/v(y))
      + s_P sum_y u_next(y) [f(p(y)/u_next(y)) - f(p(y)/v(y))]``

    ``v`` is the kernel argument and ``u_next`` the produced marginal; for
    ``v = u_next`` the last bracket vanishes.  ``log_z`` may be passed to
    reuse an already computed ``log Z``.
    """
    s = as_pair(s)
    p = np.asarray(p, dtype=float)
    if log_z is None:
        log_z = tilt_state(p, u, v, s, d, spec).log_z
    val = -float(p @ log_z)
    if s.s_P:
        v = np.asarray(v, dtype=float)
        u_next = np.asarray(u_next, dtype=float)
        val += s.s_P * float(u_next @ _ratio_term(spec, p, v))
        val += s.s_P * float(u_next @ (_f_at(spec, p, u_next) - _f_at(spec, p, v)))
    return val


def descent_V(p, u_prev, Q_next, u_next, s, d, spec):
    """``KL(p Q_next || p u_prev) + s_D E[d] + s_P D_f(p||u_next)``."""
    s = as_pair(s)
    p = np.asarray(p, dtype=float)
    Q = np.asarray(Q_next, dtype=float)
    joint = p[:, None] * Q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(joint > 0, Q / np.asarray(u_prev, dtype=float)[None, :], 1.0)
    val = float(xlogy(joint, ratio).sum())
    val += s.s_D * float((joint * np.asarray(d, dtype=float)).sum())
    if s.s_P:
        val += s.s_P * eval_divergence(spec, p, u_next)
    return val
