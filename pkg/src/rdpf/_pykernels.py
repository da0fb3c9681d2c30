"""Pure-NumPy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def tilt(expo, u, p):
    """Exponential tilt of ``u`` by the row-shifted kernel ``exp(expo)``.

    Returns ``(Q, c, log_z)`` where ``Q[x, y] = u(y) A(x, y) / Z(x)``,
    ``c(y) = sum_x p(x) A(x, y) / Z(x)`` and ``log_z(x) = log Z(x)`` with
    ``Z(x) = sum_i u(i) A(x, i)`` and ``A = exp(expo)``.
    """
    shift = expo.max(axis=1)
    a = np.exp(expo - shift[:, None])
    z = a @ u
    w = a / z[:, None]
    return u[None, :] * w, p @ w, np.log(z) + shift


def m_matrix(expo, u, p):
    """``M[i, j] = u(i) sum_x p(x) A(x, i) A(x, j) / Z(x)^2`` (shift-free)."""
    shift = expo.max(axis=1)
    a = np.exp(expo - shift[:, None])
    w = a / (a @ u)[:, None]
    return u[:, None] * ((w * p[:, None]).T @ w)
