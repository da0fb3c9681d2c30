"""Finite-alphabet probability primitives.

Distributions are 1-D float arrays, transition matrices are row-stochastic
2-D arrays with rows indexed by the source symbol ``x`` and columns by the
reconstruction symbol ``y``.  All logarithms are natural (rates in nats).
"""

import numpy as np
from scipy.special import xlogy

#: Strict-positivity floor applied to solver iterates.
FLOOR = 1e-15
#: Absolute tolerance on total mass / row sums.
MASS_TOL = 1e-12


class DimensionError(ValueError):
    """Operands have incompatible alphabet sizes."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def distribution(mass, strict=False, floor=FLOOR):
    """Validate ``mass`` as a probability vector and return a read-only copy.

    With ``strict=True`` entries below ``floor`` are clamped up to it and the
    vector is renormalized, which is what the iterative schemes need.
    """
    p = np.asarray(mass, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DimensionError(f"expected a non-empty 1-D array, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > MASS_TOL:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    if strict:
        p = clamp_positive(p, floor)
    return _frozen(p)


def transition_matrix(rows):
    Q = np.asarray(rows, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)) or np.any(Q < 0):
        raise ValueError("transition probabilities must be finite and non-negative")
    if np.any(np.abs(Q.sum(axis=1) - 1.0) > MASS_TOL):
        raise ValueError("every row of a transition matrix must sum to 1")
    return _frozen(Q)


def distortion_matrix(cost):
    d = np.asarray(cost, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("distortion entries must be finite and non-negative")
    return _frozen(d)


def hamming(n):
    """Hamming distortion on an alphabet of size ``n``."""
    return distortion_matrix(1.0 - np.eye(n))


def clamp_positive(u, floor=FLOOR):
    """Clamp entries to ``floor`` and renormalize onto the simplex."""
    u = np.maximum(np.asarray(u, dtype=float), floor)
    return u / u.sum()


def _check_pair(p, Q):
    p = np.asarray(p, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or p.ndim != 1 or Q.shape[0] != p.size:
        raise DimensionError(f"source of size {p.size} vs transition matrix {Q.shape}")
    return p, Q


def marginal(p, Q):
    """Output marginal ``y -> sum_x p(x) Q(y|x)``."""
    p, Q = _check_pair(p, Q)
    return p @ Q


def expected_distortion(p, Q, d):
    p, Q = _check_pair(p, Q)
    d = np.asarray(d, dtype=float)
    if d.shape != Q.shape:
        raise DimensionError(f"distortion {d.shape} vs transition matrix {Q.shape}")
    return float(p @ (Q * d).sum(axis=1))


def mutual_information(p, Q):
    """I(X;Y) in nats for source ``p`` and channel ``Q`` (0 log 0 = 0)."""
    p, Q = _check_pair(p, Q)
    q = p @ Q
    joint = p[:, None] * Q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(joint > 0, Q / q[None, :], 1.0)
    return max(float(xlogy(joint, ratio).sum()), 0.0)


def binary_entropy(a):
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"binary entropy argument {a!r} outside [0, 1]")
    return float(-xlogy(a, a) - xlogy(1.0 - a, 1.0 - a))
