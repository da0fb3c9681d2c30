"""Independent ground truth for the solvers.

Nothing here imports the iteration kernel: mutual information, divergence
sums and the classical Blahut iteration are re-derived from their textbook
forms so that a sign or convention slip in the kernel cannot leak into the
reference values.  Only the generator callables of a divergence spec are
shared.
"""

import itertools
import math
from typing import NamedTuple

import numpy as np

from .prob import binary_entropy

_LO = 1e-15
_TERNARY_RES = 16
_TERNARY_LOCAL = 7


class OracleResult(NamedTuple):
    lagrangian_value: float
    argmin_Q: np.ndarray
    D_at_min: float
    P_at_min: float
    refinement_levels: int


class OracleRate(NamedTuple):
    rate: float
    argmin_Q: np.ndarray
    D_at_min: float
    P_at_min: float


# -- batched objective pieces ----------------------------------------------

def _batch_terms(p, Qs, d, spec):
    """Mutual information, distortion and divergence for a stack of channels."""
    m = np.einsum("x,gxy->gy", p, Qs)
    joint = p[None, :, None] * Qs
    info = np.zeros(len(Qs))
    for x in range(len(p)):
        for y in range(len(p)):
            j = joint[:, x, y]
            ok = j > 0
            info[ok] += j[ok] * np.log(Qs[ok, x, y] / m[ok, y])
    dist = np.einsum("gxy,xy->g", joint, d)
    if spec is None:
        return info, dist, np.zeros(len(Qs))
    div = np.zeros(len(Qs))
    for y in range(len(p)):
        my = m[:, y]
        py = p[y]
        pos = my > 0
        if py == 0:
            div[pos] += my[pos] * spec.f0
        else:
            div[pos] += my[pos] * spec.f(py / my[pos])
            if spec.slope_inf == math.inf:
                div[~pos] = math.inf
            else:
                div[~pos] += py * spec.slope_inf
    return info, dist, div


def _objective(p, s, d, spec, D=None, P=None, tol=1e-12):
    if D is None:
        s_D, s_P = s

        def obj(Qs):
            info, dist, div = _batch_terms(p, Qs, d, spec if s_P else None)
            return info + s_D * dist + (s_P * div if s_P else 0.0)
    else:
        def obj(Qs):
            info, dist, div = _batch_terms(p, Qs, d, spec)
            return np.where((dist <= D + tol) & (div <= P + tol), info, math.inf)
    return obj


# -- parameterizations -------------------------------------------------------

def _binary_channels(a, b):
    Qs = np.empty((len(a), 2, 2))
    Qs[:, 0, 1] = a
    Qs[:, 0, 0] = 1 - a
    Qs[:, 1, 1] = b
    Qs[:, 1, 0] = 1 - b
    return Qs


def _search_binary(obj, grid_n, levels):
    lo, hi = _LO, 1 - _LO
    axis = np.linspace(lo, hi, grid_n)
    a, b = np.meshgrid(axis, axis, indexing="ij")
    a, b = a.ravel(), b.ravel()
    vals = obj(_binary_channels(a, b))
    k = int(np.argmin(vals))
    best, ca, cb = vals[k], a[k], b[k]
    half = (hi - lo) / 2
    m = grid_n | 1
    for _ in range(levels):
        half /= 4
        off = np.linspace(-half, half, m)
        ga, gb = np.meshgrid(np.clip(ca + off, lo, hi), np.clip(cb + off, lo, hi),
                             indexing="ij")
        ga, gb = ga.ravel(), gb.ravel()
        vals = obj(_binary_channels(ga, gb))
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, ca, cb = vals[k], ga[k], gb[k]
    return best, _binary_channels(np.array([ca]), np.array([cb]))[0]


def _simplex_rows(res):
    pts = [(i / res, j / res, (res - i - j) / res)
           for i in range(res + 1) for j in range(res + 1 - i)]
    return np.array(pts)


def _search_ternary(obj, grid_n, levels):
    rows = _simplex_rows(min(grid_n, _TERNARY_RES))
    r = len(rows)
    best, best_Q = math.inf, None
    # chunk over the first row to bound memory
    idx12 = np.array(list(itertools.product(range(r), range(r))))
    for i0 in range(r):
        Qs = np.empty((len(idx12), 3, 3))
        Qs[:, 0, :] = rows[i0]
        Qs[:, 1, :] = rows[idx12[:, 0]]
        Qs[:, 2, :] = rows[idx12[:, 1]]
        vals = obj(Qs)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_Q = vals[k], Qs[k].copy()
    if best_Q is None or not np.isfinite(best):
        return best, best_Q
    half = 2.0 / min(grid_n, _TERNARY_RES)
    off = np.linspace(-1, 1, _TERNARY_LOCAL)
    grid = np.array(list(itertools.product(off, repeat=6)))
    for _ in range(levels):
        free = best_Q[:, :2].ravel()
        cand = free[None, :] + half * grid
        Qs = np.empty((len(cand), 3, 3))
        Qs[:, :, :2] = cand.reshape(-1, 3, 2)
        Qs[:, :, 2] = 1 - Qs[:, :, 0] - Qs[:, :, 1]
        ok = np.all(Qs >= 0, axis=(1, 2))
        vals = np.full(len(Qs), math.inf)
        vals[ok] = obj(Qs[ok])
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_Q = vals[k], Qs[k].copy()
        half /= 4
    return best, best_Q


def _search(p, obj, grid_n, levels):
    if grid_n < 32:
        raise ValueError("grid_n must be at least 32")
    if len(p) == 2:
        return _search_binary(obj, grid_n, levels)
    if len(p) == 3:
        return _search_ternary(obj, grid_n, levels)
    raise ValueError(f"brute force supports alphabets of size <= 3, got {len(p)}")


def _evaluate(p, Q, d, spec):
    info, dist, div = _batch_terms(p, Q[None], d, spec)
    return float(info[0]), float(dist[0]), float(div[0])


def brute_force_lagrangian(p, s, d, spec, grid_n=64, refine_levels=5):
    """Minimize ``I(p, Q) + s_D E[d] + s_P D_f(p || pQ)`` over channels by grid search."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    s_D, s_P = float(s[0]), float(s[1])
    _, Q = _search(p, _objective(p, (s_D, s_P), d, spec), grid_n, refine_levels)
    info, dist, div = _evaluate(p, Q, d, spec if s_P else None)
    if not s_P and spec is not None:
        div = _evaluate(p, Q, d, spec)[2]
    return OracleResult(info + s_D * dist + s_P * div, Q, dist, div, refine_levels)


def brute_force_rate(p, D, P, d, spec, grid_n=64, refine_levels=5):
    """Minimize ``I(p, Q)`` subject to ``E[d] <= D`` and ``D_f(p || pQ) <= P``."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    best, Q = _search(p, _objective(p, None, d, spec, D=D, P=P), grid_n, refine_levels)
    if Q is None or not np.isfinite(best):
        raise ValueError(f"no grid channel meets D <= {D} and P <= {P}")
    info, dist, div = _evaluate(p, Q, d, spec)
    return OracleRate(info, Q, dist, div)


# -- exact binary reduction ---------------------------------------------------

def _binary_div(p, m1, spec):
    """``D_f(p || (1 - m1, m1))`` with the zero-mass conventions."""
    total = 0.0
    for py, my in ((p[0], 1.0 - m1), (p[1], m1)):
        if my > 0:
            total += my * (spec.f0 if py == 0 else float(spec.f(np.array([py / my]))[0]))
        elif py > 0:
            if spec.slope_inf == math.inf:
                return math.inf
            total += py * spec.slope_inf
    return total


def _cap_edge(p, spec, P, inside, outside):
    """Bisect for the point between ``inside`` (feasible) and ``outside`` where D_f = P."""
    if _binary_div(p, outside, spec) <= P:
        return outside
    for _ in range(200):
        mid = 0.5 * (inside + outside)
        if mid in (inside, outside):
            break
        if _binary_div(p, mid, spec) <= P:
            inside = mid
        else:
            outside = mid
    return inside


def _binary_info(p, a, b, m1):
    """Mutual information of the channels ``Q(1|0) = a``, ``Q(1|1) = b`` (arrays)."""
    total = np.zeros_like(m1)
    for px, q1 in ((p[0], a), (p[1], b)):
        for q, m in ((1 - q1, 1 - m1), (q1, m1)):
            ok = q > 0
            total[ok] += px * q[ok] * np.log(q[ok] / m[ok])
    return total


def _best_on_marginal(p, d, D, m1):
    """Least-information channels with output marginals ``m1`` and distortion <= D.

    Channels with a fixed marginal form a segment parametrized by ``a = Q(1|0)``;
    the distortion is affine in ``a`` and the information convex with its zero
    at the independent channel ``a = m1``.  Returns ``(info, a, b)`` with
    ``info = inf`` where no channel qualifies.
    """
    m1 = np.atleast_1d(np.asarray(m1, dtype=float))
    p0, p1 = p
    lo = np.maximum(0.0, (m1 - p1) / p0)
    hi = np.minimum(1.0, m1 / p0)
    # E[d] = base + slope * a along the segment
    base = p0 * d[0, 0] + p1 * d[1, 0] + m1 * (d[1, 1] - d[1, 0])
    slope = p0 * (d[0, 1] - d[0, 0] - d[1, 1] + d[1, 0])
    if slope > 0:
        hi = np.minimum(hi, (D - base) / slope)
    elif slope < 0:
        lo = np.maximum(lo, (D - base) / slope)
    else:
        hi = np.where(base > D, -1.0, hi)
    a = np.clip(m1, lo, hi)
    b = np.clip((m1 - p0 * a) / p1, 0.0, 1.0)
    info = _binary_info(p, a, b, m1)
    info[lo > hi] = math.inf
    return info, a, b


def binary_rate(p, D, P, d, spec, tol=1e-15):
    """``R(D, P)`` for a binary source to near machine precision.

    The minimum over channels with output marginal ``m1`` is convex in
    ``m1``, and the perception cap restricts ``m1`` to an interval, so a
    golden-section search over that interval replaces the 2-D grid.
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    if p.shape != (2,) or d.shape != (2, 2) or np.any(p <= 0):
        raise ValueError("binary_rate needs a fully supported binary source and 2x2 distortion")
    lo = _cap_edge(p, spec, P, p[1], 0.0)
    hi = _cap_edge(p, spec, P, p[1], 1.0)
    phi = lambda m: float(_best_on_marginal(p, d, D, m)[0][0])
    grid = np.linspace(lo, hi, 2001)
    vals = _best_on_marginal(p, d, D, grid)[0]
    k = int(np.argmin(vals))
    if not np.isfinite(vals[k]):
        raise ValueError(f"no binary channel meets D <= {D} and P <= {P}")
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    g = (math.sqrt(5) - 1) / 2
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = phi(x1), phi(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = phi(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = phi(x2)
        if x1 >= x2:
            break
    cands = [(vals[k], grid[k]), (f1, x1), (f2, x2)]
    best, m1 = min(cands)
    _, qa, qb = _best_on_marginal(p, d, D, m1)
    Q = np.array([[1 - qa[0], qa[0]], [1 - qb[0], qb[0]]])
    info, dist, div = _evaluate(p, Q, d, spec)
    return OracleRate(info, Q, dist, div)


# -- classical rate-distortion ----------------------------------------------

def classical_ba_step(p, q, s_D, d):
    """One textbook Blahut update; returns ``(Q, q_next, c)``."""
    E = np.exp(-s_D * np.asarray(d, dtype=float))
    Z = E @ q
    Q = q[None, :] * E / Z[:, None]
    c = (p / Z) @ E
    return Q, q * c, c


def classical_ba_bounds(p, q, s_D, d):
    """Blahut's lower/upper bounds on R(D) at the distortion of the tilted channel."""
    d = np.asarray(d, dtype=float)
    E = np.exp(-s_D * d)
    Z = E @ q
    Q = q[None, :] * E / Z[:, None]
    c = (p / Z) @ E
    D = float(np.sum(p[:, None] * Q * d))
    base = -s_D * D - float(np.sum(p * np.log(Z)))
    pos = c > 0
    return base - math.log(c.max()), base - float(np.sum(q[pos] * c[pos] * np.log(c[pos])))


def _mutual_information(p, Q):
    m = p @ Q
    total = 0.0
    for x in range(len(p)):
        for y in range(len(m)):
            j = p[x] * Q[x, y]
            if j > 0:
                total += j * math.log(Q[x, y] / m[y])
    return total


def classical_ba(p, s_D, d, eps=1e-12, max_iter=1_000_000):
    """Converged ``(D, R)`` on the classical rate-distortion curve at slope ``-s_D``."""
    if s_D < 0:
        raise ValueError("s_D must be >= 0")
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    q = np.full(len(p), 1.0 / len(p))
    for _ in range(max_iter):
        Q, q_next, c = classical_ba_step(p, q, s_D, d)
        pos = c > 0
        gap = math.log(c.max()) - float(np.sum(q[pos] * c[pos] * np.log(c[pos])))
        if gap < eps:
            break
        q = q_next
    else:
        raise RuntimeError(f"classical BA did not converge in {max_iter} iterations")
    return float(np.sum(p[:, None] * Q * d)), _mutual_information(p, Q)


def binary_rdf(p_scalar, D):
    """``H_b(p) - H_b(D)`` for ``D < p``, else 0 (Bernoulli source, Hamming)."""
    if not 0 < p_scalar <= 0.5 or D < 0:
        raise ValueError("need 0 < p <= 1/2 and D >= 0")
    if D >= p_scalar:
        return 0.0
    return binary_entropy(p_scalar) - binary_entropy(D)
