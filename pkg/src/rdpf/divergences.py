"""f-divergences ``D_f(p||q) = sum_x q(x) f(p(x)/q(x))`` and their derivatives.

Every generator is a vectorized callable on ``(0, inf)``.  Two limits are
stored with each generator so zero cells can be evaluated without touching
the callables at the boundary: ``f0 = lim_{x->0+} f(x)`` and the asymptotic
slope ``slope_inf = lim_{x->inf} f(x)/x`` used for ``0 f(a/0) = a f'(inf)``.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "FDivergenceSpec",
    "SupportError",
    "eval_divergence",
    "g_func",
    "d2_divergence_wrt_q",
    "curvature",
    "make_builtin",
    "make_arctan_tv",
    "make_l1",
    "parse_divergence",
]


class SupportError(ValueError):
    """q vanishes where p does not and the generator has unbounded slope."""


@dataclass(frozen=True)
class FDivergenceSpec:
    name: str
    f: Callable
    df: Callable
    d2f: Optional[Callable]
    f0: float
    slope_inf: float

    @property
    def smooth(self):
        return self.d2f is not None

    def __repr__(self):
        return f"FDivergenceSpec({self.name!r})"


def eval_divergence(spec, p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch: {p.shape} vs {q.shape}")
    total = 0.0
    pos = q > 0
    if np.any(pos):
        r = p[pos] / q[pos]
        rz = r == 0
        vals = np.empty_like(r)
        vals[~rz] = spec.f(r[~rz])
        vals[rz] = spec.f0
        total += float(np.sum(q[pos] * vals))
    orphan = (~pos) & (p > 0)
    if np.any(orphan):
        if math.isinf(spec.slope_inf):
            raise SupportError(
                f"{spec.name}: q is zero where p is positive (f'(inf) = inf)")
        total += float(p[orphan].sum() * spec.slope_inf)
    return total


def g_func(spec, x, y):
    """``f(r) - r f'(r)`` at ``r = x / y``; the partial derivative of D_f in q."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("g_func needs a strictly positive second argument")
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    r = np.atleast_1d(x / y)
    out = np.full(r.shape, spec.f0, dtype=float)
    nz = r > 0
    out[nz] = spec.f(r[nz]) - r[nz] * spec.df(r[nz])
    return float(out[0]) if scalar else out


def curvature(spec, p, v):
    """Vector of ``d^2 D_f(p||v) / dv(i)^2 = p(i)^2 / v(i)^3 f''(p(i)/v(i))``.

    Written as ``r^2 f''(r) / v`` so that ``p(i) = 0`` resolves to the
    ``r -> 0`` limit (zero for every builtin with ``r^2 f''(r) -> 0``).
    """
    if not spec.smooth:
        raise ValueError(f"{spec.name} has no second derivative")
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValueError("curvature needs a strictly positive v")
    r = p / v
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] ** 2 * spec.d2f(r[nz]) / v[nz]
    return out


def d2_divergence_wrt_q(spec, p, v, i):
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if v[i] <= 0:
        raise ValueError("v(i) must be positive")
    return float(curvature(spec, p[i:i + 1], v[i:i + 1])[0])


# -- generators -------------------------------------------------------------

def _kl():
    return FDivergenceSpec(
        "kl",
        f=lambda x: x * np.log(x),
        df=lambda x: np.log(x) + 1.0,
        d2f=lambda x: 1.0 / x,
        f0=0.0,
        slope_inf=math.inf,
    )


def _js():
    return FDivergenceSpec(
        "js",
        f=lambda x: x * np.log(2 * x / (x + 1)) + np.log(2 / (x + 1)),
        df=lambda x: np.log(2 * x / (x + 1)),
        d2f=lambda x: 1.0 / (x * (x + 1)),
        f0=math.log(2.0),
        slope_inf=math.log(2.0),
    )


def _tv():
    return FDivergenceSpec(
        "tv",
        f=lambda x: 0.5 * np.abs(x - 1),
        df=lambda x: 0.5 * np.sign(x - 1),
        d2f=None,
        f0=0.5,
        slope_inf=0.5,
    )


def _chi2():
    return FDivergenceSpec(
        "chi2",
        f=lambda x: (x - 1) ** 2,
        df=lambda x: 2 * (x - 1),
        d2f=lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
        f0=1.0,
        slope_inf=math.inf,
    )


def _alpha(a):
    a = float(a)
    name = f"alpha:{a!r}"
    if a == 1.0:
        return FDivergenceSpec(
            name,
            f=lambda x: x * np.log(x) - x + 1,
            df=lambda x: np.log(x),
            d2f=lambda x: 1.0 / x,
            f0=1.0,
            slope_inf=math.inf,
        )
    if a == 0.0:
        return FDivergenceSpec(
            name,
            f=lambda x: -np.log(x) + x - 1,
            df=lambda x: 1.0 - 1.0 / x,
            d2f=lambda x: 1.0 / x ** 2,
            f0=math.inf,
            slope_inf=1.0,
        )
    k = a * (a - 1)
    return FDivergenceSpec(
        name,
        f=lambda x: (x ** a - a * x - (1 - a)) / k,
        df=lambda x: (x ** (a - 1) - 1) / (a - 1),
        d2f=lambda x: x ** (a - 2),
        f0=1.0 / a if a > 0 else math.inf,
        slope_inf=math.inf if a > 1 else 1.0 / (1 - a),
    )


def make_builtin(name, alpha=None):
    """Return one of ``kl``, ``js``, ``tv``, ``chi2`` or ``alpha`` (needs ``alpha``).

    ``chi2`` is Pearson's ``(x-1)^2``; note the alpha family at 2 gives half of it.
    """
    if name == "alpha":
        if alpha is None:
            raise ValueError("alpha divergence needs a value for alpha")
        return _alpha(alpha)
    table = {"kl": _kl, "js": _js, "tv": _tv, "chi2": _chi2}
    try:
        return table[name]()
    except KeyError:
        raise ValueError(f"unknown divergence {name!r}") from None


def make_arctan_tv(n):
    """Smooth lower approximation ``(2/pi)(x-1) arctan(n(x-1))`` of ``|x-1|``.

    It converges uniformly (gap at most ``2/(n pi)``) to the generator
    ``|x-1|``, i.e. to twice the ``tv`` builtin; see :func:`make_l1`.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"arctan_tv order must be an integer >= 1, got {n!r}")
    n = int(n)
    c = 2.0 / math.pi

    def f(x):
        t = x - 1
        return c * t * np.arctan(n * t)

    def df(x):
        t = x - 1
        return c * (np.arctan(n * t) + n * t / (1 + (n * t) ** 2))

    def d2f(x):
        t = x - 1
        return (2 * c * n) / (1 + (n * t) ** 2) ** 2

    return FDivergenceSpec(
        f"arctan_tv:{n}", f=f, df=df, d2f=d2f, f0=c * math.atan(n), slope_inf=1.0)


def make_l1():
    """Unnormalized total variation ``sum |p - q|`` (generator ``|x-1|``)."""
    return FDivergenceSpec(
        "l1",
        f=lambda x: np.abs(x - 1),
        df=lambda x: np.sign(x - 1),
        d2f=None,
        f0=1.0,
        slope_inf=1.0,
    )


def parse_divergence(text):
    """Parse ``kl | js | tv | chi2 | alpha:<float> | arctan_tv:<int>``."""
    text = text.strip()
    head, _, arg = text.partition(":")
    if head == "alpha" and arg:
        return make_builtin("alpha", float(arg))
    if head == "arctan_tv" and arg:
        return make_arctan_tv(int(arg))
    if arg:
        raise ValueError(f"unknown divergence {text!r}")
    return make_builtin(head)
