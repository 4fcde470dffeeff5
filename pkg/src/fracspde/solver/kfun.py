"""The contraction modulus ``K(rho) = sup_t t^d int_0^1 exp(-rho t (1-v)) v^a (1-v)^b dv``."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import beta as beta_fn
from scipy.special import betainc

from ..errors import DomainError

__all__ = ["kfun", "kernel_integral", "solver_kfun_exponents"]

_RATIO = 1.001  # geometric growth of the w-grid
_W_MIN = 1e-30
_CUTOFF = 700.0  # exp(-700) is below any double-precision contribution


def _check(a, b, d):
    if not (a > -1 and b > -1 and a + b >= -1 - 1e-15 and d > 0):
        raise DomainError(f"need a > -1, b > -1, a + b >= -1, d > 0 (got a={a}, b={b}, d={d})")


@lru_cache(maxsize=16)
def _moments(a, b):
    """w-grid and per-cell moments of ``w^b (1-w)^a`` against 1 and w."""
    k = int(np.ceil(np.log(1.0 / _W_MIN) / np.log(_RATIO)))
    w = np.concatenate([[0.0], np.geomspace(_W_MIN, 1.0, k + 1)])
    m0 = np.diff(beta_fn(b + 1, a + 1) * betainc(b + 1, a + 1, w))
    m1 = np.diff(beta_fn(b + 2, a + 1) * betainc(b + 2, a + 1, w))
    # moment of (w - w_left) for the linear part of each cell
    return w, m0, m1 - w[:-1] * m0


def kernel_integral(x, a, b):
    """``int_0^1 exp(-x (1-v)) v^a (1-v)^b dv`` for ``x >= 0``.

    With ``w = 1 - v`` the exponential is interpolated linearly on a fixed
    geometric w-grid; the weight ``w^b (1-w)^a`` enters through exact
    incomplete-Beta moments on each cell.
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    if x == 0:
        return float(beta_fn(b + 1, a + 1))
    w, m0, m1c = _moments(float(a), float(b))
    stop = min(int(np.searchsorted(w, _CUTOFF / x)) + 1, w.size)
    f = np.exp(-x * w[:stop])
    slope = np.diff(f) / np.diff(w[:stop])
    return float(np.sum(f[:-1] * m0[: stop - 1] + slope * m1c[: stop - 1]))


@lru_cache(maxsize=4096)
def kfun(rho, a, b, d, T=1.0, grid_points=64):
    """Supremum over ``t in [0, T]`` of ``t^d * kernel_integral(rho t, a, b)``.

    The supremum is located on a grid of ``grid_points`` uniform plus
    ``grid_points`` geometric times, then refined with a bounded scalar
    search between the neighbours of the best grid point.
    """
    _check(a, b, d)
    if rho < 0 or T <= 0:
        raise DomainError("need rho >= 0 and T > 0")
    if rho == 0:
        return float(T**d * beta_fn(a + 1, b + 1))
    f = lambda t: t**d * kernel_integral(rho * t, a, b) if t > 0 else 0.0
    ts = np.unique(np.concatenate([np.linspace(0, T, grid_points),
                                   np.geomspace(T * 1e-12, T, grid_points)]))
    vals = np.array([f(t) for t in ts])
    i = int(np.argmax(vals))
    best = vals[i]
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -f(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10 * max(hi, 1e-300)})
        best = max(best, -res.fun)
    return float(best)


def solver_kfun_exponents(params):
    """``(a, b, d)`` used by the solver: ``(-alpha, alpha - 1, beta' - beta)``."""
    return -params.alpha, params.alpha - 1.0, params.beta_prime - params.beta
