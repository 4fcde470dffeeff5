"""Hölder seminorm, modified Hölder norm and its exponentially weighted form.

All suprema are grid suprema. Up to ``FULL_SCAN_LIMIT`` steps every pair of
nodes is visited (lag by lag, vectorized over the start node); beyond that
only dyadic lags and pairs touching a window endpoint are scanned.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fbm import HilbertPath, ScalarPath

__all__ = [
    "HolderParams",
    "NormReport",
    "FULL_SCAN_LIMIT",
    "holder_seminorm",
    "modified_norm",
    "weighted_norm",
    "norm_report",
    "norms_from_values",
    "weighted_norms",
    "dyadic_holder_exponent",
]

FULL_SCAN_LIMIT = 4096


@dataclass(frozen=True)
class HolderParams:
    """Exponents of the solution space and driver, fractional order, weight."""

    beta: float
    beta_prime: float
    alpha: float
    rho: float = 0.0

    def __post_init__(self):
        b, bp, a = self.beta, self.beta_prime, self.alpha
        if not (0.5 < b < bp < 1.0):
            raise DomainError(f"need 1/2 < beta < beta_prime < 1, got beta={b}, beta_prime={bp}")
        if not (1.0 - bp < a < b):
            raise DomainError(f"need 1 - beta_prime < alpha < beta, got alpha={a}")
        if not (self.rho >= 0.0):
            raise DomainError(f"rho must be nonnegative, got {self.rho}")

    def with_rho(self, rho: float) -> "HolderParams":
        return dataclasses.replace(self, rho=float(rho))


@dataclass(frozen=True)
class NormReport:
    sup_norm: float
    holder_seminorm: float
    modified_seminorm: float
    weighted_norm: float
    beta: float
    rho: float

    @property
    def modified_norm(self) -> float:
        return self.sup_norm + self.modified_seminorm

    def csv_header(self, delimiter: str = ",") -> str:
        return delimiter.join(["sup", "seminorm", "modified", "weighted", "beta", "rho"])

    def csv_row(self, delimiter: str = ",") -> str:
        vals = (self.sup_norm, self.holder_seminorm, self.modified_seminorm,
                self.weighted_norm, self.beta, self.rho)
        return delimiter.join(f"{v:.17g}" for v in vals)


# ---------------------------------------------------------------------------
# Core scan
# ---------------------------------------------------------------------------


def _window_values(path, window):
    if isinstance(path, ScalarPath):
        data = path.values[:, None]
    elif isinstance(path, HilbertPath):
        data = path.coeffs
    else:
        raise DomainError(f"expected a ScalarPath or HilbertPath, got {type(path).__name__}")
    if window is None:
        return data, path.dt
    t1, t2 = window
    if not t1 < t2:
        raise DomainError(f"empty window [{t1}, {t2}]")
    i1, i2 = path.index_of(t1), path.index_of(t2)
    return data[i1 : i2 + 1], path.dt


def _lags(m, full_scan_limit):
    if m <= full_scan_limit:
        return np.arange(1, m + 1), False
    return 2 ** np.arange(int(np.log2(m)) + 1), True


def _scan(u, dt, beta, rho, full_scan_limit=FULL_SCAN_LIMIT):
    """Return (sup, seminorm, modified seminorm, weighted sup part, weighted seminorm).

    ``rho`` may be an array; the weighted parts then come back per entry.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    m = u.shape[0] - 1
    if m < 1:
        raise DomainError("window must contain at least two nodes")
    mag = np.sqrt(np.einsum("ij,ij->i", u, u))
    s = dt * np.arange(m + 1)
    sw = s**beta  # (s - T1)^beta, zero at s = T1
    rhos = np.atleast_1d(np.asarray(rho, dtype=float))
    ew = np.exp(-rhos[:, None] * s)
    sup = mag.max()
    wsup = (ew * mag).max(axis=1)
    semi = mod = 0.0
    wsemi = np.zeros(rhos.size)
    lags, dyadic = _lags(m, full_scan_limit)
    for lag in lags:
        d = u[lag:] - u[:-lag]
        q = np.sqrt(np.einsum("ij,ij->i", d, d)) / (lag * dt) ** beta
        semi = max(semi, q.max())
        qm = q * sw[:-lag]
        mod = max(mod, qm.max())
        wsemi = np.maximum(wsemi, (qm * ew[:, lag:]).max(axis=1))
    if dyadic:
        # pairs touching the window endpoints
        k = np.arange(1, m + 1)
        d0 = u[1:] - u[0]
        q0 = np.sqrt(np.einsum("ij,ij->i", d0, d0)) / (k * dt) ** beta
        semi = max(semi, q0.max())
        dm = u[-1] - u[:-1]
        qm = np.sqrt(np.einsum("ij,ij->i", dm, dm)) / ((m - k + 1) * dt) ** beta
        semi = max(semi, qm.max())
        mod = max(mod, (qm * sw[:-1]).max())
        wsemi = np.maximum(wsemi, (qm * sw[:-1]).max() * ew[:, -1])
    if np.ndim(rho) == 0:
        wsup, wsemi = wsup[0], wsemi[0]
    return sup, semi, mod, wsup, wsemi


def weighted_norms(u, dt, beta, rhos, full_scan_limit=FULL_SCAN_LIMIT) -> np.ndarray:
    """Weighted norms for several weights from a single scan."""
    _, _, _, wsup, wsemi = _scan(u, dt, beta, np.asarray(rhos, dtype=float), full_scan_limit)
    return wsup + wsemi


def norms_from_values(u, dt, beta, rho=0.0, full_scan_limit=FULL_SCAN_LIMIT) -> NormReport:
    """All four norms of an array sampled on a window starting at its first node."""
    sup, semi, mod, wsup, wsemi = _scan(u, dt, beta, rho, full_scan_limit)
    return NormReport(float(sup), float(semi), float(mod), float(wsup + wsemi),
                      float(beta), float(rho))


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def holder_seminorm(path, beta: float, window=None) -> float:
    """``sup |u(t) - u(s)| / |t - s|^beta`` over grid pairs in the window."""
    u, dt = _window_values(path, window)
    return norms_from_values(u, dt, beta).holder_seminorm


def modified_norm(path, beta: float, window=None) -> float:
    """``sup|u| + sup_{s > T1} (s - T1)^beta |u(t) - u(s)| / |t - s|^beta``."""
    u, dt = _window_values(path, window)
    return norms_from_values(u, dt, beta).modified_norm


def weighted_norm(path, params: HolderParams, window=None) -> float:
    """Modified norm with weights ``exp(-rho (s - T1))`` and ``exp(-rho (t - T1))``."""
    u, dt = _window_values(path, window)
    return norms_from_values(u, dt, params.beta, params.rho).weighted_norm


def norm_report(path, beta: float, rho: float = 0.0, window=None) -> NormReport:
    u, dt = _window_values(path, window)
    return norms_from_values(u, dt, beta, rho)


def dyadic_holder_exponent(path, max_level: int | None = None) -> float:
    """Slope of ``log2 mean|increment|`` against ``log2 lag`` over dyadic lags.

    Lags run from one step up to a quarter of the grid.
    """
    u, dt = _window_values(path, None)
    m = u.shape[0] - 1
    top = int(np.log2(m)) - 2 if max_level is None else max_level
    if top < 1:
        raise DomainError("grid too short for a dyadic regression")
    lv = np.arange(top + 1)
    logs = []
    for j in lv:
        lag = 2**j
        d = u[lag:] - u[:-lag]
        logs.append(np.log2(np.mean(np.sqrt(np.einsum("ij,ij->i", d, d)))))
    return float(np.polyfit(lv, np.asarray(logs), 1)[0])
