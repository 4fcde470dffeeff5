"""Diagonal Nemytskii noise coefficients ``G(u) = diag(mu_i h(u_i))``.

``G`` maps V into the Hilbert-Schmidt operators on V. Its growth and
derivative constants are fixed by ``mu`` and the scalar profile ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .errors import CertificationError, DomainError

__all__ = [
    "PROFILES",
    "DiagonalNemytskii",
    "CoefficientReport",
    "apply_G",
    "hs_norm",
    "certify_coefficient_bounds",
]

_ULP_SLACK = 4 * np.finfo(float).eps

# name -> (h, sup|h'|, sup|h''|) given affine parameters (a, b)
PROFILES = ("identity", "tanh", "constant", "affine")
_TANH_H2 = 4.0 / (3.0 * sqrt(3.0))  # max |d^2/dx^2 tanh x| at tanh x = 1/sqrt(3)


@dataclass(frozen=True, eq=False)
class DiagonalNemytskii:
    """Noise coefficient with entries ``mu_i h(u_i)``.

    ``offset``/``slope`` parametrize the affine profile ``h(x) = offset + slope x``.
    """

    mus: np.ndarray
    profile: str = "identity"
    offset: float = 0.0
    slope: float = 1.0
    c_G: float = field(init=False)
    c_DG: float = field(init=False)
    c_D2G: float = field(init=False)

    def __post_init__(self):
        mus = np.asarray(self.mus, dtype=float)
        if mus.ndim != 1 or mus.size < 1 or not np.all(np.isfinite(mus)):
            raise DomainError("mus must be a finite 1-d array with at least one entry")
        if self.profile not in PROFILES:
            raise DomainError(f"unknown profile {self.profile!r}; choose from {PROFILES}")
        object.__setattr__(self, "mus", mus)
        mmax = float(np.max(np.abs(mus)))
        d1, d2 = self._derivative_bounds()
        object.__setattr__(self, "c_G", float(np.sqrt(np.sum(mus**2 * self.h(np.zeros(1))[0] ** 2))))
        object.__setattr__(self, "c_DG", mmax * d1)
        object.__setattr__(self, "c_D2G", mmax * d2)

    @classmethod
    def power_law(cls, modes: int, decay: float = 1.0, scale: float = 1.0, **kw) -> "DiagonalNemytskii":
        """``mu_i = scale * i**-decay``."""
        i = np.arange(1, modes + 1, dtype=float)
        return cls(scale * i ** (-decay), **kw)

    @property
    def modes(self) -> int:
        return self.mus.size

    def _derivative_bounds(self):
        p = self.profile
        if p == "identity":
            return 1.0, 0.0
        if p == "tanh":
            return 1.0, _TANH_H2
        if p == "constant":
            return 0.0, 0.0
        return abs(self.slope), 0.0

    def h(self, x):
        x = np.asarray(x, dtype=float)
        p = self.profile
        if p == "identity":
            return x.copy()
        if p == "tanh":
            return np.tanh(x)
        if p == "constant":
            return np.ones_like(x)
        return self.offset + self.slope * x

    def entries(self, u):
        """Diagonal entries ``mu_i h(u_i)``; ``u`` may carry leading batch axes."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.modes:
            raise DomainError(f"vector has {u.shape[-1]} modes, G has {self.modes}")
        return self.mus * self.h(u)


def apply_G(G: DiagonalNemytskii, u) -> np.ndarray:
    """Diagonal of the Hilbert-Schmidt operator ``G(u)``."""
    return G.entries(u)


def hs_norm(diag) -> float:
    return float(np.linalg.norm(diag))


@dataclass(frozen=True)
class CoefficientReport:
    profile: str
    samples: int
    max_ratio: tuple  # per inequality: max lhs / rhs
    violations: tuple  # per inequality: count
    first_violation: tuple | None = None  # (inequality index, sample index)

    NAMES = ("growth", "lipschitz", "second_difference")

    @property
    def passed(self) -> bool:
        return sum(self.violations) == 0


def certify_coefficient_bounds(G: DiagonalNemytskii, sample_count: int = 10_000, seed: int = 0,
                               scale: float = 2.0, raise_on_failure: bool = True) -> CoefficientReport:
    """Monte Carlo check of the growth, Lipschitz and second-difference bounds.

    Draws ``(u1, u2, v1, v2)`` with independent normal coefficients times a
    per-sample log-uniform amplitude in ``[1e-3, scale]`` and checks

    - ``|G(u1)| <= c_G + c_DG |u1|``
    - ``|G(u1) - G(v1)| <= c_DG |u1 - v1|``
    - ``|G(u1) - G(v1) - G(u2) + G(v2)| <= c_DG |u1 - v1 - u2 + v2|
      + c_D2G |u1 - u2| (|u1 - v1| + |u2 - v2|)``

    with 4-ulp relative slack.
    """
    if sample_count < 1:
        raise DomainError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    N = G.modes
    amp = np.exp(rng.uniform(np.log(1e-3), np.log(scale), size=(4, sample_count, 1)))
    u1, u2, v1, v2 = rng.standard_normal((4, sample_count, N)) * amp
    # Correlated pairs probe the small-difference regime of the third bound.
    v1 = np.where(rng.random((sample_count, 1)) < 0.5, u1 + 1e-2 * v1, v1)
    v2 = np.where(rng.random((sample_count, 1)) < 0.5, u2 + 1e-2 * v2, v2)
    nrm = lambda x: np.linalg.norm(x, axis=-1)
    g_u1, g_u2, g_v1, g_v2 = (G.entries(x) for x in (u1, u2, v1, v2))
    lhs = (nrm(g_u1), nrm(g_u1 - g_v1), nrm(g_u1 - g_v1 - g_u2 + g_v2))
    rhs = (
        G.c_G + G.c_DG * nrm(u1),
        G.c_DG * nrm(u1 - v1),
        G.c_DG * nrm(u1 - v1 - u2 + v2) + G.c_D2G * nrm(u1 - u2) * (nrm(u1 - v1) + nrm(u2 - v2)),
    )
    ratios, counts, first = [], [], None
    for k, (l, r) in enumerate(zip(lhs, rhs)):
        bad = l > r * (1 + _ULP_SLACK) + 1e-300
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(r > 0, l / r, np.where(l > 0, np.inf, 0.0))
        ratios.append(float(q.max()))
        counts.append(int(bad.sum()))
        if first is None and bad.any():
            first = (k, int(np.argmax(bad)))
    report = CoefficientReport(G.profile, sample_count, tuple(ratios), tuple(counts), first)
    if raise_on_failure and not report.passed:
        k, i = first
        raise CertificationError(
            f"{CoefficientReport.NAMES[k]} bound violated for profile {G.profile!r} at sample {i}",
            report,
        )
    return report
