"""Diagonal analytic semigroup ``S(t) = exp(tA)`` and its smoothing estimates.

``-A`` is given by its eigenvalues in the orthonormal eigenbasis, so every
operator norm below is an exact supremum over modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "SpectralOperator",
    "VdeltaVector",
    "EstimateReport",
    "apply_semigroup",
    "vdelta_norm",
    "smoothing_estimate_check",
    "hoelder_estimate_check",
    "double_difference_check",
    "random_quadruples",
]


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise DomainError("need at least one eigenvalue")
        if lam[0] <= 0 or np.any(np.diff(lam) < 0) or not np.all(np.isfinite(lam)):
            raise DomainError("eigenvalues must be positive, finite and nondecreasing")
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def dirichlet_laplacian(cls, modes: int = 64) -> "SpectralOperator":
        """``lambda_i = i**2``: the Dirichlet Laplacian on ``(0, pi)``."""
        return cls(np.arange(1, modes + 1, dtype=float) ** 2)

    @property
    def modes(self) -> int:
        return self.lambdas.size

    @property
    def lambda1(self) -> float:
        return float(self.lambdas[0])

    def multipliers(self, t) -> np.ndarray:
        """``exp(-lambda_i t)``; broadcasts over an array of times (last axis = modes)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("semigroup time must be nonnegative")
        return np.exp(-np.multiply.outer(t, self.lambdas))


@dataclass(frozen=True, eq=False)
class VdeltaVector:
    coeffs: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.delta < 0:
            raise DomainError("delta must be nonnegative")


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Exact norms against a bound; ``constant`` is the smallest c with norm <= c * bound."""

    t: np.ndarray
    exact_norm: np.ndarray
    bound: np.ndarray
    ratio: np.ndarray = field(init=False)
    constant: float = field(init=False)

    def __post_init__(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.bound > 0, self.exact_norm / self.bound, 0.0)
        object.__setattr__(self, "ratio", r)
        object.__setattr__(self, "constant", float(np.max(r)) if r.size else 0.0)

    def passed(self, constant: float = 1.0, rtol: float = 1e-12) -> bool:
        return bool(np.all(self.exact_norm <= constant * self.bound * (1 + rtol)))

    def to_csv(self, delimiter: str = ",") -> str:
        lines = [delimiter.join(["t", "exact_norm", "bound", "ratio"])]
        for row in zip(self.t, self.exact_norm, self.bound, self.ratio):
            lines.append(delimiter.join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def _coeffs(v):
    return v.coeffs if isinstance(v, VdeltaVector) else np.asarray(v, dtype=float)


def apply_semigroup(op: SpectralOperator, t: float, v):
    """``S(t) v``; returns the same kind of object it was given."""
    if t < 0:
        raise DomainError(f"semigroup time must be nonnegative, got {t}")
    c = _coeffs(v)
    if c.shape[-1] != op.modes:
        raise DomainError(f"vector has {c.shape[-1]} modes, operator has {op.modes}")
    out = c * np.exp(-op.lambdas * t)
    return VdeltaVector(out, v.delta) if isinstance(v, VdeltaVector) else out


def vdelta_norm(v, delta: float, op: SpectralOperator) -> float:
    """``(sum lambda_i^{2 delta} v_i^2)^{1/2}``."""
    c = _coeffs(v)
    return float(np.sqrt(np.sum(op.lambdas ** (2 * delta) * c * c, axis=-1)))


def smoothing_estimate_check(op: SpectralOperator, gamma: float, t_samples,
                             decay: str = "half") -> EstimateReport:
    """``sup_i lambda_i^gamma exp(-lambda_i t)`` against an envelope.

    ``decay="half"`` uses ``(gamma/e)^gamma t^-gamma exp(-lambda_1 t / 2)``;
    ``decay="none"`` the continuum envelope ``(gamma/(e t))^gamma``. The
    first holds with constant ``2^gamma``, the second with constant 1.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    t = np.asarray(t_samples, dtype=float)
    if np.any(t <= 0):
        raise DomainError("smoothing samples need t > 0")
    exact = np.max(op.lambdas**gamma * op.multipliers(t), axis=-1)
    env = (gamma / (np.e * t)) ** gamma
    if decay == "half":
        env = env * np.exp(-op.lambda1 * t / 2)
    elif decay != "none":
        raise DomainError(f"unknown decay mode {decay!r}")
    return EstimateReport(t, exact, env)


def hoelder_estimate_check(op: SpectralOperator, sigma: float, theta: float, mu: float,
                           t_samples) -> EstimateReport:
    """``|S(t) - id|`` from ``V_{sigma+mu}`` to ``V_{theta+mu}`` against ``t^{sigma-theta}``.

    The norm is ``sup_i lambda_i^{theta-sigma} (1 - exp(-lambda_i t))``;
    ``mu`` cancels for a diagonal generator but is validated.
    """
    if theta < 0 or not (theta <= sigma <= 1 + theta) or sigma + mu < 0 or theta + mu < 0:
        raise DomainError("need theta >= 0, theta <= sigma <= 1 + theta, and nonnegative space indices")
    t = np.asarray(t_samples, dtype=float)
    if np.any(t <= 0):
        raise DomainError("samples need t > 0")
    exact = np.max(op.lambdas ** (theta - sigma) * -np.expm1(-np.multiply.outer(t, op.lambdas)), axis=-1)
    return EstimateReport(t, exact, t ** (sigma - theta))


def _double_difference(op, q, r, s, t):
    lam = op.lambdas
    # S(t-r) - S(s-r) - S(t-q) + S(s-q) = S(s-r)(S(t-s) - id)(id - S(r-q))
    a = np.exp(-np.multiply.outer(s - r, lam))
    b = -np.expm1(-np.multiply.outer(t - s, lam))
    c = -np.expm1(-np.multiply.outer(r - q, lam))
    return np.max(a * b * c, axis=-1)


def double_difference_check(op: SpectralOperator, beta: float, gamma: float, quadruples) -> EstimateReport:
    """Exact norm of the semigroup double difference against
    ``(t-s)^beta (r-q)^gamma (s-r)^{-(beta+gamma)}``.

    ``quadruples`` has rows ``(q, r, s, t)``; the report's ``t`` column holds
    the row index. Rows with ``s == r`` are rejected since the bound is
    infinite there.
    """
    Q = np.atleast_2d(np.asarray(quadruples, dtype=float))
    q, r, s, t = Q.T
    if np.any(q < 0) or np.any(r < q) or np.any(s < r) or np.any(t < s):
        raise DomainError("quadruples must satisfy 0 <= q <= r <= s <= t")
    if beta + gamma > 1 or beta < 0 or gamma < 0:
        raise DomainError("need beta, gamma >= 0 and beta + gamma <= 1")
    if np.any(s == r):
        raise DomainError("s == r makes the bound infinite")
    exact = _double_difference(op, q, r, s, t)
    bound = (t - s) ** beta * (r - q) ** gamma * (s - r) ** (-(beta + gamma))
    return EstimateReport(np.arange(Q.shape[0], dtype=float), exact, bound)


def random_quadruples(count: int, seed: int, horizon: float = 1.0) -> np.ndarray:
    """Sorted uniform quadruples ``q <= r <= s <= t`` on ``[0, horizon]``."""
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(0.0, horizon, size=(count, 4)), axis=1)
