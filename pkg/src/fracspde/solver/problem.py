"""Mild-solution problem data and the discrete fixed-point map."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import lfilter

from .. import _kernels
from ..coefficients import DiagonalNemytskii
from ..errors import DomainError
from ..fbm import HilbertPath, ScalarPath
from ..holder import HolderParams, holder_seminorm
from ..semigroup import SpectralOperator

__all__ = ["MildProblem", "fixed_point_map", "semigroup_orbit"]


@dataclass(eq=False)
class MildProblem:
    """``du = A u dt + F(u) dt + G(u) d omega`` on ``[0, horizon]``, ``u(0) = u0``.

    The driver grid fixes the time step; ``omega`` must contain the nodes
    ``0`` and ``horizon``. ``drift`` is an optional Lipschitz map on
    coefficient vectors (batched over leading axes).
    """

    op: SpectralOperator
    G: DiagonalNemytskii
    omega: HilbertPath
    u0: np.ndarray
    params: HolderParams
    horizon: float
    kinks: int = _kernels.DEFAULT_KINKS
    drift: Callable | None = None
    _integrator: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if isinstance(self.omega, ScalarPath):
            self.omega = HilbertPath.from_scalar(self.omega)
        self.u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))
        N = self.op.modes
        if self.G.modes != N or self.omega.modes != N or self.u0.shape != (N,):
            raise DomainError(
                f"mode counts disagree: op {N}, G {self.G.modes}, "
                f"omega {self.omega.modes}, u0 {self.u0.shape}"
            )
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        self._i0 = self.omega.index_of(0.0)
        self._iT = self.omega.index_of(self.horizon)

    @property
    def modes(self) -> int:
        return self.op.modes

    @property
    def n(self) -> int:
        return self._iT - self._i0

    @property
    def dt(self) -> float:
        return self.omega.dt

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n + 1)

    @property
    def driver(self) -> np.ndarray:
        """Driver restricted to ``[0, T]``, shape ``(N, n+1)``."""
        return self.omega.coeffs[self._i0 : self._iT + 1].T

    def driver_seminorm(self) -> float:
        """``|||omega|||_{beta', 0, T}``."""
        return holder_seminorm(self.omega, self.params.beta_prime, (0.0, self.horizon))

    @property
    def integrator(self) -> _kernels.VolterraIntegrator:
        if self._integrator is None:
            self._integrator = _kernels.VolterraIntegrator(
                self.driver, self.op.lambdas, self.params.alpha, self.dt, self.kinks
            )
        return self._integrator

    def path(self, values) -> HilbertPath:
        """Wrap an ``(N, n+1)`` array as a HilbertPath on ``[0, T]``."""
        return HilbertPath(0.0, self.dt, np.asarray(values).T.copy())

    def values(self, u) -> np.ndarray:
        """``(N, n+1)`` view of a HilbertPath on the problem grid."""
        if isinstance(u, HilbertPath):
            if u.n != self.n or u.modes != self.modes or abs(u.dt - self.dt) > 1e-12 * self.dt:
                raise DomainError("path is not on the problem grid")
            return u.coeffs.T
        arr = np.asarray(u, dtype=float)
        if arr.shape != (self.modes, self.n + 1):
            raise DomainError(f"expected shape {(self.modes, self.n + 1)}, got {arr.shape}")
        return arr


def semigroup_orbit(problem: MildProblem, u0=None) -> np.ndarray:
    """``S(t_k) u0`` as an ``(N, n+1)`` array."""
    u0 = problem.u0 if u0 is None else np.asarray(u0, dtype=float)
    return (problem.op.multipliers(problem.times) * u0).T


def _drift_term(problem, u):
    """``int_0^t S(t - r) F(u(r)) dr`` with F linearly interpolated per cell."""
    F = np.asarray(problem.drift(u.T), dtype=float).T
    lam = problem.op.lambdas[:, None]
    h = problem.dt
    x = lam * h
    e = np.exp(-x)
    with np.errstate(divide="ignore", invalid="ignore"):
        # exact integrals of exp(-lam (h - s)) against the two hat functions
        wb = np.where(x > 1e-8, (x - 1 + e) / (x * lam), h / 2 - x * h / 6)
        wa = np.where(x > 1e-8, (1 - e) / lam - wb, h / 2 - x * h / 3)
    out = np.zeros_like(F)
    for i in range(F.shape[0]):
        y = np.zeros(F.shape[1])
        y[1:] = wa[i, 0] * F[i, :-1] + wb[i, 0] * F[i, 1:]
        out[i] = lfilter([1.0], [1.0, -e[i, 0]], y)
    return out


def fixed_point_map(problem: MildProblem, u) -> HilbertPath:
    """``T(u)(t) = S(t) u0 + int_0^t S(t - r) G(u(r)) d omega(r)`` on the grid."""
    return problem.path(_apply(problem, problem.values(u)))


def _apply(problem, u):
    g = problem.G.entries(u.T).T
    out = semigroup_orbit(problem) + problem.integrator.apply(g)
    if problem.drift is not None:
        out = out + _drift_term(problem, u)
    out[:, 0] = problem.u0
    return out
