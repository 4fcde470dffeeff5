"""Weyl fractional derivatives on grids and the Zähle pathwise integral.

The integral of ``z`` against ``zeta`` over ``[T1, T2]`` is computed as

    z(T1) (zeta(T2) - zeta(T1)) - int D^alpha_{T1+}(z - z(T1)) D^{1-alpha}_{T2-} zeta_{T2-} dr,

where both derivatives are the real brackets of piecewise-linear
reconstructions. The leading minus sign plays the role of the formal
factor ``(-1)^alpha``; the constant part of ``z`` is the ``z == 1``
identity, integrated exactly. See :mod:`fracspde._kernels` for the
quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .fbm import HilbertPath, ScalarPath, wiener_shift
from .holder import holder_seminorm, norms_from_values

__all__ = [
    "FracDerivSamples",
    "OperatorPath",
    "weyl_left",
    "weyl_right_minus",
    "zahle_integral_scalar",
    "zahle_integral_hilbert",
    "riemann_stieltjes_oracle",
    "additivity_defect",
    "shift_covariance_defect",
    "integral_bound_ratio",
    "right_derivative_envelope",
]

_DT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class FracDerivSamples:
    """Derivative values at the nodes of a window.

    ``times`` excludes the singular endpoint (``T1`` for left derivatives,
    ``T2`` for right derivatives). ``values`` has the time axis first.
    """

    window: tuple
    order: float
    times: np.ndarray
    values: np.ndarray

    def to_csv(self, delimiter: str = ",") -> str:
        if self.values.ndim != 1:
            raise DomainError("CSV export supports scalar samples only")
        lines = [delimiter.join(["r", "value"])]
        lines += [f"{r:.17g}{delimiter}{v:.17g}" for r, v in zip(self.times, self.values)]
        return "\n".join(lines) + "\n"


@dataclass(eq=False)
class OperatorPath:
    """Grid path of Hilbert-Schmidt operators in the eigenbasis.

    Exactly one of ``diag`` (shape ``(n+1, N)``) and ``dense`` (shape
    ``(n+1, N, N)``, entry ``[k, j, i] = (Z(t_k) e_i, e_j)``) is set.
    """

    t0: float
    dt: float
    diag: np.ndarray | None = None
    dense: np.ndarray | None = None

    def __post_init__(self):
        if (self.diag is None) == (self.dense is None):
            raise DomainError("OperatorPath needs exactly one of diag or dense")
        if self.diag is not None:
            d = np.asarray(self.diag, dtype=float)
            self.diag = d[:, None] if d.ndim == 1 else d
        else:
            d = np.asarray(self.dense, dtype=float)
            if d.ndim != 3 or d.shape[1] != d.shape[2]:
                raise DomainError("dense OperatorPath needs shape (n+1, N, N)")
            self.dense = d
        if not self.dt > 0:
            raise DomainError("dt must be positive")

    @property
    def n(self) -> int:
        return (self.diag if self.diag is not None else self.dense).shape[0] - 1

    @property
    def modes(self) -> int:
        return (self.diag if self.diag is not None else self.dense).shape[1]

    def hs_norms(self) -> np.ndarray:
        """Frobenius norm of the coefficient matrix at each node."""
        if self.diag is not None:
            return np.linalg.norm(self.diag, axis=1)
        return np.sqrt(np.einsum("kji,kji->k", self.dense, self.dense))

    def to_dense(self) -> "OperatorPath":
        if self.dense is not None:
            return self
        n1, N = self.diag.shape
        d = np.zeros((n1, N, N))
        d[:, np.arange(N), np.arange(N)] = self.diag
        return OperatorPath(self.t0, self.dt, dense=d)

    def index_of(self, t):
        return ScalarPath(self.t0, self.dt, np.zeros(self.n + 1)).index_of(t)

    def shifted(self, tau: float) -> "OperatorPath":
        """``r -> Z(r + tau)``: same values on the grid relabelled by ``-tau``."""
        return OperatorPath(self.t0 - tau, self.dt, diag=self.diag, dense=self.dense)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _series(path):
    """Time-last array view of a path's values."""
    if isinstance(path, ScalarPath):
        return path.values
    if isinstance(path, HilbertPath):
        return path.coeffs.T
    if isinstance(path, OperatorPath):
        if path.diag is not None:
            return path.diag.T
        return np.moveaxis(path.dense, 0, -1)
    raise DomainError(f"unsupported path type {type(path).__name__}")


def _window_slice(path, window):
    if window is None:
        return 0, path.n, (path.t0, path.t0 + path.dt * path.n)
    t1, t2 = window
    if not t1 < t2:
        raise DomainError(f"empty window [{t1}, {t2}]")
    return path.index_of(t1), path.index_of(t2), (float(t1), float(t2))


def _check_same_grid(a, b):
    if a.n != b.n or abs(a.dt - b.dt) > _DT_RTOL * a.dt or abs(a.t0 - b.t0) > 1e-9 * a.dt:
        raise DomainError("integrand and integrator must share the grid")


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------


def weyl_left(z, alpha: float, window=None) -> FracDerivSamples:
    """``D^alpha_{T1+} z`` at the nodes ``r in (T1, T2]``."""
    _check_alpha(alpha)
    i1, i2, win = _window_slice(z, window)
    y = _series(z)[..., i1 : i2 + 1]
    L = _kernels.left_derivative(y, alpha, z.dt)
    times = z.t0 + z.dt * np.arange(i1 + 1, i2 + 1)
    return FracDerivSamples(win, alpha, times, np.moveaxis(L[..., 1:], -1, 0))


def weyl_right_minus(omega, alpha: float, window=None) -> FracDerivSamples:
    """Real bracket of ``D^{1-alpha}_{T2-} omega_{T2-}`` at the nodes ``r in [T1, T2)``."""
    _check_alpha(alpha)
    i1, i2, win = _window_slice(omega, window)
    y = _series(omega)[..., i1 : i2 + 1]
    R = _kernels.right_derivative(y, alpha, omega.dt)
    times = omega.t0 + omega.dt * np.arange(i1, i2)
    return FracDerivSamples(win, alpha, times, np.moveaxis(R[..., :-1], -1, 0))


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------


def zahle_integral_scalar(z: ScalarPath, zeta: ScalarPath, alpha: float, window=None, *,
                          kinks: int = _kernels.DEFAULT_KINKS,
                          split_constant: bool = True) -> float:
    """Pathwise integral ``int_{T1}^{T2} z dzeta`` via fractional derivatives.

    ``split_constant=False`` sends the whole integrand through the
    derivative product (used to exercise the raw ``r^{-alpha}`` route).
    """
    _check_alpha(alpha)
    _check_same_grid(z, zeta)
    i1, i2, _ = _window_slice(z, window)
    a = _series(z)[i1 : i2 + 1]
    b = _series(zeta)[i1 : i2 + 1]
    return float(_kernels.zahle_window(a, b, alpha, z.dt, kinks, split_constant))


def zahle_integral_hilbert(Z: OperatorPath, omega: HilbertPath, alpha: float, window=None, *,
                           kinks: int = _kernels.DEFAULT_KINKS) -> np.ndarray:
    """``sum_j (sum_i int z_ji d omega_i) e_j`` as a coefficient vector."""
    _check_alpha(alpha)
    _check_same_grid(Z, omega)
    if Z.modes != omega.modes:
        raise DomainError(f"operator has {Z.modes} modes, driver has {omega.modes}")
    i1, i2, _ = _window_slice(omega, window)
    w = omega.coeffs.T[:, i1 : i2 + 1]
    if Z.diag is not None:
        z = Z.diag.T[:, i1 : i2 + 1]
        return _kernels.zahle_window(z, w, alpha, Z.dt, kinks)
    z = np.moveaxis(Z.dense, 0, -1)[..., i1 : i2 + 1]  # (j, i, time)
    return _kernels.zahle_window(z, w, alpha, Z.dt, kinks).sum(axis=-1)


def riemann_stieltjes_oracle(z, zeta, window=None) -> float:
    """Left-point sum ``sum z(t_k) (zeta(t_{k+1}) - zeta(t_k))``."""
    _check_same_grid(z, zeta)
    i1, i2, _ = _window_slice(z, window)
    a = _series(z)[i1 : i2 + 1]
    b = _series(zeta)[i1 : i2 + 1]
    return float(np.sum(a[:-1] * np.diff(b)))


def additivity_defect(z, zeta, alpha, T1, T2, T3, **kw) -> float:
    """``|int_{T1}^{T2} + int_{T2}^{T3} - int_{T1}^{T3}|``."""
    if not (T1 < T2 < T3):
        raise DomainError(f"need T1 < T2 < T3, got {T1}, {T2}, {T3}")
    a = zahle_integral_scalar(z, zeta, alpha, (T1, T2), **kw)
    b = zahle_integral_scalar(z, zeta, alpha, (T2, T3), **kw)
    c = zahle_integral_scalar(z, zeta, alpha, (T1, T3), **kw)
    return abs(a + b - c)


def shift_covariance_defect(Z, omega, tau, alpha, window=None) -> float:
    """Norm of ``int_{T1}^{T2} Z d omega - int_{T1-tau}^{T2-tau} Z(. + tau) d theta_tau omega``."""
    if window is None:
        window = (omega.t0, omega.t_end)
    t1, t2 = window
    shifted_omega = wiener_shift(omega, tau)
    if isinstance(Z, ScalarPath):
        lhs = zahle_integral_scalar(Z, omega, alpha, window)
        Zs = ScalarPath(Z.t0 - tau, Z.dt, Z.values)
        rhs = zahle_integral_scalar(Zs, shifted_omega, alpha, (t1 - tau, t2 - tau))
        return abs(lhs - rhs)
    lhs = zahle_integral_hilbert(Z, omega, alpha, window)
    rhs = zahle_integral_hilbert(Z.shifted(tau), shifted_omega, alpha, (t1 - tau, t2 - tau))
    return float(np.linalg.norm(lhs - rhs))


# ---------------------------------------------------------------------------
# Bound ratios (constants are calibrated by the caller)
# ---------------------------------------------------------------------------


def integral_bound_ratio(Z, omega, alpha, beta, beta_prime, window=None) -> float:
    """``|int Z d omega| / (||Z||_beta |||omega|||_{beta'} (T2 - T1)^{beta'})``.

    ``||Z||_beta`` is the sup norm plus the beta-seminorm, using the
    Hilbert-Schmidt norm for operator paths.
    """
    i1, i2, (t1, t2) = _window_slice(omega, window)
    if isinstance(Z, ScalarPath):
        val = abs(zahle_integral_scalar(Z, omega, alpha, window))
        zv = Z.values[i1 : i2 + 1]
    else:
        val = float(np.linalg.norm(zahle_integral_hilbert(Z, omega, alpha, window)))
        zv = Z.diag[i1 : i2 + 1] if Z.diag is not None else Z.dense[i1 : i2 + 1].reshape(i2 - i1 + 1, -1)
    rep = norms_from_values(zv, Z.dt, beta)
    seminorm_w = holder_seminorm(omega, beta_prime, (t1, t2))
    denom = (rep.sup_norm + rep.holder_seminorm) * seminorm_w * (t2 - t1) ** beta_prime
    return val / denom if denom > 0 else 0.0


def right_derivative_envelope(omega, alpha, beta_prime, window=None) -> np.ndarray:
    """Pointwise ``|D^{1-alpha} omega|(r) / (|||omega|||_{beta'} (T2 - r)^{alpha + beta' - 1})``."""
    d = weyl_right_minus(omega, alpha, window)
    t2 = d.window[1]
    semi = holder_seminorm(omega, beta_prime, d.window)
    mag = np.abs(d.values) if d.values.ndim == 1 else np.linalg.norm(d.values, axis=1)
    env = semi * (t2 - d.times) ** (alpha + beta_prime - 1)
    return mag / env
