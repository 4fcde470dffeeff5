"""Standard problem instances and their independent oracles.

Drivers are sampled once on ``sample_steps`` and subsampled to ``steps``,
so a refinement study sees the same path at every resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..coefficients import DiagonalNemytskii
from ..errors import DomainError
from ..fbm import FbmConfig, HilbertPath, TraceWeights, sample_fbm_hilbert
from ..holder import HolderParams
from ..semigroup import SpectralOperator
from .problem import MildProblem

__all__ = [
    "STANDARD_PARAMS",
    "Instance",
    "driver",
    "scalar_linear",
    "additive_noise",
    "multimode",
    "rough_initial",
]

STANDARD_PARAMS = HolderParams(beta=0.55, beta_prime=0.7, alpha=0.4)


@dataclass(eq=False)
class Instance:
    name: str
    problem: MildProblem
    oracle: np.ndarray | None = None  # (N, n+1) reference solution, when one exists


def driver(steps: int, seed: int, hurst: float = 0.75, modes: int = 1, horizon: float = 1.0,
           sample_steps: int | None = None, trace_decay: float = 2.0) -> HilbertPath:
    """V-valued fBm on ``[0, horizon]`` sampled on ``sample_steps`` and subsampled to ``steps``."""
    sample_steps = steps if sample_steps is None else sample_steps
    if sample_steps % steps:
        raise DomainError(f"sample_steps {sample_steps} is not a multiple of steps {steps}")
    cfg = FbmConfig(hurst, 0.0, horizon, sample_steps, seed)
    fine = sample_fbm_hilbert(cfg, TraceWeights.power_law(modes, trace_decay))
    stride = sample_steps // steps
    return HilbertPath(0.0, fine.dt * stride, fine.coeffs[::stride].copy())


def _scalar_op(lam):
    return SpectralOperator(np.array([float(lam)]))


def scalar_linear(steps: int, seed: int, lam: float = 1.0, sigma: float = 0.5, u0: float = 1.0,
                  hurst: float = 0.75, params: HolderParams = STANDARD_PARAMS,
                  sample_steps: int | None = None, horizon: float = 1.0) -> Instance:
    """``du = -lam u dt + sigma u d omega``; exact solution ``u0 exp(-lam t + sigma omega(t))``."""
    om = driver(steps, seed, hurst, 1, horizon, sample_steps)
    G = DiagonalNemytskii(np.array([sigma]), "identity")
    p = MildProblem(_scalar_op(lam), G, om, np.array([u0]), params, horizon)
    exact = u0 * np.exp(-lam * p.times + sigma * p.driver[0])
    return Instance("scalar_linear", p, exact[None, :])


def additive_noise(steps: int, seed: int, lam: float = 1.0, sigma: float = 0.5, u0: float = 1.0,
                   hurst: float = 0.75, params: HolderParams = STANDARD_PARAMS, refine: int = 16,
                   horizon: float = 1.0) -> Instance:
    """``du = -lam u dt + sigma d omega``.

    The oracle is ``u0 exp(-lam t) + sigma int_0^t exp(-lam (t - r)) d omega(r)``
    with the convolution integral as a left-point Riemann-Stieltjes sum on a
    grid ``refine`` times finer than the solver's.
    """
    fine = driver(steps * refine, seed, hurst, 1, horizon)
    om = HilbertPath(0.0, fine.dt * refine, fine.coeffs[::refine].copy())
    G = DiagonalNemytskii(np.array([sigma]), "constant")
    p = MildProblem(_scalar_op(lam), G, om, np.array([u0]), params, horizon)
    e = np.exp(-lam * fine.dt)
    # J_{j+1} = e (J_j + d omega_j)
    inc = np.concatenate([[0.0], np.diff(fine.coeffs[:, 0])])
    J = lfilter([0.0, e], [1.0, -e], inc[1:])
    J = np.concatenate([[0.0], J])[::refine]
    exact = u0 * np.exp(-lam * p.times) + sigma * J
    return Instance("additive_noise", p, exact[None, :])


def multimode(steps: int, seed: int, modes: int = 8, profile: str = "tanh", mu_scale: float = 0.5,
              mu_decay: float = 1.0, hurst: float = 0.75, params: HolderParams = STANDARD_PARAMS,
              sample_steps: int | None = None, horizon: float = 1.0, u0=None) -> Instance:
    """Dirichlet Laplacian on ``(0, pi)`` with ``G(u) = diag(mu_i h(u_i))``, ``mu_i = scale i^-decay``."""
    op = SpectralOperator.dirichlet_laplacian(modes)
    G = DiagonalNemytskii.power_law(modes, mu_decay, mu_scale, profile=profile)
    om = driver(steps, seed, hurst, modes, horizon, sample_steps)
    if u0 is None:
        i = np.arange(1, modes + 1)
        u0 = np.sin(np.pi * i / 3) / i
    return Instance("multimode", MildProblem(op, G, om, np.asarray(u0, dtype=float), params, horizon))


def rough_initial(steps: int, seed: int, modes: int = 64, exponent: float = 0.51, **kw) -> Instance:
    """Multimode instance with ``u0_i = i^-exponent``, whose ``V_beta`` norm is large."""
    u0 = np.arange(1, modes + 1, dtype=float) ** (-exponent)
    inst = multimode(steps, seed, modes=modes, u0=u0, **kw)
    inst.name = "rough_initial"
    return inst
