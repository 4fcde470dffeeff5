"""Calibrated numerical certification of the solver's a-priori bounds.

The bounds involve existential constants. Each one is calibrated on a
corpus of random Hölder paths (draws disjoint from the ones used for
checking) as ``safety * median`` of the per-draw observed ratios, where a
draw's observed ratio is its supremum over a grid of weights ``rho``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import e as _E

import numpy as np

from .. import _kernels
from ..errors import CertificationError, DomainError
from ..fbm import FbmConfig, HilbertPath, TraceWeights, sample_fbm_hilbert, wiener_shift
from ..holder import norms_from_values, weighted_norms
from .kfun import kfun, solver_kfun_exponents
from .picard import choose_rho, solve_mild, vbeta_norms
from .problem import MildProblem, _apply, semigroup_orbit

__all__ = [
    "Calibration",
    "BoundReport",
    "EnvelopeReport",
    "RegularityReport",
    "initial_value_constant",
    "random_holder_paths",
    "coarsen",
    "calibrate",
    "self_map_check",
    "contraction_certify",
    "derivative_envelope_check",
    "regularity_report",
    "cocycle_defect",
    "solution_at",
    "initial_data_lipschitz",
]

CAL_RHOS = (0.0, 1.0, 4.0, 16.0, 64.0, 256.0)
CAL_MAX_STEPS = 512
SAFETY = 1.5
CAL_BATCH = 4


def initial_value_constant(beta: float) -> float:
    """``c = 1 + (beta/e)^beta`` bounds ``||S(.) u0||_{beta,~} / |u0|`` for any diagonal S."""
    return 1.0 + (beta / _E) ** beta


@dataclass
class Calibration:
    c_self_map: float
    c_contraction: float
    c_init: float
    self_map_ratios: np.ndarray = field(repr=False)
    contraction_ratios: np.ndarray = field(repr=False)
    rhos: tuple = CAL_RHOS
    safety: float = SAFETY

    @property
    def c_T(self) -> float:
        """Constant used to choose rho: the larger of the two calibrated constants."""
        return max(self.c_self_map, self.c_contraction)

    def scaled(self, factor: float) -> "Calibration":
        """Copy with both constants multiplied by ``factor`` (for forced-failure runs)."""
        return Calibration(self.c_self_map * factor, self.c_contraction * factor, self.c_init,
                           self.self_map_ratios, self.contraction_ratios, self.rhos, self.safety)


@dataclass(frozen=True)
class BoundReport:
    name: str
    lhs: float
    rhs: float
    rho: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else float("inf")
        return self.lhs / self.rhs

    @property
    def passed(self) -> bool:
        return self.ratio <= 1.0


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------


def coarsen(problem: MildProblem, max_steps: int = CAL_MAX_STEPS) -> MildProblem:
    """Same problem on a subsampled driver grid with at most ``max_steps`` steps."""
    if problem.n <= max_steps:
        return problem
    stride = int(np.ceil(problem.n / max_steps))
    while problem.n % stride:
        stride += 1
    w = problem.driver.T[::stride]
    omega = HilbertPath(0.0, problem.dt * stride, w)
    return MildProblem(problem.op, problem.G, omega, problem.u0, problem.params,
                       problem.horizon, problem.kinks, problem.drift)


def random_holder_paths(problem: MildProblem, count: int, seed: int, hurst: float = 0.8,
                        amplitude=(0.25, 1.0)) -> list:
    """``S(t) u0 + A xi(t)`` with ``xi`` a V-valued fBm of the given Hurst index."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = []
    base = semigroup_orbit(problem)
    for k in range(count):
        cfg = FbmConfig(hurst, 0.0, problem.horizon, problem.n, int(rng.integers(2**63)))
        xi = sample_fbm_hilbert(cfg, TraceWeights.power_law(problem.modes)).coeffs.T
        out.append(base + rng.uniform(*amplitude) * xi)
    return out


def _norm(problem, u, rho):
    return norms_from_values(np.asarray(u).T, problem.dt, problem.params.beta, rho)


def _wnorms(problem, u, rhos):
    return weighted_norms(np.asarray(u).T, problem.dt, problem.params.beta, rhos)


def calibrate(problem: MildProblem, draws: int = 8, seed: int = 0, rhos=CAL_RHOS,
              safety: float = SAFETY, max_steps: int = CAL_MAX_STEPS,
              batch: int = CAL_BATCH) -> Calibration:
    """Calibrate the self-map and contraction constants on a random corpus.

    Runs on the problem coarsened to at most ``max_steps`` steps. Each of
    the ``draws`` observations is the largest ratio over ``rhos`` and over a
    batch of ``batch`` random pairs; the constant is ``safety`` times the
    median observation.
    """
    P = coarsen(problem, max_steps)
    W = P.driver_seminorm()
    if W == 0:
        raise DomainError("cannot calibrate against a zero driver")
    a, b, d = solver_kfun_exponents(P.params)
    K = np.array([kfun(r, a, b, d, P.horizon) for r in rhos])
    orbit = semigroup_orbit(P)
    us = random_holder_paths(P, 2 * draws * batch, seed)
    r7 = np.zeros(draws)
    r8 = np.zeros(draws)
    for k in range(draws * batch):
        u1, u2 = us[2 * k], us[2 * k + 1]
        t1, t2 = _apply(P, u1), _apply(P, u2)
        x7 = np.max(_wnorms(P, t1 - orbit, rhos) / (W * K * (1 + _wnorms(P, u1, rhos))))
        grow = 1 + _norm(P, u1, 0.0).modified_norm + _norm(P, u2, 0.0).modified_norm
        x8 = np.max(_wnorms(P, t1 - t2, rhos) / (W * K * grow * _wnorms(P, u1 - u2, rhos)))
        r7[k // batch] = max(r7[k // batch], x7)
        r8[k // batch] = max(r8[k // batch], x8)
    return Calibration(safety * float(np.median(r7)), safety * float(np.median(r8)),
                       initial_value_constant(P.params.beta), r7, r8, tuple(rhos), safety)


# ---------------------------------------------------------------------------
# Bound checks
# ---------------------------------------------------------------------------


def _K(problem, rho):
    a, b, d = solver_kfun_exponents(problem.params)
    return kfun(rho, a, b, d, problem.horizon)


def self_map_check(problem: MildProblem, u, cal: Calibration, rho: float) -> BoundReport:
    """``||T(u)|| <= c_T |||omega||| K(rho) (1 + ||u||) + c |u0|`` in the rho-weighted norm."""
    u = problem.values(u)
    W, K = problem.driver_seminorm(), _K(problem, rho)
    lhs = _norm(problem, _apply(problem, u), rho).weighted_norm
    rhs = cal.c_self_map * W * K * (1 + _norm(problem, u, rho).weighted_norm)
    rhs += cal.c_init * np.linalg.norm(problem.u0)
    return BoundReport("self_map", lhs, rhs, rho)


def contraction_certify(problem: MildProblem, u1, u2, cal: Calibration, rho: float,
                        strict: bool = False) -> BoundReport:
    """Contraction bound for ``T`` with initial values read off ``u1(0)`` and ``u2(0)``.

    ``||T(u1) - T(u2)||_rho <= c_T |||omega||| (1 + ||u1|| + ||u2||) K(rho) ||u1 - u2||_rho
    + c |u1(0) - u2(0)|``.
    """
    u1, u2 = problem.values(u1), problem.values(u2)
    W, K = problem.driver_seminorm(), _K(problem, rho)

    def T(u):
        p = MildProblem(problem.op, problem.G, problem.omega, u[:, 0], problem.params,
                        problem.horizon, problem.kinks, problem.drift)
        p._integrator = problem.integrator
        return _apply(p, u)

    lhs = _norm(problem, T(u1) - T(u2), rho).weighted_norm
    grow = 1 + _norm(problem, u1, 0.0).modified_norm + _norm(problem, u2, 0.0).modified_norm
    rhs = cal.c_contraction * W * grow * K * _norm(problem, u1 - u2, rho).weighted_norm
    rhs += cal.c_init * np.linalg.norm(u1[:, 0] - u2[:, 0])
    report = BoundReport("contraction", lhs, rhs, rho)
    if strict and not report.passed:
        raise CertificationError(f"contraction ratio {report.ratio:.6g} > 1 at rho={rho}", report)
    return report


@dataclass(frozen=True, eq=False)
class EnvelopeReport:
    """Left derivative of ``r -> S(t - r) G(u(r))`` against its envelope."""

    r: np.ndarray
    lhs: np.ndarray
    envelope: np.ndarray
    slope_near_zero: float
    slope_near_t: float

    @property
    def ratio(self) -> np.ndarray:
        return self.lhs / self.envelope

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratio))


def _loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def derivative_envelope_check(problem: MildProblem, u, t: float, fit_nodes: int = 6) -> EnvelopeReport:
    """``|D^alpha_{0+} S(t - .) G(u(.))[r]|_HS`` against
    ``(1 + ||u||_{beta,~}) r^{-alpha} (1 + r^beta / (t - r)^beta)`` for ``0 < r < t``.

    Slopes are log-log regressions over the ``fit_nodes`` nodes nearest each
    end, taken on dyadic node offsets.
    """
    u = problem.values(u)
    k = int(round(t / problem.dt))
    if k < 2 or abs(k * problem.dt - t) > 1e-9 * problem.dt or k > problem.n:
        raise DomainError("t must be a grid node with at least two cells")
    al, be = problem.params.alpha, problem.params.beta
    r = problem.times[: k + 1]
    z = problem.G.entries(u[:, : k + 1].T).T * np.exp(-problem.op.lambdas[:, None] * (t - r))
    L = np.array([_kernels.left_derivative(zi, al, problem.dt) for zi in z])
    lhs = np.linalg.norm(L, axis=0)[1:k]
    rr = r[1:k]
    unorm = _norm(problem, u, 0.0).modified_norm
    env = (1 + unorm) * rr ** (-al) * (1 + rr**be / (t - rr) ** be)
    idx = 2 ** np.arange(fit_nodes)
    idx = idx[idx < k - 1]
    s0 = _loglog_slope(rr[idx - 1], lhs[idx - 1])
    s1 = _loglog_slope(t - rr[::-1][idx - 1], lhs[::-1][idx - 1])
    return EnvelopeReport(rr, lhs, env, s0, s1)


@dataclass(frozen=True, eq=False)
class RegularityReport:
    """``|u(t)|_{V_beta}`` against ``c0 t^-beta |u0| + |||omega||| (1 + ||u||_{beta,~})``."""

    t: np.ndarray
    vbeta: np.ndarray
    semigroup_term: np.ndarray
    noise_term: float

    @property
    def fitted_constant(self) -> float:
        """Smallest c with ``vbeta <= c (semigroup_term + noise_term)`` at every t > 0."""
        return float(np.max(self.vbeta / (self.semigroup_term + self.noise_term)))

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.vbeta)))

    def holds(self, c_T: float) -> bool:
        """Bound with the provable semigroup constant and ``c_T`` on the noise term."""
        return bool(np.all(self.vbeta <= (self.semigroup_term + c_T * self.noise_term)
                           * (1 + 1e-12)))


def regularity_report(problem: MildProblem, solution) -> RegularityReport:
    """Per-node ``V_beta`` norms of a solved path, excluding ``t = 0``."""
    u = problem.values(solution)
    be = problem.params.beta
    vb = vbeta_norms(problem, u)[1:]
    t = problem.times[1:]
    c0 = (be / _E) ** be
    semi = c0 * t ** (-be) * np.linalg.norm(problem.u0)
    noise = problem.driver_seminorm() * (1 + _norm(problem, u, 0.0).modified_norm)
    return RegularityReport(t, vb, semi, noise)


# ---------------------------------------------------------------------------
# Cocycle
# ---------------------------------------------------------------------------


def _restricted(problem, omega, u0, horizon):
    return MildProblem(problem.op, problem.G, omega, u0, problem.params, horizon,
                       problem.kinks, problem.drift)


def solution_at(problem: MildProblem, t: float, omega=None, u0=None, c_T=None, rho=None,
                tol=1e-12) -> np.ndarray:
    """``phi(t, omega, u0)``: solve on ``[0, t]`` and return the final value."""
    omega = problem.omega if omega is None else omega
    u0 = problem.u0 if u0 is None else u0
    if t == 0:
        return np.array(u0, dtype=float)
    p = _restricted(problem, omega, u0, t)
    if rho is None and c_T is None:
        rho = 1.0
    u, diag = solve_mild(p, c_T, rho=rho, tol=tol)
    return u.coeffs[-1].copy()


def cocycle_defect(problem: MildProblem, t: float, tau: float, c_T=None, rho=None,
                   tol=1e-12) -> float:
    """``|phi(t + tau, omega, u0) - phi(t, theta_tau omega, phi(tau, omega, u0))|``."""
    if t < 0 or tau < 0 or t + tau > problem.horizon * (1 + 1e-12):
        raise DomainError("need t, tau >= 0 and t + tau <= horizon")
    for x in (t, tau):
        k = x / problem.dt
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise DomainError(f"time {x} is not on the grid")
    lhs = solution_at(problem, t + tau, c_T=c_T, rho=rho, tol=tol)
    mid = solution_at(problem, tau, c_T=c_T, rho=rho, tol=tol)
    shifted = wiener_shift(problem.omega, tau)
    rhs = solution_at(problem, t, omega=shifted, u0=mid, c_T=c_T, rho=rho, tol=tol)
    return float(np.linalg.norm(lhs - rhs))


def initial_data_lipschitz(problem: MildProblem, t: float, direction=None,
                           scales=(1e-1, 1e-2, 1e-3), rho=1.0, tol=1e-12) -> np.ndarray:
    """Empirical ``|phi(t, u0 + s v) - phi(t, u0)| / (s |v|)`` for each scale ``s``."""
    v = np.ones(problem.modes) if direction is None else np.asarray(direction, dtype=float)
    base = solution_at(problem, t, rho=rho, tol=tol)
    out = []
    for sc in scales:
        moved = solution_at(problem, t, u0=problem.u0 + sc * v, rho=rho, tol=tol)
        out.append(np.linalg.norm(moved - base) / (sc * np.linalg.norm(v)))
    return np.array(out)
