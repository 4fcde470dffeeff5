"""Weight selection and Picard iteration for the mild equation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, DomainError, NumericalError
from ..holder import NormReport, norms_from_values
from .kfun import kfun, solver_kfun_exponents
from .problem import MildProblem, _apply, semigroup_orbit

__all__ = [
    "SolveDiagnostics",
    "RhoChoice",
    "choose_rho",
    "solve_mild",
    "weighted_distance",
    "vbeta_norms",
]

RHO_MAX_EXPONENT = 64
DEFAULT_TOL = 1e-9
MAX_ITER = 200
_NOISE_FLOOR = 64 * np.finfo(float).eps


@dataclass
class SolveDiagnostics:
    rho: float
    K_rho: float
    c_T: float
    iterations: int = 0
    contraction_ratios: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    modified_distances: list = field(default_factory=list)
    residual_weighted: float = float("nan")
    norm_report: NormReport | None = None
    regularity: np.ndarray | None = None
    converged: bool = False

    def as_text(self) -> str:
        """Flat ``key = value`` block."""
        nr = self.norm_report
        items = [
            ("rho", self.rho), ("K_rho", self.K_rho), ("c_T", self.c_T),
            ("iterations", self.iterations), ("converged", self.converged),
            ("residual_weighted", self.residual_weighted),
            ("contraction_ratios", " ".join(f"{r:.6g}" for r in self.contraction_ratios)),
            ("max_contraction_ratio", max(self.contraction_ratios, default=float("nan"))),
        ]
        if nr is not None:
            items += [("sup_norm", nr.sup_norm), ("holder_seminorm", nr.holder_seminorm),
                      ("modified_seminorm", nr.modified_seminorm), ("weighted_norm", nr.weighted_norm)]
        out = []
        for k, v in items:
            if isinstance(v, float):
                v = f"{v:.17g}"
            out.append(f"{k} = {v}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class RhoChoice:
    rho: float
    K_rho: float
    product: float


def choose_rho(problem: MildProblem, c_T: float, seminorm: float | None = None) -> RhoChoice:
    """Smallest ``rho`` in ``{1, 2, 4, ...}`` with ``c_T |||omega||| K(rho) < 1/2``."""
    if not c_T > 0:
        raise DomainError("c_T must be positive")
    w = problem.driver_seminorm() if seminorm is None else seminorm
    a, b, d = solver_kfun_exponents(problem.params)
    T = problem.horizon
    for e in range(RHO_MAX_EXPONENT + 1):
        rho = 2.0**e
        K = kfun(rho, a, b, d, T)
        prod = c_T * w * K
        if prod < 0.5:
            return RhoChoice(rho, K, prod)
    raise NumericalError(f"no rho <= 2^{RHO_MAX_EXPONENT} gives c_T |||omega||| K(rho) < 1/2")


def vbeta_norms(problem: MildProblem, u) -> np.ndarray:
    """``|u(t_k)|_{V_beta}`` at every node."""
    lam = problem.op.lambdas[:, None]
    u = problem.values(u)
    return np.sqrt(np.sum(lam ** (2 * problem.params.beta) * u * u, axis=0))


def weighted_distance(problem: MildProblem, u, v, rho: float) -> NormReport:
    """Norm report of ``u - v`` on ``[0, T]`` with weight ``rho``."""
    d = problem.values(u) - problem.values(v)
    return norms_from_values(d.T, problem.dt, problem.params.beta, rho)


def solve_mild(problem: MildProblem, c_T: float | None = None, *, rho: float | None = None,
               tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER, init: str = "semigroup",
               calibration=None):
    """Picard iteration ``u^{k+1} = T(u^k)`` in the rho-weighted norm.

    ``rho`` defaults to :func:`choose_rho` with ``c_T`` (taken from
    ``calibration`` when given). Iteration stops once the unweighted
    modified-norm distance of successive iterates drops below ``tol``,
    which bounds the weighted distance as well. A weighted ratio >= 1 on
    three consecutive steps raises :class:`DivergenceError`.

    Returns ``(HilbertPath, SolveDiagnostics)``.
    """
    if calibration is not None and c_T is None:
        c_T = calibration.c_T
    if rho is None:
        if c_T is None:
            raise DomainError("need c_T (or a calibration) to choose rho")
        choice = choose_rho(problem, c_T)
    else:
        a, b, d = solver_kfun_exponents(problem.params)
        K = kfun(rho, a, b, d, problem.horizon)
        choice = RhoChoice(float(rho), K, (c_T or 0.0) * problem.driver_seminorm() * K)
    diag = SolveDiagnostics(choice.rho, choice.K_rho, float(c_T) if c_T else float("nan"))
    if init == "semigroup":
        u = semigroup_orbit(problem)
    elif init == "constant":
        u = np.repeat(problem.u0[:, None], problem.n + 1, axis=1)
    else:
        raise DomainError(f"unknown init {init!r}")
    beta, dt = problem.params.beta, problem.dt
    streak = 0
    prev = None
    for it in range(1, max_iter + 1):
        un = _apply(problem, u)
        if not np.all(np.isfinite(un)):
            diag.iterations = it
            raise DivergenceError("non-finite iterate", diag)
        rep = norms_from_values((un - u).T, dt, beta, choice.rho)
        scale = norms_from_values(un.T, dt, beta, choice.rho).weighted_norm
        dist, mdist = rep.weighted_norm, rep.modified_norm
        diag.distances.append(dist)
        diag.modified_distances.append(mdist)
        if prev is not None and prev > _NOISE_FLOOR * (1.0 + scale):
            ratio = dist / prev
            diag.contraction_ratios.append(ratio)
            streak = streak + 1 if ratio >= 1.0 else 0
            if streak >= 3:
                diag.iterations = it
                raise DivergenceError(
                    f"weighted distance failed to contract for 3 steps (rho={choice.rho})", diag)
        prev = dist
        u = un
        diag.iterations = it
        if mdist < tol:
            diag.converged = True
            break
    final = _apply(problem, u)
    diag.residual_weighted = norms_from_values((final - u).T, dt, beta, choice.rho).weighted_norm
    diag.norm_report = norms_from_values(u.T, dt, beta, choice.rho)
    diag.regularity = vbeta_norms(problem, u)
    return problem.path(u), diag
