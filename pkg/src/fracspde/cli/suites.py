"""Certification suites and refinement studies behind ``certify`` and ``converge``.

A suite yields :class:`Check` rows. ``limit`` is the threshold the value is
compared against with ``op``; informational rows carry ``op = "info"``.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass

import numpy as np

from .. import fbm, fraccalc, semigroup
from ..coefficients import PROFILES, DiagonalNemytskii, certify_coefficient_bounds
from ..fbm import FbmConfig, ScalarPath
from ..holder import HolderParams
from ..solver import certify as cert
from ..solver import instances
from ..solver.kfun import kfun
from ..solver.picard import choose_rho, solve_mild

__all__ = ["Check", "covariance_zscores", "SUITES", "run_suites", "STUDIES", "run_study", "fitted_order"]

_OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, "info": None}


@dataclass(frozen=True)
class Check:
    suite: str
    check: str
    value: float
    op: str = "info"
    limit: float = float("nan")

    @property
    def status(self) -> str:
        fn = _OPS[self.op]
        if fn is None:
            return "INFO"
        return "PASS" if np.isfinite(self.value) and fn(self.value, self.limit) else "FAIL"

    def row(self):
        return [self.suite, self.check, f"{self.value:.10g}", self.op,
                "" if np.isnan(self.limit) else f"{self.limit:.10g}", self.status]


HEADER = ["suite", "check", "value", "op", "limit", "status"]


@dataclass
class SuiteConfig:
    steps: int = 1024
    seed: int = 0
    hurst: float = 0.75
    params: HolderParams = instances.STANDARD_PARAMS
    ct_scale: float = 1.0
    samples: int = 10_000


def fitted_order(ns, errors) -> float:
    """Least-squares slope of ``-log error`` against ``log n``."""
    return float(-np.polyfit(np.log(ns), np.log(errors), 1)[0])


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


def covariance_zscores(samples, cov):
    """``|empirical - cov| / SE`` per upper-triangle entry, SE from the Gaussian fourth moment."""
    m = samples.shape[0]
    emp = samples.T @ samples / m
    se = np.sqrt((cov**2 + np.outer(np.diag(cov), np.diag(cov))) / m)
    iu = np.triu_indices_from(cov)
    return (np.abs(emp - cov) / se)[iu]


def zscore_checks(suite, z):
    """At most 1% of entries beyond 3 SE and none beyond the 1% Bonferroni level."""
    from scipy.stats import norm
    yield Check(suite, "fraction_beyond_3se", float(np.mean(z > 3)), "<=", 0.01)
    yield Check(suite, "max_zscore", float(z.max()), "<=", float(norm.isf(0.005 / z.size)))


def suite_fbm(cfg: SuiteConfig):
    n, reps = 32, 2000
    seqs = np.random.SeedSequence(cfg.seed).spawn(reps)
    X = np.array([fbm.sample_fbm_1d(FbmConfig(cfg.hurst, 0, 1, n, 0), seedseq=s).values[1:]
                  for s in seqs])
    t = np.arange(1, n + 1) / n
    C = fbm.fbm_covariance(t[:, None], t[None, :], cfg.hurst)
    yield from zscore_checks("fbm", covariance_zscores(X, C))


def _smooth_pair(n):
    t = np.linspace(0, 1, n + 1)
    return ScalarPath(0, 1 / n, np.sin(t)), ScalarPath(0, 1 / n, np.cos(t))


def _fbm_scalar(n, seed, hurst):
    return fbm.sample_fbm_1d(FbmConfig(hurst, 0, 1, n, seed))


def suite_integral(cfg: SuiteConfig):
    n, al = cfg.steps, cfg.params.alpha
    z, zeta = _smooth_pair(n)
    zf, zetaf = _smooth_pair(16 * n)
    exact = fraccalc.riemann_stieltjes_oracle(zf, zetaf)
    val = fraccalc.zahle_integral_scalar(z, zeta, al)
    yield Check("integral", "smooth_vs_fine_sum_rel", abs(val - exact) / abs(exact), "<=", 1e-4)
    w = _fbm_scalar(n, cfg.seed, cfg.hurst)
    one = ScalarPath(0, w.dt, np.ones(n + 1))
    inc = w.values[-1] - w.values[0]
    err = abs(fraccalc.zahle_integral_scalar(one, w, al) - inc) / max(abs(inc), 1e-300)
    yield Check("integral", "constant_integrand_increment_rel", err, "<=", 1e-3)
    half = 0.5 * (w.values[-1] ** 2 - w.values[0] ** 2)
    err = abs(fraccalc.zahle_integral_scalar(w, w, al) - half) / abs(half)
    yield Check("integral", "chain_rule_rel", err, "<=", 1e-2)


def suite_alpha(cfg: SuiteConfig):
    n, p = cfg.steps, cfg.params
    a1, a2 = p.alpha, min(p.alpha + 0.05, 0.5 * (p.alpha + p.beta))
    z, zeta = _smooth_pair(n)
    w = _fbm_scalar(n, cfg.seed, cfg.hurst)
    worst = 0.0
    for x, y in ((z, zeta), (w, w), (zeta, w)):
        i1 = fraccalc.zahle_integral_scalar(x, y, a1)
        i2 = fraccalc.zahle_integral_scalar(x, y, a2)
        worst = max(worst, abs(i1 - i2) / max(abs(i1), 1e-300))
    yield Check("alpha_independence", "max_rel_difference", worst, "<=", 1e-3)


def suite_additivity(cfg: SuiteConfig):
    n, al = cfg.steps, cfg.params.alpha
    z, zeta = _smooth_pair(n)
    d = fraccalc.additivity_defect(z, zeta, al, 0.0, 0.5, 1.0)
    yield Check("additivity", "smooth_defect", d, "<=", 1e-4)
    one = ScalarPath(0, 1 / n, np.ones(n + 1))
    d = fraccalc.additivity_defect(one, zeta, al, 0.0, 0.25, 1.0)
    yield Check("additivity", "constant_integrand_defect", d, "<=", 1e-10)


def suite_shift(cfg: SuiteConfig):
    n, al = cfg.steps, cfg.params.alpha
    w = fbm.sample_fbm_1d(FbmConfig(cfg.hurst, -1, 1, 2 * n, cfg.seed))
    z = ScalarPath(w.t0, w.dt, np.sin(3 * w.times))
    d = fraccalc.shift_covariance_defect(z, w, 0.25, al, (0.0, 0.75))
    yield Check("shift_covariance", "defect", d, "<=", 1e-10)


def suite_coefficients(cfg: SuiteConfig):
    for prof in PROFILES:
        G = DiagonalNemytskii.power_law(8, profile=prof, offset=0.3, slope=-0.7)
        rep = certify_coefficient_bounds(G, cfg.samples, cfg.seed, raise_on_failure=False)
        yield Check("coefficients", f"violations_{prof}", float(sum(rep.violations)), "<=", 0)


def suite_semigroup(cfg: SuiteConfig):
    op = semigroup.SpectralOperator.dirichlet_laplacian(64)
    ts = np.geomspace(1e-4, 4.0, 200)
    r = semigroup.smoothing_estimate_check(op, cfg.params.beta, ts, decay="none")
    yield Check("semigroup", "smoothing_constant", r.constant, "<=", 1.0 * (1 + 1e-12))
    r = semigroup.hoelder_estimate_check(op, 1.0, 0.0, 0.0, ts)
    yield Check("semigroup", "hoelder_unit_gap_constant", r.constant, "<=", 1.0 * (1 + 1e-12))
    consts = [semigroup.double_difference_check(
        op, cfg.params.beta, 1 - cfg.params.beta, semigroup.random_quadruples(2000, cfg.seed + k)
    ).constant for k in range(4)]
    spread = (max(consts) - min(consts)) / np.mean(consts)
    yield Check("semigroup", "double_difference_constant", float(np.mean(consts)))
    yield Check("semigroup", "double_difference_spread", spread, "<=", 0.1)


KFUN_RHOS = (0.0, 1.0, 10.0, 1e2, 1e3, 1e4)


def suite_kfun(cfg: SuiteConfig):
    from scipy.special import beta as beta_fn
    a, b, d = -0.4, -0.6, 0.5
    K = np.array([kfun(r, a, b, d) for r in KFUN_RHOS])
    for r, k in zip(KFUN_RHOS, K):
        yield Check("kfun", f"K(rho={r:g})", float(k))
    ref = beta_fn(a + 1, b + 1)
    yield Check("kfun", "rho0_rel_error", abs(K[0] - ref) / ref, "<=", 1e-6)
    yield Check("kfun", "max_step_ratio", float(np.max(K[1:] / K[:-1])), "<", 1.0)
    slope = float(np.polyfit(np.log(KFUN_RHOS[3:]), np.log(K[3:]), 1)[0])
    yield Check("kfun", "large_rho_slope_offset", abs(slope + (b + 1)), "<=", 0.1)


def _solver_instance(cfg):
    return instances.scalar_linear(cfg.steps, cfg.seed, hurst=cfg.hurst, params=cfg.params)


def suite_contraction(cfg: SuiteConfig):
    P = _solver_instance(cfg).problem
    cal = cert.calibrate(P, seed=cfg.seed + 1).scaled(cfg.ct_scale)
    yield Check("contraction", "c_T", cal.c_T)
    choice = choose_rho(P, cal.c_T)
    yield Check("contraction", "rho", choice.rho)
    us = cert.random_holder_paths(P, 40, seed=cfg.seed + 2)
    r7 = max(cert.self_map_check(P, us[k], cal, choice.rho).ratio for k in range(20))
    r8 = max(cert.contraction_certify(P, us[2 * k], us[2 * k + 1], cal, choice.rho).ratio
             for k in range(20))
    yield Check("self_map", "max_bound_ratio", r7, "<=", 1.0)
    yield Check("contraction", "max_bound_ratio", r8, "<=", 1.0)
    _, diag = solve_mild(P, calibration=cal)
    d = np.array(diag.distances)
    d = d[d > 1e-13]
    slope = float(np.polyfit(np.arange(d.size), np.log(d), 1)[0]) if d.size > 1 else -np.inf
    yield Check("contraction", "picard_log_distance_slope", slope, "<=", float(np.log(0.9)))


def suite_envelope(cfg: SuiteConfig):
    inst = instances.multimode(cfg.steps, cfg.seed, hurst=cfg.hurst, params=cfg.params)
    P = inst.problem
    u, _ = solve_mild(P, rho=1.0)
    rep = cert.derivative_envelope_check(P, u, P.horizon)
    al, be = cfg.params.alpha, cfg.params.beta
    yield Check("derivative_envelope", "max_ratio", rep.max_ratio)
    yield Check("derivative_envelope", "slope_near_zero_offset", abs(rep.slope_near_zero + al), "<=", 0.1)
    yield Check("derivative_envelope", "slope_near_t", rep.slope_near_t, ">=", -be - 0.1)


def suite_regularity(cfg: SuiteConfig):
    consts = []
    for k in range(3):
        P = instances.rough_initial(min(cfg.steps, 512), cfg.seed + k, hurst=cfg.hurst,
                                    params=cfg.params).problem
        u, _ = solve_mild(P, rho=1.0)
        rep = cert.regularity_report(P, u)
        if not rep.finite:
            consts.append(np.inf)
            continue
        consts.append(rep.fitted_constant)
    c = np.array(consts)
    yield Check("regularity", "fitted_constant_mean", float(np.mean(c)))
    yield Check("regularity", "fitted_constant_spread", float(np.max(np.abs(c / np.mean(c) - 1))), "<=", 0.2)


def suite_cocycle(cfg: SuiteConfig):
    P = _solver_instance(cfg).problem
    yield Check("cocycle", "scalar_defect", cert.cocycle_defect(P, 0.5, 0.5), "<=", 1e-2)
    yield Check("cocycle", "tau_zero_defect", cert.cocycle_defect(P, 1.0, 0.0), "<=", 1e-8)
    yield Check("cocycle", "t_zero_defect", cert.cocycle_defect(P, 0.0, 1.0), "<=", 1e-8)


SUITES = {
    "fbm": suite_fbm,
    "integral": suite_integral,
    "alpha": suite_alpha,
    "additivity": suite_additivity,
    "shift": suite_shift,
    "coefficients": suite_coefficients,
    "semigroup": suite_semigroup,
    "kfun": suite_kfun,
    "contraction": suite_contraction,
    "envelope": suite_envelope,
    "regularity": suite_regularity,
    "cocycle": suite_cocycle,
}


def run_suites(names, cfg: SuiteConfig) -> list:
    rows = []
    for name in names:
        rows.extend(SUITES[name](cfg))
    return rows


# ---------------------------------------------------------------------------
# Refinement studies: rows of (steps, value)
# ---------------------------------------------------------------------------


def study_solver(levels, cfg: SuiteConfig):
    finest = 2 ** max(levels)
    for lv in levels:
        inst = instances.scalar_linear(2**lv, cfg.seed, hurst=cfg.hurst, params=cfg.params,
                                       sample_steps=finest)
        u, _ = solve_mild(inst.problem, rho=1.0)
        err = np.max(np.abs(u.coeffs.T - inst.oracle)) / np.max(np.abs(inst.oracle))
        yield 2**lv, float(err)


def study_cocycle(levels, cfg: SuiteConfig):
    finest = 2 ** max(levels)
    for lv in levels:
        P = instances.multimode(2**lv, cfg.seed, hurst=cfg.hurst, params=cfg.params,
                                sample_steps=finest).problem
        yield 2**lv, cert.cocycle_defect(P, 0.5, 0.5, rho=1.0)


def study_integral(levels, cfg: SuiteConfig):
    finest = 2 ** max(levels)
    w = _fbm_scalar(finest, cfg.seed, cfg.hurst)
    half = 0.5 * w.values[-1] ** 2
    for lv in levels:
        s = finest // 2**lv
        p = ScalarPath(0, w.dt * s, w.values[::s])
        val = fraccalc.zahle_integral_scalar(p, p, cfg.params.alpha)
        yield 2**lv, abs(val - half) / abs(half)


STUDIES = {"solver": study_solver, "cocycle": study_cocycle, "integral": study_integral}


def run_study(name, levels, cfg: SuiteConfig, seeds: int = 1):
    """Rows ``(steps, value)``; with ``seeds > 1`` the value is the mean over
    seeds ``cfg.seed, ..., cfg.seed + seeds - 1``."""
    runs = []
    for k in range(seeds):
        c = SuiteConfig(cfg.steps, cfg.seed + k, cfg.hurst, cfg.params, cfg.ct_scale, cfg.samples)
        runs.append(list(STUDIES[name](levels, c)))
    ns = [n for n, _ in runs[0]]
    vals = np.mean([[v for _, v in r] for r in runs], axis=0)
    return [(n, float(v)) for n, v in zip(ns, vals)]
