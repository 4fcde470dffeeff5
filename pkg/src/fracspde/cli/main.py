"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 certification failure,
3 numerical failure (embedding or divergence).
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .. import fbm, fraccalc
from ..errors import CertificationError, DomainError, NumericalError
from ..fbm import FbmConfig, HilbertPath, ScalarPath, TraceWeights
from ..holder import HolderParams
from ..solver import certify as cert
from ..solver import instances
from ..solver.picard import solve_mild
from ..solver.problem import semigroup_orbit
from . import suites

EXIT_OK, EXIT_INVALID, EXIT_CERT, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "common": {"format": "csv", "seed": 0, "out": None, "quiet": False},
    "fbm": {"hurst": 0.75, "steps": 1024, "horizon": 1.0, "t_start": 0.0, "modes": 1,
            "trace_decay": 2.0, "method": "davies-harte"},
    "integrate": {"path": None, "mode": 0, "hurst": 0.75, "steps": 1024, "horizon": 1.0,
                  "integrand": "one", "alpha": 0.4, "check": "none", "tau": 0.25},
    "solve": {"problem": "linear", "steps": 1024, "hurst": 0.75, "horizon": 1.0, "lam": 1.0,
              "sigma": 0.5, "u0": 1.0, "modes": 8, "profile": "tanh", "mu_scale": 0.5,
              "mu_decay": 1.0, "beta": 0.55, "beta_prime": 0.7, "alpha": 0.4, "tol": 1e-9,
              "rho": None, "ct": None, "init": "semigroup", "oracle": None, "diagnostics": None},
    "certify": {"only": ",".join(suites.SUITES), "ct_scale": 1.0, "steps": 1024, "hurst": 0.75,
                "samples": 10_000, "beta": 0.55, "beta_prime": 0.7, "alpha": 0.4},
    "converge": {"study": "solver", "levels": "9,10,11,12", "seeds": 1, "hurst": 0.75,
                 "beta": 0.55, "beta_prime": 0.7, "alpha": 0.4},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise DomainError(f"not a boolean: {text!r}")


def _common(p):
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="flat 'key = value' file; flags override it")
    g.add_argument("--format", choices=("csv", "tsv"))
    g.add_argument("--seed", type=int)
    g.add_argument("-o", "--out", help="output file (default: stdout)")
    g.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="fracspde", description=__doc__.splitlines()[0],
                  argument_default=argparse.SUPPRESS)
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fbm", help="sample a fractional Brownian path", argument_default=argparse.SUPPRESS)
    p.add_argument("--hurst", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--t-start", type=float)
    p.add_argument("--modes", type=int, help="1 gives a scalar path, more a V-valued path")
    p.add_argument("--trace-decay", type=float, help="mode variances q_i = i^-decay")
    p.add_argument("--method", choices=("davies-harte", "cholesky"))
    _common(p)

    p = sub.add_parser("integrate", help="pathwise integral of an integrand against a path",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--path", help="path CSV (default: sample an fBm path)")
    p.add_argument("--mode", type=int, help="mode column of a V-valued path")
    p.add_argument("--hurst", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--integrand", choices=("one", "path", "sin", "square"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--check", choices=("none", "additivity", "shift"))
    p.add_argument("--tau", type=float)
    _common(p)

    p = sub.add_parser("solve", help="solve a mild problem by Picard iteration",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--problem", choices=("linear", "additive", "multimode", "rough"))
    p.add_argument("--steps", type=int)
    p.add_argument("--hurst", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--lam", type=float, help="eigenvalue of the scalar problems")
    p.add_argument("--sigma", type=float, help="noise amplitude of the scalar problems")
    p.add_argument("--u0", type=float, help="initial value of the scalar problems")
    p.add_argument("--modes", type=int)
    p.add_argument("--profile", choices=("identity", "tanh", "constant", "affine"))
    p.add_argument("--mu-scale", type=float)
    p.add_argument("--mu-decay", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-prime", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--rho", type=float, help="fixed weight (default: chosen from c_T)")
    p.add_argument("--ct", type=float, help="c_T (default: calibrated)")
    p.add_argument("--init", choices=("semigroup", "constant"))
    p.add_argument("--oracle", choices=("exp", "semigroup", "voc"))
    p.add_argument("--diagnostics", help="write a key = value diagnostics file")
    _common(p)

    p = sub.add_parser("certify", help="run certification suites", argument_default=argparse.SUPPRESS)
    p.add_argument("--only", help="comma-separated subset of: " + ",".join(suites.SUITES))
    p.add_argument("--ct-scale", type=float, help="multiply calibrated constants (forced-failure runs)")
    p.add_argument("--steps", type=int)
    p.add_argument("--hurst", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-prime", type=float)
    p.add_argument("--alpha", type=float)
    _common(p)

    p = sub.add_parser("converge", help="refinement studies", argument_default=argparse.SUPPRESS)
    p.add_argument("--study", choices=tuple(suites.STUDIES))
    p.add_argument("--levels", help="comma-separated log2 step counts")
    p.add_argument("--seeds", type=int, help="average the study over this many seeds")
    p.add_argument("--hurst", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-prime", type=float)
    p.add_argument("--alpha", type=float)
    _common(p)
    return top


# ---------------------------------------------------------------------------
# Config merging
# ---------------------------------------------------------------------------


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _coerce(parser, command, key, text):
    sub = parser._subparsers._group_actions[0].choices[command]
    for act in sub._actions:
        if act.dest == key:
            if isinstance(act, argparse._StoreTrueAction):
                return _bool(text)
            if act.choices is not None and text not in act.choices:
                raise DomainError(f"config {key} = {text!r} is not one of {list(act.choices)}")
            return act.type(text) if act.type is not None else text
    raise DomainError(f"unknown config key {key!r} for command {command!r}")


def resolve(parser, argv) -> argparse.Namespace:
    """Flags override the config file, which overrides built-in defaults."""
    args = parser.parse_args(argv)
    cmd = args.command
    merged = dict(DEFAULTS["common"], **DEFAULTS[cmd])
    if getattr(args, "config", None):
        for k, v in read_config(args.config).items():
            merged[k] = _coerce(parser, cmd, k, v)
    merged.update({k: v for k, v in vars(args).items() if k != "config"})
    return argparse.Namespace(**merged)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


class _Output:
    def __init__(self, opts):
        self.delimiter = "\t" if opts.format == "tsv" else ","
        self.path = opts.out
        self.quiet = opts.quiet

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        self.writer = csv.writer(self.fh, delimiter=self.delimiter, lineterminator="\n")
        return self

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()
        else:
            self.fh.flush()

    def rows(self, header, rows):
        self.writer.writerow(header)
        self.writer.writerows(rows)

    def note(self, text):
        if not self.quiet:
            print(text, file=sys.stderr)


def _g(x):
    return f"{x:.17g}"


def _params(o) -> HolderParams:
    return HolderParams(o.beta, o.beta_prime, o.alpha)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_fbm(o) -> int:
    cfg = FbmConfig(o.hurst, o.t_start, o.t_start + o.horizon, o.steps, o.seed)
    if o.modes < 1:
        raise DomainError("modes must be at least 1")
    if o.modes == 1:
        sampler = fbm.sample_fbm_cholesky if o.method == "cholesky" else fbm.sample_fbm_1d
        path = sampler(cfg)
    else:
        if o.method == "cholesky":
            raise DomainError("the Cholesky sampler is scalar only")
        path = fbm.sample_fbm_hilbert(cfg, TraceWeights.power_law(o.modes, o.trace_decay))
    with _Output(o) as out:
        fbm.write_path_csv(path, out.fh, out.delimiter)
    return EXIT_OK


def _integration_path(o) -> ScalarPath:
    if o.path:
        p = fbm.read_path_csv(o.path)
        if isinstance(p, HilbertPath):
            if not 0 <= o.mode < p.modes:
                raise DomainError(f"mode {o.mode} out of range for {p.modes} modes")
            p = p.mode(o.mode)
        return p
    return fbm.sample_fbm_1d(FbmConfig(o.hurst, 0.0, o.horizon, o.steps, o.seed))


def _integrand(kind, w: ScalarPath) -> ScalarPath:
    v = {"one": lambda: np.ones(w.n + 1), "path": lambda: w.values.copy(),
         "sin": lambda: np.sin(w.times), "square": lambda: w.values**2}[kind]()
    return ScalarPath(w.t0, w.dt, v)


def cmd_integrate(o) -> int:
    w = _integration_path(o)
    z = _integrand(o.integrand, w)
    t1, t2 = w.t0, w.t_end
    if o.check == "none":
        val = fraccalc.zahle_integral_scalar(z, w, o.alpha)
        rs = fraccalc.riemann_stieltjes_oracle(z, w)
        with _Output(o) as out:
            out.rows(["integral", "riemann_stieltjes"], [[_g(val), _g(rs)]])
        return EXIT_OK
    if o.check == "additivity":
        mid = w.t0 + w.dt * (w.n // 2)
        sm = ScalarPath(w.t0, w.dt, np.sin(w.times))
        cs = ScalarPath(w.t0, w.dt, np.cos(w.times))
        one = _integrand("one", w)
        cases = [("smooth", sm, cs, 1e-4), ("constant", one, w, 1e-10), ("input", z, w, None)]
        rows, failed = [], False
        for name, a, b, lim in cases:
            d = fraccalc.additivity_defect(a, b, o.alpha, t1, mid, t2)
            status = "INFO" if lim is None else ("PASS" if d <= lim else "FAIL")
            failed |= status == "FAIL"
            rows.append([name, _g(t1), _g(mid), _g(t2), _g(d), "" if lim is None else _g(lim), status])
        with _Output(o) as out:
            out.rows(["case", "t1", "t2", "t3", "defect", "limit", "status"], rows)
        return EXIT_CERT if failed else EXIT_OK
    d = fraccalc.shift_covariance_defect(z, w, o.tau, o.alpha, (t1 + o.tau, t2))
    status = "PASS" if d <= 1e-10 else "FAIL"
    with _Output(o) as out:
        out.rows(["tau", "defect", "limit", "status"], [[_g(o.tau), _g(d), _g(1e-10), status]])
    return EXIT_OK if status == "PASS" else EXIT_CERT


def _instance(o) -> instances.Instance:
    params = _params(o)
    common = dict(hurst=o.hurst, params=params, horizon=o.horizon)
    if o.problem == "linear":
        return instances.scalar_linear(o.steps, o.seed, o.lam, o.sigma, o.u0, **common)
    if o.problem == "additive":
        return instances.additive_noise(o.steps, o.seed, o.lam, o.sigma, o.u0, **common)
    kw = dict(modes=o.modes, profile=o.profile, mu_scale=o.mu_scale, mu_decay=o.mu_decay, **common)
    if o.problem == "multimode":
        return instances.multimode(o.steps, o.seed, **kw)
    return instances.rough_initial(o.steps, o.seed, **kw)


def cmd_solve(o) -> int:
    inst = _instance(o)
    P = inst.problem
    if o.oracle in ("exp", "voc"):
        want = "linear" if o.oracle == "exp" else "additive"
        if o.problem != want:
            raise DomainError(f"--oracle {o.oracle} needs --problem {want}")
    c_T = o.ct
    rho = o.rho
    if rho is None and c_T is None:
        c_T = cert.calibrate(P, seed=o.seed + 1).c_T
        if c_T == 0:  # vanishing noise coefficient: every rho contracts
            rho = 1.0
    u, diag = solve_mild(P, c_T, rho=rho, tol=o.tol, init=o.init)
    vals = u.coeffs
    header = ["t"] + [f"mode_{i}" for i in range(P.modes)]
    cols = [P.times[:, None], vals]
    if o.oracle is not None:
        ref = (semigroup_orbit(P) if o.oracle == "semigroup" else inst.oracle).T
        err = np.max(np.abs(vals - ref), axis=1) / max(np.max(np.abs(ref)), 1e-300)
        header += [f"oracle_{i}" for i in range(P.modes)] + ["rel_error"]
        cols += [ref, err[:, None]]
    table = np.hstack(cols)
    with _Output(o) as out:
        out.rows(header, ([_g(x) for x in row] for row in table))
        out.note(f"rho = {diag.rho:g}, iterations = {diag.iterations}, "
                 f"max contraction ratio = {max(diag.contraction_ratios, default=0.0):.3g}")
    if o.diagnostics:
        with open(o.diagnostics, "w") as fh:
            fh.write(diag.as_text())
    return EXIT_OK


def cmd_certify(o) -> int:
    names = [s.strip() for s in o.only.split(",") if s.strip()]
    bad = [s for s in names if s not in suites.SUITES]
    if bad or not names:
        raise DomainError(f"unknown suites {bad}; choose from {list(suites.SUITES)}")
    if not o.ct_scale > 0:
        raise DomainError("ct-scale must be positive")
    cfg = suites.SuiteConfig(o.steps, o.seed, o.hurst, _params(o), o.ct_scale, o.samples)
    FbmConfig(o.hurst, 0.0, 1.0, o.steps, o.seed)  # validate before running anything
    rows = suites.run_suites(names, cfg)
    with _Output(o) as out:
        out.rows(suites.HEADER, (r.row() for r in rows))
        nfail = sum(r.status == "FAIL" for r in rows)
        out.note(f"{len(rows)} rows, {nfail} failed")
    return EXIT_CERT if nfail else EXIT_OK


def cmd_converge(o) -> int:
    try:
        levels = [int(x) for x in o.levels.split(",")]
    except ValueError as exc:
        raise DomainError(f"bad --levels {o.levels!r}") from exc
    if len(levels) < 2 or any(lv < 4 or lv > 16 for lv in levels):
        raise DomainError("need at least two levels in [4, 16]")
    levels = sorted(set(levels))
    cfg = suites.SuiteConfig(seed=o.seed, hurst=o.hurst, params=_params(o))
    FbmConfig(o.hurst, 0.0, 1.0, 2 ** levels[-1], o.seed)
    if o.seeds < 1:
        raise DomainError("seeds must be at least 1")
    res = suites.run_study(o.study, levels, cfg, o.seeds)
    ns = np.array([n for n, _ in res], dtype=float)
    ev = np.array([e for _, e in res])
    local = [""] + [_g(np.log(ev[i - 1] / ev[i]) / np.log(ns[i] / ns[i - 1])) for i in range(1, len(ev))]
    with _Output(o) as out:
        out.rows(["steps", "value", "local_order"],
                 ([str(int(n)), _g(e), lo] for n, e, lo in zip(ns, ev, local)))
        monotone = bool(np.all(np.diff(ev) < 0))
        order = suites.fitted_order(ns, ev) if np.all(ev > 0) else float("nan")
        out.note(f"fitted_order = {order:.4g}, monotone_decreasing = {monotone}")
    return EXIT_OK


COMMANDS = {"fbm": cmd_fbm, "integrate": cmd_integrate, "solve": cmd_solve,
            "certify": cmd_certify, "converge": cmd_converge}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            opts = resolve(parser, argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return exc.code if isinstance(exc.code, int) else EXIT_INVALID
        return COMMANDS[opts.command](opts)
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
