"""Two-sided fractional Brownian motion on uniform grids.

Scalar paths come from a circulant (Davies-Harte) embedding of fractional
Gaussian noise; a dense Cholesky sampler serves as the small-grid oracle.
V-valued paths stack independent scalar modes scaled by ``sqrt(q_i)``.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack

from .errors import DomainError, EmbeddingError, NumericalError

__all__ = [
    "ScalarPath",
    "HilbertPath",
    "FbmConfig",
    "TraceWeights",
    "fgn_covariance",
    "fbm_covariance",
    "mode_seed_sequence",
    "sample_fbm_1d",
    "sample_fbm_cholesky",
    "sample_fbm_hilbert",
    "wiener_shift",
    "write_path_csv",
    "read_path_csv",
    "EIG_REL_FLOOR",
    "CHOLESKY_MAX_STEPS",
]

EIG_REL_FLOOR = 1e-10
CHOLESKY_MAX_STEPS = 2048
_GRID_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Path containers
# ---------------------------------------------------------------------------


def _node_index(t0, dt, n, t):
    k = (t - t0) / dt
    kr = round(k)
    if abs(k - kr) > _GRID_RTOL * max(1.0, abs(k)):
        raise DomainError(f"time {t!r} is not a grid node (t0={t0}, dt={dt})")
    if kr < 0 or kr > n:
        raise DomainError(f"time {t!r} lies outside the sampled horizon")
    return int(kr)


class _GridMixin:
    @property
    def n(self) -> int:
        """Number of grid steps (nodes minus one)."""
        return self._data.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n + 1)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * self.n

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; raises ``DomainError`` off-grid."""
        return _node_index(self.t0, self.dt, self.n, t)

    def _check(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise DomainError(f"dt must be positive, got {self.dt}")


@dataclass(eq=False)
class ScalarPath(_GridMixin):
    """Real path on the grid ``t0 + k*dt``, ``k = 0..n``.

    ``base`` is the un-anchored array the values were cut from. Wiener shifts
    re-anchor ``base`` instead of the current values, which keeps repeated
    shifts bitwise consistent.
    """

    t0: float
    dt: float
    values: np.ndarray
    base: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise DomainError("ScalarPath needs a 1-d array with at least 2 nodes")
        self._check()

    @property
    def _data(self):
        return self.values

    def __call__(self, t: float) -> float:
        return float(self.values[self.index_of(t)])


@dataclass(eq=False)
class HilbertPath(_GridMixin):
    """V-valued path: ``coeffs[k, i]`` is the i-th eigen-coefficient at node k."""

    t0: float
    dt: float
    coeffs: np.ndarray
    base: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 2 or c.shape[1] < 1:
            raise DomainError("HilbertPath needs an (n+1, N) array with N >= 1")
        self.coeffs = c
        self._check()

    @property
    def _data(self):
        return self.coeffs

    @property
    def modes(self) -> int:
        return self.coeffs.shape[1]

    def mode(self, i: int) -> ScalarPath:
        return ScalarPath(self.t0, self.dt, self.coeffs[:, i].copy())

    def __call__(self, t: float) -> np.ndarray:
        return self.coeffs[self.index_of(t)].copy()

    @classmethod
    def from_scalar(cls, path: ScalarPath) -> "HilbertPath":
        return cls(path.t0, path.dt, path.values[:, None].copy())


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FbmConfig:
    hurst: float
    t_start: float = 0.0
    t_end: float = 1.0
    steps: int = 1024
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0):
            raise DomainError(f"hurst must lie in (0, 1), got {self.hurst}")
        if not (self.t_start <= 0.0 <= self.t_end) or not self.t_start < self.t_end:
            raise DomainError(
                f"need t_start <= 0 <= t_end and t_start < t_end, got "
                f"[{self.t_start}, {self.t_end}]"
            )
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError(f"steps must be a positive integer, got {self.steps}")
        self.zero_index  # validates that 0 is a node

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    @property
    def zero_index(self) -> int:
        k = -self.t_start / self.dt
        kr = round(k)
        if abs(k - kr) > _GRID_RTOL * max(1.0, k):
            raise DomainError("time 0 is not a grid node; adjust steps or t_start")
        return int(kr)


@dataclass(frozen=True)
class TraceWeights:
    """Mode variances ``q_i`` of the V-valued noise (``tr Q = sum q``)."""

    q: tuple

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or q.size < 1:
            raise DomainError("trace weights need at least one mode")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise DomainError("trace weights must be finite and nonnegative")
        object.__setattr__(self, "q", tuple(float(x) for x in q))

    @classmethod
    def power_law(cls, modes: int, decay: float = 2.0) -> "TraceWeights":
        """``q_i = i**-decay`` for ``i = 1..modes`` (summable for decay > 1)."""
        i = np.arange(1, modes + 1, dtype=float)
        return cls(tuple(i ** (-decay)))

    @property
    def modes(self) -> int:
        return len(self.q)

    @property
    def trace(self) -> float:
        return float(sum(self.q))


# ---------------------------------------------------------------------------
# Covariances
# ---------------------------------------------------------------------------


def _check_hurst(hurst):
    if not (0.0 < hurst < 1.0):
        raise DomainError(f"hurst must lie in (0, 1), got {hurst}")


def fgn_covariance(k, hurst: float):
    """Autocovariance of unit-step fBm increments at (integer) lag ``k``."""
    _check_hurst(hurst)
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    r = 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)
    return float(r) if r.ndim == 0 else r


def fbm_covariance(t, s, hurst: float):
    """``E[B(t) B(s)]`` for two-sided fBm."""
    _check_hurst(hurst)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    h2 = 2.0 * hurst
    c = 0.5 * (np.abs(t) ** h2 + np.abs(s) ** h2 - np.abs(t - s) ** h2)
    return float(c) if c.ndim == 0 else c


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def mode_seed_sequence(master_seed: int, mode: int | None = None) -> np.random.SeedSequence:
    """Seed sequence for the master seed, or for one mode derived from it.

    Mode ``i`` uses ``SeedSequence(master_seed mod 2**64, spawn_key=(i,))``,
    numpy's documented hash for independent child streams.
    """
    entropy = int(master_seed) % (1 << 64)
    if mode is None:
        return np.random.SeedSequence(entropy)
    return np.random.SeedSequence(entropy, spawn_key=(int(mode),))


def _circulant_eigenvalues(steps: int, hurst: float) -> np.ndarray:
    g = fgn_covariance(np.arange(steps + 1), hurst)
    row = np.concatenate([g, g[-2:0:-1]])
    lam = np.fft.fft(row).real
    floor = EIG_REL_FLOOR * lam.max()
    worst = lam.min()
    if worst < -floor:
        raise EmbeddingError(float(worst), float(floor))
    return np.maximum(lam, 0.0)


def _fgn_increments(steps, hurst, dt, seedseq):
    lam = _circulant_eigenvalues(steps, hurst)
    m = lam.size
    rng = np.random.default_rng(seedseq)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    # Real part of F diag(sqrt(lam/m)) z has the circulant covariance.
    x = np.fft.fft(np.sqrt(lam / m) * z)[:steps].real
    return x * dt**hurst


def _anchored(t0, dt, cum, i0):
    return ScalarPath(t0, dt, cum - cum[i0], base=cum)


def sample_fbm_1d(config: FbmConfig, *, seedseq=None) -> ScalarPath:
    """Sample two-sided fBm on the config grid by circulant embedding."""
    ss = mode_seed_sequence(config.seed) if seedseq is None else seedseq
    inc = _fgn_increments(config.steps, config.hurst, config.dt, ss)
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    return _anchored(config.t_start, config.dt, cum, config.zero_index)


@lru_cache(maxsize=8)
def _cholesky_factor(t_start, dt, steps, i0, hurst):
    t = t_start + dt * np.arange(steps + 1)
    tk = t[np.arange(steps + 1) != i0]
    cov = fbm_covariance(tk[:, None], tk[None, :], hurst)
    chol, info = lapack.dpotrf(cov, lower=1, clean=1)
    if info > 0:
        raise NumericalError(f"Cholesky factorization failed at pivot {info - 1}")
    if info < 0:
        raise NumericalError(f"dpotrf rejected argument {-info}")
    chol.setflags(write=False)
    return chol


def sample_fbm_cholesky(config: FbmConfig, *, max_steps: int = CHOLESKY_MAX_STEPS) -> ScalarPath:
    """Exact-covariance sample through a dense Cholesky factor (oracle).

    The factor depends only on the grid and Hurst index and is cached.
    """
    if config.steps > max_steps:
        raise DomainError(f"steps={config.steps} exceeds the Cholesky cap {max_steps}")
    i0 = config.zero_index
    chol = _cholesky_factor(config.t_start, config.dt, config.steps, i0, config.hurst)
    keep = np.arange(config.steps + 1) != i0
    rng = np.random.default_rng(mode_seed_sequence(config.seed))
    values = np.zeros(config.steps + 1)
    values[keep] = chol @ rng.standard_normal(chol.shape[0])
    return ScalarPath(config.t_start, config.dt, values)


def sample_fbm_hilbert(config: FbmConfig, weights: TraceWeights) -> HilbertPath:
    """V-valued fBm: mode i is ``sqrt(q_i)`` times an independent scalar fBm."""
    q = np.asarray(weights.q)
    base = np.empty((config.steps + 1, q.size))
    for i, qi in enumerate(q):
        p = sample_fbm_1d(config, seedseq=mode_seed_sequence(config.seed, i))
        base[:, i] = np.sqrt(qi) * p.base
    i0 = config.zero_index
    return HilbertPath(config.t_start, config.dt, base - base[i0], base=base)


# ---------------------------------------------------------------------------
# Wiener shift
# ---------------------------------------------------------------------------


def wiener_shift(path, tau: float):
    """``theta_tau omega (s) = omega(tau + s) - omega(tau)`` on the relabelled grid.

    The grid is kept; only ``t0`` moves by ``-tau``. Values are recomputed
    from the stored base array, so shifts compose exactly.
    """
    m = path.index_of(tau)
    t0 = path.t0 - tau
    if isinstance(path, ScalarPath):
        base = path.values if path.base is None else path.base
        return ScalarPath(t0, path.dt, base - base[m], base=base)
    if isinstance(path, HilbertPath):
        base = path.coeffs if path.base is None else path.base
        return HilbertPath(t0, path.dt, base - base[m], base=base)
    raise DomainError(f"cannot shift object of type {type(path).__name__}")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _matrix(path):
    if isinstance(path, ScalarPath):
        return path.values[:, None]
    return path.coeffs


def write_path_csv(path, dest, delimiter: str = ",") -> None:
    """Write ``t,mode_0,...`` rows with 17 significant digits."""
    data = _matrix(path)
    header = ["t"] + [f"mode_{i}" for i in range(data.shape[1])]
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(path.times, data):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
    finally:
        if own:
            fh.close()


def read_path_csv(src, delimiter: str | None = None, kind: str = "auto"):
    """Read a path written by :func:`write_path_csv`.

    ``kind`` is ``"scalar"``, ``"hilbert"`` or ``"auto"`` (scalar iff one mode).
    """
    if isinstance(src, (str, os.PathLike)):
        with open(src, newline="") as fh:
            text = fh.read()
    else:
        text = src.read()
    if delimiter is None:
        delimiter = "\t" if "\t" in text.splitlines()[0] else ","
    rows = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    header, body = rows[0], [r for r in rows[1:] if r]
    if not header or header[0] != "t" or len(body) < 2:
        raise DomainError("not a path CSV: expected header 't,mode_0,...' and 2+ rows")
    arr = np.array(body, dtype=float)
    t = arr[:, 0]
    n = t.size - 1
    dt = (t[-1] - t[0]) / n
    data = arr[:, 1:]
    if kind == "scalar" or (kind == "auto" and data.shape[1] == 1):
        return ScalarPath(float(t[0]), dt, data[:, 0])
    return HilbertPath(float(t[0]), dt, data)
