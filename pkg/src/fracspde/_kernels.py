"""Shared numerical kernels for Weyl derivatives and the Zähle integral.

Conventions: arrays carry the time axis last, nodes ``0..n`` with spacing
``h``, times measured from the left window end. Integrands and integrators
are reconstructed as piecewise-linear interpolants of their node values.

Inner singular integrals use exact per-cell kernel moments. The outer
``dr`` integral uses a per-cell product rule: on cell ``[r_j, r_{j+1}]``
the left derivative is modelled as

    a_S r^{-alpha} + sum_l kappa_l (l + x)^{1-alpha} + linear remainder,

which captures the T1 singularity and the ``(r - t_i)_+^{1-alpha}`` kinks
produced by the nearest slope changes of the integrand, and the right
derivative as

    sum_l c_l (l + 1 - x)^alpha + linear remainder

for the nearest slope changes of the integrator to the right. Products of
these terms are integrated with Gauss-Jacobi rules whose weights absorb the
endpoint singularities.
"""

from __future__ import annotations

from functools import lru_cache
from math import gamma

import numpy as np
from scipy.signal import fftconvolve, lfilter
from scipy.special import roots_jacobi

DEFAULT_KINKS = 2
_NQ = 24


# ---------------------------------------------------------------------------
# Inner moments
# ---------------------------------------------------------------------------


def _moment_tables(a, h, n):
    """Per-cell kernel moments at lag m = 0..n+1 for exponent ``1 + a``.

    ``M1[m] = int_{(m-1)h}^{mh} x^{-1-a} dx`` (zero for m < 2),
    ``W[m] = (m-1) M1[m] - M0[m]/h`` with ``M0[m] = int x^{-a} dx`` on the same cell.
    """
    m = np.arange(n + 2, dtype=float)
    M1 = np.zeros(n + 2)
    M0 = np.zeros(n + 2)
    mm = m[2:]
    M1[2:] = h ** (-a) * ((mm - 1) ** (-a) - mm ** (-a)) / a
    M0[1:] = h ** (1 - a) * (m[1:] ** (1 - a) - (m[1:] - 1) ** (1 - a)) / (1 - a)
    W = np.zeros(n + 2)
    W[2:] = (mm - 1) * M1[2:] - M0[2:] / h
    return M1, W


def _conv(x, k, length):
    """Causal convolution along the last axis, truncated to ``length`` samples."""
    x, k = np.asarray(x), np.asarray(k)
    if k.ndim < x.ndim:
        k = k.reshape((1,) * (x.ndim - k.ndim) + k.shape)
    elif x.ndim < k.ndim:
        x = x.reshape((1,) * (k.ndim - x.ndim) + x.shape)
    out = fftconvolve(x, k, axes=-1)
    return out[..., :length]


def tail_integral(y, a, h, decay=None):
    """``Q_k = int_0^{t_k} (y_k - y(q)) / (t_k - q)^{1+a} dq`` for all k.

    With ``decay`` (per leading index) the reconstruction at node k uses
    ``exp(-decay (t_k - q))``-weighted node values, i.e. ``Q_k`` of
    ``q -> exp(-decay (t_k - t_q)) y_q``. Returns ``Q`` with ``Q[..., 0] = 0``.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[-1] - 1
    M1, W = _moment_tables(a, h, n)
    if decay is None:
        E = np.ones(n + 2)
    else:
        lam = np.asarray(decay, dtype=float)[..., None]
        E = np.exp(-lam * h * np.arange(n + 2))
    E1 = E[..., 1:2]
    Em1 = np.concatenate([np.ones_like(E[..., :1]), E[..., :-1]], axis=-1)  # E[m-1]
    Ka = Em1 * M1
    Kb = E * W
    Kc = Em1 * W
    S1 = np.cumsum(M1)[: n + 1]
    Q = np.zeros_like(y)
    Q[..., 1:] = (y[..., 1:] - E1 * y[..., :-1]) * h ** (-a) / (1 - a)
    Q += y * S1
    y0 = y.copy()
    y0[..., 0] = 0.0
    # sum_{m=2}^{k} K[m] y_{k-m+1}: convolution index k+1
    Q -= _conv(y0, Ka + Kc, n + 2)[..., 1:]
    Q += _conv(y, Kb[..., : n + 1], n + 1)
    Q[..., 0] = 0.0
    return Q


def left_derivative(z, alpha, h, decay=None):
    """``D^alpha_{0+}`` at nodes 1..n (entry 0 is left as 0)."""
    z = np.asarray(z, dtype=float)
    n = z.shape[-1] - 1
    r = h * np.arange(n + 1)
    Q = tail_integral(z, alpha, h, decay)
    L = np.zeros_like(z)
    L[..., 1:] = (z[..., 1:] / r[1:] ** alpha + alpha * Q[..., 1:]) / gamma(1 - alpha)
    return L


def right_derivative(w, alpha, h):
    """Real bracket of ``D^{1-alpha}_{T2-} w_{T2-}`` at nodes 0..n-1 (entry n is 0)."""
    w = np.asarray(w, dtype=float)
    n = w.shape[-1] - 1
    r = h * np.arange(n + 1)
    Qt = tail_integral(w[..., ::-1], 1 - alpha, h)[..., ::-1]
    R = np.zeros_like(w)
    R[..., :-1] = (
        (w[..., :-1] - w[..., -1:]) / (r[-1] - r[:-1]) ** (1 - alpha)
        + (1 - alpha) * Qt[..., :-1]
    ) / gamma(alpha)
    return R


def right_derivative_matrix(w, alpha, h, out=None):
    """``R[j, k]``: right derivative at node j for the window ending at node k.

    Zero for ``j >= k``. Costs O(n^2) time and memory.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[-1] - 1
    a = 1.0 - alpha
    ell = np.arange(n, dtype=float)
    A1 = np.zeros(n)
    A1[1:] = h ** (-a) * (ell[1:] ** (-a) - (ell[1:] + 1) ** (-a)) / a
    A0 = h ** (1 - a) * ((ell + 1) ** (1 - a) - ell ** (1 - a)) / (1 - a)
    dw = np.diff(w)
    R = np.zeros((n + 1, n + 1)) if out is None else out
    R[:] = 0.0
    # cell contributions c(j, m) for m = j + l stored at R[j, m + 1]
    for l in range(n):
        j = np.arange(n - l)
        m = j + l
        R[j, m + 1] = (w[j] - w[m] + l * dw[m]) * A1[l] - dw[m] * A0[l] / h
    np.cumsum(R, axis=1, out=R)
    scale = (1 - alpha) / gamma(alpha)
    R *= scale
    for l in range(1, n + 1):
        j = np.arange(n + 1 - l)
        R[j, j + l] += (w[j] - w[j + l]) / (l * h) ** a / gamma(alpha)
    R[np.tril_indices(n + 1)] = 0.0
    return R


# ---------------------------------------------------------------------------
# Outer product rule
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _gauss_jacobi01(e1, e2, nq=_NQ):
    """Nodes/weights for ``int_0^1 f(x) x^e1 (1-x)^e2 dx``."""
    s, wt = roots_jacobi(nq, e2, e1)
    return (s + 1.0) / 2.0, wt / 2.0 ** (1.0 + e1 + e2)


def _left_basis(x, alpha, p):
    rows = [1.0 - x, x] + [(l + x) ** (1 - alpha) for l in range(p + 1)]
    return np.array(rows)


def _right_basis(x, alpha, p):
    cols = [1.0 - x, x] + [(l + 1 - x) ** alpha for l in range(p + 1)]
    return np.array(cols)


@lru_cache(maxsize=64)
def _base_block(alpha, p):
    """``int_0^1 row(x) col(x) dx`` for the j-independent rows (unit cell)."""
    nr = nc = p + 3
    Q = np.zeros((nr, nc))
    for i in range(nr):
        e1 = 1.0 - alpha if i == 2 else 0.0
        for q in range(nc):
            e2 = alpha if q == 2 else 0.0
            x, wt = _gauss_jacobi01(e1, e2)
            f = _left_basis(x, alpha, p)[i] * _right_basis(x, alpha, p)[q]
            f = f / (x**e1 * (1 - x) ** e2)
            Q[i, q] = wt @ f
    return Q


def _sing_rows(alpha, p, n):
    """``int_0^1 (j + x)^{-alpha} col(x) dx`` for cells j = 0..n-1."""
    S = np.empty((n, p + 3))
    # j = 0: weight x^{-alpha}
    for q in range(p + 3):
        e2 = alpha if q == 2 else 0.0
        x, wt = _gauss_jacobi01(-alpha, e2)
        f = _right_basis(x, alpha, p)[q] / (1 - x) ** e2
        S[0, q] = wt @ f
    if n > 1:
        j = np.arange(1, n, dtype=float)[:, None]
        for q in range(p + 3):
            e2 = alpha if q == 2 else 0.0
            x, wt = _gauss_jacobi01(0.0, e2)
            f = _right_basis(x, alpha, p)[q] / (1 - x) ** e2
            S[1:, q] = ((j + x) ** (-alpha) * f) @ wt
    return S


def left_kinks(g, h, decay=None):
    """Slope changes of the (decay-weighted) interpolant at nodes 0..n-1.

    Entry 0 is the first slope. With ``decay``, node i carries the slope change
    of ``q -> exp(-decay (t_i - q)) g(q)`` at ``t_i``.
    """
    g = np.asarray(g, dtype=float)
    if decay is None:
        up = dn = 1.0
    else:
        e = np.exp(np.asarray(decay, dtype=float) * h)[..., None]
        up, dn = e, 1.0 / e
    s = np.empty(g.shape[:-1] + (g.shape[-1] - 1,))
    s[..., 0] = (up * g[..., 1:2] - g[..., 0:1])[..., 0] / h
    s[..., 1:] = (up * g[..., 2:] - 2.0 * g[..., 1:-1] + dn * g[..., :-2]) / h
    return s


def right_kinks_interior(w, h):
    """Slope changes ``slope_{m+1} - slope_m`` at nodes m = 1..n-1 (index m)."""
    w = np.asarray(w, dtype=float)
    sl = np.diff(w, axis=-1) / h
    c = np.zeros(w.shape)
    c[..., 1:-1] = np.diff(sl, axis=-1)
    return c, sl


class CellRule:
    """Product rule for ``int L R dr`` on a uniform grid of ``n`` cells."""

    def __init__(self, alpha, h, n, kinks=DEFAULT_KINKS):
        self.alpha = float(alpha)
        self.h = float(h)
        self.n = int(n)
        self.p = int(kinks)
        p = self.p
        self.base = _base_block(self.alpha, p) * h
        self.sing = _sing_rows(self.alpha, p, self.n) * h ** (1 - self.alpha)
        self.kl = h ** (1 - alpha) / gamma(2 - alpha)
        self.kr = h**alpha / gamma(1 + alpha)
        ell = np.arange(p + 1, dtype=float)
        self.l0 = ell ** (1 - alpha)  # left kinks at x = 0
        self.l1 = (ell + 1) ** (1 - alpha)  # left kinks at x = 1
        self.r0 = (ell + 1) ** alpha  # right kinks at x = 0
        self.r1 = ell**alpha  # right kinks at x = 1

    def left_weights(self, PA, PB, aS, kappa):
        """Contract the left model with the quadrature block.

        PA, PB: left derivative at the cell ends, shape (..., n).
        aS: coefficient of ``r^{-alpha}`` per cell, shape (..., n).
        kappa: kink coefficients (already scaled), shape (..., n, p+1).
        Returns ``uA, uB`` (..., n) and ``w`` (..., n, p+1) such that the cell
        integral against a right model with node values bA/bB and kinks kR is
        ``uA bA_full + uB bB_full + sum_l w_l kR_l``.
        """
        n, h, al = self.n, self.h, self.alpha
        rj = h * np.arange(n)
        sing0 = np.zeros(n)
        sing0[1:] = rj[1:] ** (-al)
        sing1 = (rj + h) ** (-al)
        aA = PA - aS * sing0 - kappa @ self.l0
        aA[..., 0] = 0.0
        aB = PB - aS * sing1 - kappa @ self.l1
        B = self.base
        u = (
            aA[..., None] * B[0]
            + aB[..., None] * B[1]
            + np.einsum("...jl,lq->...jq", kappa, B[2:])
            + aS[..., None] * self.sing
        )
        uA, uB, uK = u[..., 0], u[..., 1], u[..., 2:]
        w = uK - uA[..., None] * self.r0 - uB[..., None] * self.r1
        return uA, uB, w


def kink_stack(s, p, scale, decay_steps=None):
    """Arrange per-node kinks into per-cell neighbours ``kappa[..., j, l] = s[j - l]``.

    ``decay_steps`` (per leading index) multiplies neighbour l by
    ``exp(-decay h l)``.
    """
    n = s.shape[-1]
    out = np.zeros(s.shape + (p + 1,))
    for l in range(min(p + 1, n)):
        out[..., l:, l] = s[..., : n - l]
        if decay_steps is not None:
            out[..., l] *= np.exp(-np.asarray(decay_steps)[..., None] * l)
    return out * scale


def zahle_window(z, w, alpha, h, kinks=DEFAULT_KINKS, split_constant=True):
    """Discrete ``int_0^T z dw`` on a single window (time axis last, batched).

    With ``split_constant`` the constant ``z(0)`` is integrated exactly as
    ``z(0) (w(T) - w(0))`` and only ``z - z(0)`` goes through the
    fractional-derivative product; this removes the ``r^{-alpha}`` term.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    n = z.shape[-1] - 1
    head = 0.0
    if split_constant:
        head = z[..., 0] * (w[..., -1] - w[..., 0])
        z = z - z[..., :1]
    rule = CellRule(alpha, h, n, kinks)
    p = rule.p
    L = left_derivative(z, alpha, h)
    R = right_derivative(w, alpha, h)
    aS = np.broadcast_to(z[..., :1] / gamma(1 - alpha), z.shape[:-1] + (n,))
    kappa = kink_stack(left_kinks(z, h), p, rule.kl)
    uA, uB, wt = rule.left_weights(L[..., :-1], L[..., 1:], aS, kappa)
    c, sl = right_kinks_interior(w, h)
    c[..., -1] = -sl[..., -1]
    cpad = np.concatenate([c[..., 1:], np.zeros(c.shape[:-1] + (p,))], axis=-1)
    # kR[j, l] = c[j + 1 + l]
    kR = np.stack([cpad[..., l : l + n] for l in range(p + 1)], axis=-1) * rule.kr
    total = (uA * R[..., :-1]).sum(-1) + (uB * R[..., 1:]).sum(-1)
    total = total + np.einsum("...jl,...jl->...", wt, kR)
    return head - total


# ---------------------------------------------------------------------------
# Convolution integrals int_0^{t_k} exp(-lam (t_k - r)) g(r) dw(r)
# ---------------------------------------------------------------------------


class VolterraIntegrator:
    """All running integrals ``I_k = int_0^{t_k} e^{-lam (t_k - r)} g(r) dw(r)``.

    ``lam`` and ``w`` are per mode (leading axis). The window-dependent right
    derivatives are precomputed once as an O(n^2) matrix per mode, after
    which each application costs one matrix-vector product per mode plus
    convolutions.
    """

    def __init__(self, w, lam, alpha, h, kinks=DEFAULT_KINKS, cache_limit=2**27):
        w = np.atleast_2d(np.asarray(w, dtype=float))
        self.w = w
        self.lam = np.broadcast_to(np.asarray(lam, dtype=float), (w.shape[0],)).copy()
        self.alpha = float(alpha)
        self.h = float(h)
        self.N, n1 = w.shape
        self.n = n1 - 1
        self.rule = CellRule(alpha, h, self.n, kinks)
        n, p = self.n, self.rule.p
        self.E1 = np.exp(-self.lam * h)
        c, sl = right_kinks_interior(w, h)
        self.c_int = c  # index m, valid for 1 <= m <= n-1
        self.c_end = -sl  # c_end[..., k-1] is the end kink of window [0, t_k]
        self.cache = self.N * (n + 1) ** 2 <= cache_limit
        self._M = [self._matrix(i) for i in range(self.N)] if self.cache else None

    def _matrix(self, i):
        n = self.n
        M = right_derivative_matrix(self.w[i], self.alpha, self.h)
        e = np.exp(-self.lam[i] * self.h * np.arange(n + 1))
        for j in range(n):
            M[j, j + 1 :] *= e[1 : n + 1 - j]
        return M

    def apply(self, g):
        """Return ``I`` with shape (N, n+1); ``I[:, 0] = 0``."""
        g = np.atleast_2d(np.asarray(g, dtype=float))
        al, h, n, rule = self.alpha, self.h, self.n, self.rule
        p = rule.p
        lam = self.lam
        # z^(k)(t_m) = E_{k-m} g_m; its constant part E_k g_0 is integrated
        # exactly, leaving E_{k-m} (g_m - E_m g_0).
        decay = np.exp(-lam[:, None] * h * np.arange(n + 1))
        head = g[:, :1] * decay * (self.w - self.w[:, :1])
        g = g - g[:, :1] * decay
        P = left_derivative(g, al, h, decay=lam)
        eh = np.exp(lam * h)[:, None]
        j = np.arange(n)
        aS = g[:, :1] * np.exp(-lam[:, None] * h * j) / gamma(1 - al)
        kappa = kink_stack(left_kinks(g, h, decay=lam), p, rule.kl, decay_steps=lam * h)
        uA, uB, wt = rule.left_weights(P[:, :-1], eh * P[:, 1:], aS, kappa)
        v = np.zeros((self.N, n + 1))
        v[:, :-1] = uA
        v[:, 1:] += self.E1[:, None] * uB
        I = np.empty((self.N, n + 1))
        for i in range(self.N):
            M = self._M[i] if self.cache else self._matrix(i)
            I[i] = v[i] @ M
        # interior right kinks: sum_{j <= k-2-l} E_{k-j} w[j,l] c[j+1+l]
        kr = rule.kr
        for l in range(p + 1):
            y = np.zeros((self.N, n + 1))
            m = j + 1 + l
            ok = m <= n - 1
            y[:, j[ok]] = wt[:, j[ok], l] * self.c_int[:, m[ok]] * kr
            G = _exp_filter(y, self.E1)
            shift = 2 + l
            Ek = np.exp(-lam * h * shift)[:, None]
            I[:, shift:] += Ek * G[:, : n + 1 - shift]
        # end kink of each window: node k, neighbour l of cell k-1-l
        for l in range(p + 1):
            k = np.arange(1 + l, n + 1)
            El = np.exp(-lam * h * (1 + l))[:, None]
            I[:, k] += El * wt[:, k - 1 - l, l] * self.c_end[:, k - 1] * kr
        I = head - I
        I[:, 0] = 0.0
        return I


def _exp_filter(y, E1):
    """``G[m] = sum_{j <= m} E1^{m-j} y[j]`` per row."""
    out = np.empty_like(y)
    for i in range(y.shape[0]):
        out[i] = lfilter([1.0], [1.0, -E1[i]], y[i])
    return out
