import numpy as np
import pytest

from fracspde.errors import DomainError
from fracspde.fbm import HilbertPath, ScalarPath
from fracspde.holder import (HolderParams, holder_seminorm, modified_norm, norm_report,
                             norms_from_values, weighted_norm, weighted_norms)


def path(f, n=1024, t0=0.0, t1=1.0):
    t = np.linspace(t0, t1, n + 1)
    return ScalarPath(t0, (t1 - t0) / n, f(t))


def test_params_validation():
    HolderParams(0.55, 0.7, 0.4)
    for bad in [(0.5, 0.7, 0.4), (0.7, 0.6, 0.4), (0.55, 0.7, 0.2), (0.55, 0.7, 0.6)]:
        with pytest.raises(DomainError):
            HolderParams(*bad)
    with pytest.raises(DomainError):
        HolderParams(0.55, 0.7, 0.4, rho=-1)
    assert HolderParams(0.55, 0.7, 0.4).with_rho(3).rho == 3.0


def test_seminorm_closed_forms():
    assert holder_seminorm(path(lambda t: 0 * t + 2), 0.6) == 0.0
    assert holder_seminorm(path(lambda t: t), 0.55) == pytest.approx(1.0, abs=1e-12)
    assert holder_seminorm(path(np.sqrt), 0.5) == pytest.approx(1.0, abs=1e-12)


def test_modified_norm_constant():
    assert modified_norm(path(lambda t: 0 * t - 3), 0.55) == pytest.approx(3.0)


def test_modified_norm_of_decaying_mode_two_resolutions():
    vals = [modified_norm(path(lambda t: np.exp(-t), n), 0.55) for n in (1024, 2048)]
    assert vals[0] == pytest.approx(vals[1], rel=1e-3)
    # sup term 1 plus a weighted seminorm bounded by (beta/e)^beta
    assert 1.0 < vals[1] <= 1 + (0.55 / np.e) ** 0.55


def test_modified_norm_power_two_resolutions():
    vals = [modified_norm(path(lambda t: t**0.55, n), 0.55) for n in (1024, 2048)]
    assert vals[0] == pytest.approx(vals[1], rel=1e-2)


def test_weighted_norm_limits():
    p = path(lambda t: np.sin(5 * t))
    prm = HolderParams(0.55, 0.7, 0.4)
    assert weighted_norm(p, prm) == pytest.approx(modified_norm(p, 0.55), rel=1e-15)
    w = [weighted_norm(p, prm.with_rho(r)) for r in (10, 100, 1000)]
    assert w[0] > w[1] > w[2]


def test_weighted_sandwich_and_monotone():
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = np.cumsum(rng.standard_normal(257)) / 16
        p = ScalarPath(0.0, 1 / 256, u)
        m = modified_norm(p, 0.6)
        ws = weighted_norms(u, 1 / 256, 0.6, [0.0, 1.0, 10.0, 100.0])
        assert np.all(np.diff(ws) <= 0)
        assert ws[0] == pytest.approx(m, rel=1e-15)
        for r, w in zip((1.0, 10.0, 100.0), ws[1:]):
            assert np.exp(-r) * m <= w <= m


def test_vector_norm_axioms():
    rng = np.random.default_rng(1)
    for _ in range(10):
        a, b = rng.standard_normal((2, 129, 3)).cumsum(axis=1)
        na, nb, nab = (norms_from_values(x, 1 / 128, 0.6, 2.0) for x in (a, b, a + b))
        slack = 1 + 4 * np.finfo(float).eps
        for f in ("sup_norm", "holder_seminorm", "modified_seminorm", "weighted_norm"):
            assert getattr(nab, f) <= (getattr(na, f) + getattr(nb, f)) * slack
            scaled = getattr(norms_from_values(-2.5 * a, 1 / 128, 0.6, 2.0), f)
            assert scaled == pytest.approx(2.5 * getattr(na, f), rel=4 * np.finfo(float).eps)


def test_window_restriction():
    p = path(lambda t: np.abs(np.sin(7 * t)) ** 0.7)
    assert holder_seminorm(p, 0.6, (0.25, 0.5)) <= holder_seminorm(p, 0.6)


def test_discretization_consistency():
    a, b = (holder_seminorm(path(lambda t: t**0.6, n), 0.55) for n in (1024, 2048))
    assert a == pytest.approx(b, rel=0.02)


def test_dyadic_scan_matches_full_scan_on_extremizers():
    rng = np.random.default_rng(2)
    u = np.cumsum(rng.standard_normal(1025)) / 32
    full = norms_from_values(u, 1 / 1024, 0.6, 1.0)
    dyad = norms_from_values(u, 1 / 1024, 0.6, 1.0, full_scan_limit=64)
    assert dyad.sup_norm == full.sup_norm
    assert dyad.holder_seminorm <= full.holder_seminorm
    assert dyad.holder_seminorm >= 0.5 * full.holder_seminorm
    line = np.linspace(0, 1, 1025)
    assert norms_from_values(line, 1 / 1024, 0.6, full_scan_limit=64).holder_seminorm == \
        pytest.approx(1.0, abs=1e-12)


def test_hilbert_path_uses_euclidean_norm():
    t = np.linspace(0, 1, 65)
    h = HilbertPath(0.0, 1 / 64, np.column_stack([3 * t, 4 * t]))
    assert holder_seminorm(h, 0.6) == pytest.approx(5.0)
    r = norm_report(h, 0.6)
    assert r.sup_norm == pytest.approx(5.0)
    assert r.csv_row().count(",") == 5


def test_empty_window():
    with pytest.raises(DomainError):
        holder_seminorm(path(np.sin), 0.6, (0.5, 0.5))
