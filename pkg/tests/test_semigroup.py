import numpy as np
import pytest

from fracspde.errors import DomainError
from fracspde.semigroup import (SpectralOperator, VdeltaVector, apply_semigroup,
                                double_difference_check, hoelder_estimate_check,
                                random_quadruples, smoothing_estimate_check, vdelta_norm)

OP = SpectralOperator.dirichlet_laplacian(64)
EPS = np.finfo(float).eps


def corpus(seed=0, count=20):
    rng = np.random.default_rng(seed)
    i = np.arange(1, 65)
    return rng.standard_normal((count, 64)) * i ** rng.uniform(-2, 0, (count, 1))


def test_operator_validation():
    with pytest.raises(DomainError):
        SpectralOperator(np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        SpectralOperator(np.array([2.0, 1.0]))
    with pytest.raises(DomainError):
        VdeltaVector(np.ones(3), -0.1)
    assert OP.lambda1 == 1.0 and OP.lambdas[-1] == 64**2


def test_identity_at_zero_and_single_mode():
    v = corpus()[0]
    assert np.array_equal(apply_semigroup(OP, 0.0, v), v)
    e1 = VdeltaVector(np.eye(64)[0], 0.5)
    out = apply_semigroup(OP, 1.0, e1)
    assert isinstance(out, VdeltaVector) and out.delta == 0.5
    assert out.coeffs[0] == pytest.approx(0.36787944117144233, rel=1e-15)


def test_semigroup_law_and_contraction():
    for v in corpus():
        a = apply_semigroup(OP, 0.3, apply_semigroup(OP, 0.7, v))
        b = apply_semigroup(OP, 1.0, v)
        # exp amplifies the rounding of lambda * t by its condition number lambda * t
        assert np.all(np.abs(a - b) <= 4 * (1 + OP.lambdas) * np.spacing(np.abs(b)))
        for t in (0.0, 1e-3, 0.5, 3.0):
            assert np.linalg.norm(apply_semigroup(OP, t, v)) <= np.linalg.norm(v)


def test_negative_time_and_mode_mismatch():
    with pytest.raises(DomainError):
        apply_semigroup(OP, -1e-9, np.ones(64))
    with pytest.raises(DomainError):
        apply_semigroup(OP, 1.0, np.ones(63))


def test_vdelta_norm():
    v = corpus()[1]
    assert vdelta_norm(v, 0.0, OP) == pytest.approx(np.linalg.norm(v), rel=1e-15)
    for i in (0, 6, 63):
        assert vdelta_norm(np.eye(64)[i], 0.3, OP) == pytest.approx(OP.lambdas[i] ** 0.3, rel=1e-14)
    for v in corpus(2):
        assert np.linalg.norm(v) <= OP.lambda1 ** (-0.5) * vdelta_norm(v, 0.5, OP) * (1 + 4 * EPS)


def test_smoothing_values():
    rep = smoothing_estimate_check(OP, 1.0, [1.0], decay="none")
    assert rep.exact_norm[0] == pytest.approx(np.exp(-1), rel=1e-15)
    rep = smoothing_estimate_check(OP, 0.55, [1.0], decay="none")
    assert rep.bound[0] == pytest.approx(0.41527665163061468, rel=1e-15)  # mpmath
    assert rep.passed()


def test_smoothing_envelopes_hold():
    t = np.geomspace(1e-4, 10, 200)
    for gamma in (0.2, 0.55, 1.0, 2.0):
        assert smoothing_estimate_check(OP, gamma, t, decay="none").passed()
        assert smoothing_estimate_check(OP, gamma, t, decay="half").passed(2**gamma)


def test_smoothing_decay_rate():
    t = np.array([1.0, 2.0, 4.0, 8.0])
    rep = smoothing_estimate_check(OP, 0.55, t, decay="none")
    slope = np.polyfit(t, np.log(rep.exact_norm), 1)[0]
    assert abs(slope + OP.lambda1) <= 0.05 * OP.lambda1


def test_operational_smoothing_on_corpus():
    for gamma in (0.3, 0.7):
        for t in (1e-3, 0.1, 1.0):
            env = smoothing_estimate_check(OP, gamma, [t], decay="none").bound[0]
            for v in corpus(3):
                lhs = vdelta_norm(apply_semigroup(OP, t, v), gamma, OP)
                assert lhs <= env * np.linalg.norm(v) * (1 + 4 * EPS)


def test_hoelder_estimate():
    t = np.geomspace(1e-4, 10, 100)
    assert np.all(hoelder_estimate_check(OP, 0.3, 0.3, 0.0, t).exact_norm <= 1.0)
    rep = hoelder_estimate_check(OP, 1.2, 0.2, 0.0, t)
    assert rep.passed(1.0)
    rep = hoelder_estimate_check(SpectralOperator(np.array([1e-6, 1.0])), 1.0, 0.0, 0.0, [0.1])
    assert rep.exact_norm[0] <= 0.1 and rep.exact_norm[0] == pytest.approx(0.1, rel=1e-6)
    ts = np.geomspace(1e-3, 1, 30)
    rep = hoelder_estimate_check(OP, 0.55, 0.0, 0.0, ts)
    slope = np.polyfit(np.log(ts), np.log(rep.exact_norm), 1)[0]
    assert abs(slope - 0.55) <= 0.02


def test_hoelder_domain():
    with pytest.raises(DomainError):
        hoelder_estimate_check(OP, 0.1, 0.2, 0.0, [1.0])
    with pytest.raises(DomainError):
        hoelder_estimate_check(OP, 1.5, 0.2, 0.0, [1.0])
    with pytest.raises(DomainError):
        hoelder_estimate_check(OP, 0.5, -0.1, 0.0, [1.0])


def test_double_difference_degenerate():
    rep = double_difference_check(OP, 0.4, 0.4, [[0.2, 0.2, 0.5, 0.9], [0.1, 0.3, 0.6, 0.6]])
    assert np.all(rep.exact_norm == 0)


def test_double_difference_constant_stable():
    a = double_difference_check(OP, 0.4, 0.4, random_quadruples(1000, 1)).constant
    b = double_difference_check(OP, 0.4, 0.4, random_quadruples(1000, 2)).constant
    assert np.isfinite(a) and np.isfinite(b)
    assert abs(a - b) <= 0.1 * max(a, b)


def test_double_difference_domain():
    with pytest.raises(DomainError):
        double_difference_check(OP, 0.4, 0.4, [[0.3, 0.2, 0.5, 0.9]])
    with pytest.raises(DomainError):
        double_difference_check(OP, 0.6, 0.6, [[0.1, 0.2, 0.5, 0.9]])


def test_report_csv():
    text = smoothing_estimate_check(OP, 1.0, [1.0, 2.0]).to_csv("\t")
    lines = text.splitlines()
    assert lines[0] == "t\texact_norm\tbound\tratio" and len(lines) == 3
