import math

import numpy as np
import pytest

from blockdemix.analysis import (
    analyze_report,
    empirical_rate,
    estimate_srsc_srss,
    restricted_hessian,
    step_size_window,
    theoretical_rate,
)
from blockdemix.errors import ConfigError, DomainError, NumericalError
from blockdemix.links import get_link
from blockdemix.model import SignalConfig, synthesize_instance
from blockdemix.operators import BasisPair, dense_design

from conftest import small_instance


def test_step_window_examples():
    assert step_size_window(1.0, 1.0) == (0.5, 1.5, True)
    assert step_size_window(1.0, 1.2)[2] is False
    assert step_size_window(1.0, 2 / math.sqrt(3))[2] is True
    with pytest.raises(NumericalError):
        step_size_window(0.0, 1.0)


def test_rate_examples():
    assert theoretical_rate(1.0, 1.0, 1.0) == 0.0
    assert theoretical_rate(0.6, 1.0, 1.0) == pytest.approx(0.8, abs=1e-15)
    assert theoretical_rate(0.5, 1.0, 1.0) == 1.0
    with pytest.raises(DomainError, match="radicand"):
        theoretical_rate(1.0, 2.0, 1.0)


def test_rate_minimized_at_m_over_M_squared():
    m, M = 0.8, 1.1
    etas = np.linspace(0.01, 1.5, 20001)
    rates = [theoretical_rate(e, m, M) for e in etas]
    assert etas[int(np.argmin(rates))] == pytest.approx(m / M**2, abs=1e-4)


def test_empirical_rate_examples():
    assert empirical_rate(0.5 ** np.arange(30)) == pytest.approx(0.5, abs=1e-10)
    assert empirical_rate(np.full(10, 3.0)) == pytest.approx(1.0, abs=1e-12)
    trace = np.concatenate([0.5 ** np.arange(10), [0.0, 0.0]])
    assert empirical_rate(trace) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(DomainError):
        empirical_rate([1.0, 0.5])


def test_identity_hessian_is_gram():
    inst = small_instance(link="identity", seed=1)
    xi = np.array([0, 1, 2, 70, 71])
    A = inst.design.X @ inst.bases.Gamma[:, xi]
    rng = np.random.default_rng(0)
    for _ in range(3):
        H = restricted_hessian(rng.standard_normal(128), xi, inst, inst.bases, get_link("identity"))
        np.testing.assert_allclose(H, A.T @ A / 48, atol=1e-14)


def test_degenerate_pair_hessian():
    n = 8
    bases = BasisPair.from_kinds(n, "identity", "identity")
    inst = synthesize_instance(SignalConfig(n, 2, 1, n), bases, dense_design(np.eye(n)),
                               get_link("identity"))
    H = restricted_hessian(np.zeros(2 * n), [3, n + 3], inst, bases, get_link("identity"))
    # the 1/m normalization scales the 2x2 all-ones Gram matrix
    np.testing.assert_allclose(H, np.ones((2, 2)) / n)
    np.testing.assert_allclose(np.linalg.eigvalsh(H * n), [0.0, 2.0], atol=1e-15)


def test_hessian_psd_and_interlacing():
    inst = small_instance(link="sigmoid", seed=3)
    rng = np.random.default_rng(4)
    for _ in range(10):
        xi = rng.choice(128, size=12, replace=False)
        sub = xi[:6]
        t = rng.standard_normal(128)
        H = restricted_hessian(t, xi, inst, inst.bases, get_link("sigmoid"))
        h = restricted_hessian(t, sub, inst, inst.bases, get_link("sigmoid"))
        ev, es = np.linalg.eigvalsh(H), np.linalg.eigvalsh(h)
        assert ev[0] >= -1e-10
        assert ev[0] - 1e-12 <= es[0] and es[-1] <= ev[-1] + 1e-12


def test_hessian_support_checked():
    inst = small_instance()
    with pytest.raises(ConfigError):
        restricted_hessian(np.zeros(128), [128], inst, inst.bases, get_link("sigmoid"))


def test_spectral_estimate_well_conditioned():
    n = 64
    bases = BasisPair.from_kinds(n, "identity", "random-orthonormal", seed=0)
    Q = np.linalg.qr(np.random.default_rng(1).standard_normal((4096, n)))[0]
    # columns orthonormal, rescaled so (1/m) X^T X = I
    X = dense_design(Q * np.sqrt(4096))
    inst = synthesize_instance(SignalConfig(n, 2, 1, 4096), bases, X, get_link("identity"))
    est = estimate_srsc_srss(inst, bases, get_link("identity"), level=4, trials=20, seed=0)
    assert 0.5 < est.m_hat <= 1 <= est.M_hat < 1.5
    again = estimate_srsc_srss(inst, bases, get_link("identity"), level=4, trials=20, seed=0)
    assert again == est


def test_analyze_report_fields():
    inst = small_instance(link="sigmoid", seed=2)
    rep = analyze_report(inst, inst.bases, get_link("sigmoid"), level_factor=2, trials=3)
    assert {"level", "m_hat", "M_hat", "window", "condition_ok",
            "rho_at_default_step"} <= set(rep)
    assert 0 <= rep["m_hat"] <= rep["M_hat"]
