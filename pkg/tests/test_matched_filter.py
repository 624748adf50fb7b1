import numpy as np
import pytest

from blockdemix.errors import ConfigError, UnsupportedLinkError
from blockdemix.links import get_link, identity_link
from blockdemix.matched_filter import (
    ToneGrid,
    default_grid,
    estimate_tone,
    estimate_tones,
    estimate_z,
    mf_struct_dht,
    premap_observations,
    surrogate_instance,
)
from blockdemix.model import SignalConfig, synthesize_instance
from blockdemix.operators import BasisPair, gen_factored, gen_subgaussian
from blockdemix.solvers import SolverParams, block, struct_dht


def test_grid_invariants():
    for omega, res in [(3.0, 0.0196), (1.0, 0.3), (2.5, 2.5), (0.7, 0.01)]:
        g = ToneGrid(omega, res)
        f = g.frequencies
        assert f[0] == -omega and f[-1] == omega
        assert 0.0 in f
        np.testing.assert_array_equal(f, -f[::-1])
        assert np.max(np.diff(f)) <= res * (1 + 1e-12)
    with pytest.raises(ConfigError):
        ToneGrid(0.0, 0.1)


def test_default_grid():
    g = default_grid(20.0, radius=1.0)
    assert g.omega_max == 3.0 and g.resolution == pytest.approx(np.pi / 160)


def test_premap():
    y = np.array([0.1, 4.0, 7.0])
    np.testing.assert_array_equal(premap_observations(y, get_link("sin")), y)
    np.testing.assert_allclose(premap_observations(np.mod(y, 2 * np.pi), get_link("sawtooth")),
                               np.sin(y), atol=1e-15)
    with pytest.raises(UnsupportedLinkError):
        premap_observations(y, get_link("sigmoid"))


def test_estimate_tone_examples():
    g = ToneGrid(3.0, 0.05)
    d = np.random.default_rng(0).uniform(-20, 20, 16)
    for z in g.frequencies[::7]:
        assert estimate_tone(np.sin(z * d), d, g) == z
    assert estimate_tone(np.zeros(16), d, g) == 0.0
    with pytest.raises(ConfigError):
        estimate_tone([1.0], [1.0], g)


def test_sign_is_resolved():
    g = ToneGrid(3.0, 0.05)
    d = np.random.default_rng(1).uniform(-20, 20, 8)
    z = g.frequencies[80]
    assert estimate_tone(np.sin(z * d), d, g) == z
    assert estimate_tone(np.sin(-z * d), d, g) == -z


def test_refine_reaches_off_grid_tone():
    g = default_grid(20.0)
    rng = np.random.default_rng(2)
    for _ in range(50):
        d = rng.uniform(-20, 20, 6)
        z = rng.uniform(-2, 2)
        if abs(z) < 0.05:
            continue
        assert abs(estimate_tone(np.sin(z * d), d, g, refine=True) - z) < 1e-6


def _factored_instance(link="sin", n=64, s=8, b=4, k=6, q=32, seed=0):
    bases = BasisPair.from_kinds(n, "identity", "dct-like", seed=1)
    design = gen_factored(k, q, n, seed=seed + 100)
    cfg = SignalConfig(n, s, b, k * q, q=q, k=k)
    return synthesize_instance(cfg, bases, design, get_link(link), seed)


def test_estimate_z_on_grid_is_exact():
    inst = _factored_instance()
    g = ToneGrid(3.0, 0.01)
    design = inst.design
    z = g.frequencies[np.random.default_rng(3).integers(0, 601, design.q)]
    y = np.sin(design.D_diag * z[None, :]).reshape(-1)
    np.testing.assert_array_equal(estimate_z(y, design, g), z)
    with pytest.raises(ConfigError):
        estimate_z(y[:-1], design, g)


def test_estimate_z_single_coordinate():
    g = ToneGrid(3.0, 0.01)
    d = np.random.default_rng(4).uniform(-20, 20, 12)
    y = np.sin(0.37 * d)
    assert estimate_z(y, d[:, None], g)[0] == estimate_tone(y, d, g)


def test_pipeline_factorization():
    inst = _factored_instance(seed=2)
    g = default_grid(20.0)
    params = SolverParams(block(8, 4))
    res = mf_struct_dht(inst.y, inst.design, inst.bases, get_link("sin"), g, params)
    manual = struct_dht(surrogate_instance(res.extras["z_hat"], inst.design, inst.bases, params),
                        inst.bases, identity_link(), params)
    np.testing.assert_array_equal(res.t_hat, manual.t_hat)
    assert res.extras["grid"]["omega_max"] == 3.0
    assert res.extras["peak"].shape == (inst.design.q,)


def test_range_violations_reported():
    inst = _factored_instance(seed=4)
    g = ToneGrid(0.05, 0.01)
    res = mf_struct_dht(inst.y, inst.design, inst.bases, get_link("sin"), g,
                        SolverParams(block(8, 4)), truth=inst)
    z = inst.design.B @ inst.beta
    assert res.extras["range_violations"] == int(np.sum(np.abs(z) > 0.05)) > 0


def test_pipeline_needs_factored_design():
    inst = _factored_instance()
    with pytest.raises(ConfigError):
        mf_struct_dht(inst.y, gen_subgaussian(inst.design.m, 64), inst.bases, get_link("sin"),
                      default_grid(20.0), SolverParams(block(8, 4)))


def test_batched_matches_single():
    g = default_grid(20.0)
    rng = np.random.default_rng(6)
    D = rng.uniform(-20, 20, (10, 8))
    U = np.sin(rng.uniform(-2, 2, 10)[:, None] * D)
    est, _ = estimate_tones(U, D, g)
    assert [estimate_tone(U[i], D[i], g) for i in range(10)] == list(est)
