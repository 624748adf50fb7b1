import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockdemix.errors import ConfigError, DomainError
from blockdemix.links import get_link
from blockdemix.model import (
    SignalConfig,
    StackedCoefficients,
    block_support_of,
    instance_from_json,
    instance_to_json,
    make_block_sparse,
    normalized_error,
    synthesize_instance,
)
from blockdemix.operators import BasisPair, dense_design, gen_factored, gen_subgaussian

from conftest import small_instance


def test_signal_config_validation():
    SignalConfig(64, 8, 4, 32)
    with pytest.raises(ConfigError):
        SignalConfig(64, 6, 4, 32)
    with pytest.raises(ConfigError):
        SignalConfig(8, 16, 2, 4)
    with pytest.raises(ConfigError):
        SignalConfig(64, 8, 4, 30, q=8, k=4)
    with pytest.raises(ConfigError):
        SignalConfig(64, 8, 4, 32, noise_sigma=-1)
    assert SignalConfig(64, 8, 4, 32, q=8, k=4).n_blocks == 2


def test_block_sparse_examples():
    v = make_block_sparse(8, 2, 2, seed=1)
    assert len(v.block_support) == 1 and np.count_nonzero(v.values) == 2
    assert np.linalg.norm(v.values) == pytest.approx(1.0)

    dense = make_block_sparse(8, 8, 2, seed=1)
    assert dense.block_support == (0, 1, 2, 3)

    big = make_block_sparse(2**16, 656, 16, seed=3)
    assert len(big.block_support) == 41 and np.count_nonzero(big.values) == 656
    big.validate(656)


def test_block_sparse_errors():
    with pytest.raises(ConfigError):
        make_block_sparse(10, 4, 3)
    with pytest.raises(ConfigError):
        make_block_sparse(8, 10, 2)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(16, 4, 2), (32, 8, 4), (64, 16, 16), (12, 6, 3)]),
       st.integers(0, 2**32))
def test_block_sparse_properties(dims, seed):
    n, s, b = dims
    v = make_block_sparse(n, s, b, seed)
    assert block_support_of(v.values, b) == v.block_support
    assert len(v.block_support) == s // b
    assert np.linalg.norm(v.values) == pytest.approx(1.0)


def test_synthesize_noiseless_and_identity_composition():
    n = 16
    bases = BasisPair.from_kinds(n, "identity", "identity", seed=0)
    design = dense_design(np.eye(n))
    inst = synthesize_instance(SignalConfig(n, 4, 2, n), bases, design, get_link("identity"), 5)
    assert np.all(inst.e == 0)
    np.testing.assert_array_equal(inst.y, inst.theta_true.theta1 + inst.theta_true.theta2)


def test_sigmoid_observations_in_range():
    inst = small_instance(n=32, m=24, s=4, b=2, link="sigmoid")
    assert np.all(np.abs(inst.y) < 1)


def test_synthesize_dimension_mismatch():
    bases = BasisPair.from_kinds(32, seed=0)
    with pytest.raises(ConfigError):
        synthesize_instance(SignalConfig(32, 4, 2, 20), bases, gen_subgaussian(24, 32),
                            get_link("identity"))
    with pytest.raises(ConfigError):
        synthesize_instance(SignalConfig(64, 4, 2, 24), bases, gen_subgaussian(24, 64),
                            get_link("identity"))


def test_noise_is_seeded():
    a = small_instance(noise=0.1, seed=3)
    b = small_instance(noise=0.1, seed=3)
    np.testing.assert_array_equal(a.y, b.y)
    assert np.std(a.e) > 0


def test_normalized_error_examples():
    v = np.array([3.0, -1.0, 2.0])
    assert normalized_error(v, v) == 0.0
    assert normalized_error(np.zeros(3), v) == 1.0
    assert normalized_error([1.0, 1.0], [1.0, 0.0]) == 1.0
    with pytest.raises(DomainError):
        normalized_error(v, np.zeros(3))


def test_stacked_halves():
    t = StackedCoefficients.from_halves([1.0, 2.0], [3.0, 4.0])
    np.testing.assert_array_equal(t.theta1, [1, 2])
    np.testing.assert_array_equal(t.theta2, [3, 4])


@pytest.mark.parametrize("link", ["identity", "sigmoid"])
def test_json_round_trip_dense(link):
    inst = small_instance(link=link, noise=0.05, seed=9)
    back = instance_from_json(instance_to_json(inst))
    np.testing.assert_array_equal(back.y, inst.y)
    np.testing.assert_array_equal(back.beta, inst.beta)
    np.testing.assert_array_equal(back.theta_true.t, inst.theta_true.t)
    np.testing.assert_array_equal(back.design.X, inst.design.X)
    v = np.random.default_rng(0).standard_normal(2 * inst.config.n)
    np.testing.assert_allclose(back.bases.synth(v), inst.bases.synth(v), rtol=0, atol=1e-15)
    assert back.link_name == link and back.config == inst.config


def test_json_round_trip_factored():
    n, k, q = 64, 4, 16
    bases = BasisPair.from_kinds(n, "identity", "random-orthonormal", seed=2)
    design = gen_factored(k, q, n, seed=4)
    cfg = SignalConfig(n, 8, 4, k * q, q=q, k=k)
    inst = synthesize_instance(cfg, bases, design, get_link("sin"), 1)
    text = instance_to_json(inst)
    assert "X" not in json.loads(text)
    back = instance_from_json(text)
    np.testing.assert_array_equal(back.design.D_diag, design.D_diag)
    np.testing.assert_array_equal(back.design.B, design.B)
    np.testing.assert_array_equal(back.bases.Psi, bases.Psi)
    np.testing.assert_array_equal(back.y, inst.y)
