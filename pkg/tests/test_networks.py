import jax
import jax.numpy as jnp
import numpy as np
import pytest

from irrpinn import autodiff, networks
from irrpinn.errors import ConfigError
from irrpinn.networks import (
    FourierConfig,
    Network,
    NetworkConfig,
    activation,
    ffe_embed,
    sample_ffe,
)


def test_mlp_parameter_count():
    cfg = NetworkConfig("mlp", depth=2, width=4, activation="tanh", input_dim=1, output_dim=1)
    assert Network(cfg).n_params == (1 * 4 + 4) + (4 * 4 + 4) + (4 * 1 + 1)  # 33


def test_modified_mlp_adds_gate_parameters():
    base = NetworkConfig("mlp", depth=2, width=4, activation="tanh", input_dim=3, output_dim=1)
    gated = NetworkConfig(
        "modified_mlp", depth=2, width=4, activation="tanh", input_dim=3, output_dim=1
    )
    in_eff = 3
    assert Network(gated).n_params == Network(base).n_params + 2 * (in_eff * 4 + 4)


def test_init_deterministic():
    cfg = NetworkConfig("mlp", depth=3, width=8, activation="gelu", input_dim=2, output_dim=2)
    p1 = networks.init(cfg, seed=11)
    p2 = networks.init(cfg, seed=11)
    p3 = networks.init(cfg, seed=12)
    assert np.array_equal(np.asarray(p1), np.asarray(p2))
    assert not np.array_equal(np.asarray(p1), np.asarray(p3))


def test_zero_weight_mlp_outputs_bias():
    cfg = NetworkConfig("mlp", depth=2, width=4, activation="tanh", input_dim=2, output_dim=3)
    net = Network(cfg)
    params = jnp.zeros(net.n_params)
    b_out = np.array([0.5, -1.0, 2.0])
    _, _, start, end = [e for e in net.layout.entries if e[0] == "b_out"][0]
    params = params.at[start:end].set(jnp.asarray(b_out))
    out = net.apply(params, jnp.array([0.3, -0.7]))
    np.testing.assert_allclose(np.asarray(out), b_out)


def test_modified_mlp_gate_degeneracy():
    # with W_u == W_v and b_u == b_v (U == V) the hidden blend collapses:
    # z^(l) = U for every layer, so the output is final_affine(U)
    for depth, width in [(1, 4), (3, 6), (5, 3)]:
        cfg = NetworkConfig(
            "modified_mlp", depth=depth, width=width, activation="tanh", input_dim=2, output_dim=1
        )
        net = Network(cfg)
        params = np.asarray(net.init_params(seed=3)).copy()

        def sl(name):
            for n, shape, a, b in net.layout.entries:
                if n == name:
                    return slice(a, b), shape
            raise KeyError(name)

        su, _ = sl("W_u")
        sv, _ = sl("W_v")
        params[sv] = params[su]
        params_j = jnp.asarray(params)
        x = jnp.array([0.25, -0.5])
        out = net.apply(params_j, x)

        lay = net.layout
        u = jnp.tanh(lay.slice(params_j, "W_u") @ net.embed(x) + lay.slice(params_j, "b_u"))
        expected = lay.slice(params_j, "W_out") @ u + lay.slice(params_j, "b_out")
        np.testing.assert_allclose(np.asarray(out), np.asarray(expected), atol=1e-14)


def test_resnet_zero_weights_skip_connection():
    # depth 1, width == input dim so the skip addition is well defined:
    # z1 = tanh(0) + x = x, output = 0 (zero final layer)
    cfg = NetworkConfig("resnet", depth=1, width=2, activation="tanh", input_dim=2, output_dim=1)
    net = Network(cfg)
    params = jnp.zeros(net.n_params)
    x = jnp.array([0.4, -0.2])
    out = net.apply(params, x)
    np.testing.assert_allclose(np.asarray(out), [0.0])
    # with identity final layer the skip value passes through
    _, _, a, b = [e for e in net.layout.entries if e[0] == "W_out"][0]
    params = params.at[a:b].set(jnp.array([1.0, 0.0]))
    out = net.apply(params, x)
    np.testing.assert_allclose(np.asarray(out), [0.4])


def test_ffe_embed_at_origin():
    cfg = FourierConfig(m_f=8, sigma_x=2.0, sigma_t=1.0, seed=5)
    frozen = sample_ffe(cfg, n_spatial=2)
    emb = ffe_embed(frozen, jnp.zeros(2), jnp.asarray(0.0))
    assert emb.shape == (4 * 8,)
    np.testing.assert_allclose(np.asarray(emb[:8]), 1.0)  # cos half
    np.testing.assert_allclose(np.asarray(emb[8:16]), 0.0)  # sin half
    np.testing.assert_allclose(np.asarray(emb[16:24]), 1.0)
    np.testing.assert_allclose(np.asarray(emb[24:]), 0.0)


def test_ffe_embed_length_and_identity():
    cfg = FourierConfig(m_f=16, sigma_x=1.5, seed=2)
    frozen = sample_ffe(cfg, n_spatial=3)
    x = jnp.asarray(np.random.default_rng(0).normal(size=3))
    emb = ffe_embed(frozen, x)
    assert emb.shape == (2 * 16,)
    cos_half, sin_half = np.asarray(emb[:16]), np.asarray(emb[16:])
    np.testing.assert_allclose(cos_half**2 + sin_half**2, 1.0, atol=1e-14)


def test_ffe_sampling_deterministic():
    cfg = FourierConfig(m_f=4, sigma_x=2.0, seed=9)
    f1 = sample_ffe(cfg, 2)
    f2 = sample_ffe(cfg, 2)
    assert np.array_equal(np.asarray(f1.b_x), np.asarray(f2.b_x))


@pytest.mark.parametrize("kind", ["tanh", "gelu", "swish", "snake"])
def test_activation_second_derivative_matches_fd(kind):
    f = lambda x: activation(kind, x)
    d1 = jax.grad(f)
    d2 = jax.grad(d1)
    h = 1e-5
    for x in np.linspace(-2.5, 2.5, 11):
        fd = (d1(jnp.asarray(x + h)) - d1(jnp.asarray(x - h))) / (2 * h)
        assert abs(float(d2(jnp.asarray(x))) - float(fd)) < 1e-7


def test_snake_at_origin():
    f = lambda x: activation("snake", x)
    assert float(f(jnp.asarray(0.0))) == 0.0
    assert float(jax.grad(f)(jnp.asarray(0.0))) == pytest.approx(1.0)


def test_swish_at_origin():
    f = lambda x: activation("swish", x)
    assert float(f(jnp.asarray(0.0))) == 0.0
    assert float(jax.grad(f)(jnp.asarray(0.0))) == pytest.approx(0.5)


def test_forward_values_match_through_jets():
    cfg = NetworkConfig(
        "modified_mlp",
        depth=2,
        width=6,
        activation="swish",
        input_dim=2,
        output_dim=1,
        ffe=FourierConfig(m_f=4, sigma_x=1.0, sigma_t=0.5, seed=1),
        time_index=1,
    )
    net = Network(cfg)
    params = net.init_params(seed=0)
    pts = np.random.default_rng(1).uniform(-1, 1, size=(7, 2))
    plain = np.asarray(net.apply_batch(params, jnp.asarray(pts)))
    bundle = autodiff.input_derivatives(net.apply, params, pts, order=2)
    np.testing.assert_array_equal(plain, np.asarray(bundle.u))


def test_bounded_output_transform():
    cfg = NetworkConfig(
        "mlp", depth=1, width=4, activation="tanh", input_dim=1, output_dim=1,
        output_transform=(0.0, 1.0),
    )
    net = Network(cfg)
    params = net.init_params(seed=0) * 50.0  # drive the head to saturation
    vals = [float(net.apply(params, jnp.array([x]))[0]) for x in np.linspace(-1, 1, 21)]
    assert all(0.0 <= v <= 1.0 for v in vals)


def test_config_validation():
    with pytest.raises(ConfigError):
        NetworkConfig("mlp", depth=0, width=4, activation="tanh", input_dim=1, output_dim=1)
    with pytest.raises(ConfigError):
        NetworkConfig("mlp", depth=1, width=4, activation="nope", input_dim=1, output_dim=1)
    with pytest.raises(ConfigError):
        NetworkConfig(
            "mlp", depth=1, width=4, activation="tanh", input_dim=2, output_dim=1,
            ffe=FourierConfig(m_f=4, sigma_x=1.0, sigma_t=1.0), time_index=None,
        )


def test_checkpoint_roundtrip(tmp_path):
    cfg = NetworkConfig(
        "resnet", depth=2, width=8, activation="tanh", input_dim=1, output_dim=1,
        ffe=FourierConfig(m_f=4, sigma_x=4.0, seed=3),
    )
    net = Network(cfg)
    params = net.init_params(seed=21)
    path = tmp_path / "net.bin"
    networks.save_checkpoint(path, cfg, params, seed=21)
    cfg2, params2, seed2 = networks.load_checkpoint(path)
    assert cfg2 == cfg
    assert seed2 == 21
    assert np.array_equal(np.asarray(params), np.asarray(params2))
    assert (tmp_path / "net.bin.json").exists()
    x = jnp.array([0.3])
    np.testing.assert_array_equal(
        np.asarray(net.apply(params, x)), np.asarray(Network(cfg2).apply(params2, x))
    )
