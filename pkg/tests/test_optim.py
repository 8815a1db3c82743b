import jax.numpy as jnp
import numpy as np
import pytest

from irrpinn.trainer import (
    RPROP_STEP_INIT,
    adam_init,
    adam_step,
    rprop_init,
    rprop_step,
)


def test_adam_zero_gradient_keeps_params():
    p = jnp.array([1.0, -2.0])
    state = adam_init(p)
    p2, _ = adam_step(p, jnp.zeros(2), state, lr=1e-3)
    np.testing.assert_array_equal(np.asarray(p2), np.asarray(p))


def test_adam_first_step_hand_evaluated():
    # scalar g=2, lr=1e-3: m_hat = 2, v_hat = 4, so
    # delta = -lr * 2 / (2 + 1e-8) ~ -1e-3
    p = jnp.asarray(0.0)
    state = adam_init(p)
    p2, _ = adam_step(p, jnp.asarray(2.0), state, lr=1e-3)
    expected = -1e-3 * (2.0 / (2.0 + 1e-8))
    assert float(p2) == pytest.approx(expected, rel=1e-12)


def test_adam_monotone_against_gradient_sign():
    p = jnp.asarray(0.0)
    state = adam_init(p)
    g = jnp.asarray(3.0)
    p1, state = adam_step(p, g, state, lr=1e-3)
    p2, state = adam_step(p1, g, state, lr=1e-3)
    assert float(p1) < 0.0
    assert float(p2) < float(p1)


def test_rprop_constant_sign_growth():
    p = jnp.asarray(0.0)
    state = rprop_init(p)
    g = jnp.asarray(1.0)
    sizes = []
    for _ in range(5):
        p, state = rprop_step(p, g, state)
        sizes.append(float(state.step_sizes))
    expected = [min(RPROP_STEP_INIT * 1.2**k, 1.0) for k in range(5)]
    np.testing.assert_allclose(sizes, expected, rtol=1e-12)
    assert float(p) < 0  # moved against positive gradient


def test_rprop_step_clamped_at_max():
    p = jnp.asarray(0.0)
    state = rprop_init(p, initial_step=0.9)
    p, state = rprop_step(p, jnp.asarray(1.0), state)
    p, state = rprop_step(p, jnp.asarray(1.0), state)
    assert float(state.step_sizes) == pytest.approx(1.0)


def test_rprop_zero_gradient_holds():
    p = jnp.asarray(0.5)
    state = rprop_init(p)
    p2, state2 = rprop_step(p, jnp.asarray(0.0), state)
    assert float(p2) == 0.5
    assert float(state2.step_sizes) == RPROP_STEP_INIT


def test_rprop_sign_flip_holds_and_halves():
    p = jnp.asarray(0.0)
    state = rprop_init(p)
    p, state = rprop_step(p, jnp.asarray(1.0), state)
    p_before = float(p)
    size_before = float(state.step_sizes)
    p, state = rprop_step(p, jnp.asarray(-1.0), state)
    assert float(p) == p_before  # reverted-hold: no move on flip
    assert float(state.step_sizes) == pytest.approx(size_before * 0.5)
    # flip is forgotten: next step with the same sign moves normally
    p, state = rprop_step(p, jnp.asarray(-1.0), state)
    assert float(p) > p_before
