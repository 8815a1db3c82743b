import jax
import jax.numpy as jnp
import numpy as np
import pytest

from irrpinn import autodiff
from irrpinn.errors import InvalidStep, NonFiniteGradient, NonFiniteValue, UnsupportedOp
from irrpinn.networks import Network, NetworkConfig

from conftest import fd_input_derivs, fd_loss_gradient


def test_square_polynomial_identity():
    # net(x) = x^2 at x = 3 -> (9, 6, 2)
    f = lambda params, x: jnp.array([x[0] ** 2])
    b = autodiff.evaluate_with_input_derivatives(f, None, np.array([[3.0]]))
    assert float(b.u[0, 0]) == pytest.approx(9.0)
    assert float(b.du[0, 0, 0]) == pytest.approx(6.0)
    assert float(b.d2u[0, 0, 0]) == pytest.approx(2.0)


def test_sin_times_t_analytic():
    # net(x, t) = sin(x) * t at (0, 2)
    f = lambda params, x: jnp.array([jnp.sin(x[0]) * x[1]])
    b = autodiff.evaluate_with_input_derivatives(f, None, np.array([[0.0, 2.0]]))
    assert float(b.u[0, 0]) == pytest.approx(0.0)
    assert float(b.du[0, 0, 0]) == pytest.approx(2.0)  # du/dx = cos(0)*t
    assert float(b.du[0, 0, 1]) == pytest.approx(0.0)  # du/dt = sin(0)
    assert float(b.d2u[0, 0, 0]) == pytest.approx(0.0)  # -sin(0)*t


def test_mlp_derivatives_match_finite_differences(small_tanh_net):
    net, params = small_tanh_net
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(10, 2))
    b = autodiff.evaluate_with_input_derivatives(net.apply, params, pts)
    u_fd, du_fd, d2u_fd = fd_input_derivs(net.apply, params, pts)
    np.testing.assert_allclose(np.asarray(b.u), u_fd, rtol=0, atol=1e-12)
    # norm-relative: the FD oracle itself carries O(eps/h^2) ~ 1e-8 noise,
    # which swamps pointwise ratios at near-zero entries
    rel_du = np.max(np.abs(np.asarray(b.du) - du_fd)) / np.max(np.abs(du_fd))
    rel_d2u = np.max(np.abs(np.asarray(b.d2u) - d2u_fd)) / np.max(np.abs(d2u_fd))
    assert rel_du < 1e-6
    assert rel_d2u < 1e-6


def test_linearity_of_derivatives(small_tanh_net):
    net, params = small_tanh_net
    pts = np.random.default_rng(1).uniform(-1, 1, size=(5, 2))
    f = net.apply
    g = lambda p, x: jnp.sin(x[:1] + x[1:])
    a, c = 2.5, -1.25
    combo = lambda p, x: a * f(p, x) + c * g(p, x)
    bf = autodiff.input_derivatives(f, params, pts)
    bg = autodiff.input_derivatives(g, params, pts)
    bc = autodiff.input_derivatives(combo, params, pts)
    for comp in range(3):
        np.testing.assert_allclose(
            np.asarray(bc[comp]), a * np.asarray(bf[comp]) + c * np.asarray(bg[comp]), atol=1e-12
        )


def test_affine_second_derivative_exactly_zero():
    f = lambda params, x: jnp.array([3.0 * x[0] - 0.5 * x[1] + 2.0])
    b = autodiff.input_derivatives(f, None, np.random.default_rng(2).normal(size=(6, 2)))
    assert np.all(np.asarray(b.d2u) == 0.0)


def test_determinism_bitwise(small_tanh_net):
    net, params = small_tanh_net
    pts = np.random.default_rng(3).uniform(-1, 1, size=(16, 2))
    b1 = autodiff.input_derivatives(net.apply, params, pts)
    b2 = autodiff.input_derivatives(net.apply, params, pts)
    for comp in range(3):
        assert np.array_equal(np.asarray(b1[comp]), np.asarray(b2[comp]))


def test_chunked_evaluation_matches_whole_batch(small_tanh_net):
    net, params = small_tanh_net
    pts = np.random.default_rng(4).uniform(-1, 1, size=(13, 2))
    whole = autodiff.input_derivatives(net.apply, params, pts)
    chunked = autodiff.input_derivatives(net.apply, params, pts, chunk_size=4)
    rechunked = autodiff.input_derivatives(net.apply, params, pts, chunk_size=4)
    for comp in range(3):
        # identical chunk layout is bit-exact; layouts differing only in
        # kernel tiling agree to ulp level
        assert np.array_equal(np.asarray(chunked[comp]), np.asarray(rechunked[comp]))
        np.testing.assert_allclose(
            np.asarray(whole[comp]), np.asarray(chunked[comp]), rtol=1e-14, atol=1e-15
        )


def test_non_finite_point_reported():
    f = lambda params, x: jnp.array([x[0] ** 2])
    pts = np.array([[1.0], [np.nan], [2.0]])
    with pytest.raises(NonFiniteValue) as err:
        autodiff.evaluate_with_input_derivatives(f, None, pts)
    assert err.value.point_index == 1


def test_overflow_identifies_point_index():
    f = lambda params, x: jnp.array([jnp.exp(x[0])])
    pts = np.array([[0.0], [800.0], [1.0]])  # exp(800) overflows f64
    with pytest.raises(NonFiniteValue) as err:
        autodiff.evaluate_with_input_derivatives(f, None, pts)
    assert err.value.point_index == 1


def test_loss_gradient_quadratic():
    loss = lambda p: 0.5 * jnp.sum(p**2)
    theta = jnp.arange(4.0)
    g = autodiff.loss_gradient(loss, theta)
    np.testing.assert_allclose(np.asarray(g), np.arange(4.0))


def test_loss_gradient_chain_rule():
    # loss = (w*x - y)^2 with w=1, x=2, y=1 -> d/dw = 2*(2-1)*2 = 4
    loss = lambda w: (w * 2.0 - 1.0) ** 2
    g = autodiff.loss_gradient(loss, jnp.asarray(1.0))
    assert float(g) == pytest.approx(4.0)


def test_nested_gradient_matches_fd(small_tanh_net):
    # parameter gradient of mean (du/dx)^2 over 32 points
    net, params = small_tanh_net
    pts = jnp.asarray(np.random.default_rng(5).uniform(-1, 1, size=(32, 2)))

    def loss(p):
        b = autodiff.input_derivatives(net.apply, p, pts, order=1)
        return jnp.mean(b.du[:, 0, 0] ** 2)

    g = autodiff.loss_gradient(loss, params)
    g_fd = fd_loss_gradient(loss, params, h=1e-4)
    num = np.max(np.abs(np.asarray(g) - np.asarray(g_fd)))
    den = np.max(np.abs(np.asarray(g_fd))) + 1e-12
    assert num / den < 1e-5


def test_loss_gradient_nan_detection():
    loss = lambda p: jnp.sqrt(p).sum()  # grad at 0 is inf
    with pytest.raises(NonFiniteGradient):
        autodiff.loss_gradient(loss, jnp.zeros(3))


def test_unsupported_primitive():
    def loss(p):
        return float(p[0]) ** 2  # concretizes a tracer

    with pytest.raises(UnsupportedOp):
        autodiff.loss_gradient(loss, jnp.ones(2))


def test_gradcheck_quadratic_tight():
    loss = lambda p: 0.5 * jnp.sum(p["w"] ** 2)
    report = autodiff.gradcheck(loss, {"w": jnp.arange(1.0, 5.0)}, step=1e-3, tolerance=1e-8)
    assert report.max_deviation < 1e-8
    assert report.passed


def test_gradcheck_mlp_residual_loss(small_tanh_net):
    net, params = small_tanh_net
    pts = jnp.asarray(np.random.default_rng(6).uniform(-1, 1, size=(8, 2)))

    def loss(p):
        b = autodiff.input_derivatives(net.apply, p["theta"], pts, order=2)
        res = b.du[:, 0, 1] - b.d2u[:, 0, 0]
        return jnp.mean(res**2)

    report = autodiff.gradcheck(loss, {"theta": params}, step=1e-4, tolerance=1e-5)
    assert report.max_deviation < 1e-5


def test_gradcheck_rejects_zero_step(small_tanh_net):
    net, params = small_tanh_net
    loss = lambda p: jnp.sum(p**2)
    with pytest.raises(InvalidStep):
        autodiff.gradcheck(loss, params, step=0.0, tolerance=1e-5)


def test_gradcheck_detects_corrupted_gradient(small_tanh_net):
    # negative control: a loss whose jax gradient path is deliberately wrong
    net, params = small_tanh_net

    @jax.custom_vjp
    def broken_square(x):
        return x**2

    broken_square.defvjp(
        lambda x: (x**2, x), lambda res, g: (g * 0.1 * res,)  # wrong cotangent
    )

    loss = lambda p: jnp.sum(broken_square(p))
    report = autodiff.gradcheck(loss, params, step=1e-4, tolerance=1e-5)
    assert report.max_deviation > 1e-2
    assert not report.passed
