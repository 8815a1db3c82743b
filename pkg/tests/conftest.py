import jax
import jax.numpy as jnp
import numpy as np
import pytest

jax.config.update("jax_enable_x64", True)

from irrpinn.networks import FourierConfig, Network, NetworkConfig


def fd_input_derivs(apply_fn, params, points, h=1e-4):
    """Central finite differences of a batched forward pass.

    Independent oracle for the jet engine: never touches jax derivatives,
    only plain forward evaluations.  Returns (u, du, d2u) with the same
    shapes as a DerivativeBundle.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, d = pts.shape
    u0 = np.asarray(jax.vmap(lambda x: apply_fn(params, x))(jnp.asarray(pts)))
    m = u0.shape[1]
    du = np.zeros((n, m, d))
    d2u = np.zeros((n, m, d))
    for k in range(d):
        plus = pts.copy()
        minus = pts.copy()
        plus[:, k] += h
        minus[:, k] -= h
        up = np.asarray(jax.vmap(lambda x: apply_fn(params, x))(jnp.asarray(plus)))
        um = np.asarray(jax.vmap(lambda x: apply_fn(params, x))(jnp.asarray(minus)))
        du[:, :, k] = (up - um) / (2 * h)
        d2u[:, :, k] = (up - 2 * u0 + um) / h**2
    return u0, du, d2u


def fd_loss_gradient(loss_fn, params, h=1e-4):
    """Central-difference gradient of a scalar loss over a pytree."""
    leaves, treedef = jax.tree_util.tree_flatten(params)
    out = []
    for i, leaf in enumerate(leaves):
        arr = np.asarray(leaf, dtype=np.float64)
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            plus = [np.asarray(l, dtype=np.float64).copy() for l in leaves]
            minus = [np.asarray(l, dtype=np.float64).copy() for l in leaves]
            plus[i][idx] += h
            minus[i][idx] -= h
            lp = float(loss_fn(jax.tree_util.tree_unflatten(treedef, [jnp.asarray(a) for a in plus])))
            lm = float(loss_fn(jax.tree_util.tree_unflatten(treedef, [jnp.asarray(a) for a in minus])))
            g[idx] = (lp - lm) / (2 * h)
            it.iternext()
        out.append(jnp.asarray(g))
    return jax.tree_util.tree_unflatten(treedef, out)


@pytest.fixture
def small_tanh_net():
    cfg = NetworkConfig(
        architecture="mlp", depth=2, width=8, activation="tanh", input_dim=2, output_dim=1
    )
    net = Network(cfg)
    params = net.init_params(seed=7)
    return net, params
