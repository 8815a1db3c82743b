"""Network architectures, activations, Fourier feature embedding, init.

Parameters live in a single flat float64 vector with a layout map from
tensor names to index ranges, which keeps optimizers and checkpointing
trivial and makes per-group freezing explicit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from .errors import ConfigError

ARCHITECTURES = ("mlp", "resnet", "modified_mlp")
ACTIVATIONS = ("tanh", "gelu", "swish", "snake")

_CHECKPOINT_MAGIC = b"IRRNET01"


def activation(kind: str, x, snake_a: float = 1.0):
    """Pointwise activation; exact derivatives come from the autodiff engine.

    gelu uses the exact Gaussian-CDF form (not the tanh approximation),
    swish is x*sigmoid(x), snake is x + sin(a x)^2 / a.
    """
    if kind == "tanh":
        return jnp.tanh(x)
    if kind == "gelu":
        return jax.nn.gelu(x, approximate=False)
    if kind == "swish":
        return x * jax.nn.sigmoid(x)
    if kind == "snake":
        return x + jnp.sin(snake_a * x) ** 2 / snake_a
    raise ConfigError(f"unknown activation {kind!r}")


@dataclass(frozen=True)
class FourierConfig:
    """Random Fourier feature embedding: frozen Gaussian projections.

    ``m_f`` features per coordinate group; entries of the projection
    matrices are N(0, sigma^2) samples drawn once from ``seed`` and never
    trained.  ``sigma_t`` is only used when the network tracks a time
    coordinate, which then gets its own projection group.
    """

    m_f: int
    sigma_x: float
    sigma_t: Optional[float] = None
    seed: int = 0


@dataclass(frozen=True)
class NetworkConfig:
    architecture: str
    depth: int
    width: int
    activation: str
    input_dim: int
    output_dim: int
    ffe: Optional[FourierConfig] = None
    output_transform: Optional[Tuple[float, float]] = None  # bounded (lo, hi) via scaled sigmoid
    time_index: Optional[int] = None
    snake_a: float = 1.0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.depth < 1 or self.width < 1 or self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError("depth, width and dims must be positive")
        if self.ffe is not None and self.ffe.sigma_t is not None and self.time_index is None:
            raise ConfigError("sigma_t given but no time_index to embed")


class FrozenFFE(NamedTuple):
    b_x: jax.Array  # [m_f, n_spatial]
    b_t: Optional[jax.Array]  # [m_f, 1] or None


def sample_ffe(config: FourierConfig, n_spatial: int) -> FrozenFFE:
    """Draw the frozen projection matrices for an embedding config."""
    key = jax.random.PRNGKey(config.seed)
    kx, kt = jax.random.split(key)
    b_x = config.sigma_x * jax.random.normal(kx, (config.m_f, n_spatial), dtype=jnp.float64)
    b_t = None
    if config.sigma_t is not None:
        b_t = config.sigma_t * jax.random.normal(kt, (config.m_f, 1), dtype=jnp.float64)
    return FrozenFFE(b_x=b_x, b_t=b_t)


def ffe_embed(frozen: FrozenFFE, x: jax.Array, t: Optional[jax.Array] = None) -> jax.Array:
    """[cos(Bx x); sin(Bx x)] (+ [cos(Bt t); sin(Bt t)] when t is tracked)."""
    zx = frozen.b_x @ x
    parts = [jnp.cos(zx), jnp.sin(zx)]
    if frozen.b_t is not None:
        if t is None:
            raise ConfigError("embedding expects a time coordinate")
        zt = frozen.b_t @ jnp.atleast_1d(t)
        parts += [jnp.cos(zt), jnp.sin(zt)]
    return jnp.concatenate(parts)


@dataclass(frozen=True)
class Layout:
    """Mapping from tensor names to slices of the flat parameter vector."""

    entries: Tuple[Tuple[str, Tuple[int, ...], int, int], ...]  # (name, shape, start, end)
    total: int

    def slice(self, params: jax.Array, name: str) -> jax.Array:
        for n, shape, start, end in self.entries:
            if n == name:
                return params[start:end].reshape(shape)
        raise KeyError(name)

    def names(self):
        return [e[0] for e in self.entries]


def _build_layout(config: NetworkConfig) -> Layout:
    in_eff = config.input_dim
    if config.ffe is not None:
        in_eff = 2 * config.ffe.m_f
        if config.ffe.sigma_t is not None:
            in_eff += 2 * config.ffe.m_f
    shapes = []
    if config.architecture == "modified_mlp":
        shapes.append(("W_u", (config.width, in_eff)))
        shapes.append(("b_u", (config.width,)))
        shapes.append(("W_v", (config.width, in_eff)))
        shapes.append(("b_v", (config.width,)))
    prev = in_eff
    for l in range(1, config.depth + 1):
        shapes.append((f"W_{l}", (config.width, prev)))
        shapes.append((f"b_{l}", (config.width,)))
        prev = config.width
    shapes.append(("W_out", (config.output_dim, prev)))
    shapes.append(("b_out", (config.output_dim,)))
    entries = []
    offset = 0
    for name, shape in shapes:
        size = int(np.prod(shape))
        entries.append((name, shape, offset, offset + size))
        offset += size
    return Layout(entries=tuple(entries), total=offset)


class Network:
    """Architecture + frozen embedding; parameters are passed explicitly.

    Stateless after construction, so instances can be shared freely
    across threads and jitted closures.
    """

    def __init__(self, config: NetworkConfig):
        self.config = config
        self.layout = _build_layout(config)
        self.ffe = None
        self._n_spatial = config.input_dim
        if config.ffe is not None:
            if config.ffe.sigma_t is not None:
                self._n_spatial = config.input_dim - 1
                if self._n_spatial < 1:
                    raise ConfigError("time-split embedding needs at least one spatial coord")
            self.ffe = sample_ffe(config.ffe, self._n_spatial)

    @property
    def n_params(self) -> int:
        return self.layout.total

    def init_params(self, seed: int) -> jax.Array:
        """Glorot-uniform weights, zero biases; deterministic per seed."""
        key = jax.random.PRNGKey(seed)
        chunks = []
        for i, (name, shape, start, end) in enumerate(self.layout.entries):
            if name.startswith("W"):
                fan_out, fan_in = shape
                limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
                sub = jax.random.fold_in(key, i)
                w = jax.random.uniform(sub, shape, dtype=jnp.float64, minval=-limit, maxval=limit)
                chunks.append(w.reshape(-1))
            else:
                chunks.append(jnp.zeros(end - start, dtype=jnp.float64))
        return jnp.concatenate(chunks)

    def embed(self, x: jax.Array) -> jax.Array:
        if self.ffe is None:
            return x
        cfg = self.config
        if cfg.ffe.sigma_t is not None:
            ti = cfg.time_index
            spatial = jnp.concatenate([x[:ti], x[ti + 1 :]])
            return ffe_embed(self.ffe, spatial, x[ti])
        return ffe_embed(self.ffe, x)

    def apply(self, params: jax.Array, x: jax.Array) -> jax.Array:
        """Forward pass for a single point x of shape [input_dim]."""
        cfg = self.config
        act = lambda z: activation(cfg.activation, z, cfg.snake_a)
        z = self.embed(x)
        lay = self.layout
        if cfg.architecture == "modified_mlp":
            u = act(lay.slice(params, "W_u") @ z + lay.slice(params, "b_u"))
            v = act(lay.slice(params, "W_v") @ z + lay.slice(params, "b_v"))
            for l in range(1, cfg.depth + 1):
                zh = act(lay.slice(params, f"W_{l}") @ z + lay.slice(params, f"b_{l}"))
                z = zh * u + (1.0 - zh) * v
        elif cfg.architecture == "resnet":
            for l in range(1, cfg.depth + 1):
                h = act(lay.slice(params, f"W_{l}") @ z + lay.slice(params, f"b_{l}"))
                # skip connection only where the shapes line up
                z = h + z if z.shape == h.shape else h
        else:
            for l in range(1, cfg.depth + 1):
                z = act(lay.slice(params, f"W_{l}") @ z + lay.slice(params, f"b_{l}"))
        y = lay.slice(params, "W_out") @ z + lay.slice(params, "b_out")
        if cfg.output_transform is not None:
            lo, hi = cfg.output_transform
            y = lo + (hi - lo) * jax.nn.sigmoid(y)
        return y

    def apply_batch(self, params: jax.Array, x: jax.Array) -> jax.Array:
        return jax.vmap(lambda p: self.apply(params, p))(x)


@lru_cache(maxsize=None)
def build_network(config: NetworkConfig) -> Network:
    return Network(config)


def init(config: NetworkConfig, seed: int) -> jax.Array:
    return build_network(config).init_params(seed)


def forward(config: NetworkConfig, params: jax.Array, x) -> jax.Array:
    return build_network(config).apply(params, jnp.asarray(x, dtype=jnp.float64))


# --- checkpoint container -------------------------------------------------
#
# Binary layout (little-endian):
#   bytes 0:8    magic "IRRNET01"
#   bytes 8:12   uint32 header length H
#   bytes 12:12+H  UTF-8 JSON header: config dict, seed, layout entries,
#                  parameter count
#   remainder    n float64 parameter values
# A JSON sidecar with the same header is written next to the binary.


def _config_to_dict(config: NetworkConfig) -> dict:
    d = {
        "architecture": config.architecture,
        "depth": config.depth,
        "width": config.width,
        "activation": config.activation,
        "input_dim": config.input_dim,
        "output_dim": config.output_dim,
        "time_index": config.time_index,
        "snake_a": config.snake_a,
        "output_transform": list(config.output_transform) if config.output_transform else None,
        "ffe": None,
    }
    if config.ffe is not None:
        d["ffe"] = {
            "m_f": config.ffe.m_f,
            "sigma_x": config.ffe.sigma_x,
            "sigma_t": config.ffe.sigma_t,
            "seed": config.ffe.seed,
        }
    return d


def config_from_dict(d: dict) -> NetworkConfig:
    ffe = None
    if d.get("ffe"):
        ffe = FourierConfig(**d["ffe"])
    ot = d.get("output_transform")
    return NetworkConfig(
        architecture=d["architecture"],
        depth=d["depth"],
        width=d["width"],
        activation=d["activation"],
        input_dim=d["input_dim"],
        output_dim=d["output_dim"],
        ffe=ffe,
        output_transform=tuple(ot) if ot else None,
        time_index=d.get("time_index"),
        snake_a=d.get("snake_a", 1.0),
    )


def save_checkpoint(path, config: NetworkConfig, params, seed: int) -> None:
    net = build_network(config)
    arr = np.asarray(params, dtype="<f8")
    if arr.size != net.n_params:
        raise ConfigError(f"parameter count {arr.size} != layout total {net.n_params}")
    header = {
        "config": _config_to_dict(config),
        "seed": seed,
        "n_params": int(arr.size),
        "layout": [
            {"name": n, "shape": list(s), "start": a, "end": b}
            for n, s, a, b in net.layout.entries
        ],
        "dtype": "<f8",
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(arr.tobytes())
    with open(str(path) + ".json", "w") as fh:
        json.dump(header, fh, indent=2)


def load_checkpoint(path):
    """Returns (config, params, seed)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CHECKPOINT_MAGIC:
            raise ConfigError(f"not a checkpoint file: bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arr = np.frombuffer(fh.read(), dtype="<f8")
    if arr.size != header["n_params"]:
        raise ConfigError("checkpoint truncated: parameter count mismatch")
    return config_from_dict(header["config"]), jnp.asarray(arr), header["seed"]
