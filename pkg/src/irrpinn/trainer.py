"""Optimization loop.

Adam and RProp steps on flat parameter vectors, staggered per-stage
scheduling (per governing equation, or network-vs-eigenvalue), causal
weight escalation, gradient-normalized loss weighting, periodic
collocation refresh with residual-based refinement, and history logging.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, NamedTuple, Optional, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from .autodiff import input_derivatives
from .errors import NonFiniteGradient
from .losses import (
    CausalConfig,
    LossWeights,
    causal_segment_losses,
    causal_weights,
    grad_norm_weights,
)
from .networks import Network, build_network
from .sampler import adaptive_refine, sample_uniform

log = logging.getLogger(__name__)


# --- optimizers -------------------------------------------------------------


class AdamState(NamedTuple):
    m: jax.Array
    v: jax.Array
    t: jax.Array


def adam_init(params) -> AdamState:
    z = jnp.zeros_like(params)
    return AdamState(m=z, v=z, t=jnp.zeros((), dtype=jnp.int64))


def adam_step(params, grads, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Standard Adam with bias correction."""
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads**2
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    new_params = params - lr * m_hat / (jnp.sqrt(v_hat) + eps)
    return new_params, AdamState(m=m, v=v, t=t)


class RPropState(NamedTuple):
    step_sizes: jax.Array
    prev_grad: jax.Array


RPROP_GROW = 1.2
RPROP_SHRINK = 0.5
RPROP_STEP_MIN = 1e-8
RPROP_STEP_MAX = 1.0
RPROP_STEP_INIT = 1e-3


def rprop_init(params, initial_step=RPROP_STEP_INIT) -> RPropState:
    return RPropState(
        step_sizes=jnp.full_like(params, initial_step), prev_grad=jnp.zeros_like(params)
    )


def rprop_step(params, grads, state: RPropState):
    """Sign-based update (iRprop- flavor).

    Step sizes grow x1.2 on sign agreement and shrink x0.5 on a sign
    flip, where the parameter holds still for one step and the flip is
    forgotten; steps are clamped to [1e-8, 1.0].
    """
    sign_prod = state.prev_grad * grads
    grew = jnp.where(sign_prod > 0, RPROP_GROW, 1.0)
    shrunk = jnp.where(sign_prod < 0, RPROP_SHRINK, 1.0)
    steps = jnp.clip(state.step_sizes * grew * shrunk, RPROP_STEP_MIN, RPROP_STEP_MAX)
    flipped = sign_prod < 0
    move = jnp.where(flipped, 0.0, -jnp.sign(grads) * steps)
    new_params = params + move
    remembered = jnp.where(flipped, 0.0, grads)
    return new_params, RPropState(step_sizes=steps, prev_grad=remembered)


# --- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class StaggerSchedule:
    steps_per_stage: int = 50


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int
    initial_lr: float = 1e-3
    optimizer: str = "adam"  # adam | rprop_adam (rprop drives extras, adam the nets)
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    stagger: Optional[StaggerSchedule] = None
    causal: Optional[CausalConfig] = None
    weighting: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    log_interval: int = 100
    n_adaptive: int = 0
    pool_factor: int = 10
    refresh_general: int = 200
    refresh_adaptive: int = 50
    lr_decay: float = 0.9
    lr_decay_every: int = 1000
    divergence_threshold: float = 1e12
    irr_weight_mode: str = "grad"  # grad | fixed | off
    irr_fixed_weight: float = 1.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.initial_lr <= 0:
            raise ValueError("learning rate must be > 0")
        if self.optimizer not in ("adam", "rprop_adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainingHistory:
    rows: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def record(self, **row):
        self.rows.append(row)

    def last(self, key, default=None):
        for row in reversed(self.rows):
            if key in row and row[key] is not None:
                return row[key]
        return default

    def column(self, key):
        return [row.get(key) for row in self.rows]

    def to_csv(self, path, group_order=None):
        if not self.rows:
            open(path, "w").close()
            return
        keys = ["step"]
        seen = set(keys)
        ordered = []
        if group_order:
            ordered = (
                ["loss_total"]
                + [f"loss_{g}" for g in group_order]
                + ["loss_irr_total"]
                + [f"w_{g}" for g in group_order]
                + ["eps_c", "s_L", "rel_l2", "wall_ms"]
            )
        for k in ordered:
            if k not in seen:
                keys.append(k)
                seen.add(k)
        for row in self.rows:
            for k in row:
                if k not in seen:
                    keys.append(k)
                    seen.add(k)
        with open(path, "w") as fh:
            fh.write(",".join(keys) + "\n")
            for row in self.rows:
                cells = []
                for k in keys:
                    v = row.get(k)
                    cells.append("" if v is None else f"{v:.10g}" if isinstance(v, float) else str(v))
                fh.write(",".join(cells) + "\n")


class TrainResult(NamedTuple):
    params: dict
    history: TrainingHistory
    aborted: bool


# --- loss assembly ----------------------------------------------------------


def keys_for_terms(terms):
    keys = []
    for t in terms:
        if t.points_key not in keys:
            keys.append(t.points_key)
    return keys


def build_ctx(problem, nets, params, point_arrays, keys, orders):
    """Derivative bundles per point set for every net the terms touch."""
    ctxs = {}
    for key in keys:
        pts = point_arrays[key]
        ctx = {}
        for net_name, order in orders[key].items():
            ctx[net_name] = input_derivatives(
                problem.forward_fn(nets, net_name), params[f"net:{net_name}"], pts, order
            )
        ctxs[key] = ctx
    return ctxs


def reduce_problem_terms(problem, nets, params, point_arrays, eps_c_val, terms,
                         orders=None, causal_cfg=None):
    """Evaluate term values: mean-square for residuals (with optional
    causal weighting), plain mean for irreversibility terms.

    Returns (term_values, aux) where aux carries the causal last-segment
    weights for the trainer's escalation rule.
    """
    orders = orders or problem.derivative_orders
    ctxs = build_ctx(problem, nets, params, point_arrays, keys_for_terms(terms), orders)
    extras = {k.split(":", 1)[1]: v for k, v in params.items() if k.startswith("extra:")}
    term_vals = {}
    aux = {"causal_last": []}
    for t in terms:
        pts = point_arrays[t.points_key]
        vals = t.fn(ctxs[t.points_key], pts, extras)
        if t.kind == "irr":
            tv = jnp.mean(vals)
        elif t.causal and causal_cfg is not None:
            seg_losses, _ = causal_segment_losses(
                vals, pts[:, problem.causal_coord], causal_cfg.n_segments
            )
            w_seg, _ = causal_weights(seg_losses, eps_c_val, causal_cfg.threshold)
            tv = jnp.sum(w_seg * seg_losses) / causal_cfg.n_segments
            aux["causal_last"].append(w_seg[-1])
        else:
            tv = jnp.mean(vals**2)
        term_vals[t.name] = tv
    return term_vals, aux


def group_term_losses(term_vals, terms, groups):
    out = {g: 0.0 for g in groups}
    for t in terms:
        if t.name in term_vals:
            out[t.weight_key] = out[t.weight_key] + term_vals[t.name]
    return out


def assemble_total_loss(problem, nets=None, weights=None, eps_c: float = 0.0):
    """Scalar total-loss closure over the parameter pytree.

    Used by the gradient checker and diagnostics; mirrors exactly what a
    (non-staggered) training step minimizes.
    """
    nets = nets or {name: build_network(cfg) for name, cfg in problem.nets.items()}
    groups = problem.weight_keys()
    weights = weights or {g: 1.0 for g in groups}
    terms = list(problem.terms)

    def loss_fn(params, point_arrays):
        term_vals, _ = reduce_problem_terms(
            problem, nets, params, point_arrays, eps_c, terms
        )
        gl = group_term_losses(term_vals, terms, groups)
        total = 0.0
        for g in groups:
            total = total + weights[g] * gl[g]
        return total

    return loss_fn


# --- the loop ---------------------------------------------------------------


def _init_params(problem, seed: int):
    params = {}
    for name, cfg in problem.nets.items():
        params[f"net:{name}"] = build_network(cfg).init_params(seed)
    for name, value in problem.extra_init.items():
        params[f"extra:{name}"] = jnp.asarray(float(value))
    return params


def _extras_view(params):
    return {k.split(":", 1)[1]: v for k, v in params.items() if k.startswith("extra:")}


def _leaf_optimizers(params, config: TrainingConfig):
    kinds = {}
    for key in params:
        if config.optimizer == "rprop_adam" and key.startswith("extra:"):
            kinds[key] = "rprop"
        else:
            kinds[key] = "adam"
    return kinds


def _sample_all(problem, config, epoch):
    """Regenerate every general set; seeds derive from (seed, epoch, key)."""
    sets = {}
    for i, (key, spec) in enumerate(problem.point_specs.items()):
        seed = int(np.random.SeedSequence((config.seed, epoch, i)).generate_state(1)[0])
        sets[key] = sample_uniform(
            problem.domain,
            spec.n,
            seed,
            fixed=spec.fixed_dict(),
            box=spec.box_dict(),
            epoch_stamp=epoch,
        )
    return sets


def train(problem, config: TrainingConfig, evaluate: Optional[Callable] = None) -> TrainResult:
    """Run the optimization loop for a problem.

    ``evaluate(params_dict) -> dict`` (optional) is called at logging
    steps; a returned ``rel_l2`` lands in the history.  Training aborts
    with the history intact on non-finite losses/gradients or when the
    total loss exceeds the divergence threshold.
    """
    nets: Dict[str, Network] = {name: build_network(cfg) for name, cfg in problem.nets.items()}
    params = _init_params(problem, config.seed)
    history = TrainingHistory()
    if config.epochs == 0:
        return TrainResult(params=params, history=history, aborted=False)

    leaf_opt = _leaf_optimizers(params, config)
    opt_states = {
        k: (adam_init(v) if leaf_opt[k] == "adam" else rprop_init(v)) for k, v in params.items()
    }

    groups = problem.weight_keys()
    weights = {g: 1.0 for g in groups}
    if config.irr_weight_mode == "off":
        weights = {g: (0.0 if g == "irr" else w) for g, w in weights.items()}
    elif config.irr_weight_mode == "fixed":
        weights = {g: (config.irr_fixed_weight if g == "irr" else w) for g, w in weights.items()}

    causal_cfg = config.causal
    eps_c = causal_cfg.epsilon_c if causal_cfg else 0.0

    n_stages = problem.n_stages if config.stagger is not None else 1
    steps_per_stage = config.stagger.steps_per_stage if config.stagger else 1

    def reduce_terms(params, point_arrays, eps_c_val, terms, orders=None):
        return reduce_problem_terms(
            problem, nets, params, point_arrays, eps_c_val, terms,
            orders=orders, causal_cfg=causal_cfg,
        )

    def group_losses(term_vals, terms):
        return group_term_losses(term_vals, terms, groups)

    stage_term_lists = [problem.stage_terms(s) if n_stages > 1 else list(problem.terms) for s in range(n_stages)]

    def make_step(stage):
        terms = stage_term_lists[stage]
        active = set(problem.stage_params[stage]) if n_stages > 1 else set(params.keys())
        stage_orders = None
        if n_stages > 1 and problem.stage_derivative_orders:
            stage_orders = problem.stage_derivative_orders.get(stage)

        def loss_fn(p, point_arrays, eps_c_val, w):
            term_vals, aux = reduce_terms(p, point_arrays, eps_c_val, terms, stage_orders)
            gl = group_losses(term_vals, terms)
            total = 0.0
            for g in groups:
                total = total + w[g] * gl[g]
            return total, (term_vals, gl, aux)

        grad_fn = jax.value_and_grad(loss_fn, has_aux=True)

        def step(p, states, point_arrays, eps_c_val, w, lr):
            (loss, aux_pack), grads = grad_fn(p, point_arrays, eps_c_val, w)
            grads_ok = jnp.asarray(True)
            for g in jax.tree_util.tree_leaves(grads):
                grads_ok = jnp.logical_and(grads_ok, jnp.all(jnp.isfinite(g)))
            new_p = {}
            new_states = {}
            for key in p:
                if key in active:
                    if leaf_opt[key] == "adam":
                        np_, ns = adam_step(
                            p[key], grads[key], states[key], lr,
                            config.beta1, config.beta2, config.adam_eps,
                        )
                    else:
                        np_, ns = rprop_step(p[key], grads[key], states[key])
                    new_p[key], new_states[key] = np_, ns
                else:
                    new_p[key], new_states[key] = p[key], states[key]
            return new_p, new_states, loss, aux_pack, grads_ok

        return jax.jit(step)

    step_fns = [make_step(s) for s in range(n_stages)]

    all_terms = list(problem.terms)

    @jax.jit
    def full_loss(p, point_arrays, eps_c_val, w):
        term_vals, _ = reduce_terms(p, point_arrays, eps_c_val, all_terms)
        gl = group_losses(term_vals, all_terms)
        total = 0.0
        for g in groups:
            total = total + w[g] * gl[g]
        return total, term_vals, gl

    net_keys = [k for k in params if k.startswith("net:")]

    @jax.jit
    def group_grad_norms(p, point_arrays, eps_c_val):
        norms = {}
        for g in groups:
            def gloss(q):
                term_vals, _ = reduce_terms(q, point_arrays, eps_c_val, all_terms)
                gl = group_losses(term_vals, all_terms)
                return gl[g]

            grads = jax.grad(gloss)(p)
            sq = 0.0
            for k in net_keys:
                sq = sq + jnp.sum(grads[k] ** 2)
            norms[g] = jnp.sqrt(sq)
        return norms

    @jax.jit
    def refinement_values(p, pts):
        ctx = {}
        for net_name, order in problem.derivative_orders[problem.adaptive_key].items():
            ctx[net_name] = input_derivatives(
                problem.forward_fn(nets, net_name), p[f"net:{net_name}"], pts, order
            )
        return problem.refinement_residual(ctx, pts, _extras_view(p))

    def norm_points(sets, adaptive_set):
        arrays = {}
        for key, cs in sets.items():
            pts = cs.points
            if adaptive_set is not None and key == problem.adaptive_key:
                pts = np.concatenate([pts, adaptive_set.points], axis=0)
            arrays[key] = jnp.asarray(problem.domain.normalize(pts))
        return arrays

    def refresh_adaptive_set(epoch, point_params):
        if config.n_adaptive <= 0 or problem.adaptive_key is None:
            return None
        seed = int(np.random.SeedSequence((config.seed, epoch, 9001)).generate_state(1)[0])
        pool = sample_uniform(
            problem.domain, config.pool_factor * config.n_adaptive, seed,
            provenance="general", epoch_stamp=epoch,
        )
        res = refinement_values(point_params, jnp.asarray(problem.domain.normalize(pool.points)))
        return adaptive_refine(pool, np.asarray(res), config.n_adaptive)

    sets = _sample_all(problem, config, 0)
    adaptive_set = refresh_adaptive_set(0, params)
    point_arrays = norm_points(sets, adaptive_set)

    grad_weight_groups = [g for g in groups if g != "irr" or config.irr_weight_mode == "grad"]
    t0 = time.time()
    aborted = False

    for step_idx in range(config.epochs):
        if step_idx > 0 and step_idx % config.refresh_general == 0:
            sets = _sample_all(problem, config, step_idx)
            point_arrays = norm_points(sets, adaptive_set)
        if step_idx > 0 and config.n_adaptive > 0 and step_idx % config.refresh_adaptive == 0:
            adaptive_set = refresh_adaptive_set(step_idx, params)
            point_arrays = norm_points(sets, adaptive_set)

        if config.weighting.update_interval > 0 and step_idx % config.weighting.update_interval == 0 and step_idx > 0:
            norms = group_grad_norms(params, point_arrays, eps_c)
            active_norms = [float(norms[g]) for g in grad_weight_groups]
            prev = [weights[g] for g in grad_weight_groups]
            updated = grad_norm_weights(active_norms, prev, config.weighting.alpha_w)
            for g, w in zip(grad_weight_groups, updated):
                weights[g] = float(min(w, config.weighting.max_weight))

        stage = (step_idx // steps_per_stage) % n_stages if n_stages > 1 else 0
        lr = config.initial_lr * config.lr_decay ** (step_idx // config.lr_decay_every)
        w_arg = {g: jnp.asarray(weights[g]) for g in groups}
        params_new, opt_states_new, loss, aux_pack, grads_ok = step_fns[stage](
            params, opt_states, point_arrays, jnp.asarray(eps_c), w_arg, jnp.asarray(lr)
        )
        loss_val = float(loss)
        if not np.isfinite(loss_val):
            history.events.append({"step": step_idx, "event": "non_finite_loss"})
            aborted = True
            break
        if not bool(grads_ok):
            history.events.append({"step": step_idx, "event": "non_finite_gradient"})
            aborted = True
            break
        if loss_val > config.divergence_threshold:
            history.events.append({"step": step_idx, "event": "divergence", "loss": loss_val})
            aborted = True
            break
        params, opt_states = params_new, opt_states_new

        _, _, aux = aux_pack
        if causal_cfg is not None and aux["causal_last"]:
            last = min(float(x) for x in aux["causal_last"])
            if last > causal_cfg.threshold:
                eps_c *= causal_cfg.growth

        if step_idx % config.log_interval == 0 or step_idx == config.epochs - 1:
            total, term_vals, gl = full_loss(params, point_arrays, jnp.asarray(eps_c), w_arg)
            row = {
                "step": step_idx,
                "loss_total": float(total),
                "wall_ms": (time.time() - t0) * 1e3,
                "eps_c": eps_c if causal_cfg is not None else None,
            }
            for g in groups:
                row[f"loss_{g}"] = float(gl[g])
                row[f"w_{g}"] = weights[g]
            irr_total = sum(float(term_vals[t.name]) for t in all_terms if t.kind == "irr")
            row["loss_irr_total"] = irr_total
            for k, v in params.items():
                if k.startswith("extra:"):
                    row[k.split(":", 1)[1]] = float(v)
            if evaluate is not None:
                try:
                    row.update(evaluate(params))
                except Exception as exc:  # evaluation must never kill training
                    log.warning("evaluate failed at step %d: %s", step_idx, exc)
            history.record(**row)

    return TrainResult(params=params, history=history, aborted=aborted)
