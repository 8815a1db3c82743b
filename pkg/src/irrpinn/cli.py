"""Command-line entry point.

Commands:
  run        train a benchmark (irreversibility-regularized, baseline, or
             both) and write history.csv, checkpoints, field grids, and
             summary.json
  reference  generate the independent reference solution artifacts
  compare    compare run artifacts against reference artifacts
  gradcheck  finite-difference audit of the full-loss parameter gradient

Configuration is a single JSON document; ``--set dotted.path=value``
flags override individual entries.  Exit codes: 0 success, 1 runtime
failure, 2 configuration error.  The environment variable
IRRPINN_OUTPUT_ROOT prefixes relative output directories.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import IrrPinnError
from .problems import BENCHMARKS, build_problem

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

_MODES = ("irr", "baseline", "both")
_PROFILES = ("desk", "paper")


class ConfigFileError(Exception):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_run_config(path=None, sets=None) -> dict:
    cfg = {
        "benchmark": None,
        "mode": "irr",
        "profile": "desk",
        "seed": 0,
        "output_dir": None,
        "overrides": {},
    }
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        except OSError as exc:
            raise ConfigFileError(str(exc)) from exc
        if not isinstance(user, dict):
            raise ConfigFileError(f"{path}: top level must be a JSON object")
        for key in user:
            if key not in cfg:
                raise ConfigFileError(f"{path}: unknown key {key!r}")
        cfg.update(user)
    for item in sets or []:
        if "=" not in item:
            raise ConfigFileError(f"--set needs key=value, got {item!r}")
        key, value = item.split("=", 1)
        if key.startswith("overrides."):
            cfg["overrides"][key.split(".", 1)[1]] = _parse_value(value)
        elif key in cfg:
            cfg[key] = _parse_value(value)
        else:
            cfg["overrides"][key] = _parse_value(value)
    return cfg


def validate_run_config(cfg: dict):
    if cfg["benchmark"] not in BENCHMARKS:
        raise ConfigFileError(
            f"benchmark must be one of {', '.join(BENCHMARKS)}; got {cfg['benchmark']!r}"
        )
    if cfg["mode"] not in _MODES:
        raise ConfigFileError(f"mode must be one of {_MODES}, got {cfg['mode']!r}")
    if cfg["profile"] not in _PROFILES:
        raise ConfigFileError(f"profile must be one of {_PROFILES}, got {cfg['profile']!r}")
    if not isinstance(cfg["seed"], int):
        raise ConfigFileError("seed must be an integer")
    if not isinstance(cfg["overrides"], dict):
        raise ConfigFileError("overrides must be an object of dotted-path entries")


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _output_dir(cfg: dict, benchmark: str) -> Path:
    root = os.environ.get("IRRPINN_OUTPUT_ROOT", ".")
    out = cfg.get("output_dir") or f"runs/{benchmark}"
    path = Path(out)
    if not path.is_absolute():
        path = Path(root) / path
    path.mkdir(parents=True, exist_ok=True)
    return path


def apply_overrides(problem, training, overrides: dict):
    """Dot-path overrides: training.<field>, params.<field>, points.<key>,
    n formatted as plain values, e.g. training.epochs=500."""
    from .problems.base import PointSpec

    for key, value in overrides.items():
        parts = key.split(".")
        if parts[0] == "training" and len(parts) == 2:
            if not hasattr(training, parts[1]):
                raise ConfigFileError(f"unknown training field {parts[1]!r}")
            training = replace(training, **{parts[1]: value})
        elif parts[0] == "params" and len(parts) == 2:
            if not hasattr(problem.params, parts[1]):
                raise ConfigFileError(f"unknown parameter field {parts[1]!r}")
            new_params = replace(problem.params, **{parts[1]: value})
            fresh = build_problem(problem.name, profile="desk", params=new_params)
            fresh.training = training
            problem = fresh
        elif parts[0] == "points" and len(parts) == 2:
            spec = problem.point_specs.get(parts[1])
            if spec is None:
                raise ConfigFileError(f"unknown point set {parts[1]!r}")
            problem.point_specs[parts[1]] = dataclasses.replace(spec, n=int(value))
        else:
            raise ConfigFileError(f"unknown override path {key!r}")
    return problem, training


def _build(cfg: dict, mode: str):
    problem = build_problem(cfg["benchmark"], profile=cfg["profile"], seed=cfg["seed"])
    training = replace(problem.training, seed=cfg["seed"])
    problem, training = apply_overrides(problem, training, cfg["overrides"])
    if mode == "baseline":
        training = replace(training, irr_weight_mode="off")
    return problem, training


def _attach_reference_evaluator(problem, benchmark, out_dir):
    """Build or load the reference solution and wire the rel-L2 monitor."""
    from .reference import fd_corrosion, fd_fisher, shoot_combustion

    if benchmark == "traveling_wave":
        from .problems.fisher import make_evaluator

        ref = fd_fisher(problem.params)
        return ref, make_evaluator(problem, ref)
    if benchmark == "combustion":
        from .problems.combustion import make_evaluator

        ref = shoot_combustion(problem.params, n_grid=20000)
        return ref, make_evaluator(problem, ref)
    if benchmark == "ice":
        from .problems.ice import make_evaluator

        return None, make_evaluator(problem)
    if benchmark == "corrosion":
        from .problems.corrosion import make_evaluator

        ref = fd_corrosion(problem.params)
        return ref, make_evaluator(problem, ref)
    return None, None  # fracture has no reference solver


def _final_metrics(problem, params, benchmark, ref):
    from .reference.metrics import relative_l2

    metrics = {}
    if benchmark == "traveling_wave":
        from .problems.fisher import predict_on_grid

        pred = predict_on_grid(problem, params, ref.axis("x"), ref.axis("t"))
        metrics["rel_l2"] = relative_l2(pred, ref.fields["u"])
    elif benchmark == "combustion":
        from .problems.combustion import predict_temperature

        pred = predict_temperature(problem, params, ref.x)
        metrics["rel_l2"] = relative_l2(pred, ref.T)
        metrics["s_L"] = float(params["extra:s_L"])
        metrics["s_L_star"] = ref.s_L_star
    elif benchmark == "ice":
        from .problems.ice import extract_radius
        from .reference.ice_analytic import melting_radius

        devs = {}
        for t in (1.0, 2.0, 3.0, 4.0, 5.0):
            target = melting_radius(problem.params, t)
            try:
                r = extract_radius(problem, params, t)
                devs[str(t)] = abs(r - target) / target
            except IrrPinnError:
                devs[str(t)] = None
        metrics["radius_deviation"] = devs
        valid = [v for v in devs.values() if v is not None]
        metrics["rel_l2"] = 100.0 * max(valid) if len(valid) == 5 else None
    elif benchmark == "corrosion":
        from .problems.corrosion import make_evaluator

        metrics.update(make_evaluator(problem, ref, stride_xy=2, frame_stride=2)(params))
    elif benchmark == "fracture":
        from .problems.fracture import crack_band_span, reaction_force

        times = np.linspace(0.02, 1.0, 50)
        forces = reaction_force(problem, params, times)
        metrics["band_span"] = crack_band_span(problem, params)
        metrics["peak_force"] = float(forces.max())
        metrics["final_force"] = float(forces[-1])
    return metrics


def _save_params(problem, params, out_dir: Path, seed: int):
    from .networks import save_checkpoint

    for name, cfg_net in problem.nets.items():
        save_checkpoint(out_dir / f"net_{name}.bin", cfg_net, params[f"net:{name}"], seed)
    extras = {k.split(":", 1)[1]: float(v) for k, v in params.items() if k.startswith("extra:")}
    if extras:
        (out_dir / "extras.json").write_text(json.dumps(extras, indent=2))


def cmd_run(args) -> int:
    cfg = load_run_config(args.config, args.set)
    if args.benchmark:
        cfg["benchmark"] = args.benchmark
    if args.mode:
        cfg["mode"] = args.mode
    if args.profile:
        cfg["profile"] = args.profile
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.output_dir:
        cfg["output_dir"] = args.output_dir
    validate_run_config(cfg)

    from .trainer import train

    modes = ("irr", "baseline") if cfg["mode"] == "both" else (cfg["mode"],)
    out_root = _output_dir(cfg, cfg["benchmark"])
    chash = config_hash(cfg)
    summary = {"config": cfg, "config_hash": chash, "modes": {}}
    exit_code = EXIT_OK
    for mode in modes:
        problem, training = _build(cfg, mode)
        ref, evaluator = _attach_reference_evaluator(problem, cfg["benchmark"], out_root)
        out_dir = out_root / mode
        out_dir.mkdir(parents=True, exist_ok=True)
        print(f"[irrpinn] training {cfg['benchmark']} ({mode}, {cfg['profile']}) ...")
        result = train(problem, training, evaluate=evaluator)
        result.history.to_csv(out_dir / "history.csv", group_order=problem.weight_keys())
        _save_params(problem, result.params, out_dir, cfg["seed"])
        metrics = {}
        try:
            metrics = _final_metrics(problem, result.params, cfg["benchmark"], ref)
        except IrrPinnError as exc:
            metrics = {"error": str(exc)}
        mode_summary = {
            "aborted": result.aborted,
            "events": result.history.events,
            "final_irr_loss": result.history.last("loss_irr_total"),
            **metrics,
        }
        summary["modes"][mode] = mode_summary
        if result.aborted:
            exit_code = EXIT_RUNTIME
        print(f"[irrpinn] {mode}: {json.dumps(mode_summary, default=str)[:300]}")
    (out_root / "summary.json").write_text(json.dumps(summary, indent=2, default=str))
    (out_root / "config.json").write_text(json.dumps(cfg, indent=2))
    return exit_code


def cmd_reference(args) -> int:
    from .reference import fd_corrosion, fd_fisher, save_grid, shoot_combustion
    from .reference.gridio import GridSolution, save_csv_slice

    benchmark = args.benchmark
    if benchmark not in BENCHMARKS:
        print(f"error: unknown benchmark {benchmark!r}; valid: {', '.join(BENCHMARKS)}",
              file=sys.stderr)
        return EXIT_CONFIG
    if benchmark == "fracture":
        print(
            "error: UnsupportedReference: the fracture benchmark has no grid reference "
            "(notched geometry); its acceptance is property-based",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    out = Path(args.output or f"reference/{benchmark}")
    root = os.environ.get("IRRPINN_OUTPUT_ROOT", ".")
    if not out.is_absolute():
        out = Path(root) / out
    out.mkdir(parents=True, exist_ok=True)

    problem = build_problem(benchmark, profile="desk")
    if benchmark == "traveling_wave":
        sol = fd_fisher(problem.params, nx=args.nx or 1001, dt=args.dt or 0.02)
        save_grid(out / "grid.bin", sol)
        mid = sol.fields["u"][len(sol.axis("t")) // 2]
        save_csv_slice(out / "slice_mid_time.csv", {"x": sol.axis("x"), "u": mid})
    elif benchmark == "combustion":
        shot = shoot_combustion(problem.params, n_grid=args.nx or 1000)
        sol = GridSolution(
            axes=[("x", shot.x)],
            fields={"T": shot.T, "grad_T": shot.grad_T, "u": shot.u, "rho": shot.rho,
                    "p": shot.p, "Y_F": shot.Y_F, "omega": shot.omega},
            meta={"s_L_star": shot.s_L_star, "bisections": shot.bisections},
        )
        save_grid(out / "grid.bin", sol)
        save_csv_slice(out / "profiles.csv",
                       {"x": shot.x, "T": shot.T, "rho": shot.rho, "Y_F": shot.Y_F})
        (out / "s_L_star.json").write_text(json.dumps({"s_L_star": shot.s_L_star}))
        print(f"[irrpinn] s_L_star = {shot.s_L_star:.6f} m/s")
    elif benchmark == "ice":
        from .reference.ice_analytic import analytic_ice, melting_radius

        times = np.linspace(0.0, problem.params.T_end, 51)
        radii = melting_radius(problem.params, times)
        save_csv_slice(out / "radius.csv", {"t": times, "R": radii})
        rho = np.linspace(0.0, problem.params.half_width, 512)
        profs = {"rho": rho}
        for t in (0.0, 1.0, 2.0, 3.0, 4.0, 5.0):
            _, phi = analytic_ice(problem.params, t, rho=rho)
            profs[f"phi_t{t:g}"] = phi
        save_csv_slice(out / "profiles.csv", profs)
    elif benchmark == "corrosion":
        sol = fd_corrosion(problem.params, nx=args.nx or 101, ny=(args.nx or 101) // 2 + 1)
        save_grid(out / "grid.bin", sol)
        from .reference.corrosion_fd import corrosion_depth

        t, depth = corrosion_depth(sol)
        save_csv_slice(out / "depth.csv", {"t": t, "depth": depth})
    print(f"[irrpinn] reference artifacts in {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    from .reference import load_grid
    from .reference.metrics import relative_l2

    run_dir = Path(args.run_dir)
    ref_path = Path(args.reference)
    summary_path = run_dir / "summary.json" if run_dir.is_dir() else None
    if summary_path is None or not summary_path.exists():
        print(f"error: no summary.json under {run_dir}", file=sys.stderr)
        return EXIT_CONFIG
    summary = json.loads(summary_path.read_text())
    if args.expect_hash and summary.get("config_hash") != args.expect_hash and not args.force:
        print("error: config hash mismatch (use --force to compare anyway)", file=sys.stderr)
        return EXIT_CONFIG

    cfg = summary["config"]
    benchmark = cfg["benchmark"]
    report_lines = [f"# comparison report: {benchmark}", ""]
    csv_rows = {}
    for mode, ms in summary["modes"].items():
        report_lines.append(f"## mode: {mode}")
        for key in ("rel_l2", "final_irr_loss", "s_L", "band_span", "peak_force"):
            if key in ms and ms[key] is not None:
                report_lines.append(f"- {key}: {ms[key]}")
                csv_rows.setdefault(key, {})[mode] = ms[key]
        report_lines.append("")

    # irreversibility-violation audit of the reference itself, when the
    # reference is a time-dependent grid of the order parameter
    if ref_path.exists() and ref_path.suffix == ".bin":
        ref = load_grid(ref_path)
        if "phi" in ref.fields and ref.axes[0][0] == "t":
            t = ref.axis("t")
            dphi = np.diff(ref.fields["phi"], axis=0)
            dts = np.diff(t).reshape(-1, *([1] * (ref.fields["phi"].ndim - 1)))
            audit = float((dphi / dts).max())
            report_lines.append(f"- reference max positive dphi/dt: {audit:.3e}")

    report = "\n".join(report_lines) + "\n"
    (run_dir / "compare.md").write_text(report)
    with open(run_dir / "compare.csv", "w") as fh:
        fh.write("metric," + ",".join(summary["modes"]) + "\n")
        for key, per_mode in csv_rows.items():
            cells = [str(per_mode.get(m, "")) for m in summary["modes"]]
            fh.write(f"{key}," + ",".join(cells) + "\n")
    print(report)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    import jax
    import jax.numpy as jnp

    from .autodiff import gradcheck
    from .sampler import sample_uniform
    from .trainer import assemble_total_loss, _init_params

    benchmark = args.benchmark
    if benchmark not in BENCHMARKS:
        print(f"error: unknown benchmark {benchmark!r}; valid: {', '.join(BENCHMARKS)}",
              file=sys.stderr)
        return EXIT_CONFIG
    problem = build_problem(benchmark, profile="desk", seed=args.seed)
    n_points = args.n_points
    point_arrays = {}
    for i, (key, spec) in enumerate(problem.point_specs.items()):
        cs = sample_uniform(problem.domain, min(spec.n, n_points), seed=100 + i,
                            fixed=spec.fixed_dict(), box=spec.box_dict())
        point_arrays[key] = jnp.asarray(problem.domain.normalize(cs.points))
    # jit so the repeated finite-difference evaluations reuse one compile
    loss = jax.jit(assemble_total_loss(problem))
    params = _init_params(problem, args.seed)
    report = gradcheck(lambda p: loss(p, point_arrays), params, step=1e-4, tolerance=1e-5)
    print(f"gradcheck {benchmark}: max deviation {report.max_deviation:.3e} "
          f"(tolerance {report.tolerance:g})")
    for name, dev in report.deviations.items():
        print(f"  {name}: {dev:.3e}")
    return EXIT_OK if report.passed else EXIT_RUNTIME


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="irrpinn",
        description="Irreversibility-regularized PINN benchmarks and references",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train a benchmark")
    p_run.add_argument("benchmark", nargs="?", help=f"one of {', '.join(BENCHMARKS)}")
    p_run.add_argument("--config", help="JSON configuration file")
    p_run.add_argument("--mode", choices=_MODES)
    p_run.add_argument("--profile", choices=_PROFILES)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--output-dir")
    p_run.add_argument("--set", action="append", default=[],
                       help="dot-path override, e.g. training.epochs=500")
    p_run.set_defaults(fn=cmd_run)

    p_ref = sub.add_parser("reference", help="generate reference artifacts")
    p_ref.add_argument("benchmark")
    p_ref.add_argument("--output")
    p_ref.add_argument("--nx", type=int)
    p_ref.add_argument("--dt", type=float)
    p_ref.set_defaults(fn=cmd_reference)

    p_cmp = sub.add_parser("compare", help="compare run and reference artifacts")
    p_cmp.add_argument("run_dir")
    p_cmp.add_argument("reference")
    p_cmp.add_argument("--expect-hash")
    p_cmp.add_argument("--force", action="store_true")
    p_cmp.set_defaults(fn=cmd_compare)

    p_gc = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p_gc.add_argument("benchmark")
    p_gc.add_argument("--n-points", type=int, default=16)
    p_gc.add_argument("--seed", type=int, default=0)
    p_gc.set_defaults(fn=cmd_gradcheck)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IrrPinnError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
