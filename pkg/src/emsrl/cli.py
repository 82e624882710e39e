"""Command-line entry points: simulate, train, sweep, oracle-check.

Exit codes: 0 success, 1 failed checks or runtime error, 2 config error,
3 data-file error.  Relative output directories are rooted at $EMSRL_OUT
when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as config_mod
from . import experiments
from .agents import evaluate_policy, run_fixed_policy, train
from .checks import run_all_checks
from .env import discretize
from .errors import ConfigError, DataFileError, EmsError
from .records import (config_hash, load_qtable, save_qtable, write_curve_csv,
                      write_points_csv, write_soc_csv)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3

OUTPUT_ROOT_ENV = "EMSRL_OUT"


def _out_dir(args_out, config) -> Path:
    out = Path(args_out) if args_out else Path(config["output"]["directory"])
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_run_config(args) -> dict:
    config = config_mod.load_and_validate(args.config)
    if args.seed is not None:
        config["algorithm"]["seed"] = args.seed
    return config


def _write_eval_outputs(trace, out: Path, summary_extra=None) -> None:
    write_soc_csv(trace, out / "soc_trajectory.csv")
    write_points_csv(trace, out / "operating_points.csv")
    summary = {
        "fuel_g": trace.fuel_g,
        "delta_soc": trace.delta_soc,
        "reward_sum": trace.reward_sum,
        "length": trace.length,
        "completed": trace.completed,
    }
    if summary_extra:
        summary.update(summary_extra)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_simulate(args) -> int:
    config = _load_run_config(args)
    env = config_mod.build_env(config)
    out = _out_dir(args.out, config)
    kind, _, value = args.policy.partition(":")
    if kind == "fixed":
        try:
            command = float(value)
        except ValueError:
            raise ConfigError(f"--policy fixed:VALUE needs a number, got {value!r}")
        grid = env.action_spec.grid
        if not grid.lo <= command <= grid.hi:
            raise ConfigError(
                f"--policy fixed value {command} outside [{grid.lo}, {grid.hi}]")
        trace = run_fixed_policy(env, discretize(grid, command))
    elif kind == "qtable":
        q, meta = load_qtable(value)
        if (q.n_states, q.n_actions) != (env.n_states, env.n_actions):
            raise DataFileError(
                f"{value}: table shape ({q.n_states}, {q.n_actions}) does not "
                f"match environment ({env.n_states}, {env.n_actions})")
        trace = evaluate_policy(env, q.values, 0.0, None)
    else:
        raise ConfigError("--policy must be fixed:VALUE or qtable:PATH")
    _write_eval_outputs(trace, out, {"config_hash": config_hash(config)})
    print(f"simulate: fuel {trace.fuel_g:.3f} g, dSOC {trace.delta_soc:+.5f}, "
          f"steps {trace.length}, outputs in {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_run_config(args)
    env = config_mod.build_env(config)
    algorithm, hyper = config_mod.build_hyper(config)
    out = _out_dir(args.out, config)
    record = train(algorithm, env, hyper, config=config)
    save_qtable(record.q_table, out / "qtable.csv", {
        "config_hash": record.config_hash,
        "seed": record.seed,
        "algorithm": algorithm,
        "state_grid": {"pdem": {"lo": env.state_spec.pdem_grid.lo,
                                "hi": env.state_spec.pdem_grid.hi,
                                "n": env.state_spec.pdem_grid.n},
                       "soc": {"lo": env.state_spec.soc_grid.lo,
                               "hi": env.state_spec.soc_grid.hi,
                               "n": env.state_spec.soc_grid.n}},
        "action_grid": {"kind": env.action_spec.kind,
                        "lo": env.action_spec.grid.lo,
                        "hi": env.action_spec.grid.hi,
                        "n": env.action_spec.grid.n},
    })
    write_curve_csv(record.curve, out / "curve.csv")
    _write_eval_outputs(record.greedy_eval, out,
                        {"config_hash": record.config_hash,
                         "seed": record.seed, "algorithm": algorithm})
    print(f"train[{algorithm}]: {hyper.episodes} episodes, greedy fuel "
          f"{record.greedy_eval.fuel_g:.3f} g, dSOC "
          f"{record.greedy_eval.delta_soc:+.5f}, outputs in {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = experiments.load_sweep(args.config)
    if args.seed is not None:
        spec = experiments.SweepSpec(
            base_config=spec.base_config, axes=spec.axes,
            repetitions=spec.repetitions, master_seed=args.seed,
            safety_cap=spec.safety_cap)
    out = _out_dir(args.out, spec.base_config)
    records = experiments.run_sweep(spec, workers=args.workers)
    axis_paths = [path for path, _ in spec.axes]
    heatmap_grids = None
    if "env.state_grid" in axis_paths and "env.action_grid" in axis_paths:
        heatmap_grids = (
            list(spec.axes[axis_paths.index("env.state_grid")][1]),
            list(spec.axes[axis_paths.index("env.action_grid")][1]))
    experiments.export_report(
        records, out, master_seed=spec.master_seed, axes=spec.axes,
        data_files=experiments.input_data_files(spec.base_config),
        heatmap_grids=heatmap_grids)
    ok = sum(1 for r in records if not r.failed)
    print(f"sweep: {ok}/{len(records)} runs succeeded, report in {out}")
    for i, record in enumerate(records):
        if record.failed:
            print(f"  run {i:04d} failed: {record.error}", file=sys.stderr)
    return EXIT_OK if ok >= 1 else EXIT_FAIL


def cmd_oracle_check(args) -> int:
    failures = 0
    for result in run_all_checks():
        status = "ok" if result.passed else "FAIL"
        print(f"[{status}] {result.name}: residual {result.residual:.3e} "
              f"(tolerance {result.tolerance:.1e})")
        failures += 0 if result.passed else 1
    return EXIT_OK if failures == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emsrl",
        description="Tabular RL energy management: simulate, train, sweep.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one evaluation episode")
    p_sim.add_argument("--config", required=True, help="run config YAML")
    p_sim.add_argument("--policy", required=True,
                       help="fixed:VALUE (physical command) or qtable:PATH")
    p_sim.add_argument("--out", default=None, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_train = sub.add_parser("train", help="train one run and persist it")
    p_train.add_argument("--config", required=True, help="run config YAML")
    p_train.add_argument("--out", default=None)
    p_train.add_argument("--seed", type=int, default=None,
                         help="override algorithm.seed")
    p_train.set_defaults(func=cmd_train)

    p_sweep = sub.add_parser("sweep", help="run a sweep spec and export a report")
    p_sweep.add_argument("--config", required=True, help="sweep spec YAML")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="override the sweep master seed")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("oracle-check",
                             help="verify learners against exact fixtures")
    p_check.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFileError as exc:
        print(f"data-file error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EmsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
