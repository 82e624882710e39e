"""Sweep harness and metric pipelines.

Sweeps are a base config plus axes of dotted config paths; the cross
product runs with per-run seeds derived from the master seed and the run's
config, so a sweep is a pure function of its spec.  Per-run failures become
failed records instead of aborting.  Exports are plain CSV/JSON with stable
formatting: re-exporting the same records is byte-identical.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import config as config_mod
from .agents import train
from .env import equivalence_factor
from .errors import ConfigError, EmptyCurve, MissingCell
from .records import (TOOL_VERSION, LearningCurve, RunRecord, canonical_json,
                      config_hash, file_content_hash, write_curve_csv,
                      write_points_csv, write_soc_csv)

HEATMAP_METRICS = ("fuel_g_per_step", "soc_delta", "equivalent_g_per_step")


class AvailabilityLabel(IntEnum):
    """Ternary run-quality label aggregated when ranking hyperparameters."""

    VALUABLE = 1
    DEFECTIVE = 0
    AWFUL = -1


@dataclass(frozen=True)
class ClassifierParams:
    """Thresholds completing the qualitative valuable/defective/awful split;
    recorded in the manifest so reports are self-describing."""

    tail_fraction: float = 0.1
    awful_reward_factor: float = 0.5
    valuable_completion: float = 0.9
    awful_termination: float = 0.5


@dataclass(frozen=True)
class SweepSpec:
    """Base config plus (dotted path, values) axes and seeded repetitions."""

    base_config: dict
    axes: tuple = ()
    repetitions: int = 1
    master_seed: int = 0
    safety_cap: int = 10_000

    @property
    def size(self) -> int:
        n = self.repetitions
        for _, values in self.axes:
            n *= len(values)
        return n


def derive_seed(master_seed: int, config: dict, repetition: int = 0) -> int:
    """Stable per-run seed from the master seed and the run's config."""
    cfg = config_mod.copy_config(config)
    cfg.get("algorithm", {}).pop("seed", None)
    payload = f"{master_seed}|{repetition}|{canonical_json(cfg)}"
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def expand_sweep(spec: SweepSpec) -> list:
    """Materialize run configs in config order (axes outer to inner,
    repetitions innermost)."""
    if spec.size > spec.safety_cap:
        raise ConfigError(
            f"sweep would launch {spec.size} runs, above the safety cap "
            f"{spec.safety_cap}")
    paths = [path for path, _ in spec.axes]
    value_lists = [list(values) for _, values in spec.axes]
    configs = []
    for combo in itertools.product(*value_lists):
        base = config_mod.copy_config(spec.base_config)
        for path, value in zip(paths, combo):
            config_mod.set_by_path(base, path, value)
        for rep in range(spec.repetitions):
            cfg = config_mod.copy_config(base)
            cfg["algorithm"]["seed"] = derive_seed(spec.master_seed, cfg, rep)
            configs.append(cfg)
    return configs


def baseline_reward(env) -> float:
    """Episode reward sum of the trivial policy (engine-only PHEV or
    load-following fuel cell), from the environment's default start SOC."""
    actions = env.baseline_actions()
    previous = env.record_info
    env.record_info = False
    env.reset()
    total = 0.0
    while True:
        tr = env.step(int(actions[env.step_index]))
        total += tr.reward
        if tr.done:
            break
    env.record_info = previous
    return total


def classify_availability(curve: LearningCurve, baseline: float,
                          params: ClassifierParams = ClassifierParams()
                          ) -> AvailabilityLabel:
    """Label a learning curve against the trivial-policy baseline.

    Valuable: final-window mean reward at or above baseline with >= 90% of
    final evaluations completing the cycle.  Awful: final reward collapsed
    below half the baseline or >= 50% of final evaluations terminated.
    Everything else is defective.
    """
    if len(curve) == 0:
        raise EmptyCurve("cannot classify an empty learning curve")
    n_tail = max(1, math.ceil(params.tail_fraction * len(curve)))
    tail_rewards = curve.reward_sums[-n_tail:]
    tail_completed = curve.completed[-n_tail:]
    r_f = float(np.mean(tail_rewards))
    completed_frac = float(np.mean(tail_completed))
    if r_f >= baseline and completed_frac >= params.valuable_completion:
        return AvailabilityLabel.VALUABLE
    if (r_f < params.awful_reward_factor * baseline
            or (1.0 - completed_frac) >= params.awful_termination):
        return AvailabilityLabel.AWFUL
    return AvailabilityLabel.DEFECTIVE


def run_single(config: dict,
               classifier: ClassifierParams = ClassifierParams()) -> RunRecord:
    """Build the environment, train, and attach baseline + availability.

    Any exception becomes a failed record carrying the error message.
    """
    try:
        env = config_mod.build_env(config)
        algorithm, hyper = config_mod.build_hyper(config)
        record = train(algorithm, env, hyper, config=config)
        record.baseline_reward_sum = baseline_reward(env)
        if len(record.curve) > 0:
            record.availability = int(classify_availability(
                record.curve, record.baseline_reward_sum, classifier))
        return record
    except Exception as exc:  # per-run isolation: sweeps must not abort
        algo = "?"
        seed = -1
        try:
            algo = config["algorithm"]["name"]
            seed = config["algorithm"]["seed"]
        except Exception:
            pass
        return RunRecord(algorithm=algo, config=config, seed=seed,
                         config_hash=config_hash(config),
                         curve=LearningCurve(), q_table=None, final_eval=None,
                         greedy_eval=None,
                         error=f"{type(exc).__name__}: {exc}")


def run_sweep(spec: SweepSpec, workers: int = 1,
              classifier: ClassifierParams = ClassifierParams()) -> list:
    """Execute every configuration; records come back in config order."""
    configs = expand_sweep(spec)
    if workers <= 1:
        return [run_single(cfg, classifier) for cfg in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_single, configs,
                             itertools.repeat(classifier)))


def availability_ranking(records: list, axes, strict: bool = True) -> list:
    """Mean availability per (parameter, value), descending within each
    parameter.  Returns (parameter, value, mean_index) rows.

    With ``strict`` (the default) every (parameter, value) pair must have at
    least one classified run; otherwise uncovered pairs are skipped, which
    keeps report export alive on partially failed sweeps.
    """
    rows = []
    for path, values in axes:
        entries = []
        for value in values:
            labels = [r.availability for r in records
                      if not r.failed and r.availability is not None
                      and config_mod.get_by_path(r.config, path) == value]
            if not labels:
                if strict:
                    raise MissingCell(f"no classified runs for {path}={value!r}")
                continue
            entries.append((value, float(np.mean(labels))))
        entries.sort(key=lambda item: -item[1])
        rows.extend((path, value, mean) for value, mean in entries)
    return rows


def _alpha_from_config(config: dict) -> float:
    vehicle = config["vehicle"]
    return equivalence_factor(config["env"]["equivalence_s"],
                              vehicle["nominal_volts"],
                              vehicle["battery_capacity_ah"],
                              vehicle["fuel_lhv_j_per_g"])


def _heatmap_metric(record: RunRecord, metric: str) -> float:
    trace = record.greedy_eval
    if trace is None or trace.length == 0:
        return float("nan")
    if metric == "fuel_g_per_step":
        return trace.fuel_g / trace.length
    if metric == "soc_delta":
        return trace.delta_soc
    if metric == "equivalent_g_per_step":
        alpha = _alpha_from_config(record.config)
        return (trace.fuel_g + alpha * trace.delta_soc) / trace.length
    raise ConfigError(f"unknown heatmap metric {metric!r}")


def energy_cost_heatmap(records: list, state_values, action_values,
                        metric: str, state_path: str = "env.state_grid",
                        action_path: str = "env.action_grid") -> np.ndarray:
    """Final-evaluation metric over the (state grid, action grid) plane.

    Raises MissingCell unless every grid combination has a successful run.
    """
    matrix = np.full((len(state_values), len(action_values)), np.nan)
    for record in records:
        if record.failed:
            continue
        try:
            i = list(state_values).index(
                config_mod.get_by_path(record.config, state_path))
            j = list(action_values).index(
                config_mod.get_by_path(record.config, action_path))
        except ValueError:
            continue
        matrix[i, j] = _heatmap_metric(record, metric)
    if np.any(np.isnan(matrix)):
        missing = np.argwhere(np.isnan(matrix))
        i, j = missing[0]
        raise MissingCell(
            f"no run for state_grid={state_values[int(i)]}, "
            f"action_grid={action_values[int(j)]}")
    return matrix


def qtable_update_density(record: RunRecord) -> dict:
    """Visit-count summary of a run's Q-table."""
    counts = record.q_table.visit_counts
    flat = counts.ravel()
    return {
        "mean": float(flat.mean()),
        "p50": float(np.percentile(flat, 50)),
        "p90": float(np.percentile(flat, 90)),
        "p99": float(np.percentile(flat, 99)),
        "max": int(flat.max()) if flat.size else 0,
        "zero_fraction": float(np.mean(flat == 0)),
        "total": int(flat.sum()),
    }


# -- sweep file loading -----------------------------------------------------

def load_sweep(path) -> SweepSpec:
    """Load a sweep spec: a base config reference plus axes."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"sweep file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: sweep root must be a mapping")
    unknown = set(raw) - {"base", "axes", "repetitions", "master_seed",
                          "safety_cap"}
    if unknown:
        raise ConfigError(f"{path}: unknown sweep key(s): {sorted(unknown)}")

    base_ref = raw.get("base")
    if isinstance(base_ref, str):
        base_path = Path(base_ref)
        if not base_path.is_absolute():
            base_path = path.parent / base_path
        base = config_mod.load_and_validate(base_path)
    elif isinstance(base_ref, dict):
        base = config_mod.validate_config(base_ref, base_dir=path.parent)
    elif base_ref is None:
        base = config_mod.validate_config({}, base_dir=path.parent)
    else:
        raise ConfigError(f"{path}: 'base' must be a path or a mapping")

    axes = []
    for i, axis in enumerate(raw.get("axes") or []):
        if not isinstance(axis, dict) or set(axis) != {"path", "values"}:
            raise ConfigError(
                f"{path}: axes[{i}] must have exactly 'path' and 'values'")
        values = axis["values"]
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{path}: axes[{i}].values must be a non-empty list")
        config_mod.get_by_path(base, axis["path"])  # path must exist
        axes.append((str(axis["path"]), tuple(values)))

    repetitions = raw.get("repetitions", 1)
    if not isinstance(repetitions, int) or repetitions < 1:
        raise ConfigError(f"{path}: repetitions must be a positive integer")
    master_seed = raw.get("master_seed", 0)
    if not isinstance(master_seed, int) or master_seed < 0:
        raise ConfigError(f"{path}: master_seed must be a non-negative integer")
    safety_cap = raw.get("safety_cap", 10_000)
    if not isinstance(safety_cap, int) or safety_cap < 1:
        raise ConfigError(f"{path}: safety_cap must be a positive integer")
    return SweepSpec(base_config=base, axes=tuple(axes),
                     repetitions=repetitions, master_seed=master_seed,
                     safety_cap=safety_cap)


# -- export -----------------------------------------------------------------

def _flatten(config: dict, prefix: str = "") -> dict:
    flat = {}
    for key in sorted(config):
        value = config[key]
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, prefix=f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return canonical_json(list(value)).replace(",", ";")
    return str(value)


def export_report(records: list, out_dir, *, master_seed: Optional[int] = None,
                  axes=(), data_files=(), heatmap_grids=None,
                  classifier: ClassifierParams = ClassifierParams()) -> list:
    """Write per-run and sweep-level CSVs plus a manifest.

    ``heatmap_grids``, when given as (state_values, action_values), adds one
    ``heatmap_<metric>.csv`` per metric.  Returns the written paths.
    Deterministic: identical records produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    for i, record in enumerate(records):
        run_dir = out / f"run_{i:04d}"
        run_dir.mkdir(exist_ok=True)
        if record.failed:
            continue
        write_curve_csv(record.curve, run_dir / "curve.csv")
        written.append(run_dir / "curve.csv")
        if record.greedy_eval is not None:
            write_soc_csv(record.greedy_eval, run_dir / "soc_trajectory.csv")
            write_points_csv(record.greedy_eval, run_dir / "operating_points.csv")
            written += [run_dir / "soc_trajectory.csv",
                        run_dir / "operating_points.csv"]

    # summary.csv: one row per run, config columns then metrics
    keys = sorted({k for r in records for k in _flatten(r.config)})
    summary_path = out / "summary.csv"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("run," + ",".join(keys)
                 + ",fuel_g,delta_soc,reward_sum,availability,error\n")
        for i, record in enumerate(records):
            flat = _flatten(record.config)
            cells = [str(i)] + [_cell(flat.get(k)) for k in keys]
            if record.failed or record.greedy_eval is None:
                cells += ["", "", "", "", _cell(record.error or "")]
            else:
                curve_last = (repr(record.curve.reward_sums[-1])
                              if len(record.curve) else "")
                cells += [repr(record.greedy_eval.fuel_g),
                          repr(record.greedy_eval.delta_soc),
                          curve_last,
                          _cell(record.availability), ""]
            fh.write(",".join(cells) + "\n")
    written.append(summary_path)

    if axes:
        rows = availability_ranking([r for r in records if not r.failed], axes,
                                    strict=False)
        availability_path = out / "availability.csv"
        with open(availability_path, "w", encoding="utf-8") as fh:
            fh.write("parameter,value,mean_index\n")
            for parameter, value, mean in rows:
                fh.write(f"{parameter},{_cell(value)},{repr(mean)}\n")
        written.append(availability_path)

    if heatmap_grids is not None:
        state_values, action_values = heatmap_grids
        for metric in HEATMAP_METRICS:
            matrix = energy_cost_heatmap(records, state_values, action_values,
                                         metric)
            p = out / f"heatmap_{metric}.csv"
            with open(p, "w", encoding="utf-8") as fh:
                fh.write("state_grid\\action_grid,"
                         + ",".join(_cell(a) for a in action_values) + "\n")
                for i, sv in enumerate(state_values):
                    fh.write(_cell(sv) + ","
                             + ",".join(repr(float(x)) for x in matrix[i])
                             + "\n")
            written.append(p)

    manifest = {
        "tool_version": TOOL_VERSION,
        "master_seed": master_seed,
        "classifier": {
            "tail_fraction": classifier.tail_fraction,
            "awful_reward_factor": classifier.awful_reward_factor,
            "valuable_completion": classifier.valuable_completion,
            "awful_termination": classifier.awful_termination,
        },
        "runs": [
            {"index": i, "config_hash": r.config_hash, "seed": r.seed,
             "algorithm": r.algorithm, "availability": r.availability,
             "error": r.error}
            for i, r in enumerate(records)
        ],
        "data_files": {str(p): file_content_hash(p) for p in data_files},
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(manifest))
        fh.write("\n")
    written.append(manifest_path)
    return written


def input_data_files(config: dict) -> list:
    """Data files a run config references (for manifest content hashes)."""
    vehicle = config["vehicle"]
    keys = ["motor_map", "motor_limits", "battery"]
    if vehicle["kind"] == "phev":
        keys += ["engine_map", "engine_limits"]
    else:
        keys += ["fc_power_current", "fc_current_efficiency"]
    files = [vehicle[k] for k in keys]
    files.append(config["cycle"]["path"])
    return sorted(set(files))
