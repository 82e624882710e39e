"""Run configuration: YAML loading, strict validation, and object builders.

A run config has five sections: ``vehicle``, ``cycle``, ``env``,
``algorithm``, ``output``.  Validation fills defaults, rejects unknown keys
and out-of-range values before any computation starts, and resolves data
file paths (relative paths are tried against the config file's directory,
then against the packaged reference data).
"""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

from . import refdata
from .agents import ALGORITHMS, Hyperparams
from .cycle import load_cycle
from .env import (REWARD_KINDS, ConstraintSpec, EmsEnvironment, RewardSpec)
from .errors import ConfigError, DataFileError
from .maps import load_battery_model, load_fuel_cell_curves, load_torque_speed_map
from .powertrain import (GASOLINE_LHV_J_PER_G, HYDROGEN_LHV_J_PER_G,
                         RPM_TO_RAD_S, VehicleParams)
from .validation import (check_choice, check_count, check_finite,
                         check_fraction, check_in_range, check_non_negative,
                         check_positive)

VEHICLE_KINDS = ("phev", "fcev")

PRESET_DIR = Path(__file__).parent / "presets"

_VEHICLE_DEFAULTS = {
    "phev": {
        "mass": 1200.0, "wheel_radius": 0.32,
        "gear_ratios": [3.527, 2.025, 1.382, 1.058, 0.958],
        "final_ratio": 4.021,
        "engine_map": "phev_engine_map.csv",
        "engine_limits": "phev_engine_limits.csv",
        "motor_map": "phev_motor_map.csv",
        "motor_limits": "phev_motor_limits.csv",
        "battery": "phev_battery.csv",
        "battery_capacity_ah": refdata.PHEV_CAPACITY_AH,
        "battery_rint_ohm": None,
        "nominal_volts": refdata.PHEV_NOMINAL_VOLTS,
        "fuel_lhv_j_per_g": GASOLINE_LHV_J_PER_G,
        "engine_idle_rpm": 1000.0,
        "engine_max_rpm": 6500.0,
    },
    "fcev": {
        "mass": 1200.0, "wheel_radius": 0.32,
        "gear_ratios": [1.0],
        "final_ratio": 7.38,
        "motor_map": "fcev_motor_map.csv",
        "motor_limits": "fcev_motor_limits.csv",
        "battery": "fcev_battery.csv",
        "fc_power_current": "fc_power_current.csv",
        "fc_current_efficiency": "fc_current_efficiency.csv",
        "battery_capacity_ah": refdata.FCEV_CAPACITY_AH,
        "battery_rint_ohm": None,
        "nominal_volts": refdata.FCEV_NOMINAL_VOLTS,
        "fuel_lhv_j_per_g": HYDROGEN_LHV_J_PER_G,
    },
}

_BODY_DEFAULTS = {
    "air_density": 1.2, "drag_coeff": 0.3, "frontal_area": 2.2,
    "roll_coeff": 0.012, "gravity": 9.81, "grade": 0.0,
}

_CYCLE_DEFAULTS = {"path": refdata.CYCLE_FILE, "unit": "kph"}

_ENV_DEFAULTS = {
    "state_grid": 11, "action_grid": 11,
    "reward": "fuel_min", "equivalence_s": 1.0, "tau": 1.0,
    "soc_min": 0.30, "soc_max": 0.85, "w_dis": 1000.0, "w_chg": 1000.0,
    "terminate_on_violation": True, "infeasible_penalty_soc": 0.01,
    "start_soc": 0.65,
}

_ALGO_DEFAULTS = {
    "name": "qlearning", "alpha_lr": 0.1, "epsilon": 0.3, "gamma": 0.99,
    "episodes": 1000, "lambda": None, "eval_every": 100, "eval_epsilon": 0.3,
    "seed": 0,
}

_OUTPUT_DEFAULTS = {"directory": "out"}

_SECTIONS = ("vehicle", "cycle", "env", "algorithm", "output")


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    return raw


def _merged(section_name, raw_section, defaults) -> dict:
    if raw_section is None:
        raw_section = {}
    if not isinstance(raw_section, dict):
        raise ConfigError(f"section '{section_name}' must be a mapping")
    unknown = set(raw_section) - set(defaults)
    if unknown:
        raise ConfigError(
            f"unknown key(s) in '{section_name}': {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(raw_section)
    return merged


def _resolve_path(key: str, name, base_dir) -> str:
    """Absolute paths pass through; relative names are tried against the
    config directory, then the packaged data directory."""
    p = Path(name)
    if p.is_absolute():
        if not p.exists():
            raise DataFileError(f"{key}: file not found: {p}")
        return str(p)
    for root in (Path(base_dir), refdata.DATA_DIR):
        candidate = root / p
        if candidate.exists():
            return str(candidate)
    raise DataFileError(f"{key}: file not found: {name} "
                        f"(searched {base_dir} and {refdata.DATA_DIR})")


def validate_config(raw: dict, base_dir=".") -> dict:
    """Normalize and validate a raw config mapping.

    Returns a plain nested dict (safe to hash/serialize).  Raises
    ConfigError for schema/range problems and DataFileError for missing
    referenced files.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")

    vehicle_raw = raw.get("vehicle") or {}
    if not isinstance(vehicle_raw, dict):
        raise ConfigError("section 'vehicle' must be a mapping")
    kind = vehicle_raw.get("kind", "phev")
    check_choice("vehicle.kind", kind, VEHICLE_KINDS)
    vdefaults = dict(_VEHICLE_DEFAULTS[kind])
    vdefaults.update(_BODY_DEFAULTS)
    vdefaults["kind"] = kind
    vehicle = _merged("vehicle", vehicle_raw, vdefaults)

    for key in ("mass", "wheel_radius", "final_ratio", "air_density",
                "drag_coeff", "frontal_area", "roll_coeff", "gravity",
                "battery_capacity_ah", "nominal_volts", "fuel_lhv_j_per_g"):
        vehicle[key] = check_positive(f"vehicle.{key}", vehicle[key])
    vehicle["grade"] = check_finite("vehicle.grade", vehicle["grade"])
    if vehicle["battery_rint_ohm"] is not None:
        vehicle["battery_rint_ohm"] = check_positive(
            "vehicle.battery_rint_ohm", vehicle["battery_rint_ohm"])
    ratios = vehicle["gear_ratios"]
    if not isinstance(ratios, (list, tuple)) or not ratios:
        raise ConfigError("vehicle.gear_ratios must be a non-empty list")
    vehicle["gear_ratios"] = [check_positive("vehicle.gear_ratios[i]", g)
                              for g in ratios]
    if kind == "phev":
        idle = check_positive("vehicle.engine_idle_rpm", vehicle["engine_idle_rpm"])
        vmax = check_positive("vehicle.engine_max_rpm", vehicle["engine_max_rpm"])
        if idle >= vmax:
            raise ConfigError("vehicle.engine_idle_rpm must be < engine_max_rpm")

    cycle = _merged("cycle", raw.get("cycle"), _CYCLE_DEFAULTS)
    check_choice("cycle.unit", cycle["unit"], ("kph", "mps"))

    env = _merged("env", raw.get("env"), _ENV_DEFAULTS)
    env["state_grid"] = check_count("env.state_grid", env["state_grid"], minimum=2)
    env["action_grid"] = check_count("env.action_grid", env["action_grid"], minimum=2)
    check_choice("env.reward", env["reward"], REWARD_KINDS)
    env["equivalence_s"] = check_non_negative("env.equivalence_s", env["equivalence_s"])
    env["tau"] = check_finite("env.tau", env["tau"])
    env["soc_min"] = check_fraction("env.soc_min", env["soc_min"])
    env["soc_max"] = check_fraction("env.soc_max", env["soc_max"])
    if not env["soc_min"] < env["soc_max"]:
        raise ConfigError("env.soc_min must be < env.soc_max")
    env["w_dis"] = check_non_negative("env.w_dis", env["w_dis"])
    env["w_chg"] = check_non_negative("env.w_chg", env["w_chg"])
    env["infeasible_penalty_soc"] = check_non_negative(
        "env.infeasible_penalty_soc", env["infeasible_penalty_soc"])
    env["terminate_on_violation"] = bool(env["terminate_on_violation"])
    env["start_soc"] = check_fraction("env.start_soc", env["start_soc"])

    algo = _merged("algorithm", raw.get("algorithm"), _ALGO_DEFAULTS)
    check_choice("algorithm.name", algo["name"], ALGORITHMS)
    algo["alpha_lr"] = check_in_range("algorithm.alpha_lr", algo["alpha_lr"],
                                      0.0, 1.0, lo_open=True)
    algo["epsilon"] = check_fraction("algorithm.epsilon", algo["epsilon"])
    algo["gamma"] = check_fraction("algorithm.gamma", algo["gamma"])
    algo["episodes"] = check_count("algorithm.episodes", algo["episodes"], minimum=0)
    if algo["name"] == "sarsa_lambda":
        if algo["lambda"] is None:
            raise ConfigError("algorithm.lambda is required for sarsa_lambda")
        algo["lambda"] = check_fraction("algorithm.lambda", algo["lambda"])
    elif algo["lambda"] is not None:
        algo["lambda"] = check_fraction("algorithm.lambda", algo["lambda"])
    algo["eval_every"] = check_count("algorithm.eval_every", algo["eval_every"],
                                     minimum=1)
    algo["eval_epsilon"] = check_fraction("algorithm.eval_epsilon",
                                          algo["eval_epsilon"])
    algo["seed"] = check_count("algorithm.seed", algo["seed"], minimum=0)

    output = _merged("output", raw.get("output"), _OUTPUT_DEFAULTS)
    output["directory"] = str(output["directory"])

    # resolve referenced files now so validation catches missing data
    base_dir = Path(base_dir)
    file_keys = ["motor_map", "motor_limits", "battery"]
    if kind == "phev":
        file_keys += ["engine_map", "engine_limits"]
    else:
        file_keys += ["fc_power_current", "fc_current_efficiency"]
    for key in file_keys:
        vehicle[key] = _resolve_path(f"vehicle.{key}", vehicle[key], base_dir)
    cycle["path"] = _resolve_path("cycle.path", cycle["path"], base_dir)

    return {"vehicle": vehicle, "cycle": cycle, "env": env,
            "algorithm": algo, "output": output}


def load_and_validate(path) -> dict:
    path = Path(path)
    return validate_config(load_config_file(path), base_dir=path.parent)


def build_vehicle_params(vehicle: dict) -> VehicleParams:
    return VehicleParams(
        mass=vehicle["mass"], wheel_radius=vehicle["wheel_radius"],
        gear_ratios=tuple(vehicle["gear_ratios"]),
        final_ratio=vehicle["final_ratio"],
        air_density=vehicle["air_density"], drag_coeff=vehicle["drag_coeff"],
        frontal_area=vehicle["frontal_area"], roll_coeff=vehicle["roll_coeff"],
        gravity=vehicle["gravity"], grade=vehicle["grade"])


def build_env(config: dict) -> EmsEnvironment:
    """Construct the configured environment; raises DataFileError on bad data."""
    vehicle = config["vehicle"]
    kind = vehicle["kind"]
    params = build_vehicle_params(vehicle)
    cyc = load_cycle(config["cycle"]["path"], speed_unit=config["cycle"]["unit"])
    battery = load_battery_model(vehicle["battery"],
                                 capacity_ah=vehicle["battery_capacity_ah"],
                                 rint_ohm=vehicle["battery_rint_ohm"])
    env_cfg = config["env"]
    reward_spec = RewardSpec(
        kind=env_cfg["reward"], tau=env_cfg["tau"],
        equivalence_s=env_cfg["equivalence_s"],
        v_bat=vehicle["nominal_volts"],
        q_max_ah=vehicle["battery_capacity_ah"],
        q_lhv=vehicle["fuel_lhv_j_per_g"])
    constraints = ConstraintSpec(
        soc_min=env_cfg["soc_min"], soc_max=env_cfg["soc_max"],
        w_dis=env_cfg["w_dis"], w_chg=env_cfg["w_chg"],
        terminate_on_violation=env_cfg["terminate_on_violation"],
        infeasible_penalty_soc=env_cfg["infeasible_penalty_soc"])

    motor_map = load_torque_speed_map(vehicle["motor_map"], vehicle["motor_limits"])
    if kind == "phev":
        engine_map = load_torque_speed_map(vehicle["engine_map"],
                                           vehicle["engine_limits"])
        bounds = (vehicle["engine_idle_rpm"] * RPM_TO_RAD_S,
                  vehicle["engine_max_rpm"] * RPM_TO_RAD_S)
        return EmsEnvironment.for_phev(
            params, engine_map, motor_map, battery, cyc,
            n_pdem=env_cfg["state_grid"], n_soc=env_cfg["state_grid"],
            n_actions=env_cfg["action_grid"], reward_spec=reward_spec,
            constraints=constraints, start_soc=env_cfg["start_soc"],
            q_lhv=vehicle["fuel_lhv_j_per_g"], engine_speed_bounds=bounds)
    curves = load_fuel_cell_curves(vehicle["fc_power_current"],
                                   vehicle["fc_current_efficiency"])
    return EmsEnvironment.for_fcev(
        params, motor_map, battery, curves, cyc,
        n_pdem=env_cfg["state_grid"], n_soc=env_cfg["state_grid"],
        n_actions=env_cfg["action_grid"], reward_spec=reward_spec,
        constraints=constraints, start_soc=env_cfg["start_soc"],
        q_lhv_h2=vehicle["fuel_lhv_j_per_g"])


def build_hyper(config: dict):
    """(algorithm name, Hyperparams) from a validated config."""
    algo = config["algorithm"]
    lam = algo["lambda"] if algo["lambda"] is not None else 0.9
    hyper = Hyperparams(
        alpha_lr=algo["alpha_lr"], epsilon=algo["epsilon"],
        gamma=algo["gamma"], episodes=algo["episodes"],
        start_soc=config["env"]["start_soc"], lam=lam,
        eval_every=algo["eval_every"], eval_epsilon=algo["eval_epsilon"],
        seed=algo["seed"])
    return algo["name"], hyper


def set_by_path(config: dict, path: str, value) -> None:
    """Set a dotted-path key (e.g. ``algorithm.alpha_lr``) in place."""
    parts = path.split(".")
    node = config
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config path: {path}")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(f"unknown config path: {path}")
    node[parts[-1]] = value


def get_by_path(config: dict, path: str):
    node = config
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config path: {path}")
        node = node[part]
    return node


def copy_config(config: dict) -> dict:
    return copy.deepcopy(config)
