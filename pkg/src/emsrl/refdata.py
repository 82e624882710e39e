"""Synthetic reference vehicles, component maps, and a reference drive cycle.

Tabulated component maps and battery curves are rarely redistributable, so
runnable reference datasets are generated here from smooth parametric
forms: an engine efficiency island at mid speed/torque, motor efficiency
bowls symmetric in torque sign, a fuel-cell efficiency curve peaking at
partial load, and piecewise-linear battery tables.  Real component data
drops in through the documented CSV formats at any time.

Run ``python -m emsrl.refdata [out_dir]`` to (re)generate the packaged CSVs.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .cycle import KPH_TO_MPS, DriveCycle, save_cycle
from .maps import (save_battery_model, save_fuel_cell_curves,
                   save_torque_speed_map)
from .powertrain import (RPM_TO_RAD_S, BatteryModel, FuelCellCurves,
                         TorqueSpeedMap, VehicleParams)

# PHEV reference; wheel radius 0.32 m (configurable).
PHEV_CAPACITY_AH = 20.8
PHEV_NOMINAL_VOLTS = 350.0
ENGINE_IDLE_SPEED = 1000.0 * RPM_TO_RAD_S
ENGINE_MAX_SPEED = 6500.0 * RPM_TO_RAD_S
ENGINE_MAX_TORQUE = 165.0
PHEV_MOTOR_MAX_TORQUE = 307.0
PHEV_MOTOR_MAX_POWER = 126_000.0

# FCEV reference.  A 3500 rpm motor ceiling cannot reach highway speeds
# through the 7.38 differential with 0.32 m wheels, so the synthetic speed
# axis extends to ~8200 rpm while keeping the torque/power envelope.
FCEV_CAPACITY_AH = 88.0
FCEV_NOMINAL_VOLTS = 600.0
FCEV_RINT_OHM = 0.06317
FCEV_MOTOR_MAX_TORQUE = 2500.0
FCEV_MOTOR_MAX_POWER = 249_000.0
FCEV_MOTOR_MAX_SPEED = 860.0
FC_MAX_POWER_W = 55_000.0

DATA_DIR = Path(__file__).parent / "data"

CYCLE_FILE = "cycle_wltc3_style.csv"


def phev_vehicle_params(**overrides) -> VehicleParams:
    base = dict(
        mass=1200.0,
        wheel_radius=0.32,
        gear_ratios=(3.527, 2.025, 1.382, 1.058, 0.958),
        final_ratio=4.021,
    )
    base.update(overrides)
    return VehicleParams(**base)


def fcev_vehicle_params(**overrides) -> VehicleParams:
    base = dict(
        mass=1200.0,
        wheel_radius=0.32,
        gear_ratios=(1.0,),
        final_ratio=7.38,
    )
    base.update(overrides)
    return VehicleParams(**base)


def phev_engine_map() -> TorqueSpeedMap:
    """Engine efficiency island peaking at 0.36 around mid speed/torque."""
    speed = np.linspace(ENGINE_IDLE_SPEED, ENGINE_MAX_SPEED, 25)
    torque = np.linspace(0.0, ENGINE_MAX_TORQUE, 23)
    w, t = np.meshgrid(speed, torque)
    r2 = ((w - 250.0) / 280.0) ** 2 + ((t - 70.0) / 80.0) ** 2
    eff = 0.16 + 0.22 * np.exp(-(r2 ** 2))
    w_mid = 0.5 * (ENGINE_IDLE_SPEED + ENGINE_MAX_SPEED)
    w_half = 0.5 * (ENGINE_MAX_SPEED - ENGINE_IDLE_SPEED)
    t_max = ENGINE_MAX_TORQUE * (1.0 - 0.25 * ((speed - w_mid) / w_half) ** 2)
    return TorqueSpeedMap(speed_axis=speed, torque_axis=torque, efficiency=eff,
                          max_torque_curve=t_max,
                          min_torque_curve=np.zeros_like(speed))


def _motor_map(max_speed, max_torque, max_power, w_scale, t_scale) -> TorqueSpeedMap:
    # Efficiency rises smoothly away from zero speed/torque, symmetric in
    # torque sign; band (0.55, 0.92).
    speed = np.linspace(0.0, max_speed, 25)
    torque = np.linspace(-max_torque, max_torque, 25)
    w, t = np.meshgrid(speed, torque)
    eff = 0.55 + 0.37 * (1.0 - np.exp(-w / w_scale)) * (1.0 - np.exp(-np.abs(t) / t_scale))
    with np.errstate(divide="ignore"):
        power_cap = np.where(speed > 0, max_power / np.maximum(speed, 1e-12), np.inf)
    t_max = np.minimum(max_torque, power_cap)
    return TorqueSpeedMap(speed_axis=speed, torque_axis=torque, efficiency=eff,
                          max_torque_curve=t_max, min_torque_curve=-t_max)


def phev_motor_map() -> TorqueSpeedMap:
    return _motor_map(ENGINE_MAX_SPEED, PHEV_MOTOR_MAX_TORQUE,
                      PHEV_MOTOR_MAX_POWER, w_scale=60.0, t_scale=15.0)


def fcev_motor_map() -> TorqueSpeedMap:
    return _motor_map(FCEV_MOTOR_MAX_SPEED, FCEV_MOTOR_MAX_TORQUE,
                      FCEV_MOTOR_MAX_POWER, w_scale=100.0, t_scale=60.0)


def fcev_fuel_cell_curves() -> FuelCellCurves:
    """Linear polarization stack reaching 55 kW, efficiency peaking at part load."""
    # P(I) = I * (300 - 0.25 I); solve for the 55 kW current.
    i_max = 600.0 - math.sqrt(140_000.0)
    current = np.linspace(0.0, i_max, 40)
    power = current * (300.0 - 0.25 * current)
    power[-1] = FC_MAX_POWER_W  # snap the fp solve to the rated power
    eff = (0.62 - 0.17 * current / i_max) * (1.0 - 0.25 * np.exp(-current / 8.0))
    return FuelCellCurves(power_axis=power, current_curve=current,
                          current_axis=current, efficiency_curve=eff,
                          max_power=FC_MAX_POWER_W)


def phev_battery() -> BatteryModel:
    soc = np.linspace(0.0, 1.0, 11)
    voc = np.array([315.0, 330.0, 340.0, 345.0, 348.0, 350.0,
                    352.0, 354.0, 356.0, 360.0, 368.0])
    rint = np.array([0.16, 0.14, 0.12, 0.11, 0.105, 0.10,
                     0.10, 0.10, 0.105, 0.11, 0.12])
    return BatteryModel(capacity_ah=PHEV_CAPACITY_AH, soc_points=soc,
                        ocv_volts=voc, rint_ohm=rint)


def fcev_battery() -> BatteryModel:
    soc = np.linspace(0.0, 1.0, 11)
    voc = np.array([560.0, 575.0, 585.0, 592.0, 596.0, 600.0,
                    603.0, 606.0, 610.0, 615.0, 625.0])
    return BatteryModel(capacity_ah=FCEV_CAPACITY_AH, soc_points=soc,
                        ocv_volts=voc, rint_ohm=np.float64(FCEV_RINT_OHM))


# Micro-trips as (ramp_start, hold_start, ramp_down_start, end, peak_kph).
# Four phases mirror the class-3 light-duty test structure: low to 589 s,
# medium to 1022 s, high to 1477 s, extra-high to 1800 s, with the standard
# phase peak speeds (56.5 / 76.6 / 97.4 / 131.3 km/h).
_TRIPS = (
    (11, 41, 81, 101, 30.0),
    (121, 161, 231, 266, 56.5),
    (286, 316, 356, 381, 45.0),
    (401, 441, 521, 561, 50.0),
    (599, 659, 789, 839, 76.6),
    (859, 899, 959, 999, 60.0),
    (1032, 1112, 1367, 1447, 97.4),
    (1487, 1587, 1727, 1795, 131.3),
)


def reference_cycle(n: int = 1800, dt: float = 1.0) -> DriveCycle:
    """Deterministic 1800 s, 1 Hz cycle with class-3-style phase structure.

    A stand-in for the standard test-cycle file, which ships separately;
    any real cycle CSV drops in through the config's cycle path.
    """
    v_kph = np.zeros(n)
    for t0, t1, t2, t3, peak in _TRIPS:
        for t in range(t0, min(t3, n)):
            if t < t1:
                x = (t - t0) / (t1 - t0)
                f = 0.5 * (1.0 - math.cos(math.pi * x))
            elif t < t2:
                f = 1.0
            else:
                x = (t - t2) / (t3 - t2)
                f = 0.5 * (1.0 + math.cos(math.pi * x))
            v_kph[t] = peak * f
    return DriveCycle(name="cycle_wltc3_style", dt=dt, speeds=v_kph * KPH_TO_MPS)


def write_reference_data(out_dir=None) -> list:
    """Write all reference CSVs; returns the list of paths written."""
    out = Path(out_dir) if out_dir is not None else DATA_DIR
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _w(name):
        p = out / name
        written.append(p)
        return p

    save_torque_speed_map(phev_engine_map(), _w("phev_engine_map.csv"),
                          _w("phev_engine_limits.csv"))
    save_torque_speed_map(phev_motor_map(), _w("phev_motor_map.csv"),
                          _w("phev_motor_limits.csv"))
    save_torque_speed_map(fcev_motor_map(), _w("fcev_motor_map.csv"),
                          _w("fcev_motor_limits.csv"))
    save_fuel_cell_curves(fcev_fuel_cell_curves(), _w("fc_power_current.csv"),
                          _w("fc_current_efficiency.csv"))
    save_battery_model(phev_battery(), _w("phev_battery.csv"))
    save_battery_model(fcev_battery(), _w("fcev_battery.csv"))
    cycle = reference_cycle()
    save_cycle(cycle, _w(CYCLE_FILE), speed_unit="kph")
    return written


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else None
    for path in write_reference_data(target):
        print(path)
