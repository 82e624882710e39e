"""Backward (kinematic) vehicle and component models.

Everything here is a pure function of its inputs: road load from the speed
trace, gear selection, efficiency-map lookups, fuel-cell curves, a battery
equivalent circuit, and one-step plant evaluation for a parallel PHEV and a
fuel-cell EV.  The split helpers (:func:`phev_split`, :func:`fcev_motor_state`)
work elementwise on arrays so an environment can precompute whole cycles;
the ``*_plant_step`` functions are the scalar one-step contracts built on
the same code path.

Sign conventions: positive battery power discharges (current > 0), negative
charges.  Motor torque < 0 means regeneration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import PowerInfeasible, PowerOutOfRange
from .validation import ConfigError, check_strictly_increasing

# Lower heating values in J/g.  Used wherever fuel mass is derived from
# delivered energy and an efficiency.
GASOLINE_LHV_J_PER_G = 42_600.0
HYDROGEN_LHV_J_PER_G = 120_000.0

RPM_TO_RAD_S = 2.0 * math.pi / 60.0

# Reference engine operating band (1000..6500 rpm) in rad/s; overridable
# per call for other engines.
DEFAULT_ENGINE_SPEED_BOUNDS = (1000.0 * RPM_TO_RAD_S, 6500.0 * RPM_TO_RAD_S)


@dataclass(frozen=True)
class VehicleParams:
    """Chassis and driveline constants for the longitudinal model."""

    mass: float                      # kg
    wheel_radius: float              # m
    gear_ratios: tuple               # unitless, strictly decreasing (1st..top)
    final_ratio: float               # unitless differential ratio
    air_density: float = 1.2         # kg/m^3
    drag_coeff: float = 0.3
    frontal_area: float = 2.2        # m^2
    roll_coeff: float = 0.012
    gravity: float = 9.81            # m/s^2
    grade: float = 0.0               # road slope in radians

    def __post_init__(self):
        for name in ("mass", "wheel_radius", "final_ratio", "air_density",
                     "drag_coeff", "frontal_area", "roll_coeff", "gravity"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"vehicle.{name} must be > 0")
        if not math.isfinite(self.grade):
            raise ConfigError("vehicle.grade must be finite")
        ratios = tuple(float(g) for g in self.gear_ratios)
        if not ratios:
            raise ConfigError("vehicle.gear_ratios must be non-empty")
        if any(b >= a for a, b in zip(ratios, ratios[1:])):
            raise ConfigError("vehicle.gear_ratios must be strictly decreasing")
        object.__setattr__(self, "gear_ratios", ratios)


@dataclass(frozen=True)
class TorqueSpeedMap:
    """Quasi-static component efficiency over a (torque, speed) grid.

    ``efficiency[i, j]`` is the efficiency at ``torque_axis[i]`` Nm and
    ``speed_axis[j]`` rad/s, in (0, 1].  The limit curves give the admissible
    torque band per speed grid point (min is negative for motors, 0 for
    engines).
    """

    speed_axis: np.ndarray           # rad/s, strictly increasing
    torque_axis: np.ndarray          # Nm, strictly increasing
    efficiency: np.ndarray = field(repr=False)
    max_torque_curve: np.ndarray = field(repr=False)
    min_torque_curve: np.ndarray = field(repr=False)

    def __post_init__(self):
        speed = check_strictly_increasing("map speed_axis", self.speed_axis)
        torque = check_strictly_increasing("map torque_axis", self.torque_axis)
        eff = np.asarray(self.efficiency, dtype=float)
        if eff.shape != (torque.size, speed.size):
            raise ConfigError(
                f"map efficiency shape {eff.shape} != "
                f"(n_torque={torque.size}, n_speed={speed.size})")
        if not np.all((eff > 0) & (eff <= 1)):
            raise ConfigError("map efficiency values must lie in (0, 1]")
        tmax = np.asarray(self.max_torque_curve, dtype=float)
        tmin = np.asarray(self.min_torque_curve, dtype=float)
        if tmax.shape != speed.shape or tmin.shape != speed.shape:
            raise ConfigError("map limit curves must match the speed axis length")
        if np.any(tmax < tmin):
            raise ConfigError("map max_torque_curve must be >= min_torque_curve")
        for name, arr in (("speed_axis", speed), ("torque_axis", torque),
                          ("efficiency", eff), ("max_torque_curve", tmax),
                          ("min_torque_curve", tmin)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class FuelCellCurves:
    """Stack characteristics: power->current and current->efficiency tables."""

    power_axis: np.ndarray           # W, strictly increasing from 0
    current_curve: np.ndarray = field(repr=False)   # A per power point
    current_axis: np.ndarray = field(repr=False)    # A, strictly increasing
    efficiency_curve: np.ndarray = field(repr=False)  # (0,1] per current point
    max_power: float = None

    def __post_init__(self):
        power = check_strictly_increasing("fuel-cell power_axis", self.power_axis)
        current = np.asarray(self.current_curve, dtype=float)
        if current.shape != power.shape:
            raise ConfigError("fuel-cell current_curve must match power_axis length")
        caxis = check_strictly_increasing("fuel-cell current_axis", self.current_axis)
        eff = np.asarray(self.efficiency_curve, dtype=float)
        if eff.shape != caxis.shape:
            raise ConfigError("fuel-cell efficiency_curve must match current_axis length")
        if not np.all((eff > 0) & (eff <= 1)):
            raise ConfigError("fuel-cell efficiency must lie in (0, 1]")
        max_power = float(power[-1]) if self.max_power is None else float(self.max_power)
        if max_power <= 0:
            raise ConfigError("fuel-cell max_power must be > 0")
        for name, arr in (("power_axis", power), ("current_curve", current),
                          ("current_axis", caxis), ("efficiency_curve", eff)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "max_power", max_power)


@dataclass(frozen=True)
class BatteryModel:
    """Equivalent-circuit battery: OCV and internal resistance vs SOC."""

    capacity_ah: float
    soc_points: np.ndarray           # ascending SOC grid in [0, 1]
    ocv_volts: np.ndarray = field(repr=False)
    rint_ohm: np.ndarray = field(repr=False)   # scalar accepted, broadcast
    soc_hard_floor: float = 0.0
    soc_hard_ceiling: float = 1.0

    def __post_init__(self):
        if not self.capacity_ah > 0:
            raise ConfigError("battery capacity_ah must be > 0")
        soc = check_strictly_increasing("battery soc_points", self.soc_points)
        if soc[0] < 0 or soc[-1] > 1:
            raise ConfigError("battery soc_points must lie in [0, 1]")
        ocv = np.asarray(self.ocv_volts, dtype=float)
        if ocv.shape != soc.shape:
            raise ConfigError("battery ocv_volts must match soc_points length")
        if np.any(ocv <= 0):
            raise ConfigError("battery open-circuit voltage must be > 0")
        rint = np.asarray(self.rint_ohm, dtype=float)
        if rint.ndim == 0:
            rint = np.full_like(soc, float(rint))
        if rint.shape != soc.shape:
            raise ConfigError("battery rint_ohm must be scalar or match soc_points")
        if np.any(rint <= 0):
            raise ConfigError("battery internal resistance must be > 0")
        if not 0 <= self.soc_hard_floor < self.soc_hard_ceiling <= 1:
            raise ConfigError("battery SOC hard limits must satisfy 0 <= floor < ceiling <= 1")
        for name, arr in (("soc_points", soc), ("ocv_volts", ocv), ("rint_ohm", rint)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def ocv(self, soc: float) -> float:
        return float(np.interp(soc, self.soc_points, self.ocv_volts))

    def resistance(self, soc: float) -> float:
        return float(np.interp(soc, self.soc_points, self.rint_ohm))


class OperatingPoint(NamedTuple):
    """Realized component point: (torque Nm | power W, speed rad/s | current A,
    efficiency).  Fuel-cell points carry (power, current, efficiency)."""

    load: float
    speed: float
    efficiency: float


@dataclass(frozen=True)
class WheelDemand:
    """Road load resolved at the wheel for one cycle step."""

    force: float         # F_w, N
    wheel_torque: float  # Nm
    wheel_speed: float   # rad/s
    power: float         # W, equals wheel_torque * wheel_speed


@dataclass(frozen=True)
class StepOutcome:
    """Result of evaluating one plant step."""

    fuel_g: float                 # fuel or hydrogen mass consumed, grams
    delta_soc: float
    battery_current_a: float
    motor_point: OperatingPoint
    engine_point: Optional[OperatingPoint] = None
    fc_point: Optional[OperatingPoint] = None
    clamped: bool = False


def road_load(p: VehicleParams, v: float, a: float) -> WheelDemand:
    """Total wheel force/torque/power for speed ``v`` (m/s) and accel ``a``.

    Rolling resistance is zeroed at standstill so a parked vehicle demands
    nothing.
    """
    f_air = 0.5 * p.air_density * p.drag_coeff * p.frontal_area * v * v
    f_roll = math.cos(p.grade) * p.roll_coeff * p.mass * p.gravity if v > 0 else 0.0
    f_gravity = math.sin(p.grade) * p.mass * p.gravity
    f_trac = p.mass * a
    force = f_trac + f_air + f_roll + f_gravity
    torque = force * p.wheel_radius
    speed = v / p.wheel_radius
    return WheelDemand(force=force, wheel_torque=torque, wheel_speed=speed,
                       power=torque * speed)


def wheel_demand_series(p: VehicleParams, cycle) -> dict:
    """Vectorized :func:`road_load` over a whole cycle.

    Returns arrays keyed ``force, wheel_torque, wheel_speed, power`` with one
    entry per cycle step.
    """
    v = cycle.speeds
    a = cycle.accelerations()
    f_air = 0.5 * p.air_density * p.drag_coeff * p.frontal_area * v * v
    f_roll = np.where(v > 0, math.cos(p.grade) * p.roll_coeff * p.mass * p.gravity, 0.0)
    f_gravity = math.sin(p.grade) * p.mass * p.gravity
    force = p.mass * a + f_air + f_roll + f_gravity
    torque = force * p.wheel_radius
    speed = v / p.wheel_radius
    return {"force": force, "wheel_torque": torque, "wheel_speed": speed,
            "power": torque * speed}


def select_gear(p: VehicleParams, wheel_speed: float, engine_speed_bounds) -> int:
    """Pick the highest gear keeping engine speed inside the given band.

    If no gear satisfies the band (standstill, crawl), return the gear with
    the smallest band violation, preferring lower gears on ties.
    """
    lo, hi = engine_speed_bounds
    n = len(p.gear_ratios)
    for i in range(n - 1, -1, -1):
        w_e = wheel_speed * p.gear_ratios[i] * p.final_ratio
        if lo <= w_e <= hi:
            return i
    best, best_violation = 0, math.inf
    for i in range(n):
        w_e = wheel_speed * p.gear_ratios[i] * p.final_ratio
        violation = max(lo - w_e, 0.0) + max(w_e - hi, 0.0)
        if violation < best_violation:
            best, best_violation = i, violation
    return best


def map_lookup(m: TorqueSpeedMap, torque, speed):
    """Bilinear efficiency interpolation; out-of-grid queries clamp to edges.

    Works elementwise on arrays.
    """
    ta, sa, eff = m.torque_axis, m.speed_axis, m.efficiency
    t = np.clip(torque, ta[0], ta[-1])
    w = np.clip(speed, sa[0], sa[-1])
    ti = np.clip(np.searchsorted(ta, t, side="right") - 1, 0, ta.size - 2)
    wi = np.clip(np.searchsorted(sa, w, side="right") - 1, 0, sa.size - 2)
    ft = (t - ta[ti]) / (ta[ti + 1] - ta[ti])
    fw = (w - sa[wi]) / (sa[wi + 1] - sa[wi])
    return (eff[ti, wi] * (1 - ft) * (1 - fw)
            + eff[ti + 1, wi] * ft * (1 - fw)
            + eff[ti, wi + 1] * (1 - ft) * fw
            + eff[ti + 1, wi + 1] * ft * fw)


def torque_limits(m: TorqueSpeedMap, speed):
    """(T_min, T_max) at ``speed``, linearly interpolated and edge-clamped."""
    t_min = np.interp(speed, m.speed_axis, m.min_torque_curve)
    t_max = np.interp(speed, m.speed_axis, m.max_torque_curve)
    return t_min, t_max


def motor_power(torque, speed, efficiency):
    """Electrical power for mechanical (torque, speed) at the given efficiency.

    Motoring draws more than the mechanical power; regeneration returns less.
    """
    mech = torque * speed
    return np.where(torque >= 0, mech / efficiency, mech * efficiency)


def engine_fuel_rate(m: TorqueSpeedMap, torque, speed, q_lhv: float = GASOLINE_LHV_J_PER_G):
    """Fuel mass flow in g/s from delivered power and map efficiency.

    Zero at zero load; idle fuel is not modeled.
    """
    power = torque * speed
    eff = map_lookup(m, torque, speed)
    return np.where(power > 0, power / (eff * q_lhv), 0.0)


def fc_hydrogen_rate(curves: FuelCellCurves, p_fc: float,
                     q_lhv_h2: float = HYDROGEN_LHV_J_PER_G):
    """Resolve a fuel-cell power command to (current A, efficiency, g/s H2)."""
    if p_fc < 0 or p_fc > curves.max_power:
        raise PowerOutOfRange(
            f"fuel-cell power {p_fc} W outside [0, {curves.max_power}]")
    i_fc = float(np.interp(p_fc, curves.power_axis, curves.current_curve))
    e_fc = float(np.interp(i_fc, curves.current_axis, curves.efficiency_curve))
    rate = p_fc / (e_fc * q_lhv_h2) if p_fc > 0 else 0.0
    return i_fc, e_fc, rate


def battery_current(b: BatteryModel, soc: float, p_batt: float) -> float:
    """Terminal current solving P = V_oc*I - I^2*R_int (physical root).

    Positive for discharge, negative for charge.

    Raises:
        PowerInfeasible: demand exceeds the battery peak power
            (V_oc^2 < 4*R_int*P).
    """
    voc = b.ocv(soc)
    rint = b.resistance(soc)
    disc = voc * voc - 4.0 * rint * p_batt
    if disc < 0:
        raise PowerInfeasible(
            f"battery cannot supply {p_batt:.1f} W at SOC {soc:.3f} "
            f"(peak {voc * voc / (4 * rint):.1f} W)")
    return (voc - math.sqrt(disc)) / (2.0 * rint)


def soc_delta(b: BatteryModel, current: float, dt: float) -> float:
    """Coulomb-counting SOC change for ``current`` amps over ``dt`` seconds."""
    return -(current * dt) / (3600.0 * b.capacity_ah)


def phev_shaft_state(p: VehicleParams, demand: WheelDemand,
                     engine_speed_bounds=DEFAULT_ENGINE_SPEED_BOUNDS):
    """Gear choice plus shaft torque/speed seen by engine and motor.

    Engine speed is the shaft speed clamped into its operating band (idle
    clamp at standstill); driveline losses are not modeled.
    """
    gear = select_gear(p, demand.wheel_speed, engine_speed_bounds)
    ratio = p.gear_ratios[gear] * p.final_ratio
    t_shaft = demand.wheel_torque / ratio
    w_shaft = demand.wheel_speed * ratio
    w_engine = min(max(w_shaft, engine_speed_bounds[0]), engine_speed_bounds[1])
    return gear, t_shaft, w_shaft, w_engine


def phev_split(engine_map: TorqueSpeedMap, motor_map: TorqueSpeedMap,
               u, t_shaft, w_shaft, w_engine,
               q_lhv: float = GASOLINE_LHV_J_PER_G) -> dict:
    """Split shaft torque between engine and motor for split ratio ``u``.

    Under traction the engine takes ``u * t_shaft`` (clipped to its limit)
    and the motor the remainder; negative shaft torque goes entirely to the
    motor (regeneration) with friction brakes absorbing any excess.  Works
    elementwise on arrays; returns a dict of arrays:
    ``t_ice, t_motor, eff_ice, eff_motor, fuel_rate, p_batt, clamped``.
    """
    t_shaft = np.asarray(t_shaft, dtype=float)
    traction = t_shaft >= 0
    _, t_ice_max = torque_limits(engine_map, w_engine)
    t_ice_req = np.where(traction, u * t_shaft, 0.0)
    t_ice = np.clip(t_ice_req, 0.0, t_ice_max)

    t_m_min, t_m_max = torque_limits(motor_map, w_shaft)
    t_m_req = np.where(traction, t_shaft - t_ice, t_shaft)
    t_motor = np.clip(t_m_req, t_m_min, np.where(traction, t_m_max, 0.0))
    clamped = (t_ice != t_ice_req) | (t_motor != t_m_req)

    eff_ice = map_lookup(engine_map, t_ice, w_engine)
    fuel_rate = np.where(t_ice * w_engine > 0,
                         t_ice * w_engine / (eff_ice * q_lhv), 0.0)
    eff_motor = map_lookup(motor_map, t_motor, w_shaft)
    p_batt = motor_power(t_motor, w_shaft, eff_motor)
    return {"t_ice": t_ice, "t_motor": t_motor, "eff_ice": eff_ice,
            "eff_motor": eff_motor, "fuel_rate": fuel_rate,
            "p_batt": p_batt, "clamped": clamped}


def phev_plant_step(p: VehicleParams, engine_map: TorqueSpeedMap,
                    motor_map: TorqueSpeedMap, battery: BatteryModel,
                    soc: float, u: float, demand: WheelDemand, dt: float,
                    q_lhv: float = GASOLINE_LHV_J_PER_G,
                    engine_speed_bounds=DEFAULT_ENGINE_SPEED_BOUNDS) -> StepOutcome:
    """One PHEV step for torque-split ``u`` in [0, 1] at state ``soc``.

    Raises:
        PowerInfeasible: propagated from the battery when the motor's
            electrical demand exceeds battery peak power.
    """
    if not 0.0 <= u <= 1.0:
        raise ConfigError(f"torque split u must lie in [0, 1], got {u!r}")
    if not 0.0 <= soc <= 1.0:
        raise ConfigError(f"soc must lie in [0, 1], got {soc!r}")
    _, t_shaft, w_shaft, w_engine = phev_shaft_state(p, demand, engine_speed_bounds)
    s = phev_split(engine_map, motor_map, u, t_shaft, w_shaft, w_engine, q_lhv)
    current = battery_current(battery, soc, float(s["p_batt"]))
    return StepOutcome(
        fuel_g=float(s["fuel_rate"]) * dt,
        delta_soc=soc_delta(battery, current, dt),
        battery_current_a=current,
        motor_point=OperatingPoint(float(s["t_motor"]), w_shaft, float(s["eff_motor"])),
        engine_point=OperatingPoint(float(s["t_ice"]), w_engine, float(s["eff_ice"])),
        clamped=bool(s["clamped"]),
    )


def fcev_motor_state(p: VehicleParams, motor_map: TorqueSpeedMap,
                     wheel_torque, wheel_speed) -> dict:
    """Motor torque/speed/electrical power for a single-speed drive.

    Works elementwise on arrays; returns
    ``t_motor, w_motor, eff_motor, p_motor, clamped``.
    """
    w_motor = np.asarray(wheel_speed, dtype=float) * p.final_ratio
    t_req = np.asarray(wheel_torque, dtype=float) / p.final_ratio
    t_min, t_max = torque_limits(motor_map, w_motor)
    t_motor = np.clip(t_req, t_min, t_max)
    clamped = t_motor != t_req
    eff_motor = map_lookup(motor_map, t_motor, w_motor)
    p_motor = motor_power(t_motor, w_motor, eff_motor)
    return {"t_motor": t_motor, "w_motor": w_motor, "eff_motor": eff_motor,
            "p_motor": p_motor, "clamped": clamped}


def fcev_plant_step(p: VehicleParams, motor_map: TorqueSpeedMap,
                    battery: BatteryModel, curves: FuelCellCurves,
                    soc: float, p_fc: float, demand: WheelDemand, dt: float,
                    q_lhv_h2: float = HYDROGEN_LHV_J_PER_G) -> StepOutcome:
    """One FCEV step for fuel-cell power command ``p_fc`` at state ``soc``.

    Bus balance: the battery covers motor electrical power minus fuel-cell
    output, so surplus fuel-cell power charges the battery.
    """
    if not 0.0 <= soc <= 1.0:
        raise ConfigError(f"soc must lie in [0, 1], got {soc!r}")
    m = fcev_motor_state(p, motor_map, demand.wheel_torque, demand.wheel_speed)
    i_fc, e_fc, h2_rate = fc_hydrogen_rate(curves, p_fc, q_lhv_h2)
    p_batt = float(m["p_motor"]) - p_fc
    current = battery_current(battery, soc, p_batt)
    return StepOutcome(
        fuel_g=h2_rate * dt,
        delta_soc=soc_delta(battery, current, dt),
        battery_current_a=current,
        motor_point=OperatingPoint(float(m["t_motor"]), float(m["w_motor"]),
                                   float(m["eff_motor"])),
        fc_point=OperatingPoint(p_fc, i_fc, e_fc),
        clamped=bool(m["clamped"]),
    )
