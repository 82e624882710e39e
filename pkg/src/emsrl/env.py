"""Discretized episodic MDP around a plant and a drive cycle.

The state is (demanded wheel power, battery SOC) on nearest-point grids; the
action is the PHEV torque split in [0, 1] or the FCEV fuel-cell power
command.  All mechanical quantities are action- and step-dependent but
SOC-independent, so the environment precomputes them for the whole cycle at
construction through the same powertrain code paths as the one-step plant
functions; only the battery is evaluated per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cycle import DriveCycle
from .errors import EpisodeFinished, PowerInfeasible
from .powertrain import (DEFAULT_ENGINE_SPEED_BOUNDS, GASOLINE_LHV_J_PER_G,
                         HYDROGEN_LHV_J_PER_G, BatteryModel, FuelCellCurves,
                         OperatingPoint, StepOutcome, TorqueSpeedMap,
                         VehicleParams, WheelDemand, battery_current,
                         fc_hydrogen_rate, fcev_motor_state, phev_shaft_state,
                         phev_split, wheel_demand_series)
from .validation import (ConfigError, check_choice, check_count,
                         check_fraction, check_non_negative)

REWARD_KINDS = ("fuel_min", "eq_instant", "eq_overall")
ACTION_KINDS = ("torque_split", "fc_power")


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` points from ``lo`` to ``hi`` inclusive."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        check_count("grid n", self.n, minimum=2)
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)
                and self.lo < self.hi):
            raise ConfigError(f"grid requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return self.lo + np.arange(self.n) * self.step

    def value_at(self, i: int) -> float:
        return self.lo + i * self.step


def discretize(g: Grid, x: float) -> int:
    """Index of the nearest grid point; clamps outside values, ties round down."""
    pos = (x - g.lo) / g.step
    i = math.ceil(pos - 0.5)
    if i < 0:
        return 0
    if i >= g.n:
        return g.n - 1
    return i


@dataclass(frozen=True)
class StateSpec:
    """State encoding over (demanded power, SOC)."""

    pdem_grid: Grid
    soc_grid: Grid

    @property
    def n_states(self) -> int:
        return self.pdem_grid.n * self.soc_grid.n

    def encode(self, pdem_index: int, soc_index: int) -> int:
        return pdem_index * self.soc_grid.n + soc_index

    def decode(self, state: int):
        return divmod(state, self.soc_grid.n)


@dataclass(frozen=True)
class ActionSpec:
    """Action decoding: grid point index -> physical command."""

    kind: str
    grid: Grid

    def __post_init__(self):
        check_choice("action kind", self.kind, ACTION_KINDS)
        if self.kind == "torque_split" and (self.grid.lo, self.grid.hi) != (0.0, 1.0):
            raise ConfigError("torque_split action grid must span [0, 1]")
        if self.kind == "fc_power" and (self.grid.lo != 0.0 or self.grid.hi <= 0.0):
            raise ConfigError("fc_power action grid must span [0, max_power]")

    @property
    def n_actions(self) -> int:
        return self.grid.n


def equivalence_factor(s: float, v_bat: float, q_max_ah: float, q_lhv: float) -> float:
    """Grams of fuel equivalent to one unit of SOC: S * 3600 * V * Q / Q_LHV."""
    return s * 3600.0 * v_bat * q_max_ah / q_lhv


@dataclass(frozen=True)
class RewardSpec:
    """Reward family and the constants of the SOC-to-fuel equivalence."""

    kind: str = "fuel_min"
    tau: float = 1.0
    equivalence_s: float = 1.0
    v_bat: float = 350.0          # nominal open-circuit voltage, V
    q_max_ah: float = 20.8
    q_lhv: float = GASOLINE_LHV_J_PER_G

    def __post_init__(self):
        check_choice("reward kind", self.kind, REWARD_KINDS)
        check_non_negative("reward equivalence_s", self.equivalence_s)
        if not math.isfinite(self.tau):
            raise ConfigError("reward tau must be finite")

    @property
    def alpha(self) -> float:
        """Equivalence factor in grams per unit SOC change."""
        return equivalence_factor(self.equivalence_s, self.v_bat,
                                  self.q_max_ah, self.q_lhv)


def reward_of(spec: RewardSpec, outcome: StepOutcome, soc_now: float,
              soc_next: float, soc_start: float) -> float:
    """Unpenalized step reward for the configured family."""
    if spec.kind == "fuel_min":
        return spec.tau - outcome.fuel_g
    if spec.kind == "eq_instant":
        return spec.tau - (outcome.fuel_g + spec.alpha * (soc_now - soc_next))
    drift = soc_start - soc_next
    return spec.tau - (outcome.fuel_g + spec.alpha * drift * drift)


@dataclass(frozen=True)
class ConstraintSpec:
    """SOC operating band, violation penalty weights, and termination policy.

    A battery-infeasible power demand is treated as a violation worth
    ``w_chg * infeasible_penalty_soc`` reward units.
    """

    soc_min: float = 0.30
    soc_max: float = 0.85
    w_dis: float = 1000.0
    w_chg: float = 1000.0
    terminate_on_violation: bool = True
    infeasible_penalty_soc: float = 0.01

    def __post_init__(self):
        check_fraction("constraints soc_min", self.soc_min)
        check_fraction("constraints soc_max", self.soc_max)
        if not self.soc_min < self.soc_max:
            raise ConfigError("constraints require soc_min < soc_max")
        check_non_negative("constraints w_dis", self.w_dis)
        check_non_negative("constraints w_chg", self.w_chg)
        check_non_negative("constraints infeasible_penalty_soc",
                           self.infeasible_penalty_soc)


def penalty(c: ConstraintSpec, soc: float) -> float:
    """Non-positive reward contribution for leaving the SOC band."""
    if soc > c.soc_max:
        return -c.w_dis * (soc - c.soc_max)
    if soc < c.soc_min:
        return -c.w_chg * (c.soc_min - soc)
    return 0.0


@dataclass(slots=True)
class Transition:
    """One environment step: (s, a, r, s', done) plus plant details."""

    state: int
    action: int
    reward: float
    next_state: int
    done: bool
    info: Optional[StepOutcome] = None
    penalty: float = 0.0


@dataclass(frozen=True)
class _AuxTables:
    """Per-(step, action) operating-point components for info records."""

    motor_load: np.ndarray
    motor_speed: np.ndarray       # per step
    motor_eff: np.ndarray
    engine_load: Optional[np.ndarray] = None
    engine_speed: Optional[np.ndarray] = None   # per step
    engine_eff: Optional[np.ndarray] = None
    fc_load: Optional[np.ndarray] = None        # per action
    fc_current: Optional[np.ndarray] = None
    fc_eff: Optional[np.ndarray] = None


class EmsEnvironment:
    """Episodic (power demand, SOC) MDP for one vehicle on one cycle.

    Instances are single-threaded (mutable episode state); build one per
    concurrent run.  Construct via :meth:`for_phev` / :meth:`for_fcev`.
    """

    def __init__(self, *, kind: str, cycle: DriveCycle, step_power: np.ndarray,
                 state_spec: StateSpec, action_spec: ActionSpec,
                 reward_spec: RewardSpec, constraints: ConstraintSpec,
                 battery: BatteryModel, default_start_soc: float,
                 fuel_g: np.ndarray, p_batt: np.ndarray, clamped: np.ndarray,
                 aux: _AuxTables, baseline_actions: np.ndarray):
        n = len(cycle)
        if fuel_g.shape != (n, action_spec.n_actions):
            raise ConfigError("fuel table shape must be (n_steps, n_actions)")
        self.kind = kind
        self.cycle = cycle
        self.state_spec = state_spec
        self.action_spec = action_spec
        self.reward_spec = reward_spec
        self.constraints = constraints
        self.battery = battery
        self.default_start_soc = check_fraction("env start_soc", default_start_soc)
        self.record_info = True
        self._aux = aux
        self._baseline = baseline_actions

        # Hot-path tables as nested Python lists: scalar indexing beats numpy
        # item access inside the training loop.
        self._fuel = fuel_g.tolist()
        self._p_batt = p_batt.tolist()
        self._clamped = clamped.tolist()
        self._step_power = step_power
        self._pdem_idx = [discretize(state_spec.pdem_grid, float(p))
                          for p in step_power]

        self._n_steps = n
        self._n_soc = state_spec.soc_grid.n
        self._soc_lo = state_spec.soc_grid.lo
        self._soc_step = state_spec.soc_grid.step
        self._dt = cycle.dt

        self._k = 0
        self._soc = self.default_start_soc
        self._soc_start = self._soc
        self._done = True
        self._state = 0
        self._episode_fuel = 0.0
        self._completed = False

    # -- builders ---------------------------------------------------------

    @classmethod
    def for_phev(cls, params: VehicleParams, engine_map: TorqueSpeedMap,
                 motor_map: TorqueSpeedMap, battery: BatteryModel,
                 cycle: DriveCycle, *, n_pdem: int = 11, n_soc: int = 11,
                 n_actions: int = 11, reward_spec: RewardSpec = None,
                 constraints: ConstraintSpec = None, start_soc: float = 0.65,
                 q_lhv: float = GASOLINE_LHV_J_PER_G,
                 engine_speed_bounds=DEFAULT_ENGINE_SPEED_BOUNDS) -> "EmsEnvironment":
        demands = wheel_demand_series(params, cycle)
        n = len(cycle)
        t_shaft = np.empty(n)
        w_shaft = np.empty(n)
        w_engine = np.empty(n)
        for k in range(n):
            d = WheelDemand(force=float(demands["force"][k]),
                            wheel_torque=float(demands["wheel_torque"][k]),
                            wheel_speed=float(demands["wheel_speed"][k]),
                            power=float(demands["power"][k]))
            _, t_shaft[k], w_shaft[k], w_engine[k] = phev_shaft_state(
                params, d, engine_speed_bounds)

        action_spec = ActionSpec("torque_split", Grid(0.0, 1.0, n_actions))
        actions = action_spec.grid.points
        m = actions.size
        fuel = np.empty((n, m))
        p_batt = np.empty((n, m))
        clamped = np.empty((n, m), dtype=bool)
        engine_load = np.empty((n, m))
        engine_eff = np.empty((n, m))
        motor_load = np.empty((n, m))
        motor_eff = np.empty((n, m))
        for a, u in enumerate(actions):
            s = phev_split(engine_map, motor_map, float(u), t_shaft, w_shaft,
                           w_engine, q_lhv)
            fuel[:, a] = s["fuel_rate"] * cycle.dt
            p_batt[:, a] = s["p_batt"]
            clamped[:, a] = s["clamped"]
            engine_load[:, a] = s["t_ice"]
            engine_eff[:, a] = s["eff_ice"]
            motor_load[:, a] = s["t_motor"]
            motor_eff[:, a] = s["eff_motor"]

        aux = _AuxTables(motor_load=motor_load, motor_speed=w_shaft,
                         motor_eff=motor_eff, engine_load=engine_load,
                         engine_speed=w_engine, engine_eff=engine_eff)
        baseline = np.full(n, m - 1, dtype=int)  # engine-only: u = 1
        return cls._build(kind="phev", cycle=cycle, demands=demands,
                          n_pdem=n_pdem, n_soc=n_soc, action_spec=action_spec,
                          reward_spec=reward_spec, constraints=constraints,
                          battery=battery, start_soc=start_soc, fuel_g=fuel,
                          p_batt=p_batt, clamped=clamped, aux=aux,
                          baseline=baseline)

    @classmethod
    def for_fcev(cls, params: VehicleParams, motor_map: TorqueSpeedMap,
                 battery: BatteryModel, curves: FuelCellCurves,
                 cycle: DriveCycle, *, n_pdem: int = 11, n_soc: int = 11,
                 n_actions: int = 11, reward_spec: RewardSpec = None,
                 constraints: ConstraintSpec = None, start_soc: float = 0.65,
                 q_lhv_h2: float = HYDROGEN_LHV_J_PER_G) -> "EmsEnvironment":
        demands = wheel_demand_series(params, cycle)
        n = len(cycle)
        motor = fcev_motor_state(params, motor_map, demands["wheel_torque"],
                                 demands["wheel_speed"])
        p_motor = np.asarray(motor["p_motor"], dtype=float)

        action_spec = ActionSpec("fc_power", Grid(0.0, curves.max_power, n_actions))
        commands = action_spec.grid.points
        m = commands.size
        fc_current = np.empty(m)
        fc_eff = np.empty(m)
        h2_per_step = np.empty(m)
        for a, p_fc in enumerate(commands):
            i_fc, e_fc, rate = fc_hydrogen_rate(curves, float(p_fc), q_lhv_h2)
            fc_current[a] = i_fc
            fc_eff[a] = e_fc
            h2_per_step[a] = rate * cycle.dt

        fuel = np.broadcast_to(h2_per_step, (n, m)).copy()
        p_batt = p_motor[:, None] - commands[None, :]
        clamped = np.broadcast_to(np.asarray(motor["clamped"])[:, None], (n, m)).copy()
        aux = _AuxTables(
            motor_load=np.broadcast_to(motor["t_motor"][:, None], (n, m)).copy(),
            motor_speed=np.asarray(motor["w_motor"], dtype=float),
            motor_eff=np.broadcast_to(motor["eff_motor"][:, None], (n, m)).copy(),
            fc_load=commands.copy(), fc_current=fc_current, fc_eff=fc_eff)
        grid = action_spec.grid
        baseline = np.fromiter(
            (discretize(grid, min(max(float(p), 0.0), curves.max_power))
             for p in p_motor), dtype=int, count=n)
        return cls._build(kind="fcev", cycle=cycle, demands=demands,
                          n_pdem=n_pdem, n_soc=n_soc, action_spec=action_spec,
                          reward_spec=reward_spec, constraints=constraints,
                          battery=battery, start_soc=start_soc, fuel_g=fuel,
                          p_batt=p_batt, clamped=clamped, aux=aux,
                          baseline=baseline)

    @classmethod
    def _build(cls, *, kind, cycle, demands, n_pdem, n_soc, action_spec,
               reward_spec, constraints, battery, start_soc, fuel_g, p_batt,
               clamped, aux, baseline):
        power = demands["power"]
        lo, hi = float(power.min()), float(power.max())
        if hi - lo < 1e-9:
            hi = lo + 1.0  # degenerate (e.g. all-zero) cycle
        state_spec = StateSpec(pdem_grid=Grid(lo, hi, n_pdem),
                               soc_grid=Grid(0.0, 1.0, n_soc))
        return cls(kind=kind, cycle=cycle, step_power=power,
                   state_spec=state_spec, action_spec=action_spec,
                   reward_spec=reward_spec or RewardSpec(),
                   constraints=constraints or ConstraintSpec(), battery=battery,
                   default_start_soc=start_soc, fuel_g=fuel_g, p_batt=p_batt,
                   clamped=clamped, aux=aux, baseline_actions=baseline)

    # -- episode API ------------------------------------------------------

    @property
    def n_states(self) -> int:
        return self.state_spec.n_states

    @property
    def n_actions(self) -> int:
        return self.action_spec.n_actions

    @property
    def n_steps(self) -> int:
        return self._n_steps

    @property
    def soc(self) -> float:
        return self._soc

    @property
    def step_index(self) -> int:
        return self._k

    @property
    def episode_fuel_g(self) -> float:
        return self._episode_fuel

    @property
    def episode_completed(self) -> bool:
        """True when the last finished episode ran the whole cycle."""
        return self._completed

    def baseline_actions(self) -> np.ndarray:
        """Per-step action indices of the trivial policy (engine-only for
        the PHEV, load-following fuel cell for the FCEV)."""
        return self._baseline.copy()

    def _soc_index(self, soc: float) -> int:
        i = math.ceil((soc - self._soc_lo) / self._soc_step - 0.5)
        if i < 0:
            return 0
        if i >= self._n_soc:
            return self._n_soc - 1
        return i

    def reset(self, start_soc: float = None) -> int:
        soc = self.default_start_soc if start_soc is None else float(start_soc)
        if not 0.0 <= soc <= 1.0:
            raise ConfigError(f"start_soc must lie in [0, 1], got {soc!r}")
        self._k = 0
        self._soc = soc
        self._soc_start = soc
        self._done = False
        self._episode_fuel = 0.0
        self._completed = False
        self._state = self._pdem_idx[0] * self._n_soc + self._soc_index(soc)
        return self._state

    def step(self, action: int) -> Transition:
        """Advance one cycle step with the given action index."""
        if self._done:
            raise EpisodeFinished("episode is finished; call reset()")
        k = self._k
        a = action
        soc = self._soc
        fuel = self._fuel[k][a]
        p_batt = self._p_batt[k][a]

        infeasible = False
        try:
            current = battery_current(self.battery, soc, p_batt)
            dsoc = -(current * self._dt) / (3600.0 * self.battery.capacity_ah)
        except PowerInfeasible:
            infeasible = True
            current = 0.0
            dsoc = 0.0
        soc_next = soc + dsoc
        b = self.battery
        if soc_next < b.soc_hard_floor:
            soc_next = b.soc_hard_floor
        elif soc_next > b.soc_hard_ceiling:
            soc_next = b.soc_hard_ceiling
        dsoc = soc_next - soc

        spec = self.reward_spec
        if spec.kind == "fuel_min":
            base = spec.tau - fuel
        elif spec.kind == "eq_instant":
            base = spec.tau - (fuel + spec.alpha * (soc - soc_next))
        else:
            drift = self._soc_start - soc_next
            base = spec.tau - (fuel + spec.alpha * drift * drift)

        c = self.constraints
        violated = False
        pen = 0.0
        if soc_next > c.soc_max:
            pen = -c.w_dis * (soc_next - c.soc_max)
            violated = True
        elif soc_next < c.soc_min:
            pen = -c.w_chg * (c.soc_min - soc_next)
            violated = True
        if infeasible:
            pen -= c.w_chg * c.infeasible_penalty_soc
            violated = True

        last = k + 1 == self._n_steps
        done = last or infeasible or (violated and c.terminate_on_violation)

        state = self._state
        next_k = k + 1 if not last else k
        next_state = self._pdem_idx[next_k] * self._n_soc + self._soc_index(soc_next)

        self._k = k + 1
        self._soc = soc_next
        self._state = next_state
        self._episode_fuel += fuel
        if done:
            self._done = True
            self._completed = last

        info = self._make_info(k, a, fuel, dsoc, current, infeasible) \
            if self.record_info else None
        return Transition(state=state, action=a, reward=base + pen,
                          next_state=next_state, done=done, info=info,
                          penalty=pen)

    def _make_info(self, k, a, fuel, dsoc, current, infeasible) -> StepOutcome:
        aux = self._aux
        motor = OperatingPoint(float(aux.motor_load[k, a]),
                               float(aux.motor_speed[k]),
                               float(aux.motor_eff[k, a]))
        engine = fc = None
        if aux.engine_load is not None:
            engine = OperatingPoint(float(aux.engine_load[k, a]),
                                    float(aux.engine_speed[k]),
                                    float(aux.engine_eff[k, a]))
        if aux.fc_load is not None:
            fc = OperatingPoint(float(aux.fc_load[a]), float(aux.fc_current[a]),
                                float(aux.fc_eff[a]))
        return StepOutcome(fuel_g=fuel, delta_soc=dsoc,
                           battery_current_a=current, motor_point=motor,
                           engine_point=engine, fc_point=fc,
                           clamped=bool(self._clamped[k][a]) or infeasible)
