import numpy as np
import pytest

from emsrl import refdata
from emsrl.cycle import DriveCycle
from emsrl.env import ConstraintSpec, EmsEnvironment, RewardSpec


def make_cycle(speeds, dt=1.0, name="test"):
    return DriveCycle(name=name, dt=dt, speeds=np.asarray(speeds, dtype=float))


def short_cycle_speeds(n=60, peak=15.0):
    """Trapezoidal accel/cruise/decel/stop profile in m/s."""
    v = np.zeros(n)
    ramp = n // 4
    v[:ramp] = np.linspace(0.0, peak, ramp)
    v[ramp:2 * ramp] = peak
    v[2 * ramp:3 * ramp] = np.linspace(peak, 0.0, ramp)
    return v


@pytest.fixture(scope="session")
def phev_parts():
    return {
        "params": refdata.phev_vehicle_params(),
        "engine_map": refdata.phev_engine_map(),
        "motor_map": refdata.phev_motor_map(),
        "battery": refdata.phev_battery(),
    }


@pytest.fixture(scope="session")
def fcev_parts():
    return {
        "params": refdata.fcev_vehicle_params(),
        "motor_map": refdata.fcev_motor_map(),
        "battery": refdata.fcev_battery(),
        "curves": refdata.fcev_fuel_cell_curves(),
    }


@pytest.fixture(scope="session")
def short_cycle():
    return make_cycle(short_cycle_speeds())


@pytest.fixture(scope="session")
def reference_cycle():
    return refdata.reference_cycle()


def build_phev_env(parts, cycle, **kwargs):
    defaults = dict(n_pdem=11, n_soc=11, n_actions=11, start_soc=0.65)
    defaults.update(kwargs)
    return EmsEnvironment.for_phev(parts["params"], parts["engine_map"],
                                   parts["motor_map"], parts["battery"],
                                   cycle, **defaults)


def build_fcev_env(parts, cycle, **kwargs):
    defaults = dict(n_pdem=11, n_soc=11, n_actions=11, start_soc=0.65)
    defaults.update(kwargs)
    return EmsEnvironment.for_fcev(parts["params"], parts["motor_map"],
                                   parts["battery"], parts["curves"],
                                   cycle, **defaults)


@pytest.fixture
def phev_env(phev_parts, short_cycle):
    return build_phev_env(phev_parts, short_cycle)


@pytest.fixture
def fcev_env(fcev_parts, short_cycle):
    return build_fcev_env(fcev_parts, short_cycle)


@pytest.fixture
def wide_band():
    """Constraints that essentially never trigger, for pure-reward tests."""
    return ConstraintSpec(soc_min=0.01, soc_max=0.99,
                          terminate_on_violation=False)


@pytest.fixture
def eq_reward():
    return RewardSpec(kind="eq_instant", equivalence_s=1.0, v_bat=350.0,
                      q_max_ah=20.8, q_lhv=42600.0)
