import numpy as np
import pytest

from emsrl import refdata
from emsrl.cycle import DriveCycle, accel_at, load_cycle, save_cycle
from emsrl.errors import (IndexOutOfRange, NegativeSpeed, NonUniformTimestep,
                          ParseError)

from conftest import make_cycle


def write(tmp_path, text, name="cycle.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_two_row_zero_cycle_kph(tmp_path):
    p = write(tmp_path, "0,0\n1,0\n")
    cyc = load_cycle(p, speed_unit="kph")
    assert cyc.dt == 1.0
    assert np.array_equal(cyc.speeds, [0.0, 0.0])


def test_kph_conversion(tmp_path):
    p = write(tmp_path, "0,36\n1,36\n")
    cyc = load_cycle(p, speed_unit="kph")
    assert cyc.speeds[0] == pytest.approx(10.0, abs=1e-12)


def test_header_row_is_skipped(tmp_path):
    p = write(tmp_path, "time_s,speed\n0,1\n1,2\n")
    cyc = load_cycle(p, speed_unit="mps")
    assert len(cyc) == 2
    assert cyc.speeds[1] == 2.0


def test_reference_cycle_file_loads_1800_rows():
    cyc = load_cycle(refdata.DATA_DIR / refdata.CYCLE_FILE, speed_unit="kph")
    assert len(cyc) == 1800
    assert cyc.dt == 1.0
    assert cyc.speeds[0] == 0.0
    assert cyc.speeds[-1] == 0.0
    # four-phase structure peaks at 131.3 km/h
    assert cyc.speeds.max() * 3.6 == pytest.approx(131.3, abs=0.2)


def test_malformed_row_rejected(tmp_path):
    with pytest.raises(ParseError):
        load_cycle(write(tmp_path, "0,0\n1\n"), speed_unit="kph")
    with pytest.raises(ParseError):
        load_cycle(write(tmp_path, "0,0\nx,y\n"), speed_unit="kph")
    with pytest.raises(ParseError):
        load_cycle(write(tmp_path, "0,0\n"), speed_unit="kph")


def test_non_uniform_timestep_rejected(tmp_path):
    with pytest.raises(NonUniformTimestep):
        load_cycle(write(tmp_path, "0,0\n1,0\n3,0\n"), speed_unit="kph")
    with pytest.raises(NonUniformTimestep):
        load_cycle(write(tmp_path, "0,0\n2,0\n1,0\n"), speed_unit="kph")


def test_negative_speed_rejected(tmp_path):
    with pytest.raises(NegativeSpeed):
        load_cycle(write(tmp_path, "0,0\n1,-3\n"), speed_unit="kph")
    with pytest.raises(NegativeSpeed):
        DriveCycle(name="bad", dt=1.0, speeds=np.array([0.0, np.nan]))


def test_accel_at_forward_difference():
    cyc = make_cycle([0.0, 2.0, 2.0])
    assert accel_at(cyc, 0) == 2.0
    assert accel_at(cyc, 1) == 0.0
    assert accel_at(cyc, 2) == 0.0  # last step
    assert accel_at(make_cycle([5.0, 3.0]), 0) == -2.0


def test_accel_at_index_bounds():
    cyc = make_cycle([0.0, 1.0])
    with pytest.raises(IndexOutOfRange):
        accel_at(cyc, 2)
    with pytest.raises(IndexOutOfRange):
        accel_at(cyc, -1)


def test_accelerations_sum_to_speed_change():
    rng = np.random.default_rng(0)
    speeds = rng.uniform(0.0, 30.0, size=200)
    cyc = make_cycle(speeds, dt=0.5)
    total = np.sum(cyc.accelerations() * cyc.dt)
    assert total == pytest.approx(speeds[-1] - speeds[0], abs=1e-9)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    cyc = make_cycle(rng.uniform(0.0, 40.0, size=50), dt=1.0)
    p = tmp_path / "rt.csv"
    save_cycle(cyc, p, speed_unit="mps")
    back = load_cycle(p, speed_unit="mps")
    assert back.dt == cyc.dt
    assert np.max(np.abs(back.speeds - cyc.speeds)) < 1e-12


def test_cycle_is_immutable():
    cyc = make_cycle([0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        cyc.speeds[0] = 5.0
