import numpy as np
import pytest

from emsrl import refdata
from emsrl.errors import DataFileError
from emsrl.maps import (load_battery_model, load_fuel_cell_curves,
                        load_torque_speed_map, save_battery_model,
                        save_fuel_cell_curves, save_torque_speed_map)


def test_torque_speed_map_round_trip(tmp_path):
    m = refdata.phev_engine_map()
    save_torque_speed_map(m, tmp_path / "m.csv", tmp_path / "l.csv")
    back = load_torque_speed_map(tmp_path / "m.csv", tmp_path / "l.csv")
    assert np.array_equal(back.speed_axis, m.speed_axis)
    assert np.array_equal(back.torque_axis, m.torque_axis)
    assert np.array_equal(back.efficiency, m.efficiency)
    assert np.array_equal(back.max_torque_curve, m.max_torque_curve)
    assert np.array_equal(back.min_torque_curve, m.min_torque_curve)


def test_fuel_cell_round_trip(tmp_path):
    c = refdata.fcev_fuel_cell_curves()
    save_fuel_cell_curves(c, tmp_path / "pi.csv", tmp_path / "ie.csv")
    back = load_fuel_cell_curves(tmp_path / "pi.csv", tmp_path / "ie.csv")
    assert np.array_equal(back.power_axis, c.power_axis)
    assert np.array_equal(back.current_curve, c.current_curve)
    assert np.array_equal(back.efficiency_curve, c.efficiency_curve)
    assert back.max_power == c.power_axis[-1]


def test_battery_round_trip(tmp_path):
    b = refdata.phev_battery()
    save_battery_model(b, tmp_path / "b.csv")
    back = load_battery_model(tmp_path / "b.csv", capacity_ah=b.capacity_ah)
    assert np.array_equal(back.soc_points, b.soc_points)
    assert np.array_equal(back.ocv_volts, b.ocv_volts)
    assert np.array_equal(back.rint_ohm, b.rint_ohm)


def test_battery_constant_resistance(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("soc,voc_V\n0.0,560.0\n1.0,620.0\n", encoding="utf-8")
    b = load_battery_model(p, capacity_ah=88.0, rint_ohm=0.06317)
    assert b.resistance(0.3) == 0.06317
    with pytest.raises(DataFileError):
        load_battery_model(p, capacity_ah=88.0)  # no resistance anywhere


def test_map_header_required(tmp_path):
    (tmp_path / "m.csv").write_text(",0.0,1.0\n0.0,0.5,0.5\n1.0,0.5,0.5\n",
                                    encoding="utf-8")
    (tmp_path / "l.csv").write_text("speed,Tmin,Tmax\n0.0,0.0,1.0\n1.0,0.0,1.0\n",
                                    encoding="utf-8")
    with pytest.raises(DataFileError):
        load_torque_speed_map(tmp_path / "m.csv", tmp_path / "l.csv")


def test_non_monotone_axis_rejected(tmp_path):
    (tmp_path / "m.csv").write_text(
        "# map v1\n,1.0,0.5\n0.0,0.5,0.5\n1.0,0.5,0.5\n", encoding="utf-8")
    (tmp_path / "l.csv").write_text(
        "speed,Tmin,Tmax\n1.0,0.0,1.0\n0.5,0.0,1.0\n", encoding="utf-8")
    with pytest.raises(DataFileError):
        load_torque_speed_map(tmp_path / "m.csv", tmp_path / "l.csv")


def test_non_monotone_battery_rejected(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("soc,voc_V,rint_ohm\n0.5,350.0,0.1\n0.2,360.0,0.1\n",
                 encoding="utf-8")
    with pytest.raises(DataFileError):
        load_battery_model(p, capacity_ah=20.8)


def test_limits_axis_must_match_map(tmp_path):
    m = refdata.phev_engine_map()
    save_torque_speed_map(m, tmp_path / "m.csv", tmp_path / "l.csv")
    lines = (tmp_path / "l.csv").read_text().splitlines()
    lines[1] = "1.2345," + lines[1].split(",", 1)[1]
    (tmp_path / "l.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(DataFileError):
        load_torque_speed_map(tmp_path / "m.csv", tmp_path / "l.csv")


def test_missing_file(tmp_path):
    with pytest.raises(DataFileError):
        load_torque_speed_map(tmp_path / "nope.csv", tmp_path / "nope2.csv")


def test_packaged_reference_files_match_builders():
    d = refdata.DATA_DIR
    m = load_torque_speed_map(d / "phev_engine_map.csv",
                              d / "phev_engine_limits.csv")
    assert np.array_equal(m.efficiency, refdata.phev_engine_map().efficiency)
    b = load_battery_model(d / "fcev_battery.csv",
                           capacity_ah=refdata.FCEV_CAPACITY_AH)
    assert np.array_equal(b.ocv_volts, refdata.fcev_battery().ocv_volts)
    c = load_fuel_cell_curves(d / "fc_power_current.csv",
                              d / "fc_current_efficiency.csv")
    assert c.max_power == refdata.FC_MAX_POWER_W
