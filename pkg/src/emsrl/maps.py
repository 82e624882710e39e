"""Readers and writers for component data files.

Formats (CSV, UTF-8):

* efficiency map: a ``# map v1`` header line, then a first row holding the
  speed axis in rad/s (leading corner cell empty), then one row per torque
  axis value: torque in Nm followed by efficiencies.
* limit curves: header ``speed,Tmin,Tmax``, one row per speed grid point.
* fuel-cell curves: two files, ``power_W,current_A`` and
  ``current_A,efficiency``.
* battery: ``soc,voc_V[,rint_ohm]``; omit the third column only when a
  constant resistance is passed to the loader instead.

Axis columns must be strictly increasing; loaders reject violations.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DataFileError
from .powertrain import BatteryModel, FuelCellCurves, TorqueSpeedMap
from .validation import ConfigError

MAP_HEADER = "# map v1"


def _read_rows(path) -> list:
    path = Path(path)
    if not path.exists():
        raise DataFileError(f"data file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def _floats(cells, path, lineno):
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise DataFileError(f"{path}:{lineno}: could not parse row {cells!r}") from None


def load_torque_speed_map(map_path, limits_path) -> TorqueSpeedMap:
    """Load an efficiency map plus its companion torque-limit curves."""
    rows = _read_rows(map_path)
    if not rows or ",".join(rows[0]).strip() != MAP_HEADER:
        raise DataFileError(f"{map_path}: missing '{MAP_HEADER}' header line")
    if len(rows) < 3:
        raise DataFileError(f"{map_path}: expected a speed-axis row and >= 2 torque rows")
    speed_axis = _floats(rows[1][1:], map_path, 2)
    torque_axis = []
    eff = []
    for lineno, row in enumerate(rows[2:], start=3):
        values = _floats(row, map_path, lineno)
        if len(values) != len(speed_axis) + 1:
            raise DataFileError(
                f"{map_path}:{lineno}: expected {len(speed_axis) + 1} columns")
        torque_axis.append(values[0])
        eff.append(values[1:])

    limit_rows = _read_rows(limits_path)
    if (not limit_rows or not limit_rows[0]
            or [c.strip() for c in limit_rows[0]] != ["speed", "Tmin", "Tmax"]):
        raise DataFileError(f"{limits_path}: missing 'speed,Tmin,Tmax' header")
    speeds, t_min, t_max = [], [], []
    for lineno, row in enumerate(limit_rows[1:], start=2):
        values = _floats(row, limits_path, lineno)
        if len(values) != 3:
            raise DataFileError(f"{limits_path}:{lineno}: expected 3 columns")
        speeds.append(values[0])
        t_min.append(values[1])
        t_max.append(values[2])
    if speeds != list(speed_axis):
        raise DataFileError(
            f"{limits_path}: limit speed axis differs from map speed axis")
    try:
        return TorqueSpeedMap(
            speed_axis=np.asarray(speed_axis),
            torque_axis=np.asarray(torque_axis),
            efficiency=np.asarray(eff),
            max_torque_curve=np.asarray(t_max),
            min_torque_curve=np.asarray(t_min),
        )
    except ConfigError as exc:
        raise DataFileError(f"{map_path}: {exc}") from None


def save_torque_speed_map(m: TorqueSpeedMap, map_path, limits_path) -> None:
    with open(map_path, "w", encoding="utf-8") as fh:
        fh.write(MAP_HEADER + "\n")
        fh.write("," + ",".join(repr(float(w)) for w in m.speed_axis) + "\n")
        for i, t in enumerate(m.torque_axis):
            row = [repr(float(t))] + [repr(float(e)) for e in m.efficiency[i]]
            fh.write(",".join(row) + "\n")
    with open(limits_path, "w", encoding="utf-8") as fh:
        fh.write("speed,Tmin,Tmax\n")
        for w, lo, hi in zip(m.speed_axis, m.min_torque_curve, m.max_torque_curve):
            fh.write(f"{repr(float(w))},{repr(float(lo))},{repr(float(hi))}\n")


def _load_two_columns(path, header):
    rows = _read_rows(path)
    if not rows or [c.strip() for c in rows[0]] != header:
        raise DataFileError(f"{path}: missing '{','.join(header)}' header")
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        values = _floats(row, path, lineno)
        if len(values) != 2:
            raise DataFileError(f"{path}:{lineno}: expected 2 columns")
        xs.append(values[0])
        ys.append(values[1])
    return np.asarray(xs), np.asarray(ys)


def load_fuel_cell_curves(power_current_path, current_efficiency_path,
                          max_power: float = None) -> FuelCellCurves:
    power, current = _load_two_columns(power_current_path, ["power_W", "current_A"])
    caxis, eff = _load_two_columns(current_efficiency_path, ["current_A", "efficiency"])
    try:
        return FuelCellCurves(power_axis=power, current_curve=current,
                              current_axis=caxis, efficiency_curve=eff,
                              max_power=max_power)
    except ConfigError as exc:
        raise DataFileError(f"{power_current_path}: {exc}") from None


def save_fuel_cell_curves(curves: FuelCellCurves, power_current_path,
                          current_efficiency_path) -> None:
    with open(power_current_path, "w", encoding="utf-8") as fh:
        fh.write("power_W,current_A\n")
        for p, i in zip(curves.power_axis, curves.current_curve):
            fh.write(f"{repr(float(p))},{repr(float(i))}\n")
    with open(current_efficiency_path, "w", encoding="utf-8") as fh:
        fh.write("current_A,efficiency\n")
        for i, e in zip(curves.current_axis, curves.efficiency_curve):
            fh.write(f"{repr(float(i))},{repr(float(e))}\n")


def load_battery_model(path, capacity_ah: float,
                       rint_ohm: float = None) -> BatteryModel:
    """Load ``soc,voc_V[,rint_ohm]`` battery tables.

    A file without the resistance column requires ``rint_ohm`` (constant
    resistance chemistry).
    """
    rows = _read_rows(path)
    header = [c.strip() for c in rows[0]] if rows else []
    if header not in (["soc", "voc_V"], ["soc", "voc_V", "rint_ohm"]):
        raise DataFileError(f"{path}: missing 'soc,voc_V[,rint_ohm]' header")
    has_rint = len(header) == 3
    if not has_rint and rint_ohm is None:
        raise DataFileError(f"{path}: no rint_ohm column and no constant resistance given")
    soc, voc, rint = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        values = _floats(row, path, lineno)
        if len(values) != len(header):
            raise DataFileError(f"{path}:{lineno}: expected {len(header)} columns")
        soc.append(values[0])
        voc.append(values[1])
        if has_rint:
            rint.append(values[2])
    try:
        return BatteryModel(
            capacity_ah=capacity_ah,
            soc_points=np.asarray(soc),
            ocv_volts=np.asarray(voc),
            rint_ohm=np.asarray(rint) if has_rint else np.float64(rint_ohm),
        )
    except ConfigError as exc:
        raise DataFileError(f"{path}: {exc}") from None


def save_battery_model(b: BatteryModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("soc,voc_V,rint_ohm\n")
        for s, v, r in zip(b.soc_points, b.ocv_volts, b.rint_ohm):
            fh.write(f"{repr(float(s))},{repr(float(v))},{repr(float(r))}\n")
