"""Run artifacts: Q-tables, learning curves, evaluation traces, run records.

Also holds the deterministic config hashing and the CSV writers shared by
the CLI and the sweep exporter.  All CSV floats are written with ``repr`` so
re-exports are byte-identical and values round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataFileError

TOOL_VERSION = "emsrl 0.1.0"


def canonical_json(obj) -> str:
    """Stable JSON encoding (sorted keys, no whitespace surprises)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """sha256 over the canonical JSON of a config mapping."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def file_content_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class QTable:
    """Action-value estimates plus per-cell update counts."""

    values: np.ndarray        # (n_states, n_actions) float
    visit_counts: np.ndarray  # same shape, int64

    @classmethod
    def zeros(cls, n_states: int, n_actions: int) -> "QTable":
        return cls(values=np.zeros((n_states, n_actions)),
                   visit_counts=np.zeros((n_states, n_actions), dtype=np.int64))

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def n_actions(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "QTable":
        return QTable(values=self.values.copy(),
                      visit_counts=self.visit_counts.copy())

    def greedy_actions(self) -> np.ndarray:
        return np.argmax(self.values, axis=1)


@dataclass
class LearningCurve:
    """Per-evaluation training progress records."""

    episodes: list = field(default_factory=list)
    reward_sums: list = field(default_factory=list)
    fuel_g: list = field(default_factory=list)
    delta_soc: list = field(default_factory=list)
    lengths: list = field(default_factory=list)
    completed: list = field(default_factory=list)

    def append(self, episode, reward_sum, fuel_g, delta_soc, length, completed):
        if self.episodes and episode <= self.episodes[-1]:
            raise ValueError("curve episode numbers must be strictly increasing")
        self.episodes.append(int(episode))
        self.reward_sums.append(float(reward_sum))
        self.fuel_g.append(float(fuel_g))
        self.delta_soc.append(float(delta_soc))
        self.lengths.append(int(length))
        self.completed.append(bool(completed))

    def __len__(self):
        return len(self.episodes)


@dataclass
class EvalTrace:
    """One evaluation episode: totals plus per-step trajectories.

    ``soc`` has one more entry than the episode length (the starting SOC).
    Operating-point arrays are (length, 3) columns (load, speed, efficiency);
    they are None for environments without the component.
    """

    epsilon: float
    reward_sum: float
    fuel_g: float
    length: int
    completed: bool
    actions: np.ndarray
    soc: Optional[np.ndarray] = None
    motor_points: Optional[np.ndarray] = None
    engine_points: Optional[np.ndarray] = None
    fc_points: Optional[np.ndarray] = None

    @property
    def delta_soc(self) -> float:
        """SOC drop over the episode: start minus end (positive = discharged)."""
        if self.soc is None or len(self.soc) == 0:
            return 0.0
        return float(self.soc[0] - self.soc[-1])


@dataclass
class RunRecord:
    """Everything one training run produced, keyed by its config hash."""

    algorithm: str
    config: dict
    seed: int
    config_hash: str
    curve: LearningCurve
    q_table: Optional[QTable]
    final_eval: Optional[EvalTrace]     # stochastic evaluation (eval_epsilon)
    greedy_eval: Optional[EvalTrace]    # deterministic policy episode
    wall_clock_s: float = 0.0
    baseline_reward_sum: Optional[float] = None
    availability: Optional[int] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def final_fuel_g(self) -> float:
        return self.greedy_eval.fuel_g if self.greedy_eval else float("nan")

    @property
    def final_delta_soc(self) -> float:
        return self.greedy_eval.delta_soc if self.greedy_eval else float("nan")


# -- CSV / persistence ----------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def write_curve_csv(curve: LearningCurve, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("episode,reward_sum,fuel_g,delta_soc,length,completed\n")
        for i in range(len(curve)):
            fh.write(f"{curve.episodes[i]},{_fmt(curve.reward_sums[i])},"
                     f"{_fmt(curve.fuel_g[i])},{_fmt(curve.delta_soc[i])},"
                     f"{curve.lengths[i]},{int(curve.completed[i])}\n")


def write_soc_csv(trace: EvalTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,soc\n")
        if trace.soc is not None:
            for k, s in enumerate(trace.soc):
                fh.write(f"{k},{_fmt(s)}\n")


def write_points_csv(trace: EvalTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,component,load,speed,efficiency\n")
        for name, pts in (("engine", trace.engine_points),
                          ("fuel_cell", trace.fc_points),
                          ("motor", trace.motor_points)):
            if pts is None:
                continue
            for k in range(pts.shape[0]):
                fh.write(f"{k},{name},{_fmt(pts[k, 0])},{_fmt(pts[k, 1])},"
                         f"{_fmt(pts[k, 2])}\n")


def save_qtable(q: QTable, csv_path, meta: dict) -> None:
    """Persist a Q-table as CSV plus a JSON sidecar (same path + ``.json``).

    The sidecar records table shape, grid specs, and the config hash so a
    saved policy replays against a matching environment bit-identically.
    """
    csv_path = Path(csv_path)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("state_index,action_index,q,visits\n")
        for s in range(q.n_states):
            row_v = q.values[s]
            row_c = q.visit_counts[s]
            for a in range(q.n_actions):
                fh.write(f"{s},{a},{_fmt(row_v[a])},{int(row_c[a])}\n")
    sidecar = dict(meta)
    sidecar["n_states"] = q.n_states
    sidecar["n_actions"] = q.n_actions
    sidecar["tool_version"] = TOOL_VERSION
    with open(csv_path.with_suffix(csv_path.suffix + ".json"), "w",
              encoding="utf-8") as fh:
        fh.write(canonical_json(sidecar))
        fh.write("\n")


def load_qtable(csv_path):
    """Load a persisted Q-table; returns (QTable, sidecar dict)."""
    csv_path = Path(csv_path)
    sidecar_path = csv_path.with_suffix(csv_path.suffix + ".json")
    if not csv_path.exists():
        raise DataFileError(f"q-table file not found: {csv_path}")
    if not sidecar_path.exists():
        raise DataFileError(f"q-table sidecar not found: {sidecar_path}")
    with open(sidecar_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    q = QTable.zeros(int(meta["n_states"]), int(meta["n_actions"]))
    with open(csv_path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "state_index,action_index,q,visits":
            raise DataFileError(f"{csv_path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != 4:
                raise DataFileError(f"{csv_path}:{lineno}: expected 4 columns")
            s, a = int(parts[0]), int(parts[1])
            q.values[s, a] = float(parts[2])
            q.visit_counts[s, a] = int(parts[3])
    return q, meta
