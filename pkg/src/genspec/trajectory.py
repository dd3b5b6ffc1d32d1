"""Sampled trajectories: validation, subsampling, CSV persistence."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Trajectory",
    "TrajectoryBundle",
    "TrajectoryError",
    "CsvFormatError",
    "is_uniform",
    "subsample",
    "load_csv",
    "save_csv",
    "data_sha256",
]

DEFAULT_UNIFORM_TOL = 1e-6


class TrajectoryError(ValueError):
    pass


class CsvFormatError(TrajectoryError):
    pass


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped samples of one realization.

    Attributes
    ----------
    states : (n, d) ndarray
        Rows in time order.
    times : (n,) ndarray
        Strictly increasing sample times.
    meta : dict
        Free-form provenance (process name, seed, parameters).
    """

    states: np.ndarray
    times: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim == 1:
            states = states[:, None]
        times = np.asarray(self.times, dtype=np.float64).ravel()
        if states.ndim != 2:
            raise TrajectoryError("states must be a 2D array (n, d)")
        n = states.shape[0]
        if n < 2:
            raise TrajectoryError(f"a trajectory needs at least 2 samples, got {n}")
        if times.shape[0] != n:
            raise TrajectoryError(f"{times.shape[0]} times for {n} states")
        if not np.all(np.isfinite(states)):
            raise TrajectoryError("states contain non-finite entries")
        if not np.all(np.isfinite(times)) or np.any(times < 0):
            raise TrajectoryError("times must be finite and non-negative")
        if np.any(np.diff(times) <= 0):
            raise TrajectoryError("times must be strictly increasing")
        object.__setattr__(self, "states", _frozen(states))
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """Independent trajectories observed on one shared time grid."""

    trajectories: tuple

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise TrajectoryError("empty bundle")
        t0 = trajs[0].times
        for k, tr in enumerate(trajs[1:], start=1):
            if tr.times.shape != t0.shape or tr.times.tobytes() != t0.tobytes():
                raise TrajectoryError(f"trajectory {k} has a different time grid")
            if tr.d != trajs[0].d:
                raise TrajectoryError(f"trajectory {k} has dimension {tr.d}, expected {trajs[0].d}")
        object.__setattr__(self, "trajectories", trajs)

    @property
    def times(self) -> np.ndarray:
        return self.trajectories[0].times

    @property
    def count(self) -> int:
        return len(self.trajectories)

    @property
    def grid_size(self) -> int:
        return self.times.shape[0]

    @property
    def d(self) -> int:
        return self.trajectories[0].d

    def stacked_states(self) -> np.ndarray:
        """All trajectories at t_0, then all at t_1, and so on."""
        arr = np.stack([tr.states for tr in self.trajectories], axis=1)  # (grid, count, d)
        return arr.reshape(-1, self.d)


def is_uniform(traj: Trajectory, rel_tol: float = DEFAULT_UNIFORM_TOL):
    """Detect a uniform time grid.

    Returns ``(True, dt)`` with ``dt`` the mean step when
    ``max(step) / min(step) - 1 <= rel_tol``, otherwise ``(False, None)``.
    """
    steps = np.diff(traj.times)
    if steps.max() / steps.min() - 1.0 <= rel_tol:
        return True, float((traj.times[-1] - traj.times[0]) / (traj.n - 1))
    return False, None


def subsample(traj: Trajectory, stride: int) -> Trajectory:
    """Keep rows 0, stride, 2*stride, ..."""
    stride = int(stride)
    if stride < 1:
        raise TrajectoryError("stride must be >= 1")
    if stride >= traj.n:
        raise TrajectoryError(f"empty result: stride {stride} leaves fewer than 2 of {traj.n} rows")
    meta = dict(traj.meta)
    meta["stride"] = meta.get("stride", 1) * stride
    return Trajectory(traj.states[::stride], traj.times[::stride], meta)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_csv(traj: Trajectory, path) -> None:
    """Write ``t,x1,...,xd`` rows with 17 significant digits (exact round trip)."""
    path = Path(path)
    buf = io.StringIO()
    buf.write(",".join(["t"] + [f"x{i + 1}" for i in range(traj.d)]) + "\n")
    for t, row in zip(traj.times.tolist(), traj.states.tolist()):
        buf.write(",".join(_fmt(v) for v in [t, *row]) + "\n")
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def load_csv(path, meta: dict | None = None) -> Trajectory:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file, expected header 't,x1,...,xd'") from None
        header = [h.strip() for h in header]
        d = len(header) - 1
        expected = ["t"] + [f"x{i + 1}" for i in range(d)]
        if d < 1 or header != expected:
            raise CsvFormatError(f"{path}: row 1: missing or malformed header {header!r}, "
                                 f"expected 't,x1,...,xd'")
        times, states = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise CsvFormatError(f"{path}: row {rownum}: expected {d + 1} columns, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise CsvFormatError(f"{path}: row {rownum}: non-numeric cell in {row!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise CsvFormatError(f"{path}: row {rownum}: non-finite value")
            if times and vals[0] <= times[-1]:
                raise CsvFormatError(f"{path}: row {rownum}: time {vals[0]!r} is not increasing")
            times.append(vals[0])
            states.append(vals[1:])
    info = {"source": str(path)}
    info.update(meta or {})
    try:
        return Trajectory(np.array(states).reshape(-1, d), np.array(times), info)
    except TrajectoryError as exc:
        raise CsvFormatError(f"{path}: {exc}") from None


def data_sha256(*arrays) -> str:
    """Content hash of float64 arrays, used to tie models to their data."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()
