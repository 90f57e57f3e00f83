"""Labeled signal datasets: containers, file I/O, splits, synthetic tasks.

A signal is a discrete, finite, multivariate time series; a sample pairs one
signal with a binary label (+1 desired behavior, -1 undesired). The two
generators below produce planar pick-and-place style trajectories whose
labels are assigned by plain geometric checkers, so every sample's label can
be re-verified independently of any learned formula.

Reach task geometry (2-D, 20 steps). Workspace roughly [0,200] x [0,150]:

* start region    x in [5, 25],    y in [5, 25]
* obstacle box    x in [40, 70],   y in [30, 80]
* goal box        x in [100, 150], y in [60, 90]

Positive label: every state in the terminal window t in [17, 19] lies inside
the goal box and no state ever enters the obstacle box. Negative modes: a
near miss of the goal, a constraint violation (the trajectory clips the
obstacle and stops short of the goal), or an early exit from the goal box.

Sequence task (4-D, 40 steps): dims (0,1) are block A, dims (2,3) block B.
Positive label: A is inside the goal box for all t in [20, 39] (reached in
the first half and stayed), B is inside for the terminal window t in
[36, 39], A entered the goal strictly before B, and neither block enters the
obstacle box. Negative modes break one of reach, stay, order, or constraint.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, SplitError

__all__ = [
    "Signal",
    "LabeledSample",
    "Dataset",
    "SplitSpec",
    "load_dataset",
    "save_dataset",
    "split_dataset",
    "generate_reach_task",
    "generate_sequence_task",
    "reach_label",
    "sequence_label",
    "REACH_GOAL_BOX",
    "REACH_OBSTACLE_BOX",
    "REACH_LENGTH",
    "REACH_TERMINAL_WINDOW",
    "SEQ_GOAL_BOX",
    "SEQ_OBSTACLE_BOX",
    "SEQ_LENGTH",
    "SEQ_TERMINAL_WINDOW",
    "SEQ_STAY_WINDOW",
]


@dataclass(frozen=True)
class Signal:
    """A discrete finite signal: states[t] is the d-dimensional state at t."""

    states: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("signal states must be a (length, d) array")
        if not np.isfinite(arr).all():
            raise ValueError("signal states must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "states", arr)

    @property
    def length(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def end_time(self) -> int:
        """Largest valid time index T (length - 1)."""
        return self.states.shape[0] - 1


@dataclass(frozen=True)
class LabeledSample:
    signal: Signal
    label: int

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")


@dataclass
class Dataset:
    """An ordered list of labeled samples sharing one shape."""

    samples: list[LabeledSample]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.samples:
            d = self.samples[0].signal.dim
            n = self.samples[0].signal.length
            for i, s in enumerate(self.samples):
                if s.signal.dim != d or s.signal.length != n:
                    raise DataFormatError(
                        f"sample {i} has shape ({s.signal.length},{s.signal.dim}), "
                        f"expected ({n},{d})"
                    )

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def dim(self) -> int:
        return self.samples[0].signal.dim

    @property
    def length(self) -> int:
        return self.samples[0].signal.length

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=int)

    def subset(self, indices) -> "Dataset":
        return Dataset([self.samples[i] for i in indices], dict(self.metadata))


@dataclass(frozen=True)
class SplitSpec:
    """Fractions for train/cal/test plus the calibration sub-split.

    ``cal_split`` is the share of the calibration set used for the margin
    (cal1); the remainder (cal2) supplies the nonconformity scores.
    """

    train: float = 0.6
    cal: float = 0.2
    test: float = 0.2
    cal_split: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("train", "cal", "test", "cal_split"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"split fraction {name}={v} must be in (0,1)")
        if abs(self.train + self.cal + self.test - 1.0) > 1e-9:
            raise ValueError("train + cal + test fractions must sum to 1")


def split_dataset(ds: Dataset, spec: SplitSpec):
    """Shuffle with ``spec.seed`` and partition into (train, cal1, cal2, test).

    The partition is exact: parts are disjoint and their union is ``ds``.
    Raises :class:`SplitError` if any part would be empty.
    """
    n = len(ds)
    n_train = int(round(spec.train * n))
    n_cal = int(round(spec.cal * n))
    n_test = n - n_train - n_cal
    n_cal1 = int(round(spec.cal_split * n_cal))
    n_cal2 = n_cal - n_cal1
    sizes = {"train": n_train, "cal1": n_cal1, "cal2": n_cal2, "test": n_test}
    for name, size in sizes.items():
        if size < 1:
            raise SplitError(f"split leaves {name} empty for n={n} ({spec})")
    perm = np.random.default_rng(spec.seed).permutation(n)
    bounds = np.cumsum([n_train, n_cal1, n_cal2])
    parts = np.split(perm, bounds)
    return tuple(ds.subset(part.tolist()) for part in parts)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _csv_header(length: int, dim: int) -> list[str]:
    return ["label"] + [f"t{t}_x{j}" for t in range(length) for j in range(dim)]


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise ValueError(f"unknown dataset format {fmt!r}")
        return fmt
    suffix = path.suffix.lower().lstrip(".")
    if suffix in ("csv", "json"):
        return suffix
    raise ValueError(f"cannot infer format from {path.name!r}; pass format=")


def load_dataset(path, format: str | None = None) -> Dataset:
    """Read a dataset file (CSV or JSON layouts described in the README)."""
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "csv":
        return _load_csv(path)
    return _load_json(path)


def _parse_label(raw, where: str) -> int:
    try:
        label = int(float(raw))
    except (TypeError, ValueError):
        raise DataFormatError(f"{where}: label {raw!r} is not a number") from None
    if label not in (1, -1) or float(raw) != label:
        raise DataFormatError(f"{where}: label must be 1 or -1, got {raw!r}")
    return label


def _load_csv(path: Path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if not header or header[0] != "label":
            raise DataFormatError(f"{path}: line 1: header must start with 'label'")
        n_cols = len(header)
        # Recover (length, dim) from the last column name t{T}_x{d-1}.
        try:
            tail = header[-1]
            t_part, x_part = tail.split("_")
            length = int(t_part[1:]) + 1
            dim = int(x_part[1:]) + 1
        except (ValueError, IndexError):
            raise DataFormatError(f"{path}: line 1: malformed column names") from None
        if n_cols != 1 + length * dim:
            raise DataFormatError(
                f"{path}: line 1: {n_cols} columns inconsistent with "
                f"length={length}, d={dim}"
            )
        samples = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}: line {line_no}"
            if len(row) != n_cols:
                raise DataFormatError(f"{where}: expected {n_cols} fields, got {len(row)}")
            label = _parse_label(row[0], where)
            try:
                flat = np.array([float(v) for v in row[1:]])
            except ValueError:
                raise DataFormatError(f"{where}: non-numeric state value") from None
            samples.append(LabeledSample(Signal(flat.reshape(length, dim)), label))
        if not samples:
            raise DataFormatError(f"{path}: no data rows")
    return Dataset(samples)


def _load_json(path: Path) -> Dataset:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{path}: line {e.lineno}: invalid JSON") from None
    if not isinstance(payload, list) or not payload:
        raise DataFormatError(f"{path}: expected a non-empty array of samples")
    samples = []
    for i, obj in enumerate(payload):
        where = f"{path}: sample {i}"
        if not isinstance(obj, dict) or "label" not in obj or "states" not in obj:
            raise DataFormatError(f"{where}: needs 'label' and 'states'")
        label = _parse_label(obj["label"], where)
        try:
            states = np.array(obj["states"], dtype=float)
            sig = Signal(states)
        except (ValueError, TypeError):
            raise DataFormatError(f"{where}: malformed states array") from None
        samples.append(LabeledSample(sig, label))
    return Dataset(samples)


def save_dataset(ds: Dataset, path, format: str | None = None) -> None:
    """Write a dataset to CSV or JSON, preserving sample order."""
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_csv_header(ds.length, ds.dim))
            for s in ds:
                writer.writerow(
                    [s.label] + [repr(float(v)) for v in s.signal.states.ravel()]
                )
    else:
        payload = [
            {"label": s.label, "states": s.signal.states.tolist()} for s in ds
        ]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


# ---------------------------------------------------------------------------
# Reach task (2-D, single block)
# ---------------------------------------------------------------------------

REACH_LENGTH = 20
REACH_TERMINAL_WINDOW = (17, 19)
REACH_GOAL_BOX = ((100.0, 150.0), (60.0, 90.0))
REACH_OBSTACLE_BOX = ((40.0, 70.0), (30.0, 80.0))
_REACH_START = ((5.0, 25.0), (5.0, 25.0))
_REACH_CORRIDOR = (85.0, 20.0)


def _in_box(point, box) -> bool:
    (x_lo, x_hi), (y_lo, y_hi) = box
    return x_lo <= point[0] <= x_hi and y_lo <= point[1] <= y_hi


def _strictly_in_box(point, box) -> bool:
    (x_lo, x_hi), (y_lo, y_hi) = box
    return x_lo < point[0] < x_hi and y_lo < point[1] < y_hi


def reach_label(signal: Signal) -> int:
    """Ground-truth label of a reach-task trajectory, from geometry alone."""
    states = signal.states
    lo, hi = REACH_TERMINAL_WINDOW
    in_goal = all(_in_box(states[t], REACH_GOAL_BOX) for t in range(lo, hi + 1))
    hits_obstacle = any(_in_box(s, REACH_OBSTACLE_BOX) for s in states)
    return 1 if (in_goal and not hits_obstacle) else -1


def _polyline(waypoints, times, length):
    """Piecewise-linear path through (time, point) waypoints, one row per step."""
    times = np.asarray(times, dtype=float)
    pts = np.asarray(waypoints, dtype=float)
    ts = np.arange(length, dtype=float)
    out = np.empty((length, pts.shape[1]))
    for j in range(pts.shape[1]):
        out[:, j] = np.interp(ts, times, pts[:, j])
    return out


def _uniform_in_box(rng, box, inset=0.0):
    (x_lo, x_hi), (y_lo, y_hi) = box
    return np.array(
        [
            rng.uniform(x_lo + inset, x_hi - inset),
            rng.uniform(y_lo + inset, y_hi - inset),
        ]
    )


def _near_miss_point(rng, box, offset_lo=1.0, offset_hi=12.0):
    """A point just outside one face of a box; hard negatives live here."""
    (x_lo, x_hi), (y_lo, y_hi) = box
    side = rng.integers(0, 4)
    off = rng.uniform(offset_lo, offset_hi)
    x = rng.uniform(x_lo, x_hi)
    y = rng.uniform(y_lo, y_hi)
    if side == 0:
        return np.array([x_lo - off, y])
    if side == 1:
        return np.array([x_hi + off, y])
    if side == 2:
        return np.array([x, y_lo - off])
    return np.array([x, y_hi + off])


def _reach_positive(rng, noise):
    start = _uniform_in_box(rng, _REACH_START)
    settle = _uniform_in_box(rng, REACH_GOAL_BOX, inset=2.0 + 2.0 * noise)
    corridor = np.asarray(_REACH_CORRIDOR) + rng.normal(0.0, 2.0, size=2)
    lo, _ = REACH_TERMINAL_WINDOW
    path = _polyline(
        [start, corridor, settle, settle],
        [0, 9, lo - 1, REACH_LENGTH - 1],
        REACH_LENGTH,
    )
    return path


def _reach_negative(rng, noise):
    start = _uniform_in_box(rng, _REACH_START)
    mode = rng.integers(0, 3)
    lo, _ = REACH_TERMINAL_WINDOW
    if mode == 0:
        # Near miss: settle just outside the goal box.
        settle = _near_miss_point(rng, REACH_GOAL_BOX, 1.0 + noise, 12.0 + noise)
        corridor = np.asarray(_REACH_CORRIDOR) + rng.normal(0.0, 2.0, size=2)
        return _polyline(
            [start, corridor, settle, settle],
            [0, 9, lo - 1, REACH_LENGTH - 1],
            REACH_LENGTH,
        )
    if mode == 1:
        # Constraint violation: cut through the obstacle and stop short.
        through = _uniform_in_box(rng, REACH_OBSTACLE_BOX, inset=4.0)
        stop = _near_miss_point(rng, REACH_GOAL_BOX, 4.0 + noise, 25.0 + noise)
        return _polyline(
            [start, through, stop, stop],
            [0, 9, lo - 1, REACH_LENGTH - 1],
            REACH_LENGTH,
        )
    # Early exit: touch the goal mid-trajectory, drift out before the window.
    visit = _uniform_in_box(rng, REACH_GOAL_BOX, inset=2.0)
    exit_pt = _near_miss_point(rng, REACH_GOAL_BOX, 2.0 + noise, 15.0 + noise)
    corridor = np.asarray(_REACH_CORRIDOR) + rng.normal(0.0, 2.0, size=2)
    return _polyline(
        [start, corridor, visit, exit_pt, exit_pt],
        [0, 8, 13, lo, REACH_LENGTH - 1],
        REACH_LENGTH,
    )


def _generate(n, noise, seed, balance, make_pos, make_neg, checker, meta):
    if n < 2:
        raise ValueError("need at least 2 samples")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    if not 0.0 < balance < 1.0:
        raise ValueError("balance must be in (0,1)")
    n_pos = int(round(balance * n))
    samples = []
    for i in range(n):
        want = 1 if i < n_pos else -1
        rng = np.random.default_rng([seed, i])
        for _ in range(64):
            base = make_pos(rng, noise) if want == 1 else make_neg(rng, noise)
            states = base + rng.normal(0.0, noise, size=base.shape)
            sig = Signal(states)
            if checker(sig) == want:
                samples.append(LabeledSample(sig, want))
                break
        else:
            raise RuntimeError(
                f"could not realize a label-{want} sample at index {i}; "
                f"noise={noise} is too large for the task geometry"
            )
    order = np.random.default_rng([seed, n, 0xC0FFEE]).permutation(n)
    samples = [samples[i] for i in order]
    metadata = dict(meta)
    metadata.update({"n": n, "noise": noise, "seed": seed, "balance": balance})
    return Dataset(samples, metadata)


def generate_reach_task(
    n: int, noise: float = 1.0, seed: int = 0, balance: float = 0.5
) -> Dataset:
    """Synthetic single-block reach-avoid trajectories (2-D, 20 steps).

    Deterministic in (n, noise, seed, balance): each sample draws from its
    own generator keyed by (seed, index), and candidates are re-checked with
    :func:`reach_label` until the intended label is realized.
    """
    return _generate(
        n,
        noise,
        seed,
        balance,
        _reach_positive,
        _reach_negative,
        reach_label,
        {"task": "reach", "dim": 2, "length": REACH_LENGTH},
    )


# ---------------------------------------------------------------------------
# Sequence task (4-D, two blocks in order)
# ---------------------------------------------------------------------------

SEQ_LENGTH = 40
SEQ_STAY_WINDOW = (20, 39)
SEQ_TERMINAL_WINDOW = (36, 39)
SEQ_GOAL_BOX = REACH_GOAL_BOX
SEQ_OBSTACLE_BOX = REACH_OBSTACLE_BOX
_SEQ_START_A = ((5.0, 25.0), (5.0, 25.0))
_SEQ_START_B = ((5.0, 25.0), (95.0, 120.0))
_SEQ_CORRIDOR_A = (85.0, 20.0)
_SEQ_CORRIDOR_B = (85.0, 110.0)


def _first_entry(states_2d, box):
    for t, p in enumerate(states_2d):
        if _in_box(p, box):
            return t
    return None


def sequence_label(signal: Signal) -> int:
    """Ground-truth label for the ordered two-block task, from geometry."""
    a = signal.states[:, 0:2]
    b = signal.states[:, 2:4]
    stay_lo, stay_hi = SEQ_STAY_WINDOW
    term_lo, term_hi = SEQ_TERMINAL_WINDOW
    a_stays = all(_in_box(a[t], SEQ_GOAL_BOX) for t in range(stay_lo, stay_hi + 1))
    b_ends = all(_in_box(b[t], SEQ_GOAL_BOX) for t in range(term_lo, term_hi + 1))
    a_entry = _first_entry(a, SEQ_GOAL_BOX)
    b_entry = _first_entry(b, SEQ_GOAL_BOX)
    ordered = a_entry is not None and (b_entry is None or a_entry < b_entry)
    clean = not any(
        _in_box(p, SEQ_OBSTACLE_BOX) for block in (a, b) for p in block
    )
    return 1 if (a_stays and b_ends and ordered and clean) else -1


def _seq_block_path(rng, start_box, corridor, settle, reach_t, length):
    start = _uniform_in_box(rng, start_box)
    way = np.asarray(corridor) + rng.normal(0.0, 2.0, size=2)
    return _polyline(
        [start, way, settle, settle],
        [0, max(2, reach_t // 2), reach_t, length - 1],
        length,
    )


def _sequence_positive(rng, noise):
    inset = 2.0 + 2.0 * noise
    settle_a = _uniform_in_box(rng, SEQ_GOAL_BOX, inset=inset)
    settle_b = _uniform_in_box(rng, SEQ_GOAL_BOX, inset=inset)
    reach_a = int(rng.integers(12, 18))
    reach_b = int(rng.integers(30, SEQ_TERMINAL_WINDOW[0]))
    a = _seq_block_path(rng, _SEQ_START_A, _SEQ_CORRIDOR_A, settle_a, reach_a, SEQ_LENGTH)
    b = _seq_block_path(rng, _SEQ_START_B, _SEQ_CORRIDOR_B, settle_b, reach_b, SEQ_LENGTH)
    return np.hstack([a, b])


def _sequence_negative(rng, noise):
    inset = 2.0 + 2.0 * noise
    mode = rng.integers(0, 4)
    reach_a = int(rng.integers(12, 18))
    reach_b = int(rng.integers(30, SEQ_TERMINAL_WINDOW[0]))
    settle_a = _uniform_in_box(rng, SEQ_GOAL_BOX, inset=inset)
    settle_b = _uniform_in_box(rng, SEQ_GOAL_BOX, inset=inset)
    if mode == 0:
        # Block A misses the goal.
        settle_a = _near_miss_point(rng, SEQ_GOAL_BOX, 1.0 + noise, 12.0 + noise)
    elif mode == 1:
        # Block B misses the goal.
        settle_b = _near_miss_point(rng, SEQ_GOAL_BOX, 1.0 + noise, 12.0 + noise)
    elif mode == 2:
        # Order violation: B settles first, A arrives late.
        reach_b = int(rng.integers(8, 14))
        reach_a = int(rng.integers(26, 34))
    else:
        # Constraint violation: A cuts through the obstacle and stops short.
        a = _polyline(
            [
                _uniform_in_box(rng, _SEQ_START_A),
                _uniform_in_box(rng, SEQ_OBSTACLE_BOX, inset=4.0),
                _near_miss_point(rng, SEQ_GOAL_BOX, 4.0 + noise, 25.0 + noise),
            ],
            [0, reach_a // 2, SEQ_LENGTH - 1],
            SEQ_LENGTH,
        )
        b = _seq_block_path(
            rng, _SEQ_START_B, _SEQ_CORRIDOR_B, settle_b, reach_b, SEQ_LENGTH
        )
        return np.hstack([a, b])
    a = _seq_block_path(rng, _SEQ_START_A, _SEQ_CORRIDOR_A, settle_a, reach_a, SEQ_LENGTH)
    b = _seq_block_path(rng, _SEQ_START_B, _SEQ_CORRIDOR_B, settle_b, reach_b, SEQ_LENGTH)
    return np.hstack([a, b])


def generate_sequence_task(
    n: int, noise: float = 1.0, seed: int = 0, balance: float = 0.5
) -> Dataset:
    """Synthetic ordered two-block trajectories (4-D, 40 steps)."""
    return _generate(
        n,
        noise,
        seed,
        balance,
        _sequence_positive,
        _sequence_negative,
        sequence_label,
        {"task": "sequence", "dim": 4, "length": SEQ_LENGTH},
    )
