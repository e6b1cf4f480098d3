"""Domain types and scenario configuration.

The simulated community is a square grid of small cells.  A handful of node
classes live on it: patients and caregivers who generate and carry health
messages, relay volunteers (employed or not), clinical staff, one or two
points of presence for the clinic (the delivery destination), and fixed
points of interest (stores, churches, schools) that people visit.

Mobile nodes follow a three-state routine (home / work / point of interest)
whose transition probabilities change across four periods of the day.  The
tables shipped here describe a typical weekday for two behaviour groups:
non-commuters (patients, caregivers, unemployed relays) and commuters
(employed relays, clinical staff).  Some raw rows are slightly
off-stochastic and are repaired by normalization when a scenario is built.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

ROW_SUM_TOL = 1e-9  # stochastic rows must sum to 1 within this after repair
MINUTES_PER_DAY = 24 * 60


# --------------------------------------------------------------------------
# errors

class ScenarioError(ValueError):
    """Base class for configuration problems.  CLI maps these to exit 2."""


class MissingKey(ScenarioError):
    """A required key, column, or table entry is absent."""


class OutOfRange(ScenarioError):
    """A value parsed fine but lies outside its legal range."""


class CardinalityViolation(ScenarioError):
    """Population counts are mutually inconsistent."""


class DegenerateRow(ScenarioError):
    """A transition row has no probability mass to normalize."""


# --------------------------------------------------------------------------
# enums

class ClassGroup(Enum):
    """Mobility behaviour group.  Values are the wire tokens used in CSVs."""

    NONCOMMUTER = "CUA"  # patients, caregivers, unemployed relays
    COMMUTER = "ES"      # employed relays, clinical staff

    def __str__(self) -> str:
        return self.value


class NodeClass(Enum):
    PATIENT = "patient"
    CAREGIVER = "caregiver"
    RELAY_UNEMPLOYED = "relay_unemployed"
    RELAY_EMPLOYED = "relay_employed"
    CLINICAL_STAFF = "clinical_staff"
    DESTINATION = "destination"
    POI = "poi"

    def __str__(self) -> str:
        return self.value

    @property
    def stationary(self) -> bool:
        return self in (NodeClass.DESTINATION, NodeClass.POI)

    @property
    def group(self) -> Optional[ClassGroup]:
        """Behaviour group for mobile classes, None for stationary ones."""
        if self in (NodeClass.PATIENT, NodeClass.CAREGIVER,
                    NodeClass.RELAY_UNEMPLOYED):
            return ClassGroup.NONCOMMUTER
        if self in (NodeClass.RELAY_EMPLOYED, NodeClass.CLINICAL_STAFF):
            return ClassGroup.COMMUTER
        return None


class MobilityState(IntEnum):
    """Routine state of a mobile node.  Order matches transition rows."""

    HOME = 0
    WORK = 1
    POI = 2

    def __str__(self) -> str:
        return self.name.lower()


STATE_ORDER = (MobilityState.HOME, MobilityState.WORK, MobilityState.POI)


# --------------------------------------------------------------------------
# geometry

@dataclass(frozen=True)
class Grid:
    """Square cell grid.  Cells are addressed (col, row), origin top-left."""

    side_cells: int = 820
    cell_size_ft: float = 10.0

    def __post_init__(self) -> None:
        if self.side_cells < 1:
            raise OutOfRange("grid.side_cells must be >= 1")
        if not (self.cell_size_ft > 0 and math.isfinite(self.cell_size_ft)):
            raise OutOfRange("grid.cell_size_ft must be positive and finite")

    @property
    def n_cells(self) -> int:
        return self.side_cells * self.side_cells

    def contains(self, col: int, row: int) -> bool:
        return 0 <= col < self.side_cells and 0 <= row < self.side_cells

    def center_ft(self, col: int, row: int) -> tuple[float, float]:
        """Center of a cell in feet from the grid origin."""
        return ((col + 0.5) * self.cell_size_ft, (row + 0.5) * self.cell_size_ft)

    def distance_ft(self, a: "Position", b: "Position") -> float:
        """Euclidean distance between two cell centers, in feet."""
        ax, ay = self.center_ft(a.col, a.row)
        bx, by = self.center_ft(b.col, b.row)
        return math.hypot(ax - bx, ay - by)


@dataclass(frozen=True)
class Position:
    col: int
    row: int


# --------------------------------------------------------------------------
# day periods

@dataclass(frozen=True)
class PeriodSchedule:
    """Partition of the day into numbered periods.

    Each entry is (period_id, start_minute, end_minute) with start inclusive
    and end exclusive; a period whose end is at or before its start wraps
    past midnight.  The entries must tile the full day exactly once.
    """

    entries: tuple[tuple[int, int, int], ...] = (
        (1, 19 * 60, 6 * 60 + 30),   # overnight, wraps midnight
        (2, 6 * 60 + 30, 9 * 60 + 30),
        (3, 9 * 60 + 30, 16 * 60 + 30),
        (4, 16 * 60 + 30, 19 * 60),
    )

    def __post_init__(self) -> None:
        if not self.entries:
            raise ScenarioError("schedule has no periods")
        covered = np.zeros(MINUTES_PER_DAY, dtype=np.int32)
        for pid, start, end in self.entries:
            if not (0 <= start < MINUTES_PER_DAY and 0 <= end < MINUTES_PER_DAY):
                raise OutOfRange(f"period {pid} bounds outside the day")
            if start == end:
                raise OutOfRange(f"period {pid} is empty")
            if end > start:
                covered[start:end] += 1
            else:  # wraps midnight
                covered[start:] += 1
                covered[:end] += 1
        if not (covered == 1).all():
            raise ScenarioError("periods must cover every minute exactly once")

    @property
    def period_ids(self) -> tuple[int, ...]:
        return tuple(sorted(pid for pid, _, _ in self.entries))

    def period_at(self, minute_of_day: int) -> int:
        minute = minute_of_day % MINUTES_PER_DAY
        for pid, start, end in self.entries:
            if end > start:
                if start <= minute < end:
                    return pid
            elif minute >= start or minute < end:
                return pid
        raise AssertionError("schedule does not cover the day")  # unreachable

    def minute_lookup(self) -> np.ndarray:
        """Period id for every minute of the day, as a (1440,) array."""
        table = np.empty(MINUTES_PER_DAY, dtype=np.int32)
        for minute in range(MINUTES_PER_DAY):
            table[minute] = self.period_at(minute)
        return table


def period_of(time_min: int, schedule: PeriodSchedule, start_minute: int = 0) -> int:
    """Period in effect at a simulation time, given the clock's start offset."""
    if time_min < 0:
        raise OutOfRange("time_min must be non-negative")
    return schedule.period_at((start_minute + time_min) % MINUTES_PER_DAY)


# --------------------------------------------------------------------------
# transition tables

@dataclass(frozen=True)
class TransitionTable:
    """Initial distribution and 3x3 transition matrix for one group/period.

    Rows and the initial vector are stored exactly as given; call
    :func:`normalize_transition_table` to repair them into distributions.
    State order is (home, work, poi) on both axes.
    """

    class_group: ClassGroup
    period: int
    initial: tuple[float, float, float]
    matrix: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if len(self.matrix) != 3 or any(len(r) != 3 for r in self.matrix):
            raise ScenarioError("transition matrix must be 3x3")
        if len(self.initial) != 3:
            raise ScenarioError("initial vector must have 3 entries")

    def initial_array(self) -> np.ndarray:
        return np.asarray(self.initial, dtype=np.float64)

    def matrix_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=np.float64)

    @property
    def is_normalized(self) -> bool:
        rows = np.vstack([self.initial_array(), self.matrix_array()])
        return bool(np.all(np.abs(rows.sum(axis=1) - 1.0) <= ROW_SUM_TOL))


def _normalize_row(row: Sequence[float], label: str) -> tuple[float, ...]:
    arr = np.asarray(row, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DegenerateRow(f"{label}: non-finite entry")
    if np.any(arr < 0):
        raise DegenerateRow(f"{label}: negative entry")
    total = float(arr.sum())
    if total <= 0.0:
        raise DegenerateRow(f"{label}: row sums to zero")
    return tuple(float(v) for v in arr / total)


def normalize_transition_table(table: TransitionTable) -> TransitionTable:
    """Rescale the initial vector and each matrix row to sum to exactly 1.

    Rows that already sum to 1 come back unchanged up to float rounding.
    Raises DegenerateRow for rows that are all zero, negative, or non-finite.
    """
    tag = f"{table.class_group.value} period {table.period}"
    initial = _normalize_row(table.initial, f"{tag} initial")
    matrix = tuple(
        _normalize_row(row, f"{tag} row {STATE_ORDER[i].name.lower()}")
        for i, row in enumerate(table.matrix)
    )
    return TransitionTable(table.class_group, table.period, initial, matrix)


# Built-in weekday tables for the two behaviour groups, one per day period.
# Values are survey-style estimates; a few rows do not quite sum to 1 and
# are left raw here so the normalization step is exercised on real input.
DEFAULT_TRANSITION_DATA: dict[tuple[str, int], tuple[tuple[float, ...], tuple[tuple[float, ...], ...]]] = {
    ("CUA", 1): ((0.85, 0.0, 0.015),
                 ((0.94, 0.0, 0.064), (0.0, 1.0, 0.0), (0.37, 0.0, 0.63))),
    ("CUA", 2): ((0.93, 0.0, 0.070),
                 ((0.97, 0.0, 0.032), (0.0, 1.0, 0.0), (0.59, 0.0, 0.41))),
    ("CUA", 3): ((0.76, 0.0, 0.24),
                 ((0.89, 0.0, 0.11), (0.0, 1.0, 0.0), (0.36, 0.0, 0.64))),
    ("CUA", 4): ((0.77, 0.0, 0.23),
                 ((0.91, 0.0, 0.086), (0.0, 1.0, 0.0), (0.30, 0.0, 0.70))),
    ("ES", 1): ((0.70, 0.079, 0.22),
                ((0.85, 0.019, 0.13), (0.14, 0.81, 0.043), (0.39, 0.32, 0.58))),
    ("ES", 2): ((0.71, 0.16, 0.13),
                ((0.86, 0.079, 0.061), (0.17, 0.61, 0.21), (0.51, 0.18, 0.31))),
    ("ES", 3): ((0.50, 0.33, 0.13),
                ((0.80, 0.083, 0.12), (0.063, 0.90, 0.037), (0.30, 0.057, 0.64))),
    ("ES", 4): ((0.48, 0.20, 0.32),
                ((0.80, 0.027, 0.17), (0.042, 0.88, 0.78), (0.28, 0.058, 0.66))),
}


def default_tables() -> tuple[TransitionTable, ...]:
    """The built-in tables, normalized, ordered by (group token, period)."""
    out = []
    for (token, period), (initial, matrix) in sorted(DEFAULT_TRANSITION_DATA.items()):
        raw = TransitionTable(ClassGroup(token), period, tuple(initial), tuple(matrix))
        out.append(normalize_transition_table(raw))
    return tuple(out)


# --------------------------------------------------------------------------
# messages

@dataclass
class Message:
    """One health report.  Latency is defined only once delivered."""

    message_id: int
    source: int
    created_at: int             # minutes since simulation start
    ttl_minutes: int
    delivered_at: Optional[int] = None
    expired_at: Optional[int] = None

    def __post_init__(self) -> None:
        if self.ttl_minutes <= 0:
            raise OutOfRange("message ttl must be positive")
        if self.created_at < 0:
            raise OutOfRange("message created_at must be non-negative")

    @property
    def latency(self) -> Optional[int]:
        if self.delivered_at is None:
            return None
        return self.delivered_at - self.created_at

    @property
    def deadline(self) -> int:
        """Last minute at which delivery still counts."""
        return self.created_at + self.ttl_minutes


# --------------------------------------------------------------------------
# scenario

_TIME_KEYS = {"sim.start_time"}
_BOOL_KEYS = {"message.creation_jitter"}
_PATH_KEYS = {"tables.file", "map.file"}
_INT_KEYS = {
    "grid.side_cells", "population.adults", "population.patients",
    "population.caregivers", "population.clinical_staff",
    "population.destinations", "population.pois",
    "message.per_patient_per_day", "sim.timestep_minutes", "sim.seed",
}
_FLOAT_KEYS = {
    "grid.cell_size_ft", "population.participation",
    "population.employed_ratio", "radio.range_mean_ft",
    "radio.range_var_ft2", "message.ttl_hours", "sim.duration_hours",
}
KNOWN_KEYS = _TIME_KEYS | _BOOL_KEYS | _PATH_KEYS | _INT_KEYS | _FLOAT_KEYS

DEFAULT_CONFIG: dict[str, object] = {
    "grid.side_cells": 820,
    "grid.cell_size_ft": 10.0,
    "population.adults": 400,
    "population.patients": 10,
    "population.caregivers": 10,
    "population.clinical_staff": 2,
    "population.destinations": 1,
    "population.pois": 25,
    "population.participation": 0.3,
    "population.employed_ratio": 0.935,
    "radio.range_mean_ft": 60.0,
    "radio.range_var_ft2": 20.0,
    "message.ttl_hours": 24.0,
    "message.per_patient_per_day": 1,
    "message.creation_jitter": False,
    "sim.timestep_minutes": 30,
    "sim.duration_hours": 24.0,
    "sim.start_time": "00:00",
    "sim.seed": 0,
}

MAX_CLINICAL_STAFF = 2
RELAY_WARN_FACTOR = 5  # warn when relays < factor * patients


@dataclass(frozen=True)
class ScenarioSpec:
    """A fully validated scenario.  Immutable; built by validate_scenario."""

    grid: Grid
    schedule: PeriodSchedule
    tables: tuple[TransitionTable, ...]
    adults: int
    patients: int
    caregivers: int
    clinical_staff: int
    destinations: int
    pois: int
    participation: float
    employed_ratio: float
    relays: int
    relays_employed: int
    range_mean_ft: float
    range_var_ft2: float
    ttl_minutes: int
    messages_per_patient: int
    creation_jitter: bool
    timestep_minutes: int
    duration_minutes: int
    start_minute: int
    seed: int
    poi_cells: Optional[tuple[tuple[int, int], ...]] = None
    destination_cells: Optional[tuple[tuple[int, int], ...]] = None

    @property
    def relays_unemployed(self) -> int:
        return self.relays - self.relays_employed

    @property
    def participants(self) -> int:
        """Nodes carrying a device: patients, caregivers, staff, relays."""
        return self.patients + self.caregivers + self.clinical_staff + self.relays

    @property
    def n_nodes(self) -> int:
        return self.participants + self.destinations + self.pois

    def table(self, group: ClassGroup, period: int) -> TransitionTable:
        for t in self.tables:
            if t.class_group is group and t.period == period:
                return t
        raise MissingKey(f"no transition table for {group.value} period {period}")

    def fingerprint(self) -> str:
        """Stable hash of everything that shapes a run's behaviour."""
        payload = {
            "grid": (self.grid.side_cells, self.grid.cell_size_ft),
            "schedule": self.schedule.entries,
            "tables": [
                (t.class_group.value, t.period, t.initial, t.matrix)
                for t in self.tables
            ],
            "population": (self.adults, self.patients, self.caregivers,
                           self.clinical_staff, self.destinations, self.pois,
                           self.participation, self.employed_ratio,
                           self.relays, self.relays_employed),
            "radio": (self.range_mean_ft, self.range_var_ft2),
            "message": (self.ttl_minutes, self.messages_per_patient,
                        self.creation_jitter),
            "sim": (self.timestep_minutes, self.duration_minutes,
                    self.start_minute, self.seed),
            "map": (self.poi_cells, self.destination_cells),
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_config(self) -> dict[str, object]:
        """Raw key/value form; validating it again rebuilds an equal spec."""
        return {
            "grid.side_cells": self.grid.side_cells,
            "grid.cell_size_ft": self.grid.cell_size_ft,
            "population.adults": self.adults,
            "population.patients": self.patients,
            "population.caregivers": self.caregivers,
            "population.clinical_staff": self.clinical_staff,
            "population.destinations": self.destinations,
            "population.pois": self.pois,
            "population.participation": self.participation,
            "population.employed_ratio": self.employed_ratio,
            "radio.range_mean_ft": self.range_mean_ft,
            "radio.range_var_ft2": self.range_var_ft2,
            "message.ttl_hours": self.ttl_minutes / 60.0,
            "message.per_patient_per_day": self.messages_per_patient,
            "message.creation_jitter": self.creation_jitter,
            "sim.timestep_minutes": self.timestep_minutes,
            "sim.duration_hours": self.duration_minutes / 60.0,
            "sim.start_time": f"{self.start_minute // 60:02d}:{self.start_minute % 60:02d}",
            "sim.seed": self.seed,
        }


def _coerce_int(key: str, value: object) -> int:
    if isinstance(value, bool):
        raise ScenarioError(f"{key}: expected an integer, got a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError as exc:
            raise ScenarioError(f"{key}: not an integer: {value!r}") from exc
    raise ScenarioError(f"{key}: not an integer: {value!r}")


def _coerce_float(key: str, value: object) -> float:
    if isinstance(value, bool):
        raise ScenarioError(f"{key}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = float(value.strip())
        except ValueError as exc:
            raise ScenarioError(f"{key}: not a number: {value!r}") from exc
    else:
        raise ScenarioError(f"{key}: not a number: {value!r}")
    if not math.isfinite(out):
        raise OutOfRange(f"{key}: must be finite")
    return out


def _coerce_bool(key: str, value: object) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("true", "1", "yes", "on"):
            return True
        if token in ("false", "0", "no", "off"):
            return False
    raise ScenarioError(f"{key}: not a boolean: {value!r}")


def _parse_start_time(key: str, value: object) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        minute = value
    elif isinstance(value, str):
        parts = value.strip().split(":")
        if len(parts) != 2:
            raise ScenarioError(f"{key}: expected HH:MM, got {value!r}")
        try:
            hours, minutes = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ScenarioError(f"{key}: expected HH:MM, got {value!r}") from exc
        if not (0 <= hours < 24 and 0 <= minutes < 60):
            raise OutOfRange(f"{key}: {value!r} is not a time of day")
        minute = hours * 60 + minutes
    else:
        raise ScenarioError(f"{key}: expected HH:MM, got {value!r}")
    if not 0 <= minute < MINUTES_PER_DAY:
        raise OutOfRange(f"{key}: minute of day out of range")
    return minute


def load_table_overrides(path: str | Path,
                         base: Sequence[TransitionTable]) -> tuple[TransitionTable, ...]:
    """Apply per-row table overrides from a CSV file onto the defaults.

    Columns: class_group, period, kind, p_home, p_work, p_poi.  kind is one
    of initial, row_home, row_work, row_poi.  Unmentioned entries keep their
    built-in values; every row of the result is re-normalized.
    """
    # keyed (group, period) -> [initial, row_h, row_w, row_p] as mutable lists
    slot_of = {"initial": 0, "row_home": 1, "row_work": 2, "row_poi": 3}
    work: dict[tuple[ClassGroup, int], list[tuple[float, ...]]] = {}
    for t in base:
        work[(t.class_group, t.period)] = [t.initial, *t.matrix]

    text = Path(path).read_text(encoding="utf-8")
    rows = [line.strip() for line in text.splitlines()]
    rows = [r for r in rows if r and not r.startswith("#")]
    if rows and rows[0].lower().replace(" ", "").startswith("class_group,"):
        rows = rows[1:]  # optional header
    for lineno, row in enumerate(rows, start=1):
        fields = [f.strip() for f in row.split(",")]
        if len(fields) != 6:
            raise MissingKey(f"{path}: line {lineno}: expected 6 columns")
        token, period_s, kind = fields[0], fields[1], fields[2].lower()
        try:
            group = ClassGroup(token)
        except ValueError as exc:
            raise OutOfRange(f"{path}: line {lineno}: unknown class_group {token!r}") from exc
        period = _coerce_int("period", period_s)
        if kind not in slot_of:
            raise OutOfRange(f"{path}: line {lineno}: unknown kind {kind!r}")
        if (group, period) not in work:
            raise MissingKey(f"{path}: line {lineno}: no base table for "
                             f"{token} period {period}")
        probs = tuple(_coerce_float(f"p[{i}]", fields[3 + i]) for i in range(3))
        work[(group, period)][slot_of[kind]] = probs

    out = []
    for (group, period), slots in sorted(work.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
        raw = TransitionTable(group, period, slots[0], tuple(slots[1:]))
        out.append(normalize_transition_table(raw))
    return tuple(out)


def load_map_file(path: str | Path, grid: Grid) -> tuple[tuple[tuple[int, int], ...],
                                                         tuple[tuple[int, int], ...]]:
    """Read fixed POI / destination cell coordinates from a CSV file.

    Columns: kind (poi or destination), col, row.  Returns (poi_cells,
    destination_cells) in file order.
    """
    pois: list[tuple[int, int]] = []
    dests: list[tuple[int, int]] = []
    text = Path(path).read_text(encoding="utf-8")
    rows = [line.strip() for line in text.splitlines()]
    rows = [r for r in rows if r and not r.startswith("#")]
    if rows and rows[0].lower().replace(" ", "").startswith("kind,"):
        rows = rows[1:]
    for lineno, row in enumerate(rows, start=1):
        fields = [f.strip() for f in row.split(",")]
        if len(fields) != 3:
            raise MissingKey(f"{path}: line {lineno}: expected 3 columns")
        kind = fields[0].lower()
        col = _coerce_int("col", fields[1])
        rnum = _coerce_int("row", fields[2])
        if not grid.contains(col, rnum):
            raise OutOfRange(f"{path}: line {lineno}: cell ({col}, {rnum}) "
                             f"outside the {grid.side_cells}-cell grid")
        if kind == "poi":
            pois.append((col, rnum))
        elif kind == "destination":
            dests.append((col, rnum))
        else:
            raise OutOfRange(f"{path}: line {lineno}: unknown kind {kind!r}")
    cells = pois + dests
    if len(set(cells)) != len(cells):
        raise OutOfRange(f"{path}: duplicate cells in map file")
    return tuple(pois), tuple(dests)


def validate_scenario(raw: Mapping[str, object] | None = None,
                      schedule: Optional[PeriodSchedule] = None) -> ScenarioSpec:
    """Check a raw key/value config and build an immutable ScenarioSpec.

    Unknown keys are rejected.  Derived counts: the relay pool is
    round(participation * adults) minus the patients, caregivers, and staff
    who are participants already; the employed share of that pool is
    round(employed_ratio * relays).  Raises MissingKey / OutOfRange /
    CardinalityViolation; warns when relays < 5 * patients.
    """
    config = dict(DEFAULT_CONFIG)
    for key, value in (raw or {}).items():
        if key not in KNOWN_KEYS:
            raise ScenarioError(f"unknown configuration key: {key!r}")
        config[key] = value
    for key in _PATH_KEYS:
        config.setdefault(key, None)

    grid = Grid(_coerce_int("grid.side_cells", config["grid.side_cells"]),
                _coerce_float("grid.cell_size_ft", config["grid.cell_size_ft"]))
    schedule = schedule or PeriodSchedule()

    adults = _coerce_int("population.adults", config["population.adults"])
    patients = _coerce_int("population.patients", config["population.patients"])
    caregivers = _coerce_int("population.caregivers", config["population.caregivers"])
    staff = _coerce_int("population.clinical_staff", config["population.clinical_staff"])
    destinations = _coerce_int("population.destinations", config["population.destinations"])
    pois = _coerce_int("population.pois", config["population.pois"])
    participation = _coerce_float("population.participation", config["population.participation"])
    employed_ratio = _coerce_float("population.employed_ratio", config["population.employed_ratio"])
    range_mean = _coerce_float("radio.range_mean_ft", config["radio.range_mean_ft"])
    range_var = _coerce_float("radio.range_var_ft2", config["radio.range_var_ft2"])
    ttl_hours = _coerce_float("message.ttl_hours", config["message.ttl_hours"])
    per_patient = _coerce_int("message.per_patient_per_day", config["message.per_patient_per_day"])
    jitter = _coerce_bool("message.creation_jitter", config["message.creation_jitter"])
    timestep = _coerce_int("sim.timestep_minutes", config["sim.timestep_minutes"])
    duration_hours = _coerce_float("sim.duration_hours", config["sim.duration_hours"])
    start_minute = _parse_start_time("sim.start_time", config["sim.start_time"])
    seed = _coerce_int("sim.seed", config["sim.seed"])

    if adults < 1:
        raise OutOfRange("population.adults must be >= 1")
    if patients < 1:
        raise OutOfRange("population.patients must be >= 1")
    if caregivers < 0 or staff < 0:
        raise OutOfRange("population counts must be non-negative")
    if not 0 <= staff <= MAX_CLINICAL_STAFF:
        raise OutOfRange(f"population.clinical_staff must be 0..{MAX_CLINICAL_STAFF}")
    if destinations < 1:
        raise CardinalityViolation("at least one destination is required")
    if pois < 1:
        raise OutOfRange("population.pois must be >= 1")
    if destinations > patients:
        raise CardinalityViolation("more destinations than patients")
    if not 0.0 < participation <= 1.0:
        raise OutOfRange("population.participation must be in (0, 1]")
    if not 0.0 <= employed_ratio <= 1.0:
        raise OutOfRange("population.employed_ratio must be in [0, 1]")
    if range_mean < 0:
        raise OutOfRange("radio.range_mean_ft must be non-negative")
    if range_var < 0:
        raise OutOfRange("radio.range_var_ft2 must be non-negative")
    if ttl_hours <= 0:
        raise OutOfRange("message.ttl_hours must be positive")
    if per_patient < 1:
        raise OutOfRange("message.per_patient_per_day must be >= 1")
    if timestep < 1:
        raise OutOfRange("sim.timestep_minutes must be >= 1")
    if duration_hours <= 0:
        raise OutOfRange("sim.duration_hours must be positive")

    ttl_minutes = ttl_hours * 60.0
    duration_minutes = duration_hours * 60.0
    if abs(ttl_minutes - round(ttl_minutes)) > 1e-9:
        raise OutOfRange("message.ttl_hours must be a whole number of minutes")
    if abs(duration_minutes - round(duration_minutes)) > 1e-9:
        raise OutOfRange("sim.duration_hours must be a whole number of minutes")
    ttl_minutes = int(round(ttl_minutes))
    duration_minutes = int(round(duration_minutes))

    relays, relays_employed = _derive_relays(adults, patients, caregivers,
                                             staff, participation,
                                             employed_ratio)

    if grid.n_cells < pois + destinations:
        raise CardinalityViolation("grid too small to place POIs and destinations")

    tables = default_tables()
    if config.get("tables.file"):
        tables = load_table_overrides(str(config["tables.file"]), tables)
    for t in tables:
        if not t.is_normalized:
            raise AssertionError("table left unnormalized")  # unreachable
    for group in ClassGroup:
        for period in schedule.period_ids:
            present = any(t.class_group is group and t.period == period for t in tables)
            if not present:
                raise MissingKey(f"no transition table for {group.value} period {period}")

    poi_cells = destination_cells = None
    if config.get("map.file"):
        poi_cells, destination_cells = load_map_file(str(config["map.file"]), grid)
        if len(poi_cells) != pois:
            raise CardinalityViolation(
                f"map file has {len(poi_cells)} POIs, scenario wants {pois}")
        if len(destination_cells) != destinations:
            raise CardinalityViolation(
                f"map file has {len(destination_cells)} destinations, "
                f"scenario wants {destinations}")

    return ScenarioSpec(
        grid=grid, schedule=schedule, tables=tables,
        adults=adults, patients=patients, caregivers=caregivers,
        clinical_staff=staff, destinations=destinations, pois=pois,
        participation=participation, employed_ratio=employed_ratio,
        relays=relays, relays_employed=relays_employed,
        range_mean_ft=range_mean, range_var_ft2=range_var,
        ttl_minutes=ttl_minutes, messages_per_patient=per_patient,
        creation_jitter=jitter, timestep_minutes=timestep,
        duration_minutes=duration_minutes, start_minute=start_minute,
        seed=seed, poi_cells=poi_cells, destination_cells=destination_cells,
    )


def _derive_relays(adults: int, patients: int, caregivers: int, staff: int,
                   participation: float, employed_ratio: float) -> tuple[int, int]:
    """Relay pool size and its employed share, with cardinality checks.

    Device owners are round(participation * adults); patients, caregivers,
    and staff own devices already, the remainder are relay volunteers.
    """
    device_owners = round(participation * adults)
    relays = device_owners - (patients + caregivers + staff)
    if relays < 1:
        raise CardinalityViolation(
            f"participation {participation} over {adults} adults leaves "
            f"{relays} relay volunteers; need at least 1")
    relays_employed = round(employed_ratio * relays)
    if relays < RELAY_WARN_FACTOR * patients:
        warnings.warn(
            f"thin relay pool: {relays} relays for {patients} patients "
            f"(less than {RELAY_WARN_FACTOR}x)", UserWarning, stacklevel=3)
    return relays, relays_employed


def with_population(spec: ScenarioSpec, *, patients: Optional[int] = None,
                    caregivers: Optional[int] = None,
                    participation: Optional[float] = None) -> ScenarioSpec:
    """Copy of a spec at a different population point.

    Everything else (tables, map, radio, clock) carries over; the relay
    pool is re-derived and re-checked for the new counts.
    """
    new_patients = spec.patients if patients is None else patients
    new_caregivers = spec.caregivers if caregivers is None else caregivers
    new_participation = spec.participation if participation is None else participation
    if new_patients < 1:
        raise OutOfRange("population.patients must be >= 1")
    if new_caregivers < 0:
        raise OutOfRange("population counts must be non-negative")
    if not 0.0 < new_participation <= 1.0:
        raise OutOfRange("population.participation must be in (0, 1]")
    if spec.destinations > new_patients:
        raise CardinalityViolation("more destinations than patients")
    relays, relays_employed = _derive_relays(
        spec.adults, new_patients, new_caregivers, spec.clinical_staff,
        new_participation, spec.employed_ratio)
    return replace(spec, patients=new_patients, caregivers=new_caregivers,
                   participation=new_participation, relays=relays,
                   relays_employed=relays_employed)


def parse_scenario_text(text: str) -> dict[str, object]:
    """Parse ``key = value`` lines.  Blank lines and # comments are skipped."""
    out: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ScenarioError(f"line {lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ScenarioError(f"line {lineno}: empty key")
        if key in out:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_scenario(path: str | Path,
                  overrides: Mapping[str, object] | None = None) -> ScenarioSpec:
    """Read a scenario file, apply overrides on top, and validate."""
    raw = parse_scenario_text(Path(path).read_text(encoding="utf-8"))
    # resolve table/map paths relative to the scenario file
    base_dir = Path(path).resolve().parent
    for key in ("tables.file", "map.file"):
        if key in raw and raw[key]:
            candidate = Path(str(raw[key]))
            if not candidate.is_absolute():
                raw[key] = str(base_dir / candidate)
    for key, value in (overrides or {}).items():
        raw[key] = value
    return validate_scenario(raw)
