"""Run orchestration: build a population, simulate, sweep, and emit results.

One run is fully determined by the scenario spec and a run seed.  The
random stream is derived from the scenario fingerprint plus the seed, so a
given (scenario, seed) pair produces bit-identical results no matter where
in a sweep it executes or how many worker processes are involved.

Draw order within a run is fixed: site placement, homes, work sites, radio
ranges, initial states, initial POI picks, optional message-time jitter,
then per step one state draw for all mobile nodes followed by one POI draw
for the nodes sitting at a POI.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from rrpm.metrics import AggregateResult, RunResult, aggregate
from rrpm.mobility import (
    CLASS_CODE,
    Placement,
    Roster,
    advance_states,
    assign_locations,
    cumulative_tables,
    positions_for,
    redraw_pois,
    sample_initial_state,
)
from rrpm.model import (
    Message,
    MobilityState,
    NodeClass,
    ScenarioError,
    ScenarioSpec,
    period_of,
    with_population,
)
from rrpm.network import (
    cell_centers_ft,
    contact_pairs,
    exchange,
    expire,
    live_mask,
    ranges_array,
    sample_ranges,
)

SWEEP_CSV_COLUMNS = (
    "patients", "participation", "n_seeds", "mean_delivery", "sem_delivery",
    "mean_latency_min", "sem_latency_min", "max_latency_min",
    "seeds_no_delivery",
)

# Fixed points of interest relay nothing: messages ride only on devices
# people carry.  Sites still show up in contact detection (they are real
# radio endpoints) but contacts touching them move no messages, except that
# destination contacts deliver.
POIS_RELAY = False


def synthesize_population(spec: ScenarioSpec) -> Roster:
    """Build the node roster: dense ids in class blocks, caregivers paired.

    Id order is patients, caregivers, clinical staff, employed relays,
    unemployed relays, destinations, POIs.  Caregiver i tends patient
    i mod patients, which is a 1:1 pairing whenever the counts match.
    """
    blocks = (
        (NodeClass.PATIENT, spec.patients),
        (NodeClass.CAREGIVER, spec.caregivers),
        (NodeClass.CLINICAL_STAFF, spec.clinical_staff),
        (NodeClass.RELAY_EMPLOYED, spec.relays_employed),
        (NodeClass.RELAY_UNEMPLOYED, spec.relays_unemployed),
        (NodeClass.DESTINATION, spec.destinations),
        (NodeClass.POI, spec.pois),
    )
    classes = np.concatenate(
        [np.full(count, CLASS_CODE[node_class], dtype=np.int8)
         for node_class, count in blocks])
    paired = np.full(classes.shape[0], -1, dtype=np.int32)
    for i in range(spec.caregivers):
        paired[spec.patients + i] = i % spec.patients
    return Roster(classes, paired)


def _creation_times(spec: ScenarioSpec, n_messages: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Message creation minutes, patient-major.

    Without jitter the per-patient quota is spread evenly from t=0; with
    jitter each message gets a uniform minute in the day.
    """
    if spec.creation_jitter:
        return rng.integers(0, spec.duration_minutes, size=n_messages)
    per = spec.messages_per_patient
    offsets = np.array([(k * spec.duration_minutes) // per for k in range(per)],
                       dtype=np.int64)
    return np.tile(offsets, n_messages // per)


@dataclass
class RoundLog:
    """What happened in one exchange round."""

    time_min: int
    contacts: np.ndarray                      # (k, 2) node id pairs, a < b
    transfers: list[tuple[int, int, int]]     # (giver, receiver, message_id)
    deliveries: list[tuple[int, int, int]]    # (message_id, giver, destination)
    expired: list[int]                        # message ids


class Simulation:
    """One scenario instance stepped round by round.

    State lives in packed arrays: states, current_poi, cells, and the
    (nodes x messages) boolean holding matrix.  run() drives the standard
    loop; tests step advance()/exchange_round() by hand to probe
    invariants mid-flight.
    """

    def __init__(self, spec: ScenarioSpec, seed: int,
                 record_events: bool = False,
                 pois_relay: bool = POIS_RELAY) -> None:
        self.spec = spec
        self.seed = seed
        self.record_events = record_events
        self.pois_relay = pois_relay
        fp_entropy = int(spec.fingerprint()[:16], 16)
        self.rng = np.random.default_rng(np.random.SeedSequence((fp_entropy, seed)))

        self.roster = synthesize_population(spec)
        n = self.roster.n_nodes
        self.placement = assign_locations(spec, self.roster, self.rng)
        profiles = sample_ranges(range(n), spec.range_mean_ft,
                                 spec.range_var_ft2, self.rng)
        self.ranges_ft = ranges_array(profiles)
        self.destination_ids = self.roster.destination_ids
        self._poi_node = self.roster.classes == CLASS_CODE[NodeClass.POI]
        self.mobile = self.roster.mobile_mask
        self._groups_mobile = self.roster.group_codes()[self.mobile]
        self._cubes = cumulative_tables(spec)

        start_period = period_of(0, spec.schedule, spec.start_minute)
        self.states = sample_initial_state(spec, self.roster, start_period,
                                           self.rng)
        self.current_poi = redraw_pois(self.states,
                                       np.full(n, -1, dtype=np.int32),
                                       spec.pois, self.rng)
        self.cells = self._resolve_cells()

        n_messages = spec.patients * spec.messages_per_patient
        created = _creation_times(spec, n_messages, self.rng)
        sources = np.repeat(self.roster.patient_ids, spec.messages_per_patient)
        self.messages = [
            Message(message_id=j, source=int(sources[j]),
                    created_at=int(created[j]), ttl_minutes=spec.ttl_minutes)
            for j in range(n_messages)
        ]
        self.stores = np.zeros((n, n_messages), dtype=bool)
        self._placed = np.zeros(n_messages, dtype=bool)
        self.time = 0

    def _resolve_cells(self) -> np.ndarray:
        return positions_for(self.states, self.placement.home_cells,
                             self.placement.work_cells, self.current_poi,
                             self.placement.poi_cells)

    @property
    def period(self) -> int:
        return period_of(self.time, self.spec.schedule, self.spec.start_minute)

    def done(self) -> bool:
        """True once every message is delivered or expired."""
        return all(m.delivered_at is not None or m.expired_at is not None
                   for m in self.messages)

    def advance(self) -> None:
        """Move the clock one timestep and step every mobile node."""
        self.time += self.spec.timestep_minutes
        cube = self._cubes[self.period]
        self.states[self.mobile] = advance_states(
            self.states[self.mobile], self._groups_mobile, cube, self.rng)
        self.current_poi = redraw_pois(self.states, self.current_poi,
                                       self.spec.pois, self.rng)
        self.cells = self._resolve_cells()

    def exchange_round(self) -> RoundLog:
        """Detect contacts at the current time, swap messages, expire."""
        t = self.time
        due = ~self._placed
        for j in np.flatnonzero(due):
            if self.messages[j].created_at <= t:
                self.stores[self.messages[j].source, j] = True
                self._placed[j] = True

        centers = cell_centers_ft(self.cells, self.spec.grid.cell_size_ft)
        pairs = contact_pairs(centers, self.ranges_ft)
        if self.pois_relay:
            relay_pairs = pairs
        else:
            poi_end = (self._poi_node[pairs[:, 0]]
                       | self._poi_node[pairs[:, 1]]) if pairs.size else \
                np.zeros(0, dtype=bool)
            relay_pairs = pairs[~poi_end]

        transfers: list[tuple[int, int, int]] = []
        if self.record_events and relay_pairs.size:
            live = live_mask(self.messages, t)
            start = self.stores.copy()
            start[self.destination_ids] = False
            start &= live[None, :]
            is_dest = np.zeros(self.roster.n_nodes, dtype=bool)
            is_dest[self.destination_ids] = True
            for a, b in relay_pairs:
                for giver, taker in ((int(b), int(a)), (int(a), int(b))):
                    if is_dest[taker]:
                        continue  # arrivals at a destination log as deliveries
                    for j in np.flatnonzero(start[giver] & ~self.stores[taker]):
                        transfers.append((giver, taker,
                                          self.messages[j].message_id))

        self.stores, deliveries = exchange(relay_pairs, self.stores,
                                           self.messages,
                                           self.destination_ids, t)
        expired = expire(self.messages, self.stores, t)
        return RoundLog(t, pairs, transfers, deliveries, expired)

    def run(self, on_round: Optional[Callable[["Simulation", RoundLog], None]]
            = None) -> RunResult:
        """Drive the full loop: a round at t=0, then step-and-round."""
        log = self.exchange_round()
        if on_round:
            on_round(self, log)
        dt = self.spec.timestep_minutes
        while self.time + dt <= self.spec.duration_minutes and not self.done():
            self.advance()
            log = self.exchange_round()
            if on_round:
                on_round(self, log)
        return self.result()

    def result(self) -> RunResult:
        return RunResult.from_messages(self.seed, self.spec.fingerprint(),
                                       self.spec.patients,
                                       self.spec.participation, self.messages)


class _RunRecorder:
    """CSV writers for the trajectory dump and the event log."""

    def __init__(self, sim: Simulation, trace_path: Optional[Path],
                 events_path: Optional[Path]) -> None:
        self.trace_file = self.events_file = None
        self.trace = self.events = None
        if trace_path is not None:
            self.trace_file = open(trace_path, "w", newline="",
                                   encoding="utf-8")
            self.trace = csv.writer(self.trace_file)
            self.trace.writerow(("time_min", "node_id", "class", "state",
                                 "col", "row"))
        if events_path is not None:
            self.events_file = open(events_path, "w", newline="",
                                    encoding="utf-8")
            self.events = csv.writer(self.events_file)
            self.events.writerow(("time_min", "event", "node_a", "node_b",
                                  "message_id"))
        self._mobile_ids = np.flatnonzero(sim.mobile)

    def on_round(self, sim: Simulation, log: RoundLog) -> None:
        if self.trace is not None:
            for nid in self._mobile_ids:
                self.trace.writerow((
                    log.time_min, int(nid),
                    str(sim.roster.node_class(int(nid))),
                    str(MobilityState(int(sim.states[nid]))),
                    int(sim.cells[nid, 0]), int(sim.cells[nid, 1])))
        if self.events is not None:
            for a, b in log.contacts:
                self.events.writerow((log.time_min, "contact", int(a), int(b), ""))
            for giver, taker, mid in log.transfers:
                self.events.writerow((log.time_min, "transfer", giver, taker, mid))
            for mid, giver, dest in log.deliveries:
                self.events.writerow((log.time_min, "delivery", giver, dest, mid))
            for mid in log.expired:
                self.events.writerow((log.time_min, "expiry", "", "", mid))

    def close(self) -> None:
        for f in (self.trace_file, self.events_file):
            if f is not None:
                f.close()


def run_simulation(spec: ScenarioSpec, seed: int,
                   trace_path: Optional[str | Path] = None,
                   events_path: Optional[str | Path] = None) -> RunResult:
    """Run one scenario instance; optionally dump trajectory and event CSVs."""
    record = trace_path is not None or events_path is not None
    sim = Simulation(spec, seed, record_events=events_path is not None)
    if not record:
        return sim.run()
    recorder = _RunRecorder(
        sim,
        Path(trace_path) if trace_path is not None else None,
        Path(events_path) if events_path is not None else None)
    try:
        return sim.run(on_round=recorder.on_round)
    finally:
        recorder.close()


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepSpec:
    """A grid of scenario points swept over seeds.

    Points are the cross product of the patients and participation value
    lists.  At points where the patients count differs from the base
    scenario the caregiver count is set equal to it, keeping the
    patient-caregiver pairing one-to-one as both roles scale together.
    """

    base: ScenarioSpec
    patients_values: tuple[int, ...]
    participation_values: tuple[float, ...]
    seeds: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.patients_values or not self.participation_values:
            raise ScenarioError("sweep axes must be non-empty")
        if len(self.seeds) < 2:
            raise ScenarioError("sweeps need at least two seeds")
        if len(set(self.seeds)) != len(self.seeds):
            raise ScenarioError("sweep seeds must be distinct")

    @classmethod
    def over(cls, base: ScenarioSpec,
             patients: Optional[Iterable[int]] = None,
             participation: Optional[Iterable[float]] = None,
             seeds: Iterable[int] = range(100)) -> "SweepSpec":
        return cls(
            base=base,
            patients_values=tuple(patients) if patients is not None
            else (base.patients,),
            participation_values=tuple(participation) if participation is not None
            else (base.participation,),
            seeds=tuple(seeds),
        )

    def point_specs(self) -> list[ScenarioSpec]:
        """Scenario per point, patients-major then participation order."""
        out = []
        for k in self.patients_values:
            caregivers = self.base.caregivers if k == self.base.patients else k
            for p in self.participation_values:
                out.append(with_population(self.base, patients=k,
                                           caregivers=caregivers,
                                           participation=p))
        return out


@dataclass(frozen=True)
class SweepTable:
    """Aggregated sweep output, one row per scenario point."""

    rows: tuple[AggregateResult, ...]


def _sweep_task(args: tuple[ScenarioSpec, int]) -> RunResult:
    spec, seed = args
    return run_simulation(spec, seed)


def run_sweep(sweep: SweepSpec, jobs: int = 1) -> SweepTable:
    """Run every (point, seed) pair and aggregate per point.

    The output is independent of worker count and completion order: run
    streams depend only on (scenario fingerprint, seed), and rows are
    assembled in point-grid order with seeds sorted.
    """
    specs = sweep.point_specs()
    tasks = [(spec, seed) for spec in specs for seed in sweep.seeds]
    if jobs <= 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (jobs * 8))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=chunk))

    rows = []
    n_seeds = len(sweep.seeds)
    for i in range(len(specs)):
        rows.append(aggregate(results[i * n_seeds:(i + 1) * n_seeds]))
    return SweepTable(tuple(rows))


# --------------------------------------------------------------------------
# emission

def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_results(table: SweepTable,
                 csv_path: Optional[str | Path] = None,
                 json_path: Optional[str | Path] = None,
                 plots_dir: Optional[str | Path] = None) -> list[Path]:
    """Write the sweep table as CSV (canonical), JSON, and SVG plots.

    The CSV is byte-stable for identical tables: fixed column order, repr
    floats, LF line endings, empty fields for undefined latency stats.
    """
    written: list[Path] = []
    if csv_path is not None:
        path = Path(csv_path)
        lines = [",".join(SWEEP_CSV_COLUMNS)]
        for row in table.rows:
            lines.append(",".join(_fmt(v) for v in (
                row.patients, row.participation, row.n_seeds,
                row.mean_delivery, row.sem_delivery, row.mean_latency_min,
                row.sem_latency_min, row.max_latency_min,
                row.seeds_no_delivery)))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    if json_path is not None:
        path = Path(json_path)
        payload = {
            "columns": list(SWEEP_CSV_COLUMNS),
            "points": [
                {
                    "patients": row.patients,
                    "participation": row.participation,
                    "n_seeds": row.n_seeds,
                    "mean_delivery": row.mean_delivery,
                    "sem_delivery": row.sem_delivery,
                    "mean_latency_min": row.mean_latency_min,
                    "sem_latency_min": row.sem_latency_min,
                    "max_latency_min": row.max_latency_min,
                    "seeds_no_delivery": row.seeds_no_delivery,
                    "fingerprint": row.results[0].fingerprint,
                    "seeds": [
                        {
                            "seed": r.seed,
                            "total_messages": r.total_messages,
                            "delivered": r.delivered,
                            "delivery_probability": r.delivery_probability,
                            "mean_latency_min": r.mean_latency,
                            "max_latency_min": r.z_max,
                            "latencies_min": list(r.latencies),
                        }
                        for r in row.results
                    ],
                }
                for row in table.rows
            ],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        written.append(path)

    if plots_dir is not None:
        written.extend(plot_table(table, plots_dir))
    return written


def read_sweep_csv(path: str | Path) -> list[dict[str, object]]:
    """Read a sweep CSV back into typed rows."""
    rows: list[dict[str, object]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SWEEP_CSV_COLUMNS:
            raise ScenarioError(f"{path}: not a sweep table")
        for rec in reader:
            rows.append({
                "patients": int(rec["patients"]),
                "participation": float(rec["participation"]),
                "n_seeds": int(rec["n_seeds"]),
                "mean_delivery": float(rec["mean_delivery"]),
                "sem_delivery": float(rec["sem_delivery"]),
                "mean_latency_min": float(rec["mean_latency_min"])
                if rec["mean_latency_min"] else None,
                "sem_latency_min": float(rec["sem_latency_min"])
                if rec["sem_latency_min"] else None,
                "max_latency_min": int(rec["max_latency_min"])
                if rec["max_latency_min"] else None,
                "seeds_no_delivery": int(rec["seeds_no_delivery"]),
            })
    return rows


def _table_rows_as_dicts(table: SweepTable) -> list[dict[str, object]]:
    return [{
        "patients": r.patients, "participation": r.participation,
        "n_seeds": r.n_seeds, "mean_delivery": r.mean_delivery,
        "sem_delivery": r.sem_delivery, "mean_latency_min": r.mean_latency_min,
        "sem_latency_min": r.sem_latency_min,
        "max_latency_min": r.max_latency_min,
        "seeds_no_delivery": r.seeds_no_delivery,
    } for r in table.rows]


METRIC_FIELDS = {
    "delivery": ("mean_delivery", "sem_delivery", "mean delivery probability"),
    "latency": ("mean_latency_min", "sem_latency_min", "mean latency (min)"),
}
AXIS_LABELS = {
    "patients": "patients",
    "participation": "participation (fraction of adults)",
}


def plot_rows(rows: Sequence[dict[str, object]], metric: str, x_axis: str,
              out_path: str | Path) -> Path:
    """Errorbar plot of one metric against one swept axis, saved as SVG.

    Rows sharing the other axis's value become one line each.
    """
    if metric not in METRIC_FIELDS:
        raise ScenarioError(f"unknown metric {metric!r}")
    if x_axis not in AXIS_LABELS:
        raise ScenarioError(f"unknown axis {x_axis!r}")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    # pinned hashsalt keeps SVG element ids, and so the bytes, reproducible
    matplotlib.rcParams["svg.hashsalt"] = "sweep"

    y_field, err_field, y_label = METRIC_FIELDS[metric]
    other = "participation" if x_axis == "patients" else "patients"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    series = sorted({row[other] for row in rows})
    for value in series:
        pts = [r for r in rows if r[other] == value
               and r[y_field] is not None]
        pts.sort(key=lambda r: r[x_axis])
        if not pts:
            continue
        xs = [r[x_axis] for r in pts]
        ys = [r[y_field] for r in pts]
        errs = [r[err_field] if r[err_field] is not None else 0.0 for r in pts]
        label = f"{other}={value}" if len(series) > 1 else None
        ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=label)
    ax.set_xlabel(AXIS_LABELS[x_axis])
    ax.set_ylabel(y_label)
    xticks = sorted({r[x_axis] for r in rows})
    ax.set_xticks(xticks)
    if x_axis == "participation":
        ax.set_xticklabels([f"{v:g}" for v in xticks])
    if len(series) > 1:
        ax.legend(fontsize="small")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def plot_table(table: SweepTable, plots_dir: str | Path) -> list[Path]:
    """Standard plot set for a sweep: each metric against each varied axis."""
    rows = _table_rows_as_dicts(table)
    out_dir = Path(plots_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    varied = [axis for axis in ("patients", "participation")
              if len({r[axis] for r in rows}) > 1]
    if not varied:
        varied = ["participation"]
    written = []
    for metric in ("delivery", "latency"):
        for axis in varied:
            path = out_dir / f"{metric}_vs_{axis}.svg"
            written.append(plot_rows(rows, metric, axis, path))
    return written
