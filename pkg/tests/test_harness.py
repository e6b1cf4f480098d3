"""End-to-end simulation, sweep, and artifact tests."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from rrpm.model import ScenarioError, validate_scenario
from rrpm.harness import (
    SWEEP_CSV_COLUMNS,
    Simulation,
    SweepSpec,
    emit_results,
    read_sweep_csv,
    run_simulation,
    run_sweep,
)


def _write_pinned_tables(path: Path) -> Path:
    """Degenerate dynamics: every row keeps everyone at home."""
    lines = ["class_group,period,kind,p_home,p_work,p_poi"]
    for group in ("CUA", "ES"):
        for period in (1, 2, 3, 4):
            for kind in ("initial", "row_home", "row_work", "row_poi"):
                lines.append(f"{group},{period},{kind},1,0,0")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture()
def toy_spec(tmp_path):
    # 2x2 grid of 10 ft cells: every center pair is within 15 ft, so all
    # four nodes (patient, relay, sink, site) stay in mutual radio range
    tables = _write_pinned_tables(tmp_path / "tables.csv")
    return validate_scenario({
        "grid.side_cells": 2,
        "population.adults": 2,
        "population.patients": 1,
        "population.caregivers": 0,
        "population.clinical_staff": 0,
        "population.pois": 1,
        "population.participation": 1.0,
        "population.employed_ratio": 0.0,
        "radio.range_var_ft2": 0.0,
        "tables.file": str(tables),
    })


@pytest.fixture(scope="module")
def small_spec():
    # light scenario for fast sweep tests
    return validate_scenario({
        "population.adults": 60,
        "population.patients": 2,
        "population.caregivers": 2,
        "population.clinical_staff": 1,
        "population.participation": 0.5,
        "sim.duration_hours": 8,
        "message.ttl_hours": 8,
    })


# --------------------------------------------------------------------------
# the pinned toy scenario

def test_toy_delivery_in_first_round(toy_spec):
    sim = Simulation(toy_spec, seed=0)
    log = sim.exchange_round()
    assert sim.done()
    assert len(log.deliveries) == 1
    mid, giver, dest = log.deliveries[0]
    assert mid == 0 and giver == 0 and dest in sim.destination_ids
    assert sim.messages[0].delivered_at == 0
    assert sim.messages[0].latency == 0


def test_toy_run_result(toy_spec):
    r = run_simulation(toy_spec, seed=3)
    assert r.total_messages == 1 and r.delivered == 1
    assert r.delivery_probability == 1.0
    assert r.z_max == 0
    assert r.latencies == (0,)


def test_toy_states_stay_pinned(toy_spec):
    sim = Simulation(toy_spec, seed=1)
    before = sim.states.copy()
    sim.advance()
    np.testing.assert_array_equal(sim.states, before)
    np.testing.assert_array_equal(sim.states[sim.mobile], 0)


# --------------------------------------------------------------------------
# determinism and conservation

def test_same_seed_reproduces_run():
    spec = validate_scenario({})
    assert run_simulation(spec, 7) == run_simulation(spec, 7)


def test_different_seeds_differ():
    spec = validate_scenario({})
    assert run_simulation(spec, 0) != run_simulation(spec, 1)


def test_message_conservation_ttl_equals_duration():
    spec = validate_scenario({})
    for seed in range(3):
        sim = Simulation(spec, seed)
        sim.run()
        delivered = sum(1 for m in sim.messages if m.delivered_at is not None)
        expired = sum(1 for m in sim.messages if m.expired_at is not None)
        live = sum(1 for m in sim.messages
                   if m.delivered_at is None and m.expired_at is None)
        assert delivered + expired + live == spec.patients
        assert expired == 0  # nothing can pass its deadline inside the day


def test_message_conservation_with_expiry():
    spec = validate_scenario({"message.ttl_hours": 3,
                              "sim.duration_hours": 24})
    for seed in range(3):
        sim = Simulation(spec, seed)
        sim.run()
        delivered = sum(1 for m in sim.messages if m.delivered_at is not None)
        expired = sum(1 for m in sim.messages if m.expired_at is not None)
        assert delivered + expired == spec.patients  # all resolved by day end
        for m in sim.messages:
            if m.delivered_at is not None:
                assert m.latency <= spec.ttl_minutes
                assert m.expired_at is None


def test_latency_never_exceeds_ttl():
    spec = validate_scenario({})
    for seed in range(5):
        r = run_simulation(spec, seed)
        assert all(0 <= z <= spec.ttl_minutes for z in r.latencies)
        if r.z_max is not None:
            assert r.z_max == max(r.latencies)


def test_fixed_sites_never_hold_messages():
    spec = validate_scenario({})
    sim = Simulation(spec, seed=2)

    def check(s, log):
        assert not s.stores[s.roster.poi_ids].any()

    sim.run(on_round=check)


def test_early_exit_when_all_resolved(toy_spec):
    sim = Simulation(toy_spec, seed=0)
    sim.run()
    assert sim.time == 0  # delivered in the opening round, loop never spun


# --------------------------------------------------------------------------
# trace and event artifacts

def test_trace_csv_schema(tmp_path):
    spec = validate_scenario({"sim.duration_hours": 2})
    trace = tmp_path / "trace.csv"
    run_simulation(spec, 0, trace_path=trace)
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["time_min", "node_id", "class", "state", "col", "row"]
    body = rows[1:]
    n_mobile = 120
    assert len(body) == n_mobile * 5  # rounds at 0, 30, 60, 90, 120
    classes = {r[2] for r in body}
    assert classes == {"patient", "caregiver", "clinical_staff",
                       "relay_employed", "relay_unemployed"}
    assert {r[3] for r in body} <= {"home", "work", "poi"}
    for r in body[:500]:
        assert 0 <= int(r[4]) < 820 and 0 <= int(r[5]) < 820


def test_events_csv_schema(tmp_path):
    spec = validate_scenario({"message.ttl_hours": 3})
    events = tmp_path / "events.csv"
    run_simulation(spec, 0, events_path=events)
    rows = list(csv.reader(events.open()))
    assert rows[0] == ["time_min", "event", "node_a", "node_b", "message_id"]
    kinds = {r[1] for r in rows[1:]}
    assert "contact" in kinds and "transfer" in kinds
    assert kinds <= {"contact", "transfer", "delivery", "expiry"}
    for r in rows[1:]:
        if r[1] == "contact":
            assert int(r[2]) < int(r[3]) and r[4] == ""
        elif r[1] == "transfer":
            assert r[2] != r[3]
        elif r[1] == "expiry":
            assert r[2] == "" and r[3] == ""


def test_trace_is_deterministic(tmp_path):
    spec = validate_scenario({"sim.duration_hours": 2})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_simulation(spec, 5, trace_path=a, events_path=tmp_path / "ea.csv")
    run_simulation(spec, 5, trace_path=b, events_path=tmp_path / "eb.csv")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "ea.csv").read_bytes() == (tmp_path / "eb.csv").read_bytes()


def test_recording_does_not_change_results(tmp_path):
    spec = validate_scenario({"sim.duration_hours": 4})
    plain = run_simulation(spec, 9)
    recorded = run_simulation(spec, 9, trace_path=tmp_path / "t.csv",
                              events_path=tmp_path / "e.csv")
    assert plain == recorded


# --------------------------------------------------------------------------
# sweeps

def test_sweep_spec_validation(small_spec):
    with pytest.raises(ScenarioError):
        SweepSpec.over(small_spec, seeds=[0])
    with pytest.raises(ScenarioError):
        SweepSpec.over(small_spec, seeds=[1, 1])
    with pytest.raises(ScenarioError):
        SweepSpec.over(small_spec, patients=[], seeds=[0, 1])


def test_sweep_point_grid_is_patients_major(small_spec):
    sweep = SweepSpec.over(small_spec, patients=[2, 4],
                           participation=[0.4, 0.5], seeds=[0, 1])
    pts = [(s.patients, s.participation) for s in sweep.point_specs()]
    assert pts == [(2, 0.4), (2, 0.5), (4, 0.4), (4, 0.5)]


def test_sweep_caregivers_track_swept_patients(small_spec):
    sweep = SweepSpec.over(small_spec, patients=[2, 6], seeds=[0, 1])
    specs = sweep.point_specs()
    assert specs[0].caregivers == small_spec.caregivers  # base point untouched
    assert specs[1].patients == 6 and specs[1].caregivers == 6


def test_sweep_rows_follow_point_grid(small_spec):
    sweep = SweepSpec.over(small_spec, participation=[0.4, 0.6],
                           seeds=range(3))
    table = run_sweep(sweep)
    assert [r.participation for r in table.rows] == [0.4, 0.6]
    assert all(r.n_seeds == 3 for r in table.rows)


def test_sweep_parallel_equals_sequential(small_spec):
    sweep = SweepSpec.over(small_spec, participation=[0.4, 0.6],
                           seeds=range(3))
    assert run_sweep(sweep, jobs=1) == run_sweep(sweep, jobs=2)


def test_sweep_results_keyed_by_scenario_not_order(small_spec):
    # the same point aggregates identically whatever else the sweep holds
    one = run_sweep(SweepSpec.over(small_spec, participation=[0.5],
                                   seeds=range(3)))
    two = run_sweep(SweepSpec.over(small_spec, participation=[0.4, 0.5],
                                   seeds=range(3)))
    assert one.rows[0] == two.rows[1]


# --------------------------------------------------------------------------
# emission

@pytest.fixture(scope="module")
def small_table(small_spec):
    sweep = SweepSpec.over(small_spec, participation=[0.4, 0.6],
                           seeds=range(3))
    return run_sweep(sweep)


def test_csv_schema_and_roundtrip(tmp_path, small_table):
    out = tmp_path / "sweep.csv"
    emit_results(small_table, csv_path=out)
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(SWEEP_CSV_COLUMNS)
    assert "\r" not in text
    assert len(text.splitlines()) == 1 + len(small_table.rows)

    back = read_sweep_csv(out)
    for row, agg in zip(back, small_table.rows):
        assert row["patients"] == agg.patients
        assert row["participation"] == agg.participation
        assert row["n_seeds"] == agg.n_seeds
        assert row["mean_delivery"] == agg.mean_delivery
        assert row["sem_delivery"] == agg.sem_delivery
        assert row["mean_latency_min"] == agg.mean_latency_min
        assert row["sem_latency_min"] == agg.sem_latency_min
        assert row["max_latency_min"] == agg.max_latency_min
        assert row["seeds_no_delivery"] == agg.seeds_no_delivery


def test_csv_bytes_stable(tmp_path, small_table):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_results(small_table, csv_path=a)
    emit_results(small_table, csv_path=b)
    assert a.read_bytes() == b.read_bytes()


def test_json_artifact(tmp_path, small_table):
    out = tmp_path / "sweep.json"
    emit_results(small_table, json_path=out)
    data = json.loads(out.read_text())
    assert len(data["points"]) == 2
    point = data["points"][0]
    assert point["participation"] == 0.4
    assert len(point["seeds"]) == 3
    assert {"seed", "delivery_probability", "latencies_min"} <= set(point["seeds"][0])


def test_plot_artifacts(tmp_path, small_table):
    plots = tmp_path / "plots"
    emit_results(small_table, plots_dir=plots)
    delivery = plots / "delivery_vs_participation.svg"
    latency = plots / "latency_vs_participation.svg"
    assert delivery.exists() and latency.exists()
    svg = delivery.read_text()
    assert svg.count("xtick_") >= 2 or svg.count("xtick") >= 2


def test_plots_byte_stable(tmp_path, small_table):
    emit_results(small_table, plots_dir=tmp_path / "p1")
    emit_results(small_table, plots_dir=tmp_path / "p2")
    name = "delivery_vs_participation.svg"
    assert ((tmp_path / "p1" / name).read_bytes()
            == (tmp_path / "p2" / name).read_bytes())


def test_read_sweep_csv_rejects_wrong_header(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ScenarioError):
        read_sweep_csv(bad)
