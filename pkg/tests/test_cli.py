"""Command-line interface tests, run through real subprocesses."""

import json
import subprocess
import sys

import pytest

CONFIG_TEXT = """\
# compact town for fast command tests
population.adults = 60
population.patients = 2
population.caregivers = 2
population.clinical_staff = 1
population.participation = 0.5
sim.duration_hours = 8
message.ttl_hours = 8
"""


@pytest.fixture(scope="module")
def config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "town.cfg"
    path.write_text(CONFIG_TEXT)
    return path


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "rrpm.cli", *map(str, args)],
                          capture_output=True, text=True)


# --------------------------------------------------------------------------
# run

def test_run_prints_summary(config):
    proc = _cli("run", "--config", config, "--seed", "0")
    assert proc.returncode == 0, proc.stderr
    assert "delivered" in proc.stdout and "seed 0" in proc.stdout


def test_run_writes_artifacts(config, tmp_path):
    out = tmp_path / "run.json"
    trace = tmp_path / "trace.csv"
    events = tmp_path / "events.csv"
    proc = _cli("run", "--config", config, "--seed", "1",
                "--out", out, "--trace", trace, "--events", events)
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(out.read_text())
    assert payload["seed"] == 1
    assert payload["total_messages"] == 2
    assert 0.0 <= payload["delivery_probability"] <= 1.0
    assert trace.read_text().startswith("time_min,node_id,class,state,col,row")
    assert events.read_text().startswith("time_min,event,node_a,node_b,message_id")


def test_run_missing_config_is_io_error(tmp_path):
    proc = _cli("run", "--config", tmp_path / "absent.cfg")
    assert proc.returncode == 3
    assert "error" in proc.stderr.lower()


def test_run_invalid_config_is_validation_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("population.participation = 1.5\n")
    proc = _cli("run", "--config", bad)
    assert proc.returncode == 2
    assert "participation" in proc.stderr


def test_missing_subcommand_is_usage_error():
    proc = _cli()
    assert proc.returncode == 2


# --------------------------------------------------------------------------
# sweep

def test_sweep_writes_csv(config, tmp_path):
    out = tmp_path / "sweep.csv"
    proc = _cli("sweep", "--config", config,
                "--vary", "participation=0.4:0.2:0.6",
                "--seeds", "0:2", "--out", out)
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().splitlines()
    assert lines[0].startswith("patients,participation,n_seeds,mean_delivery")
    assert len(lines) == 3
    assert lines[1].split(",")[1] == "0.4"
    assert lines[2].split(",")[1] == "0.6"


def test_sweep_stdout_when_no_output_file(config):
    proc = _cli("sweep", "--config", config,
                "--vary", "patients=2:2:4", "--seeds", "0:1")
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert lines[0].startswith("patients,participation")
    assert len(lines) == 3


def test_sweep_jobs_do_not_change_bytes(config, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ("sweep", "--config", config, "--vary",
            "participation=0.4:0.2:0.6", "--seeds", "0:2")
    assert _cli(*base, "--out", a, "--jobs", "1").returncode == 0
    assert _cli(*base, "--out", b, "--jobs", "2").returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_bad_axis_is_validation_error(config):
    proc = _cli("sweep", "--config", config, "--vary", "velocity=1:2")
    assert proc.returncode == 2


def test_sweep_bad_range_is_validation_error(config):
    proc = _cli("sweep", "--config", config, "--vary", "patients=ten")
    assert proc.returncode == 2


def test_sweep_single_seed_is_validation_error(config):
    proc = _cli("sweep", "--config", config, "--seeds", "5")
    assert proc.returncode == 2


# --------------------------------------------------------------------------
# plot

def test_plot_from_csv(config, tmp_path):
    csv_path = tmp_path / "sweep.csv"
    svg_path = tmp_path / "delivery.svg"
    assert _cli("sweep", "--config", config,
                "--vary", "participation=0.4:0.2:0.6",
                "--seeds", "0:2", "--out", csv_path).returncode == 0
    proc = _cli("plot", "--in", csv_path, "--metric", "delivery",
                "--x", "participation", "--out", svg_path)
    assert proc.returncode == 0, proc.stderr
    assert svg_path.read_text().startswith("<?xml")


def test_plot_rejects_unknown_metric(config, tmp_path):
    csv_path = tmp_path / "sweep.csv"
    assert _cli("sweep", "--config", config, "--seeds", "0:1",
                "--out", csv_path).returncode == 0
    proc = _cli("plot", "--in", csv_path, "--metric", "throughput",
                "--x", "participation", "--out", tmp_path / "x.svg")
    assert proc.returncode == 2


def test_plot_missing_input_is_io_error(tmp_path):
    proc = _cli("plot", "--in", tmp_path / "absent.csv",
                "--metric", "delivery", "--x", "participation",
                "--out", tmp_path / "x.svg")
    assert proc.returncode == 3
