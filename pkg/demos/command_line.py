"""The same workflows through the command line interface.

Everything the other demos do with library calls is also scriptable:
`rrpm run` for one seeded run, `rrpm sweep` for seed-averaged grids, and
`rrpm plot` to render an SVG from a sweep CSV written earlier.  Exit
codes are 0 on success, 2 for configuration errors, 3 for I/O errors,
so shell pipelines can branch on what went wrong.
"""

import subprocess
import sys
from pathlib import Path

OUT = Path(__file__).parent / "out"

SCENARIO = """\
grid.side_cells = 200
population.adults = 160
population.patients = 4
population.caregivers = 4
population.clinical_staff = 2
population.pois = 8
population.participation = 0.4
"""


def rrpm(*args: str) -> subprocess.CompletedProcess:
    cmd = [sys.executable, "-m", "rrpm.cli", *args]
    print("$ rrpm " + " ".join(args))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    for line in proc.stdout.splitlines():
        print("  " + line)
    if proc.returncode != 0:
        print(f"  exit code {proc.returncode}: {proc.stderr.strip()}")
    print()
    return proc


def main() -> None:
    OUT.mkdir(exist_ok=True)
    cfg = OUT / "cli_town.cfg"
    cfg.write_text(SCENARIO)

    rrpm("run", "--config", str(cfg), "--seed", "3",
         "--out", str(OUT / "cli_run.json"),
         "--events", str(OUT / "cli_events.csv"))

    rrpm("sweep", "--config", str(cfg),
         "--vary", "participation=0.2:0.2:1.0", "--seeds", "0:9",
         "--jobs", "4", "--out", str(OUT / "cli_sweep.csv"))

    rrpm("plot", "--in", str(OUT / "cli_sweep.csv"),
         "--metric", "delivery", "--x", "participation",
         "--out", str(OUT / "cli_delivery.svg"))

    # a config error is reported on stderr and exits with code 2
    bad = OUT / "cli_bad.cfg"
    bad.write_text("population.participation = 1.5\n")
    proc = rrpm("run", "--config", str(bad), "--seed", "0")
    assert proc.returncode == 2


if __name__ == "__main__":
    main()
