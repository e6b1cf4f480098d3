"""Latency as the monitored cohort grows.

Sweeps the patient count from 2 to 10 while everything else stays at the
defaults.  Caregivers scale with patients (one bedside caregiver each),
so the device pool grows too and the relay pool shrinks slightly.  The
question the sweep answers: does a busier town clog the relay fabric?
"""

from pathlib import Path

from rrpm import SweepSpec, emit_results, run_sweep, validate_scenario

PATIENTS = [2, 4, 6, 8, 10]
SEEDS = range(20)
JOBS = 4
OUT = Path(__file__).parent / "out"


def main() -> None:
    base = validate_scenario({})
    sweep = SweepSpec.over(base, patients=PATIENTS, seeds=SEEDS)
    table = run_sweep(sweep, jobs=JOBS)

    OUT.mkdir(exist_ok=True)
    written = emit_results(table,
                           csv_path=OUT / "cohort_sweep.csv",
                           plots_dir=OUT)
    print("wrote " + ", ".join(p.name for p in written))

    print(f"\n{len(SEEDS)} seeds per point")
    print("patients  delivery (sem)    mean latency   worst")
    for row in table.rows:
        lat = (f"{row.mean_latency_min / 60:5.1f} h"
               if row.mean_latency_min is not None else "    n/a")
        worst = (f"{row.max_latency_min / 60:5.1f} h"
                 if row.max_latency_min is not None else "  n/a")
        print(f"{row.patients:8d}  {row.mean_delivery:.3f} "
              f"({row.sem_delivery:.3f})   {lat}   {worst}")


if __name__ == "__main__":
    main()
