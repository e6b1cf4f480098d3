"""One simulated day in the default town.

Runs a single seed of the default scenario, prints the delivery metrics,
and dumps the two per-round artifact files (node trajectories and the
contact/transfer/delivery event log) into demos/out/.
"""

from pathlib import Path

from rrpm import run_simulation, validate_scenario

SEED = 7
OUT = Path(__file__).parent / "out"


def main() -> None:
    spec = validate_scenario({})  # all defaults: 400 adults, 10 patients
    print(f"scenario fingerprint {spec.fingerprint()[:12]}")
    print(f"{spec.participants} devices among {spec.adults} adults "
          f"({spec.relays} volunteer relays, {spec.relays_employed} employed)")

    OUT.mkdir(exist_ok=True)
    trace = OUT / f"trace_seed{SEED}.csv"
    events = OUT / f"events_seed{SEED}.csv"
    result = run_simulation(spec, SEED, trace_path=trace, events_path=events)

    print(f"\nseed {SEED}: {result.delivered}/{result.total_messages} "
          f"reports reached the clinic "
          f"(probability {result.delivery_probability:.2f})")
    if result.z_max is not None:
        print(f"worst-case latency {result.z_max} min "
              f"({result.z_max / 60:.1f} h), "
              f"mean {result.mean_latency:.0f} min")
    print(f"per-message latencies (min): {sorted(result.latencies)}")

    # peek at the event log: one line per contact, copy transfer, delivery
    lines = events.read_text().splitlines()
    print(f"\n{trace.name}: {len(trace.read_text().splitlines())} lines")
    print(f"{events.name}: {len(lines)} lines, first few after the header:")
    for line in lines[1:6]:
        print("  " + line)
    deliveries = [l for l in lines if ",delivery," in l]
    print(f"deliveries logged: {len(deliveries)}")
    for line in deliveries:
        print("  " + line)


if __name__ == "__main__":
    main()
