"""Layer-by-layer tour of the simulator's building blocks.

Drives one small town through each library layer by hand instead of
calling run_simulation: population synthesis, site placement, routine
states, radio contacts, and one store-and-forward exchange round.  This
is the same sequence Simulation executes every round, in slow motion.
"""

import numpy as np

from rrpm import (
    Message,
    MobileNode,
    MobilityState,
    detect_contacts,
    exchange,
    sample_ranges,
    synthesize_population,
    validate_scenario,
)
from rrpm.mobility import (
    advance_states,
    assign_locations,
    cumulative_tables,
    positions_for,
    redraw_pois,
    sample_initial_state,
    step_mobility,
)

SEED = 42

# a compact town so the printouts stay readable
CONFIG = {
    "grid.side_cells": 120,
    "population.adults": 80,
    "population.patients": 3,
    "population.caregivers": 3,
    "population.clinical_staff": 1,
    "population.pois": 6,
    "population.participation": 0.5,
}


def main() -> None:
    rng = np.random.default_rng(SEED)
    spec = validate_scenario(CONFIG)

    # 1. population: node ids are blocked by role, fixed sites come last
    roster = synthesize_population(spec)
    n = roster.n_nodes
    print(f"{n} nodes: patients {roster.patient_ids.tolist()}, "
          f"caregivers {roster.caregiver_ids.tolist()}, "
          f"staff {roster.staff_ids.tolist()}, "
          f"destination {roster.destination_ids.tolist()}, "
          f"POIs {roster.poi_ids.min()}..{roster.poi_ids.max()}")

    # 2. placement: homes, workplaces, and fixed-site cells
    placement = assign_locations(spec, roster, rng)
    pat = int(roster.patient_ids[0])
    care = int(roster.caregiver_ids[0])
    print(f"patient {pat} lives at {tuple(placement.home_cells[pat].tolist())}, "
          f"caregiver {care} at {tuple(placement.home_cells[care].tolist())} (same house)")
    staff = int(roster.staff_ids[0])
    print(f"staff {staff} commutes to {tuple(placement.work_cells[staff].tolist())}, "
          f"the clinic cell {tuple(placement.destination_cells[0].tolist())}")

    # 3. routine states: overnight initial draw, then batched Markov steps
    states = sample_initial_state(spec, roster, 1, rng)
    current_poi = redraw_pois(states, np.full(n, -1, dtype=np.int32),
                              spec.pois, rng)
    labels = {s: int(np.sum(states == int(s))) for s in MobilityState}
    print(f"\ninitial states: { {str(k): v for k, v in labels.items()} }")

    mobile = roster.mobile_mask
    groups = roster.group_codes()[mobile]
    cube = cumulative_tables(spec)[1]  # period 1 transition rows
    for _ in range(5):
        states[mobile] = advance_states(states[mobile], groups, cube, rng)
        current_poi = redraw_pois(states, current_poi, spec.pois, rng)
    out = int(np.sum(states == int(MobilityState.POI)))
    print(f"after 5 overnight steps: {out} nodes are out at a POI")

    # the single-node view of the same update, one employed relay at midday
    rel = int(roster.employed_ids[0])
    anchors = placement.assignment(roster, rel)
    before = MobileNode(rel, anchors.node_class, anchors.home, anchors.work,
                        MobilityState.HOME, anchors.home)
    node = step_mobility(before, spec, placement, period=3, rng=rng)
    print(f"relay {rel} steps once in the work period: "
          f"now {node.state} at {node.position}")

    # 4. geometry and radio: who can hear whom right now
    cells = positions_for(states, placement.home_cells, placement.work_cells,
                          current_poi, placement.poi_cells)
    profiles = sample_ranges(range(n), spec.range_mean_ft,
                             spec.range_var_ft2, rng)
    contacts = detect_contacts(cells, profiles, spec.grid, time_min=150)
    print(f"\n{len(contacts)} pairwise contacts at minute 150")
    for c in contacts[:5]:
        print(f"  nodes {c.node_a} and {c.node_b} in mutual range")

    # 5. one exchange round: patient 0 holds its own report, venues opt out
    pairs = np.array([(c.node_a, c.node_b) for c in contacts],
                     dtype=np.int32).reshape(-1, 2)
    is_poi = np.zeros(n, dtype=bool)
    is_poi[roster.poi_ids] = True
    pairs = pairs[~(is_poi[pairs[:, 0]] | is_poi[pairs[:, 1]])]

    report = Message(message_id=0, source=pat, created_at=0,
                     ttl_minutes=spec.ttl_minutes)
    stores = np.zeros((n, 1), dtype=bool)
    stores[pat, 0] = True
    new_stores, deliveries = exchange(pairs, stores, [report],
                                      roster.destination_ids, time_min=150)
    print(f"\ncopies of the report before: {int(stores[:, 0].sum())}, "
          f"after one round: {int(new_stores[:, 0].sum())}")
    if deliveries:
        print(f"delivered straight away: {deliveries}")
    else:
        print(f"holders now: {np.flatnonzero(new_stores[:, 0]).tolist()} "
              f"(clinic not reached yet)")


if __name__ == "__main__":
    main()
