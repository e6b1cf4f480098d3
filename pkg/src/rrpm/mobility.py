"""Node placement and routine-driven movement.

Movement is teleport-style: at every timestep a mobile node occupies exactly
one cell, the one matching its current routine state.  Home cells are fixed
per node, work cells are fixed per employed node (a point of interest for
employed relays, the destination site for clinical staff), and the point of
interest is redrawn uniformly on every entry into the poi state, including
poi-to-poi self transitions.

Node ids are dense and block-ordered: patients, caregivers, clinical staff,
employed relays, unemployed relays, destinations, POIs.  The stationary
blocks at the tail never move; their "home" is the site they occupy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from rrpm.model import (
    ClassGroup,
    MobilityState,
    NodeClass,
    Position,
    ScenarioSpec,
    TransitionTable,
)

# class codes used in the packed arrays; order is the id-block order
CLASS_CODE = {
    NodeClass.PATIENT: 0,
    NodeClass.CAREGIVER: 1,
    NodeClass.CLINICAL_STAFF: 2,
    NodeClass.RELAY_EMPLOYED: 3,
    NodeClass.RELAY_UNEMPLOYED: 4,
    NodeClass.DESTINATION: 5,
    NodeClass.POI: 6,
}
CODE_CLASS = {v: k for k, v in CLASS_CODE.items()}

# group codes for the transition cube axis; -1 marks stationary nodes
GROUP_CODE = {ClassGroup.NONCOMMUTER: 0, ClassGroup.COMMUTER: 1}
GROUP_ORDER = (ClassGroup.NONCOMMUTER, ClassGroup.COMMUTER)


@dataclass(frozen=True)
class Roster:
    """Who exists: class codes per node id plus caregiver-patient pairing."""

    classes: np.ndarray        # (n,) int8 CLASS_CODE values
    paired_patient: np.ndarray  # (n,) int32, patient id for caregivers, else -1

    def __post_init__(self) -> None:
        self.classes.setflags(write=False)
        self.paired_patient.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return int(self.classes.shape[0])

    def ids_of(self, node_class: NodeClass) -> np.ndarray:
        return np.flatnonzero(self.classes == CLASS_CODE[node_class])

    @property
    def patient_ids(self) -> np.ndarray:
        return self.ids_of(NodeClass.PATIENT)

    @property
    def caregiver_ids(self) -> np.ndarray:
        return self.ids_of(NodeClass.CAREGIVER)

    @property
    def staff_ids(self) -> np.ndarray:
        return self.ids_of(NodeClass.CLINICAL_STAFF)

    @property
    def employed_ids(self) -> np.ndarray:
        return self.ids_of(NodeClass.RELAY_EMPLOYED)

    @property
    def destination_ids(self) -> np.ndarray:
        return self.ids_of(NodeClass.DESTINATION)

    @property
    def poi_ids(self) -> np.ndarray:
        return self.ids_of(NodeClass.POI)

    @property
    def mobile_mask(self) -> np.ndarray:
        return self.classes < CLASS_CODE[NodeClass.DESTINATION]

    def group_codes(self) -> np.ndarray:
        """GROUP_CODE per node; -1 for stationary nodes."""
        codes = np.full(self.n_nodes, -1, dtype=np.int8)
        for code, node_class in CODE_CLASS.items():
            group = node_class.group
            if group is not None:
                codes[self.classes == code] = GROUP_CODE[group]
        return codes

    def node_class(self, node_id: int) -> NodeClass:
        return CODE_CLASS[int(self.classes[node_id])]


@dataclass(frozen=True)
class LocationAssignment:
    """Fixed anchors of one node: home plus optional work site."""

    node_id: int
    node_class: NodeClass
    home: Position
    work: Optional[Position] = None


@dataclass(frozen=True)
class Placement:
    """Cell anchors for the whole roster, in packed array form.

    home_cells holds the occupied site for stationary nodes, so looking up
    "where is node i when in state home" is uniform across classes.
    work_cells is (-1, -1) where a node has no work site.
    """

    home_cells: np.ndarray         # (n, 2) int32 (col, row)
    work_cells: np.ndarray         # (n, 2) int32, -1 where absent
    poi_cells: np.ndarray          # (n_pois, 2) int32
    destination_cells: np.ndarray  # (n_destinations, 2) int32

    def __post_init__(self) -> None:
        for arr in (self.home_cells, self.work_cells,
                    self.poi_cells, self.destination_cells):
            arr.setflags(write=False)

    def assignment(self, roster: Roster, node_id: int) -> LocationAssignment:
        home = Position(*map(int, self.home_cells[node_id]))
        work = None
        if self.work_cells[node_id, 0] >= 0:
            work = Position(*map(int, self.work_cells[node_id]))
        return LocationAssignment(node_id, roster.node_class(node_id), home, work)


def _flat_to_cells(flat: np.ndarray, side: int) -> np.ndarray:
    return np.stack([flat % side, flat // side], axis=1).astype(np.int32)


def assign_locations(spec: ScenarioSpec, roster: Roster,
                     rng: np.random.Generator) -> Placement:
    """Draw all fixed cell anchors for a run.

    Draw order is part of the determinism contract: first the POI and
    destination sites as one without-replacement draw over all grid cells
    (skipped when the scenario pins them via a map file), then one uniform
    home cell per mobile node in id order, then one work POI per employed
    relay in id order.  A caregiver's own home draw is discarded in favor of
    the paired patient's cell so the pair co-resides.  Clinical staff work
    at the destination sites, round-robin when there are several.
    """
    side = spec.grid.side_cells
    n = roster.n_nodes

    if spec.poi_cells is not None and spec.destination_cells is not None:
        poi_cells = np.asarray(spec.poi_cells, dtype=np.int32).reshape(spec.pois, 2)
        dest_cells = np.asarray(spec.destination_cells,
                                dtype=np.int32).reshape(spec.destinations, 2)
    else:
        flat = rng.choice(spec.grid.n_cells, size=spec.pois + spec.destinations,
                          replace=False)
        sites = _flat_to_cells(np.asarray(flat, dtype=np.int64), side)
        poi_cells = sites[:spec.pois]
        dest_cells = sites[spec.pois:]

    home_cells = np.zeros((n, 2), dtype=np.int32)
    mobile = roster.mobile_mask
    n_mobile = int(mobile.sum())
    home_cells[mobile] = _flat_to_cells(
        rng.integers(0, spec.grid.n_cells, size=n_mobile), side)
    for cg in roster.caregiver_ids:
        home_cells[cg] = home_cells[roster.paired_patient[cg]]
    home_cells[roster.destination_ids] = dest_cells
    home_cells[roster.poi_ids] = poi_cells

    work_cells = np.full((n, 2), -1, dtype=np.int32)
    employed = roster.employed_ids
    if employed.size:
        work_poi = rng.integers(0, spec.pois, size=employed.size)
        work_cells[employed] = poi_cells[work_poi]
    for k, sid in enumerate(roster.staff_ids):
        work_cells[sid] = dest_cells[k % spec.destinations]

    return Placement(home_cells, work_cells, poi_cells, dest_cells)


@dataclass(frozen=True)
class MobileNode:
    """Point-in-time view of one mobile node."""

    node_id: int
    node_class: NodeClass
    home: Position
    work: Optional[Position]
    state: MobilityState
    position: Position
    current_poi: int = -1  # index into the POI cell list while state is poi

    def consistent(self, poi_cells: np.ndarray) -> bool:
        """Check the state/position invariant."""
        if self.state is MobilityState.HOME:
            return self.position == self.home
        if self.state is MobilityState.WORK:
            return self.work is not None and self.position == self.work
        if not 0 <= self.current_poi < len(poi_cells):
            return False
        col, row = poi_cells[self.current_poi]
        return self.position == Position(int(col), int(row))


def cumulative_tables(spec: ScenarioSpec) -> dict[int, np.ndarray]:
    """Per-period cumulative transition cube, shape (2 groups, 3, 3)."""
    cubes: dict[int, np.ndarray] = {}
    for period in spec.schedule.period_ids:
        cube = np.empty((len(GROUP_ORDER), 3, 3), dtype=np.float64)
        for g, group in enumerate(GROUP_ORDER):
            cube[g] = np.cumsum(spec.table(group, period).matrix_array(), axis=1)
        cube[:, :, 2] = 1.0  # guard the tail against rounding
        cubes[period] = cube
    return cubes


def cumulative_initials(spec: ScenarioSpec) -> dict[int, np.ndarray]:
    """Per-period cumulative initial vectors, shape (2 groups, 3)."""
    out: dict[int, np.ndarray] = {}
    for period in spec.schedule.period_ids:
        rows = np.empty((len(GROUP_ORDER), 3), dtype=np.float64)
        for g, group in enumerate(GROUP_ORDER):
            rows[g] = np.cumsum(spec.table(group, period).initial_array())
        rows[:, 2] = 1.0
        out[period] = rows
    return out


def _pick(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Index of the first cumulative bound exceeding u, batched per row."""
    return (u[:, None] >= cum_rows[:, :2]).sum(axis=1).astype(np.int8)


def sample_initial_state(spec: ScenarioSpec, roster: Roster, period: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Draw each mobile node's starting state from the period's initial mix.

    One uniform draw per node in id order; stationary nodes are pinned to
    the home state, which for them means the site they occupy.
    """
    groups = roster.group_codes()
    mobile = roster.mobile_mask
    cum = cumulative_initials(spec)[period]
    states = np.zeros(roster.n_nodes, dtype=np.int8)
    u = rng.random(int(mobile.sum()))
    states[mobile] = _pick(cum[groups[mobile]], u)
    return states


def advance_states(states: np.ndarray, group_codes: np.ndarray,
                   cum_cube: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One synchronous routine transition for a batch of mobile nodes.

    states and group_codes are aligned arrays covering mobile nodes only.
    Consumes exactly one uniform draw per node, in array order.
    """
    u = rng.random(states.shape[0])
    return _pick(cum_cube[group_codes, states], u)


def redraw_pois(next_states: np.ndarray, current_poi: np.ndarray,
                n_pois: int, rng: np.random.Generator) -> np.ndarray:
    """New POI index for every node entering the poi state this step.

    Entries cover poi-to-poi self transitions too: staying "at a POI" means
    picking a fresh one.  Nodes not at a POI get index -1.
    """
    out = np.full_like(current_poi, -1)
    entering = next_states == int(MobilityState.POI)
    k = int(entering.sum())
    if k:
        out[entering] = rng.integers(0, n_pois, size=k).astype(current_poi.dtype)
    return out


def step_mobility(node: MobileNode, spec: ScenarioSpec, placement: Placement,
                  period: int, rng: np.random.Generator) -> MobileNode:
    """Advance a single mobile node one timestep.

    Single-node counterpart of advance_states + redraw_pois with the same
    draw semantics: one uniform for the state, then one integer draw iff the
    new state is poi.
    """
    if node.node_class.stationary:
        raise ValueError("stationary nodes do not step")
    group = node.node_class.group
    assert group is not None
    cube = cumulative_tables(spec)[period]
    row = cube[GROUP_CODE[group], int(node.state)]
    nxt = MobilityState(int(_pick(row[None, :], rng.random(1))[0]))

    poi_idx = -1
    if nxt is MobilityState.POI:
        poi_idx = int(rng.integers(0, spec.pois))
        col, row_ = placement.poi_cells[poi_idx]
        position = Position(int(col), int(row_))
    elif nxt is MobilityState.WORK:
        if node.work is None:
            raise ValueError(f"node {node.node_id} has no work site")
        position = node.work
    else:
        position = node.home
    return MobileNode(node.node_id, node.node_class, node.home, node.work,
                      nxt, position, poi_idx)


def positions_for(states: np.ndarray, home_cells: np.ndarray,
                  work_cells: np.ndarray, current_poi: np.ndarray,
                  poi_cells: np.ndarray) -> np.ndarray:
    """Resolve every node's occupied cell from its state and anchors."""
    pos = home_cells.copy()
    at_work = states == int(MobilityState.WORK)
    pos[at_work] = work_cells[at_work]
    at_poi = states == int(MobilityState.POI)
    pos[at_poi] = poi_cells[current_poi[at_poi]]
    return pos
