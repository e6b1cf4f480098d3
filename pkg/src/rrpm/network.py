"""Radio contacts and store-and-forward message exchange.

Contacts are symmetric: two nodes are in contact when the distance between
their cell centers is within the smaller of their two radio ranges.  Ranges
vary per node (drawn once per run) so the check is per pair, not a single
global radius.

Exchange is synchronous and single-hop per round: every contact pair swaps
the live messages each side held at the start of the round, so a message
cannot cross two hops inside one round.  Destinations are sinks; receiving
at a destination is delivery, and a destination never gives messages away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from rrpm.model import Grid, Message, Position

_MIN_BUCKET_WIDTH = 1e-9  # keeps the hash usable when every range is zero


class InvalidRadioParams(ValueError):
    """Radio range distribution parameters are unusable."""


@dataclass(frozen=True)
class RadioProfile:
    """Effective radio range of one node's device, in feet."""

    node_id: int
    range_ft: float


@dataclass
class MessageStore:
    """Messages currently held by one node.  Destinations are unbounded
    too; the simulation never caps store sizes."""

    node_id: int
    held: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class ContactEvent:
    """One detected pair in radio range at a given time; node_a < node_b."""

    time_min: int
    node_a: int
    node_b: int

    def __post_init__(self) -> None:
        if not self.node_a < self.node_b:
            raise ValueError("contact endpoints must be ordered node_a < node_b")


def sample_ranges(node_ids: Sequence[int], mean_ft: float, var_ft2: float,
                  rng: np.random.Generator) -> list[RadioProfile]:
    """Draw one normal radio range per node, clamped at zero.

    One vectorized draw in node order.  Zero variance yields exactly the
    mean for every node.  Raises InvalidRadioParams for negative variance,
    negative mean, or non-finite parameters.
    """
    if not (math.isfinite(mean_ft) and math.isfinite(var_ft2)):
        raise InvalidRadioParams("radio parameters must be finite")
    if var_ft2 < 0:
        raise InvalidRadioParams("radio range variance must be non-negative")
    if mean_ft < 0:
        raise InvalidRadioParams("radio range mean must be non-negative")
    ids = list(node_ids)
    ranges = rng.normal(mean_ft, math.sqrt(var_ft2), size=len(ids))
    ranges = np.maximum(ranges, 0.0)
    return [RadioProfile(nid, float(r)) for nid, r in zip(ids, ranges)]


def ranges_array(profiles: Sequence[RadioProfile]) -> np.ndarray:
    """Ranges as a dense array indexed by node id."""
    out = np.zeros(len(profiles), dtype=np.float64)
    for p in profiles:
        out[p.node_id] = p.range_ft
    return out


def cell_centers_ft(cells: np.ndarray, cell_size_ft: float) -> np.ndarray:
    """Centers of (col, row) cells in feet, same formula as Grid.center_ft."""
    return (np.asarray(cells, dtype=np.float64) + 0.5) * cell_size_ft


def contact_pairs(centers_xy: np.ndarray, ranges_ft: np.ndarray) -> np.ndarray:
    """All node pairs within mutual radio range, as a (k, 2) array.

    Pairs are (a, b) with a < b, sorted lexicographically.  The predicate is
    squared distance <= min(range_a, range_b) squared, evaluated in float64.

    Co-located nodes are collapsed first: the population spends most steps
    stacked on a few dozen cells, so distances are computed once per pair of
    distinct occupied positions.  Distinct positions are then run through a
    spatial hash with bucket width >= the largest range; only same-bucket
    and neighbor-bucket position pairs get an exact distance check, which
    keeps the scan near-linear in occupied positions.
    """
    xy = np.asarray(centers_xy, dtype=np.float64)
    n = xy.shape[0]
    ranges = np.asarray(ranges_ft, dtype=np.float64)
    if n < 2:
        return np.empty((0, 2), dtype=np.int32)

    sites, inverse = np.unique(xy, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    u = sites.shape[0]
    order = np.argsort(inverse, kind="stable")  # groups members, ids ascending
    counts = np.bincount(inverse, minlength=u)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    members = [order[bounds[i]:bounds[i + 1]] for i in range(u)]

    out: list[np.ndarray] = []

    for mem in members:
        if mem.size >= 2:  # co-located: distance 0 is within any range
            ii, jj = np.triu_indices(mem.size, 1)
            out.append(np.stack([mem[ii], mem[jj]], axis=1))

    if u >= 2:
        max_range = float(ranges.max())
        width = max(max_range, _MIN_BUCKET_WIDTH)
        buckets = np.floor(sites / width).astype(np.int64)
        si, sj = np.triu_indices(u, 1)
        near = ((np.abs(buckets[si, 0] - buckets[sj, 0]) <= 1)
                & (np.abs(buckets[si, 1] - buckets[sj, 1]) <= 1))
        si, sj = si[near], sj[near]
        dx = sites[si, 0] - sites[sj, 0]
        dy = sites[si, 1] - sites[sj, 1]
        d2 = dx * dx + dy * dy
        feasible = d2 <= max_range * max_range
        for i, j, dist2 in zip(si[feasible], sj[feasible], d2[feasible]):
            a = members[i]
            b = members[j]
            rmin = np.minimum(ranges[a][:, None], ranges[b][None, :])
            hit_a, hit_b = np.nonzero(dist2 <= rmin * rmin)
            if hit_a.size:
                lo = np.minimum(a[hit_a], b[hit_b])
                hi = np.maximum(a[hit_a], b[hit_b])
                out.append(np.stack([lo, hi], axis=1))

    if not out:
        return np.empty((0, 2), dtype=np.int32)
    pairs = np.concatenate(out).astype(np.int32)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def detect_contacts(positions: Sequence[Position] | np.ndarray,
                    profiles: Sequence[RadioProfile], grid: Grid,
                    time_min: int = 0) -> list[ContactEvent]:
    """Contact events among nodes at the given cell positions.

    positions[i] and profiles[i] describe node i.  Stationary nodes join on
    the same footing as mobile ones.
    """
    if isinstance(positions, np.ndarray):
        cells = positions
    else:
        cells = np.array([(p.col, p.row) for p in positions], dtype=np.int64)
    centers = cell_centers_ft(cells, grid.cell_size_ft)
    ranges = np.array([p.range_ft for p in profiles], dtype=np.float64)
    if len(ranges) != len(centers):
        raise ValueError("positions and profiles must align")
    pairs = contact_pairs(centers, ranges)
    return [ContactEvent(time_min, int(a), int(b)) for a, b in pairs]


def live_mask(messages: Sequence[Message], time_min: int) -> np.ndarray:
    """Messages that exist, are undelivered, and have not expired."""
    return np.array(
        [m.delivered_at is None and m.expired_at is None
         and m.created_at <= time_min for m in messages], dtype=bool)


def exchange(contacts: np.ndarray, stores: np.ndarray,
             messages: Sequence[Message], destination_ids: np.ndarray,
             time_min: int) -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    """One synchronous exchange round over the given contact pairs.

    stores is the (n_nodes, n_messages) boolean holding matrix.  Each pair
    swaps the live messages each side held when the round began, so copies
    move at most one hop per round.  A live message reaching any destination
    is delivered: its delivered_at is set to time_min (first delivery wins)
    and the message stops moving in later rounds.

    Returns the updated matrix and the delivery events as (message_id,
    giver, destination) tuples, ordered by message id.
    """
    live = live_mask(messages, time_min)
    start = stores.copy()
    start[destination_ids] = False  # sinks never forward
    start &= live[None, :]

    new_stores = stores.copy()
    deliveries: list[tuple[int, int, int]] = []
    if contacts.size == 0 or not live.any():
        return new_stores, deliveries

    a = contacts[:, 0]
    b = contacts[:, 1]
    incoming = np.zeros_like(stores)
    np.logical_or.at(incoming, a, start[b])
    np.logical_or.at(incoming, b, start[a])
    new_stores |= incoming

    arrived = incoming[destination_ids].any(axis=0) & live
    for j in np.flatnonzero(arrived):
        giver = dest = None
        for x, y in contacts:
            for d, g in ((x, y), (y, x)):
                if d in destination_ids and start[g, j]:
                    if giver is None or g < giver:
                        giver, dest = int(g), int(d)
        assert giver is not None
        messages[j].delivered_at = time_min
        deliveries.append((messages[j].message_id, giver, dest))
    return new_stores, deliveries


def expire(messages: Sequence[Message], stores: np.ndarray,
           time_min: int) -> list[int]:
    """Drop undelivered messages strictly past their deadline.

    A message created at t with ttl T is still deliverable at exactly t + T
    and expires at the first instant after.  Expired copies are purged from
    every store.  Returns the ids expired by this call.
    """
    expired: list[int] = []
    for j, msg in enumerate(messages):
        if (msg.delivered_at is None and msg.expired_at is None
                and time_min > msg.deadline):
            msg.expired_at = time_min
            stores[:, j] = False
            expired.append(msg.message_id)
    return expired


def stores_from_matrix(matrix: np.ndarray,
                       messages: Sequence[Message]) -> list[MessageStore]:
    """Object view of the packed holding matrix."""
    out = []
    for node_id in range(matrix.shape[0]):
        held = {messages[j].message_id for j in np.flatnonzero(matrix[node_id])}
        out.append(MessageStore(node_id, held))
    return out
