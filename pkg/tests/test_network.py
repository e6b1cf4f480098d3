"""Radio range, contact detection, and exchange-round tests."""

import numpy as np
import pytest

from rrpm.model import Grid, Message, Position
from rrpm.network import (
    ContactEvent,
    InvalidRadioParams,
    cell_centers_ft,
    contact_pairs,
    detect_contacts,
    exchange,
    expire,
    live_mask,
    ranges_array,
    sample_ranges,
)

from oracles import brute_force_contacts, exchange_oracle


# --------------------------------------------------------------------------
# radio ranges

def test_zero_variance_pins_every_range():
    profiles = sample_ranges(range(50), 60.0, 0.0, np.random.default_rng(0))
    assert all(p.range_ft == 60.0 for p in profiles)


def test_range_sampling_moments():
    rng = np.random.default_rng(12)
    r = ranges_array(sample_ranges(range(100_000), 60.0, 20.0, rng))
    assert r.mean() == pytest.approx(60.0, abs=0.1)
    assert r.var(ddof=1) == pytest.approx(20.0, rel=0.05)
    assert (r >= 0).all()


def test_range_sampling_clamps_at_zero():
    rng = np.random.default_rng(12)
    r = ranges_array(sample_ranges(range(10_000), 1.0, 400.0, rng))
    assert (r >= 0).all()
    assert (r == 0).sum() > 1000  # a fat left tail lands on the clamp


@pytest.mark.parametrize("mean,var", [(-1.0, 20.0), (60.0, -5.0),
                                      (float("nan"), 20.0)])
def test_bad_radio_params_rejected(mean, var):
    with pytest.raises(InvalidRadioParams):
        sample_ranges(range(3), mean, var, np.random.default_rng(0))


def test_contact_event_requires_ordered_endpoints():
    assert ContactEvent(0, 3, 7).node_a == 3
    with pytest.raises(ValueError):
        ContactEvent(0, 7, 3)


# --------------------------------------------------------------------------
# contact detection

def _centers(cells, cell=10.0):
    return cell_centers_ft(np.asarray(cells, dtype=np.int64), cell)


def test_cell_centers():
    c = _centers([[0, 0], [3, 4]])
    np.testing.assert_allclose(c, [[5.0, 5.0], [35.0, 45.0]])


def test_contact_within_shared_range():
    # 5 cells apart = 50 ft, both radios reach 60 ft
    pairs = contact_pairs(_centers([[0, 0], [5, 0]]), np.array([60.0, 60.0]))
    np.testing.assert_array_equal(pairs, [[0, 1]])


def test_no_contact_beyond_shared_range():
    # 7 cells apart = 70 ft > 60 ft
    pairs = contact_pairs(_centers([[0, 0], [7, 0]]), np.array([60.0, 60.0]))
    assert pairs.size == 0


def test_weaker_radio_governs():
    # 50 ft apart but one radio only reaches 40 ft
    pairs = contact_pairs(_centers([[0, 0], [5, 0]]), np.array([60.0, 40.0]))
    assert pairs.size == 0


def test_contact_at_exact_range_boundary():
    pairs = contact_pairs(_centers([[0, 0], [5, 0]]), np.array([50.0, 50.0]))
    np.testing.assert_array_equal(pairs, [[0, 1]])


def test_colocated_nodes_always_in_contact():
    pairs = contact_pairs(_centers([[4, 4], [4, 4], [4, 4]]),
                          np.array([0.0, 5.0, 60.0]))
    np.testing.assert_array_equal(pairs, [[0, 1], [0, 2], [1, 2]])


def test_contact_pairs_sorted_unique():
    rng = np.random.default_rng(3)
    cells = rng.integers(0, 12, size=(40, 2))
    ranges = rng.uniform(0, 80, size=40)
    pairs = contact_pairs(_centers(cells), ranges)
    assert (pairs[:, 0] < pairs[:, 1]).all()
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    np.testing.assert_array_equal(order, np.arange(len(pairs)))
    assert len(np.unique(pairs, axis=0)) == len(pairs)


def test_contacts_match_brute_force_on_random_layouts():
    rng = np.random.default_rng(77)
    for trial in range(200):
        n = int(rng.integers(2, 60))
        # clustered layout: a few hotspot cells plus scattered singles
        hot = rng.integers(0, 30, size=(4, 2))
        pick = rng.integers(0, 5, size=n)
        cells = np.where((pick < 4)[:, None], hot[np.minimum(pick, 3)],
                         rng.integers(0, 30, size=(n, 2)))
        ranges = np.abs(rng.normal(60.0, np.sqrt(20.0), size=n))
        ranges[rng.random(n) < 0.1] = 0.0
        centers = _centers(cells)
        got = [tuple(p) for p in contact_pairs(centers, ranges)]
        want = brute_force_contacts(centers, ranges)
        assert got == want, f"trial {trial}"


def test_detect_contacts_wraps_positions():
    grid = Grid(820, 10.0)
    positions = [Position(0, 0), Position(5, 0), Position(100, 100)]
    profiles = sample_ranges(range(3), 60.0, 0.0, np.random.default_rng(0))
    events = detect_contacts(positions, profiles, grid, time_min=90)
    assert events == [ContactEvent(90, 0, 1)]


# --------------------------------------------------------------------------
# exchange rounds

def _msgs(k, created=0, ttl=1440):
    return [Message(message_id=j, source=0, created_at=created,
                    ttl_minutes=ttl) for j in range(k)]


def test_relay_is_single_hop_per_round():
    msgs = _msgs(1)
    stores = np.zeros((3, 1), dtype=bool)
    stores[0, 0] = True
    contacts = np.array([[0, 1], [1, 2]])
    dests = np.array([2])

    stores, deliveries = exchange(contacts, stores, msgs, dests, 0)
    assert deliveries == []            # the middle node had nothing at start
    assert stores[1, 0] and not stores[2, 0]
    assert msgs[0].delivered_at is None

    stores, deliveries = exchange(contacts, stores, msgs, dests, 30)
    assert deliveries == [(0, 1, 2)]
    assert msgs[0].delivered_at == 30


def test_direct_delivery_and_latency():
    msgs = _msgs(1, created=60)
    stores = np.zeros((2, 1), dtype=bool)
    stores[0, 0] = True
    _, deliveries = exchange(np.array([[0, 1]]), stores, msgs,
                             np.array([1]), 90)
    assert deliveries == [(0, 0, 1)]
    assert msgs[0].latency == 30


def test_destination_never_forwards():
    msgs = _msgs(1)
    stores = np.zeros((3, 1), dtype=bool)
    stores[2, 0] = True  # the sink somehow holds a copy
    new, deliveries = exchange(np.array([[1, 2]]), stores, msgs,
                               np.array([2]), 0)
    assert deliveries == []
    assert not new[1, 0]


def test_delivered_messages_stop_moving():
    msgs = _msgs(1)
    msgs[0].delivered_at = 0
    stores = np.zeros((3, 1), dtype=bool)
    stores[0, 0] = True
    new, deliveries = exchange(np.array([[0, 1]]), stores, msgs,
                               np.array([2]), 30)
    assert deliveries == []
    assert not new[1, 0]


def test_future_messages_do_not_move():
    msgs = _msgs(1, created=120)
    stores = np.zeros((2, 1), dtype=bool)
    stores[0, 0] = True
    new, deliveries = exchange(np.array([[0, 1]]), stores, msgs,
                               np.array([1]), 60)
    assert deliveries == []
    assert not new[1, 0]
    assert list(live_mask(msgs, 60)) == [False]
    assert list(live_mask(msgs, 120)) == [True]


def test_smallest_holder_credited_on_ties():
    msgs = _msgs(1)
    stores = np.zeros((4, 1), dtype=bool)
    stores[0, 0] = stores[2, 0] = True
    contacts = np.array([[0, 3], [2, 3]])
    _, deliveries = exchange(contacts, stores, msgs, np.array([3]), 0)
    assert deliveries == [(0, 0, 3)]


def test_first_delivery_wins():
    msgs = _msgs(1)
    msgs[0].delivered_at = 90
    stores = np.zeros((2, 1), dtype=bool)
    stores[0, 0] = True
    exchange(np.array([[0, 1]]), stores, msgs, np.array([1]), 120)
    assert msgs[0].delivered_at == 90


def test_exchange_with_no_contacts():
    msgs = _msgs(2)
    stores = np.zeros((3, 2), dtype=bool)
    stores[0] = True
    new, deliveries = exchange(np.empty((0, 2), dtype=np.int64), stores,
                               msgs, np.array([2]), 0)
    assert deliveries == []
    np.testing.assert_array_equal(new, stores)


# --------------------------------------------------------------------------
# expiry

def test_expiry_is_strict_past_deadline():
    msgs = _msgs(1, created=0, ttl=1440)
    stores = np.ones((2, 1), dtype=bool)
    assert expire(msgs, stores, 1440) == []      # deliverable at the deadline
    assert msgs[0].expired_at is None
    assert expire(msgs, stores, 1470) == [0]     # one step past: gone
    assert msgs[0].expired_at == 1470
    assert not stores[:, 0].any()


def test_delivered_messages_never_expire():
    msgs = _msgs(1, created=0, ttl=1440)
    msgs[0].delivered_at = 1440
    stores = np.ones((2, 1), dtype=bool)
    assert expire(msgs, stores, 2000) == []
    assert msgs[0].expired_at is None


def test_expired_messages_stay_expired():
    msgs = _msgs(1, created=0, ttl=60)
    stores = np.ones((2, 1), dtype=bool)
    assert expire(msgs, stores, 90) == [0]
    assert expire(msgs, stores, 120) == []


# --------------------------------------------------------------------------
# randomized cross-check against the set-based oracle

def test_exchange_matches_oracle_on_random_instances():
    rng = np.random.default_rng(55)
    for trial in range(120):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, 6))
        n_dest = int(rng.integers(1, max(2, n // 3)))
        dests = rng.choice(n, size=n_dest, replace=False)
        msgs = _msgs(k, created=0, ttl=int(rng.integers(1, 8)) * 30)
        stores = rng.random((n, k)) < 0.3
        for j in range(k):  # sources hold their own message
            stores[int(rng.integers(0, n)), j] = True
        stores[dests] = False

        holders = [set(np.flatnonzero(row)) for row in stores]
        delivered_oracle: dict[int, int] = {}
        expired_oracle: set[int] = set()

        for rnd in range(int(rng.integers(1, 11))):
            t = rnd * 30
            pairs = set()
            for _ in range(int(rng.integers(0, n * 2))):
                a, b = rng.choice(n, size=2, replace=False)
                pairs.add((min(int(a), int(b)), max(int(a), int(b))))
            contacts = (np.array(sorted(pairs))
                        if pairs else np.empty((0, 2), dtype=np.int64))

            live = {j for j in range(k)
                    if j not in delivered_oracle and j not in expired_oracle
                    and msgs[j].created_at <= t}
            holders, want = exchange_oracle(
                [tuple(p) for p in contacts],
                [set(h) for h in holders], live,
                set(int(d) for d in dests))
            for m, _, _ in want:
                delivered_oracle[m] = t

            stores, got = exchange(contacts, stores, msgs, dests, t)
            assert got == want, f"trial {trial} round {rnd}"

            for j in range(k):
                if (j not in delivered_oracle and j not in expired_oracle
                        and t > msgs[j].deadline):
                    expired_oracle.add(j)
                    for h in holders:
                        h.discard(j)
            expire(msgs, stores, t)

            packed = [set(np.flatnonzero(row)) for row in stores]
            assert packed == holders, f"trial {trial} round {rnd}"

        for j, m in enumerate(msgs):
            assert m.delivered_at == delivered_oracle.get(j)
