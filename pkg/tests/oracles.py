"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive: O(n^2) scans, dict/set bookkeeping,
plain power iteration.  Tests compare package output against these, so none
of this may import from the modules it checks beyond plain data types.
"""

import numpy as np


def stationary_distribution(matrix: np.ndarray, start: np.ndarray,
                            tol: float = 1e-14,
                            max_iter: int = 100_000) -> np.ndarray:
    """Power-iterate a row-stochastic matrix from a start distribution."""
    v = np.asarray(start, dtype=np.float64).copy()
    for _ in range(max_iter):
        nv = v @ matrix
        if np.abs(nv - v).sum() < tol:
            return nv
        v = nv
    return v


def brute_force_contacts(centers_xy: np.ndarray,
                         ranges_ft: np.ndarray) -> list[tuple[int, int]]:
    """All-pairs contact scan: within min(range_i, range_j), inclusive."""
    n = len(centers_xy)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            dx = centers_xy[i, 0] - centers_xy[j, 0]
            dy = centers_xy[i, 1] - centers_xy[j, 1]
            rmin = min(ranges_ft[i], ranges_ft[j])
            if dx * dx + dy * dy <= rmin * rmin:
                pairs.append((i, j))
    return pairs


def exchange_oracle(contacts: list[tuple[int, int]],
                    holders: list[set[int]],
                    live: set[int],
                    destination_ids: set[int]) -> tuple[list[set[int]],
                                                        list[tuple[int, int, int]]]:
    """One synchronous exchange round, dict-and-set style.

    holders[i] is the set of message ids node i holds when the round
    starts.  Every contact pair swaps the live messages each side held at
    the start (single hop per round); destinations accept but never give.
    Returns the new holder sets and deliveries as (message, giver,
    destination) with the smallest giver id winning ties.
    """
    start = [set(h) & live for h in holders]
    for d in destination_ids:
        start[d] = set()
    new = [set(h) for h in holders]
    for a, b in contacts:
        new[a] |= start[b]
        new[b] |= start[a]
    deliveries = {}
    for a, b in contacts:
        for dest, giver in ((a, b), (b, a)):
            if dest not in destination_ids:
                continue
            for m in sorted(start[giver] & live):
                best = deliveries.get(m)
                if best is None or giver < best[0]:
                    deliveries[m] = (giver, dest)
    out = [(m, g, d) for m, (g, d) in sorted(deliveries.items())]
    return new, out
