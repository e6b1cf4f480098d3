"""Delivery and latency metrics, per run and across seed sweeps.

A run's delivery probability is the delivered fraction of all messages
created during the run.  Latency is measured per delivered message, in
minutes from creation to first arrival at a destination.  Cross-seed
aggregation reports means with standard errors (sample std over sqrt n);
latency aggregates skip seeds that delivered nothing and say how many were
skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from rrpm.model import Message


class MetricsError(ValueError):
    pass


class EmptyMessageSet(MetricsError):
    """No messages were created, so rates are undefined."""


class NoDeliveries(MetricsError):
    """Latency extrema are undefined when nothing arrived."""


class MixedScenarios(MetricsError):
    """Results from different scenario fingerprints cannot be pooled."""


class InsufficientSeeds(MetricsError):
    """Aggregation needs at least two seeds for a standard error."""


def delivery_probability(messages: Sequence[Message]) -> float:
    """Delivered fraction of the message set."""
    if not messages:
        raise EmptyMessageSet("no messages in the run")
    delivered = sum(1 for m in messages if m.delivered_at is not None)
    return delivered / len(messages)


def max_latency(messages: Sequence[Message]) -> int:
    """Largest creation-to-delivery latency in minutes."""
    latencies = [m.latency for m in messages if m.latency is not None]
    if not latencies:
        raise NoDeliveries("no delivered messages")
    return max(latencies)


@dataclass(frozen=True)
class RunResult:
    """Metrics of one simulation run (one scenario, one seed)."""

    seed: int
    fingerprint: str
    patients: int
    participation: float
    total_messages: int
    delivered: int
    delivery_probability: float
    latencies: tuple[int, ...]          # minutes, delivered messages only
    z_max: Optional[int]                # max latency, None when none arrived
    mean_latency: Optional[float]

    @classmethod
    def from_messages(cls, seed: int, fingerprint: str, patients: int,
                      participation: float,
                      messages: Sequence[Message]) -> "RunResult":
        if not messages:
            raise EmptyMessageSet("no messages in the run")
        latencies = tuple(m.latency for m in messages if m.latency is not None)
        return cls(
            seed=seed,
            fingerprint=fingerprint,
            patients=patients,
            participation=participation,
            total_messages=len(messages),
            delivered=len(latencies),
            delivery_probability=len(latencies) / len(messages),
            latencies=latencies,
            z_max=max(latencies) if latencies else None,
            mean_latency=float(np.mean(latencies)) if latencies else None,
        )


@dataclass(frozen=True)
class AggregateResult:
    """Cross-seed summary of one scenario point."""

    patients: int
    participation: float
    n_seeds: int
    mean_delivery: float
    sem_delivery: float
    mean_latency_min: Optional[float]   # over per-seed mean latencies
    sem_latency_min: Optional[float]
    max_latency_min: Optional[int]
    seeds_no_delivery: int
    results: tuple[RunResult, ...]


def _sem(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def aggregate(results: Sequence[RunResult]) -> AggregateResult:
    """Pool per-seed results for one scenario point.

    Order-insensitive: results are sorted by seed before anything is
    computed.  Latency statistics average the per-seed mean latencies and
    drop zero-delivery seeds, reporting how many were dropped.  Raises
    MixedScenarios when fingerprints differ and InsufficientSeeds below two
    results.
    """
    if len(results) < 2:
        raise InsufficientSeeds(f"got {len(results)} results, need >= 2")
    fingerprints = {r.fingerprint for r in results}
    if len(fingerprints) != 1:
        raise MixedScenarios(f"{len(fingerprints)} distinct scenario fingerprints")

    ordered = tuple(sorted(results, key=lambda r: r.seed))
    deliveries = np.array([r.delivery_probability for r in ordered])

    seed_means = np.array([r.mean_latency for r in ordered
                           if r.mean_latency is not None])
    all_latencies = [z for r in ordered for z in r.latencies]
    mean_latency = float(seed_means.mean()) if seed_means.size else None
    sem_latency = _sem(seed_means) if seed_means.size >= 2 else None

    return AggregateResult(
        patients=ordered[0].patients,
        participation=ordered[0].participation,
        n_seeds=len(ordered),
        mean_delivery=float(deliveries.mean()),
        sem_delivery=_sem(deliveries),
        mean_latency_min=mean_latency,
        sem_latency_min=sem_latency,
        max_latency_min=max(all_latencies) if all_latencies else None,
        seeds_no_delivery=int(sum(1 for r in ordered if r.delivered == 0)),
        results=ordered,
    )
