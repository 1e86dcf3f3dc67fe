"""Monte-Carlo simulation of the two-phase cooperative protocol.

Phase I: every source transmits at ``P``; the relay decodes pair ``i`` when
``x_i P >= eps`` and harvests ``eta (x_i P - eps)`` from it.  Phase II: each
coalition pools what its decoded members harvested and splits the pool
equally among them; pair ``i`` is delivered when ``y_i * share >= eps``.

Trials are cut into fixed-size chunks.  Chunk ``c`` draws from
``SeedSequence(seed, spawn_key=(c,))`` and results are integer counts summed
over chunks, so estimates do not depend on how many threads run the chunks.
All partitions passed to :func:`simulate` see the same channel draws.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channel_model import NetworkConfig, sample_link

CHUNK_TRIALS = 1 << 16
THREADS_ENV = "EHRELAY_THREADS"


@dataclass(frozen=True)
class Partition:
    """Disjoint coalitions covering pairs ``0 .. N-1`` (stored in canonical order)."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(int(i) for i in b)) for b in self.blocks))
        if any(len(b) == 0 for b in blocks):
            raise ValueError("partition blocks must be non-empty")
        members = [i for b in blocks for i in b]
        if sorted(members) != list(range(len(members))):
            raise ValueError(f"blocks must be disjoint and cover 0..N-1, got {self.blocks}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def _canonical(cls, blocks: tuple[tuple[int, ...], ...]) -> "Partition":
        # caller guarantees sorted, disjoint, covering blocks
        obj = object.__new__(cls)
        object.__setattr__(obj, "blocks", blocks)
        return obj

    @property
    def num_pairs(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @classmethod
    def grand(cls, n: int) -> "Partition":
        return cls((tuple(range(n)),))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def uniform(cls, n: int, size: int) -> "Partition":
        if n % size:
            raise ValueError(f"{n} pairs cannot be split into coalitions of {size}")
        return cls(tuple(tuple(range(s, s + size)) for s in range(0, n, size)))

    def __str__(self):
        return "".join("{" + ",".join(str(i + 1) for i in b) + "}" for b in self.blocks)


@dataclass(frozen=True)
class TrialOutcome:
    """Per-pair results of one realisation (arrays of length ``N``)."""

    decoded: np.ndarray
    harvested_power: np.ndarray
    relay_power: np.ndarray
    delivered: np.ndarray

    @property
    def outage(self) -> np.ndarray:
        return ~self.delivered


@dataclass(frozen=True)
class OutageEstimate:
    outage_probability: float
    trials: int
    std_error: float

    @classmethod
    def binomial(cls, failures: int, trials: int) -> "OutageEstimate":
        p = failures / trials
        return cls(p, trials, math.sqrt(p * (1.0 - p) / trials))


def _run_protocol(config: NetworkConfig, partition: Partition, x: np.ndarray, y: np.ndarray):
    """Vectorised protocol over a leading trial axis; ``x``, ``y`` are ``(T, N)``."""
    power, eps, eta = config.tx_power, config.threshold, config.harvest_efficiency
    decoded = x * power >= eps
    harvested = np.where(decoded, eta * (x * power - eps), 0.0)
    relay = np.zeros_like(harvested)
    for block in partition.blocks:
        idx = list(block)
        pool = harvested[:, idx].sum(axis=1)
        count = decoded[:, idx].sum(axis=1)
        share = np.divide(pool, count, out=np.zeros_like(pool), where=count > 0)
        relay[:, idx] = np.where(decoded[:, idx], share[:, None], 0.0)
    delivered = decoded & (y * relay >= eps)
    return decoded, harvested, relay, delivered


def run_trial(
    config: NetworkConfig,
    partition: Partition,
    rng: np.random.Generator | None = None,
    *,
    source_gain: Sequence[float] | None = None,
    destination_gain: Sequence[float] | None = None,
) -> TrialOutcome:
    """One realisation of the protocol.

    ``source_gain`` / ``destination_gain`` inject the composite gains
    ``x_i`` / ``y_i`` directly instead of drawing them (test hook).
    """
    n = partition.num_pairs
    if n != config.num_pairs:
        raise ValueError(f"partition covers {n} pairs but config has {config.num_pairs}")
    if source_gain is None or destination_gain is None:
        if rng is None:
            raise ValueError("rng is required unless both gains are injected")
    x = np.asarray(source_gain, dtype=float) if source_gain is not None else sample_link(config, rng, n).composite
    y = np.asarray(destination_gain, dtype=float) if destination_gain is not None else sample_link(config, rng, n).composite
    decoded, harvested, relay, delivered = _run_protocol(config, partition, x[None, :], y[None, :])
    return TrialOutcome(decoded[0], harvested[0], relay[0], delivered[0])


@dataclass
class SimulationResult:
    """Integer tallies for one partition over ``trials`` realisations."""

    partition: Partition
    trials: int
    outages: np.ndarray
    first_hop_failures: np.ndarray
    # sums over trials of (outages among the pairs of each block size)^1 and ^2
    size_sums: dict[int, list[int]] = field(default_factory=dict)

    def per_pair(self) -> list[OutageEstimate]:
        return [OutageEstimate.binomial(int(k), self.trials) for k in self.outages]

    def first_hop(self) -> list[OutageEstimate]:
        return [OutageEstimate.binomial(int(k), self.trials) for k in self.first_hop_failures]

    def pooled(self, size: int | None = None) -> OutageEstimate:
        """Outage averaged over all pairs in coalitions of ``size``.

        The standard error is computed from per-trial averages, so it
        accounts for pairs in one trial being correlated.
        """
        sizes = set(self.partition.sizes)
        if size is None:
            if len(sizes) != 1:
                raise ValueError("partition mixes coalition sizes; pass size=")
            (size,) = sizes
        if size not in sizes:
            raise ValueError(f"no coalition of size {size} in {self.partition}")
        width = sum(s for s in self.partition.sizes if s == size)
        s1, s2 = self.size_sums[size]
        t = self.trials
        mean = s1 / (t * width)
        var = max(s2 / (t * width * width) - mean * mean, 0.0)
        return OutageEstimate(mean, t, math.sqrt(var / t))


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _tally_chunk(config, partitions, seed, chunk, n_trials):
    rng = _chunk_rng(seed, chunk)
    shape = (n_trials, config.num_pairs)
    x = sample_link(config, rng, shape).composite
    y = sample_link(config, rng, shape).composite
    tallies = []
    for partition in partitions:
        decoded, _, _, delivered = _run_protocol(config, partition, x, y)
        outage = ~delivered
        sums = {}
        for size in set(partition.sizes):
            cols = [i for b in partition.blocks if len(b) == size for i in b]
            k = outage[:, cols].sum(axis=1, dtype=np.int64)
            sums[size] = [int(k.sum()), int((k * k).sum())]
        tallies.append((outage.sum(axis=0, dtype=np.int64), (~decoded).sum(axis=0, dtype=np.int64), sums))
    return tallies


def simulate(
    config: NetworkConfig,
    partitions: Sequence[Partition],
    trials: int,
    seed: int,
    workers: int | None = None,
) -> list[SimulationResult]:
    """Run ``trials`` realisations and evaluate every partition on the same draws."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    partitions = list(partitions)
    for p in partitions:
        if p.num_pairs != config.num_pairs:
            raise ValueError(f"partition {p} does not cover {config.num_pairs} pairs")

    n_chunks = -(-trials // CHUNK_TRIALS)
    sizes = [min(CHUNK_TRIALS, trials - c * CHUNK_TRIALS) for c in range(n_chunks)]
    jobs = lambda c: _tally_chunk(config, partitions, seed, c, sizes[c])  # noqa: E731

    n_workers = min(resolve_workers(workers), n_chunks)
    if n_workers == 1:
        chunks = map(jobs, range(n_chunks))
    else:
        pool = ThreadPoolExecutor(max_workers=n_workers)
        chunks = pool.map(jobs, range(n_chunks))

    n = config.num_pairs
    results = [
        SimulationResult(p, trials, np.zeros(n, np.int64), np.zeros(n, np.int64), {s: [0, 0] for s in set(p.sizes)})
        for p in partitions
    ]
    try:
        for tallies in chunks:
            for res, (out, fail, sums) in zip(results, tallies):
                res.outages += out
                res.first_hop_failures += fail
                for s, (a, b) in sums.items():
                    res.size_sums[s][0] += a
                    res.size_sums[s][1] += b
    finally:
        if n_workers > 1:
            pool.shutdown()
    return results


def estimate_outage(
    config: NetworkConfig,
    partition: Partition,
    trials: int,
    seed: int,
    workers: int | None = None,
) -> list[OutageEstimate]:
    """Per-pair outage frequencies with binomial standard errors."""
    (result,) = simulate(config, [partition], trials, seed, workers)
    return result.per_pair()


@dataclass
class SweepRow:
    snr_db: float
    coalition_size: int
    outage_sim: float | None = None
    outage_sim_stderr: float | None = None
    outage_thm1: float | None = None
    outage_asym: float | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def validity_flag(self) -> str:
        return ";".join(self.flags) if self.flags else "ok"


def sweep(
    grid: Iterable[tuple[NetworkConfig, Partition]],
    trials: int,
    seed: int,
    *,
    simulate_outage: bool = True,
    analytic: bool = True,
    asymptotic: bool = True,
    workers: int | None = None,
) -> list[SweepRow]:
    """Evaluate a grid of (config, partition) points.

    Yields one row per distinct coalition size in each partition.  Every
    grid point reuses ``seed``, so neighbouring SNR values share draws.
    Analytic columns are left empty when ``path_loss_alpha != 2``.
    """
    import warnings

    from .analytic_outage import AnalyticContext, ApproximationWarning, outage_asymptotic, outage_theorem1

    rows = []
    for config, partition in grid:
        snr_db = round(10.0 * math.log10(config.tx_power), 9)
        result = simulate(config, [partition], trials, seed, workers)[0] if simulate_outage else None
        for size in sorted(set(partition.sizes)):
            row = SweepRow(snr_db, size)
            if result is not None:
                est = result.pooled(size)
                row.outage_sim, row.outage_sim_stderr = est.outage_probability, est.std_error
            closed = config.path_loss_alpha == 2 and (analytic or asymptotic)
            if closed:
                ctx = AnalyticContext.from_config(config, size)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ApproximationWarning)
                    if analytic:
                        thm = outage_theorem1(ctx)
                        row.outage_thm1 = thm.value
                        if not thm.valid:
                            row.flags.append("thm1_clamped")
                    if asymptotic:
                        asym = outage_asymptotic(ctx)
                        row.outage_asym = asym.value
                        if not asym.valid:
                            row.flags.append("asym_invalid")
            rows.append(row)
    return rows
