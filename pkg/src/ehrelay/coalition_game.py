"""Coalition formation as a canonical game with transferable utility.

A coalition of ``m`` pairs is worth ``m R (1 - P_m)``, where ``P_m`` is the
per-pair outage for that size.  Outage depends only on coalition size, so
the value functions here take an ``outage_fn(m)``.  It may return a float
or anything with ``value`` and ``valid`` attributes (such as
:class:`ehrelay.analytic_outage.Flagged`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .simulator import Partition

MAX_PLAYERS = 12

_TIE_REL = 1e-12


def _unwrap(result) -> tuple[float, bool]:
    if hasattr(result, "value"):
        return float(result.value), bool(getattr(result, "valid", True))
    return float(result), True


class _SizeOutage:
    """Memoised ``outage_fn`` that also remembers whether every call was valid."""

    def __init__(self, outage_fn):
        self._fn = outage_fn
        self._cache: dict[int, float] = {}
        self.valid = True

    def __call__(self, m: int) -> float:
        if m not in self._cache:
            value, ok = _unwrap(self._fn(m))
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"outage_fn({m}) = {value} is not a probability")
            self._cache[m] = value
            self.valid &= ok
        return self._cache[m]


def coalition_value(m: int, outage_fn: Callable, rate: float) -> float:
    """Sum rate ``m R (1 - P_m)`` of a coalition of ``m`` pairs."""
    if m < 1:
        raise ValueError(f"coalition size must be >= 1, got {m}")
    p, _ = _unwrap(outage_fn(m))
    return m * rate * (1.0 - p)


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def enumerate_partitions(n: int) -> Iterator[Partition]:
    """Every set partition of ``0 .. n-1``, each exactly once.

    Walks restricted growth strings ``a`` with ``a[0] = 0`` and
    ``a[i] <= 1 + max(a[:i])``.
    """
    if n < 1:
        raise ValueError(f"need at least one player, got {n}")
    if n > MAX_PLAYERS:
        raise ValueError(f"refusing to enumerate Bell({n}) partitions; cap is N <= {MAX_PLAYERS}")

    labels = [0] * n
    maxes = [0] * n  # maxes[i] = max(labels[:i+1])
    while True:
        blocks: list[list[int]] = [[] for _ in range(maxes[-1] + 1)]
        for i, b in enumerate(labels):
            blocks[b].append(i)
        yield Partition._canonical(tuple(tuple(b) for b in blocks))

        i = n - 1
        while i > 0 and labels[i] == maxes[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        labels[i] += 1
        maxes[i] = max(maxes[i - 1], labels[i])
        for j in range(i + 1, n):
            labels[j] = 0
            maxes[j] = maxes[i]


@dataclass
class SuperadditivityVerdict:
    """Strict superadditivity ``v(p) + v(q) < v(p + q)`` over disjoint size pairs.

    Violations are ``(p, q, v(p) + v(q), v(p + q))`` with ``p <= q``.  Pairs
    where both coalitions have at least two members are kept apart from pairs
    involving a singleton.
    """

    violations_multi: list[tuple[int, int, float, float]]
    violations_singleton: list[tuple[int, int, float, float]]
    pairs_checked: int
    valid: bool

    @property
    def holds_multi(self) -> bool:
        return not self.violations_multi

    @property
    def holds(self) -> bool:
        return not self.violations_multi and not self.violations_singleton


@dataclass
class CoreVerdict:
    """Whether the equal split of ``v(N)`` lies in the core.

    ``margins[s]`` is ``s x* - v(s)``; a negative margin means a coalition of
    ``s`` players would reject the split.
    """

    payoff: float
    margins: dict[int, float]
    valid: bool

    @property
    def violating_sizes(self) -> list[int]:
        return [s for s, m in self.margins.items() if m < 0]

    @property
    def in_core(self) -> bool:
        return not self.violating_sizes


@dataclass
class GameReport:
    num_players: int
    rate: float
    partition_values: list[tuple[Partition, float]]
    best_partition: Partition
    best_value: float
    superadditivity: SuperadditivityVerdict
    core: CoreVerdict
    payoff: list[float] = field(default_factory=list)
    valid: bool = True

    @property
    def grand_coalition_optimal(self) -> bool:
        return len(self.best_partition.blocks) == 1


def _partition_value(partition: Partition, outage: _SizeOutage, rate: float) -> float:
    # sizes sorted so equal size profiles sum in the same order
    return math.fsum(m * rate * (1.0 - outage(m)) for m in sorted(partition.sizes))


def _better(value, partition, best_value, best):
    if best is None:
        return True
    if math.isclose(value, best_value, rel_tol=_TIE_REL, abs_tol=1e-300):
        key = (len(partition.blocks), partition.blocks)
        return key < (len(best.blocks), best.blocks)
    return value > best_value


def check_superadditivity(n: int, outage_fn: Callable, rate: float) -> SuperadditivityVerdict:
    if not 1 <= n <= MAX_PLAYERS:
        raise ValueError(f"need 1 <= N <= {MAX_PLAYERS}, got {n}")
    outage = outage_fn if isinstance(outage_fn, _SizeOutage) else _SizeOutage(outage_fn)
    value = lambda m: m * rate * (1.0 - outage(m))  # noqa: E731
    multi, single = [], []
    checked = 0
    for p in range(1, n):
        for q in range(p, n - p + 1):
            checked += 1
            lhs, rhs = value(p) + value(q), value(p + q)
            if not lhs < rhs:
                (multi if p >= 2 else single).append((p, q, lhs, rhs))
    return SuperadditivityVerdict(multi, single, checked, outage.valid)


def check_core_equal_split(n: int, outage_fn: Callable, rate: float) -> CoreVerdict:
    if not 1 <= n <= MAX_PLAYERS:
        raise ValueError(f"need 1 <= N <= {MAX_PLAYERS}, got {n}")
    outage = outage_fn if isinstance(outage_fn, _SizeOutage) else _SizeOutage(outage_fn)
    p_grand = outage(n)
    payoff = rate * (1.0 - p_grand)
    # s x* - v(s) = s R (P_s - P_N)
    margins = {s: s * rate * (outage(s) - p_grand) for s in range(1, n + 1)}
    return CoreVerdict(payoff, margins, outage.valid)


def optimal_partition(n: int, outage_fn: Callable, rate: float, keep_values: bool | None = None) -> GameReport:
    """Exhaustive search over all partitions of ``n`` players.

    Ties (to a relative ``1e-12``) go to the partition with fewer
    coalitions, then to the lexicographically smallest block tuple.
    ``partition_values`` is filled only when ``keep_values`` is true, which
    by default means ``n <= 8`` (Bell(12) entries do not fit comfortably in
    memory).
    """
    if keep_values is None:
        keep_values = n <= 8
    outage = _SizeOutage(outage_fn)
    values = []
    best, best_value = None, -math.inf
    for partition in enumerate_partitions(n):
        v = _partition_value(partition, outage, rate)
        if keep_values:
            values.append((partition, v))
        if _better(v, partition, best_value, best):
            best, best_value = partition, v

    superadd = check_superadditivity(n, outage, rate)
    core = check_core_equal_split(n, outage, rate)
    return GameReport(
        num_players=n,
        rate=rate,
        partition_values=values,
        best_partition=best,
        best_value=best_value,
        superadditivity=superadd,
        core=core,
        payoff=[core.payoff] * n,
        valid=outage.valid,
    )
