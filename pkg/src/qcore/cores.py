"""Combinatorial t-core counts, independent of any series arithmetic.

Partitions are enumerated outright, hook lengths read off the Ferrers diagram,
and the counts c_t(n) and A_t(n) tallied by brute force.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

DEFAULT_ENUMERATION_BUDGET = 40


class BudgetExceededError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self):
        p = tuple(self.parts)
        object.__setattr__(self, "parts", p)
        if any(x < 1 for x in p) or any(p[i] < p[i + 1] for i in range(len(p) - 1)):
            raise ValueError(f"not a partition: {p}")

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def conjugate(self) -> "Partition":
        if not self.parts:
            return self
        return Partition(tuple(sum(1 for x in self.parts if x > j) for j in range(self.parts[0])))


def partitions(n: int, largest: int | None = None) -> Iterator[Partition]:
    """Partitions of n, first parts in descending order, then recursively."""

    def rec(n, largest):
        if n == 0:
            yield ()
            return
        for first in range(min(n, largest), 0, -1):
            for rest in rec(n - first, first):
                yield (first,) + rest

    for p in rec(n, n if largest is None else largest):
        yield Partition(p)


def hook_numbers(p: Partition | tuple) -> dict[tuple[int, int], int]:
    """Hook length of every cell (i, j), 1-indexed."""
    if not isinstance(p, Partition):
        p = Partition(tuple(p))
    conj = p.conjugate().parts
    return {
        (i, j): row - j + conj[j - 1] - i + 1
        for i, row in enumerate(p.parts, start=1)
        for j in range(1, row + 1)
    }


def is_t_core(p: Partition | tuple, t: int) -> bool:
    if t < 2:
        raise ValueError("t must be >= 2")
    return all(h % t for h in hook_numbers(p).values())


@dataclass(frozen=True)
class CoreCountTable:
    t: int
    values: tuple[int, ...]


def _check(t: int, max_n: int, budget: int) -> None:
    if t < 2:
        raise ValueError("t must be >= 2")
    if max_n < 0:
        raise ValueError("max_n must be >= 0")
    if max_n > budget:
        raise BudgetExceededError(f"enumeration up to n={max_n} exceeds the budget of {budget}")


def count_cores(t: int, max_n: int, budget: int = DEFAULT_ENUMERATION_BUDGET) -> CoreCountTable:
    """c_t(n) for 0 <= n <= max_n by full enumeration."""
    _check(t, max_n, budget)
    values = tuple(sum(1 for p in partitions(n) if is_t_core(p, t)) for n in range(max_n + 1))
    return CoreCountTable(t, values)


def count_pairs(t: int, max_n: int, budget: int = DEFAULT_ENUMERATION_BUDGET) -> list[int]:
    """A_t(n) = number of ordered pairs of t-cores of total weight n."""
    c = count_cores(t, max_n, budget).values
    return [sum(c[i] * c[n - i] for i in range(n + 1)) for n in range(max_n + 1)]
