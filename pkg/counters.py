"""Counted work units, the benchmark currency of every structure."""

from __future__ import annotations

from collections import Counter
from typing import Dict


class WorkCounter:
    """Accumulate abstract work units per category.

    Structures charge field operations, comparisons and row copies here so
    that cost trends can be checked without wall-clock noise.
    """

    def __init__(self) -> None:
        self._units: Counter[str] = Counter()

    def charge(self, kind: str, units: int = 1) -> None:
        if units:
            self._units[kind] += int(units)

    @property
    def total(self) -> int:
        return sum(self._units.values())

    def get(self, kind: str) -> int:
        return self._units.get(kind, 0)

    def snapshot(self) -> Dict[str, int]:
        return dict(self._units)

    def reset(self) -> None:
        self._units.clear()


def charge(counter: WorkCounter | None, kind: str, units: int = 1) -> None:
    """Charge ``units`` to ``counter`` when one is attached."""
    if counter is not None:
        counter.charge(kind, units)
