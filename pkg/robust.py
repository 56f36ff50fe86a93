"""Run a prediction-based structure side by side with a prediction-free one.

Each side turns a request into a resumable computation (a generator that
charges its counter and yields between chunks of work).  The combinator
always advances the side with less accumulated work until it is
``slice_units`` ahead of the other, and answers the request as soon as
either side has worked off its backlog.  The other side is left suspended
mid-computation and resumes its backlog, in order, on later requests.

The accumulated work of the two sides never differs by more than one slice
plus the largest single chunk, so the combined work is at most twice the
cheaper side's total plus that gap.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Generator, List, Optional, Protocol, Sequence, Tuple

from counters import WorkCounter, charge
from errors import ContractViolation
from partially_dynamic import (
    PartialDynState,
    apply_update,
    current_edges,
    finish,
    preprocess,
    reachable_steps,
)

Op = Tuple[str, int, int]
Steps = Generator[None, None, Optional[bool]]


class Side(Protocol):
    counter: WorkCounter

    def steps(self, op: Op) -> Steps: ...


class PartialDynamicSide:
    """Adapter exposing partially_dynamic reachability as a ``Side``."""

    name = "predicted"

    def __init__(self, state: PartialDynState) -> None:
        self.state = state
        self.counter = state.counter

    @classmethod
    def build(cls, predicted: Sequence[Tuple[int, int]], n: int, mode: str = "incremental") -> "PartialDynamicSide":
        return cls(preprocess(predicted, float("inf"), mode, n=n))

    def steps(self, op: Op) -> Steps:
        kind, u, v = op
        if kind == "U":
            apply_update(self.state, (u, v))
            return None
        return (yield from reachable_steps(self.state, u, v))

    def apply(self, op: Op) -> Optional[bool]:
        return finish(self.steps(op))


class FromScratchReachability:
    """Edge set plus a BFS per query; the prediction-free baseline."""

    name = "baseline"

    def __init__(self, n: int, edges: Sequence[Tuple[int, int]] = (), *, decremental: bool = False) -> None:
        self.n = n
        self.counter = WorkCounter()
        self.decremental = decremental
        self.out: List[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            self.out[u].add(v)

    def steps(self, op: Op) -> Steps:
        kind, u, v = op
        if kind == "U":
            charge(self.counter, "edge_op", 1)
            if self.decremental:
                self.out[u].discard(v)
            else:
                self.out[u].add(v)
            return None
        seen = {u}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            charge(self.counter, "bfs_step", 1 + len(self.out[x]))
            for y in self.out[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
            yield
        return v in seen

    def apply(self, op: Op) -> Optional[bool]:
        return finish(self.steps(op))


@dataclass
class RobustStep:
    answer: Optional[bool]
    winner: str
    combined_work: int
    work: Tuple[int, int]


@dataclass
class RobustCombinator:
    """Slice-by-slice interleaving of two ``Side`` objects.

    ``totals`` holds the work each side has actually done so far; work a
    suspended side still owes is not counted until it runs.
    """

    first: Side
    second: Side
    slice_units: int = 1
    combined: int = 0
    totals: List[int] = field(default_factory=lambda: [0, 0])
    wins: List[int] = field(default_factory=lambda: [0, 0])
    max_chunk: int = 0
    _backlog: Tuple[Deque[Steps], Deque[Steps]] = field(default_factory=lambda: (deque(), deque()), repr=False)
    _answers: List[Optional[bool]] = field(default_factory=lambda: [None, None], repr=False)

    def __post_init__(self) -> None:
        if self.slice_units < 1:
            raise ContractViolation(f"slice_units must be positive, got {self.slice_units}")

    @property
    def sides(self) -> Tuple[Side, Side]:
        return self.first, self.second

    @property
    def pending(self) -> List[int]:
        """Unfinished requests per side."""
        return [len(self._backlog[0]), len(self._backlog[1])]

    def _advance(self, idx: int, limit: int) -> bool:
        """Resume side ``idx`` until its total reaches ``limit``; True once its backlog is empty."""
        side = self.sides[idx]
        backlog = self._backlog[idx]
        while backlog and self.totals[idx] < limit:
            before = side.counter.total
            try:
                next(backlog[0])
            except StopIteration as stop:
                backlog.popleft()
                self._answers[idx] = stop.value
            spent = side.counter.total - before
            self.totals[idx] += spent
            self.max_chunk = max(self.max_chunk, spent)
        return not backlog

    def apply(self, op: Op) -> RobustStep:
        for idx, side in enumerate(self.sides):
            self._backlog[idx].append(side.steps(op))
        start = list(self.totals)
        while True:
            idx = 0 if self.totals[0] <= self.totals[1] else 1
            if self._advance(idx, self.totals[1 - idx] + self.slice_units):
                break
        work = (self.totals[0] - start[0], self.totals[1] - start[1])
        step = work[0] + work[1]
        self.combined += step
        self.wins[idx] += 1
        name = getattr(self.sides[idx], "name", str(idx))
        if self._backlog[1 - idx]:
            logging.debug("robust: %s answered, other side suspended with %d requests", name, len(self._backlog[1 - idx]))
        return RobustStep(self._answers[idx], name, step, work)

    def bound(self) -> int:
        """2·min(total work) plus one slice and the largest chunk."""
        return 2 * min(self.totals) + self.slice_units + self.max_chunk


def robust_wrap(pred_structure: Side, baseline_structure: Side, *, slice_units: int = 1) -> RobustCombinator:
    return RobustCombinator(pred_structure, baseline_structure, slice_units)


def baseline_for(state: PartialDynState) -> FromScratchReachability:
    """Baseline holding the same current graph as ``state``."""
    return FromScratchReachability(
        state.n, sorted(current_edges(state)), decremental=state.mode == "decremental"
    )
