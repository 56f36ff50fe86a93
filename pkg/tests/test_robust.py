import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
from counters import WorkCounter, charge
from errors import ContractViolation
from generators import ErrorModel, partial_workload, reversed_workload
from oracles import bfs_reach
from partially_dynamic import preprocess
from robust import FromScratchReachability, PartialDynamicSide, baseline_for, robust_wrap


class _ChunkedSide:
    """Spends ``chunks`` single units per request and records completions."""

    def __init__(self, name, chunks):
        self.name = name
        self.chunks = chunks
        self.counter = WorkCounter()
        self.done = []

    def steps(self, op):
        for _ in range(self.chunks):
            charge(self.counter, "chunk", 1)
            yield
        self.done.append(op)
        return op[0] == "Q"


def _run(predicted, script, n, slice_units=1):
    combo = robust_wrap(PartialDynamicSide.build(predicted, n), FromScratchReachability(n), slice_units=slice_units)
    edges = set()
    for op in script:
        step = combo.apply(op)
        if op[0] == "U":
            edges.add((op[1], op[2]))
            assert step.answer is None
        else:
            assert step.answer == (op[2] in bfs_reach(n, edges, op[1]))
    return combo


def _alone(side, script):
    for op in script:
        side.apply(op)
    return side.counter.total


@pytest.mark.parametrize("slice_units", [1, 8])
def test_answers_and_bound_with_good_predictions(slice_units) -> None:
    predicted, script = partial_workload(12, 36, ErrorModel(), seed=1)
    combo = _run(predicted, script, 12, slice_units)
    assert combo.combined <= combo.bound()
    assert combo.combined == sum(combo.totals)
    assert sum(combo.wins) == len(script)


def test_reversed_predictions_stay_within_bound() -> None:
    predicted, script = reversed_workload(12, 36, seed=2)
    combo = _run(predicted, script, 12, 4)
    assert combo.combined <= combo.bound()


@pytest.mark.parametrize("seed", [2, 5])
def test_combined_work_against_standalone_costs(seed) -> None:
    predicted, script = reversed_workload(12, 36, seed=seed)
    combo = _run(predicted, script, 12, 4)
    cheaper = min(
        _alone(PartialDynamicSide.build(predicted, 12), script),
        _alone(FromScratchReachability(12), script),
    )
    assert combo.combined <= 2 * cheaper + combo.slice_units + combo.max_chunk


def test_loser_is_suspended_mid_request() -> None:
    fast = _ChunkedSide("fast", 2)
    slow = _ChunkedSide("slow", 50)
    combo = robust_wrap(fast, slow, slice_units=1)
    step = combo.apply(("Q", 0, 1))
    assert step.winner == "fast"
    assert step.answer is True
    assert slow.done == []
    assert 0 < slow.counter.total < 50
    assert combo.pending == [0, 1]


def test_suspended_side_keeps_request_order() -> None:
    fast = _ChunkedSide("fast", 10)
    slow = _ChunkedSide("slow", 12)
    combo = robust_wrap(fast, slow, slice_units=3)
    ops = [("U", i, i + 1) for i in range(6)]
    for op in ops:
        assert combo.apply(op).winner == "fast"
    assert fast.done == ops
    assert slow.done == ops[: len(slow.done)]
    assert combo.pending[1] == len(ops) - len(slow.done)
    assert abs(combo.totals[0] - combo.totals[1]) <= combo.slice_units + combo.max_chunk


def test_second_side_wins_when_cheaper() -> None:
    heavy = _ChunkedSide("heavy", 30)
    combo = robust_wrap(heavy, _ChunkedSide("light", 1), slice_units=2)
    step = combo.apply(("Q", 0, 0))
    assert step.winner == "light"
    assert heavy.done == []
    assert step.work[0] <= step.work[1] + combo.slice_units + combo.max_chunk


def test_baseline_alone_wins_against_itself() -> None:
    combo = robust_wrap(FromScratchReachability(3, [(0, 1)]), FromScratchReachability(3, [(0, 1)]))
    step = combo.apply(("Q", 0, 1))
    assert step.answer is True
    assert step.winner == "baseline"
    assert step.work[0] == step.work[1]
    assert combo.combined == 2 * step.work[0]


def test_slice_units_must_be_positive() -> None:
    with pytest.raises(ContractViolation, match="slice_units"):
        robust_wrap(FromScratchReachability(2), FromScratchReachability(2), slice_units=0)


def test_decremental_baseline_mirrors_state() -> None:
    state = preprocess([(0, 1), (1, 2)], float("inf"), "decremental", n=3)
    base = baseline_for(state)
    assert base.apply(("Q", 0, 2)) is True
    base.apply(("U", 1, 2))
    assert base.apply(("Q", 0, 2)) is False
