import math
import os
import sys

import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
from counters import WorkCounter
from errors import ContractViolation, UnknownElement
from generators import ErrorModel, gen_apsp_workload
from oracles import fw_apsp
from predicted_deletions import (
    BucketScheduler,
    IncrementalApsp,
    apsp_insert_vertex,
    apsp_rewind,
    fd_apsp,
    fd_delete,
    fd_insert,
)


class _Stack:
    """Records the insertion stack of a scheduler."""

    def __init__(self) -> None:
        self.items = []

    def insert(self, elem) -> None:
        self.items.append(elem)

    def rewind(self) -> None:
        self.items.pop()


def test_incremental_apsp_triangle() -> None:
    s = IncrementalApsp()
    apsp_insert_vertex(s, "a")
    apsp_insert_vertex(s, "b", in_edges={"a": 4})
    apsp_insert_vertex(s, "c", in_edges={"a": 1}, out_edges={"b": 1})
    assert s.distance("a", "b") == 2
    assert s.distance("b", "a") == math.inf
    assert s.distance("c", "c") == 0
    assert len(s) == 3 and "c" in s


def test_rewind_restores_previous_distances() -> None:
    s = IncrementalApsp()
    s.insert_vertex(0)
    s.insert_vertex(1, {0: 5})
    s.insert_vertex(2, {1: 1}, {0: 1})
    before = s.snapshot()
    s.insert_vertex(3, {0: 1}, {1: 1})
    assert s.distance(0, 1) == 2
    assert apsp_rewind(s) == 3
    assert s.snapshot() == before
    assert s.vertices == [0, 1, 2]


def test_incremental_apsp_errors() -> None:
    s = IncrementalApsp()
    with pytest.raises(ContractViolation, match="nothing to rewind"):
        s.rewind()
    s.insert_vertex(0)
    with pytest.raises(ContractViolation, match="already present"):
        s.insert_vertex(0)
    with pytest.raises(UnknownElement):
        s.insert_vertex(1, {7: 1})
    with pytest.raises(ContractViolation, match="negative"):
        s.insert_vertex(1, {0: -1})
    with pytest.raises(UnknownElement):
        s.distance(0, 9)


def test_scheduler_keeps_structure_in_sync() -> None:
    stack = _Stack()
    sched = BucketScheduler(stack, check=True)
    keys = [5, 3, 8, 1, 9, 0, 7, 2, 6, 4]
    for elem, key in enumerate(keys):
        fd_insert(sched, elem, key)
        assert stack.items == sched.stack()
    assert len(sched) == len(keys)
    assert sched.stack()[-1] == keys.index(0)
    for elem in (4, 0, 9):
        fd_delete(sched, elem)
        assert stack.items == sched.stack()
        sched.check_invariants()
    assert 4 not in sched


def test_deletions_in_predicted_order_are_free() -> None:
    sched = BucketScheduler(_Stack(), check=True)
    for elem in range(16):
        sched.insert(elem, 15 - elem)
    for elem in reversed(range(16)):
        report = sched.delete(elem)
        assert report.measured_eta == 0
        assert report.predicted_eta == 0
        assert report.rewinds == 1
        assert report.reinserts == 0


def test_rewinds_bounded_by_measured_eta() -> None:
    sched = BucketScheduler(_Stack(), check=True)
    for elem in range(20):
        sched.insert(elem, elem)
    for elem in [19, 3, 11, 0, 7, 15, 1, 2]:
        report = sched.delete(elem)
        assert report.rewinds == report.measured_eta + 1
        assert report.reinserts == report.measured_eta


def test_scheduler_errors() -> None:
    sched = BucketScheduler(_Stack())
    sched.insert("x", 1)
    with pytest.raises(ContractViolation, match="already live"):
        sched.insert("x", 2)
    with pytest.raises(UnknownElement):
        sched.delete("y")
    with pytest.raises(UnknownElement):
        sched.depth("y")


def test_equal_keys_break_ties_by_insertion() -> None:
    sched = BucketScheduler(_Stack())
    for elem in "abc":
        sched.insert(elem, 0)
    assert sched.key("a") < sched.key("b") < sched.key("c")


@pytest.mark.parametrize("model", ["exact", "linf_window:3", "swap_count:4", "unpredicted_rate:0.3"])
@settings(max_examples=5, deadline=None)
@given(seed=integers(min_value=0, max_value=2**32 - 1))
def test_fully_dynamic_apsp_matches_floyd_warshall(model, seed) -> None:
    ds = fd_apsp(check=True)
    for op in gen_apsp_workload(10, ErrorModel.parse(model, seed), seed=seed):
        if op.kind == "I":
            ds.insert_vertex(op.vertex, op.key, op.in_edges, op.out_edges)
        elif op.kind == "D":
            report = ds.delete_vertex(op.vertex)
            assert report.rewinds <= report.measured_eta + 1
        else:
            expected = fw_apsp(ds.vertices(), ds.arcs())
            assert ds.distance(op.vertex, op.other) == expected[(op.vertex, op.other)]
        expected = fw_apsp(ds.vertices(), ds.arcs())
        assert ds.apsp.snapshot() == expected
    assert ds.vertices() == []
    assert ds.gamma > 0


@pytest.mark.parametrize("model", ["exact", "linf_window:4", "swap_count:6", "unpredicted_rate:0.3"])
def test_amortized_work_within_gamma_log_eta_bound(model) -> None:
    counter = WorkCounter()
    ds = fd_apsp(counter)
    updates = 0
    etas = []
    for op in gen_apsp_workload(24, ErrorModel.parse(model, 3), seed=3):
        if op.kind == "I":
            ds.insert_vertex(op.vertex, op.key, op.in_edges, op.out_edges)
        elif op.kind == "D":
            etas.append(ds.delete_vertex(op.vertex).measured_eta)
        else:
            continue
        updates += 1
    mean_eta = sum(etas) / len(etas)
    bound = 16 * ds.gamma * math.log2(updates) * (1 + mean_eta)
    assert counter.total / updates <= bound


def test_reversed_deletions_cost_more_than_predicted() -> None:
    work = {}
    for label, order in (("exact", range(12)), ("reversed", reversed(range(12)))):
        ds = fd_apsp()
        for v in range(12):
            ds.insert_vertex(v, v, {u: 1.0 for u in range(v) if (u + v) % 3 == 0})
        rewinds = 0
        for v in order:
            rewinds += ds.delete_vertex(v).rewinds
        work[label] = rewinds
    assert work["exact"] == 12
    assert work["reversed"] > work["exact"]


def test_fully_dynamic_apsp_errors() -> None:
    ds = fd_apsp()
    ds.insert_vertex("a", 0)
    with pytest.raises(ContractViolation, match="already present"):
        ds.insert_vertex("a", 1)
    with pytest.raises(UnknownElement):
        ds.insert_vertex("b", 1, {"zz": 1.0})
    with pytest.raises(ContractViolation, match="negative"):
        ds.insert_vertex("b", 1, out_edges={"a": -2.0})
    with pytest.raises(UnknownElement):
        ds.delete_vertex("b")
    assert ds.distance("a", "a") == 0.0
    with pytest.raises(UnknownElement):
        ds.distance("a", "q")
