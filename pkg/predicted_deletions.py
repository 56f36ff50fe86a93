"""Fully dynamic structures from incremental ones with undo and predicted
deletion times.

The underlying structure only supports ``insert`` and ``rewind`` (undo the
latest insert).  ``BucketScheduler`` keeps the live elements on the
structure's insertion stack ordered so that the elements predicted to be
deleted soonest sit near the top: buckets B_0, B_1, ... are stacked with B_0
on top, and after update t the buckets B_0..B_(k+1), k = 2-adic valuation of
t, are rewound, sorted by predicted key and pushed back.  Deleting an element
at depth ``pos`` costs ``pos`` rewinds and ``pos - 1`` re-inserts.

``IncrementalApsp`` is the concrete structure: exact all-pairs shortest paths
under vertex insertions, with a change log for rewinding.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, NamedTuple, Optional, Protocol, Tuple

import numpy as np

from counters import WorkCounter, charge
from errors import ContractViolation, UnknownElement, VerificationError

INVARIANT_CONSTANT = 5


class UndoableIncremental(Protocol):
    def insert(self, elem: Hashable) -> None: ...

    def rewind(self) -> None: ...


# ------------------------------------------------------------------- APSP
@dataclass
class _InsertRecord:
    vertex: Hashable
    rows: np.ndarray
    cols: np.ndarray
    old: np.ndarray


class IncrementalApsp:
    """Exact APSP under vertex insertions; nonnegative weights only.

    Vertices occupy matrix indices in insertion order, so rewinding always
    removes the last row and column.
    """

    def __init__(self, counter: WorkCounter | None = None) -> None:
        self.counter = counter if counter is not None else WorkCounter()
        self._order: List[Hashable] = []
        self._index: Dict[Hashable, int] = {}
        self._dist = np.zeros((0, 0), dtype=np.float64)
        self._log: List[_InsertRecord] = []
        self.max_insert_work = 0

    @property
    def vertices(self) -> List[Hashable]:
        return list(self._order)

    def __contains__(self, v: Hashable) -> bool:
        return v in self._index

    def __len__(self) -> int:
        return len(self._order)

    def insert_vertex(
        self,
        v: Hashable,
        in_edges: Mapping[Hashable, float] | None = None,
        out_edges: Mapping[Hashable, float] | None = None,
    ) -> None:
        """Add ``v`` with arcs from/to already present vertices."""
        if v in self._index:
            raise ContractViolation(f"vertex {v!r} already present")
        in_edges = dict(in_edges or {})
        out_edges = dict(out_edges or {})
        for u, w in list(in_edges.items()) + list(out_edges.items()):
            if u not in self._index:
                raise UnknownElement(u)
            if w < 0:
                raise ContractViolation(f"negative weight {w} on an arc at {v!r}")
        k = len(self._order)
        before = self.counter.total
        # d(x, v) and d(v, y) through one arc at v
        to_v = np.full(k, math.inf)
        for u, w in in_edges.items():
            np.minimum(to_v, self._dist[:, self._index[u]] + w, out=to_v)
        from_v = np.full(k, math.inf)
        for u, w in out_edges.items():
            np.minimum(from_v, w + self._dist[self._index[u], :], out=from_v)
        charge(self.counter, "apsp_cell", k * (len(in_edges) + len(out_edges)))

        via = to_v[:, None] + from_v[None, :]
        improved = via < self._dist
        rows, cols = np.nonzero(improved)
        old = self._dist[rows, cols].copy()
        grown = np.empty((k + 1, k + 1), dtype=np.float64)
        grown[:k, :k] = np.where(improved, via, self._dist)
        grown[:k, k] = to_v
        grown[k, :k] = from_v
        grown[k, k] = 0.0
        charge(self.counter, "apsp_cell", k * k + 2 * k + 1)
        self._dist = grown
        self._order.append(v)
        self._index[v] = k
        self._log.append(_InsertRecord(v, rows, cols, old))
        self.max_insert_work = max(self.max_insert_work, self.counter.total - before)

    def rewind(self) -> Hashable:
        """Undo the most recent insertion; returns the removed vertex."""
        if not self._log:
            raise ContractViolation("nothing to rewind")
        record = self._log.pop()
        k = len(self._order) - 1
        shrunk = self._dist[:k, :k].copy()
        shrunk[record.rows, record.cols] = record.old
        charge(self.counter, "apsp_cell", int(record.rows.size) + 2 * k + 1)
        self._dist = shrunk
        self._order.pop()
        del self._index[record.vertex]
        return record.vertex

    def distance(self, u: Hashable, v: Hashable) -> float:
        try:
            return float(self._dist[self._index[u], self._index[v]])
        except KeyError as exc:
            raise UnknownElement(exc.args[0]) from None

    def snapshot(self) -> Dict[Tuple[Hashable, Hashable], float]:
        """Every pairwise distance keyed by vertex ids."""
        return {
            (a, b): float(self._dist[i, j])
            for i, a in enumerate(self._order)
            for j, b in enumerate(self._order)
        }


def apsp_insert_vertex(s: IncrementalApsp, v: Hashable, in_edges=None, out_edges=None) -> None:
    s.insert_vertex(v, in_edges, out_edges)


def apsp_rewind(s: IncrementalApsp) -> Hashable:
    return s.rewind()


# -------------------------------------------------------------- scheduler
class DeletionReport(NamedTuple):
    measured_eta: int
    predicted_eta: int
    rewinds: int
    reinserts: int
    work: int


def _nu2(t: int) -> int:
    return (t & -t).bit_length() - 1


@dataclass
class BucketScheduler:
    """Keep an undoable structure's stack in predicted-deletion order."""

    structure: UndoableIncremental
    counter: WorkCounter = field(default_factory=WorkCounter)
    constant: int = INVARIANT_CONSTANT
    check: bool = False

    def __post_init__(self) -> None:
        self.t = 0
        self._keys: Dict[Hashable, Tuple[object, int]] = {}
        self._seq = 0
        # each bucket is ordered bottom -> top, i.e. decreasing key
        self._buckets: List[List[Hashable]] = [[]]
        self.rebuilds = 0

    # ------------------------------------------------------------- stack
    @property
    def buckets(self) -> List[List[Hashable]]:
        return [list(b) for b in self._buckets]

    def stack(self) -> List[Hashable]:
        """Live elements bottom -> top."""
        out: List[Hashable] = []
        for bucket in reversed(self._buckets):
            out.extend(bucket)
        return out

    def __contains__(self, elem: Hashable) -> bool:
        return elem in self._keys

    def __len__(self) -> int:
        return len(self._keys)

    def key(self, elem: Hashable) -> Tuple[object, int]:
        return self._keys[elem]

    def _rewind(self, count: int) -> None:
        for _ in range(count):
            self.structure.rewind()
        charge(self.counter, "rewind", count)

    def _push(self, elems: Iterable[Hashable]) -> int:
        pushed = 0
        for elem in elems:
            self.structure.insert(elem)
            pushed += 1
        charge(self.counter, "push", pushed)
        return pushed

    def _rebuild(self, extra: Optional[Hashable] = None) -> None:
        """Scheduled reorganisation for the current update counter."""
        k = _nu2(self.t)
        while len(self._buckets) < k + 2:
            self._buckets.append([])
        gathered: List[Hashable] = []
        depth = 0
        for j in range(k + 2):
            gathered.extend(self._buckets[j])
            depth += len(self._buckets[j])
        self._rewind(depth)
        if extra is not None:
            gathered.append(extra)
        gathered.sort(key=self._keys.__getitem__)
        new: List[List[Hashable]] = []
        start = 0
        for j in range(k + 1):
            end = min(len(gathered), 2 ** (j + 1))
            new.append(gathered[start:end])
            start = end
        new.append(gathered[start:])
        for j, members in enumerate(new):
            self._buckets[j] = list(reversed(members))
        for j in range(k + 1, -1, -1):
            self._push(self._buckets[j])
        while len(self._buckets) > 1 and not self._buckets[-1]:
            self._buckets.pop()
        self.rebuilds += 1
        if self.check:
            self.check_invariants()

    def insert(self, elem: Hashable, key: object) -> None:
        """Insert ``elem`` that is predicted to be deleted at ``key``."""
        if elem in self._keys:
            raise ContractViolation(f"element {elem!r} already live")
        self._keys[elem] = (key, self._seq)
        self._seq += 1
        self.t += 1
        self._rebuild(extra=elem)

    def depth(self, elem: Hashable) -> int:
        """1-based depth from the top of the stack."""
        pos = 0
        for bucket in self._buckets:
            for idx in range(len(bucket) - 1, -1, -1):
                pos += 1
                if bucket[idx] == elem:
                    return pos
        raise UnknownElement(elem)

    def delete(self, elem: Hashable) -> DeletionReport:
        if elem not in self._keys:
            raise UnknownElement(elem)
        before = self.counter.total
        pos = self.depth(elem)
        my_key = self._keys[elem]
        predicted_eta = sum(1 for other, key in self._keys.items() if key < my_key)
        top = self.stack()[-pos:]
        self._rewind(pos)
        for bucket in self._buckets:
            if elem in bucket:
                bucket.remove(elem)
                break
        del self._keys[elem]
        reinserts = self._push(x for x in top if x != elem)
        self.t += 1
        self._rebuild()
        if pos - 1 != reinserts:
            raise VerificationError(f"re-inserted {reinserts} elements, expected {pos - 1}")
        logging.debug("deleted %r at depth %d (predicted eta %d)", elem, pos, predicted_eta)
        return DeletionReport(pos - 1, predicted_eta, pos, reinserts, self.counter.total - before)

    def check_invariants(self) -> None:
        """Verify the bucket invariants for the current update counter."""
        k = _nu2(self.t) if self.t else 0
        ranked = sorted(self._keys, key=self._keys.__getitem__)
        prefix: set = set()
        for j in range(min(k, len(self._buckets) - 1) + 1):
            prefix.update(self._buckets[j])
            wanted = ranked[: 2 ** (j + 1)]
            missing = [e for e in wanted if e not in prefix]
            if missing:
                raise VerificationError(f"t={self.t}: {missing!r} not within B_0..B_{j}")
        shallow = sum(len(b) for b in self._buckets[: k + 2])
        if shallow > self.constant * 2**k:
            raise VerificationError(f"t={self.t}: |B_0..B_{k + 1}| = {shallow} exceeds {self.constant}*2^{k}")


def fd_insert(sched: BucketScheduler, elem: Hashable, key: object) -> None:
    sched.insert(elem, key)


def fd_delete(sched: BucketScheduler, elem: Hashable) -> DeletionReport:
    return sched.delete(elem)


# ----------------------------------------------------------- fully dynamic
class _StoreAdapter:
    """Feed vertices to IncrementalApsp with their arcs to present vertices."""

    def __init__(self, owner: "FullyDynamicApsp") -> None:
        self.owner = owner

    def insert(self, v: Hashable) -> None:
        apsp = self.owner.apsp
        ins = {u: w for u, w in self.owner._in[v].items() if u in apsp}
        outs = {u: w for u, w in self.owner._out[v].items() if u in apsp}
        apsp.insert_vertex(v, ins, outs)

    def rewind(self) -> None:
        self.owner.apsp.rewind()


class FullyDynamicApsp:
    """Exact APSP under vertex insertions and deletions with predicted deletion order."""

    def __init__(self, counter: WorkCounter | None = None, *, check: bool = False) -> None:
        self.counter = counter if counter is not None else WorkCounter()
        self.apsp = IncrementalApsp(self.counter)
        self._in: Dict[Hashable, Dict[Hashable, float]] = {}
        self._out: Dict[Hashable, Dict[Hashable, float]] = {}
        self.scheduler = BucketScheduler(_StoreAdapter(self), self.counter, check=check)

    @property
    def gamma(self) -> int:
        """Counted work of the largest single insertion so far."""
        return self.apsp.max_insert_work

    def vertices(self) -> List[Hashable]:
        return self.scheduler.stack()

    def insert_vertex(
        self,
        v: Hashable,
        key: object,
        in_edges: Mapping[Hashable, float] | None = None,
        out_edges: Mapping[Hashable, float] | None = None,
    ) -> None:
        if v in self.scheduler:
            raise ContractViolation(f"vertex {v!r} already present")
        in_edges = dict(in_edges or {})
        out_edges = dict(out_edges or {})
        for u, w in list(in_edges.items()) + list(out_edges.items()):
            if u not in self.scheduler:
                raise UnknownElement(u)
            if w < 0:
                raise ContractViolation(f"negative weight {w} on an arc at {v!r}")
        self._in[v] = in_edges
        self._out[v] = out_edges
        for u, w in in_edges.items():
            self._out[u][v] = w
        for u, w in out_edges.items():
            self._in[u][v] = w
        self.scheduler.insert(v, key)

    def delete_vertex(self, v: Hashable) -> DeletionReport:
        if v not in self.scheduler:
            raise UnknownElement(v)
        report = self.scheduler.delete(v)
        for u in self._in.pop(v):
            self._out[u].pop(v, None)
        for u in self._out.pop(v):
            self._in[u].pop(v, None)
        return report

    def distance(self, u: Hashable, v: Hashable) -> float:
        if u not in self.scheduler or v not in self.scheduler:
            raise UnknownElement(u if u not in self.scheduler else v)
        if u == v:
            return 0.0
        return self.apsp.distance(u, v)

    def arcs(self) -> Dict[Tuple[Hashable, Hashable], float]:
        return {(u, v): w for u, outs in self._out.items() for v, w in outs.items()}


def fd_apsp(counter: WorkCounter | None = None, *, check: bool = False) -> FullyDynamicApsp:
    return FullyDynamicApsp(counter, check=check)
