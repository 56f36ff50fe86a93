"""Incremental and decremental reachability / approximate distances with a
predicted edge sequence.

Preprocessing weights the predicted edges by their rank (negated rank when
edges are deleted) and computes hop-bounded bottleneck matrices.  Every edge
in the longest correctly predicted prefix (suffix when deleting) is then
answered by one matrix lookup; the out-of-order edges are few when the
predictions are good and are handled on a small auxiliary graph per query.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Generator, Iterable, List, Literal, NamedTuple, Optional, Sequence, Tuple, TypeVar

import numpy as np

from counters import WorkCounter, charge
from errors import ContractViolation, UnpredictedEdge
from minmax_algebra import BottleneckMatrix, build_d_ladder, weight_matrix

Edge = Tuple[int, int]
T = TypeVar("T")
Mode = Literal["incremental", "decremental"]
INCREMENTAL: Mode = "incremental"
DECREMENTAL: Mode = "decremental"


@dataclass(frozen=True)
class PredictedEdgeSequence:
    """Predicted update order ê_1..ê_m of directed edges."""

    edges: Tuple[Edge, ...]
    index_of: Dict[Edge, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        index: Dict[Edge, int] = {}
        for rank, edge in enumerate(edges, 1):
            if edge in index:
                raise ContractViolation(f"edge {edge} predicted twice (ranks {index[edge]} and {rank})")
            index[edge] = rank
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "index_of", index)

    @property
    def m(self) -> int:
        return len(self.edges)

    def rank(self, edge: Edge) -> int:
        try:
            return self.index_of[(int(edge[0]), int(edge[1]))]
        except KeyError as exc:
            raise UnpredictedEdge(edge) from exc

    def edge(self, rank: int) -> Edge:
        return self.edges[rank - 1]

    def node_count(self) -> int:
        return 1 + max((max(u, v) for u, v in self.edges), default=-1)


class PrefixTracker:
    """Track applied ranks against the longest correctly predicted run.

    Incremental: ``boundary`` is p, the length of the inserted prefix.
    Decremental: ``boundary`` is j*, the first rank of the surviving suffix.
    Both operations are amortised O(1): the boundary only moves one way and
    each rank enters and leaves the out-of-order set at most once.
    """

    def __init__(self, m: int, mode: Mode) -> None:
        if mode not in (INCREMENTAL, DECREMENTAL):
            raise ContractViolation(f"unknown mode {mode!r}")
        self.m = m
        self.mode = mode
        self.applied: set[int] = set()
        self._err: set[int] = set()
        self._boundary = 0 if mode == INCREMENTAL else 1

    @property
    def boundary(self) -> int:
        return self._boundary

    @property
    def eta(self) -> int:
        return len(self._err)

    def out_of_order(self) -> List[int]:
        return sorted(self._err)

    def apply(self, rank: int) -> None:
        if not 1 <= rank <= self.m:
            raise ContractViolation(f"rank {rank} outside [1, {self.m}]")
        if rank in self.applied:
            raise ContractViolation(f"rank {rank} already applied")
        self.applied.add(rank)
        if self.mode == INCREMENTAL:
            self._insert(rank)
        else:
            self._delete(rank)

    def _insert(self, rank: int) -> None:
        if rank != self._boundary + 1:
            self._err.add(rank)
            return
        self._boundary = rank
        while self._boundary + 1 in self._err:
            self._err.remove(self._boundary + 1)
            self._boundary += 1

    def _delete(self, rank: int) -> None:
        if rank < self._boundary:
            self._err.discard(rank)
            return
        for q in range(self._boundary, rank):
            if q not in self.applied:
                self._err.add(q)
        self._boundary = rank + 1

    def present_ranks(self) -> List[int]:
        """Ranks whose edge is currently in the graph."""
        if self.mode == INCREMENTAL:
            return list(range(1, self._boundary + 1)) + self.out_of_order()
        return self.out_of_order() + list(range(self._boundary, self.m + 1))


@dataclass
class PartialDynState:
    seq: PredictedEdgeSequence
    tracker: PrefixTracker
    ladder: List[Tuple[int, BottleneckMatrix]]
    eps: float
    n: int
    mode: Mode
    counter: WorkCounter = field(default_factory=WorkCounter)

    @property
    def threshold(self) -> int:
        if self.mode == INCREMENTAL:
            return self.tracker.boundary
        return -self.tracker.boundary


class ErrorStats(NamedTuple):
    eta_bar: int
    boundary: int
    e_err: List[Edge]


def preprocess(
    seq: PredictedEdgeSequence | Sequence[Edge],
    eps: float,
    mode: Mode = INCREMENTAL,
    *,
    n: Optional[int] = None,
    counter: WorkCounter | None = None,
) -> PartialDynState:
    """Build the hop ladder on the rank-weighted predicted graph."""
    if not isinstance(seq, PredictedEdgeSequence):
        seq = PredictedEdgeSequence(tuple(seq))
    if not eps > 0:
        raise ContractViolation(f"eps must be positive, got {eps}")
    nodes = max(seq.node_count(), n or 0)
    sign = 1 if mode == INCREMENTAL else -1
    w = weight_matrix(nodes, ((u, v, sign * rank) for rank, (u, v) in enumerate(seq.edges, 1)))
    counter = counter if counter is not None else WorkCounter()
    ladder = build_d_ladder(w, eps, nodes, counter=counter)
    return PartialDynState(
        seq=seq,
        tracker=PrefixTracker(seq.m, mode),
        ladder=ladder,
        eps=eps,
        n=nodes,
        mode=mode,
        counter=counter,
    )


def apply_update(state: PartialDynState, edge: Edge) -> None:
    """Insert (incremental) or delete (decremental) a predicted edge."""
    state.tracker.apply(state.seq.rank(edge))
    charge(state.counter, "tracker_op", 1)


def error_stats(state: PartialDynState) -> ErrorStats:
    ranks = state.tracker.out_of_order()
    return ErrorStats(state.tracker.eta, state.tracker.boundary, [state.seq.edge(r) for r in ranks])


def current_edges(state: PartialDynState) -> set[Edge]:
    return {state.seq.edge(r) for r in state.tracker.present_ranks()}


def auxiliary_nodes(state: PartialDynState, u: int, v: int) -> List[int]:
    """Nodes of the per-query auxiliary graph: out-of-order endpoints plus u, v."""
    nodes = {u, v}
    for a, b in error_stats(state).e_err:
        nodes.add(a)
        nodes.add(b)
    return sorted(nodes)


def _err_adjacency(state: PartialDynState) -> Dict[int, set[int]]:
    adj: Dict[int, set[int]] = {}
    for a, b in error_stats(state).e_err:
        adj.setdefault(a, set()).add(b)
    return adj


def _in_range(state: PartialDynState, x: int) -> bool:
    return 0 <= x < state.n


def finish(steps: Generator[object, None, T]) -> T:
    """Run a resumable computation to the end and return its result."""
    while True:
        try:
            next(steps)
        except StopIteration as stop:
            return stop.value


def _checked_nodes(state: PartialDynState, u: int, v: int) -> List[int]:
    nodes = auxiliary_nodes(state, u, v)
    if len(nodes) > 2 * state.tracker.eta + 2:
        raise AssertionError("auxiliary graph larger than 2*eta+2")
    return nodes


def _reach_rows(state: PartialDynState, u: int, v: int, nodes: List[int]) -> Generator[int, None, bool]:
    """BFS over the auxiliary graph, yielding after each expanded node."""
    closure = state.ladder[-1][1].data
    thr = state.threshold
    err_adj = _err_adjacency(state)
    seen = {u}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        for y in nodes:
            if y in seen:
                continue
            linked = y in err_adj.get(x, ())
            if not linked and _in_range(state, x) and _in_range(state, y):
                linked = closure[x, y] <= thr
            if linked:
                if y == v:
                    return True
                seen.add(y)
                queue.append(y)
        yield x
    return False


def query_reachable(state: PartialDynState, u: int, v: int) -> bool:
    """True iff v is reachable from u in the current graph."""
    if u == v:
        return True
    nodes = _checked_nodes(state, u, v)
    charge(state.counter, "h_pair", len(nodes) * len(nodes))
    return finish(_reach_rows(state, u, v, nodes))


def reachable_steps(state: PartialDynState, u: int, v: int) -> Generator[None, None, bool]:
    """``query_reachable`` as a resumable computation.

    Each step scans one row of the auxiliary graph, charges it and yields;
    the answer is the return value.  The state must not change until the
    generator is exhausted.
    """
    if u == v:
        return True
    nodes = _checked_nodes(state, u, v)
    rows = _reach_rows(state, u, v, nodes)
    while True:
        charge(state.counter, "h_pair", len(nodes))
        try:
            next(rows)
        except StopIteration as stop:
            return stop.value
        yield


def _ladder_weight(state: PartialDynState, x: int, y: int, thr: int) -> Optional[int]:
    """Smallest ladder hop bound d with B^(d)[x, y] <= thr, by binary search."""
    if not (_in_range(state, x) and _in_range(state, y)):
        return None
    ladder = state.ladder
    if ladder[-1][1].data[x, y] > thr:
        charge(state.counter, "ladder_cmp", 1)
        return None
    lo, hi = 0, len(ladder) - 1
    steps = 1
    while lo < hi:
        mid = (lo + hi) // 2
        steps += 1
        if ladder[mid][1].data[x, y] <= thr:
            hi = mid
        else:
            lo = mid + 1
    charge(state.counter, "ladder_cmp", steps)
    return ladder[lo][0]


def query_distance(state: PartialDynState, u: int, v: int) -> Optional[int]:
    """Distance estimate in [d_G(u, v), (1+eps)·d_G(u, v)], or None if unreachable."""
    if math.isinf(state.eps):
        raise ContractViolation("distance queries need a finite eps")
    if u == v:
        return 0
    nodes = auxiliary_nodes(state, u, v)
    if len(nodes) > 2 * state.tracker.eta + 2:
        raise AssertionError("auxiliary graph larger than 2*eta+2")
    thr = state.threshold
    err_adj = _err_adjacency(state)
    weights: Dict[int, List[Tuple[int, int]]] = {}
    for x in nodes:
        out = []
        for y in nodes:
            if y == x:
                continue
            best = 1 if y in err_adj.get(x, ()) else _ladder_weight(state, x, y, thr)
            if best is not None:
                out.append((y, best))
        weights[x] = out
    charge(state.counter, "h_pair", len(nodes) * len(nodes))

    dist = {u: 0}
    heap = [(0, u)]
    while heap:
        d, x = heapq.heappop(heap)
        if x == v:
            return d
        if d > dist.get(x, math.inf):
            continue
        for y, w in weights[x]:
            nd = d + w
            if nd < dist.get(y, math.inf):
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
        charge(state.counter, "dijkstra_op", len(weights[x]))
    return None


def replay_script(
    state: PartialDynState, operations: Iterable[Tuple[str, int, int]]
) -> List[Tuple[bool, Optional[int]]]:
    """Run ``U``/``Q`` operations; each query yields (reachable, distance)."""
    answers: List[Tuple[bool, Optional[int]]] = []
    for kind, a, b in operations:
        if kind == "U":
            apply_update(state, (a, b))
        elif kind == "Q":
            dist = None if math.isinf(state.eps) else query_distance(state, a, b)
            answers.append((query_reachable(state, a, b), dist))
        else:
            raise ContractViolation(f"unknown operation {kind!r}")
    return answers


def realized_eta_inf(seq: PredictedEdgeSequence, realized: Sequence[Edge]) -> int:
    """max_j |j - Π(j)| for a realized order of predicted edges."""
    if not realized:
        return 0
    ranks = np.array([seq.rank(e) for e in realized])
    return int(np.max(np.abs(ranks - np.arange(1, len(ranks) + 1))))
