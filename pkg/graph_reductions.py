"""Fully dynamic graph problems under vertex updates via PredictedInverse.

Each oracle encodes the current graph as a matrix over GF(p) and keeps a
queue of predicted vertex updates.  A queued vertex update is split, at the
time it is enqueued, into rank-1 parts (one row part and one column part per
touched block) computed against a *shadow* graph that has every earlier
queued update applied.  When updates arrive out of order the parts no longer
match the real graph; the difference on the touched rows and columns is then
appended to the matrix queue and performed at once.

Problem kinds:

=============  ==============================================  ==========
kind           matrix                                          answer
=============  ==============================================  ==========
triangle       4n x 4n unipotent block matrix with three A's   trace(A^3)
cycle          I - A with random arc weights                   det == 1
ssr / scc      I - A with random arc weights                   row s
matching       Tutte matrix                                    rank / 2
st_paths       Tutte matrix of the vertex-split bipartite      rank / 2 -
               graph                                           (n - 2)
=============  ==============================================  ==========
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from counters import WorkCounter, charge
from errors import ContractViolation, SingularUpdate
from field_arith import DEFAULT_PRIME, random_residues
from matrix_inverse_pred import PredictedInverse

Arc = Tuple[int, int]
Part = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class VertexUpdate:
    """Replace every arc incident to ``vertex``.

    Undirected problems use ``in_nbrs | out_nbrs`` as the new neighbourhood.
    """

    vertex: int
    in_nbrs: FrozenSet[int] = frozenset()
    out_nbrs: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "in_nbrs", frozenset(int(x) for x in self.in_nbrs) - {self.vertex})
        object.__setattr__(self, "out_nbrs", frozenset(int(x) for x in self.out_nbrs) - {self.vertex})

    def reversed(self) -> "VertexUpdate":
        return VertexUpdate(self.vertex, self.out_nbrs, self.in_nbrs)


def adjacency(n: int, arcs: Iterable[Arc], *, directed: bool = True) -> np.ndarray:
    adj = np.zeros((n, n), dtype=bool)
    for u, v in arcs:
        if u == v:
            continue
        adj[u, v] = True
        if not directed:
            adj[v, u] = True
    return adj


def apply_vertex_update(adj: np.ndarray, update: VertexUpdate, *, directed: bool = True) -> None:
    """Rewrite row and column ``update.vertex`` of ``adj`` in place."""
    n = adj.shape[0]
    x = update.vertex
    if not 0 <= x < n:
        raise ContractViolation(f"vertex {x} outside [0, {n})")
    out_mask = np.zeros(n, dtype=bool)
    in_mask = np.zeros(n, dtype=bool)
    if directed:
        out_mask[list(update.out_nbrs)] = True
        in_mask[list(update.in_nbrs)] = True
    else:
        nbrs = list(update.in_nbrs | update.out_nbrs)
        out_mask[nbrs] = True
        in_mask[nbrs] = True
    adj[x, :] = out_mask
    adj[:, x] = in_mask
    adj[x, x] = False


@dataclass
class QueuedVertexUpdate:
    update: VertexUpdate
    parts: List[Part]
    tag: str = "predicted"


def _split_parts(delta: np.ndarray, rows: Sequence[int], cols: Sequence[int], p: int, *, keep_zero: bool) -> List[Part]:
    """Write ``delta`` (supported on ``rows`` and ``cols``) as row then column rank-1 parts."""
    size = delta.shape[0]
    rest = delta.copy()
    parts: List[Part] = []
    for r in rows:
        vec = rest[r].copy()
        rest[r] = 0
        if keep_zero or vec.any():
            u = np.zeros(size, dtype=np.int64)
            u[r] = 1
            parts.append((u, vec % p))
    for c in cols:
        vec = rest[:, c].copy()
        rest[:, c] = 0
        if keep_zero or vec.any():
            v = np.zeros(size, dtype=np.int64)
            v[c] = 1
            parts.append((vec % p, v))
    if rest.any():
        raise ContractViolation("matrix change is not confined to the touched rows and columns")
    return parts


class DynamicGraphOracle:
    """Common queue handling for every problem kind."""

    kind = "abstract"
    directed = True
    rank_gadget = True

    def __init__(
        self,
        n: int,
        arcs: Iterable[Arc] = (),
        predicted: Sequence[VertexUpdate] = (),
        *,
        seed: int = 0,
        p: int = DEFAULT_PRIME,
        counter: WorkCounter | None = None,
        spread_chunk: int = 0,
    ) -> None:
        if n < 1:
            raise ContractViolation("graph needs at least one vertex")
        self.n = n
        self.p = p
        self.counter = counter if counter is not None else WorkCounter()
        self.spread_chunk = spread_chunk
        self._rng = np.random.default_rng(seed)
        self._adj = adjacency(n, arcs, directed=self.directed)
        self._vqueue: List[QueuedVertexUpdate] = []
        self._pending_predicted = [u for u in predicted]
        self.rebuilds = 0
        self._build()

    # ----------------------------------------------------------- encoding
    def _draw_weights(self) -> None:
        """Fresh random encoding; subclasses store what they need."""

    def encode(self, adj: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def touched(self, x: int) -> Tuple[List[int], List[int]]:
        """Matrix rows and columns a vertex update to ``x`` can change."""
        return [x], [x]

    def query_rows(self, x: int) -> List[int]:
        return []

    def _before(self, x: int) -> None:
        """Hook run before the parts of a vertex update are performed."""

    def _after(self, x: int) -> None:
        """Hook run once the matrix matches the new graph."""

    # -------------------------------------------------------------- state
    @property
    def adjacency(self) -> np.ndarray:
        return self._adj.copy()

    @property
    def queue_length(self) -> int:
        return len(self._vqueue)

    def arcs(self) -> Set[Arc]:
        return {(int(u), int(v)) for u, v in zip(*np.nonzero(self._adj))}

    def _parts_for(self, update: VertexUpdate) -> List[Part]:
        before = self.encode(self._shadow)
        apply_vertex_update(self._shadow, update, directed=self.directed)
        after = self.encode(self._shadow)
        rows, cols = self.touched(update.vertex)
        return _split_parts((after - before) % self.p, rows, cols, self.p, keep_zero=True)

    def _build(self) -> None:
        """(Re)build the matrix structure from the real graph and the queue."""
        self._draw_weights()
        self._struct = self.encode(self._adj)
        self._shadow = self._adj.copy()
        queued = [q.update for q in self._vqueue] + self._pending_predicted
        tags = [q.tag for q in self._vqueue] + ["predicted"] * len(self._pending_predicted)
        self._pending_predicted = []
        self._vqueue = [QueuedVertexUpdate(u, self._parts_for(u), tag) for u, tag in zip(queued, tags)]
        parts = [part for q in self._vqueue for part in q.parts]
        rows = self.query_rows(self._vqueue[0].update.vertex) if self._vqueue else []
        self.ds = PredictedInverse(
            self._struct,
            parts,
            p=self.p,
            seed=int(self._rng.integers(1 << 31)),
            counter=self.counter,
            rank_gadget=self.rank_gadget,
            spread_chunk=self.spread_chunk,
            query_rows=rows,
            min_queue=0,
        )
        self._after_build()

    def _after_build(self) -> None:
        """Recompute maintained answers after a (re)build."""

    def _rebuild(self, reason: str) -> None:
        self.rebuilds += 1
        logging.info("%s oracle: re-randomizing encoding (%s)", self.kind, reason)
        self._build()

    # -------------------------------------------------------------- queue
    def append_update(self, update: VertexUpdate, tag: str = "appended") -> None:
        item = QueuedVertexUpdate(update, self._parts_for(update), tag)
        self._vqueue.append(item)
        for u, v in item.parts:
            self.ds.append_update(u, v)

    def queued_update(self, eta: int) -> VertexUpdate:
        return self._vqueue[eta - 1].update

    def position_of(self, update: VertexUpdate) -> int:
        """1-based queue position of the first queued copy of ``update``."""
        for pos, item in enumerate(self._vqueue, 1):
            if item.update == update:
                return pos
        raise KeyError(update)

    def perform_update(self, eta: int) -> None:
        """Perform the queued vertex update at 1-based position ``eta``."""
        if not 1 <= eta <= len(self._vqueue):
            raise ContractViolation(f"queue position {eta} outside [1, {len(self._vqueue)}]")
        offset = 1 + sum(len(q.parts) for q in self._vqueue[: eta - 1])
        item = self._vqueue.pop(eta - 1)
        x = item.update.vertex
        self._before(x)
        apply_vertex_update(self._adj, item.update, directed=self.directed)
        try:
            for u, v in item.parts:
                self.ds.perform_update(offset)
                self._struct = (self._struct + np.outer(u, v)) % self.p
            self._correct(x)
        except SingularUpdate as exc:
            self._rebuild(str(exc))
        else:
            if self._vqueue:
                self.ds.register_query_rows(self.query_rows(self._vqueue[0].update.vertex))
        self._after(x)

    def vertex_update(self, update: VertexUpdate) -> None:
        """Perform an unpredicted update: append it and perform it from the back."""
        self.append_update(update)
        self.perform_update(len(self._vqueue))

    def _correct(self, x: int) -> None:
        rows, cols = self.touched(x)
        target = self.encode(self._adj)
        delta = np.zeros_like(self._struct)
        delta[rows, :] = (target[rows, :] - self._struct[rows, :]) % self.p
        delta[:, cols] = (target[:, cols] - self._struct[:, cols]) % self.p
        charge(self.counter, "vector_copy", (len(rows) + len(cols)) * self._struct.shape[0])
        parts = _split_parts(delta, rows, cols, self.p, keep_zero=False)
        if parts:
            logging.debug("%s oracle: %d correction parts for vertex %d", self.kind, len(parts), x)
        for u, v in parts:
            self.ds.append_update(u, v)
            self.ds.perform_update(len(self.ds.queue))
            self._struct = (self._struct + np.outer(u, v)) % self.p


def _signed_weights(n: int, rng: np.random.Generator, p: int) -> np.ndarray:
    return random_residues((n, n), rng, p, nonzero=True)


class TriangleOracle(DynamicGraphOracle):
    """Triangle counts through the top-right block of a unipotent block matrix.

    The inverse of [[I,A,0,0],[0,I,A,0],[0,0,I,A],[0,0,0,I]] has -A^3 in its
    top-right block, so (A^3)[x, x] is one entry of row x.
    """

    kind = "triangle"
    directed = False
    rank_gadget = False

    def encode(self, adj: np.ndarray) -> np.ndarray:
        n = self.n
        a = adj.astype(np.int64)
        t = np.eye(4 * n, dtype=np.int64)
        for b in range(3):
            t[b * n : (b + 1) * n, (b + 1) * n : (b + 2) * n] = a
        return t

    def touched(self, x: int) -> Tuple[List[int], List[int]]:
        n = self.n
        return [x, n + x, 2 * n + x], [n + x, 2 * n + x, 3 * n + x]

    def query_rows(self, x: int) -> List[int]:
        return [x]

    def closed_walks(self, x: int) -> int:
        """(A^3)[x, x] read from the maintained inverse."""
        e = np.zeros(4 * self.n, dtype=np.int64)
        e[x] = 1
        row = self.ds.query_row(e)
        return int((-row[3 * self.n + x]) % self.p)

    def _after_build(self) -> None:
        a = self._adj.astype(np.int64)
        self._trace = int(np.trace(a @ a @ a))

    def _before(self, x: int) -> None:
        self._old = self.closed_walks(x)

    def _after(self, x: int) -> None:
        self._trace += 3 * (self.closed_walks(x) - self._old)

    @property
    def triangle_count(self) -> int:
        return self._trace // 6

    @property
    def directed_triangle_count(self) -> int:
        """Sum over v of (A^3)[v, v] divided by 3 (closed directed triples)."""
        return self._trace // 3


class _WeightedIMinusA(DynamicGraphOracle):
    def _draw_weights(self) -> None:
        self._weights = _signed_weights(self.n, self._rng, self.p)

    def encode(self, adj: np.ndarray) -> np.ndarray:
        w = np.where(adj, self._weights, 0)
        return (np.eye(self.n, dtype=np.int64) - w) % self.p


class CycleOracle(_WeightedIMinusA):
    """det(I - A) = 1 exactly when the graph is acyclic (with high probability)."""

    kind = "cycle"

    @property
    def acyclic(self) -> bool:
        return self.ds.det == 1


class ReachabilityOracle(_WeightedIMinusA):
    """Single-source reachability from the nonzero pattern of row s of (I - A)^-1."""

    kind = "ssr"
    rank_gadget = False

    def __init__(self, n: int, arcs: Iterable[Arc] = (), predicted: Sequence[VertexUpdate] = (), *, source: int = 0, **kwargs) -> None:
        if not 0 <= source < n:
            raise ContractViolation(f"source {source} outside [0, {n})")
        self.source = source
        try:
            super().__init__(n, arcs, predicted, **kwargs)
        except SingularUpdate:
            self.rebuilds += 1
            self._build()

    def query_rows(self, x: int) -> List[int]:
        return [self.source]

    def reachable_set(self) -> Set[int]:
        e = np.zeros(self.n, dtype=np.int64)
        e[self.source] = 1
        row = self.ds.query_row(e)
        if row is None:
            self._rebuild("singular encoding")
            return self.reachable_set()
        return {int(j) for j in np.flatnonzero(row)}


class StrongConnectivityOracle:
    """Strong connectivity from reachability out of and into vertex 0."""

    kind = "scc"
    directed = True

    def __init__(self, n: int, arcs: Iterable[Arc] = (), predicted: Sequence[VertexUpdate] = (), *, seed: int = 0, **kwargs) -> None:
        arcs = list(arcs)
        self.n = n
        self.forward = ReachabilityOracle(n, arcs, predicted, source=0, seed=seed, **kwargs)
        self.backward = ReachabilityOracle(
            n,
            [(v, u) for u, v in arcs],
            [u.reversed() for u in predicted],
            source=0,
            seed=seed + 1,
            **kwargs,
        )

    @property
    def queue_length(self) -> int:
        return self.forward.queue_length

    def queued_update(self, eta: int) -> VertexUpdate:
        return self.forward.queued_update(eta)

    def position_of(self, update: VertexUpdate) -> int:
        return self.forward.position_of(update)

    def append_update(self, update: VertexUpdate, tag: str = "appended") -> None:
        self.forward.append_update(update, tag)
        self.backward.append_update(update.reversed(), tag)

    def perform_update(self, eta: int) -> None:
        self.forward.perform_update(eta)
        self.backward.perform_update(eta)

    def vertex_update(self, update: VertexUpdate) -> None:
        self.forward.vertex_update(update)
        self.backward.vertex_update(update.reversed())

    def strongly_connected(self) -> bool:
        full = set(range(self.n))
        return self.forward.reachable_set() == full and self.backward.reachable_set() == full


class MatchingOracle(DynamicGraphOracle):
    """Maximum matching size as half the rank of a random Tutte matrix."""

    kind = "matching"
    directed = False

    def _draw_weights(self) -> None:
        self._weights = _signed_weights(self.n, self._rng, self.p)

    def encode(self, adj: np.ndarray) -> np.ndarray:
        upper = np.triu(np.where(adj, self._weights, 0), 1)
        return (upper - upper.T) % self.p

    @property
    def matching_size(self) -> int:
        return self.ds.rank // 2


class DisjointPathsOracle(DynamicGraphOracle):
    """Vertex-disjoint s-t paths through bipartite matching on a split graph.

    Left copies u_out for u != t (s_out n times), right copies v_in for v != s
    (t_in n times).  Arc (u, v) joins u_out to v_in, every v outside {s, t}
    joins v_out to v_in, and the arc (s, t) joins only the first copies.  The
    path count is the matching size minus n - 2.
    """

    kind = "st_paths"

    def __init__(self, n: int, arcs: Iterable[Arc] = (), predicted: Sequence[VertexUpdate] = (), *, s: int = 0, t: int = 1, **kwargs) -> None:
        if s == t or not (0 <= s < n and 0 <= t < n):
            raise ContractViolation(f"need distinct terminals inside [0, {n}), got s={s} t={t}")
        self.s = s
        self.t = t
        self._out_idx: dict[int, List[int]] = {}
        self._in_idx: dict[int, List[int]] = {}
        idx = 0
        for u in range(n):
            if u == t:
                continue
            copies = n if u == s else 1
            self._out_idx[u] = list(range(idx, idx + copies))
            idx += copies
        for v in range(n):
            if v == s:
                continue
            copies = n if v == t else 1
            self._in_idx[v] = list(range(idx, idx + copies))
            idx += copies
        self.size = idx
        super().__init__(n, arcs, predicted, **kwargs)

    def _draw_weights(self) -> None:
        self._weights = _signed_weights(self.size, self._rng, self.p)

    def split_adjacency(self, adj: np.ndarray) -> np.ndarray:
        split = np.zeros((self.size, self.size), dtype=bool)
        for v in range(self.n):
            if v not in (self.s, self.t):
                split[self._out_idx[v][0], self._in_idx[v][0]] = True
        for u, v in zip(*np.nonzero(adj)):
            u, v = int(u), int(v)
            if u == self.t or v == self.s:
                continue
            if u == self.s and v == self.t:
                split[self._out_idx[u][0], self._in_idx[v][0]] = True
                continue
            for a in self._out_idx[u]:
                split[a, self._in_idx[v]] = True
        return split

    def encode(self, adj: np.ndarray) -> np.ndarray:
        split = self.split_adjacency(adj)
        sym = split | split.T
        upper = np.triu(np.where(sym, self._weights, 0), 1)
        return (upper - upper.T) % self.p

    def touched(self, x: int) -> Tuple[List[int], List[int]]:
        """Every split copy of ``x``, as rows and as columns.

        s has n out copies and t has n in copies, so an update to either
        terminal splits into 2n rank-1 parts.  Any other vertex has one copy
        per side and splits into 4.
        """
        idx = self._out_idx.get(x, []) + self._in_idx.get(x, [])
        return idx, idx

    @property
    def disjoint_paths(self) -> int:
        return self.ds.rank // 2 - (self.n - 2)


ORACLES = {
    "triangle": TriangleOracle,
    "cycle": CycleOracle,
    "ssr": ReachabilityOracle,
    "scc": StrongConnectivityOracle,
    "matching": MatchingOracle,
    "st_paths": DisjointPathsOracle,
}


def make_oracle(kind: str, n: int, arcs: Iterable[Arc] = (), predicted: Sequence[VertexUpdate] = (), **kwargs):
    try:
        cls = ORACLES[kind]
    except KeyError:
        raise ContractViolation(f"unknown problem kind {kind!r}; choose from {sorted(ORACLES)}") from None
    return cls(n, arcs, predicted, **kwargs)


def answer(oracle) -> object:
    """The maintained answer of any oracle, in oracle-comparable form."""
    if isinstance(oracle, TriangleOracle):
        return oracle.triangle_count
    if isinstance(oracle, CycleOracle):
        return not oracle.acyclic
    if isinstance(oracle, ReachabilityOracle):
        return frozenset(oracle.reachable_set())
    if isinstance(oracle, StrongConnectivityOracle):
        return oracle.strongly_connected()
    if isinstance(oracle, MatchingOracle):
        return oracle.matching_size
    if isinstance(oracle, DisjointPathsOracle):
        return oracle.disjoint_paths
    raise ContractViolation(f"not a graph oracle: {oracle!r}")


# Thin functional entry points.
def triangle_structure(n: int, arcs: Iterable[Arc] = (), predicted: Sequence[VertexUpdate] = (), **kwargs) -> TriangleOracle:
    return TriangleOracle(n, arcs, predicted, **kwargs)


def triangle_count_query(ds: TriangleOracle) -> int:
    return ds.triangle_count


def triangle_vertex_update(ds: TriangleOracle, update: VertexUpdate, eta: Optional[int] = None) -> int:
    if eta is None:
        ds.vertex_update(update)
    else:
        ds.perform_update(eta)
    return ds.triangle_count


def cycle_detection(n: int, arcs: Iterable[Arc] = (), predicted: Sequence[VertexUpdate] = (), **kwargs) -> CycleOracle:
    return CycleOracle(n, arcs, predicted, **kwargs)


def ssr_structure(n: int, arcs: Iterable[Arc] = (), s: int = 0, predicted: Sequence[VertexUpdate] = (), **kwargs) -> ReachabilityOracle:
    return ReachabilityOracle(n, arcs, predicted, source=s, **kwargs)


def reachable_set_query(ds: ReachabilityOracle) -> Set[int]:
    return ds.reachable_set()


def scc_query(ds: StrongConnectivityOracle) -> bool:
    return ds.strongly_connected()


def matching_size(n: int, edges: Iterable[Arc] = (), predicted: Sequence[VertexUpdate] = (), **kwargs) -> MatchingOracle:
    return MatchingOracle(n, edges, predicted, **kwargs)


def st_disjoint_paths(n: int, arcs: Iterable[Arc] = (), s: int = 0, t: int = 1, predicted: Sequence[VertexUpdate] = (), **kwargs) -> DisjointPathsOracle:
    return DisjointPathsOracle(n, arcs, predicted, s=s, t=t, **kwargs)
