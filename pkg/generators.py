"""Seeded workload generators for the benchmark and verification suites."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ContractViolation
from graph_reductions import VertexUpdate, apply_vertex_update, adjacency
from omv_pred import BoolVector
from partially_dynamic import DECREMENTAL, INCREMENTAL, Edge, Mode

MODEL_KINDS = ("exact", "linf_window", "swap_count", "unpredicted_rate")
_MODEL_RE = re.compile(r"^\s*([a-z_]+)\s*(?:[:=(]\s*([0-9.]+)\s*\)?)?\s*$")


@dataclass(frozen=True)
class ErrorModel:
    """How a realized order deviates from its prediction.

    ``exact``               the prediction is right
    ``linf_window(w)``      shuffles inside disjoint windows of width w + 1
    ``swap_count(k)``       k random adjacent transpositions
    ``unpredicted_rate(q)`` each item is independently unpredicted with probability q
    """

    kind: str = "exact"
    param: float = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ContractViolation(f"unknown error model {self.kind!r}; choose from {', '.join(MODEL_KINDS)}")
        if self.param < 0:
            raise ContractViolation(f"error model parameter must be non-negative, got {self.param}")
        if self.kind == "unpredicted_rate" and self.param > 1:
            raise ContractViolation(f"unpredicted rate must lie in [0, 1], got {self.param}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "ErrorModel":
        """Parse ``exact``, ``linf_window:4``, ``swap_count=3`` or ``unpredicted_rate(0.1)``."""
        match = _MODEL_RE.match(text)
        if not match:
            raise ContractViolation(f"cannot parse error model {text!r}")
        kind, raw = match.groups()
        param = float(raw) if raw else 0.0
        if kind in ("linf_window", "swap_count"):
            param = int(param)
        return cls(kind, param, seed)

    def with_param(self, param: float) -> "ErrorModel":
        return ErrorModel(self.kind, param, self.seed)

    def __str__(self) -> str:
        return self.kind if self.kind == "exact" else f"{self.kind}:{self.param:g}"


@dataclass
class PerturbedSequence:
    """``realized[j] = perm[j]``: the predicted rank of the item realized j-th (0-based)."""

    perm: List[int]
    unpredicted: List[bool]

    @property
    def m(self) -> int:
        return len(self.perm)

    @property
    def eta_inf(self) -> int:
        return max((abs(j - r) for j, r in enumerate(self.perm)), default=0)

    @property
    def eta_l1(self) -> int:
        return sum(abs(j - r) for j, r in enumerate(self.perm))

    def apply(self, items: Sequence) -> list:
        return [items[r] for r in self.perm]


def gen_perturbed_sequence(m: int, model: ErrorModel) -> PerturbedSequence:
    rng = np.random.default_rng(model.seed)
    perm = list(range(m))
    unpredicted = [False] * m
    if model.kind == "linf_window":
        width = int(model.param) + 1
        for start in range(0, m, width):
            block = perm[start : start + width]
            perm[start : start + width] = [block[i] for i in rng.permutation(len(block))]
    elif model.kind == "swap_count" and m > 1:
        for pos in rng.integers(0, m - 1, size=int(model.param)):
            perm[pos], perm[pos + 1] = perm[pos + 1], perm[pos]
    elif model.kind == "unpredicted_rate":
        unpredicted = [bool(x) for x in rng.random(m) < model.param]
    return PerturbedSequence(perm, unpredicted)


# ------------------------------------------------------------------ Boolean
def random_bool_matrix(n: int, density: float, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, n)) < density


def random_bool_vector(n: int, density: float, rng: np.random.Generator) -> BoolVector:
    return BoolVector.from_bits(rng.random(n) < density) if n else BoolVector(0)


def flip_bits(v: BoolVector, count: int, rng: np.random.Generator) -> BoolVector:
    """Flip ``count`` distinct random positions of ``v``."""
    bits = v.bits
    for j in rng.choice(v.n, size=min(count, v.n), replace=False):
        bits ^= 1 << int(j)
    return BoolVector(v.n, bits)


@dataclass
class OmvWorkload:
    matrix: np.ndarray
    predicted: List[BoolVector]
    actual: List[BoolVector]


def gen_omv_workload(n: int, flips: int, seed: int, density: float = 0.3) -> OmvWorkload:
    rng = np.random.default_rng(seed)
    m = random_bool_matrix(n, density, rng)
    predicted = [random_bool_vector(n, density, rng) for _ in range(n)]
    actual = [flip_bits(v, flips, rng) for v in predicted]
    return OmvWorkload(m, predicted, actual)


@dataclass
class OumvWorkload:
    """Four-layer graph workload answering u_i^T M v_i by reachability."""

    n: int
    mode: Mode
    predicted: List[Edge]
    script: List[Tuple[str, int, int]]
    expected: List[bool]
    eta_inf: int


def _layers(n: int) -> Tuple[range, range, range, range]:
    return range(0, n), range(n, 2 * n), range(2 * n, 3 * n), range(3 * n, 4 * n)


def gen_oumv_instance(
    m,
    *,
    seed: int = 0,
    mode: Mode = INCREMENTAL,
    us: Optional[Sequence[BoolVector]] = None,
    vs: Optional[Sequence[BoolVector]] = None,
    density: float = 0.5,
) -> OumvWorkload:
    """Encode n OuMv queries as edge updates on layers a, b, c, d.

    E_M joins b_i to c_j when M[i, j] is set.  Query i uses the block
    (a_i, b_1), (c_1, d_i), (a_i, b_2), (c_2, d_i), ...; the realized script
    applies the block's one-edges, asks reach(a_i, d_i), then applies the
    zero-edges (in decremental mode: deletes the zero-edges, asks, deletes
    the one-edges).
    """
    mat = np.asarray(m, dtype=bool)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ContractViolation(f"expected a square matrix, got {mat.shape}")
    rng = np.random.default_rng(seed)
    us = list(us) if us is not None else [random_bool_vector(n, density, rng) for _ in range(n)]
    vs = list(vs) if vs is not None else [random_bool_vector(n, density, rng) for _ in range(n)]
    a, b, c, d = _layers(n)
    e_m = [(b[i], c[j]) for i in range(n) for j in range(n) if mat[i, j]]
    blocks: List[List[Edge]] = []
    for i in range(n):
        block: List[Edge] = []
        for j in range(n):
            block.append((a[i], b[j]))
            block.append((c[j], d[i]))
        blocks.append(block)

    def wanted(i: int, edge: Edge) -> bool:
        x, y = edge
        return us[i][y - n] if x == a[i] else vs[i][x - 2 * n]

    script: List[Tuple[str, int, int]] = []
    realized: List[Edge] = []
    if mode == INCREMENTAL:
        predicted = e_m + [e for block in blocks for e in block]
        realized.extend(e_m)
        for i, block in enumerate(blocks):
            ones = [e for e in block if wanted(i, e)]
            zeros = [e for e in block if not wanted(i, e)]
            realized.extend(ones)
            script += [("U", x, y) for x, y in ones]
            script.append(("Q", a[i], d[i]))
            realized.extend(zeros)
            script += [("U", x, y) for x, y in zeros]
        script = [("U", x, y) for x, y in e_m] + script
    elif mode == DECREMENTAL:
        predicted = [e for block in blocks for e in block] + e_m
        for i, block in enumerate(blocks):
            ones = [e for e in block if wanted(i, e)]
            zeros = [e for e in block if not wanted(i, e)]
            realized.extend(zeros)
            script += [("U", x, y) for x, y in zeros]
            script.append(("Q", a[i], d[i]))
            realized.extend(ones)
            script += [("U", x, y) for x, y in ones]
    else:
        raise ContractViolation(f"unknown mode {mode!r}")
    rank = {e: r for r, e in enumerate(predicted)}
    eta_inf = max((abs(j - rank[e]) for j, e in enumerate(realized)), default=0)
    expected = [
        bool(np.any(us[i].to_array().astype(bool)[:, None] & mat & vs[i].to_array().astype(bool)[None, :]))
        for i in range(n)
    ]
    return OumvWorkload(n, mode, predicted, script, expected, eta_inf)


# ----------------------------------------------------------------- graphs
def random_arcs(n: int, density: float, rng: np.random.Generator, *, directed: bool = True) -> List[Edge]:
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask, 1)
    return [(int(u), int(v)) for u, v in zip(*np.nonzero(mask))]


def random_dag_arcs(n: int, density: float, rng: np.random.Generator) -> List[Edge]:
    return [(u, v) for u, v in random_arcs(n, density, rng) if u < v]


def random_vertex_update(n: int, density: float, rng: np.random.Generator, vertex: Optional[int] = None) -> VertexUpdate:
    x = int(rng.integers(n)) if vertex is None else vertex
    ins = {int(u) for u in np.flatnonzero(rng.random(n) < density)} - {x}
    outs = {int(u) for u in np.flatnonzero(rng.random(n) < density)} - {x}
    return VertexUpdate(x, frozenset(ins), frozenset(outs))


@dataclass
class GraphWorkload:
    n: int
    arcs: List[Edge]
    predicted: List[VertexUpdate]
    order: PerturbedSequence
    steps: int
    extra: List[VertexUpdate] = field(default_factory=list)

    def realized(self) -> List[Tuple[VertexUpdate, bool]]:
        """(update, predicted?) for each performed step."""
        out = []
        extra = iter(self.extra)
        for j in range(self.steps):
            if self.order.unpredicted[j]:
                out.append((next(extra), False))
            else:
                out.append((self.predicted[self.order.perm[j]], True))
        return out


def gen_graph_workload(
    n: int,
    steps: int,
    model: ErrorModel,
    *,
    seed: int = 0,
    density: float = 0.3,
    directed: bool = True,
    lookahead: Optional[int] = None,
) -> GraphWorkload:
    """Initial graph, predicted vertex updates (``steps`` plus a lookahead tail) and a realized order."""
    rng = np.random.default_rng(seed)
    tail = n if lookahead is None else lookahead
    arcs = random_arcs(n, density, rng, directed=directed)
    predicted = [random_vertex_update(n, density, rng) for _ in range(steps + tail)]
    order = gen_perturbed_sequence(steps + tail, model)
    # an item shuffled in from the tail must still be performed at most once
    perm = order.perm[:steps]
    extra = [random_vertex_update(n, density, rng) for _ in range(steps)]
    return GraphWorkload(n, arcs, predicted, PerturbedSequence(perm, order.unpredicted[:steps]), steps, extra)


# ----------------------------------------------------------------- inverse
@dataclass
class InverseWorkload:
    matrix: np.ndarray
    predicted: List[Tuple[np.ndarray, np.ndarray]]
    order: PerturbedSequence
    steps: int
    extra: List[Tuple[np.ndarray, np.ndarray]]


def gen_inverse_workload(
    n: int,
    steps: int,
    model: ErrorModel,
    *,
    seed: int = 0,
    p: int = 2**31 - 1,
    singular_rate: float = 0.25,
) -> InverseWorkload:
    """Random invertible start and rank-1 updates, some of which copy one row onto another."""
    rng = np.random.default_rng(seed)
    m = rng.integers(0, p, size=(n, n), dtype=np.int64)
    shadow = m.copy()
    updates: List[Tuple[np.ndarray, np.ndarray]] = []

    def draw() -> Tuple[np.ndarray, np.ndarray]:
        i = int(rng.integers(n))
        u = np.zeros(n, dtype=np.int64)
        u[i] = 1
        if n > 1 and rng.random() < singular_rate:
            j = int(rng.integers(n - 1))
            j += j >= i
            v = (shadow[j] - shadow[i]) % p
        else:
            v = rng.integers(0, p, size=n, dtype=np.int64)
        shadow[i] = (shadow[i] + v) % p
        return u, v

    total = steps + n
    updates = [draw() for _ in range(total)]
    order = gen_perturbed_sequence(total, model)
    extra = [draw() for _ in range(steps)]
    return InverseWorkload(m, updates, PerturbedSequence(order.perm[:steps], order.unpredicted[:steps]), steps, extra)


# -------------------------------------------------------------------- APSP
@dataclass
class ApspOp:
    kind: str  # "I", "D" or "Q"
    vertex: int = 0
    key: int = 0
    in_edges: Dict[int, float] = field(default_factory=dict)
    out_edges: Dict[int, float] = field(default_factory=dict)
    other: int = 0


def gen_apsp_workload(
    n: int,
    model: ErrorModel,
    *,
    seed: int = 0,
    density: float = 0.35,
    max_weight: int = 9,
    queries: int = 2,
) -> List[ApspOp]:
    """Insert n vertices with predicted deletion keys, then delete them in a perturbed order.

    Unpredicted-rate models mark deletions that happen at a uniformly random
    time instead of near their key.
    """
    rng = np.random.default_rng(seed)
    predicted_order = [int(x) for x in rng.permutation(n)]
    key = {v: rank for rank, v in enumerate(predicted_order)}
    ops: List[ApspOp] = []
    live: List[int] = []

    def add_queries() -> None:
        if not live:
            return
        for _ in range(queries):
            a, b = (int(x) for x in rng.choice(live, size=2))
            ops.append(ApspOp("Q", a, other=b))

    for v in range(n):
        ins = {u: float(rng.integers(1, max_weight + 1)) for u in live if rng.random() < density}
        outs = {u: float(rng.integers(1, max_weight + 1)) for u in live if rng.random() < density}
        ops.append(ApspOp("I", v, key[v], ins, outs))
        live.append(v)
        add_queries()
    perturbed = gen_perturbed_sequence(n, model)
    deletions = perturbed.apply(predicted_order)
    if model.kind == "unpredicted_rate":
        late = [v for v, flag in zip(deletions, perturbed.unpredicted) if flag]
        deletions = [v for v in deletions if v not in late]
        for v in late:
            deletions.insert(int(rng.integers(len(deletions) + 1)), v)
    for v in deletions:
        ops.append(ApspOp("D", v))
        live.remove(v)
        add_queries()
    return ops


PLACEMENTS = ("random", "peak")


def partial_workload(
    n: int,
    m: int,
    model: ErrorModel,
    *,
    seed: int = 0,
    mode: Mode = INCREMENTAL,
    query_every: int = 1,
    placement: str = "random",
) -> Tuple[List[Edge], List[Tuple[str, int, int]]]:
    """Random predicted edge sequence and a realized U/Q script.

    ``placement="random"`` realizes the edges in the order drawn from
    ``model`` and asks a random pair after every ``query_every`` updates.
    ``placement="peak"`` needs a ``linf_window(w)`` model: each full window of
    w + 1 predicted edges is realized in reverse and queried once, at the
    moment w of its edges are out of order in ``mode``.  The query joins
    endpoints of those edges, so the work it sees tracks w alone.
    """
    if placement not in PLACEMENTS:
        raise ContractViolation(f"unknown query placement {placement!r}; choose from {', '.join(PLACEMENTS)}")
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = rng.choice(len(pairs), size=min(m, len(pairs)), replace=False)
    predicted = [pairs[int(i)] for i in chosen]
    if placement == "peak":
        if model.kind != "linf_window":
            raise ContractViolation(f"peak placement needs a linf_window model, got {model}")
        return predicted, _peak_script(predicted, int(model.param), mode)
    perturbed = gen_perturbed_sequence(len(predicted), model)
    script: List[Tuple[str, int, int]] = []
    for j, edge in enumerate(perturbed.apply(predicted), 1):
        script.append(("U", edge[0], edge[1]))
        if j % query_every == 0:
            a, b = (int(x) for x in rng.integers(0, n, size=2))
            script.append(("Q", a, b))
    return predicted, script


def _query_between(tail: Edge, head: Edge) -> Tuple[str, int, int]:
    u, v = tail[0], head[1]
    if u == v:
        v = tail[1]
    return ("Q", u, v)


def _peak_script(predicted: Sequence[Edge], width: int, mode: Mode) -> List[Tuple[str, int, int]]:
    script: List[Tuple[str, int, int]] = []
    for start in range(0, len(predicted), width + 1):
        block = list(predicted[start : start + width + 1])
        if width == 0:
            (edge,) = block
            script += [("U", *edge), _query_between(edge, edge)]
            continue
        if len(block) <= width:
            # short tail, nothing to displace
            script += [("U", *edge) for edge in block]
            continue
        if mode == INCREMENTAL:
            # block[1:] arrive first and wait for block[0]
            script += [("U", *edge) for edge in reversed(block[1:])]
            script.append(_query_between(block[-1], block[1]))
            script.append(("U", *block[0]))
        else:
            # deleting block[-1] early strands block[:-1] ahead of the boundary
            script.append(("U", *block[-1]))
            script.append(_query_between(block[0], block[-2]))
            script += [("U", *edge) for edge in reversed(block[:-1])]
    return script


def reversed_workload(n: int, m: int, *, seed: int = 0) -> Tuple[List[Edge], List[Tuple[str, int, int]]]:
    """Adversarial predictions: the realized order is the predicted one reversed."""
    predicted, script = partial_workload(n, m, ErrorModel(), seed=seed)
    updates = [op for op in script if op[0] == "U"]
    queries = [op for op in script if op[0] == "Q"]
    out: List[Tuple[str, int, int]] = []
    for upd, qry in zip(reversed(updates), queries):
        out += [upd, qry]
    return predicted, out


def graph_after(n: int, arcs: Sequence[Edge], updates: Sequence[VertexUpdate], *, directed: bool = True) -> np.ndarray:
    adj = adjacency(n, arcs, directed=directed)
    for upd in updates:
        apply_vertex_update(adj, upd, directed=directed)
    return adj
