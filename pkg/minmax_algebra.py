"""(min,max)-products and hop-bounded all-pairs bottleneck paths.

Weights are ``int64`` with two reserved sentinels standing for -inf and
+inf.  Only comparisons are ever applied to entries, so the sentinels need
no special arithmetic.

The product kernel is pluggable: callers pass any function with the
signature of :func:`cubic_kernel`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from counters import WorkCounter, charge
from errors import ContractViolation

NEG_INF = int(np.iinfo(np.int64).min)
POS_INF = int(np.iinfo(np.int64).max)

Kernel = Callable[[np.ndarray, np.ndarray, "WorkCounter | None"], np.ndarray]


def _to_weight(value: float | int) -> int:
    if value == math.inf or value == POS_INF:
        return POS_INF
    if value == -math.inf or value == NEG_INF:
        return NEG_INF
    return int(value)


def weight_repr(value: int) -> float | int:
    """Map a stored weight back to ``±math.inf`` or a Python int."""
    if value == POS_INF:
        return math.inf
    if value == NEG_INF:
        return -math.inf
    return int(value)


@dataclass(frozen=True, eq=False)
class BottleneckMatrix:
    """Square matrix over the integers extended with -inf and +inf."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.int64, copy=True)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ContractViolation(f"bottleneck matrix must be square, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float | int]]) -> "BottleneckMatrix":
        n = len(rows)
        arr = np.empty((n, n), dtype=np.int64)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ContractViolation(f"row {i} has {len(row)} entries, expected {n}")
            for j, value in enumerate(row):
                arr[i, j] = _to_weight(value)
        return cls(arr)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    def __getitem__(self, key: tuple[int, int]) -> int:
        return int(self.data[key])

    def tolist(self) -> list[list[float | int]]:
        return [[weight_repr(int(x)) for x in row] for row in self.data]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BottleneckMatrix):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash(self.data.tobytes())


def identity_matrix(n: int) -> BottleneckMatrix:
    """The (min,max) unit: -inf on the diagonal, +inf elsewhere."""
    arr = np.full((n, n), POS_INF, dtype=np.int64)
    np.fill_diagonal(arr, NEG_INF)
    return BottleneckMatrix(arr)


def weight_matrix(n: int, edges: Iterable[tuple[int, int, int]]) -> BottleneckMatrix:
    """Build W for weighted arcs ``(u, v, w)``; parallel arcs keep the smaller weight."""
    arr = np.full((n, n), POS_INF, dtype=np.int64)
    for u, v, w in edges:
        if w < arr[u, v]:
            arr[u, v] = w
    np.fill_diagonal(arr, NEG_INF)
    return BottleneckMatrix(arr)


def cubic_kernel(a: np.ndarray, b: np.ndarray, counter: WorkCounter | None = None) -> np.ndarray:
    """Row-at-a-time cubic product.

    For each row the candidate columns of ``a`` are scanned in order and the
    scan stops once every entry of the running minimum is -inf.
    """
    n = a.shape[0]
    out = np.full((n, b.shape[1]), POS_INF, dtype=np.int64)
    comparisons = 0
    for i in range(n):
        acc = out[i]
        for k in np.flatnonzero(a[i] != POS_INF):
            np.minimum(acc, np.maximum(a[i, k], b[k]), out=acc)
            comparisons += b.shape[1]
            if acc.max() == NEG_INF:
                break
    charge(counter, "minmax_cmp", comparisons)
    return out


def minmax_product(
    a: BottleneckMatrix,
    b: BottleneckMatrix,
    *,
    kernel: Kernel = cubic_kernel,
    counter: WorkCounter | None = None,
) -> BottleneckMatrix:
    """(a ⊛ b)[i, j] = min_k max(a[i, k], b[k, j])."""
    if a.n != b.n:
        raise ContractViolation(f"dimension mismatch {a.n} vs {b.n}")
    return BottleneckMatrix(kernel(a.data, b.data, counter))


def _check_hop_input(w: BottleneckMatrix) -> None:
    if w.n and not np.all(np.diagonal(w.data) == NEG_INF):
        raise ContractViolation("hop-bounded products need a -inf diagonal")


class _SquareCache:
    """Lazily computed ⊛-powers W^(2^j), shared across several hop bounds."""

    def __init__(self, w: BottleneckMatrix, kernel: Kernel, counter: WorkCounter | None) -> None:
        self.kernel = kernel
        self.counter = counter
        self.squares: list[np.ndarray] = [w.data]

    def square(self, j: int) -> np.ndarray:
        while len(self.squares) <= j:
            last = self.squares[-1]
            self.squares.append(self.kernel(last, last, self.counter))
        return self.squares[j]

    def power(self, d: int) -> np.ndarray:
        result: np.ndarray | None = None
        bit = 0
        while d:
            if d & 1:
                sq = self.square(bit)
                result = sq if result is None else self.kernel(result, sq, self.counter)
            d >>= 1
            bit += 1
        assert result is not None
        return result


def hop_bounded_apbp(
    w: BottleneckMatrix,
    d: int,
    *,
    kernel: Kernel = cubic_kernel,
    counter: WorkCounter | None = None,
) -> BottleneckMatrix:
    """Bottleneck values over paths with at most ``d`` edges.

    Because the diagonal is -inf, W^(⊛d) already includes every shorter path,
    so binary exponentiation over the squares gives the answer.
    """
    if d < 1:
        raise ContractViolation(f"hop bound must be >= 1, got {d}")
    _check_hop_input(w)
    return BottleneckMatrix(_SquareCache(w, kernel, counter).power(d))


def ladder_bounds(eps: float, n: int) -> list[int]:
    """Deduplicated hop bounds ceil((1+eps)^k) up to the first one >= n."""
    if eps <= 0:
        raise ContractViolation(f"eps must be positive, got {eps}")
    target = max(1, n)
    if math.isinf(eps):
        return [target]
    bounds: list[int] = []
    k = 0
    while True:
        d = max(1, math.ceil((1.0 + eps) ** k))
        if not bounds or d > bounds[-1]:
            bounds.append(d)
        if d >= target:
            break
        k += 1
    return bounds


def build_d_ladder(
    w: BottleneckMatrix,
    eps: float,
    n: int,
    *,
    kernel: Kernel = cubic_kernel,
    counter: WorkCounter | None = None,
) -> list[tuple[int, BottleneckMatrix]]:
    """Pair each ladder bound with its hop-bounded APBP matrix.

    Squarings are computed once and reused for every bound.  ``eps = inf``
    yields the single bound ``n``.
    """
    bounds = ladder_bounds(eps, n)
    _check_hop_input(w)
    cache = _SquareCache(w, kernel, counter)
    ladder = [(d, BottleneckMatrix(cache.power(d))) for d in bounds]
    logging.debug("built ladder with %d entries for n=%d eps=%s", len(ladder), n, eps)
    return ladder
