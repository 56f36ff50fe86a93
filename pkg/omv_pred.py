"""Online Boolean matrix-vector multiplication with predicted queries.

The matrix is multiplied by every predicted vector once, up front, over the
integers.  A query then only touches the columns where the real vector
differs from its prediction, adding or subtracting that column of M.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from counters import WorkCounter
from errors import ContractViolation


class BoolVector:
    """Fixed-length bit vector packed into a Python integer."""

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits: int = 0) -> None:
        if n < 0:
            raise ContractViolation("vector length must be non-negative")
        if bits >> n:
            raise ContractViolation(f"bit pattern wider than {n}")
        self.n = n
        self.bits = bits

    @classmethod
    def from_bits(cls, values: Iterable[int | bool]) -> "BoolVector":
        bits = 0
        n = 0
        for idx, value in enumerate(values):
            if value:
                bits |= 1 << idx
            n = idx + 1
        return cls(n, bits)

    @classmethod
    def unit(cls, n: int, j: int) -> "BoolVector":
        return cls(n, 1 << j)

    def __getitem__(self, j: int) -> bool:
        if not 0 <= j < self.n:
            raise IndexError(j)
        return bool(self.bits >> j & 1)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BoolVector):
            return NotImplemented
        return self.n == other.n and self.bits == other.bits

    def __hash__(self) -> int:
        return hash((self.n, self.bits))

    def __repr__(self) -> str:
        return f"BoolVector({self.to_list()})"

    def to_list(self) -> list[int]:
        return [self.bits >> j & 1 for j in range(self.n)]

    def to_array(self) -> np.ndarray:
        return np.array(self.to_list(), dtype=np.int64)

    def positions(self) -> list[int]:
        """Indices of set bits in increasing order."""
        out = []
        bits = self.bits
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out

    def hamming(self, other: "BoolVector") -> int:
        if self.n != other.n:
            raise ContractViolation(f"length mismatch {self.n} vs {other.n}")
        return bin(self.bits ^ other.bits).count("1")


def _as_bool_matrix(m: Sequence[Sequence[int | bool]] | np.ndarray) -> np.ndarray:
    arr = np.asarray(m, dtype=bool)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ContractViolation(f"expected a square Boolean matrix, got shape {arr.shape}")
    return arr


@dataclass
class OmvState:
    m: np.ndarray
    predicted: list[BoolVector]
    precomputed: np.ndarray
    cursor: int = 0
    work_counter: WorkCounter = field(default_factory=WorkCounter)

    @property
    def n(self) -> int:
        return int(self.m.shape[0])

    @property
    def work(self) -> int:
        return self.work_counter.get("column_op")


def omv_preprocess(
    m: Sequence[Sequence[int | bool]] | np.ndarray,
    predicted: Sequence[BoolVector],
    *,
    counter: WorkCounter | None = None,
) -> OmvState:
    """Precompute M·[v̂_1 .. v̂_n] over the integers."""
    mat = _as_bool_matrix(m)
    n = mat.shape[0]
    if len(predicted) != n:
        raise ContractViolation(f"need {n} predicted vectors, got {len(predicted)}")
    for idx, vec in enumerate(predicted):
        if vec.n != n:
            raise ContractViolation(f"predicted vector {idx} has length {vec.n}, expected {n}")
    vhat = np.stack([v.to_array() for v in predicted], axis=1) if n else np.zeros((0, 0), np.int64)
    precomputed = mat.astype(np.int64) @ vhat
    return OmvState(
        m=mat,
        predicted=list(predicted),
        precomputed=precomputed,
        work_counter=counter if counter is not None else WorkCounter(),
    )


def omv_query(state: OmvState, v: BoolVector) -> BoolVector:
    """Answer M·v, paying one column scan per position where v differs from v̂."""
    n = state.n
    if state.cursor >= n:
        raise ContractViolation(f"all {n} queries have been answered")
    if v.n != n:
        raise ContractViolation(f"query has length {v.n}, expected {n}")
    vhat = state.predicted[state.cursor]
    counts = state.precomputed[:, state.cursor].copy()
    diff = BoolVector(n, v.bits ^ vhat.bits)
    for j in diff.positions():
        column = state.m[:, j].astype(np.int64)
        if v.bits >> j & 1:
            counts += column
        else:
            counts -= column
        state.work_counter.charge("column_op", n)
    state.cursor += 1
    return BoolVector.from_bits(counts > 0) if n else BoolVector(0)


def run_session(
    m: Sequence[Sequence[int | bool]] | np.ndarray,
    predicted: Sequence[BoolVector],
    actual: Sequence[BoolVector],
) -> tuple[list[BoolVector], int]:
    """Replay a full session; returns the answers and the total column work."""
    state = omv_preprocess(m, predicted)
    answers = [omv_query(state, v) for v in actual]
    return answers, state.work
