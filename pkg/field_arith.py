"""Exact dense linear algebra over a prime field Z_p.

Two layers live here.  The ndarray kernels (``mulmod``, ``inverse_mod``,
``det_mod``, ``rank_mod``) work on ``int64`` arrays holding residues and are
what the dynamic structures call in their inner loops.  ``FieldMatrix`` wraps
an immutable residue array together with its prime and is the public type
used at module boundaries and in tests.

Residues are kept in ``[0, p)``.  With the default prime ``2**31 - 1`` the
product of two residues fits in 62 bits, so elementwise products never
overflow ``int64``.  Matrix products split the right factor into 16-bit
halves so that the inner sums stay below ``2**63`` as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from counters import WorkCounter, charge
from errors import ContractViolation, SingularMatrixError

DEFAULT_PRIME = 2**31 - 1

# inner dimension bound that keeps a 47-bit partial product sum below 2**63
_MAX_INNER = 1 << 15
_SPLIT_BITS = 16
_SPLIT_MASK = (1 << _SPLIT_BITS) - 1
STRASSEN_THRESHOLD = 128


def reduce_mod(a: np.ndarray, p: int = DEFAULT_PRIME) -> np.ndarray:
    """Return ``a`` reduced into ``[0, p)`` as an ``int64`` array."""
    return np.asarray(np.mod(a, p), dtype=np.int64)


def inv_scalar(a: int, p: int = DEFAULT_PRIME) -> int:
    """Multiplicative inverse of ``a`` modulo the prime ``p``."""
    a = int(a) % p
    if a == 0:
        raise SingularMatrixError("zero has no inverse")
    return pow(a, p - 2, p)


def _mul_block(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    b_lo = b & _SPLIT_MASK
    b_hi = b >> _SPLIT_BITS
    lo = (a @ b_lo) % p
    hi = (a @ b_hi) % p
    return (lo + (hi << _SPLIT_BITS) % p) % p


def _mul_chunked(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    inner = a.shape[1]
    if inner <= _MAX_INNER:
        return _mul_block(a, b, p)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for start in range(0, inner, _MAX_INNER):
        stop = min(inner, start + _MAX_INNER)
        out = (out + _mul_block(a[:, start:stop], b[start:stop, :], p)) % p
    return out


def _strassen(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    n = a.shape[0]
    if n <= STRASSEN_THRESHOLD or n % 2:
        return _mul_chunked(a, b, p)
    h = n // 2
    a11, a12, a21, a22 = a[:h, :h], a[:h, h:], a[h:, :h], a[h:, h:]
    b11, b12, b21, b22 = b[:h, :h], b[:h, h:], b[h:, :h], b[h:, h:]
    m1 = _strassen((a11 + a22) % p, (b11 + b22) % p, p)
    m2 = _strassen((a21 + a22) % p, b11, p)
    m3 = _strassen(a11, (b12 - b22) % p, p)
    m4 = _strassen(a22, (b21 - b11) % p, p)
    m5 = _strassen((a11 + a12) % p, b22, p)
    m6 = _strassen((a21 - a11) % p, (b11 + b12) % p, p)
    m7 = _strassen((a12 - a22) % p, (b21 + b22) % p, p)
    top = np.hstack([(m1 + m4 - m5 + m7) % p, (m3 + m5) % p])
    bottom = np.hstack([(m2 + m4) % p, (m1 - m2 + m3 + m6) % p])
    return np.vstack([top, bottom])


def mulmod(
    a: np.ndarray,
    b: np.ndarray,
    p: int = DEFAULT_PRIME,
    *,
    counter: WorkCounter | None = None,
    strassen: bool = False,
    workers: int = 1,
) -> np.ndarray:
    """Exact product of two residue arrays modulo ``p``.

    ``workers > 1`` splits the rows of ``a`` across a thread pool; the result
    is identical to the single-threaded product.
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(f"cannot multiply {a.shape} by {b.shape}")
    charge(counter, "field_mul", a.shape[0] * a.shape[1] * b.shape[1])
    if a.size == 0 or b.size == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    square = a.shape[0] == a.shape[1] == b.shape[1]
    if strassen and square:
        return _strassen(a, b, p)
    if workers > 1 and a.shape[0] >= 2 * workers:
        parts = np.array_split(np.arange(a.shape[0]), workers)
        with ThreadPoolExecutor(max_workers=workers) as executor:
            blocks = list(executor.map(lambda rows: _mul_chunked(a[rows], b, p), parts))
        return np.vstack(blocks)
    return _mul_chunked(a, b, p)


def _eliminate(
    a: np.ndarray, p: int, counter: WorkCounter | None, *, full: bool
) -> tuple[np.ndarray, list[int], int, int]:
    """Row-reduce a copy of ``a``.

    Returns the reduced array, pivot columns, the number of row swaps and the
    product of the pivots (before normalisation).  With ``full`` the result is
    in reduced row echelon form; otherwise only the rows below each pivot are
    cleared.
    """
    work = reduce_mod(a.copy(), p)
    rows, cols = work.shape
    pivots: list[int] = []
    swaps = 0
    pivot_product = 1
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nonzero = np.flatnonzero(work[r:, c])
        if nonzero.size == 0:
            continue
        piv = r + int(nonzero[0])
        if piv != r:
            work[[r, piv]] = work[[piv, r]]
            swaps += 1
        pivot = int(work[r, c])
        pivot_product = (pivot_product * pivot) % p
        work[r] = (work[r] * inv_scalar(pivot, p)) % p
        targets = work[:, c].copy()
        targets[r] = 0
        if not full:
            targets[:r] = 0
        hit = np.flatnonzero(targets)
        if hit.size:
            update = (targets[hit, None] * work[r][None, :]) % p
            work[hit] = (work[hit] - update) % p
            charge(counter, "field_mul", hit.size * cols)
        pivots.append(c)
        r += 1
    return work, pivots, swaps, pivot_product


def inverse_mod(
    a: np.ndarray, p: int = DEFAULT_PRIME, *, counter: WorkCounter | None = None
) -> np.ndarray:
    """Gauss-Jordan inverse over GF(p); raises SingularMatrixError."""
    a = np.atleast_2d(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ContractViolation(f"inverse needs a square matrix, got {a.shape}")
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    aug = np.concatenate([reduce_mod(a, p), np.eye(n, dtype=np.int64)], axis=1)
    reduced, pivots, _, _ = _eliminate(aug, p, counter, full=True)
    if len(pivots) < n or pivots[n - 1] != n - 1:
        raise SingularMatrixError(f"{n}x{n} matrix is singular mod {p}")
    return reduced[:, n:].copy()


def det_mod(
    a: np.ndarray, p: int = DEFAULT_PRIME, *, counter: WorkCounter | None = None
) -> int:
    """Determinant over GF(p) by forward elimination with swap tracking."""
    a = np.atleast_2d(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ContractViolation(f"determinant needs a square matrix, got {a.shape}")
    if n == 0:
        return 1
    _, pivots, swaps, product = _eliminate(a, p, counter, full=False)
    if len(pivots) < n:
        return 0
    return (-product) % p if swaps % 2 else product


def rank_mod(
    a: np.ndarray, p: int = DEFAULT_PRIME, *, counter: WorkCounter | None = None
) -> int:
    a = np.atleast_2d(a)
    if a.size == 0:
        return 0
    _, pivots, _, _ = _eliminate(a, p, counter, full=False)
    return len(pivots)


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Immutable dense matrix over Z_p."""

    data: np.ndarray
    p: int = DEFAULT_PRIME

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.int64, copy=True)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ContractViolation(f"FieldMatrix needs 2 dimensions, got {arr.ndim}")
        arr = reduce_mod(arr, self.p)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def entries(self) -> list[int]:
        """Row-major list of residues."""
        return [int(x) for x in self.data.ravel()]

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.data]

    def copy_data(self) -> np.ndarray:
        """Writable copy of the residues."""
        return self.data.copy()

    def __getitem__(self, key):
        value = self.data[key]
        return int(value) if np.ndim(value) == 0 else value

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.p, self.data.shape, self.data.tobytes()))

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return mat_mul(self, other)


def _same_field(*mats: FieldMatrix) -> int:
    primes = {m.p for m in mats}
    if len(primes) != 1:
        raise ContractViolation(f"mixed field primes {sorted(primes)}")
    return primes.pop()


def from_rows(rows: Sequence[Sequence[int]], p: int = DEFAULT_PRIME) -> FieldMatrix:
    if len(rows) == 0:
        return FieldMatrix(np.zeros((0, 0), dtype=np.int64), p)
    return FieldMatrix(np.array(rows, dtype=np.int64), p)


def identity(n: int, p: int = DEFAULT_PRIME) -> FieldMatrix:
    return FieldMatrix(np.eye(n, dtype=np.int64), p)


def zeros(rows: int, cols: int, p: int = DEFAULT_PRIME) -> FieldMatrix:
    return FieldMatrix(np.zeros((rows, cols), dtype=np.int64), p)


def transpose(a: FieldMatrix) -> FieldMatrix:
    return FieldMatrix(a.data.T, a.p)


def add(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    p = _same_field(a, b)
    if a.data.shape != b.data.shape:
        raise ContractViolation(f"cannot add {a.data.shape} and {b.data.shape}")
    return FieldMatrix((a.data + b.data) % p, p)


def sub(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    p = _same_field(a, b)
    if a.data.shape != b.data.shape:
        raise ContractViolation(f"cannot subtract {a.data.shape} and {b.data.shape}")
    return FieldMatrix((a.data - b.data) % p, p)


def scale(a: FieldMatrix, c: int) -> FieldMatrix:
    return FieldMatrix((a.data * (int(c) % a.p)) % a.p, a.p)


def outer(u: Iterable[int], v: Iterable[int], p: int = DEFAULT_PRIME) -> FieldMatrix:
    uu = reduce_mod(np.fromiter(u, dtype=np.int64), p)
    vv = reduce_mod(np.fromiter(v, dtype=np.int64), p)
    return FieldMatrix((uu[:, None] * vv[None, :]) % p, p)


def mat_mul(
    a: FieldMatrix,
    b: FieldMatrix,
    *,
    counter: WorkCounter | None = None,
    strassen: bool = False,
    workers: int = 1,
) -> FieldMatrix:
    """Exact product over Z_p; raises ContractViolation on shape mismatch."""
    p = _same_field(a, b)
    if a.cols != b.rows:
        raise ContractViolation(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    return FieldMatrix(
        mulmod(a.data, b.data, p, counter=counter, strassen=strassen, workers=workers), p
    )


def mat_inverse(a: FieldMatrix, *, counter: WorkCounter | None = None) -> FieldMatrix:
    """Inverse of ``a``; raises SingularMatrixError when det(a) = 0."""
    return FieldMatrix(inverse_mod(a.data, a.p, counter=counter), a.p)


def determinant(a: FieldMatrix, *, counter: WorkCounter | None = None) -> int:
    return det_mod(a.data, a.p, counter=counter)


def rank(a: FieldMatrix, *, counter: WorkCounter | None = None) -> int:
    return rank_mod(a.data, a.p, counter=counter)


def random_residues(
    shape: tuple[int, ...], rng: np.random.Generator, p: int = DEFAULT_PRIME, *, nonzero: bool = False
) -> np.ndarray:
    """Uniform residues from ``rng``; ``nonzero`` samples from ``[1, p)``."""
    low = 1 if nonzero else 0
    return rng.integers(low, p, size=shape, dtype=np.int64)


def random_matrix(rows: int, cols: int, seed: int, p: int = DEFAULT_PRIME) -> FieldMatrix:
    """Matrix with i.i.d. uniform entries from a seeded generator."""
    rng = np.random.default_rng(seed)
    return FieldMatrix(random_residues((rows, cols), rng, p).reshape(rows, cols), p)
