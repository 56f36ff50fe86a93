"""Dynamic matrix inverse driven by a queue of predicted rank-1 updates.

Layers, bottom to top:

``woodbury_factors``
    Low-rank inverse update in the form (M + U V^T)^-1 = M^-1 (I - L R).
``InverseHierarchy``
    Levels of such factors refreshed every 2^i calls, with per-level caches
    of inverse rows for the column indices predicted to be touched next.
``build_formula_embedding``
    Block matrix B whose inverse contains -V'^T (M + U D V^T)^-1, so that a
    predicted rank-1 update becomes a single entry flip in the D block.
``RankGadget``
    Bordered 3n x 3n matrix that stays invertible while rank(M) >= n - k,
    letting rank and determinant be tracked through singular stretches.
``PredictedInverse``
    The queue-facing structure: performs the update at queue position eta,
    returns rank, determinant and the pre-update row v^T M^-1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np

from counters import WorkCounter, charge
from errors import ContractViolation, RebuildRequired, SingularMatrixError, SingularUpdate
from field_arith import (
    DEFAULT_PRIME,
    FieldMatrix,
    det_mod,
    inverse_mod,
    mulmod,
    random_residues,
    rank_mod,
    reduce_mod,
)

# |F_i| <= PREDICTION_SLACK * 2^(i+1)
PREDICTION_SLACK = 3


def _as_array(x, p: int) -> np.ndarray:
    data = x.data if isinstance(x, FieldMatrix) else x
    return reduce_mod(np.asarray(data, dtype=np.int64), p)


def _columns(x: np.ndarray, n: int) -> np.ndarray:
    return x.reshape(n, 1) if x.ndim == 1 else x


def _support(v: np.ndarray) -> Optional[Tuple[int, int]]:
    """(index, value) if ``v`` has exactly one nonzero entry."""
    nz = np.flatnonzero(v)
    if nz.size == 1:
        j = int(nz[0])
        return j, int(v[j])
    return None


def _dot(a: np.ndarray, b: np.ndarray, p: int, counter: WorkCounter | None) -> int:
    return int(mulmod(a[None, :], b[:, None], p, counter=counter)[0, 0])


def _nu2(t: int) -> int:
    return (t & -t).bit_length() - 1


class InverseRows(Protocol):
    """Source of rows of some inverse matrix M^-1."""

    def row(self, j: int) -> np.ndarray: ...

    def vec(self, v: np.ndarray) -> np.ndarray: ...


class DenseInverseRows:
    """InverseRows backed by an explicit inverse."""

    def __init__(self, minv: np.ndarray, p: int = DEFAULT_PRIME, counter: WorkCounter | None = None) -> None:
        self.minv = _as_array(minv, p)
        self.p = p
        self.counter = counter

    def row(self, j: int) -> np.ndarray:
        charge(self.counter, "row_read", self.minv.shape[1])
        return self.minv[j].copy()

    def vec(self, v: np.ndarray) -> np.ndarray:
        return mulmod(v[None, :], self.minv, self.p, counter=self.counter)[0]


def woodbury_factors(
    rows: InverseRows,
    u_cols,
    v_cols,
    p: int = DEFAULT_PRIME,
    *,
    counter: WorkCounter | None = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (L, R) with (M + U V^T)^-1 = M^-1 (I - L R).

    R = V^T M^-1 is assembled from single rows when a column of V has one
    nonzero entry and from a vector-matrix product otherwise;
    L = U (I_k + R U)^-1.  A singular inner matrix means M + U V^T itself is
    singular and raises RebuildRequired.
    """
    u = _as_array(u_cols, p)
    v = _as_array(v_cols, p)
    if u.ndim != 2 or u.shape != v.shape:
        raise ContractViolation(f"U and V must share a 2-D shape, got {u.shape} and {v.shape}")
    n, k = u.shape
    if k == 0:
        return np.zeros((n, 0), dtype=np.int64), np.zeros((0, n), dtype=np.int64)
    r = np.empty((k, n), dtype=np.int64)
    for c in range(k):
        col = v[:, c]
        hit = _support(col)
        if hit is not None:
            j, alpha = hit
            r[c] = (rows.row(j) * alpha) % p
        elif not col.any():
            r[c] = 0
        else:
            r[c] = rows.vec(col)
    inner = (np.eye(k, dtype=np.int64) + mulmod(r, u, p, counter=counter)) % p
    try:
        inner_inv = inverse_mod(inner, p, counter=counter)
    except SingularMatrixError as exc:
        raise RebuildRequired("low-rank update makes the matrix singular") from exc
    return mulmod(u, inner_inv, p, counter=counter), r


class _LevelRows:
    def __init__(self, hierarchy: "InverseHierarchy", level: int) -> None:
        self.hierarchy = hierarchy
        self.level = level

    def row(self, j: int) -> np.ndarray:
        return self.hierarchy.row_at(self.level, j)

    def vec(self, v: np.ndarray) -> np.ndarray:
        return self.hierarchy.vec_at(self.level, v)


Predictor = Callable[[int], Sequence[int]]


class InverseHierarchy:
    """Ranged-lookahead representation of a dynamic inverse.

    Level ``top`` stores an explicit inverse.  Every lower level i holds
    factors with (M^(i))^-1 = (M^(i+1))^-1 (I - L^(i) R^(i)), where M^(i) is
    the matrix as of the last call whose index is divisible by 2^i.  Rows of
    (M^(i))^-1 for the predicted index set F_i are cached when the level is
    refreshed, so a call touching a predicted column only walks down the
    levels below the first cache hit.

    ``spread_chunk > 0`` defers the cache precomputation: at most that many
    rows are filled per subsequent call.  Missing rows are always recomputed
    from the level above, so answers do not depend on the setting.
    """

    def __init__(
        self,
        matrix,
        p: int = DEFAULT_PRIME,
        *,
        counter: WorkCounter | None = None,
        predictor: Predictor | None = None,
        spread_chunk: int = 0,
    ) -> None:
        self.p = p
        self.counter = counter if counter is not None else WorkCounter()
        self._matrix = _as_array(matrix, p).copy()
        n = self._matrix.shape[0]
        if self._matrix.shape != (n, n):
            raise ContractViolation(f"hierarchy needs a square matrix, got {self._matrix.shape}")
        self.n = n
        self.top = math.ceil(math.log2(n)) if n > 1 else 0
        self.t = 0
        self.predictor = predictor
        self.spread_chunk = spread_chunk
        empty_l = np.zeros((n, 0), dtype=np.int64)
        empty_r = np.zeros((0, n), dtype=np.int64)
        self._L: List[np.ndarray] = [empty_l] * self.top
        self._R: List[np.ndarray] = [empty_r] * self.top
        self._F: List[frozenset[int]] = [frozenset({0}) if n else frozenset()] * self.top
        self._cache: List[Dict[int, np.ndarray]] = [dict() for _ in range(self.top)]
        self._version = [0] * self.top
        self._deferred: List[Tuple[int, int, int]] = []
        self._log: List[Tuple[np.ndarray, np.ndarray]] = []
        self._top_inverse = self._invert_current()
        self._predict(self.top - 1)
        self._fill_cache(self.top - 1)

    # ------------------------------------------------------------------ rows
    @property
    def matrix(self) -> np.ndarray:
        return self._matrix.copy()

    @property
    def prediction_sets(self) -> List[frozenset[int]]:
        return list(self._F)

    def bound(self, level: int) -> int:
        return PREDICTION_SLACK * 2 ** (level + 1)

    def _apply_factor(self, level: int, x: np.ndarray) -> np.ndarray:
        l_mat = self._L[level]
        if l_mat.shape[1] == 0:
            return x
        xl = mulmod(x[None, :], l_mat, self.p, counter=self.counter)
        correction = mulmod(xl, self._R[level], self.p, counter=self.counter)[0]
        return (x - correction) % self.p

    def row_at(self, level: int, j: int) -> np.ndarray:
        """Row j of (M^(level))^-1.

        Rows computed on the way down are kept in the level caches until the
        level is next refreshed.
        """
        i = level
        while i < self.top and j not in self._cache[i]:
            i += 1
        source = self._top_inverse[j] if i == self.top else self._cache[i][j]
        charge(self.counter, "row_read", self.n)
        x = source.copy()
        for lvl in range(i - 1, level - 1, -1):
            x = self._apply_factor(lvl, x)
            self._cache[lvl][j] = x
        return x.copy()

    def vec_at(self, level: int, v: np.ndarray) -> np.ndarray:
        """v^T (M^(level))^-1 through the explicit top inverse."""
        x = mulmod(v[None, :], self._top_inverse, self.p, counter=self.counter)[0]
        for lvl in range(self.top - 1, level - 1, -1):
            x = self._apply_factor(lvl, x)
        return x

    def peek(self, v) -> np.ndarray:
        """v^T M^-1 for the current M, without advancing the schedule."""
        vec = _as_array(v, self.p)
        hit = _support(vec)
        if hit is not None:
            j, alpha = hit
            return (self.row_at(0, j) * alpha) % self.p
        if not vec.any():
            return np.zeros(self.n, dtype=np.int64)
        return self.vec_at(0, vec)

    def explicit_inverse(self) -> np.ndarray:
        """Multiply out (M^(top))^-1 · prod (I - L^(j) R^(j)) for j = top-1 .. 0."""
        x = self._top_inverse.copy()
        for lvl in range(self.top - 1, -1, -1):
            if self._L[lvl].shape[1]:
                x = (x - mulmod(mulmod(x, self._L[lvl], self.p), self._R[lvl], self.p)) % self.p
        return x

    # ---------------------------------------------------------------- update
    def query_and_update(self, u, v, apply: bool = True) -> np.ndarray:
        """Return v^T M^-1 for the current M, then optionally set M += u v^T."""
        row = self.peek(v)
        self.commit(u, v, apply)
        return row

    def commit(self, u, v, apply: bool = True) -> None:
        """Advance the call counter, apply the update if asked, and refresh."""
        vec_v = _as_array(v, self.p)
        if apply:
            vec_u = _as_array(u, self.p)
            nz_u = np.flatnonzero(vec_u)
            nz_v = np.flatnonzero(vec_v)
            if nz_u.size and nz_v.size:
                block = (vec_u[nz_u, None] * vec_v[None, nz_v]) % self.p
                self._matrix[np.ix_(nz_u, nz_v)] = (self._matrix[np.ix_(nz_u, nz_v)] + block) % self.p
            charge(self.counter, "field_mul", nz_u.size * nz_v.size)
        else:
            vec_u = np.zeros(self.n, dtype=np.int64)
        self.t += 1
        self._log.append((vec_u, vec_v))
        level = min(_nu2(self.t), self.top)
        if level == self.top:
            self._refresh_top()
        else:
            self._collapse(level)
        self._drain_deferred()

    def _invert_current(self) -> np.ndarray:
        try:
            return inverse_mod(self._matrix, self.p, counter=self.counter)
        except SingularMatrixError as exc:
            raise RebuildRequired("current matrix is singular") from exc

    def _refresh_top(self) -> None:
        logging.debug("hierarchy top refresh at t=%d (n=%d)", self.t, self.n)
        self._top_inverse = self._invert_current()
        empty_l = np.zeros((self.n, 0), dtype=np.int64)
        empty_r = np.zeros((0, self.n), dtype=np.int64)
        for i in range(self.top):
            self._L[i] = empty_l
            self._R[i] = empty_r
            self._cache[i] = {}
            self._version[i] += 1
        self._log.clear()
        self._deferred.clear()
        self._predict(self.top - 1)
        self._fill_cache(self.top - 1)

    def _collapse(self, level: int) -> None:
        width = 2**level
        entries = self._log[-width:]
        u_cols = np.stack([e[0] for e in entries], axis=1)
        v_cols = np.stack([e[1] for e in entries], axis=1)
        l_mat, r_mat = woodbury_factors(
            _LevelRows(self, level + 1), u_cols, v_cols, self.p, counter=self.counter
        )
        self._L[level] = l_mat
        self._R[level] = r_mat
        empty_l = np.zeros((self.n, 0), dtype=np.int64)
        empty_r = np.zeros((0, self.n), dtype=np.int64)
        for i in range(level + 1):
            if i < level:
                self._L[i] = empty_l
                self._R[i] = empty_r
            self._cache[i] = {}
            self._version[i] += 1
        self._deferred = [d for d in self._deferred if d[0] > level]
        self._predict(level)
        self._fill_cache(level)

    # ----------------------------------------------------------- predictions
    def set_predictions(self, level: int, sets: Mapping[int, Iterable[int]] | Sequence[Iterable[int]]) -> None:
        """Replace F_0..F_level; each must nest in the next and respect the size bound."""
        if self.top == 0:
            return
        if not 0 <= level < self.top:
            raise ContractViolation(f"level {level} outside [0, {self.top - 1}]")
        if isinstance(sets, Mapping):
            new = {i: frozenset(int(j) for j in sets[i]) for i in range(level + 1)}
        else:
            seq = list(sets)
            if len(seq) != level + 1:
                raise ContractViolation(f"expected {level + 1} prediction sets, got {len(seq)}")
            new = {i: frozenset(int(j) for j in s) for i, s in enumerate(seq)}
        for i in range(level, -1, -1):
            upper = new.get(i + 1, self._F[i + 1] if i + 1 < self.top else None)
            f_i = new[i]
            if not f_i:
                raise ContractViolation(f"prediction set F_{i} is empty")
            if len(f_i) > self.bound(i):
                raise ContractViolation(f"|F_{i}| = {len(f_i)} exceeds {self.bound(i)}")
            if any(not 0 <= j < self.n for j in f_i):
                raise ContractViolation(f"F_{i} holds an index outside [0, {self.n})")
            if upper is not None and not f_i <= upper:
                raise ContractViolation(f"F_{i} is not contained in F_{i + 1}")
        for i in range(level + 1):
            self._F[i] = new[i]

    def _predict(self, level: int) -> None:
        """Ask the predictor for F_0..F_level, clipped to nest and fit."""
        if level < 0 or self.predictor is None:
            return
        new: Dict[int, frozenset[int]] = {}
        for i in range(level, -1, -1):
            upper = new[i + 1] if i + 1 in new else (self._F[i + 1] if i + 1 < self.top else None)
            chosen: List[int] = []
            seen: set[int] = set()
            for j in self.predictor(i):
                if j in seen or not 0 <= j < self.n:
                    continue
                if upper is not None and j not in upper:
                    continue
                seen.add(j)
                chosen.append(j)
                if len(chosen) == self.bound(i):
                    break
            if not chosen:
                chosen = [min(upper) if upper else 0]
            new[i] = frozenset(chosen)
        self.set_predictions(level, new)

    def _fill_cache(self, level: int) -> None:
        if level < 0:
            return
        version = self._version[level]
        rows = sorted(self._F[level])
        if self.spread_chunk > 0:
            self._deferred.extend((level, j, version) for j in rows)
            return
        cache = self._cache[level]
        for j in rows:
            cache[j] = self.row_at(level, j)

    def _drain_deferred(self) -> None:
        if self.spread_chunk <= 0 or not self._deferred:
            return
        budget = self.spread_chunk
        while budget and self._deferred:
            level, j, version = self._deferred.pop(0)
            if version != self._version[level] or j in self._cache[level]:
                continue
            self._cache[level][j] = self.row_at(level, j)
            budget -= 1


def hierarchy_update(h: InverseHierarchy, u, v, apply: bool = True) -> np.ndarray:
    return h.query_and_update(u, v, apply)


def set_predictions(h: InverseHierarchy, level: int, sets) -> None:
    h.set_predictions(level, sets)


# ---------------------------------------------------------------- embedding
@dataclass
class FormulaEmbedding:
    """Block matrix B with the inverse-formula block at a known position.

    Block rows/columns have sizes (k+1, n, k, k)::

        [[ I, V'^T,  0,  0 ],
         [ 0, M,     0,  U ],
         [ 0, V^T,  -I,  0 ],
         [ 0, 0,     D, -I ]]
    """

    matrix: np.ndarray
    n: int
    k: int
    p: int = DEFAULT_PRIME

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def off_m(self) -> int:
        return self.k + 1

    @property
    def off_v(self) -> int:
        return self.k + 1 + self.n

    @property
    def off_d(self) -> int:
        return self.k + 1 + self.n + self.k

    @property
    def spare_row(self) -> int:
        return self.k

    def d_entry(self, t: int) -> Tuple[int, int]:
        """(row, col) of diagonal slot t of D inside B."""
        if not 0 <= t < self.k:
            raise ContractViolation(f"slot {t} outside [0, {self.k})")
        return self.off_d + t, self.off_v + t

    def formula_block(self, inverse: np.ndarray) -> np.ndarray:
        """The (1,2) block of B^-1, i.e. -V'^T (M + U D V^T)^-1."""
        return inverse[: self.k + 1, self.off_m : self.off_m + self.n]

    def lift(self, x: np.ndarray) -> np.ndarray:
        """Place a vector over M's index space into B's index space."""
        out = np.zeros(self.size, dtype=np.int64)
        out[self.off_m : self.off_m + self.n] = x
        return out


def build_formula_embedding(
    m,
    u_all,
    v_all,
    v_query=None,
    *,
    d: Sequence[int] | None = None,
    p: int = DEFAULT_PRIME,
    check: bool = True,
) -> FormulaEmbedding:
    """Construct B for (M, U, V, V', D); V' gets one extra all-zero column."""
    mat = _as_array(m, p)
    n = mat.shape[0]
    u = _columns(_as_array(u_all, p), n)
    v = _columns(_as_array(v_all, p), n)
    k = u.shape[1]
    if v.shape != (n, k):
        raise ContractViolation(f"V must be {n}x{k}, got {v.shape}")
    vq = v if v_query is None else _columns(_as_array(v_query, p), n)
    if vq.shape != (n, k):
        raise ContractViolation(f"V' must be {n}x{k} before the spare column, got {vq.shape}")
    if check and det_mod(mat, p) == 0:
        raise ContractViolation("embedding refused: M is singular")
    a = k + 1
    size = a + n + 2 * k
    b = np.zeros((size, size), dtype=np.int64)
    b[:a, :a] = np.eye(a, dtype=np.int64)
    b[:k, a : a + n] = vq.T
    b[a : a + n, a : a + n] = mat
    b[a : a + n, a + n + k :] = u
    b[a + n : a + n + k, a : a + n] = v.T
    b[a + n : a + n + k, a + n : a + n + k] = (p - 1) * np.eye(k, dtype=np.int64)
    if d is not None:
        diag = reduce_mod(np.asarray(d, dtype=np.int64), p)
        if diag.shape != (k,):
            raise ContractViolation(f"D diagonal must have {k} entries")
        b[a + n + k :, a + n : a + n + k] = np.diag(diag)
    b[a + n + k :, a + n + k :] = (p - 1) * np.eye(k, dtype=np.int64)
    return FormulaEmbedding(matrix=b, n=n, k=k, p=p)


# ------------------------------------------------------------------- gadget
@dataclass
class RankGadget:
    """N = [[M, X, 0], [Y, 0, I], [0, I, I_k]] with random X, Y."""

    n: int
    x: np.ndarray
    y: np.ndarray
    k: int = 0
    p: int = DEFAULT_PRIME

    @classmethod
    def random(cls, n: int, k: int, rng: np.random.Generator, p: int = DEFAULT_PRIME) -> "RankGadget":
        return cls(n, random_residues((n, n), rng, p), random_residues((n, n), rng, p), k, p)

    def matrix(self, m: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros((3 * n, 3 * n), dtype=np.int64)
        eye = np.eye(n, dtype=np.int64)
        out[:n, :n] = m
        out[:n, n : 2 * n] = self.x
        out[n : 2 * n, :n] = self.y
        out[n : 2 * n, 2 * n :] = eye
        out[2 * n :, n : 2 * n] = eye
        for i in range(self.k):
            out[2 * n + i, 2 * n + i] = 1
        return out

    def slot(self, i: int) -> int:
        """Index inside N of the i-th diagonal position of the I_k block."""
        return 2 * self.n + i


# -------------------------------------------------------------------- queue
@dataclass
class QueuedUpdate:
    u: np.ndarray
    v: np.ndarray
    tag: str
    uid: int


class PredictionQueue:
    """Pending rank-1 updates in predicted order; positions are 1-based."""

    def __init__(self) -> None:
        self._items: List[QueuedUpdate] = []
        self._next_uid = 0

    def append(self, u: np.ndarray, v: np.ndarray, tag: str = "predicted") -> QueuedUpdate:
        item = QueuedUpdate(u, v, tag, self._next_uid)
        self._next_uid += 1
        self._items.append(item)
        return item

    def pop(self, eta: int) -> QueuedUpdate:
        if not 1 <= eta <= len(self._items):
            raise ContractViolation(f"queue position {eta} outside [1, {len(self._items)}]")
        return self._items.pop(eta - 1)

    def insert(self, eta: int, item: QueuedUpdate) -> None:
        self._items.insert(eta - 1, item)

    def position(self, uid: int) -> int:
        for pos, item in enumerate(self._items, 1):
            if item.uid == uid:
                return pos
        raise KeyError(uid)

    def head(self, count: int) -> List[QueuedUpdate]:
        return self._items[:count]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[QueuedUpdate]:
        return iter(self._items)


@dataclass
class UpdateResult:
    rank: int
    det: int
    row: Optional[np.ndarray]
    predicted: bool
    cost: int
    restart_cost: int = 0


class PredictedInverse:
    """Rank, determinant and inverse rows of M under queued rank-1 updates.

    Every ``epoch_length`` performed updates (default n) the structure
    restarts an epoch: it embeds the first ``n + epoch_length`` queued updates
    into a fresh ``FormulaEmbedding`` and builds a new ``InverseHierarchy`` on
    it.  Within an epoch every queue position up to n therefore still holds an
    embedded update, which is realised as one entry flip of the D block;
    anything else goes through a dense rank-1 update.

    With ``rank_gadget=True`` the embedded matrix is the ``RankGadget`` N and
    the gadget size k tracks n - rank(M).  Without it, an update that would
    make M singular raises SingularUpdate.

    ``perform_update`` requires at least ``min_queue`` queued updates
    (default n); fewer only means fewer updates take the entry-flip path.
    """

    def __init__(
        self,
        m,
        updates: Iterable[Tuple[Sequence[int], Sequence[int]]] = (),
        *,
        p: int = DEFAULT_PRIME,
        seed: int = 0,
        counter: WorkCounter | None = None,
        rank_gadget: bool = True,
        spread_chunk: int = 0,
        query_rows: Iterable[int] = (),
        min_queue: Optional[int] = None,
        epoch_length: Optional[int] = None,
    ) -> None:
        self.p = p
        self.counter = counter if counter is not None else WorkCounter()
        self._m = _as_array(m, p).copy()
        n = self._m.shape[0]
        if self._m.shape != (n, n):
            raise ContractViolation(f"expected a square matrix, got {self._m.shape}")
        self.n = n
        self.min_queue = n if min_queue is None else min_queue
        self.epoch_length = max(1, n if epoch_length is None else epoch_length)
        self._rng = np.random.default_rng(seed)
        self.gadget_enabled = rank_gadget
        self.spread_chunk = spread_chunk
        self.queue = PredictionQueue()
        for u, v in updates:
            self.queue.append(self._vector(u), self._vector(v), "predicted")
        self._pending: List[Tuple[np.ndarray, np.ndarray]] = []
        self._query_rows = [int(i) for i in query_rows]
        self._gadget: Optional[RankGadget] = None
        self.k = 0
        self.epochs = 0
        self._start_epoch(rerandomize=True)

    # ------------------------------------------------------------ accessors
    def _vector(self, x) -> np.ndarray:
        vec = _as_array(x, self.p).reshape(-1)
        if vec.shape != (self.n,):
            raise ContractViolation(f"update vector must have length {self.n}, got {vec.shape}")
        return vec

    @property
    def rank(self) -> int:
        return self.n - self.k

    @property
    def det(self) -> int:
        if not self.gadget_enabled:
            return self._det_b
        if self.k:
            return 0
        return (-self._det_b) % self.p if self.n % 2 else self._det_b

    def current_matrix(self) -> FieldMatrix:
        self._flush()
        return FieldMatrix(self._m, self.p)

    @property
    def hierarchy(self) -> InverseHierarchy:
        return self._hier

    @property
    def embedding(self) -> FormulaEmbedding:
        return self._emb

    def register_query_rows(self, rows: Iterable[int]) -> None:
        """Rows of M^-1 that will be queried; they join the prediction sets."""
        self._query_rows = [int(i) for i in rows]

    # --------------------------------------------------------------- epochs
    def _flush(self) -> None:
        if not self._pending:
            return
        u = np.stack([e[0] for e in self._pending], axis=1)
        v = np.stack([e[1] for e in self._pending], axis=1)
        self._m = (self._m + mulmod(u, v.T, self.p, counter=self.counter)) % self.p
        self._pending.clear()

    def _core_size(self) -> int:
        return 3 * self.n if self.gadget_enabled else self.n

    def _lift_core(self, x: np.ndarray) -> np.ndarray:
        if not self.gadget_enabled:
            return x
        out = np.zeros(3 * self.n, dtype=np.int64)
        out[: self.n] = x
        return out

    def _start_epoch(self, rerandomize: bool) -> None:
        self._flush()
        attempts = 3 if self.gadget_enabled else 1
        for attempt in range(attempts):
            if self.gadget_enabled:
                if rerandomize or self._gadget is None:
                    self.k = self.n - rank_mod(self._m, self.p, counter=self.counter)
                    self._gadget = RankGadget.random(self.n, self.k, self._rng, self.p)
                else:
                    self._gadget.k = self.k
                core = self._gadget.matrix(self._m)
            else:
                core = self._m
            embedded = self.queue.head(self.n + self.epoch_length)
            k = len(embedded)
            u_cols = np.zeros((self._core_size(), k), dtype=np.int64)
            v_cols = np.zeros((self._core_size(), k), dtype=np.int64)
            for t, item in enumerate(embedded):
                u_cols[:, t] = self._lift_core(item.u)
                v_cols[:, t] = self._lift_core(item.v)
            emb = build_formula_embedding(core, u_cols, v_cols, p=self.p, check=False)
            self._emb = emb
            self._slots = {item.uid: t for t, item in enumerate(embedded)}
            try:
                self._hier = InverseHierarchy(
                    emb.matrix,
                    self.p,
                    counter=self.counter,
                    predictor=self._predict_columns,
                    spread_chunk=self.spread_chunk,
                )
            except RebuildRequired:
                if not self.gadget_enabled:
                    raise SingularUpdate("matrix is singular; enable the rank gadget") from None
                logging.warning("gadget matrix singular at epoch start, re-randomizing (attempt %d)", attempt + 1)
                rerandomize = True
                continue
            self._det_b = det_mod(core, self.p, counter=self.counter)
            self._performed = 0
            self.epochs += 1
            logging.debug("epoch %d started: n=%d embedded=%d k=%d", self.epochs, self.n, k, self.k)
            return
        raise RebuildRequired("could not find an invertible gadget matrix")

    def _predict_columns(self, level: int) -> List[int]:
        emb = self._emb
        span = 2**level
        out: List[int] = []
        for item in self.queue.head(2 * span):
            slot = self._slots.get(item.uid)
            if slot is not None:
                out.append(emb.d_entry(slot)[1])
        for i in self._query_rows:
            out.append(emb.off_m + i)
        if self.gadget_enabled:
            for j in range(-span, span + 1):
                idx = 2 * self.n + self.k + j
                if 2 * self.n <= idx < 3 * self.n:
                    out.append(emb.off_m + idx)
        return out

    # -------------------------------------------------------------- updates
    def append_update(self, u, v) -> QueuedUpdate:
        item = self.queue.append(self._vector(u), self._vector(v), "appended")
        charge(self.counter, "vector_copy", 2 * self.n)
        return item

    def _gadget_flip(self, index: int, delta: int) -> bool:
        """Add ``delta`` to diagonal gadget entry ``index``; skip if that makes N singular."""
        pos = self._emb.off_m + index
        u_b = np.zeros(self._emb.size, dtype=np.int64)
        u_b[pos] = delta % self.p
        v_b = np.zeros(self._emb.size, dtype=np.int64)
        v_b[pos] = 1
        row = self._hier.peek(v_b)
        factor = (1 + row[pos] * (delta % self.p)) % self.p
        if factor == 0:
            return False
        self._hier.commit(u_b, v_b, True)
        self._det_b = (self._det_b * factor) % self.p
        return True

    def _realize(self, u_b: np.ndarray, v_b: np.ndarray) -> np.ndarray:
        row = self._hier.peek(v_b)
        factor = (1 + _dot(row, u_b, self.p, self.counter)) % self.p
        grew = False
        if factor == 0:
            if not self.gadget_enabled:
                raise SingularUpdate("update would make the matrix singular")
            if not self._gadget_flip(2 * self.n + self.k, 1):
                raise RebuildRequired("growing the gadget made N singular")
            self.k += 1
            grew = True
            factor = (1 + _dot(self._hier.peek(v_b), u_b, self.p, self.counter)) % self.p
            if factor == 0:
                raise RebuildRequired("gadget did not absorb the rank drop")
        self._hier.commit(u_b, v_b, True)
        self._det_b = (self._det_b * factor) % self.p
        if self.gadget_enabled and not grew and self.k > 0:
            if self._gadget_flip(2 * self.n + self.k - 1, -1):
                self.k -= 1
        return row

    def perform_update(self, eta: int) -> UpdateResult:
        """Perform the queued update at 1-based position ``eta``."""
        if len(self.queue) < max(1, self.min_queue):
            raise ContractViolation(f"queue holds {len(self.queue)} updates, needs at least {self.min_queue}")
        item = self.queue.pop(eta)
        start = self.counter.total
        was_full_rank = self.k == 0
        slot = self._slots.pop(item.uid, None)
        emb = self._emb
        if slot is not None:
            r, c = emb.d_entry(slot)
            u_b = np.zeros(emb.size, dtype=np.int64)
            u_b[r] = 1
            v_b = np.zeros(emb.size, dtype=np.int64)
            v_b[c] = 1
        else:
            u_b = emb.lift(self._lift_core(item.u))
            v_b = emb.lift(self._lift_core(item.v))
        try:
            row = self._realize(u_b, v_b)
        except SingularUpdate:
            self.queue.insert(eta, item)
            if slot is not None:
                self._slots[item.uid] = slot
            raise
        except RebuildRequired as exc:
            logging.warning("rebuilding after failed update: %s", exc)
            self._pending.append((item.u, item.v))
            self._start_epoch(rerandomize=True)
            row = None
        else:
            self._pending.append((item.u, item.v))
        cost = self.counter.total - start
        restart_cost = 0
        self._performed += 1
        if self._performed >= self.epoch_length:
            before = self.counter.total
            self._start_epoch(rerandomize=False)
            restart_cost = self.counter.total - before
        out_row = None
        if row is not None and was_full_rank:
            out_row = row[emb.off_m : emb.off_m + self.n].copy()
        return UpdateResult(self.rank, self.det, out_row, slot is not None, cost, restart_cost)

    def query_row(self, v) -> Optional[np.ndarray]:
        """v^T M^-1 for the current M (None while M is singular).

        A single-entry v reads a row of the (2,2) block of B^-1 directly;
        other vectors are written into the spare column of V' and read back
        from the first block row.
        """
        if self.k:
            return None
        vec = self._vector(v)
        emb = self._emb
        hit = _support(vec)
        if hit is not None:
            j, alpha = hit
            unit = np.zeros(emb.size, dtype=np.int64)
            unit[emb.off_m + j] = 1
            row = self._hier.query_and_update(np.zeros(emb.size, dtype=np.int64), unit, apply=False)
            return (row[emb.off_m : emb.off_m + self.n] * alpha) % self.p
        spare = emb.spare_row
        current = self._hier.matrix[spare, emb.off_m : emb.off_m + self._core_size()]
        delta = (self._lift_core(vec) - current) % self.p
        u_b = np.zeros(emb.size, dtype=np.int64)
        u_b[spare] = 1
        v_b = emb.lift(delta)
        row_spare = self._hier.peek(v_b)
        factor = (1 + row_spare[spare]) % self.p
        if factor == 0:
            raise RebuildRequired("spare-column write made B singular")
        self._hier.commit(u_b, v_b, True)
        self._det_b = (self._det_b * factor) % self.p
        unit = np.zeros(emb.size, dtype=np.int64)
        unit[spare] = 1
        row = self._hier.query_and_update(np.zeros(emb.size, dtype=np.int64), unit, apply=False)
        return (-row[emb.off_m : emb.off_m + self.n]) % self.p


def perform_update(ds: PredictedInverse, eta: int) -> UpdateResult:
    return ds.perform_update(eta)


def append_update(ds: PredictedInverse, u, v) -> QueuedUpdate:
    return ds.append_update(u, v)
