import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
from counters import WorkCounter
from errors import ContractViolation, RebuildRequired, SingularUpdate
from field_arith import DEFAULT_PRIME, det_mod, inverse_mod, mulmod, rank_mod
from generators import ErrorModel, gen_inverse_workload
from matrix_inverse_pred import (
    DenseInverseRows,
    InverseHierarchy,
    PredictedInverse,
    PredictionQueue,
    RankGadget,
    append_update,
    build_formula_embedding,
    hierarchy_update,
    perform_update,
    set_predictions,
    woodbury_factors,
)

P = DEFAULT_PRIME


def _rand(rng, *shape):
    return rng.integers(0, P, size=shape, dtype=np.int64)


def _row_times(row, m):
    return mulmod(np.asarray(row)[None, :], m, P)[0]


# ------------------------------------------------------------ woodbury
SEEDS = integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(SEEDS, integers(min_value=1, max_value=8), integers(min_value=1, max_value=3))
def test_woodbury_identity_random(seed, n, k) -> None:
    rng = np.random.default_rng(seed)
    m = _rand(rng, n, n)
    u = _rand(rng, n, k)
    v = _rand(rng, n, k)
    minv = inverse_mod(m, P)
    l_mat, r_mat = woodbury_factors(DenseInverseRows(minv, P), u, v, P)
    updated = (m + mulmod(u, v.T, P)) % P
    right = (minv - mulmod(mulmod(minv, l_mat, P), r_mat, P)) % P
    assert np.array_equal(mulmod(updated, right, P), np.eye(n, dtype=np.int64))


def test_woodbury_unit_columns_use_rows() -> None:
    rng = np.random.default_rng(2)
    m = _rand(rng, 4, 4)
    minv = inverse_mod(m, P)
    v = np.zeros((4, 1), dtype=np.int64)
    v[2, 0] = 5
    _, r_mat = woodbury_factors(DenseInverseRows(minv, P), _rand(rng, 4, 1), v, P)
    assert np.array_equal(r_mat[0], (minv[2] * 5) % P)


def test_woodbury_singular_result_requests_rebuild() -> None:
    m = np.eye(3, dtype=np.int64)
    u = np.zeros((3, 1), dtype=np.int64)
    v = np.zeros((3, 1), dtype=np.int64)
    u[0, 0] = P - 1
    v[0, 0] = 1
    with pytest.raises(RebuildRequired):
        woodbury_factors(DenseInverseRows(m, P), u, v, P)


def test_woodbury_shape_mismatch() -> None:
    with pytest.raises(ContractViolation, match="share"):
        woodbury_factors(DenseInverseRows(np.eye(3, dtype=np.int64)), np.zeros((3, 1)), np.zeros((3, 2)))


# ----------------------------------------------------------- hierarchy
def test_single_entry_update_on_identity() -> None:
    h = InverseHierarchy(np.eye(4, dtype=np.int64), P)
    u = np.zeros(4, dtype=np.int64)
    v = np.zeros(4, dtype=np.int64)
    u[1], v[3] = 7, 1
    row = hierarchy_update(h, u, v)
    assert row.tolist() == [0, 0, 0, 1]
    e1 = np.zeros(4, dtype=np.int64)
    e1[1] = 1
    expected = [0, 1, 0, (-7) % P]
    assert h.peek(e1).tolist() == expected


@pytest.mark.parametrize("spread", [0, 2])
@settings(max_examples=8, deadline=None)
@given(seed=SEEDS)
def test_hierarchy_tracks_dense_inverse(spread, seed) -> None:
    rng = np.random.default_rng(seed)
    n = 8
    m = _rand(rng, n, n)
    h = InverseHierarchy(m, P, spread_chunk=spread)
    dense = m.copy()
    for step in range(20):
        u = _rand(rng, n)
        v = np.zeros(n, dtype=np.int64)
        v[int(rng.integers(n))] = int(rng.integers(1, P))
        if step % 3 == 2:
            v = _rand(rng, n)
        row = h.query_and_update(u, v)
        assert np.array_equal(_row_times(row, dense), v)
        dense = (dense + np.outer(u, v) % P) % P
        assert np.array_equal(h.matrix, dense)
        assert np.array_equal(h.explicit_inverse(), inverse_mod(dense, P))


def test_pure_queries_advance_schedule() -> None:
    rng = np.random.default_rng(4)
    m = _rand(rng, 4, 4)
    h = InverseHierarchy(m, P)
    for _ in range(5):
        v = _rand(rng, 4)
        row = h.query_and_update(np.zeros(4, dtype=np.int64), v, apply=False)
        assert np.array_equal(_row_times(row, m), v)
    assert h.t == 5
    assert np.array_equal(h.matrix, m)


def test_set_predictions_validation() -> None:
    h = InverseHierarchy(np.eye(8, dtype=np.int64), P)
    assert h.top == 3
    set_predictions(h, 2, [[1], [1, 2], [1, 2, 3]])
    assert h.prediction_sets[:2] == [frozenset({1}), frozenset({1, 2})]
    with pytest.raises(ContractViolation, match="not contained"):
        h.set_predictions(1, [[3], [1, 2]])
    with pytest.raises(ContractViolation, match="empty"):
        h.set_predictions(0, [[]])
    with pytest.raises(ContractViolation, match="exceeds"):
        h.set_predictions(0, [list(range(7))])
    with pytest.raises(ContractViolation, match="level"):
        h.set_predictions(5, [[0]] * 6)


def test_predicted_rows_are_cached() -> None:
    counter = WorkCounter()
    n = 8
    h = InverseHierarchy(np.eye(n, dtype=np.int64), P, counter=counter, predictor=lambda level: [2, 5])
    h.query_and_update(np.ones(n, dtype=np.int64), np.ones(n, dtype=np.int64))
    assert 2 in h.prediction_sets[0]
    before = counter.get("field_mul")
    h.peek(np.eye(n, dtype=np.int64)[2])
    assert counter.get("field_mul") == before
    h.peek(np.eye(n, dtype=np.int64)[3])
    assert counter.get("field_mul") > before


# ----------------------------------------------------------- embedding
@settings(max_examples=30, deadline=None)
@given(SEEDS, integers(min_value=2, max_value=6), integers(min_value=1, max_value=3))
def test_formula_block_equals_inverse_formula(seed, n, k) -> None:
    rng = np.random.default_rng(seed)
    m = _rand(rng, n, n)
    u = _rand(rng, n, k)
    v = _rand(rng, n, k)
    vq = _rand(rng, n, k)
    d = _rand(rng, k)
    emb = build_formula_embedding(m, u, v, vq, d=d, p=P)
    assert emb.size == (k + 1) + n + 2 * k
    updated = (m + mulmod(mulmod(u, np.diag(d), P), v.T, P)) % P
    expected = (-mulmod(vq.T, inverse_mod(updated, P), P)) % P
    block = emb.formula_block(inverse_mod(emb.matrix, P))
    assert np.array_equal(block[:k], expected)
    assert not block[k].any()


def test_embedding_entry_flip_realizes_rank_one_update() -> None:
    rng = np.random.default_rng(6)
    n, k = 4, 2
    m = _rand(rng, n, n)
    u = _rand(rng, n, k)
    v = _rand(rng, n, k)
    emb = build_formula_embedding(m, u, v, p=P)
    b = emb.matrix.copy()
    r, c = emb.d_entry(1)
    b[r, c] = 1
    inner = inverse_mod(b, P)[emb.off_m : emb.off_m + n, emb.off_m : emb.off_m + n]
    assert np.array_equal(inner, inverse_mod((m + np.outer(u[:, 1], v[:, 1]) % P) % P, P))
    with pytest.raises(ContractViolation, match="slot"):
        emb.d_entry(k)


def test_embedding_rejects_singular_m() -> None:
    m = np.ones((3, 3), dtype=np.int64)
    with pytest.raises(ContractViolation, match="singular"):
        build_formula_embedding(m, np.zeros((3, 1)), np.zeros((3, 1)), p=P)


def test_rank_gadget_threshold() -> None:
    rng = np.random.default_rng(7)
    n = 5
    m = mulmod(_rand(rng, n, 3), _rand(rng, 3, n), P)  # rank 3
    for k in range(4):
        gadget = RankGadget.random(n, k, rng, P)
        invertible = det_mod(gadget.matrix(m), P) != 0
        assert invertible == (k >= 2)
    assert gadget.slot(0) == 2 * n


# --------------------------------------------------------------- queue
def test_prediction_queue_positions() -> None:
    q = PredictionQueue()
    items = [q.append(np.zeros(2), np.zeros(2)) for _ in range(4)]
    assert [i.uid for i in items] == [0, 1, 2, 3]
    assert q.position(2) == 3
    popped = q.pop(2)
    assert popped.uid == 1
    assert [i.uid for i in q] == [0, 2, 3]
    q.insert(1, popped)
    assert q.position(1) == 1
    assert len(q.head(2)) == 2
    with pytest.raises(ContractViolation):
        q.pop(9)


# ------------------------------------------------------- full structure
def _dense_check(ds, dense, item_v, res, before):
    assert res.rank == rank_mod(dense, P)
    assert res.det == det_mod(dense, P)
    if res.row is not None:
        assert np.array_equal(_row_times(res.row, before), np.asarray(item_v) % P)


@pytest.mark.parametrize("gadget", [True, False])
def test_perfect_predictions_match_dense(gadget) -> None:
    n = 8
    wl = gen_inverse_workload(n, 2 * n, ErrorModel(), seed=11, singular_rate=0.0)
    ds = PredictedInverse(wl.matrix, wl.predicted, p=P, seed=3, rank_gadget=gadget)
    dense = wl.matrix.copy()
    for _ in range(2 * n):
        item = ds.queue.head(1)[0]
        before = dense.copy()
        res = perform_update(ds, 1)
        assert res.predicted
        dense = (dense + np.outer(item.u, item.v) % P) % P
        _dense_check(ds, dense, item.v, res, before)
        assert res.row is not None
    assert np.array_equal(ds.current_matrix().data, dense)


def test_mixed_eta_and_unpredicted_updates() -> None:
    n = 8
    rng = np.random.default_rng(12)
    wl = gen_inverse_workload(n, 3 * n, ErrorModel("unpredicted_rate", 0.2, 4), seed=12)
    ds = PredictedInverse(wl.matrix, wl.predicted, p=P, seed=5)
    dense = wl.matrix.copy()
    extra = iter(wl.extra)
    for j in range(3 * n):
        if wl.order.unpredicted[j]:
            u, v = next(extra)
            append_update(ds, u, v)
            eta = len(ds.queue)
        else:
            eta = int(rng.choice([1, 2, 4, n // 2]))
            eta = min(eta, len(ds.queue))
        item = ds.queue.head(eta)[-1]
        before = dense.copy()
        res = ds.perform_update(eta)
        dense = (dense + np.outer(item.u, item.v) % P) % P
        _dense_check(ds, dense, item.v, res, before)


def test_update_making_matrix_singular_drops_rank() -> None:
    n = 6
    rng = np.random.default_rng(13)
    m = _rand(rng, n, n)
    u = np.zeros(n, dtype=np.int64)
    u[0] = 1
    copy_row = (m[1] - m[0]) % P
    updates = [(u, copy_row)] + [(_rand(rng, n), _rand(rng, n)) for _ in range(n)]
    ds = PredictedInverse(m, updates, p=P, seed=1)
    res = ds.perform_update(1)
    assert res.rank == n - 1
    assert res.det == 0
    assert ds.query_row(np.eye(n, dtype=np.int64)[0]) is None
    res = ds.perform_update(1)
    dense = ds.current_matrix().data
    assert res.rank == rank_mod(dense, P) == n
    assert res.det == det_mod(dense, P)


def test_gadget_free_structure_refuses_singular_update() -> None:
    n = 5
    rng = np.random.default_rng(14)
    m = _rand(rng, n, n)
    u = np.zeros(n, dtype=np.int64)
    u[2] = 1
    updates = [(u, (m[4] - m[2]) % P)] + [(_rand(rng, n), _rand(rng, n)) for _ in range(n)]
    ds = PredictedInverse(m, updates, p=P, rank_gadget=False)
    with pytest.raises(SingularUpdate):
        ds.perform_update(1)
    assert len(ds.queue) == n + 1
    assert ds.queue.head(1)[0].uid == 0
    res = ds.perform_update(2)
    assert res.rank == n


def test_query_row_before_and_after_updates() -> None:
    n = 6
    rng = np.random.default_rng(15)
    wl = gen_inverse_workload(n, n, ErrorModel(), seed=15, singular_rate=0.0)
    ds = PredictedInverse(wl.matrix, wl.predicted, p=P, seed=2)
    for _ in range(3):
        dense = ds.current_matrix().data
        unit = np.zeros(n, dtype=np.int64)
        unit[3] = 9
        assert np.array_equal(_row_times(ds.query_row(unit), dense), unit)
        general = _rand(rng, n)
        assert np.array_equal(_row_times(ds.query_row(general), dense), general)
        ds.perform_update(1)
    res = ds.perform_update(1)
    assert res.det == det_mod(ds.current_matrix().data, P)


def test_short_queue_is_a_contract_violation() -> None:
    ds = PredictedInverse(np.eye(4, dtype=np.int64), [], p=P)
    with pytest.raises(ContractViolation, match="queue holds"):
        ds.perform_update(1)
    with pytest.raises(ContractViolation, match="square"):
        PredictedInverse(np.zeros((2, 3), dtype=np.int64))


def test_unembedded_updates_cost_more() -> None:
    n = 16
    costs = {}
    for far in (False, True):
        # the queue outgrows the 2n embedded updates, so its tail takes the dense path
        wl = gen_inverse_workload(n, 3 * n, ErrorModel(), seed=16, singular_rate=0.0)
        ds = PredictedInverse(wl.matrix, wl.predicted, p=P, seed=4)
        total = 0
        for _ in range(n // 2):
            res = ds.perform_update(len(ds.queue) if far else 1)
            assert res.predicted != far
            total += res.cost
        costs[far] = total
    assert costs[False] < costs[True]


def test_positions_up_to_n_stay_embedded_for_an_epoch() -> None:
    n = 8
    wl = gen_inverse_workload(n, 2 * n, ErrorModel(), seed=17, singular_rate=0.0)
    ds = PredictedInverse(wl.matrix, wl.predicted, p=P, seed=6)
    assert ds.embedding.k == 2 * n
    for step in range(2 * n):
        res = ds.perform_update(n)
        assert res.predicted
        assert (res.restart_cost > 0) == ((step + 1) % n == 0)


def test_epoch_length_sets_restart_period_and_embedding() -> None:
    n = 6
    wl = gen_inverse_workload(n, 2 * n, ErrorModel(), seed=18, singular_rate=0.0)
    ds = PredictedInverse(wl.matrix, wl.predicted, p=P, epoch_length=2)
    assert ds.embedding.k == n + 2
    ds.perform_update(1)
    assert ds.epochs == 1
    ds.perform_update(1)
    assert ds.epochs == 2


def test_walked_rows_are_kept_until_refresh() -> None:
    counter = WorkCounter()
    n = 8
    rng = np.random.default_rng(19)
    h = InverseHierarchy(_rand(rng, n, n), P, counter=counter)
    h.query_and_update(_rand(rng, n), _rand(rng, n))
    unit = np.eye(n, dtype=np.int64)[6]
    first = h.peek(unit)
    before = counter.get("field_mul")
    again = h.peek(unit)
    assert counter.get("field_mul") == before
    assert np.array_equal(first, again)
    row = h.row_at(0, 6)
    row[0] = (row[0] + 1) % P
    assert np.array_equal(h.row_at(0, 6), first)
