import math
import os
import sys

import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
from errors import ContractViolation, UnpredictedEdge
from generators import ErrorModel, gen_perturbed_sequence, partial_workload
from minmax_algebra import POS_INF
from oracles import bfs_distance, bfs_reach
from partially_dynamic import (
    DECREMENTAL,
    INCREMENTAL,
    PredictedEdgeSequence,
    apply_update,
    auxiliary_nodes,
    current_edges,
    error_stats,
    preprocess,
    query_distance,
    finish,
    query_reachable,
    reachable_steps,
    realized_eta_inf,
    replay_script,
)

CHAIN = [(0, 1), (1, 2), (2, 3)]


def _replay_and_check(n, predicted, script, mode, eps):
    state = preprocess(predicted, eps, mode, n=n)
    edges = set() if mode == INCREMENTAL else set(predicted)
    for kind, a, b in script:
        if kind == "U":
            apply_update(state, (a, b))
            if mode == INCREMENTAL:
                edges.add((a, b))
            else:
                edges.discard((a, b))
            assert current_edges(state) == edges
            continue
        eta = error_stats(state).eta_bar
        assert len(auxiliary_nodes(state, a, b)) <= 2 * eta + 2
        assert query_reachable(state, a, b) == (b in bfs_reach(n, edges, a))
        if not math.isinf(eps):
            true = bfs_distance(n, edges, a, b)
            got = query_distance(state, a, b)
            if true is None:
                assert got is None
            else:
                assert true <= got <= (1 + eps) * true
    return state


def test_duplicate_edges_rejected() -> None:
    with pytest.raises(ContractViolation, match="predicted twice"):
        PredictedEdgeSequence(((0, 1), (0, 1)))


def test_empty_sequence_is_unreachable() -> None:
    state = preprocess([], 1.0, n=3)
    assert not query_reachable(state, 0, 2)
    assert query_reachable(state, 1, 1)
    assert query_distance(state, 0, 2) is None


def test_chain_ladder_values() -> None:
    state = preprocess(CHAIN, 1.0)
    ladder = dict(state.ladder)
    assert ladder[1][0, 1] == 1
    assert ladder[2][0, 2] == 2
    assert ladder[4][0, 3] == 3
    assert ladder[2][0, 3] == POS_INF


def test_prefix_tracking_examples() -> None:
    state = preprocess(CHAIN, math.inf)
    assert error_stats(state) == (0, 0, [])
    apply_update(state, (1, 2))
    assert error_stats(state) == (1, 0, [(1, 2)])

    state = preprocess(CHAIN, math.inf)
    etas = []
    for edge in [(1, 2), (2, 3), (0, 1)]:
        apply_update(state, edge)
        etas.append(error_stats(state).eta_bar)
    assert etas == [1, 2, 0]


def test_in_order_replay_has_zero_error() -> None:
    state = preprocess(CHAIN, 1.0)
    for edge in CHAIN:
        apply_update(state, edge)
        assert error_stats(state).eta_bar == 0
    assert query_reachable(state, 0, 3)
    assert auxiliary_nodes(state, 0, 3) == [0, 3]
    assert 3 <= query_distance(state, 0, 3) <= 4
    assert query_distance(state, 0, 1) == 1


def test_unpredicted_and_repeated_updates() -> None:
    state = preprocess(CHAIN, math.inf)
    with pytest.raises(UnpredictedEdge):
        apply_update(state, (3, 0))
    apply_update(state, (0, 1))
    with pytest.raises(ContractViolation, match="already applied"):
        apply_update(state, (0, 1))


def test_distance_needs_finite_eps() -> None:
    state = preprocess(CHAIN, math.inf)
    with pytest.raises(ContractViolation, match="finite eps"):
        query_distance(state, 0, 1)
    with pytest.raises(ContractViolation, match="positive"):
        preprocess(CHAIN, 0)


def test_decremental_suffix_tracking() -> None:
    state = preprocess(CHAIN, 1.0, DECREMENTAL)
    assert query_reachable(state, 0, 3)
    apply_update(state, (1, 2))
    stats = error_stats(state)
    assert stats.boundary == 3
    assert stats.e_err == [(0, 1)]
    assert not query_reachable(state, 0, 3)
    assert query_reachable(state, 0, 1)


@pytest.mark.parametrize("mode", [INCREMENTAL, DECREMENTAL])
@pytest.mark.parametrize("model", ["exact", "linf_window:2", "linf_window:8"])
@settings(max_examples=6, deadline=None)
@given(seed=integers(min_value=0, max_value=2**32 - 1), n=integers(min_value=4, max_value=13))
def test_random_instances_match_bfs(mode, model, seed, n) -> None:
    predicted, script = partial_workload(n, 3 * n, ErrorModel.parse(model, seed), seed=seed, mode=mode)
    _replay_and_check(n, predicted, script, mode, 0.5)
    _replay_and_check(n, predicted, script, mode, 1.0)


def test_eta_bar_bounded_by_eta_inf() -> None:
    for seed in range(5):
        predicted, script = partial_workload(10, 30, ErrorModel("linf_window", 3, seed), seed=seed)
        seq = PredictedEdgeSequence(tuple(predicted))
        realized = [(a, b) for kind, a, b in script if kind == "U"]
        eta_inf = realized_eta_inf(seq, realized)
        assert eta_inf <= 3
        state = preprocess(seq, math.inf, n=10)
        for edge in realized:
            apply_update(state, edge)
            assert error_stats(state).eta_bar <= eta_inf


def test_perturbed_sequence_models() -> None:
    assert gen_perturbed_sequence(20, ErrorModel()).eta_inf == 0
    assert gen_perturbed_sequence(100, ErrorModel("linf_window", 4, 1)).eta_inf <= 4
    assert gen_perturbed_sequence(100, ErrorModel("swap_count", 3, 2)).eta_inf <= 3


def test_replay_script_answers() -> None:
    state = preprocess(CHAIN, 1.0)
    answers = replay_script(state, [("U", 0, 1), ("Q", 0, 1), ("U", 2, 3), ("Q", 0, 3), ("U", 1, 2), ("Q", 0, 3)])
    assert answers[0] == (True, 1)
    assert answers[1] == (False, None)
    assert answers[2][0] is True
    with pytest.raises(ContractViolation, match="unknown operation"):
        replay_script(state, [("X", 0, 1)])


def test_reachable_steps_matches_query() -> None:
    predicted, script = partial_workload(10, 30, ErrorModel("linf_window", 3), seed=4)
    state = preprocess(predicted, POS_INF, INCREMENTAL, n=10)
    for kind, a, b in script:
        if kind == "U":
            apply_update(state, (a, b))
            continue
        steps = reachable_steps(state, a, b)
        assert finish(steps) == query_reachable(state, a, b)


def test_reachable_steps_suspends_between_rows() -> None:
    state = preprocess(CHAIN, POS_INF, INCREMENTAL, n=4)
    apply_update(state, (2, 3))
    apply_update(state, (0, 1))
    before = state.counter.total
    steps = reachable_steps(state, 0, 3)
    next(steps)
    first_row = state.counter.total - before
    assert first_row == len(auxiliary_nodes(state, 0, 3))
    assert finish(steps) is False
