import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
from field_arith import det_mod, rank_mod
from oracles import (
    bfs_distance,
    bfs_reach,
    det_mod_oracle,
    dfs_cycle,
    fw_apsp,
    matching_exhaustive,
    maxflow_vertex_disjoint,
    omv_answer,
    oumv_answer,
    rank_mod_oracle,
    strongly_connected,
    triangle_cubic,
)


def test_floyd_warshall_on_a_weighted_cycle() -> None:
    dist = fw_apsp("abc", {("a", "b"): 1, ("b", "c"): 2, ("c", "a"): 3})
    assert dist[("a", "c")] == 3
    assert dist[("c", "b")] == 4
    assert dist[("b", "b")] == 0
    dist = fw_apsp("ab", {("a", "b"): 1, ("b", "z"): 1})
    assert dist[("b", "a")] == math.inf


def test_bfs_reach_and_distance() -> None:
    arcs = [(0, 1), (1, 2), (0, 2), (3, 0)]
    assert bfs_reach(4, arcs, 0) == {0, 1, 2}
    assert bfs_distance(4, arcs, 0, 2) == 1
    assert bfs_distance(4, arcs, 3, 2) == 2
    assert bfs_distance(4, arcs, 2, 0) is None
    assert bfs_distance(4, arcs, 1, 1) == 0


def test_cycles_and_strong_connectivity() -> None:
    assert not dfs_cycle(3, [(0, 1), (1, 2), (0, 2)])
    assert dfs_cycle(3, [(0, 1), (1, 2), (2, 0)])
    assert strongly_connected(3, [(0, 1), (1, 2), (2, 0)])
    assert not strongly_connected(3, [(0, 1), (1, 2)])
    assert strongly_connected(1, [])


def test_triangles_and_matchings() -> None:
    k4 = [(u, v) for u in range(4) for v in range(u + 1, 4)]
    assert triangle_cubic(4, k4) == 4
    assert triangle_cubic(4, [(0, 1), (1, 2)]) == 0
    assert matching_exhaustive(4, [(0, 1), (1, 2), (2, 3)]) == 2
    assert matching_exhaustive(3, [(0, 1), (1, 2), (0, 2)]) == 1
    assert matching_exhaustive(5, []) == 0


def test_vertex_disjoint_paths() -> None:
    assert maxflow_vertex_disjoint(4, [(0, 2), (2, 1), (0, 3), (3, 1)], 0, 1) == 2
    assert maxflow_vertex_disjoint(4, [(0, 2), (2, 1), (0, 3), (3, 2)], 0, 1) == 1
    assert maxflow_vertex_disjoint(3, [(0, 1), (0, 2), (2, 1)], 0, 1) == 2
    assert maxflow_vertex_disjoint(3, [(1, 0)], 0, 1) == 0


def test_boolean_products() -> None:
    m = [[1, 0], [0, 1]]
    assert omv_answer(m, [0, 1]) == [0, 1]
    assert oumv_answer(m, [1, 0], [1, 0])
    assert not oumv_answer(m, [1, 0], [0, 1])


def test_rank_and_determinant_oracles_agree_with_elimination() -> None:
    rng = np.random.default_rng(0)
    for p in (2, 3, 101):
        for _ in range(10):
            a = rng.integers(0, p, size=(5, 5))
            rows = a.tolist()
            assert rank_mod_oracle(rows, p) == rank_mod(a, p)
            assert det_mod_oracle(rows, p) == det_mod(a, p)
