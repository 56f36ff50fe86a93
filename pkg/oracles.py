"""Independent ground truth for verification runs.

Textbook algorithms in plain Python.  Nothing here imports the structures
under test.
"""

from __future__ import annotations

import math
from collections import deque
from functools import lru_cache
from itertools import combinations
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

Arc = Tuple[int, int]


def _out_lists(n: int, arcs: Iterable[Arc]) -> List[List[int]]:
    out: List[List[int]] = [[] for _ in range(n)]
    for u, v in arcs:
        out[u].append(v)
    return out


def fw_apsp(
    vertices: Sequence[Hashable], arcs: Mapping[Tuple[Hashable, Hashable], float]
) -> Dict[Tuple[Hashable, Hashable], float]:
    """Floyd–Warshall over the arcs whose endpoints are both in ``vertices``."""
    present = set(vertices)
    dist = {(a, b): (0.0 if a == b else math.inf) for a in vertices for b in vertices}
    for (u, v), w in arcs.items():
        if u in present and v in present and u != v and w < dist[(u, v)]:
            dist[(u, v)] = float(w)
    for k in vertices:
        for i in vertices:
            dik = dist[(i, k)]
            if dik == math.inf:
                continue
            for j in vertices:
                alt = dik + dist[(k, j)]
                if alt < dist[(i, j)]:
                    dist[(i, j)] = alt
    return dist


def bfs_reach(n: int, arcs: Iterable[Arc], s: int) -> Set[int]:
    out = _out_lists(n, arcs)
    seen = {s}
    queue = deque([s])
    while queue:
        x = queue.popleft()
        for y in out[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def bfs_distance(n: int, arcs: Iterable[Arc], u: int, v: int) -> Optional[int]:
    """Hop distance from u to v, or None when unreachable."""
    out = _out_lists(n, arcs)
    dist = {u: 0}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        if x == v:
            return dist[x]
        for y in out[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return None


def dfs_cycle(n: int, arcs: Iterable[Arc]) -> bool:
    """True when the digraph has a directed cycle (iterative three-colour DFS)."""
    out = _out_lists(n, arcs)
    colour = [0] * n  # 0 new, 1 on stack, 2 done
    for root in range(n):
        if colour[root]:
            continue
        stack = [(root, iter(out[root]))]
        colour[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = 2
                stack.pop()
            elif colour[nxt] == 1:
                return True
            elif colour[nxt] == 0:
                colour[nxt] = 1
                stack.append((nxt, iter(out[nxt])))
    return False


def strongly_connected(n: int, arcs: Iterable[Arc]) -> bool:
    arcs = list(arcs)
    full = set(range(n))
    return bfs_reach(n, arcs, 0) == full and bfs_reach(n, [(v, u) for u, v in arcs], 0) == full


def triangle_cubic(n: int, edges: Iterable[Arc]) -> int:
    """Undirected triangles by checking every vertex triple."""
    adj = [[False] * n for _ in range(n)]
    for u, v in edges:
        if u != v:
            adj[u][v] = adj[v][u] = True
    return sum(1 for a, b, c in combinations(range(n), 3) if adj[a][b] and adj[b][c] and adj[a][c])


def matching_exhaustive(n: int, edges: Iterable[Arc]) -> int:
    """Maximum matching size by memoised search over unmatched-vertex sets."""
    nbrs = [0] * n
    for u, v in edges:
        if u != v:
            nbrs[u] |= 1 << v
            nbrs[v] |= 1 << u

    @lru_cache(maxsize=None)
    def best(free: int) -> int:
        if not free:
            return 0
        low = free & -free
        v = low.bit_length() - 1
        rest = free ^ low
        result = best(rest)
        cand = nbrs[v] & rest
        while cand:
            bit = cand & -cand
            result = max(result, 1 + best(rest ^ bit))
            cand ^= bit
        return result

    return best((1 << n) - 1)


def maxflow_vertex_disjoint(n: int, arcs: Iterable[Arc], s: int, t: int) -> int:
    """Number of internally vertex-disjoint s-t paths (Edmonds–Karp on a split graph)."""
    # node x -> x_in = 2x, x_out = 2x + 1
    size = 2 * n
    cap: Dict[Tuple[int, int], int] = {}
    adj: List[Set[int]] = [set() for _ in range(size)]

    def add(a: int, b: int, c: int) -> None:
        cap[(a, b)] = cap.get((a, b), 0) + c
        cap.setdefault((b, a), 0)
        adj[a].add(b)
        adj[b].add(a)

    big = n + 1
    for x in range(n):
        add(2 * x, 2 * x + 1, big if x in (s, t) else 1)
    for u, v in arcs:
        if u != v:
            add(2 * u + 1, 2 * v, 1)
    source, sink = 2 * s + 1, 2 * t
    flow = 0
    while True:
        parent = {source: source}
        queue = deque([source])
        while queue and sink not in parent:
            x = queue.popleft()
            for y in adj[x]:
                if y not in parent and cap[(x, y)] > 0:
                    parent[y] = x
                    queue.append(y)
        if sink not in parent:
            return flow
        y = sink
        while y != source:
            x = parent[y]
            cap[(x, y)] -= 1
            cap[(y, x)] += 1
            y = x
        flow += 1


def omv_answer(m: Sequence[Sequence[int]], v: Sequence[int]) -> List[int]:
    n = len(m)
    return [int(any(m[i][j] and v[j] for j in range(n))) for i in range(n)]


def oumv_answer(m: Sequence[Sequence[int]], u: Sequence[int], v: Sequence[int]) -> bool:
    n = len(m)
    return any(u[i] and m[i][j] and v[j] for i in range(n) for j in range(n))


def _reduce(rows: Sequence[Sequence[int]], p: int) -> Tuple[int, int]:
    """(rank, determinant) by fraction-free row reduction with Python ints."""
    a = [[int(x) % p for x in row] for row in rows]
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    det = 1
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if a[i][c]), None)
        if piv is None:
            det = 0
            continue
        if piv != r:
            a[r], a[piv] = a[piv], a[r]
            det = -det
        det = det * a[r][c] % p
        inv = pow(a[r][c], p - 2, p)
        for i in range(r + 1, n_rows):
            if a[i][c]:
                f = a[i][c] * inv % p
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        r += 1
        if r == n_rows:
            break
    if r < n_cols:
        det = 0
    return r, det % p


def rank_mod_oracle(rows: Sequence[Sequence[int]], p: int) -> int:
    return _reduce(rows, p)[0]


def det_mod_oracle(rows: Sequence[Sequence[int]], p: int) -> int:
    return _reduce(rows, p)[1]
