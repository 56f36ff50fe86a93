"""Plain-text workload scripts.

All formats ignore blank lines and ``#`` comments.  Parse failures raise
``ParseError`` carrying the file name and 1-based line number.

Partial (reachability / distances)::

    n m mode eps            # header; mode is incremental or decremental
    u v                     # m lines: the predicted edge sequence
    U u v                   # realized update (insert or delete)
    Q u v                   # query

APSP with predicted deletions::

    I v key | u:w,u:w | u:w # insert v; in-arcs, then out-arcs
    D v                     # delete
    Q u v                   # distance query

Graphs under vertex updates::

    problem <kind> n <n> [s <s> t <t>]
    A u v                   # initial arc
    P v | in: u,.. | out: w,..    # predicted vertex update (queue order)
    VU v | in: u,.. | out: w,..   # realized vertex update
    Q                       # compare the maintained answer with the oracle
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from errors import ParseError
from generators import ApspOp
from graph_reductions import ORACLES, VertexUpdate
from partially_dynamic import DECREMENTAL, INCREMENTAL, Edge


def _lines(path: str | Path) -> Iterator[Tuple[int, str]]:
    text = Path(path).read_text(encoding="utf-8")
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _ints(path: str, number: int, parts: Sequence[str], count: int, what: str) -> List[int]:
    if len(parts) != count:
        raise ParseError(path, number, f"{what}: expected {count} fields, got {len(parts)}")
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise ParseError(path, number, f"{what}: non-integer field in {' '.join(parts)!r}") from None


# ----------------------------------------------------------------- partial
@dataclass
class PartialScript:
    n: int
    mode: str
    eps: float
    edges: List[Edge]
    ops: List[Tuple[str, int, int]]


def read_partial(path: str | Path) -> PartialScript:
    name = str(path)
    lines = _lines(path)
    try:
        number, header = next(lines)
    except StopIteration:
        raise ParseError(name, 1, "empty script") from None
    fields = header.split()
    if len(fields) != 4:
        raise ParseError(name, number, "header must be 'n m mode eps'")
    n, m = _ints(name, number, fields[:2], 2, "header")
    mode = fields[2]
    if mode not in (INCREMENTAL, DECREMENTAL):
        raise ParseError(name, number, f"unknown mode {mode!r}")
    try:
        eps = math.inf if fields[3] in ("inf", "reach") else float(fields[3])
    except ValueError:
        raise ParseError(name, number, f"bad eps {fields[3]!r}") from None
    edges: List[Edge] = []
    ops: List[Tuple[str, int, int]] = []
    for number, line in lines:
        parts = line.split()
        if len(edges) < m:
            u, v = _ints(name, number, parts, 2, "edge")
            edges.append((u, v))
            continue
        if parts[0] not in ("U", "Q"):
            raise ParseError(name, number, f"unknown operation {parts[0]!r}")
        u, v = _ints(name, number, parts[1:], 2, parts[0])
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(name, number, f"vertex outside [0, {n})")
        ops.append((parts[0], u, v))
    if len(edges) < m:
        raise ParseError(name, number, f"expected {m} edges, found {len(edges)}")
    return PartialScript(n, mode, eps, edges, ops)


def write_partial(path: str | Path, script: PartialScript) -> None:
    eps = "inf" if math.isinf(script.eps) else f"{script.eps:g}"
    lines = [f"{script.n} {len(script.edges)} {script.mode} {eps}"]
    lines += [f"{u} {v}" for u, v in script.edges]
    lines += [f"{kind} {u} {v}" for kind, u, v in script.ops]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -------------------------------------------------------------------- APSP
def _weighted(name: str, number: int, text: str) -> Dict[int, float]:
    out: Dict[int, float] = {}
    text = text.strip()
    if not text:
        return out
    for item in text.split(","):
        try:
            u, w = item.split(":")
            out[int(u)] = float(w)
        except ValueError:
            raise ParseError(name, number, f"bad weighted arc {item.strip()!r}; expected u:w") from None
    return out


def read_apsp(path: str | Path) -> List[ApspOp]:
    name = str(path)
    ops: List[ApspOp] = []
    for number, line in _lines(path):
        kind = line.split(None, 1)[0]
        if kind == "I":
            sections = line[1:].split("|")
            if len(sections) != 3:
                raise ParseError(name, number, "insert must be 'I v key | in-arcs | out-arcs'")
            v, key = _ints(name, number, sections[0].split(), 2, "insert")
            ops.append(ApspOp("I", v, key, _weighted(name, number, sections[1]), _weighted(name, number, sections[2])))
        elif kind == "D":
            (v,) = _ints(name, number, line.split()[1:], 1, "delete")
            ops.append(ApspOp("D", v))
        elif kind == "Q":
            u, v = _ints(name, number, line.split()[1:], 2, "query")
            ops.append(ApspOp("Q", u, other=v))
        else:
            raise ParseError(name, number, f"unknown operation {kind!r}")
    return ops


def write_apsp(path: str | Path, ops: Sequence[ApspOp]) -> None:
    def arcs(d: Dict[int, float]) -> str:
        return ",".join(f"{u}:{w:g}" for u, w in sorted(d.items()))

    lines = []
    for op in ops:
        if op.kind == "I":
            lines.append(f"I {op.vertex} {op.key} | {arcs(op.in_edges)} | {arcs(op.out_edges)}")
        elif op.kind == "D":
            lines.append(f"D {op.vertex}")
        else:
            lines.append(f"Q {op.vertex} {op.other}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ------------------------------------------------------------------ graphs
@dataclass
class GraphScript:
    problem: str
    n: int
    s: int = 0
    t: int = 1
    arcs: List[Edge] = field(default_factory=list)
    predicted: List[VertexUpdate] = field(default_factory=list)
    ops: List[Optional[VertexUpdate]] = field(default_factory=list)


def _nbr_list(name: str, number: int, text: str, label: str) -> frozenset:
    text = text.strip()
    if not text.startswith(label + ":"):
        raise ParseError(name, number, f"expected '{label}:' section")
    body = text[len(label) + 1 :].strip()
    if not body:
        return frozenset()
    try:
        return frozenset(int(x) for x in body.split(","))
    except ValueError:
        raise ParseError(name, number, f"bad {label} list {body!r}") from None


def _vertex_update(name: str, number: int, line: str) -> VertexUpdate:
    sections = line.split("|")
    if len(sections) != 3:
        raise ParseError(name, number, "vertex update must be 'v | in: .. | out: ..'")
    (v,) = _ints(name, number, sections[0].split()[1:], 1, "vertex update")
    return VertexUpdate(v, _nbr_list(name, number, sections[1], "in"), _nbr_list(name, number, sections[2], "out"))


def read_graph(path: str | Path) -> GraphScript:
    name = str(path)
    lines = _lines(path)
    try:
        number, header = next(lines)
    except StopIteration:
        raise ParseError(name, 1, "empty script") from None
    fields = header.split()
    if len(fields) % 2 or not fields or fields[0] != "problem":
        raise ParseError(name, number, "header must be 'problem <kind> n <n> [s <s> t <t>]'")
    opts = dict(zip(fields[::2], fields[1::2]))
    if opts["problem"] not in ORACLES:
        raise ParseError(name, number, f"unknown problem {opts['problem']!r}")
    try:
        script = GraphScript(opts["problem"], int(opts["n"]), int(opts.get("s", 0)), int(opts.get("t", 1)))
    except (KeyError, ValueError):
        raise ParseError(name, number, "header needs an integer 'n'") from None
    for number, line in lines:
        kind = line.split(None, 1)[0]
        if kind == "A":
            u, v = _ints(name, number, line.split()[1:], 2, "arc")
            script.arcs.append((u, v))
        elif kind == "P":
            script.predicted.append(_vertex_update(name, number, line))
        elif kind == "VU":
            script.ops.append(_vertex_update(name, number, line))
        elif kind == "Q":
            script.ops.append(None)
        else:
            raise ParseError(name, number, f"unknown operation {kind!r}")
    return script


def write_graph(path: str | Path, script: GraphScript) -> None:
    def fmt(tag: str, upd: VertexUpdate) -> str:
        ins = ",".join(str(x) for x in sorted(upd.in_nbrs))
        outs = ",".join(str(x) for x in sorted(upd.out_nbrs))
        return f"{tag} {upd.vertex} | in: {ins} | out: {outs}"

    header = f"problem {script.problem} n {script.n}"
    if script.problem == "st_paths":
        header += f" s {script.s} t {script.t}"
    lines = [header]
    lines += [f"A {u} {v}" for u, v in script.arcs]
    lines += [fmt("P", u) for u in script.predicted]
    lines += ["Q" if op is None else fmt("VU", op) for op in script.ops]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


READERS: Dict[str, Callable[[str | Path], object]] = {
    "partial": read_partial,
    "apsp": read_apsp,
    "graphs": read_graph,
}
