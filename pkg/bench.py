"""Benchmark and verification suites.

Every suite replays a seeded workload against one structure, records the
counted work of each operation and compares each answer with an oracle from
``oracles``.  In verification mode the first mismatch raises
``VerificationError``; otherwise the row is marked ``verified = False``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from counters import WorkCounter
from errors import ContractViolation, ParseError, VerificationError
from field_arith import DEFAULT_PRIME
from generators import (
    ErrorModel,
    gen_apsp_workload,
    gen_graph_workload,
    gen_inverse_workload,
    gen_oumv_instance,
    gen_omv_workload,
    partial_workload,
    random_bool_matrix,
    reversed_workload,
)
from graph_reductions import ORACLES, answer, apply_vertex_update, adjacency, make_oracle
from matrix_inverse_pred import PredictedInverse
from omv_pred import omv_preprocess, omv_query
from oracles import (
    bfs_distance,
    bfs_reach,
    det_mod_oracle,
    dfs_cycle,
    fw_apsp,
    matching_exhaustive,
    maxflow_vertex_disjoint,
    omv_answer,
    rank_mod_oracle,
    strongly_connected,
    triangle_cubic,
)
from partially_dynamic import (
    DECREMENTAL,
    INCREMENTAL,
    apply_update,
    error_stats,
    preprocess,
    query_distance,
    query_reachable,
)
from predicted_deletions import FullyDynamicApsp
from robust import FromScratchReachability, PartialDynamicSide, robust_wrap

CSV_COLUMNS = ("op_index", "op_kind", "eta", "counted_work", "wall_ns", "verified")

DEFAULT_N = {
    "omv": 64,
    "partial": 32,
    "oumv": 16,
    "inverse": 16,
    "graphs": 12,
    "apsp-pred": 24,
    "robust": 24,
}
SUITES = tuple(DEFAULT_N)

# sweep parameters that rewrite the error model
_MODEL_SWEEPS = {"w": "linf_window", "k": "swap_count", "q": "unpredicted_rate"}
SWEEP_PARAMS = ("w", "k", "q", "eta", "n", "flips", "eps")

CONFIG_KEYS = ("suite", "n", "trials", "seed", "sweep", "eps", "mode", "problem", "model")

# graph densities that keep both answers of each decision problem likely
_GRAPH_DENSITY = {
    "triangle": 0.35,
    "cycle": 0.06,
    "ssr": 0.15,
    "scc": 0.3,
    "matching": 0.25,
    "st_paths": 0.3,
}


@dataclass
class BenchConfig:
    """Everything that determines a run; two equal configs give equal CSVs."""

    suite: str
    n: Optional[int] = None
    trials: int = 1
    seed: int = 0
    sweep: Optional[Tuple[str, List[float]]] = None
    eps: float = 0.5
    mode: str = INCREMENTAL
    problem: str = "triangle"
    model: str = "exact"
    steps: Optional[int] = None
    jobs: int = 1
    stable: bool = False
    verify: bool = True

    def __post_init__(self) -> None:
        if self.suite not in DEFAULT_N:
            raise ContractViolation(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.mode not in (INCREMENTAL, DECREMENTAL):
            raise ContractViolation(f"unknown mode {self.mode!r}")
        if self.problem not in ORACLES:
            raise ContractViolation(f"unknown problem {self.problem!r}; choose from {', '.join(sorted(ORACLES))}")
        if self.trials < 1:
            raise ContractViolation("trials must be at least 1")

    @property
    def size(self) -> int:
        return self.n if self.n is not None else DEFAULT_N[self.suite]

    def cache_fields(self) -> Dict[str, object]:
        """Fields that change results; jobs and output options do not."""
        out = asdict(self)
        for key in ("jobs", "stable", "verify"):
            out.pop(key)
        return out


def parse_sweep(text: str) -> Tuple[str, List[float]]:
    """Parse ``w=1,2,4`` into ``("w", [1.0, 2.0, 4.0])``."""
    name, sep, values = text.partition("=")
    name = name.strip()
    if not sep or name not in SWEEP_PARAMS:
        raise ContractViolation(f"sweep must be <param>=<v1,v2,...> with param in {', '.join(SWEEP_PARAMS)}")
    try:
        parsed = [float(x) for x in values.split(",") if x.strip()]
    except ValueError:
        raise ContractViolation(f"non-numeric sweep value in {values!r}") from None
    if not parsed:
        raise ContractViolation("sweep needs at least one value")
    return name, parsed


_CONFIG_TYPES: Dict[str, Callable[[str], object]] = {
    "suite": str,
    "n": int,
    "trials": int,
    "seed": int,
    "sweep": parse_sweep,
    "eps": float,
    "mode": str,
    "problem": str,
    "model": str,
}


def load_config_file(path: str | Path) -> Dict[str, object]:
    """Read ``key = value`` lines; values are converted but not validated as a whole."""
    name = str(path)
    values: Dict[str, object] = {}
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ParseError(name, number, f"expected 'key = value', got {line!r}")
        if key not in _CONFIG_TYPES:
            raise ParseError(name, number, f"unknown key {key!r}; allowed: {', '.join(CONFIG_KEYS)}")
        try:
            values[key] = _CONFIG_TYPES[key](value.strip())
        except (ValueError, ContractViolation) as exc:
            raise ParseError(name, number, f"bad value for {key}: {exc}") from exc
    return values


# ------------------------------------------------------------------ records
@dataclass(frozen=True)
class OpRecord:
    op_index: int
    op_kind: str
    eta: int
    counted_work: int
    wall_ns: int
    verified: bool

    def as_row(self) -> List[object]:
        return [self.op_index, self.op_kind, self.eta, self.counted_work, self.wall_ns, str(self.verified).lower()]


@dataclass
class TrialResult:
    trial: int
    records: List[OpRecord] = field(default_factory=list)
    answers: List[object] = field(default_factory=list)
    expected: List[object] = field(default_factory=list)
    stats: Dict[str, float] = field(default_factory=dict)


@dataclass
class RunReport:
    suite: str
    config: Dict[str, object]
    rows: List[OpRecord] = field(default_factory=list)
    answers: List[object] = field(default_factory=list)
    oracle_answers: List[object] = field(default_factory=list)
    error_stats: Dict[str, float] = field(default_factory=dict)
    param: Optional[float] = None

    @property
    def verified(self) -> bool:
        return all(r.verified for r in self.rows)

    @property
    def failures(self) -> List[OpRecord]:
        return [r for r in self.rows if not r.verified]

    def work(self, kind: Optional[str] = None) -> List[int]:
        return [r.counted_work for r in self.rows if kind is None or r.op_kind == kind]

    def mean_work(self, kind: Optional[str] = None) -> float:
        values = self.work(kind)
        return float(np.mean(values)) if values else 0.0

    def to_csv(self, out: TextIO | str | Path, *, header: bool = True) -> None:
        if isinstance(out, (str, Path)):
            Path(out).parent.mkdir(parents=True, exist_ok=True)
            with open(out, "w", encoding="utf-8", newline="") as fh:
                self.to_csv(fh, header=header)
            return
        writer = csv.writer(out, lineterminator="\n")
        if header:
            writer.writerow(CSV_COLUMNS)
        for rec in self.rows:
            writer.writerow(rec.as_row())

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    def rows_as_dicts(self) -> List[Dict[str, object]]:
        return [asdict(r) for r in self.rows]

    @classmethod
    def from_cached(cls, suite: str, config: Dict[str, object], rows: Iterable[Dict[str, object]], param=None) -> "RunReport":
        return cls(suite, config, [OpRecord(**r) for r in rows], param=param)


class _Recorder:
    """Collects one trial's rows and checks answers against the oracle."""

    def __init__(self, suite: str, trial: int, counter: WorkCounter, *, stable: bool, verify: bool) -> None:
        self.suite = suite
        self.result = TrialResult(trial)
        self.counter = counter
        self.stable = stable
        self.verify = verify

    def run(self, kind: str, eta: int, fn: Callable[[], object], *, work: Optional[Callable[[object], int]] = None):
        """Run ``fn`` and record its counted work (or ``work(result)`` when given)."""
        before = self.counter.total
        start = time.perf_counter_ns()
        out = fn()
        wall = 0 if self.stable else time.perf_counter_ns() - start
        spent = work(out) if work is not None else self.counter.total - before
        recs = self.result.records
        recs.append(OpRecord(len(recs), kind, int(eta), int(spent), int(wall), True))
        return out

    def check(self, got: object, expected: object, what: str, ok: Optional[bool] = None) -> None:
        self.result.answers.append(got)
        self.result.expected.append(expected)
        if ok is None:
            ok = got == expected
        if ok:
            return
        recs = self.result.records
        if recs:
            recs[-1] = replace(recs[-1], verified=False)
        message = f"{self.suite} trial {self.result.trial}: {what}: got {got!r}, expected {expected!r}"
        if self.verify:
            raise VerificationError(message)
        logging.warning("%s", message)


# ------------------------------------------------------------------- suites
def _model(cfg: BenchConfig, param: Optional[float], seed: int) -> ErrorModel:
    model = ErrorModel.parse(cfg.model, seed)
    if cfg.sweep and param is not None and cfg.sweep[0] in _MODEL_SWEEPS:
        kind = _MODEL_SWEEPS[cfg.sweep[0]]
        value = param if kind == "unpredicted_rate" else int(param)
        return ErrorModel(kind, value, seed)
    return model


def _sweep_value(cfg: BenchConfig, name: str, param: Optional[float]) -> Optional[float]:
    if cfg.sweep and cfg.sweep[0] == name:
        return param
    return None


def _suite_omv(cfg: BenchConfig, rec: _Recorder, seed: int, param: Optional[float]) -> None:
    n = cfg.size
    model = _model(cfg, param, seed)
    flips = _sweep_value(cfg, "flips", param)
    if flips is None:
        # the error model parameter doubles as the per-query Hamming error
        if model.kind == "unpredicted_rate":
            flips = round(model.param * n)
        else:
            flips = model.param
    wl = gen_omv_workload(n, int(flips), seed)
    state = rec.run("preprocess", 0, lambda: omv_preprocess(wl.matrix, wl.predicted, counter=rec.counter))
    rows = wl.matrix.astype(int).tolist()
    total_l1 = 0
    for vhat, v in zip(wl.predicted, wl.actual):
        eta = v.hamming(vhat)
        total_l1 += eta
        got = rec.run("query", eta, lambda v=v: omv_query(state, v))
        rec.check(got.to_list(), omv_answer(rows, v.to_list()), "M·v")
    rec.check(state.work, n * total_l1, "column work equals n·Σ‖v−v̂‖₁")
    rec.result.stats.update(eta_l1=total_l1, eta_inf=int(flips))


def _suite_partial(cfg: BenchConfig, rec: _Recorder, seed: int, param: Optional[float]) -> None:
    n = cfg.size
    model = _model(cfg, param, seed)
    eps = _sweep_value(cfg, "eps", param) or cfg.eps
    # a w sweep queries each window once, at its largest displacement
    placement = "peak" if _sweep_value(cfg, "w", param) is not None else "random"
    predicted, script = partial_workload(n, 3 * n, model, seed=seed, mode=cfg.mode, placement=placement)
    state = rec.run("preprocess", 0, lambda: preprocess(predicted, eps, cfg.mode, n=n, counter=rec.counter))
    edges = set() if cfg.mode == INCREMENTAL else set(predicted)
    etas: List[int] = []
    for kind, a, b in script:
        if kind == "U":
            rec.run("update", 0, lambda: apply_update(state, (a, b)))
            if cfg.mode == INCREMENTAL:
                edges.add((a, b))
            else:
                edges.discard((a, b))
            continue
        eta = error_stats(state).eta_bar
        etas.append(eta)
        reach = rec.run("query", eta, lambda: query_reachable(state, a, b))
        rec.check(reach, b in bfs_reach(n, edges, a), f"reach({a}, {b})")
        if not math.isinf(eps):
            dist = rec.run("distance", eta, lambda: query_distance(state, a, b))
            true = bfs_distance(n, edges, a, b)
            ok = dist is None if true is None else dist is not None and true <= dist <= (1 + eps) * true
            rec.check(dist, true, f"dist({a}, {b}) within (1+{eps:g})", ok)
    rec.result.stats.update(eta_max=max(etas, default=0), eta_mean=float(np.mean(etas)) if etas else 0.0)


def _suite_oumv(cfg: BenchConfig, rec: _Recorder, seed: int, param: Optional[float]) -> None:
    n = cfg.size
    rng = np.random.default_rng(seed)
    m = random_bool_matrix(n, 0.3, rng)
    wl = gen_oumv_instance(m, seed=seed, mode=cfg.mode)
    rec.check(wl.eta_inf <= 2 * n, True, f"eta_inf {wl.eta_inf} <= 2n")
    state = rec.run("preprocess", 0, lambda: preprocess(wl.predicted, math.inf, cfg.mode, n=4 * n, counter=rec.counter))
    answers = iter(wl.expected)
    for kind, a, b in wl.script:
        if kind == "U":
            rec.run("update", 0, lambda: apply_update(state, (a, b)))
            continue
        eta = error_stats(state).eta_bar
        got = rec.run("query", eta, lambda: query_reachable(state, a, b))
        rec.check(got, next(answers), f"u^T M v via reach({a}, {b})")
    rec.result.stats.update(eta_inf=wl.eta_inf)


def _suite_inverse(cfg: BenchConfig, rec: _Recorder, seed: int, param: Optional[float]) -> None:
    n = cfg.size
    p = DEFAULT_PRIME
    steps = cfg.steps or 2 * n
    model = _model(cfg, param, seed)
    forced = _sweep_value(cfg, "eta", param)
    # rank drops add gadget flips to the schedule, so a forced sweep keeps M invertible
    singular_rate = 0.0 if forced is not None else 0.25
    wl = gen_inverse_workload(n, steps, model, seed=seed, p=p, singular_rate=singular_rate)
    ds = rec.run(
        "preprocess",
        0,
        lambda: PredictedInverse(wl.matrix, wl.predicted, p=p, seed=seed, counter=rec.counter),
    )
    shadow = [[int(x) for x in row] for row in wl.matrix]
    extra = iter(wl.extra)
    etas: List[int] = []
    for j in range(steps):
        if forced is not None:
            eta = max(1, min(int(forced), len(ds.queue)))
        elif wl.order.unpredicted[j]:
            u, v = next(extra)
            rec.run("append", 0, lambda: ds.append_update(u, v))
            eta = len(ds.queue)
        else:
            eta = ds.queue.position(wl.order.perm[j])
        item = ds.queue.head(eta)[-1]
        before = [row[:] for row in shadow]
        res = rec.run("update", eta, lambda: ds.perform_update(eta), work=lambda r: r.cost)
        if res.restart_cost:
            rec.result.records.append(
                OpRecord(len(rec.result.records), "restart", 0, res.restart_cost, 0, True)
            )
        etas.append(eta)
        for a in range(n):
            if item.u[a]:
                shadow[a] = [(x + int(item.u[a]) * int(y)) % p for x, y in zip(shadow[a], item.v)]
        rank, det = rank_mod_oracle(shadow, p), det_mod_oracle(shadow, p)
        rec.check((res.rank, res.det), (rank, det), f"rank/det after step {j}")
        if res.row is not None:
            vt = [int(x) % p for x in item.v]
            product = [sum(int(res.row[a]) * before[a][c] for a in range(n)) % p for c in range(n)]
            rec.check(product, vt, f"returned row times M at step {j}")
    rec.result.stats.update(eta_max=max(etas, default=0), eta_mean=float(np.mean(etas)) if etas else 0.0)


def graph_answer(problem: str, n: int, adj: np.ndarray, s: int, t: int) -> object:
    arcs = [(int(u), int(v)) for u, v in zip(*np.nonzero(adj))]
    if problem == "triangle":
        return triangle_cubic(n, [(u, v) for u, v in arcs if u < v])
    if problem == "cycle":
        return dfs_cycle(n, arcs)
    if problem == "ssr":
        return frozenset(bfs_reach(n, arcs, s))
    if problem == "scc":
        return strongly_connected(n, arcs)
    if problem == "matching":
        return matching_exhaustive(n, [(u, v) for u, v in arcs if u < v])
    return maxflow_vertex_disjoint(n, arcs, s, t)


def _suite_graphs(cfg: BenchConfig, rec: _Recorder, seed: int, param: Optional[float]) -> None:
    n = cfg.size
    problem = cfg.problem
    directed = ORACLES[problem].directed
    steps = cfg.steps or 2 * n
    model = _model(cfg, param, seed)
    forced = _sweep_value(cfg, "eta", param)
    wl = gen_graph_workload(n, steps, model, seed=seed, density=_GRAPH_DENSITY[problem], directed=directed)
    s, t = 0, n - 1
    extra: Dict[str, object] = {"seed": seed, "counter": rec.counter}
    if problem == "ssr":
        extra["source"] = s
    elif problem == "st_paths":
        extra.update(s=s, t=t)
    oracle = rec.run("preprocess", 0, lambda: make_oracle(problem, n, wl.arcs, wl.predicted, **extra))
    adj = adjacency(n, wl.arcs, directed=directed)
    rec.check(answer(oracle), graph_answer(problem, n, adj, s, t), "initial answer")
    for j, (update, predicted) in enumerate(wl.realized()):
        if forced is not None:
            eta = max(1, min(int(forced), oracle.queue_length))
            update = oracle.queued_update(eta)
            rec.run("vertex_update", eta, lambda: oracle.perform_update(eta))
        elif predicted:
            eta = oracle.position_of(update)
            rec.run("vertex_update", eta, lambda: oracle.perform_update(eta))
        else:
            eta = oracle.queue_length + 1
            rec.run("vertex_update", eta, lambda: oracle.vertex_update(update))
        apply_vertex_update(adj, update, directed=directed)
        rec.check(answer(oracle), graph_answer(problem, n, adj, s, t), f"{problem} after step {j}")
    rec.result.stats.update(eta_inf=wl.order.eta_inf, eta_l1=wl.order.eta_l1)


def _suite_apsp(cfg: BenchConfig, rec: _Recorder, seed: int, param: Optional[float]) -> None:
    n = cfg.size
    model = _model(cfg, param, seed)
    ops = gen_apsp_workload(n, model, seed=seed)
    fd = FullyDynamicApsp(rec.counter, check=cfg.verify)
    live: List[int] = []
    arcs: Dict[Tuple[int, int], float] = {}
    etas: List[int] = []
    for op in ops:
        if op.kind == "I":
            rec.run("insert", 0, lambda: fd.insert_vertex(op.vertex, op.key, op.in_edges, op.out_edges))
            live.append(op.vertex)
            arcs.update({(u, op.vertex): w for u, w in op.in_edges.items()})
            arcs.update({(op.vertex, u): w for u, w in op.out_edges.items()})
        elif op.kind == "D":
            report = rec.run("delete", 0, lambda: fd.delete_vertex(op.vertex))
            rec.result.records[-1] = replace(rec.result.records[-1], eta=report.measured_eta)
            etas.append(report.measured_eta)
            rec.check(report.rewinds, report.measured_eta + 1, "rewinds <= measured eta + 1", report.rewinds <= report.measured_eta + 1)
            live.remove(op.vertex)
            arcs = {k: w for k, w in arcs.items() if op.vertex not in k}
        else:
            got = rec.run("query", 0, lambda: fd.distance(op.vertex, op.other))
            rec.check(got, fw_apsp(live, arcs)[(op.vertex, op.other)], f"dist({op.vertex}, {op.other})")
            continue
        if cfg.verify:
            rec.check(fd.apsp.snapshot(), fw_apsp(live, arcs), f"distance matrix after {op.kind} {op.vertex}")
    rec.result.stats.update(eta_max=max(etas, default=0), gamma=fd.gamma)


def _suite_robust(cfg: BenchConfig, rec: _Recorder, seed: int, param: Optional[float]) -> None:
    n = cfg.size
    if cfg.model == "reversed":
        predicted, script = reversed_workload(n, 3 * n, seed=seed)
    else:
        predicted, script = partial_workload(n, 3 * n, _model(cfg, param, seed), seed=seed)
    first = PartialDynamicSide.build(predicted, n)
    second = FromScratchReachability(n)
    combined = robust_wrap(first, second, slice_units=8)
    edges: set = set()
    for kind, a, b in script:
        step = rec.run(kind, 0, lambda: combined.apply((kind, a, b)), work=lambda s: s.combined_work)
        if kind == "U":
            edges.add((a, b))
        else:
            rec.check(step.answer, b in bfs_reach(n, edges, a), f"robust reach({a}, {b})")
    bound = combined.bound()
    rec.check(combined.combined, bound, "combined work within 2·min + overhead", combined.combined <= bound)
    rec.result.stats.update(
        predicted_work=combined.totals[0],
        baseline_work=combined.totals[1],
        combined_work=combined.combined,
    )


SUITE_RUNNERS: Dict[str, Callable[[BenchConfig, _Recorder, int, Optional[float]], None]] = {
    "omv": _suite_omv,
    "partial": _suite_partial,
    "oumv": _suite_oumv,
    "inverse": _suite_inverse,
    "graphs": _suite_graphs,
    "apsp-pred": _suite_apsp,
    "robust": _suite_robust,
}


# ------------------------------------------------------------------ running
def trial_seed(seed: int, trial: int) -> int:
    return seed + 7919 * trial


def _run_trial(cfg: BenchConfig, trial: int, param: Optional[float]) -> TrialResult:
    if cfg.sweep and cfg.sweep[0] == "n" and param is not None:
        cfg = replace(cfg, n=int(param))
    rec = _Recorder(cfg.suite, trial, WorkCounter(), stable=cfg.stable, verify=cfg.verify)
    SUITE_RUNNERS[cfg.suite](cfg, rec, trial_seed(cfg.seed, trial), param)
    return rec.result


def run_benchmark(
    config: BenchConfig,
    param: Optional[float] = None,
    *,
    progress: Callable[[Iterable], Iterable] | None = None,
) -> RunReport:
    """Run every trial of ``config`` (at one sweep point) and merge by trial id."""
    results: Dict[int, TrialResult] = {}
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as executor:
            future_map = {executor.submit(_run_trial, config, t, param): t for t in range(config.trials)}
            done = as_completed(future_map)
            for future in progress(done) if progress else done:
                results[future_map[future]] = future.result()
    else:
        trials = range(config.trials)
        for t in progress(trials) if progress else trials:
            results[t] = _run_trial(config, t, param)

    report = RunReport(config.suite, config.cache_fields(), param=param)
    stats: Dict[str, List[float]] = {}
    for t in sorted(results):
        res = results[t]
        offset = len(report.rows)
        report.rows.extend(replace(r, op_index=offset + r.op_index) for r in res.records)
        report.answers.extend(res.answers)
        report.oracle_answers.extend(res.expected)
        for key, value in res.stats.items():
            stats.setdefault(key, []).append(float(value))
    report.error_stats = {k: max(v) if k.endswith("_max") or k == "gamma" else float(np.mean(v)) for k, v in stats.items()}
    logging.info(
        "%s: %d trials, %d operations, %d unverified",
        config.suite,
        config.trials,
        len(report.rows),
        len(report.failures),
    )
    return report


def sweep_kind(suite: str) -> Optional[str]:
    """Operation kind whose work is fitted against the sweep parameter."""
    return {
        "omv": "query",
        "partial": "query",
        "oumv": "query",
        "inverse": "update",
        "graphs": "vertex_update",
        "apsp-pred": "delete",
        "robust": None,
    }[suite]


# ------------------------------------------------------------------- trends
def fit_power_law(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Exponent alpha of y ≈ c·x^alpha by least squares in log-log space."""
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        raise ContractViolation("need at least two positive points to fit a power law")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def fit_affine(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float, float]:
    """(slope, intercept, r²) of the least-squares line through the points."""
    if len(xs) < 2:
        raise ContractViolation("need at least two points to fit a line")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / total if total else 1.0
    return float(slope), float(intercept), r2


def fit_excess_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Power-law exponent of y minus the intercept of its affine fit.

    For y = a + b·x this is 1 whatever the size of the constant a.
    """
    _, intercept, _ = fit_affine(xs, ys)
    return fit_power_law(xs, [y - intercept for y in ys])


def write_csv(reports: Sequence[RunReport], out: TextIO | str | Path) -> None:
    """Write one CSV with op_index running across every report."""
    rows: List[OpRecord] = []
    for rep in reports:
        offset = len(rows)
        rows.extend(replace(r, op_index=offset + i) for i, r in enumerate(rep.rows))
    merged = RunReport(reports[0].suite if reports else "", {}, rows)
    merged.to_csv(out)
