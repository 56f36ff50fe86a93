"""Command line entry point for the prediction-based dynamic structures.

``dynoracle verify <suite>``     run a suite with oracle checks after every operation
``dynoracle bench <suite>``      sweep a parameter, write CSV rows and fitted trends
``dynoracle generate <kind>``    write a seeded workload script
``dynoracle replay <kind> <f>``  run a workload script and check every answer
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

try:  # optional dependency
    from tqdm import tqdm
except ImportError:  # pragma: no cover - fallback when tqdm is missing
    def tqdm(iterable, **kwargs):  # type: ignore
        return iterable

from bench import (
    SUITES,
    BenchConfig,
    RunReport,
    fit_affine,
    fit_excess_exponent,
    fit_power_law,
    graph_answer,
    load_config_file,
    parse_sweep,
    run_benchmark,
    sweep_kind,
    write_csv,
)
from cache import ResultCache
from errors import ContractViolation, ParseError, VerificationError
from generators import (
    ErrorModel,
    gen_apsp_workload,
    gen_graph_workload,
    gen_oumv_instance,
    partial_workload,
    random_bool_matrix,
)
from graph_reductions import ORACLES, answer, apply_vertex_update, adjacency, make_oracle
from oracles import bfs_distance, bfs_reach, fw_apsp
from partially_dynamic import DECREMENTAL, INCREMENTAL, preprocess, replay_script
from predicted_deletions import FullyDynamicApsp
from scripts import (
    GraphScript,
    PartialScript,
    read_apsp,
    read_graph,
    read_partial,
    write_apsp,
    write_graph,
    write_partial,
)

SEED_ENV = "DYNORACLE_SEED"
WORKLOADS = ("partial", "oumv", "apsp", "graphs")


@dataclass
class Config:
    """Configuration parsed from CLI arguments."""

    command: str
    target: str
    seed: int
    n: Optional[int]
    trials: int
    jobs: int
    sweep: Optional[Tuple[str, List[float]]]
    csv: Optional[Path]
    cache: Optional[Path]
    resume: bool
    clear_progress: bool
    stable: bool
    verbose: bool
    eps: Optional[float]
    mode: str
    problem: str
    model: str
    out: Optional[Path]
    script: Optional[Path]


def default_seed(environ: Optional[Dict[str, str]] = None) -> int:
    """Seed from ``DYNORACLE_SEED`` (0 when unset)."""
    env = os.environ if environ is None else environ
    raw = env.get(SEED_ENV)
    if raw is None or not raw.strip():
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"${SEED_ENV}", 1, f"seed must be an integer, got {raw!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynoracle",
        description="Verify and benchmark dynamic graph and matrix structures that use predictions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, help=f"base seed (default: ${SEED_ENV} or 0)")
        p.add_argument("--n", type=int, help="instance size (suite default when omitted)")
        p.add_argument("--mode", choices=[INCREMENTAL, DECREMENTAL], help="partially dynamic mode")
        p.add_argument("--problem", choices=sorted(ORACLES), help="graph problem for the graphs suite")
        p.add_argument("--model", help="error model, e.g. exact, linf_window:4, swap_count:3, unpredicted_rate:0.1")
        p.add_argument("--eps", type=float, help="distance approximation parameter (inf for reachability only)")
        p.add_argument("--verbose", action="store_true", help="enable debug logging")

    def runs(p: argparse.ArgumentParser) -> None:
        p.add_argument("suite", choices=SUITES, help="benchmark suite")
        p.add_argument("--trials", type=int, help="number of independent trials")
        p.add_argument("--jobs", type=int, default=1, help="trials run in parallel")
        p.add_argument("--config", help="key = value file with suite, n, trials, seed, sweep, eps, mode, problem, model")
        p.add_argument("--csv", help="write per-operation rows to this CSV file")
        p.add_argument("--stable", action="store_true", help="write wall_ns as 0 so the CSV is byte-stable")

    verify = sub.add_parser("verify", help="run a suite and compare every answer with an oracle")
    runs(verify)
    common(verify)

    bench = sub.add_parser("bench", help="sweep a parameter and report counted-work trends")
    runs(bench)
    common(bench)
    bench.add_argument("--sweep", help="parameter sweep, e.g. w=1,2,4,8,16")
    bench.add_argument("--no-verify", action="store_true", help="record mismatches instead of failing")
    bench.add_argument("--cache", help="result cache for --resume (default: <csv>.cache.json)")
    bench.add_argument("--resume", action="store_true", help="skip sweep points already in the cache")
    bench.add_argument("--clear-progress", action="store_true", help="forget completed sweep points first")

    generate = sub.add_parser("generate", help="write a seeded workload script")
    generate.add_argument("workload", choices=WORKLOADS, help="workload kind")
    generate.add_argument("--out", required=True, help="destination file")
    common(generate)

    replay = sub.add_parser("replay", help="run a workload script and check every answer")
    replay.add_argument("workload", choices=WORKLOADS, help="script kind (oumv scripts use the partial format)")
    replay.add_argument("script", help="script file")
    common(replay)
    return parser


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


def _merge(args: argparse.Namespace, key: str, file_values: Dict[str, object], default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return file_values.get(key, default)


def _make_config(args: argparse.Namespace) -> Config:
    file_values: Dict[str, object] = {}
    if getattr(args, "config", None):
        file_values = load_config_file(args.config)
    target = getattr(args, "suite", None) or getattr(args, "workload")
    seed = args.seed if args.seed is not None else int(file_values.get("seed", default_seed()))
    raw_sweep = getattr(args, "sweep", None)
    sweep = parse_sweep(raw_sweep) if raw_sweep else file_values.get("sweep")
    csv_path = getattr(args, "csv", None)
    cache_path = getattr(args, "cache", None)
    if cache_path is None and csv_path:
        cache_path = csv_path + ".cache.json"
    return Config(
        command=args.command,
        target=target,
        seed=seed,
        n=_merge(args, "n", file_values, None),
        trials=int(_merge(args, "trials", file_values, 1)),
        jobs=getattr(args, "jobs", 1) or 1,
        sweep=sweep,  # type: ignore[arg-type]
        csv=Path(csv_path) if csv_path else None,
        cache=Path(cache_path) if cache_path else None,
        resume=getattr(args, "resume", False),
        clear_progress=getattr(args, "clear_progress", False),
        stable=getattr(args, "stable", False),
        verbose=args.verbose,
        eps=_optional_float(_merge(args, "eps", file_values, None)),
        mode=str(_merge(args, "mode", file_values, INCREMENTAL)),
        problem=str(_merge(args, "problem", file_values, "triangle")),
        model=str(_merge(args, "model", file_values, "exact")),
        out=Path(args.out) if getattr(args, "out", None) else None,
        script=Path(args.script) if getattr(args, "script", None) else None,
    )


def _bench_config(config: Config, *, verify: bool = True) -> BenchConfig:
    return BenchConfig(
        suite=config.target,
        n=config.n,
        trials=config.trials,
        seed=config.seed,
        sweep=config.sweep,
        eps=config.eps if config.eps is not None else 0.5,
        mode=config.mode,
        problem=config.problem,
        model=config.model,
        jobs=config.jobs,
        stable=config.stable,
        verify=verify,
    )


def _progress(label: str, total: int):
    return lambda items: tqdm(items, desc=label, total=total, disable=total <= 1)


# ----------------------------------------------------------------- commands
def cmd_verify(config: Config) -> int:
    bench = _bench_config(config)
    report = run_benchmark(bench, progress=_progress(f"verify {bench.suite}", bench.trials))
    if config.csv:
        report.to_csv(config.csv)
    print(
        f"{bench.suite}: {len(report.rows)} operations over {bench.trials} trial(s), "
        f"all answers match the oracle"
    )
    for key, value in sorted(report.error_stats.items()):
        print(f"  {key} = {value:g}")
    return 0


def cmd_bench(config: Config, *, verify: bool = True) -> int:
    bench = _bench_config(config, verify=verify)
    cache = ResultCache(str(config.cache)) if config.cache else None
    if cache is not None and (config.clear_progress or not config.resume):
        cache.clear()
    points: List[Optional[float]] = list(bench.sweep[1]) if bench.sweep else [None]
    reports: List[RunReport] = []
    for value in tqdm(points, desc=f"bench {bench.suite}", disable=len(points) <= 1):
        key = ResultCache.point_key(bench.suite, bench.cache_fields(), value)
        if cache is not None and key in cache:
            point = "(no sweep)" if value is None else f"{bench.sweep[0]}={value:g}"
            print(f"[WARN] skipping cached sweep point {point}", file=sys.stderr)
            reports.append(RunReport.from_cached(bench.suite, bench.cache_fields(), cache.rows(key), param=value))
            continue
        report = run_benchmark(bench, value)
        reports.append(report)
        if cache is not None:
            cache.record(key, report.rows_as_dicts())
    if config.csv:
        write_csv(reports, config.csv)
        logging.info("wrote %s", config.csv)

    kind = sweep_kind(bench.suite)
    for rep in reports:
        label = "-" if rep.param is None else f"{bench.sweep[0]}={rep.param:g}"
        print(f"{label}: mean {kind or 'op'} work {rep.mean_work(kind):.1f} over {len(rep.work(kind))} ops")
    if bench.sweep and len(reports) > 1 and kind:
        xs = [float(r.param) for r in reports]
        ys = [r.mean_work(kind) for r in reports]
        try:
            alpha = fit_power_law(xs, ys)
            slope, intercept, r2 = fit_affine(xs, ys)
        except ContractViolation as exc:
            print(f"[WARN] no trend fit: {exc}", file=sys.stderr)
        else:
            print(f"power-law exponent of {kind} work vs {bench.sweep[0]}: {alpha:.3f}")
            print(f"affine fit: slope {slope:.2f}, intercept {intercept:.2f}, r^2 {r2:.3f}")
            fit = {"exponent": alpha, "slope": slope, "intercept": intercept, "r2": r2}
            try:
                fit["excess_exponent"] = fit_excess_exponent(xs, ys)
            except ContractViolation:
                logging.debug("work above the affine intercept is not positive; no excess exponent")
            else:
                print(f"exponent of {kind} work above the intercept: {fit['excess_exponent']:.3f}")
            if cache is not None:
                cache.record_fit(f"{kind} vs {bench.sweep[0]}", fit)
    failures = sum(len(r.failures) for r in reports)
    if failures:
        print(f"{failures} operation(s) disagreed with the oracle", file=sys.stderr)
        return 1
    return 0


def cmd_generate(config: Config) -> int:
    model = ErrorModel.parse(config.model, config.seed)
    kind = config.target
    out = config.out
    if kind == "partial":
        n = config.n or 16
        edges, ops = partial_workload(n, 3 * n, model, seed=config.seed, mode=config.mode)
        eps = config.eps if config.eps is not None else 0.5
        write_partial(out, PartialScript(n, config.mode, eps, edges, ops))
    elif kind == "oumv":
        n = config.n or 8
        m = random_bool_matrix(n, 0.3, np.random.default_rng(config.seed))
        wl = gen_oumv_instance(m, seed=config.seed, mode=config.mode)
        write_partial(out, PartialScript(4 * n, config.mode, math.inf, wl.predicted, wl.script))
    elif kind == "apsp":
        write_apsp(out, gen_apsp_workload(config.n or 12, model, seed=config.seed))
    else:
        n = config.n or 8
        directed = ORACLES[config.problem].directed
        wl = gen_graph_workload(n, 2 * n, model, seed=config.seed, directed=directed)
        ops = []
        for update, _ in wl.realized():
            ops += [update, None]
        write_graph(out, GraphScript(config.problem, n, 0, n - 1, wl.arcs, wl.predicted, ops))
    print(f"wrote {kind} workload to {out}")
    return 0


def _replay_partial(config: Config) -> int:
    script = read_partial(config.script)
    eps = config.eps if config.eps is not None else script.eps
    state = preprocess(script.edges, eps, script.mode, n=script.n)
    answers = replay_script(state, script.ops)
    edges = set() if script.mode == INCREMENTAL else set(script.edges)
    answers_iter = iter(answers)
    for index, (kind, a, b) in enumerate(script.ops):
        if kind == "U":
            if script.mode == INCREMENTAL:
                edges.add((a, b))
            else:
                edges.discard((a, b))
            continue
        reach, dist = next(answers_iter)
        if reach != (b in bfs_reach(script.n, edges, a)):
            raise VerificationError(f"op {index}: reach({a}, {b}) = {reach} disagrees with BFS")
        if dist is not None or not math.isinf(eps):
            true = bfs_distance(script.n, edges, a, b)
            ok = dist is None if true is None else dist is not None and true <= dist <= (1 + eps) * true
            if not ok:
                raise VerificationError(f"op {index}: dist({a}, {b}) = {dist}, true distance {true}")
        print(f"Q {a} {b}: reachable={str(reach).lower()} distance={'-' if dist is None else dist}")
    return 0


def _replay_apsp(config: Config) -> int:
    fd = FullyDynamicApsp(check=True)
    live: List[int] = []
    arcs: Dict[Tuple[int, int], float] = {}
    for index, op in enumerate(read_apsp(config.script)):
        if op.kind == "I":
            fd.insert_vertex(op.vertex, op.key, op.in_edges, op.out_edges)
            live.append(op.vertex)
            arcs.update({(u, op.vertex): w for u, w in op.in_edges.items()})
            arcs.update({(op.vertex, u): w for u, w in op.out_edges.items()})
        elif op.kind == "D":
            report = fd.delete_vertex(op.vertex)
            live.remove(op.vertex)
            arcs = {k: w for k, w in arcs.items() if op.vertex not in k}
            print(f"D {op.vertex}: eta={report.measured_eta} rewinds={report.rewinds}")
        else:
            got = fd.distance(op.vertex, op.other)
            want = fw_apsp(live, arcs)[(op.vertex, op.other)]
            if got != want:
                raise VerificationError(f"op {index}: dist({op.vertex}, {op.other}) = {got}, expected {want}")
            print(f"Q {op.vertex} {op.other}: {got:g}")
    return 0


def _replay_graphs(config: Config) -> int:
    script = read_graph(config.script)
    kwargs: Dict[str, object] = {"seed": config.seed}
    if script.problem == "ssr":
        kwargs["source"] = script.s
    elif script.problem == "st_paths":
        kwargs.update(s=script.s, t=script.t)
    oracle = make_oracle(script.problem, script.n, script.arcs, script.predicted, **kwargs)
    directed = ORACLES[script.problem].directed
    adj = adjacency(script.n, script.arcs, directed=directed)
    for index, update in enumerate(script.ops):
        if update is not None:
            try:
                oracle.perform_update(oracle.position_of(update))
            except KeyError:
                oracle.vertex_update(update)
            apply_vertex_update(adj, update, directed=directed)
            continue
        got = answer(oracle)
        want = graph_answer(script.problem, script.n, adj, script.s, script.t)
        if got != want:
            raise VerificationError(f"op {index}: {script.problem} answer {got!r}, expected {want!r}")
        shown = sorted(got) if isinstance(got, frozenset) else got
        print(f"Q: {script.problem} = {shown}")
    return 0


def cmd_replay(config: Config) -> int:
    runner = {
        "partial": _replay_partial,
        "oumv": _replay_partial,
        "apsp": _replay_apsp,
        "graphs": _replay_graphs,
    }[config.target]
    return runner(config)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _make_config(args)
        if config.command == "verify":
            return cmd_verify(config)
        if config.command == "bench":
            return cmd_bench(config, verify=not args.no_verify)
        if config.command == "generate":
            return cmd_generate(config)
        return cmd_replay(config)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover - CLI
    raise SystemExit(main())
