import json
import os
import sys
from pathlib import Path

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
import dynoracle
from cache import ResultCache

ROWS = [{"op_index": 0, "op_kind": "query", "eta": 1, "counted_work": 8, "wall_ns": 0, "verified": True}]


def test_points_survive_reload(tmp_path: Path) -> None:
    cache_file = tmp_path / "nested" / "sweep.json"
    cache = ResultCache(cache_file)
    key = ResultCache.point_key("partial", {"n": 8, "seed": 1}, 2.0)
    cache.record(key, ROWS)

    again = ResultCache(cache_file)
    assert key in again and len(again) == 1
    assert again.rows(key) == ROWS
    assert set(json.loads(cache_file.read_text())) == {"points", "fits"}


def test_point_key_depends_on_fields_and_point() -> None:
    a = ResultCache.point_key("inverse", {"n": 16, "model": "exact"}, 1.0)
    b = ResultCache.point_key("inverse", {"model": "exact", "n": 16}, 1.0)
    assert a == b and a.startswith("inverse:")
    assert a != ResultCache.point_key("inverse", {"n": 16, "model": "exact"}, 2.0)
    assert a != ResultCache.point_key("inverse", {"n": 17, "model": "exact"}, 1.0)
    assert ResultCache.point_key("omv", {}, None) != ResultCache.point_key("omv", {}, 0.0)


def test_clear_forgets_points_and_fits(tmp_path: Path) -> None:
    cache = ResultCache(tmp_path / "c.json")
    cache.record("omv:abc", ROWS)
    cache.record_fit("query vs flips", {"exponent": 1.0})
    cache.clear()
    assert len(ResultCache(tmp_path / "c.json")) == 0
    assert cache.fit("query vs flips") is None


def test_corrupt_file_starts_empty(tmp_path: Path, caplog) -> None:
    cache_file = tmp_path / "cache.json"
    cache_file.write_text("{not json", encoding="utf-8")
    cache = ResultCache(cache_file)
    assert len(cache) == 0
    assert "unreadable result cache" in caplog.text


def test_bench_records_trend_fit(tmp_path: Path) -> None:
    out = tmp_path / "omv.csv"
    argv = ["bench", "omv", "--n", "8", "--sweep", "flips=1,2,4", "--csv", str(out), "--stable"]
    assert dynoracle.main(argv) == 0
    cache = ResultCache(str(out) + ".cache.json")
    assert len(cache) == 3
    fit = cache.fit("query vs flips")
    assert fit is not None and {"exponent", "slope", "intercept", "r2"} <= set(fit)


def test_resume_without_sweep(tmp_path: Path, capsys) -> None:
    out = tmp_path / "one.csv"
    argv = ["bench", "partial", "--n", "6", "--csv", str(out), "--stable"]
    assert dynoracle.main(argv) == 0
    capsys.readouterr()
    assert dynoracle.main(argv + ["--resume"]) == 0
    assert "skipping cached sweep point (no sweep)" in capsys.readouterr().err
