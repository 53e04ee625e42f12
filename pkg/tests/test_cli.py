import json

import pytest

from lgc_lvof.cli import main
from lgc_lvof.config import ConfigError, ExperimentConfig, parse_seeds, read_config_file, write_config_file

BLOBS = ["--n", "200", "--d", "4", "--c", "3", "--separation", "4", "--labels", "30"]


def run(tmp_path, *args, out="out"):
    return main([*args, *BLOBS, "--out", str(tmp_path / out)])


def test_parse_seeds():
    assert parse_seeds("0-3,7") == [0, 1, 2, 3, 7]
    assert parse_seeds("5") == [5]
    with pytest.raises(ConfigError):
        parse_seeds("4-2")
    with pytest.raises(ConfigError):
        parse_seeds("")


def test_config_validation():
    cfg = ExperimentConfig.from_mapping({"mu": "0.1111111111111111", "k": "7"})
    assert cfg.alphas()[0] == pytest.approx(0.9) and cfg.k == 7
    assert ExperimentConfig.from_mapping({"alpha": "0.99,0.9"}).alphas() == [0.99, 0.9]
    for bad in ({"k": "0"}, {"alpha": "1.0"}, {"mu": "-1"}, {"bogus": "1"}, {"k": "x"}, {"dataset": "csv"},
                {"filter": "ldst", "rule": "q_threshold"}, {"sigma": "-2"}, {"tau": "0"}):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping(bad)


def test_config_file_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_mapping({"k": "9", "seeds": "1-3", "filter": "ldst"})
    write_config_file(tmp_path / "c.cfg", cfg)
    assert ExperimentConfig.from_mapping(read_config_file(tmp_path / "c.cfg")) == cfg
    assert cfg.digest() == ExperimentConfig.from_mapping({"k": 9, "seeds": "1-3", "filter": "ldst", "jobs": 4}).digest()


def test_graph_build_defaults_and_determinism(tmp_path):
    assert run(tmp_path, "graph", "build") == 0
    meta = json.loads((tmp_path / "out" / "graph.json").read_text())
    assert meta["k"] == 15
    assert meta["sigma_mode"] == "heuristic" and meta["sigma"] > 0
    first = (tmp_path / "out" / "graph.txt").read_bytes()
    assert first.splitlines()[0].split()[:2] == [b"200", b"15"]
    assert run(tmp_path, "graph", "build") == 0
    assert (tmp_path / "out" / "graph.txt").read_bytes() == first


def test_graph_fixed_sigma(tmp_path):
    assert run(tmp_path, "graph", "build", "--sigma", "2.5", "--k", "5") == 0
    meta = json.loads((tmp_path / "out" / "graph.json").read_text())
    assert meta["sigma"] == 2.5 and meta["k"] == 5


def test_filter_none(tmp_path):
    assert run(tmp_path, "filter", "run", "--filter", "none") == 0
    res = json.loads((tmp_path / "out" / "filter_result.json").read_text())
    assert res["steps"] == [] and res["method"] == "none"


def test_filter_threshold_on_clean_data(tmp_path):
    code = main(["filter", "run", "--n", "300", "--d", "5", "--c", "3", "--separation", "20",
                 "--labels", "30", "--noise", "0", "--rule", "q_threshold", "--tau", "0.8",
                 "--out", str(tmp_path / "out")])
    assert code == 0
    res = json.loads((tmp_path / "out" / "filter_result.json").read_text())
    assert res["stop_reason"] == "threshold_reached" and res["steps"] == []


def test_filter_cache_reuse(tmp_path, capsys):
    assert run(tmp_path, "filter", "run", "--seeds", "4") == 0
    first = (tmp_path / "out" / "filter_result.json").read_text()
    res = json.loads(first)
    assert len(res["steps"]) == 6 == len(res["trial"]["corrupted_indices"])
    assert list((tmp_path / "out" / "cache").glob("ptilde-*.npz"))
    capsys.readouterr()
    assert run(tmp_path, "filter", "run", "--seeds", "4") == 0
    assert "loaded cached propagation submatrix" in capsys.readouterr().out
    assert (tmp_path / "out" / "filter_result.json").read_text() == first


def test_ldst_refused_beyond_guard(tmp_path, capsys):
    assert run(tmp_path, "filter", "run", "--filter", "ldst", "--dense-guard", "100") == 3
    assert "dense" in capsys.readouterr().err
    assert run(tmp_path, "bench", "--filter", "ldst", "--dense_guard", "100") == 3


def test_ldst_filter_runs_within_guard(tmp_path):
    assert run(tmp_path, "filter", "run", "--filter", "ldst", "--budget", "3") == 0
    res = json.loads((tmp_path / "out" / "filter_result.json").read_text())
    assert res["method"] == "ldst" and len(res["steps"]) == 3


def test_classify(tmp_path):
    assert run(tmp_path, "classify", "--correction", "replace") == 0
    summary = json.loads((tmp_path / "out" / "classify.json").read_text())
    assert 0 <= summary["unlabeled_accuracy"] <= 1
    lines = (tmp_path / "out" / "predictions.csv").read_text().splitlines()
    assert lines[0] == "index,predicted,true,labeled" and len(lines) == 201


def test_bench_twenty_seeds(tmp_path):
    assert run(tmp_path, "bench", "--seeds", "0-19") == 0
    out = tmp_path / "out"
    curves = sorted(p.name for p in (out / "curves").glob("*.csv"))
    assert len(curves) == 20 and "seed19.csv" in curves
    report = json.loads((out / "report.json").read_text())
    agg = report["runs"][0]["aggregate"]
    assert agg["trial_count"] == 20 and "unlabeled_accuracy" in agg["std"]
    assert report["config"]["seeds"] == "0-19" and len(report["input_hash"]) == 64
    assert (out / "trials.csv").read_text().startswith("seed,metric,value")


def test_bench_single_seed_has_no_std(tmp_path):
    assert run(tmp_path, "bench", "--seeds", "3") == 0
    agg = json.loads((tmp_path / "out" / "report.json").read_text())["runs"][0]["aggregate"]
    assert agg["trial_count"] == 1 and agg["std"] == {}


def test_bench_rerun_identical_and_jobs_irrelevant(tmp_path):
    assert run(tmp_path, "bench", "--seeds", "0-3", "--alpha", "0.99,0.9") == 0
    first = (tmp_path / "out" / "report.json").read_text()
    assert run(tmp_path, "bench", "--seeds", "0-3", "--alpha", "0.99,0.9") == 0
    assert (tmp_path / "out" / "report.json").read_text() == first
    report = json.loads(first)
    assert [r["alpha"] for r in report["runs"]] == [0.99, 0.9]
    assert report["best"]["alpha"] in (0.99, 0.9)
    assert len(list((tmp_path / "out" / "curves").glob("alpha0.99_seed*.csv"))) == 4
    assert run(tmp_path, "bench", "--seeds", "0-3", "--alpha", "0.99,0.9", "--jobs", "3", out="par") == 0
    par = json.loads((tmp_path / "par" / "report.json").read_text())
    assert par["runs"] == report["runs"] and par["input_hash"] == report["input_hash"]


def test_bench_trial_crash_leaves_partial_file(tmp_path):
    assert run(tmp_path, "bench", "--seeds", "0-1", "--budget", "31") == 3
    partial = json.loads((tmp_path / "out" / "report.partial.json").read_text())
    assert "error" in partial and not (tmp_path / "out" / "report.json").exists()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# small run\nn = 200\nd = 4\nc = 3\nlabels = 30\nseeds = 0-1\nk = 8\n")
    out = str(tmp_path / "out")
    assert main(["bench", "--config", str(cfg), "--k", "6", "--out", out]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["config"]["k"] == 6 and report["config"]["labels"] == 30


def test_exit_codes(tmp_path):
    assert main(["bench", "--k", "0", "--out", str(tmp_path)]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["bench", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["graph", "build", "--dataset", "csv", "--path", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("x,label\n1,a\n,b\n")
    assert main(["graph", "build", "--dataset", "csv", "--path", str(bad), "--out", str(tmp_path)]) == 2
