"""Command-line front end.

Subcommands: ``graph build``, ``filter run``, ``classify`` and ``bench``.
Exit codes: 0 success, 1 usage or config error, 2 data error, 3 guard
violation or internal failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import dataset as ds
from .config import ConfigError, ExperimentConfig, read_config_file
from .evaluation import (
    accuracy_split,
    aggregate,
    embed_filter_and_classify,
    precision_curve,
    run_trial,
    write_curve_csv,
    write_trials_csv,
)
from .graph import build_symmetric_knn_rbf, knn_search, load_graph, s_matrix, save_graph, sigma_heuristic
from .lgc import DenseGuardError, LgcParams, PropagationSubmatrix, propagation_submatrix
from .lvo_filter import FilterResult, StoppingRule, run_filter
from .ldst import run_ldst_filter

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_GUARD = 0, 1, 2, 3


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_via(path, writer):
    """Let ``writer(tmp_path)`` produce the file, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_dataset(cfg):
    if cfg.dataset == "blobs":
        return ds.generate_gaussian_blobs(cfg.n, cfg.d, cfg.c, cfg.separation, cfg.data_seed)
    if cfg.dataset == "csv":
        return ds.load_dense_csv(cfg.path, cfg.label_column)
    return ds.load_idx(cfg.path, cfg.labels_path)


def dataset_hash(data):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data.features).tobytes())
    h.update(np.ascontiguousarray(data.true_classes).tobytes())
    return h.hexdigest()


def build_graph(cfg, data):
    t0 = time.perf_counter()
    m = min(10, data.n - 1)
    idx, dist = knn_search(data.features, max(cfg.k, m))
    t_knn = time.perf_counter() - t0
    sigma = sigma_heuristic(data.features, dist) if cfg.sigma == "heuristic" else float(cfg.sigma)
    if not sigma > 0:
        raise ds.DataFormatError("sigma heuristic is zero: all instances coincide")
    graph = build_symmetric_knn_rbf(data.features, cfg.k, sigma, neighbors=idx)
    meta = {
        "n": data.n,
        "k": cfg.k,
        "sigma": sigma,
        "sigma_mode": cfg.sigma,
        "edges": int(graph.weights.nnz // 2),
        "dataset_hash": dataset_hash(data),
        "graph_hash": graph.content_hash(),
        "timings": {"knn_seconds": t_knn, "total_seconds": time.perf_counter() - t0},
    }
    return graph, meta


def resolve_graph(cfg, data, log=print):
    """Reuse ``out/graph.txt`` when its metadata matches this dataset and k/sigma setting."""
    out = Path(cfg.out)
    gpath, mpath = out / "graph.txt", out / "graph.json"
    if gpath.exists() and mpath.exists():
        meta = json.loads(mpath.read_text(encoding="utf-8"))
        if (
            meta.get("dataset_hash") == dataset_hash(data)
            and meta.get("k") == cfg.k
            and meta.get("sigma_mode") == cfg.sigma
        ):
            graph = load_graph(gpath)
            if graph.content_hash() == meta.get("graph_hash"):
                log(f"using graph {gpath}")
                return graph
    graph, meta = build_graph(cfg, data)
    _atomic_via(gpath, lambda p: save_graph(p, graph))
    _atomic_write(mpath, _dump(meta))
    log(f"built graph: n={meta['n']} k={meta['k']} sigma={meta['sigma']:.6g} edges={meta['edges']}")
    return graph


def make_rule(cfg, noise_count):
    if cfg.rule == "q_threshold":
        return StoppingRule.q_threshold(cfg.tau)
    budget = noise_count if cfg.budget == "noise" else int(cfg.budget)
    return StoppingRule.fixed_count(budget)


def trial_assignment(cfg, data, seed):
    sample_seed, corrupt_seed = ds.trial_seeds(seed)
    if cfg.protocol == "fixed":
        sample_seed = ds.trial_seeds(cfg.seed_list()[0])[0]
    clean = ds.sample_labels(data, cfg.labels, sample_seed)
    return ds.corrupt_labels(clean, cfg.noise, corrupt_seed)


def cached_submatrix(cfg, graph, s, assignment, alpha, log=print):
    params = LgcParams(alpha, cfg.tolerance, cfg.max_iterations)
    key = hashlib.sha256(
        "|".join(
            [
                graph.content_hash(),
                hashlib.sha256(assignment.labeled_indices.tobytes()).hexdigest(),
                repr(float(alpha)),
                repr(float(cfg.tolerance)),
            ]
        ).encode()
    ).hexdigest()[:32]
    path = Path(cfg.out) / "cache" / f"ptilde-{key}.npz"
    if path.exists():
        log(f"loaded cached propagation submatrix {path.name}")
        return PropagationSubmatrix.load(path)
    p = propagation_submatrix(s, assignment.labeled_indices, params)
    _atomic_via(path, p.save)
    log(f"computed propagation submatrix: l={p.l} iterations={p.iterations_used} converged={p.converged}")
    return p


def _check_guard(cfg, n):
    if n > cfg.dense_guard:
        raise DenseGuardError(
            f"ldst needs the dense {n} x {n} propagation matrix, above the dense_guard of {cfg.dense_guard}; "
            "use the lvo filter, which only stores the labeled block"
        )


def cmd_graph_build(cfg):
    data = load_dataset(cfg)
    graph, meta = build_graph(cfg, data)
    out = Path(cfg.out)
    _atomic_via(out / "graph.txt", lambda p: save_graph(p, graph))
    _atomic_write(out / "graph.json", _dump(meta))
    print(f"wrote {out / 'graph.txt'} (n={meta['n']}, k={meta['k']}, sigma={meta['sigma']:.6g}, edges={meta['edges']})")
    return EXIT_OK


def run_configured_filter(cfg, data, graph, s, assignment, record, alpha):
    rule = make_rule(cfg, len(record.corrupted_indices))
    if cfg.filter == "none":
        return FilterResult(method="none", parameters={"rule": rule.as_dict()})
    if cfg.filter == "ldst":
        _check_guard(cfg, data.n)
        return run_ldst_filter(s, assignment.indicator(), alpha, rule, max_n=cfg.dense_guard)
    p = cached_submatrix(cfg, graph, s, assignment, alpha)
    result = run_filter(p.values, assignment.labeled_indicator(), rule, assignment.labeled_indices)
    result.parameters.update(alpha=alpha, tolerance=cfg.tolerance, submatrix_converged=p.converged)
    return result


def cmd_filter(cfg):
    data = load_dataset(cfg)
    seed = cfg.seed_list()[0]
    alpha = cfg.alphas()[0]
    assignment, record = trial_assignment(cfg, data, seed)
    if cfg.filter == "none":
        graph = s = None
    else:
        graph = resolve_graph(cfg, data)
        s = s_matrix(graph)
    result = run_configured_filter(cfg, data, graph, s, assignment, record, alpha)
    payload = result.to_dict()
    payload["trial"] = {"seed": seed, "corrupted_indices": sorted(record.corrupted_indices)}
    path = Path(cfg.out) / "filter_result.json"
    _atomic_write(path, _dump(payload))
    curve = precision_curve(result, record)
    hits = curve[-1][1] * len(curve) if curve else 0
    print(f"{result.method}: flagged {len(result)} labels ({result.stop_reason}); "
          f"{int(round(hits))} of them corrupted, {len(record.corrupted_indices)} corrupted in total")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_classify(cfg):
    data = load_dataset(cfg)
    seed = cfg.seed_list()[0]
    alpha = cfg.alphas()[0]
    assignment, record = trial_assignment(cfg, data, seed)
    graph = resolve_graph(cfg, data)
    s = s_matrix(graph)
    if cfg.filter == "ldst":
        _check_guard(cfg, data.n)
    params = LgcParams(alpha, cfg.tolerance, cfg.max_iterations)
    rule = make_rule(cfg, len(record.corrupted_indices))
    pred, result = embed_filter_and_classify(data, assignment, graph, params, rule, cfg.correction, cfg.filter, s=s)
    unlabeled, labeled = accuracy_split(pred, data, assignment)
    out = Path(cfg.out)
    mask = np.zeros(data.n, dtype=bool)
    mask[assignment.labeled_indices] = True
    rows = ["index,predicted,true,labeled"] + [
        f"{i},{int(p)},{int(t)},{int(m)}" for i, (p, t, m) in enumerate(zip(pred, data.true_classes, mask))
    ]
    _atomic_write(out / "predictions.csv", "\n".join(rows) + "\n")
    summary = {
        "seed": seed,
        "alpha": alpha,
        "unlabeled_accuracy": unlabeled,
        "labeled_accuracy": labeled,
        "filter": result.to_dict(),
    }
    _atomic_write(out / "classify.json", _dump(summary))
    ua = "n/a" if unlabeled is None else f"{unlabeled:.4f}"
    print(f"unlabeled accuracy {ua}, labeled accuracy {labeled:.4f} after {len(result)} removals")
    return EXIT_OK


def _bench_trials(cfg, data, s, alpha, seeds):
    params = LgcParams(alpha, cfg.tolerance, cfg.max_iterations)
    fixed = seeds[0] if cfg.protocol == "fixed" else None

    def one(seed):
        rule = None if (cfg.rule == "fixed_count" and cfg.budget == "noise") else make_rule(cfg, 0)
        return run_trial(data, s, seed, cfg.labels, cfg.noise, params, rule, cfg.filter, cfg.correction, fixed)

    if cfg.jobs == 1:
        return [one(sd) for sd in seeds]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(one, seeds))


def cmd_bench(cfg):
    data = load_dataset(cfg)
    if cfg.filter == "ldst":
        _check_guard(cfg, data.n)
    graph = resolve_graph(cfg, data)
    s = s_matrix(graph)
    seeds = cfg.seed_list()
    out = Path(cfg.out)
    alphas = cfg.alphas()
    report = {
        "config": cfg.to_dict(),
        "input_hash": hashlib.sha256((dataset_hash(data) + cfg.digest()).encode()).hexdigest(),
        "graph_hash": graph.content_hash(),
        "runs": [],
    }
    all_trials = []
    for alpha in alphas:
        try:
            trials = _bench_trials(cfg, data, s, alpha, seeds)
        except Exception as e:
            report["error"] = f"alpha={alpha}: {type(e).__name__}: {e}"
            _atomic_write(out / "report.partial.json", _dump(report))
            print(f"trial failed ({report['error']}); partial results in {out / 'report.partial.json'}", file=sys.stderr)
            return EXIT_GUARD
        agg = aggregate(trials)
        tag = f"alpha{alpha:g}_" if len(alphas) > 1 else ""
        for t in trials:
            _atomic_via(out / "curves" / f"{tag}seed{t.seed}.csv", lambda p, c=t.precision_recall_curve: write_curve_csv(p, c))
        report["runs"].append(
            {
                "alpha": alpha,
                "aggregate": agg.to_dict(),
                "trials": [dict(seed=t.seed, noise_count=t.noise_count, **t.metrics()) for t in trials],
            }
        )
        all_trials.extend(trials)
    key = "unlabeled_accuracy"
    best = max(report["runs"], key=lambda r: r["aggregate"]["mean"].get(key, r["aggregate"]["mean"]["labeled_accuracy"]))
    report["best"] = {"alpha": best["alpha"], "mean": best["aggregate"]["mean"], "std": best["aggregate"]["std"]}
    _atomic_write(out / "report.json", _dump(report))
    _atomic_via(out / "trials.csv", lambda p: write_trials_csv(p, all_trials))
    for run in report["runs"]:
        m, sd = run["aggregate"]["mean"], run["aggregate"]["std"]
        parts = [f"alpha={run['alpha']:g}"]
        for k in ("unlabeled_accuracy", "labeled_accuracy", "final_precision", "final_recall"):
            if k in m:
                parts.append(f"{k}={m[k]:.4f}" + (f"±{sd[k]:.4f}" if k in sd else ""))
        print("  ".join(parts))
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def _add_config_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    for f in fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        aliases = [flag] if "_" not in f.name else [flag, "--" + f.name]
        p.add_argument(*aliases, dest=f.name, default=None, metavar=f.name.upper())


def build_parser():
    parser = argparse.ArgumentParser(prog="lgc-lvof", description="Leave-one-out noisy label filtering for LGC")
    sub = parser.add_subparsers(dest="command", required=True)
    graph = sub.add_parser("graph", help="affinity graph utilities")
    gsub = graph.add_subparsers(dest="action", required=True)
    _add_config_flags(gsub.add_parser("build", help="build and save the symmetric kNN RBF graph"))
    filt = sub.add_parser("filter", help="noisy label filters")
    fsub = filt.add_subparsers(dest="action", required=True)
    _add_config_flags(fsub.add_parser("run", help="run one filter trial and write filter_result.json"))
    _add_config_flags(sub.add_parser("classify", help="filter, then classify with LGC"))
    _add_config_flags(sub.add_parser("bench", help="multi-seed noise-injection benchmark"))
    return parser


def resolve_config(args):
    mapping = read_config_file(args.config) if args.config else {}
    for f in fields(ExperimentConfig):
        val = getattr(args, f.name)
        if val is not None:
            mapping[f.name] = val
    return ExperimentConfig.from_mapping(mapping)


COMMANDS = {
    ("graph", "build"): cmd_graph_build,
    ("filter", "run"): cmd_filter,
    ("classify", None): cmd_classify,
    ("bench", None): cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    command = COMMANDS[(args.command, getattr(args, "action", None))]
    try:
        return command(cfg)
    except DenseGuardError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (ds.DataFormatError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
