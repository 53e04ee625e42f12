"""Compare the leave-one-out filter, the LDST baseline and plain LGC on Gaussian blobs.

Example:
    python3 scripts/run_synthetic_benchmark.py --n 1000 --c 3 --separation 4 --labels 150 --seeds 0-19
"""
import argparse
import time

from lgc_lvof.config import parse_seeds
from lgc_lvof.dataset import generate_gaussian_blobs
from lgc_lvof.evaluation import aggregate, run_trial
from lgc_lvof.graph import build_symmetric_knn_rbf, knn_search, s_matrix, sigma_heuristic
from lgc_lvof.lgc import LgcParams


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--c", type=int, default=3)
    ap.add_argument("--separation", type=float, default=4.0)
    ap.add_argument("--k", type=int, default=15)
    ap.add_argument("--labels", type=int, default=150)
    ap.add_argument("--noise", type=float, default=0.2)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.99, 0.9])
    ap.add_argument("--seeds", default="0-19")
    ap.add_argument("--methods", nargs="+", default=["none", "lvo", "ldst"])
    ap.add_argument("--correction", choices=["remove", "replace"], default="remove")
    args = ap.parse_args()

    data = generate_gaussian_blobs(args.n, args.d, args.c, args.separation, seed=0)
    idx, dist = knn_search(data.features, max(args.k, 10))
    sigma = sigma_heuristic(data.features, dist)
    s = s_matrix(build_symmetric_knn_rbf(data.features, args.k, sigma, neighbors=idx))
    seeds = parse_seeds(args.seeds)
    print(f"n={data.n} d={data.d} c={data.class_count} k={args.k} sigma={sigma:.4g} "
          f"l={args.labels} noise={args.noise} seeds={len(seeds)}")
    header = f"{'method':<6} {'alpha':>6} {'unlabeled':>16} {'labeled':>16} {'precision':>10} {'secs':>7}"
    print(header)
    for method in args.methods:
        for alpha in args.alpha:
            t0 = time.perf_counter()
            trials = [
                run_trial(data, s, sd, args.labels, args.noise, LgcParams(alpha=alpha), None, method, args.correction)
                for sd in seeds
            ]
            rep = aggregate(trials)
            m, sd = rep.mean, rep.std

            def fmt(key):
                if key not in m:
                    return "n/a"
                return f"{m[key]:.4f}" + (f" ± {sd[key]:.4f}" if key in sd else "")

            prec = f"{m['final_precision']:.3f}" if "final_precision" in m else "-"
            print(f"{method:<6} {alpha:>6g} {fmt('unlabeled_accuracy'):>16} {fmt('labeled_accuracy'):>16} "
                  f"{prec:>10} {time.perf_counter() - t0:>7.1f}")


if __name__ == "__main__":
    main()
