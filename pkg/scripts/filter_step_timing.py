"""Per-step cost of the filter loop once the labeled propagation block exists.

Builds blobs of several sizes, computes the l x l block, then times the
removal loop alone. The step time should not grow with n.
"""
import argparse
import time

from lgc_lvof.dataset import generate_gaussian_blobs, sample_labels
from lgc_lvof.graph import build_symmetric_knn_rbf, knn_search, s_matrix, sigma_heuristic
from lgc_lvof.lgc import LgcParams, propagation_submatrix
from lgc_lvof.lvo_filter import StoppingRule, run_filter


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 5000, 10000, 20000])
    ap.add_argument("--labels", type=int, default=100)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    print(f"{'n':>7} {'knn s':>7} {'block s':>8} {'us/step':>8}")
    for n in args.sizes:
        data = generate_gaussian_blobs(n, 10, 10, 6.0, seed=0)
        t0 = time.perf_counter()
        idx, dist = knn_search(data.features, 15)
        t_knn = time.perf_counter() - t0
        g = build_symmetric_knn_rbf(data.features, 15, sigma_heuristic(data.features, dist), neighbors=idx)
        assign = sample_labels(data, args.labels, seed=0)
        t0 = time.perf_counter()
        p = propagation_submatrix(s_matrix(g), assign.labeled_indices, LgcParams(alpha=0.9, tolerance=1e-6))
        t_block = time.perf_counter() - t0
        rule = StoppingRule.fixed_count(args.steps)
        best = float("inf")
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            run_filter(p.values, assign.labeled_indicator(), rule)
            best = min(best, time.perf_counter() - t0)
        print(f"{n:>7} {t_knn:>7.2f} {t_block:>8.2f} {1e6 * best / args.steps:>8.1f}")


if __name__ == "__main__":
    main()
