import numpy as np
import pytest
import scipy.sparse as sp

from lgc_lvof.dataset import LabelAssignment, generate_gaussian_blobs
from lgc_lvof.graph import SparseSymmetricGraph, build_symmetric_knn_rbf, sigma_heuristic
from lgc_lvof.lvo_filter import leave_one_out_row


def random_graph(rng, n, density=0.15, connected=True):
    """Random symmetric weights in (0, 1] with an empty diagonal."""
    mask = np.triu(rng.random((n, n)) < density, k=1)
    if connected:
        mask[np.arange(n - 1), np.arange(1, n)] = True
    w = np.where(mask, rng.uniform(0.05, 1.0, (n, n)), 0.0)
    w = w + w.T
    return SparseSymmetricGraph(sp.csr_matrix(w), k=0, sigma=1.0)


def dense_propagation(s, alpha):
    """(1 - alpha)(I - alpha S)^-1 by plain dense inversion."""
    s = s.toarray() if sp.issparse(s) else np.asarray(s)
    return (1 - alpha) * np.linalg.inv(np.eye(s.shape[0]) - alpha * s)


def separable_instance(seed, flips_per_cluster, k=15):
    """Two far-apart clusters of 20 points, 5 labels in each, some flipped per cluster.

    Returns ``(data, graph, noisy_assignment, flipped_instance_indices)``.
    """
    data = generate_gaussian_blobs(40, 2, 2, 50.0, seed)
    graph = build_symmetric_knn_rbf(data.features, k, sigma_heuristic(data.features))
    rng = np.random.default_rng(seed)
    lab = np.sort(np.concatenate([rng.choice(20, 5, replace=False), 20 + rng.choice(20, 5, replace=False)]))
    obs = data.true_classes[lab].copy()
    flip = np.concatenate(
        [rng.choice(5, flips_per_cluster, replace=False), 5 + rng.choice(5, flips_per_cluster, replace=False)]
    )
    obs[flip] = 1 - obs[flip]
    return data, graph, LabelAssignment(40, 2, lab, obs), frozenset(lab[flip].tolist())


def brute_force_filter(s, y, labeled, alpha, steps):
    """Repeated full LGC solves, one per candidate label, no incremental tricks."""
    y = y.copy()
    log = []
    for _ in range(steps):
        best = None
        for i in labeled:
            if not y[i].any():
                continue
            row = leave_one_out_row(s, y, alpha, i)
            prob = row / row.sum() if row.sum() > 0 else y[i]
            q = prob - y[i]
            j = int(np.argmin(q))
            if best is None or q[j] < best[1]:
                best = (i, q[j], int(np.argmax(q)))
        log.append((best[0], best[2]))
        y[best[0]] = 0.0
    return log


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain():
    w = sp.csr_matrix(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))
    return SparseSymmetricGraph(w, k=1, sigma=1.0)


# criterion number -> (status, title, detail), filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{status}] criterion {num}: {title}" + (f" ({detail})" if detail else ""))
