"""Symmetric kNN affinity graphs with RBF weights, and the operators built on them."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

SIGMA_NEIGHBOR = 10


@dataclass(frozen=True)
class SparseSymmetricGraph:
    weights: sp.csr_matrix
    k: int
    sigma: float

    @property
    def n(self):
        return self.weights.shape[0]

    def content_hash(self):
        w = self.weights
        h = hashlib.sha256()
        h.update(np.asarray([w.shape[0], self.k], dtype=np.int64).tobytes())
        h.update(np.float64(self.sigma).tobytes())
        for arr in (w.indptr.astype(np.int64), w.indices.astype(np.int64), w.data.astype(np.float64)):
            h.update(arr.tobytes())
        return h.hexdigest()


def knn_search(features, k, block_size=1024):
    """Exact k nearest neighbors under the Euclidean metric.

    Returns ``(indices, distances)``, each n x k, sorted by ascending distance
    with ties broken by the lower index. An instance is never its own neighbor,
    even when duplicated.
    """
    x = np.asarray(features, dtype=float)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    sq = np.einsum("ij,ij->i", x, x)
    eps = np.finfo(float).eps
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        rows = np.arange(stop - start)
        d2 = x[start:stop] @ x.T
        d2 *= -2.0
        d2 += sq[None, :]
        d2 += sq[start:stop, None]
        d2[rows, rows + start] = np.inf
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(d2, part, axis=1).max(axis=1)
        # the Gram expansion is inexact; widen the cut so no true neighbor is lost,
        # then rank the candidates on exactly recomputed distances
        slack = 64 * eps * (sq[start:stop] + sq.max()) + 1e-300
        cand_mask = d2 <= (kth + slack)[:, None]
        simple = cand_mask.sum(axis=1) == k
        if simple.any():
            r = rows[simple]
            cand = part[r]
            diff = x[cand] - x[start + r][:, None, :]
            exact = np.einsum("ijk,ijk->ij", diff, diff)
            order = np.lexsort((cand, exact), axis=-1)
            idx[start + r] = np.take_along_axis(cand, order, axis=1)
            dist[start + r] = np.sqrt(np.take_along_axis(exact, order, axis=1))
        for r in rows[~simple]:
            i = start + r
            cand = np.flatnonzero(cand_mask[r])
            diff = x[cand] - x[i]
            exact = np.einsum("ij,ij->i", diff, diff)
            order = np.lexsort((cand, exact))[:k]
            idx[i] = cand[order]
            dist[i] = np.sqrt(exact[order])
    return idx, dist


def knn_indices(features, k):
    return knn_search(features, k)[0]


def sigma_heuristic(features, neighbor_distances=None):
    """Mean distance to the m-th nearest neighbor, m = min(10, n - 1).

    ``neighbor_distances`` may carry a precomputed sorted distance table with at
    least m columns to avoid a second neighbor search.
    """
    n = np.asarray(features).shape[0]
    if n < 2:
        raise ValueError("need at least two instances")
    m = min(SIGMA_NEIGHBOR, n - 1)
    if neighbor_distances is None or neighbor_distances.shape[1] < m:
        neighbor_distances = knn_search(features, m)[1]
    return float(np.mean(neighbor_distances[:, m - 1]))


def build_symmetric_knn_rbf(features, k, sigma, neighbors=None):
    """Union-symmetrized kNN graph with weights exp(-|x_i - x_j|^2 / (2 sigma^2)).

    ``neighbors`` is an optional precomputed n x k' index table (k' >= k).
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(features, dtype=float)
    n = x.shape[0]
    if neighbors is None:
        neighbors = knn_indices(x, k)
    elif neighbors.shape[1] < k:
        raise ValueError("precomputed neighbor table has fewer than k columns")
    src = np.repeat(np.arange(n), k)
    dst = neighbors[:, :k].ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    key = np.unique(lo * n + hi)
    lo, hi = key // n, key % n
    diff = x[lo] - x[hi]
    w = np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * sigma**2))
    # keep every kNN edge stored even if the kernel underflows
    w = np.maximum(w, np.finfo(float).tiny)
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    data = np.concatenate([w, w])
    weights = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    weights.sort_indices()
    return SparseSymmetricGraph(weights, int(k), float(sigma))


def degree(graph):
    w = graph.weights if isinstance(graph, SparseSymmetricGraph) else graph
    return np.asarray(w.sum(axis=1)).ravel()


def _inv_sqrt_degree(d):
    out = np.zeros_like(d, dtype=float)
    pos = d > 0
    out[pos] = 1.0 / np.sqrt(d[pos])
    return out


def s_matrix(graph, degrees=None):
    """S = D^-1/2 W D^-1/2; isolated vertices get all-zero rows and columns."""
    w = graph.weights if isinstance(graph, SparseSymmetricGraph) else sp.csr_matrix(graph)
    if degrees is None:
        degrees = degree(w)
    r = sp.diags(_inv_sqrt_degree(np.asarray(degrees, dtype=float)))
    s = (r @ w @ r).tocsr()
    s.sort_indices()
    return s


def symmetric_laplacian(graph, degrees=None):
    """Dense I - S. Only meant for small graphs (oracles, the LDST baseline)."""
    s = s_matrix(graph, degrees)
    return np.eye(s.shape[0]) - s.toarray()


def smoothness(f, graph, variant="unnormalized"):
    """Graph smoothness 1/2 sum_ij W_ij (f_i - f_j)^2, summed over columns of f.

    With ``variant="symmetric"`` each f_i is first divided by sqrt(D_ii), which
    gives f^T (I - S) f on graphs without isolated vertices. The Laplacian is
    never formed.
    """
    w = graph.weights if isinstance(graph, SparseSymmetricGraph) else sp.csr_matrix(graph)
    f = np.asarray(f, dtype=float)
    if f.shape[0] != w.shape[0]:
        raise ValueError("f must have one row per vertex")
    if f.ndim == 1:
        f = f[:, None]
    if variant == "symmetric":
        f = f * _inv_sqrt_degree(degree(w))[:, None]
    elif variant != "unnormalized":
        raise ValueError(f"unknown variant {variant!r}")
    coo = w.tocoo()
    diff = f[coo.row] - f[coo.col]
    return 0.5 * float(np.sum(coo.data[:, None] * diff**2))


def save_graph(path, graph):
    """Write ``n k sigma`` then one ``i j w`` line per edge with i < j."""
    upper = sp.triu(graph.weights, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    lines = [f"{graph.n} {graph.k} {graph.sigma!r}"]
    lines += [f"{i} {j} {w!r}" for i, j, w in zip(upper.row[order].tolist(), upper.col[order].tolist(), upper.data[order].tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph(path):
    text = Path(path).read_text(encoding="utf-8").split("\n")
    head = text[0].split()
    if len(head) != 3:
        raise ValueError(f"{path}: header must be 'n k sigma'")
    n, k, sigma = int(head[0]), int(head[1]), float(head[2])
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: line {lineno}: expected 'i j w'")
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        if not 0 <= i < j < n:
            raise ValueError(f"{path}: line {lineno}: need 0 <= i < j < n")
        rows.append(i)
        cols.append(j)
        vals.append(w)
    rows, cols, vals = np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals)
    weights = sp.csr_matrix(
        (np.concatenate([vals, vals]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    )
    weights.sort_indices()
    return SparseSymmetricGraph(weights, k, sigma)
