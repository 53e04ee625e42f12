"""Local and Global Consistency label propagation.

Throughout, the propagation matrix is P = (1 - alpha) (I - alpha S)^-1, so that
the LGC solution is F = P Y.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

DENSE_GUARD = 10_000


class DenseGuardError(RuntimeError):
    """A dense n x n computation was requested beyond the configured size limit."""


def alpha_from_mu(mu):
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return 1.0 / (1.0 + mu)


def mu_from_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return 1.0 / alpha - 1.0


@dataclass(frozen=True)
class LgcParams:
    alpha: float = 0.9
    tolerance: float = 1e-9
    max_iterations: int = 10_000

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @classmethod
    def from_mu(cls, mu, **kw):
        return cls(alpha=alpha_from_mu(mu), **kw)


@dataclass(frozen=True)
class ClassScores:
    values: np.ndarray
    iterations: int
    converged: bool

    def predict(self):
        # argmax picks the lowest class on ties
        return np.argmax(self.values, axis=1)


@dataclass(frozen=True)
class PropagationSubmatrix:
    values: np.ndarray
    labeled_indices: np.ndarray
    alpha: float
    iterations_used: int
    converged: bool

    @property
    def l(self):
        return self.values.shape[0]

    def save(self, path):
        with open(path, "wb") as fh:
            np.savez(
                fh,
                values=self.values,
                labeled_indices=self.labeled_indices,
                header=np.array([self.l, self.alpha, self.iterations_used, float(self.converged)]),
            )

    @classmethod
    def load(cls, path):
        with np.load(Path(path)) as z:
            l, alpha, iters, conv = z["header"]
            values = z["values"]
            if values.shape != (int(l), int(l)):
                raise ValueError(f"{path}: header says l={int(l)} but matrix is {values.shape}")
            return cls(values, z["labeled_indices"], float(alpha), int(iters), bool(conv))


def _diffuse(s, f0, source, alpha, tolerance, max_iterations):
    """Iterate F <- alpha S F + source from f0.

    Returns the last iterate F whose step |T(F) - F|_max fell below the
    tolerance; that step is exactly the stationarity residual of F.
    """
    f = f0
    for it in range(1, max_iterations + 1):
        nxt = alpha * (s @ f) + source
        step = np.max(np.abs(nxt - f)) if f.size else 0.0
        if step < tolerance:
            return f, it, True
        f = nxt
    return f, max_iterations, False


def lgc_iterate(s, y, params=LgcParams()):
    """Sparse diffusion F(t+1) = alpha S F(t) + (1 - alpha) Y from F(0) = Y."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != s.shape[0]:
        raise ValueError("Y must have one row per vertex")
    s = sp.csr_matrix(s)
    f, it, ok = _diffuse(s, y.copy(), (1 - params.alpha) * y, params.alpha, params.tolerance, params.max_iterations)
    return ClassScores(f, it, ok)


def _spd_factor(s, alpha, max_n):
    n = s.shape[0]
    if n > max_n:
        raise DenseGuardError(f"dense solve on n={n} exceeds the limit of {max_n}")
    s = s.toarray() if sp.issparse(s) else np.asarray(s, dtype=float)
    m = np.eye(n) - alpha * s
    return scipy.linalg.cho_factor(m, lower=True, check_finite=False)


def lgc_closed(s, y, alpha, max_n=DENSE_GUARD):
    """Exact F = (1 - alpha)(I - alpha S)^-1 Y by Cholesky factorization."""
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    y = np.asarray(y, dtype=float)
    factor = _spd_factor(s, alpha, max_n)
    f = (1 - alpha) * scipy.linalg.cho_solve(factor, y, check_finite=False)
    return ClassScores(f, 0, True)


def full_propagation(s, alpha, max_n=DENSE_GUARD):
    """Dense P = (1 - alpha)(I - alpha S)^-1, symmetrized against round-off."""
    factor = _spd_factor(s, alpha, max_n)
    p = (1 - alpha) * scipy.linalg.cho_solve(factor, np.eye(s.shape[0]), check_finite=False)
    return 0.5 * (p + p.T)


def propagation_submatrix(s, labeled_indices, params=LgcParams()):
    """Labeled-row, labeled-column block of P without forming P.

    Diffuses the n x l matrix that is the identity on labeled rows and zero
    elsewhere. The iterates are the partial sums (1 - alpha) sum_i (alpha S)^i,
    so every entry grows monotonically to its limit. Storage is one n x l
    dense iterate plus S.
    """
    idx = np.asarray(labeled_indices, dtype=np.int64)
    if idx.ndim != 1 or len(idx) == 0:
        raise ValueError("labeled_indices must be a non-empty 1-D sequence")
    if len(np.unique(idx)) != len(idx):
        raise ValueError("labeled indices must be distinct")
    s = sp.csr_matrix(s)
    n, l = s.shape[0], len(idx)
    source = np.zeros((n, l))
    source[idx, np.arange(l)] = 1.0 - params.alpha
    z, it, ok = _diffuse(s, source.copy(), source, params.alpha, params.tolerance, params.max_iterations)
    return PropagationSubmatrix(z[idx], idx.copy(), params.alpha, it, ok)
