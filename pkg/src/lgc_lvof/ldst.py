"""Removal-only LDST gradient filter, used as a dense small-data baseline.

The gradient of the LGC cost with respect to the label matrix is Q = A Y with
A = P^T (I - S) P + mu (P - I)^2. A is built once per run and every removal
updates Q with a single column of A.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lgc import DENSE_GUARD, full_propagation, mu_from_alpha
from .lvo_filter import ALL_LABELS_REMOVED, BUDGET_EXHAUSTED, FilterResult

__all__ = [
    "LdstOperator",
    "build_ldst_operator",
    "full_propagation",
    "ldst_gradient",
    "select_removal_adapted",
    "select_removal_offlabel",
    "select_removal_unadapted",
    "run_ldst_filter",
]


@dataclass(frozen=True)
class LdstOperator:
    a: np.ndarray
    mu: float
    alpha: float


def build_ldst_operator(s, alpha, max_n=DENSE_GUARD):
    p = full_propagation(s, alpha, max_n=max_n)
    n = p.shape[0]
    lsym = np.eye(n) - (s.toarray() if hasattr(s, "toarray") else np.asarray(s))
    mu = mu_from_alpha(alpha)
    pm = p - np.eye(n)
    a = p.T @ lsym @ p + mu * (pm @ pm)
    return LdstOperator(0.5 * (a + a.T), mu, alpha)


def ldst_gradient(op, y):
    a = op.a if isinstance(op, LdstOperator) else np.asarray(op)
    return a @ np.asarray(y, dtype=float)


def select_removal_adapted(q, y, active):
    """Best relabel move among active labeled instances.

    For i labeled with class c, moving its label to class j changes the cost
    to first order by Q_ij - Q_ic. The pair maximizing Q_ic - Q_ij (j != c) is
    returned as ``(i, j)``; ties go to the lowest instance, then the lowest class.
    """
    y = np.asarray(y)
    active = np.asarray(active, dtype=bool)
    allowed = active[:, None] & (y == 0)
    if not active.any() or not allowed.any():
        raise ValueError("no active labeled instances")
    current = np.sum(q * y, axis=1, keepdims=True)
    masked = np.where(allowed, current - q, -np.inf)
    i, j = np.unravel_index(np.argmax(masked), masked.shape)
    return int(i), int(j)


def select_removal_offlabel(q, y, active):
    """Maximize Q_ij over active labeled i and classes j other than its label.

    Kept for comparison only: it prefers labels whose cluster carries no
    class-j labels at all (Q_ij = 0 there) and so rarely finds noise.
    """
    allowed = np.asarray(active, dtype=bool)[:, None] & (np.asarray(y) == 0)
    if not allowed.any():
        raise ValueError("no active labeled instances")
    masked = np.where(allowed, q, -np.inf)
    i, j = np.unravel_index(np.argmax(masked), masked.shape)
    return int(i), int(j)


def select_removal_unadapted(q, y, active):
    """Plain LDST removal: maximize Q_ij over active i labeled with class j."""
    allowed = np.asarray(active, dtype=bool)[:, None] & (np.asarray(y) == 1)
    if not allowed.any():
        raise ValueError("no active labeled instances")
    masked = np.where(allowed, q, -np.inf)
    i, j = np.unravel_index(np.argmax(masked), masked.shape)
    return int(i), int(j)


def run_ldst_filter(s, y, alpha, rule, max_n=DENSE_GUARD, adapted=True, rebuild_each_step=False):
    """Greedy removal of labels along the LDST gradient.

    The suggested class of a removed label is the class j that won the
    selection; the unadapted rule has no alternative class and suggests the
    removed one.
    """
    if rule.kind != "fixed_count":
        raise ValueError("the LDST baseline supports only the fixed_count stopping rule")
    y = np.array(y, dtype=float, copy=True)
    active = y.sum(axis=1) > 0
    if rule.budget > active.sum():
        raise ValueError(f"budget {rule.budget} exceeds the {int(active.sum())} available labels")
    op = build_ldst_operator(s, alpha, max_n=max_n)
    q = ldst_gradient(op, y)
    select = select_removal_adapted if adapted else select_removal_unadapted
    result = FilterResult(
        method="ldst",
        parameters={
            "rule": rule.as_dict(),
            "alpha": alpha,
            "mu": op.mu,
            "adapted": adapted,
            "suggested_class_is_extension": True,
        },
    )
    while True:
        if len(result) >= rule.budget:
            result.stop_reason = BUDGET_EXHAUSTED
            break
        if not active.any():
            result.stop_reason = ALL_LABELS_REMOVED
            break
        i, j = select(q, y, active)
        current = int(np.argmax(y[i]))
        result.noisy_indices.append(i)
        result.removed_classes.append(current)
        result.suggested_classes.append(j)
        result.q_values.append(float(q[i, current] - q[i, j]) if adapted else float(q[i, j]))
        active[i] = False
        y[i] = 0.0
        if rebuild_each_step:
            op = build_ldst_operator(s, alpha, max_n=max_n)
            q = ldst_gradient(op, y)
        else:
            q[:, current] -= op.a[:, i]
    return result
