"""Leave-one-out noisy-label filter over the labeled block of the LGC propagation matrix.

With the self-influence (diagonal) of the l x l block zeroed, row i of
``p_tilde @ y_l`` is what LGC would predict for labeled instance i had its own
label been withheld. Each step flags the label that most contradicts that
prediction, then subtracts its contribution in O(l) time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lgc import lgc_closed

BUDGET_EXHAUSTED = "budget_exhausted"
THRESHOLD_REACHED = "threshold_reached"
ALL_LABELS_REMOVED = "all_labels_removed"


@dataclass(frozen=True)
class StoppingRule:
    kind: str = "fixed_count"
    budget: int = 0
    tau: float = 0.8

    def __post_init__(self):
        if self.kind not in ("fixed_count", "q_threshold"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if self.kind == "fixed_count" and self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.kind == "q_threshold" and not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")

    @classmethod
    def fixed_count(cls, budget):
        return cls("fixed_count", budget=int(budget))

    @classmethod
    def q_threshold(cls, tau=0.8):
        return cls("q_threshold", tau=float(tau))

    def as_dict(self):
        if self.kind == "fixed_count":
            return {"kind": self.kind, "budget": self.budget}
        return {"kind": self.kind, "tau": self.tau}


@dataclass
class FilterResult:
    noisy_indices: list = field(default_factory=list)
    removed_classes: list = field(default_factory=list)
    suggested_classes: list = field(default_factory=list)
    q_values: list = field(default_factory=list)
    stop_reason: str = BUDGET_EXHAUSTED
    method: str = "lvo"
    parameters: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.noisy_indices)

    def to_dict(self):
        return {
            "method": self.method,
            "stop_reason": self.stop_reason,
            "parameters": self.parameters,
            "steps": [
                {"instance_index": int(i), "removed_class": int(r), "suggested_class": int(s), "q_value": float(q)}
                for i, r, s, q in zip(self.noisy_indices, self.removed_classes, self.suggested_classes, self.q_values)
            ],
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        steps = d.get("steps", [])
        return cls(
            noisy_indices=[s["instance_index"] for s in steps],
            removed_classes=[s["removed_class"] for s in steps],
            suggested_classes=[s["suggested_class"] for s in steps],
            q_values=[s["q_value"] for s in steps],
            stop_reason=d["stop_reason"],
            method=d.get("method", "lvo"),
            parameters=d.get("parameters", {}),
        )

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def to_class_probabilities(f, y):
    """Row-normalize f; rows summing to zero fall back to the label row of y."""
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    sums = f.sum(axis=1)
    out = y.copy()
    pos = sums > 0
    out[pos] = f[pos] / sums[pos, None]
    return out


def difference_matrix(f, y):
    return to_class_probabilities(f, y) - y


def select_noisy(q, active):
    """Most contradicted active label.

    Returns ``(i, j, k, q_ij)``: (i, j) minimizes Q over active rows and k
    maximizes row i. Ties go to the lowest row, then the lowest class.
    """
    active = np.asarray(active, dtype=bool)
    if not active.any():
        raise ValueError("no active labeled positions")
    masked = np.where(active[:, None], q, np.inf)
    i, j = np.unravel_index(np.argmin(masked), masked.shape)
    k = int(np.argmax(q[i]))
    return int(i), int(j), k, float(q[i, j])


@dataclass
class FilterState:
    """Mutable loop state owned by a single filter run."""

    p_tilde: np.ndarray
    y_l: np.ndarray
    f: np.ndarray
    active: np.ndarray
    step_log: list = field(default_factory=list)
    cutoff: float = 0.0

    @classmethod
    def initial(cls, p_tilde, y_l):
        p = np.array(p_tilde, dtype=float, copy=True)
        y = np.asarray(y_l, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] != y.shape[0]:
            raise ValueError(f"inconsistent shapes: p_tilde {p.shape}, y_l {y.shape}")
        if np.any(p < 0):
            raise ValueError("p_tilde must be nonnegative")
        np.fill_diagonal(p, 0.0)
        # subtracting terms back out of a float sum leaves round-off where the
        # exact value is zero; anything below this is treated as zero
        cutoff = 8 * max(p.shape[0], 1) * np.finfo(float).eps * (p.max() if p.size else 0.0)
        return cls(p, y, p @ y, y.sum(axis=1) > 0, [], cutoff)

    def labels(self, i):
        return int(np.argmax(self.y_l[i]))

    def masked_labels(self):
        return self.y_l * self.active[:, None]


def remove_contribution(state, i, j):
    """Deactivate position i (labeled j) and drop its column of p_tilde from f[:, j]. O(l)."""
    if not state.active[i]:
        raise ValueError(f"position {i} is not active")
    if state.y_l[i, j] != 1:
        raise ValueError(f"position {i} is not labeled with class {j}")
    state.active[i] = False
    col = state.f[:, j]
    col -= state.p_tilde[:, i]
    col[col < state.cutoff] = 0.0
    return state


def run_filter(p_tilde, y_l, rule, labeled_indices=None):
    """Flag noisy labels until the stopping rule fires.

    ``labeled_indices`` maps positions of ``p_tilde`` back to instance indices
    in the reported result; positions are reported when it is omitted.
    Removed labels stay removed for the rest of the run.
    """
    state = FilterState.initial(p_tilde, y_l)
    l = state.y_l.shape[0]
    if labeled_indices is None:
        labeled_indices = np.arange(l)
    labeled_indices = np.asarray(labeled_indices)
    if rule.kind == "fixed_count" and rule.budget > l:
        raise ValueError(f"budget {rule.budget} exceeds the {l} available labels")

    result = FilterResult(method="lvo", parameters={"rule": rule.as_dict(), "l": l})
    while True:
        if rule.kind == "fixed_count" and len(state.step_log) >= rule.budget:
            result.stop_reason = BUDGET_EXHAUSTED
            break
        if not state.active.any():
            result.stop_reason = ALL_LABELS_REMOVED
            break
        q = difference_matrix(state.f, state.y_l)
        i, _, k, qv = select_noisy(q, state.active)
        if rule.kind == "q_threshold" and qv > -rule.tau:
            result.stop_reason = THRESHOLD_REACHED
            break
        # the row minimum sits on the label column (ties with zeros aside)
        j = state.labels(i)
        remove_contribution(state, i, j)
        state.step_log.append((i, j, k, qv))

    for i, j, k, qv in state.step_log:
        result.noisy_indices.append(int(labeled_indices[i]))
        result.removed_classes.append(j)
        result.suggested_classes.append(k)
        result.q_values.append(qv)
    return result


def leave_one_out_row(s, y, alpha, i, max_n=None):
    """Row i of the full LGC solution computed with row i of Y zeroed (test oracle)."""
    y = np.array(y, dtype=float, copy=True)
    y[i] = 0.0
    kw = {} if max_n is None else {"max_n": max_n}
    return lgc_closed(s, y, alpha, **kw).values[i]


def apply_filter(assignment, result, correction="remove"):
    """Labels after filtering: flagged ones dropped, or relabeled with their suggestions."""
    flagged = dict(zip(result.noisy_indices, result.suggested_classes))
    keep_idx, keep_cls = [], []
    for idx, cls in zip(assignment.labeled_indices.tolist(), assignment.observed_classes.tolist()):
        if idx in flagged:
            if correction == "remove":
                continue
            if correction != "replace":
                raise ValueError(f"unknown correction mode {correction!r}")
            cls = flagged[idx]
        keep_idx.append(idx)
        keep_cls.append(cls)
    return assignment.replace(np.array(keep_idx, dtype=np.int64), np.array(keep_cls, dtype=np.int64))
