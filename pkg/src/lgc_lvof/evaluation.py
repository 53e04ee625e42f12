"""Scoring filters and filtered classifiers over noise-injection trials."""
from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .dataset import NoiseRecord, corrupt_labels, sample_labels, trial_seeds
from .graph import s_matrix
from .ldst import run_ldst_filter
from .lgc import lgc_iterate, propagation_submatrix
from .lvo_filter import FilterResult, StoppingRule, apply_filter, run_filter


@dataclass
class TrialOutcome:
    seed: int
    filter_log: FilterResult
    unlabeled_accuracy: float | None
    labeled_accuracy: float
    precision_recall_curve: list = field(default_factory=list)
    noise_count: int = 0

    def metrics(self):
        out = {"labeled_accuracy": self.labeled_accuracy, "removed": len(self.filter_log)}
        if self.unlabeled_accuracy is not None:
            out["unlabeled_accuracy"] = self.unlabeled_accuracy
        if self.precision_recall_curve:
            _, p, r = self.precision_recall_curve[-1]
            out["final_precision"] = p
            out["final_recall"] = r
        return out


@dataclass
class AggregateReport:
    mean: dict
    std: dict
    trial_count: int

    def to_dict(self):
        return {"mean": self.mean, "std": self.std, "trial_count": self.trial_count}


def precision_curve(log, truth):
    """(removed_count, precision, recall) after each flagged label."""
    corrupted = truth.corrupted_indices if isinstance(truth, NoiseRecord) else frozenset(truth)
    curve, hits = [], 0
    for m, idx in enumerate(log.noisy_indices, start=1):
        hits += idx in corrupted
        recall = hits / len(corrupted) if corrupted else 0.0
        curve.append((m, hits / m, recall))
    return curve


def accuracy_split(predicted, data, assignment):
    """(unlabeled accuracy or None when nothing is unlabeled, labeled accuracy)."""
    predicted = np.asarray(predicted)
    truth = data.true_classes
    mask = np.zeros(data.n, dtype=bool)
    mask[assignment.labeled_indices] = True
    labeled = float(np.mean(predicted[mask] == truth[mask])) if mask.any() else float("nan")
    unlabeled = float(np.mean(predicted[~mask] == truth[~mask])) if (~mask).any() else None
    return unlabeled, labeled


def run_lvo(s, assignment, params, rule):
    p = propagation_submatrix(s, assignment.labeled_indices, params)
    result = run_filter(p.values, assignment.labeled_indicator(), rule, assignment.labeled_indices)
    result.parameters.update(alpha=params.alpha, tolerance=params.tolerance, submatrix_converged=p.converged)
    return result


def run_method(method, s, assignment, params, rule):
    if method == "lvo":
        return run_lvo(s, assignment, params, rule)
    if method == "ldst":
        # works on all n rows, so positions are already instance indices
        return run_ldst_filter(s, assignment.indicator(), params.alpha, rule)
    if method == "none":
        return FilterResult(method="none", parameters={"rule": rule.as_dict()})
    raise ValueError(f"unknown filter {method!r}")


def embed_filter_and_classify(data, assignment, graph, params, rule, correction="remove", method="lvo", s=None):
    """Filter the labels, then classify every instance with LGC on what is left.

    Returns ``(predictions, filter_result)``.
    """
    if s is None:
        s = s_matrix(graph)
    result = run_method(method, s, assignment, params, rule)
    cleaned = apply_filter(assignment, result, correction)
    scores = lgc_iterate(s, cleaned.indicator(), params)
    return scores.predict(), result


def run_trial(data, s, seed, labels, noise, params, rule, method="lvo", correction="remove", fixed_label_seed=None):
    """One noise-injection trial.

    The trial seed is split into a label-sampling and a corruption stream.
    With ``fixed_label_seed`` the label set is drawn from that seed instead, so
    every trial shares one label set and only the corruption varies.
    ``rule=None`` removes exactly as many labels as were corrupted.
    """
    sample_seed, corrupt_seed = trial_seeds(seed)
    if fixed_label_seed is not None:
        sample_seed = trial_seeds(fixed_label_seed)[0]
    clean = sample_labels(data, labels, sample_seed)
    noisy, record = corrupt_labels(clean, noise, corrupt_seed)
    if rule is None:
        rule = StoppingRule.fixed_count(len(record.corrupted_indices))
    pred, result = embed_filter_and_classify(data, noisy, None, params, rule, correction, method, s=s)
    unlabeled, labeled = accuracy_split(pred, data, noisy)
    return TrialOutcome(
        seed=seed,
        filter_log=result,
        unlabeled_accuracy=unlabeled,
        labeled_accuracy=labeled,
        precision_recall_curve=precision_curve(result, record),
        noise_count=len(record.corrupted_indices),
    )


def aggregate(trials):
    """Mean and sample standard deviation (n - 1) of each metric across trials."""
    if not trials:
        raise ValueError("need at least one trial")
    rows = [t.metrics() if isinstance(t, TrialOutcome) else dict(t) for t in trials]
    keys = sorted(set().union(*rows))
    mean, std = {}, {}
    for key in keys:
        vals = [float(r[key]) for r in rows if r.get(key) is not None]
        if not vals:
            continue
        # statistics works in exact rationals, so identical trials give std 0
        mean[key] = statistics.fmean(vals)
        if len(vals) >= 2:
            std[key] = statistics.stdev(vals)
    return AggregateReport(mean, std, len(rows))


def write_curve_csv(path, curve):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["removed_count", "precision", "recall"])
        for m, p, r in curve:
            w.writerow([m, repr(float(p)), repr(float(r))])


def write_trials_csv(path, trials):
    """One row per (trial, metric)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "metric", "value"])
        for t in trials:
            for key, val in sorted(t.metrics().items()):
                if val is None or (isinstance(val, float) and math.isnan(val)):
                    continue
                w.writerow([t.seed, key, repr(float(val))])
