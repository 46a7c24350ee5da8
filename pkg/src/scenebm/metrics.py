"""Confusion counts, precision/recall/F1, average precision, chance levels.

Counts are taken over an explicit universe of eligible nodes: true
positives are nodes active in both ground truth and prediction, true
negatives inactive in both, and so on. The Monte Carlo chance level
re-scores a predictor that activates exactly as many random universe
nodes as the ground truth has; by construction its false-positive and
false-negative counts agree per trial, so precision, recall and F1
coincide in expectation (roughly k/n for k truths in a universe of n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from scenebm.errors import DataError

NodeSet = frozenset


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int
    node_kind: str = "node"

    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.tn + other.tn,
            self.fp + other.fp, self.fn + other.fn, self.node_kind,
        )


def confusion_counts(
    ground: frozenset, predicted: frozenset, eligible, node_kind: str = "node"
) -> ConfusionCounts:
    """Count TP/TN/FP/FN over the eligible universe.

    ``eligible`` is a collection of nodes or an integer universe size
    (when only the TN count depends on it).
    """
    if isinstance(eligible, int):
        n_eligible = eligible
    else:
        eligible = frozenset(eligible)
        if not ground <= eligible or not predicted <= eligible:
            raise DataError("ground/predicted sets stray outside the universe")
        n_eligible = len(eligible)
    tp = len(ground & predicted)
    fp = len(predicted - ground)
    fn = len(ground - predicted)
    tn = n_eligible - tp - fp - fn
    if tn < 0:
        raise DataError("universe smaller than the union of ground and predicted")
    return ConfusionCounts(tp, tn, fp, fn, node_kind)


def prf_scores(c: ConfusionCounts) -> tuple[float, float, float]:
    """Precision, recall, F1 with zero conventions on empty denominators."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return precision, recall, f1


@dataclass
class ApResult:
    value: float
    used_scenes: int
    skipped_scenes: int


def average_precision(per_scene: Sequence[ConfusionCounts]) -> ApResult:
    """Mean per-scene precision; scenes without predictions are skipped
    (and counted) rather than scored as zero."""
    if not per_scene:
        raise DataError("average precision needs at least one scene")
    precisions = []
    skipped = 0
    for counts in per_scene:
        if counts.tp + counts.fp == 0:
            skipped += 1
            continue
        precisions.append(counts.tp / (counts.tp + counts.fp))
    if not precisions:
        raise DataError("every scene was skipped (no predictions anywhere)")
    return ApResult(float(np.mean(precisions)), len(precisions), skipped)


@dataclass
class ChanceLevel:
    precision: float
    recall: float
    f1: float
    trials: int


def chance_level(
    ground_sets: Sequence[frozenset],
    universes: Sequence[Sequence[Hashable]],
    trials: int = 100,
    seed: int = 0,
    node_kind: str = "node",
) -> ChanceLevel:
    """Monte Carlo score of a random activate-|ground| predictor.

    Per trial and scene, |ground| universe nodes are activated uniformly
    without replacement; counts accumulate over scenes and the trial's
    micro scores are averaged across trials.
    """
    if trials < 1:
        raise DataError("need at least one trial")
    if len(ground_sets) != len(universes):
        raise DataError("one universe per ground set required")
    prepared = []
    for ground, universe in zip(ground_sets, universes):
        universe = sorted(universe)
        if not universe:
            raise DataError("empty eligible universe")
        if not ground <= set(universe):
            raise DataError("ground truth strays outside its universe")
        prepared.append((ground, universe))
    rng = np.random.default_rng(seed)
    scores = np.zeros((trials, 3))
    for trial in range(trials):
        total = ConfusionCounts(0, 0, 0, 0, node_kind)
        for ground, universe in prepared:
            k = len(ground)
            picks = frozenset(
                universe[i]
                for i in rng.choice(len(universe), size=k, replace=False)
            ) if k else frozenset()
            total = total + confusion_counts(ground, picks, universe, node_kind)
        scores[trial] = prf_scores(total)
    mean = scores.mean(axis=0)
    return ChanceLevel(float(mean[0]), float(mean[1]), float(mean[2]), trials)
