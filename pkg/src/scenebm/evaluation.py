"""Task evaluation over a test split, with the corruption protocol.

Task 1 zeroes relations and predicts them back; Task 2 removes objects
and asks for them; Task 3 injects objects and asks which to remove;
Task 4 zeroes affordances; Tasks 5/6 query one affordance slice per
ground-truth triple. Scores are micro-aggregated counts over the whole
split (macro per-scene averages are emitted alongside), computed over
the per-kind node universes: all object nodes for object tasks, all
canonical relation/affordance slots for layer tasks, and the queried
slice for slice tasks. Chance levels re-score a random activate-as-many
predictor on the same universes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from scenebm.errors import DataError, UsageError
from scenebm.metrics import (
    ApResult,
    ConfusionCounts,
    average_precision,
    chance_level,
    confusion_counts,
    prf_scores,
)
from scenebm.scenes import SceneDescription, corrupt_scene
from scenebm.tasks import (
    TaskQuery,
    find_actor,
    find_afforded_object,
    find_extra_objects,
    find_missing_objects,
    estimate_relations,
    predict_affordances,
    rectify_detections,
)
from scenebm.vocab import VocabularySet

TASK_IDS = {
    1: "relations",
    2: "missing-objects",
    3: "extra-objects",
    4: "affordances",
    5: "afforded-object",
    6: "actor",
}
_TAG_CORRUPT, _TAG_QUERY, _TAG_CHANCE = 11, 12, 13


@dataclass
class EvalConfig:
    tasks: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    theta: float = 0.5
    theta_sweep: tuple[float, ...] = ()
    gibbs_steps: int = 20
    seed: int = 0
    corrupt_count: int = 1
    chance_trials: int = 100

    def __post_init__(self):
        if not self.tasks:
            raise UsageError("task list is empty")
        bad = [t for t in self.tasks if t not in TASK_IDS]
        if bad:
            raise UsageError(f"unknown task ids {bad}; valid ids are 1-6")


@dataclass
class ReportRow:
    task: str
    model: str
    split: str
    theta: float
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    chance_p: float
    aggregation: str = "micro"


def _object_universe(vocab: VocabularySet) -> list:
    return [("object", j) for j in range(vocab.n_objects)]


def _pair_universe(vocab: VocabularySet, kind: str) -> list:
    n_types = (
        vocab.n_relation_types if kind == "relation" else vocab.n_affordance_types
    )
    return [
        (kind, i, j, k)
        for i in range(n_types)
        for j in range(vocab.n_objects)
        for k in range(vocab.n_objects)
        if j != k
    ]


@dataclass
class _TaskOutcome:
    ground: list[frozenset] = field(default_factory=list)
    universes: list[list] = field(default_factory=list)
    probabilities: list[dict] = field(default_factory=list)
    # Task 3 flags nodes whose probability fell BELOW the threshold.
    predict_below: bool = False


def _collect(model, vocab: VocabularySet, scenes: Sequence[SceneDescription],
             task_id: int, cfg: EvalConfig) -> _TaskOutcome:
    """Run one task over the split, keeping raw probabilities so scores
    can be recomputed at any threshold."""
    out = _TaskOutcome()
    name = TASK_IDS[task_id]
    for idx, scene in enumerate(scenes):
        seed = _fold(cfg.seed, _TAG_QUERY, task_id, idx)
        if name == "relations":
            if len(scene.objects) < 2:
                continue
            query = TaskQuery("relations", scene, gibbs_steps=cfg.gibbs_steps,
                              theta=cfg.theta, seed=seed)
            result = estimate_relations(model, query)
            out.ground.append(frozenset(("relation", *t) for t in scene.relations))
            out.universes.append(_pair_universe(vocab, "relation"))
            out.probabilities.append(result.probabilities)
        elif name == "missing-objects":
            if len(scene.objects) <= cfg.corrupt_count:
                continue
            corrupted, removed = corrupt_scene(
                scene, "remove-objects", cfg.corrupt_count,
                _fold(cfg.seed, _TAG_CORRUPT, task_id, idx), vocab,
            )
            query = TaskQuery("missing-objects", corrupted,
                              gibbs_steps=cfg.gibbs_steps, theta=cfg.theta,
                              seed=seed)
            result = find_missing_objects(model, query)
            out.ground.append(frozenset(("object", j) for j in removed))
            out.universes.append(_object_universe(vocab))
            out.probabilities.append(result.probabilities)
        elif name == "extra-objects":
            if vocab.n_objects - len(scene.objects) < cfg.corrupt_count:
                continue
            corrupted, added = corrupt_scene(
                scene, "add-objects", cfg.corrupt_count,
                _fold(cfg.seed, _TAG_CORRUPT, task_id, idx), vocab,
            )
            query = TaskQuery("extra-objects", corrupted,
                              gibbs_steps=cfg.gibbs_steps, theta=cfg.theta,
                              seed=seed)
            result = find_extra_objects(model, query)
            out.predict_below = True
            out.ground.append(frozenset(("object", j) for j in added))
            out.universes.append(_object_universe(vocab))
            out.probabilities.append(result.probabilities)
        elif name == "affordances":
            if not scene.affordances:
                continue
            query = TaskQuery("affordances", scene, gibbs_steps=cfg.gibbs_steps,
                              theta=cfg.theta, seed=seed)
            result = predict_affordances(model, query)
            out.ground.append(frozenset(("affordance", *t) for t in scene.affordances))
            out.universes.append(_pair_universe(vocab, "affordance"))
            out.probabilities.append(result.probabilities)
        elif name in ("afforded-object", "actor"):
            for t_idx, (i, j, k) in enumerate(sorted(scene.affordances)):
                action = vocab.affordance_types[i]
                if name == "afforded-object":
                    query = TaskQuery(
                        name, scene, action=action, subject=vocab.objects[j],
                        gibbs_steps=cfg.gibbs_steps, theta=cfg.theta,
                        seed=_fold(seed, t_idx),
                    )
                    result = find_afforded_object(model, vocab, query)
                    ground = frozenset(
                        ("affordance", ii, jj, kk)
                        for (ii, jj, kk) in scene.affordances
                        if ii == i and jj == j
                    )
                else:
                    query = TaskQuery(
                        name, scene, action=action, target=vocab.objects[k],
                        gibbs_steps=cfg.gibbs_steps, theta=cfg.theta,
                        seed=_fold(seed, t_idx),
                    )
                    result = find_actor(model, vocab, query)
                    ground = frozenset(
                        ("affordance", ii, jj, kk)
                        for (ii, jj, kk) in scene.affordances
                        if ii == i and kk == k
                    )
                out.ground.append(ground)
                out.universes.append(sorted(result.probabilities))
                out.probabilities.append(result.probabilities)
    return out


def _fold(*parts: int) -> int:
    out = 0
    for p in parts:
        out = (out * 1000003 + int(p) + 1) % (2**63)
    return out


def _predict(probabilities: dict, theta: float, below: bool) -> frozenset:
    if below:
        return frozenset(ref for ref, p in probabilities.items() if p < theta)
    return frozenset(ref for ref, p in probabilities.items() if p > theta)


def score_outcome(outcome: _TaskOutcome, theta: float,
                  node_kind: str) -> tuple[ConfusionCounts, tuple, list]:
    """Micro counts, macro-averaged scores, per-scene counts list."""
    total = ConfusionCounts(0, 0, 0, 0, node_kind)
    per_scene = []
    macro = np.zeros(3)
    for ground, universe, probs in zip(
        outcome.ground, outcome.universes, outcome.probabilities
    ):
        predicted = _predict(probs, theta, outcome.predict_below)
        counts = confusion_counts(ground, predicted, universe, node_kind)
        per_scene.append(counts)
        total = total + counts
        macro += np.array(prf_scores(counts))
    macro = tuple(macro / max(len(per_scene), 1))
    return total, macro, per_scene


def evaluate(
    model, vocab: VocabularySet, scenes: Sequence[SceneDescription],
    cfg: EvalConfig, model_name: Optional[str] = None, split: str = "test",
) -> list[ReportRow]:
    """Score the requested tasks; one micro and one macro row per theta."""
    if not scenes:
        raise DataError("evaluation needs at least one scene")
    if model.vocab_fingerprint and model.vocab_fingerprint != vocab.fingerprint():
        raise DataError(
            "model was trained against a different vocabulary "
            "(fingerprint mismatch); retrain or pick the matching dataset"
        )
    model_name = model_name or model.kind
    rows: list[ReportRow] = []
    thetas = (cfg.theta,) + tuple(t for t in cfg.theta_sweep if t != cfg.theta)
    for task_id in cfg.tasks:
        outcome = _collect(model, vocab, scenes, task_id, cfg)
        if not outcome.ground:
            raise DataError(f"no scene in the split is usable for task {task_id}")
        kind = {1: "relation", 2: "object", 3: "object", 4: "affordance",
                5: "affordance-slice", 6: "affordance-slice"}[task_id]
        chance = chance_level(
            outcome.ground, outcome.universes, trials=cfg.chance_trials,
            seed=_fold(cfg.seed, _TAG_CHANCE, task_id), node_kind=kind,
        )
        for theta in thetas:
            micro, macro, _ = score_outcome(outcome, theta, kind)
            p, r, f1 = prf_scores(micro)
            rows.append(ReportRow(
                TASK_IDS[task_id], model_name, split, theta, micro,
                p, r, f1, chance.f1, "micro",
            ))
            rows.append(ReportRow(
                TASK_IDS[task_id], model_name, split, theta, micro,
                macro[0], macro[1], macro[2], chance.f1, "macro",
            ))
    return rows


# -- Task 7 harness --------------------------------------------------------------


@dataclass
class RectificationReport:
    ap_before: ApResult
    ap_after: ApResult
    scenes: int


def evaluate_rectification(
    model, vocab: VocabularySet, scenes: Sequence[SceneDescription],
    gibbs_steps: int = 20, theta_add: float = 0.8, theta_drop: float = 0.2,
    seed: int = 0, corrupt_drop: int = 1, corrupt_add: int = 1,
) -> RectificationReport:
    """Corrupt detections (drop + inject), rectify, compare AP before/after."""
    before, after = [], []
    used = 0
    for idx, scene in enumerate(scenes):
        if len(scene.objects) <= corrupt_drop:
            continue
        if vocab.n_objects - len(scene.objects) < corrupt_add:
            continue
        dropped_scene, _ = corrupt_scene(
            scene, "remove-objects", corrupt_drop,
            _fold(seed, _TAG_CORRUPT, 7, idx), vocab,
        )
        detected_scene, _ = corrupt_scene(
            dropped_scene, "add-objects", corrupt_add,
            _fold(seed, _TAG_CORRUPT, 7, idx, 1), vocab,
        )
        detections = [vocab.objects[j] for j in sorted(detected_scene.objects)]
        truth = frozenset(scene.objects)
        detected = frozenset(detected_scene.objects)
        universe = frozenset(range(vocab.n_objects))
        before.append(confusion_counts(truth, detected, universe, "object"))
        rect = rectify_detections(
            model, vocab, detections, gibbs_steps, theta_add, theta_drop,
            seed=_fold(seed, _TAG_QUERY, 7, idx),
        )
        after.append(
            confusion_counts(truth, rect.corrected_objects(), universe, "object")
        )
        used += 1
    if not used:
        raise DataError("no scene is usable for detector rectification")
    return RectificationReport(average_precision(before), average_precision(after), used)


# -- CSV emission ------------------------------------------------------------------


def report_csv_rows(rows: Sequence[ReportRow]) -> list[str]:
    header = "task,model,split,theta,tp,tn,fp,fn,precision,recall,f1,chance_p"
    lines = [header]
    for row in rows:
        if row.aggregation != "micro":
            continue
        c = row.counts
        lines.append(
            f"{row.task},{row.model},{row.split},{row.theta},"
            f"{c.tp},{c.tn},{c.fp},{c.fn},"
            f"{row.precision:.6f},{row.recall:.6f},{row.f1:.6f},{row.chance_p:.6g}"
        )
    return lines


def macro_csv_rows(rows: Sequence[ReportRow]) -> list[str]:
    header = "task,model,split,theta,tp,tn,fp,fn,precision,recall,f1,chance_p"
    lines = [header]
    for row in rows:
        if row.aggregation != "macro":
            continue
        c = row.counts
        lines.append(
            f"{row.task},{row.model},{row.split},{row.theta},"
            f"{c.tp},{c.tn},{c.fp},{c.fn},"
            f"{row.precision:.6f},{row.recall:.6f},{row.f1:.6f},{row.chance_p:.6g}"
        )
    return lines
