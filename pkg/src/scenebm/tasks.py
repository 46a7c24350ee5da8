"""Scene-reasoning tasks over a trained model.

Every task builds a clamped state from its query, runs Gibbs steps over
the free units, and reports per-node activation probabilities. The
probability of a node is the mean of its conditional activation over
the second half of the sampling steps (the first half serves as
burn-in), which keeps outputs deterministic for a fixed seed while
smoothing single-sample noise. Predictions binarize at the query
threshold; only the task's eligible nodes are ever reported:

    relations          relation slots among active objects (Task 1)
    missing-objects    initially inactive object nodes     (Task 2)
    extra-objects      initially active object nodes        (Task 3)
    affordances        affordance slots among active objects (Task 4)
    afforded-object    one (action, subject, *) slot slice   (Task 5)
    actor              one (action, *, object) slot slice    (Task 6)

Detector rectification (Task 7) relaxes the whole network from a
detection-initialized state and edits the object set with asymmetric
add/drop thresholds. Scene generation (Task 8) clamps chosen context
units on and samples the visible layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from scenebm.errors import DataError, UsageError
from scenebm.models.state import ModelState, UnitRef
from scenebm.sampling import BufferedUniforms, sigmoid, sweep
from scenebm.scenes import SceneDescription
from scenebm.schedules import CONSTANT_UNIT, AnnealSchedule, temperature
from scenebm.vocab import VocabularySet

TASK_NAMES = (
    "relations",
    "missing-objects",
    "extra-objects",
    "affordances",
    "afforded-object",
    "actor",
)


@dataclass
class TaskQuery:
    task: str
    scene: Optional[SceneDescription] = None
    action: Optional[str] = None
    subject: Optional[str] = None
    target: Optional[str] = None
    gibbs_steps: int = 20
    theta: float = 0.5
    seed: int = 0
    schedule: Optional[AnnealSchedule] = None
    clamp_affordances_for_context: bool = True

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise UsageError(f"threshold must lie in (0,1), got {self.theta}")
        if self.gibbs_steps < 1:
            raise UsageError("need at least one sampling step")


@dataclass
class TaskResult:
    probabilities: dict[UnitRef, float]
    predicted: frozenset
    reconstructed: Optional[SceneDescription]
    ranking: Optional[list[tuple[int, float]]] = None
    diagnostics: dict = field(default_factory=dict)


def _run_chain(model, state: ModelState, groups, eligible, query: TaskQuery,
               prob_of) -> tuple[dict, ModelState, float]:
    """Drive the chain, averaging eligible-node probabilities over the
    second half of the steps; returns (probabilities, final state, final T)."""
    schedule = query.schedule or CONSTANT_UNIT
    rng = BufferedUniforms(np.random.default_rng(query.seed))
    keep_from = query.gibbs_steps // 2
    sums = {ref: 0.0 for ref in eligible}
    kept = 0
    t = 1.0
    for step in range(query.gibbs_steps):
        t = temperature(schedule, step)
        sweep(model, state, t, rng, groups)
        if step >= keep_from:
            probs = prob_of(state, t)
            for ref in eligible:
                sums[ref] += probs(ref)
            kept += 1
    return (
        {ref: total / max(kept, 1) for ref, total in sums.items()},
        state,
        t,
    )


def _object_prob_fn(model):
    def prob_of(state, t):
        cache = {}

        def probs(ref):
            j = ref[1]
            if j not in cache:
                cache[j] = float(sigmoid(model.net_input(state, ref) / t))
            return cache[j]

        return probs

    return prob_of


def _pair_prob_fn(model, kind: str):
    def prob_of(state, t):
        if model.kind == "cosmo":
            net = model.relation_net(state) if kind == "relation" else model.affordance_net(state)
            table = sigmoid(net / t)

            def probs(ref):
                return float(table[ref[1], ref[2], ref[3]])

            return probs

        def probs(ref):
            return float(sigmoid(model.net_input(state, ref) / t))

        return probs

    return prob_of


def _eligible_pairs(active: Sequence[int], n_types: int, kind: str) -> list[UnitRef]:
    return [
        (kind, i, j, k)
        for i in range(n_types)
        for j in active
        for k in active
        if j != k
    ]


# -- Task 1 -------------------------------------------------------------------


def estimate_relations(model, query: TaskQuery) -> TaskResult:
    """Recover the relation layer from objects (and affordances) alone."""
    scene = query.scene
    if scene is None or len(scene.objects) < 2:
        raise DataError("relation estimation needs a scene with at least 2 objects")
    state = ModelState.from_scene(model.dims, scene, clamp_visible=True)
    state.r[:] = 0.0  # relation nodes start cleared and free among eligible
    if not query.clamp_affordances_for_context:
        state.a[:] = 0.0
    active = sorted(scene.objects)
    eligible = _eligible_pairs(active, model.dims.n_relation_types, "relation")
    for ref in eligible:
        state.clamp_r[ref[1], ref[2], ref[3]] = False
    probs, final, t = _run_chain(
        model, state, ("hidden", "relations"), eligible, query,
        _pair_prob_fn(model, "relation"),
    )
    predicted = frozenset(ref for ref, p in probs.items() if p > query.theta)
    return TaskResult(probs, predicted, final.to_scene(),
                      diagnostics=_diag(query, t))


# -- Tasks 2 and 3 ---------------------------------------------------------------


def _evidence_object_probs(model, scene: SceneDescription, eligible,
                           query: TaskQuery) -> tuple[dict, float]:
    """Average object conditionals with the full scene held as evidence.

    The whole visible layer stays clamped to the input on every step, so
    sampled objects never feed back into the hidden layer: each step
    draws fresh hidden activations from the evidence and reads off the
    eligible objects' conditional probabilities.
    """
    state = ModelState.from_scene(model.dims, scene, clamp_visible=True)
    schedule = query.schedule or CONSTANT_UNIT
    rng = BufferedUniforms(np.random.default_rng(query.seed))
    sums = {ref: 0.0 for ref in eligible}
    t = 1.0
    for step in range(query.gibbs_steps):
        t = temperature(schedule, step)
        sweep(model, state, t, rng, ("hidden",))
        for ref in eligible:
            sums[ref] += float(sigmoid(model.net_input(state, ref) / t))
    return {ref: s / query.gibbs_steps for ref, s in sums.items()}, t


def find_missing_objects(model, query: TaskQuery) -> TaskResult:
    """Activate context-mandated objects absent from the scene."""
    scene = query.scene
    if scene is None:
        raise DataError("missing-object search needs a scene")
    eligible = [
        ("object", j) for j in range(model.dims.n_objects) if j not in scene.objects
    ]
    probs, t = _evidence_object_probs(model, scene, eligible, query)
    predicted = frozenset(ref for ref, p in probs.items() if p > query.theta)
    recon = SceneDescription.make(
        objects=scene.objects | {ref[1] for ref in predicted},
        relations=scene.relations,
        affordances=scene.affordances,
    )
    return TaskResult(probs, predicted, recon, diagnostics=_diag(query, t))


def find_extra_objects(model, query: TaskQuery) -> TaskResult:
    """Flag scene objects the context assigns low probability."""
    scene = query.scene
    if scene is None or not scene.objects:
        raise DataError("extra-object search needs a non-empty scene")
    eligible = [("object", j) for j in sorted(scene.objects)]
    probs, t = _evidence_object_probs(model, scene, eligible, query)
    predicted = frozenset(ref for ref, p in probs.items() if p < query.theta)
    keep = scene.objects - {ref[1] for ref in predicted}
    recon = SceneDescription.make(
        objects=keep,
        relations=frozenset(
            r for r in scene.relations if r[1] in keep and r[2] in keep
        ),
        affordances=frozenset(
            a for a in scene.affordances if a[1] in keep and a[2] in keep
        ),
    )
    return TaskResult(probs, predicted, recon, diagnostics=_diag(query, t))


# -- Task 4 -------------------------------------------------------------------


def predict_affordances(model, query: TaskQuery) -> TaskResult:
    """Recover the affordance layer from objects and relations."""
    scene = query.scene
    if scene is None:
        raise DataError("affordance prediction needs a scene")
    state = ModelState.from_scene(model.dims, scene, clamp_visible=True)
    state.a[:] = 0.0
    active = sorted(scene.objects)
    eligible = _eligible_pairs(active, model.dims.n_affordance_types, "affordance")
    for ref in eligible:
        state.clamp_a[ref[1], ref[2], ref[3]] = False
    probs, final, t = _run_chain(
        model, state, ("hidden", "affordances"), eligible, query,
        _pair_prob_fn(model, "affordance"),
    )
    predicted = frozenset(ref for ref, p in probs.items() if p > query.theta)
    return TaskResult(probs, predicted, final.to_scene(),
                      diagnostics=_diag(query, t))


# -- Tasks 5 and 6 ---------------------------------------------------------------


def find_afforded_object(model, vocab: VocabularySet, query: TaskQuery) -> TaskResult:
    """Rank candidate targets of (action, subject, *)."""
    return _slice_query(model, vocab, query, slot="target")


def find_actor(model, vocab: VocabularySet, query: TaskQuery) -> TaskResult:
    """Rank candidate subjects of (action, *, target)."""
    return _slice_query(model, vocab, query, slot="subject")


def _slice_query(model, vocab: VocabularySet, query: TaskQuery, slot: str) -> TaskResult:
    scene = query.scene or SceneDescription.make()
    if query.action is None:
        raise DataError("slice queries need an action name")
    i_a = vocab.affordance_index(query.action)
    if slot == "target":
        if query.subject is None:
            raise DataError("afforded-object query needs a subject name")
        anchor = vocab.object_index(query.subject)
        eligible = [
            ("affordance", i_a, anchor, k)
            for k in range(model.dims.n_objects)
            if k != anchor
        ]
        candidate_of = lambda ref: ref[3]
    else:
        if query.target is None:
            raise DataError("actor query needs a target object name")
        anchor = vocab.object_index(query.target)
        eligible = [
            ("affordance", i_a, j, anchor)
            for j in range(model.dims.n_objects)
            if j != anchor
        ]
        candidate_of = lambda ref: ref[2]

    # Hide the queried slice and any candidate endpoints evidenced only
    # by it, then let the model fill both back in.
    slice_set = {(ref[1], ref[2], ref[3]) for ref in eligible}
    affordances = frozenset(t for t in scene.affordances if t not in slice_set)
    evidenced: set[int] = set()
    for (i, j, k) in scene.relations | affordances:
        evidenced.update((j, k))
    candidates = {candidate_of(ref) for ref in eligible}
    hidden_objects = {
        c for c in candidates & scene.objects
        if c not in evidenced and any(
            t in slice_set for t in scene.affordances if c in (t[1], t[2])
        )
    }
    base = SceneDescription.make(
        objects=scene.objects - hidden_objects,
        relations=scene.relations,
        affordances=affordances,
    )
    state = ModelState.from_scene(model.dims, base, clamp_visible=True)
    for ref in eligible:
        state.clamp_a[ref[1], ref[2], ref[3]] = False
    for c in sorted((candidates - scene.objects) | hidden_objects):
        state.clamp_o[c] = False
    probs, final, t = _run_chain(
        model, state, ("hidden", "objects", "affordances"), eligible, query,
        _pair_prob_fn(model, "affordance"),
    )
    ranking = sorted(
        ((candidate_of(ref), p) for ref, p in probs.items()),
        key=lambda item: (-item[1], item[0]),
    )
    predicted = frozenset(ref for ref, p in probs.items() if p > query.theta)
    return TaskResult(probs, predicted, final.to_scene(), ranking,
                      _diag(query, t))


# -- Task 7 -------------------------------------------------------------------


@dataclass
class RectificationResult:
    kept: frozenset[int]
    added: frozenset[int]
    dropped: frozenset[int]
    probabilities: dict[int, float]

    def corrected_objects(self) -> frozenset[int]:
        return (self.kept | self.added) - self.dropped


def rectify_detections(
    model,
    vocab: VocabularySet,
    detected_objects: Sequence[str],
    gibbs_steps: int = 20,
    theta_add: float = 0.8,
    theta_drop: float = 0.2,
    seed: int = 0,
) -> RectificationResult:
    """Edit a detector's object list toward the modeled context.

    Object nodes start at the detections and nothing is clamped; after
    relaxing, initially active objects ending below ``theta_drop`` are
    dropped and initially inactive ones ending above ``theta_add`` are
    added.
    """
    if not detected_objects:
        raise DataError("rectification needs at least one detection")
    detected = {vocab.object_index(name) for name in detected_objects}
    state = ModelState.zeros(model.dims)
    for j in detected:
        state.o[j] = 1.0
    rng = BufferedUniforms(np.random.default_rng(seed))
    keep_from = gibbs_steps // 2
    sums = np.zeros(model.dims.n_objects)
    kept_steps = 0
    for step in range(gibbs_steps):
        sweep(model, state, 1.0, rng)
        if step >= keep_from:
            for j in range(model.dims.n_objects):
                sums[j] += sigmoid(model.net_input(state, ("object", j)))
            kept_steps += 1
    probs = sums / max(kept_steps, 1)
    dropped = frozenset(j for j in detected if probs[j] < theta_drop)
    added = frozenset(
        j for j in range(model.dims.n_objects)
        if j not in detected and probs[j] > theta_add
    )
    kept = frozenset(detected - dropped)
    return RectificationResult(kept, added, dropped,
                               {j: float(p) for j, p in enumerate(probs)})


# -- Task 8 -------------------------------------------------------------------


def generate_scene(
    model,
    context_units: Sequence[int],
    gibbs_steps: int = 20,
    seed: int = 0,
    free_hidden: bool = False,
    schedule: Optional[AnnealSchedule] = None,
) -> SceneDescription:
    """Sample a scene with chosen first-layer hidden units clamped on.

    Remaining hidden units are clamped to zero by default, or left free
    with ``free_hidden``.
    """
    h0 = model.dims.hidden[0]
    for idx in context_units:
        if not 0 <= idx < h0:
            raise DataError(f"hidden index {idx} out of range (H={h0})")
    state = ModelState.zeros(model.dims)
    for idx in context_units:
        state.h[0][idx] = 1.0
    state.clamp_h[0][:] = True
    if free_hidden:
        state.clamp_h[0][:] = False
        for idx in context_units:
            state.clamp_h[0][idx] = True
    groups = ("objects", "relations", "affordances")
    if free_hidden or model.dims.n_layers > 1:
        groups = ("hidden",) + groups
    rng = BufferedUniforms(np.random.default_rng(seed))
    for step in range(gibbs_steps):
        t = temperature(schedule or CONSTANT_UNIT, step)
        sweep(model, state, t, rng, groups)
    return state.to_scene()


def _diag(query: TaskQuery, final_t: float) -> dict:
    return {"sweeps": query.gibbs_steps, "final_temperature": final_t}


def run_task(model, vocab: VocabularySet, query: TaskQuery) -> TaskResult:
    """Dispatch a query by task name."""
    if query.task == "relations":
        return estimate_relations(model, query)
    if query.task == "missing-objects":
        return find_missing_objects(model, query)
    if query.task == "extra-objects":
        return find_extra_objects(model, query)
    if query.task == "affordances":
        return predict_affordances(model, query)
    if query.task == "afforded-object":
        return find_afforded_object(model, vocab, query)
    if query.task == "actor":
        return find_actor(model, vocab, query)
    raise UsageError(f"unknown task {query.task!r}; choose from {TASK_NAMES}")
