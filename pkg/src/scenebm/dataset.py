"""Dataset I/O, splitting, and planted-context synthesis.

The canonical dataset file is JSON with an embedded vocabulary header::

    {
      "vocabulary": {
        "objects": ["table", ...],
        "relations": [{"name": "on-top", "opposite": "under"}, ...],
        "affordances": ["sit", ...]
      },
      "scenes": [
        {
          "objects": ["table", "plate"],
          "relations": [["on-top", "plate", "table"]],
          "affordances": [],
          "context": "kitchen"
        },
        ...
      ]
    }

Relation entries may use either spelling of a pair; they are stored
canonically. Synthetic datasets are drawn from planted contexts: each
scene picks a context uniformly, samples that context's objects and
triples independently by their inclusion probabilities, then applies a
global spurious-object noise rate.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from scenebm.errors import DataError, DatasetFormatError, VocabularyError
from scenebm.scenes import SceneDescription
from scenebm.vocab import VocabularySet, canonicalize_relation_indexed


@dataclass
class DatasetSplit:
    """Disjoint train/test/validation partition of a scene list."""

    train: list[SceneDescription]
    test: list[SceneDescription]
    validation: list[SceneDescription]
    seed: int

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.test), len(self.validation))


def split_dataset(
    scenes: Sequence[SceneDescription],
    ratios: tuple[float, float, float] = (0.6, 0.3, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Shuffle and partition scenes into (train, test, validation).

    Ratios follow that order. Sizes use largest-remainder rounding so
    each part is within one scene of ratio*N and the parts sum to N.
    """
    if not scenes:
        raise DataError("cannot split an empty dataset")
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise DataError(f"split ratios must be non-negative and sum to 1: {ratios}")
    n = len(scenes)
    raw = [r * n for r in ratios]
    sizes = [int(x) for x in raw]
    remainders = sorted(
        range(3), key=lambda i: (raw[i] - sizes[i], -i), reverse=True
    )
    for i in remainders[: n - sum(sizes)]:
        sizes[i] += 1
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [scenes[i] for i in order]
    train = shuffled[: sizes[0]]
    test = shuffled[sizes[0] : sizes[0] + sizes[1]]
    validation = shuffled[sizes[0] + sizes[1] :]
    return DatasetSplit(train, test, validation, seed)


# -- planted-context synthesis ---------------------------------------------

NamedTriple = tuple[str, str, str]


@dataclass
class ContextSpec:
    """One planted context: entities with independent inclusion probabilities."""

    name: str
    objects: dict[str, float]
    relations: dict[NamedTriple, float] = field(default_factory=dict)
    affordances: dict[NamedTriple, float] = field(default_factory=dict)

    def validate(self, vocab: VocabularySet) -> None:
        if not self.objects:
            raise DataError(f"context {self.name!r} lists no objects")
        for name, p in self.objects.items():
            vocab.object_index(name)
            _check_prob(self.name, name, p)
        for (rel, subj, obj), p in self.relations.items():
            vocab.relation_lookup(rel)
            vocab.object_index(subj)
            vocab.object_index(obj)
            _check_prob(self.name, (rel, subj, obj), p)
        for (aff, subj, obj), p in self.affordances.items():
            vocab.affordance_index(aff)
            vocab.object_index(subj)
            vocab.object_index(obj)
            _check_prob(self.name, (aff, subj, obj), p)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "objects": dict(self.objects),
            "relations": [[*t, p] for t, p in self.relations.items()],
            "affordances": [[*t, p] for t, p in self.affordances.items()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ContextSpec":
        try:
            return cls(
                name=str(data["name"]),
                objects={str(k): float(v) for k, v in data["objects"].items()},
                relations={
                    (str(a), str(b), str(c)): float(p)
                    for a, b, c, p in data.get("relations", [])
                },
                affordances={
                    (str(a), str(b), str(c)): float(p)
                    for a, b, c, p in data.get("affordances", [])
                },
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetFormatError(f"malformed context record: {exc}") from exc


def _check_prob(ctx: str, what, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DataError(f"context {ctx!r}: probability {p} for {what} not in [0,1]")


def synthesize_dataset(
    vocab: VocabularySet,
    contexts: Sequence[ContextSpec],
    n: int,
    seed: int,
    noise: float = 0.0,
) -> list[SceneDescription]:
    """Draw n scenes from planted contexts.

    Per scene: pick a context uniformly, include each listed object with
    its probability, activate each non-listed object with probability
    ``noise``, then include each listed triple with its probability when
    both endpoints came out active. The generating context name is
    recorded on the scene.
    """
    if n <= 0:
        raise DataError(f"scene count must be positive, got {n}")
    if not contexts:
        raise DataError("no contexts given")
    if not 0.0 <= noise <= 1.0:
        raise DataError(f"noise rate {noise} not in [0,1]")
    for ctx in contexts:
        ctx.validate(vocab)
    rng = np.random.default_rng(seed)
    scenes = []
    for _ in range(n):
        ctx = contexts[int(rng.integers(len(contexts)))]
        active: set[int] = set()
        listed = {vocab.object_index(name) for name in ctx.objects}
        for name, p in ctx.objects.items():
            if rng.random() < p:
                active.add(vocab.object_index(name))
        if noise > 0.0:
            for j in range(vocab.n_objects):
                if j not in listed and rng.random() < noise:
                    active.add(j)
        relations = set()
        for (rel, subj, obj), p in ctx.relations.items():
            triple = canonicalize_relation_indexed(
                (rel, vocab.object_index(subj), vocab.object_index(obj)), vocab
            )
            if triple[1] in active and triple[2] in active and rng.random() < p:
                relations.add(triple)
        affordances = set()
        for (aff, subj, obj), p in ctx.affordances.items():
            i = vocab.affordance_index(aff)
            js, ko = vocab.object_index(subj), vocab.object_index(obj)
            if js == ko:
                raise DataError(f"context {ctx.name!r}: self-affordance {aff}")
            if js in active and ko in active and rng.random() < p:
                affordances.add((i, js, ko))
        scenes.append(
            SceneDescription(
                frozenset(active),
                frozenset(relations),
                frozenset(affordances),
                context=ctx.name,
            )
        )
    return scenes


# -- file format -------------------------------------------------------------


def scenes_to_json(scenes: Sequence[SceneDescription], vocab: VocabularySet) -> dict:
    records = []
    for scene in scenes:
        rel_names = sorted(
            (vocab.relation_types[i].name, vocab.objects[j], vocab.objects[k])
            for (i, j, k) in scene.relations
        )
        aff_names = sorted(
            (vocab.affordance_types[i], vocab.objects[j], vocab.objects[k])
            for (i, j, k) in scene.affordances
        )
        record = {
            "objects": sorted(vocab.objects[j] for j in scene.objects),
            "relations": [list(t) for t in rel_names],
            "affordances": [list(t) for t in aff_names],
        }
        if scene.context is not None:
            record["context"] = scene.context
        records.append(record)
    return {"vocabulary": vocab.to_json(), "scenes": records}


def save_dataset(
    scenes: Sequence[SceneDescription], vocab: VocabularySet, path: str | Path
) -> None:
    payload = scenes_to_json(scenes, vocab)
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8"
    )


def load_dataset(path: str | Path) -> tuple[VocabularySet, list[SceneDescription]]:
    """Load the canonical JSON format; errors name the offending scene."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "vocabulary" not in payload:
        raise DatasetFormatError(f"{path}: missing 'vocabulary' header")
    vocab = VocabularySet.from_json(payload["vocabulary"])
    scenes = []
    for idx, record in enumerate(payload.get("scenes", [])):
        try:
            objects = frozenset(vocab.object_index(name) for name in record["objects"])
            relations = frozenset(
                canonicalize_relation_indexed(
                    (rel, vocab.object_index(subj), vocab.object_index(obj)), vocab
                )
                for rel, subj, obj in record.get("relations", [])
            )
            affordances = frozenset(
                (
                    vocab.affordance_index(aff),
                    vocab.object_index(subj),
                    vocab.object_index(obj),
                )
                for aff, subj, obj in record.get("affordances", [])
            )
        except VocabularyError as exc:
            raise DatasetFormatError(f"{path}: scene {idx}: {exc}") from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetFormatError(f"{path}: scene {idx}: malformed record") from exc
        scene = SceneDescription(
            objects, relations, affordances, record.get("context")
        )
        try:
            scene.validate(vocab)
        except (DataError, VocabularyError) as exc:
            raise DatasetFormatError(f"{path}: scene {idx}: {exc}") from exc
        scenes.append(scene)
    return vocab, scenes


def dataset_fingerprint(scenes: Sequence[SceneDescription], vocab: VocabularySet) -> str:
    blob = json.dumps(scenes_to_json(scenes, vocab), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
