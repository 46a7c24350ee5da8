"""Scene descriptions and their flat binary encoding.

The flat layout packs object bits first, then one O*O block per relation
type, then one O*O block per affordance type:

    object j                -> j
    relation  (i, j, k)     -> O + i*O*O + j*O + k
    affordance (i, j, k)    -> O + Rt*O*O + i*O*O + j*O + k

Diagonal (j == k) slots are allocated so the blocks stay O*O-regular but
are permanently zero; no self-relations exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from scenebm.errors import DataError, VocabularyError
from scenebm.vocab import VocabularySet

Triple = tuple[int, int, int]


@dataclass(frozen=True)
class SceneDescription:
    """A scene as index sets: objects, relation triples, affordance triples.

    Triples are (type, subject, object) in canonical relation direction.
    ``inconsistent`` marks scenes whose triples mention objects that are
    not in ``objects`` (decoded from free-running model states, for
    example); well-formed labeled scenes keep it False.
    """

    objects: frozenset[int]
    relations: frozenset[Triple] = field(default_factory=frozenset)
    affordances: frozenset[Triple] = field(default_factory=frozenset)
    context: Optional[str] = None
    inconsistent: bool = False

    @classmethod
    def make(
        cls,
        objects: Iterable[int] = (),
        relations: Iterable[Triple] = (),
        affordances: Iterable[Triple] = (),
        context: Optional[str] = None,
        inconsistent: bool = False,
    ) -> "SceneDescription":
        return cls(
            frozenset(objects),
            frozenset(tuple(t) for t in relations),
            frozenset(tuple(t) for t in affordances),
            context,
            inconsistent,
        )

    def validate(self, vocab: VocabularySet) -> None:
        """Raise if any index is out of bounds or a triple dangles."""
        o = vocab.n_objects
        for j in self.objects:
            if not 0 <= j < o:
                raise VocabularyError(f"object index {j} out of bounds (O={o})")
        for kind, triples, n_types in (
            ("relation", self.relations, vocab.n_relation_types),
            ("affordance", self.affordances, vocab.n_affordance_types),
        ):
            for (i, j, k) in triples:
                if not 0 <= i < n_types:
                    raise VocabularyError(f"{kind} type index {i} out of bounds")
                if not (0 <= j < o and 0 <= k < o):
                    raise VocabularyError(f"{kind} endpoint out of bounds: {(i, j, k)}")
                if j == k:
                    raise VocabularyError(f"self-{kind} not allowed: {(i, j, k)}")
                if not self.inconsistent and (
                    j not in self.objects or k not in self.objects
                ):
                    raise DataError(
                        f"{kind} triple {(i, j, k)} mentions an object "
                        "missing from the scene"
                    )

    def n_active(self) -> int:
        return len(self.objects) + len(self.relations) + len(self.affordances)


# -- flat index arithmetic ------------------------------------------------


def relation_bit(vocab: VocabularySet, i: int, j: int, k: int) -> int:
    o = vocab.n_objects
    return o + i * o * o + j * o + k


def affordance_bit(vocab: VocabularySet, i: int, j: int, k: int) -> int:
    o = vocab.n_objects
    return o + vocab.n_relation_types * o * o + i * o * o + j * o + k


def encode_scene(scene: SceneDescription, vocab: VocabularySet) -> np.ndarray:
    """Flat binary vector of the scene; exactly one bit per active node."""
    scene.validate(vocab)
    vec = np.zeros(vocab.vector_length, dtype=np.uint8)
    for j in scene.objects:
        vec[j] = 1
    for (i, j, k) in scene.relations:
        vec[relation_bit(vocab, i, j, k)] = 1
    for (i, j, k) in scene.affordances:
        vec[affordance_bit(vocab, i, j, k)] = 1
    return vec


def decode_scene(vec: np.ndarray, vocab: VocabularySet) -> SceneDescription:
    """Inverse of :func:`encode_scene`.

    Triples whose endpoints are inactive objects are still decoded; the
    result is flagged inconsistent in that case.
    """
    o = vocab.n_objects
    if vec.shape != (vocab.vector_length,):
        raise DataError(
            f"vector length {vec.shape} does not match vocabulary "
            f"(expected ({vocab.vector_length},))"
        )
    objects = frozenset(int(j) for j in np.flatnonzero(vec[:o]))
    relations = set()
    affordances = set()
    block = o * o
    rel_area = vec[o : o + vocab.n_relation_types * block]
    aff_area = vec[o + vocab.n_relation_types * block :]
    for flat in np.flatnonzero(rel_area):
        i, rest = divmod(int(flat), block)
        j, k = divmod(rest, o)
        relations.add((i, j, k))
    for flat in np.flatnonzero(aff_area):
        i, rest = divmod(int(flat), block)
        j, k = divmod(rest, o)
        affordances.add((i, j, k))
    endpoints = {j for (_, j, k) in relations | affordances for j in (j, k)}
    inconsistent = not endpoints <= objects
    return SceneDescription(
        objects, frozenset(relations), frozenset(affordances), None, inconsistent
    )


# -- corruption for task evaluation ---------------------------------------


def corrupt_scene(
    scene: SceneDescription,
    mode: str,
    k: int,
    seed: int,
    vocab: VocabularySet,
) -> tuple[SceneDescription, frozenset[int]]:
    """Remove or inject k objects; returns (corrupted scene, affected set).

    ``remove-objects`` deletes k random objects along with every triple
    touching them. ``add-objects`` inserts k random objects that were
    absent (no triples are invented for them).
    """
    if k <= 0:
        raise DataError(f"corruption count must be positive, got {k}")
    rng = np.random.default_rng(seed)
    if mode == "remove-objects":
        if len(scene.objects) <= k:
            raise DataError(
                f"cannot remove {k} of {len(scene.objects)} objects; "
                "at least one must remain"
            )
        removed = frozenset(
            int(x) for x in rng.choice(sorted(scene.objects), size=k, replace=False)
        )
        keep = scene.objects - removed
        relations = frozenset(
            t for t in scene.relations if t[1] in keep and t[2] in keep
        )
        affordances = frozenset(
            t for t in scene.affordances if t[1] in keep and t[2] in keep
        )
        return replace(
            scene, objects=keep, relations=relations, affordances=affordances
        ), removed
    if mode == "add-objects":
        candidates = sorted(set(range(vocab.n_objects)) - scene.objects)
        if len(candidates) < k:
            raise DataError(
                f"cannot add {k} objects: only {len(candidates)} names unused"
            )
        added = frozenset(int(x) for x in rng.choice(candidates, size=k, replace=False))
        return replace(scene, objects=scene.objects | added), added
    raise DataError(f"unknown corruption mode {mode!r}")
