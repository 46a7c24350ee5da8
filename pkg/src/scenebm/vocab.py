"""Vocabularies for objects, relation types and affordance types.

Relation types come in opposite pairs (``left``/``right``); each pair is
collapsed to a single canonical type because the opposite direction is
just the same edge with swapped endpoints. Canonical direction is the
first-listed name of the pair; triples written with the opposite name
are rewritten by swapping subject and object.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from scenebm.errors import VocabularyError


@dataclass(frozen=True)
class RelationType:
    """A canonical relation name plus the optional opposite spelling."""

    name: str
    opposite: Optional[str] = None


@dataclass(frozen=True)
class VocabularySet:
    """Ordered object, relation-type and affordance-type vocabularies.

    Indices are stable positions in the ordered lists. Names must be
    unique within their list and opposites may not collide with any
    canonical relation name.
    """

    objects: tuple[str, ...]
    relation_types: tuple[RelationType, ...]
    affordance_types: tuple[str, ...]

    _object_index: dict = field(init=False, repr=False, compare=False, hash=False)
    _relation_index: dict = field(init=False, repr=False, compare=False, hash=False)
    _affordance_index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        _check_unique("object", self.objects)
        _check_unique("affordance", self.affordance_types)
        rel_names = [r.name for r in self.relation_types]
        _check_unique("relation", rel_names)

        object.__setattr__(
            self, "_object_index", {name: i for i, name in enumerate(self.objects)}
        )
        object.__setattr__(
            self,
            "_affordance_index",
            {name: i for i, name in enumerate(self.affordance_types)},
        )
        # Relation lookup maps both spellings: canonical -> (i, False),
        # opposite -> (i, True) where True means "swap endpoints".
        index: dict[str, tuple[int, bool]] = {}
        for i, rel in enumerate(self.relation_types):
            for name, swapped in ((rel.name, False), (rel.opposite, True)):
                if name is None:
                    continue
                if name in index:
                    raise VocabularyError(f"relation name {name!r} is not unique")
                index[name] = (i, swapped)
        object.__setattr__(self, "_relation_index", index)

    # -- counts ---------------------------------------------------------

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_relation_types(self) -> int:
        return len(self.relation_types)

    @property
    def n_affordance_types(self) -> int:
        return len(self.affordance_types)

    @property
    def vector_length(self) -> int:
        """Length of the flat scene vector: O + (Rt+At)*O*O."""
        o = self.n_objects
        return o + (self.n_relation_types + self.n_affordance_types) * o * o

    # -- lookups --------------------------------------------------------

    def object_index(self, name: str) -> int:
        try:
            return self._object_index[name]
        except KeyError:
            raise VocabularyError(f"unknown object name {name!r}") from None

    def relation_lookup(self, name: str) -> tuple[int, bool]:
        """Return (type index, endpoints swapped?) for either spelling."""
        try:
            return self._relation_index[name]
        except KeyError:
            raise VocabularyError(f"unknown relation name {name!r}") from None

    def affordance_index(self, name: str) -> int:
        try:
            return self._affordance_index[name]
        except KeyError:
            raise VocabularyError(f"unknown affordance name {name!r}") from None

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "objects": list(self.objects),
            "relations": [
                {"name": r.name, "opposite": r.opposite} for r in self.relation_types
            ],
            "affordances": list(self.affordance_types),
        }

    @classmethod
    def from_json(cls, data: dict) -> "VocabularySet":
        try:
            objects = tuple(str(x) for x in data["objects"])
            relations = tuple(
                RelationType(str(r["name"]), r.get("opposite"))
                for r in data["relations"]
            )
            affordances = tuple(str(x) for x in data["affordances"])
        except (KeyError, TypeError) as exc:
            raise VocabularyError(f"malformed vocabulary record: {exc}") from exc
        return cls(objects, relations, affordances)

    def fingerprint(self) -> str:
        """Stable digest of the vocabulary contents."""
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _check_unique(kind: str, names: Sequence[str]) -> None:
    seen = set()
    for name in names:
        if name in seen:
            raise VocabularyError(f"duplicate {kind} name {name!r}")
        seen.add(name)


def canonicalize_relation(
    triple: tuple[str, int, int], vocab: VocabularySet
) -> tuple[str, int, int]:
    """Rewrite a relation triple into canonical direction.

    ``(right, 3, 7)`` becomes ``(left, 7, 3)`` when ``right`` is the
    opposite spelling of ``left``. Already-canonical triples pass
    through unchanged, so the operation is idempotent.
    """
    name, j, k = triple
    if j == k:
        raise VocabularyError(f"self-relation ({name!r}, {j}, {j}) is not allowed")
    idx, swapped = vocab.relation_lookup(name)
    canonical = vocab.relation_types[idx].name
    if swapped:
        return (canonical, k, j)
    return (canonical, j, k)


def canonicalize_relation_indexed(
    triple: tuple[str, int, int], vocab: VocabularySet
) -> tuple[int, int, int]:
    """Like :func:`canonicalize_relation` but returns the type index."""
    name, j, k = canonicalize_relation(triple, vocab)
    idx, _ = vocab.relation_lookup(name)
    return (idx, j, k)


def paper_scale_vocabulary(
    n_objects: int = 90,
    relation_pairs: Iterable[tuple[str, str]] = (
        ("left", "right"),
        ("front", "behind"),
        ("on-top", "under"),
        ("above", "below"),
    ),
    affordances: Optional[Sequence[str]] = None,
) -> VocabularySet:
    """Vocabulary with the dimensions of the full-scale indoor/outdoor corpus.

    90 objects, 4 collapsed relation types and 10 affordance types give a
    flat vector of length 113,490. Object names are synthetic placeholders
    unless a real corpus supplies them.
    """
    if affordances is None:
        affordances = (
            "eat",
            "push",
            "play",
            "wear",
            "sit",
            "hold",
            "carry",
            "ride",
            "use",
            "move",
        )
    objects = tuple(f"object{i:02d}" for i in range(n_objects))
    relations = tuple(RelationType(a, b) for a, b in relation_pairs)
    return VocabularySet(objects, relations, tuple(affordances))
