"""Joint binary state of a scene model, with clamp masks.

A state holds the visible layer as structured arrays -- objects ``o``
(O,), relations ``r`` (Rt, O, O), affordances ``a`` (At, O, O) -- plus
one binary vector per hidden layer. Boolean masks of the same shapes
mark clamped units: clamped units are never touched by sampling.

Diagonal relation/affordance slots (j == k) are structural zeros; they
are created clamped and stay zero forever.

Unit references are plain tuples:

    ("object", j)
    ("relation", i, j, k)
    ("affordance", i, j, k)
    ("hidden", layer, l)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from scenebm.errors import DataError
from scenebm.scenes import SceneDescription
from scenebm.vocab import VocabularySet

UnitRef = tuple


@dataclass(frozen=True)
class ModelDims:
    """Vocabulary-side and hidden-side sizes of a model."""

    n_objects: int
    n_relation_types: int
    n_affordance_types: int
    hidden: tuple[int, ...]

    def __post_init__(self):
        if self.n_objects < 1 or not self.hidden or any(h < 1 for h in self.hidden):
            raise DataError(f"invalid model dimensions: {self}")

    @classmethod
    def from_vocab(cls, vocab: VocabularySet, hidden) -> "ModelDims":
        if isinstance(hidden, int):
            hidden = (hidden,)
        return cls(
            vocab.n_objects,
            vocab.n_relation_types,
            vocab.n_affordance_types,
            tuple(int(h) for h in hidden),
        )

    @property
    def n_layers(self) -> int:
        return len(self.hidden)

    @property
    def n_visible(self) -> int:
        o = self.n_objects
        return o + (self.n_relation_types + self.n_affordance_types) * o * o

    def n_units(self) -> int:
        """Free units: visibles without diagonal slots, plus all hidden."""
        o = self.n_objects
        pairs = o * (o - 1)
        return o + (self.n_relation_types + self.n_affordance_types) * pairs + sum(
            self.hidden
        )

    def to_json(self) -> dict:
        return {
            "n_objects": self.n_objects,
            "n_relation_types": self.n_relation_types,
            "n_affordance_types": self.n_affordance_types,
            "hidden": list(self.hidden),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModelDims":
        return cls(
            int(data["n_objects"]),
            int(data["n_relation_types"]),
            int(data["n_affordance_types"]),
            tuple(int(h) for h in data["hidden"]),
        )


class ModelState:
    """Binary assignment of every unit, plus clamp masks."""

    __slots__ = ("dims", "o", "r", "a", "h", "clamp_o", "clamp_r", "clamp_a", "clamp_h")

    def __init__(self, dims: ModelDims):
        o, rt, at = dims.n_objects, dims.n_relation_types, dims.n_affordance_types
        self.dims = dims
        self.o = np.zeros(o)
        self.r = np.zeros((rt, o, o))
        self.a = np.zeros((at, o, o))
        self.h = [np.zeros(hm) for hm in dims.hidden]
        self.clamp_o = np.zeros(o, dtype=bool)
        self.clamp_r = np.zeros((rt, o, o), dtype=bool)
        self.clamp_a = np.zeros((at, o, o), dtype=bool)
        self.clamp_h = [np.zeros(hm, dtype=bool) for hm in dims.hidden]
        eye = np.eye(o, dtype=bool)
        self.clamp_r[:, eye] = True
        self.clamp_a[:, eye] = True

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, dims: ModelDims) -> "ModelState":
        return cls(dims)

    @classmethod
    def from_scene(
        cls,
        dims: ModelDims,
        scene: SceneDescription,
        clamp_visible: bool = True,
    ) -> "ModelState":
        """State with the scene written into the visible layer.

        With ``clamp_visible`` every visible unit (active or not) is
        clamped, leaving only the hidden layers free.
        """
        state = cls(dims)
        for j in scene.objects:
            state.o[j] = 1.0
        for (i, j, k) in scene.relations:
            state.r[i, j, k] = 1.0
        for (i, j, k) in scene.affordances:
            state.a[i, j, k] = 1.0
        if clamp_visible:
            state.clamp_o[:] = True
            state.clamp_r[:] = True
            state.clamp_a[:] = True
        return state

    def copy(self) -> "ModelState":
        dup = ModelState(self.dims)
        dup.o = self.o.copy()
        dup.r = self.r.copy()
        dup.a = self.a.copy()
        dup.h = [hm.copy() for hm in self.h]
        dup.clamp_o = self.clamp_o.copy()
        dup.clamp_r = self.clamp_r.copy()
        dup.clamp_a = self.clamp_a.copy()
        dup.clamp_h = [cm.copy() for cm in self.clamp_h]
        return dup

    # -- views -------------------------------------------------------------

    def flat_visible(self) -> np.ndarray:
        """Visible layer in the flat scene-vector layout."""
        return np.concatenate([self.o, self.r.ravel(), self.a.ravel()])

    def set_flat_visible(self, vec: np.ndarray) -> None:
        o = self.dims.n_objects
        rt = self.dims.n_relation_types
        self.o[:] = vec[:o]
        self.r[:] = vec[o : o + rt * o * o].reshape(self.r.shape)
        self.a[:] = vec[o + rt * o * o :].reshape(self.a.shape)

    def clamp_mask_flat(self) -> np.ndarray:
        return np.concatenate(
            [self.clamp_o, self.clamp_r.ravel(), self.clamp_a.ravel()]
        )

    def to_scene(self, context: Optional[str] = None) -> SceneDescription:
        """Decode current visible bits into a scene description."""
        objects = frozenset(int(j) for j in np.flatnonzero(self.o > 0.5))
        relations = frozenset(
            (int(i), int(j), int(k)) for i, j, k in zip(*np.nonzero(self.r > 0.5))
        )
        affordances = frozenset(
            (int(i), int(j), int(k)) for i, j, k in zip(*np.nonzero(self.a > 0.5))
        )
        endpoints = {e for t in relations | affordances for e in (t[1], t[2])}
        return SceneDescription(
            objects, relations, affordances, context, not endpoints <= objects
        )

    # -- clamping helpers ---------------------------------------------------

    def clamp_all(self) -> None:
        self.clamp_o[:] = True
        self.clamp_r[:] = True
        self.clamp_a[:] = True
        for cm in self.clamp_h:
            cm[:] = True

    def is_clamped(self, ref: UnitRef) -> bool:
        kind = ref[0]
        if kind == "object":
            return bool(self.clamp_o[ref[1]])
        if kind == "relation":
            return bool(self.clamp_r[ref[1], ref[2], ref[3]])
        if kind == "affordance":
            return bool(self.clamp_a[ref[1], ref[2], ref[3]])
        if kind == "hidden":
            return bool(self.clamp_h[ref[1]][ref[2]])
        raise DataError(f"unknown unit reference {ref!r}")

    def get(self, ref: UnitRef) -> float:
        kind = ref[0]
        if kind == "object":
            return float(self.o[ref[1]])
        if kind == "relation":
            return float(self.r[ref[1], ref[2], ref[3]])
        if kind == "affordance":
            return float(self.a[ref[1], ref[2], ref[3]])
        if kind == "hidden":
            return float(self.h[ref[1]][ref[2]])
        raise DataError(f"unknown unit reference {ref!r}")

    def set(self, ref: UnitRef, value: float) -> None:
        kind = ref[0]
        if kind == "object":
            self.o[ref[1]] = value
        elif kind == "relation":
            self.r[ref[1], ref[2], ref[3]] = value
        elif kind == "affordance":
            self.a[ref[1], ref[2], ref[3]] = value
        elif kind == "hidden":
            self.h[ref[1]][ref[2]] = value
        else:
            raise DataError(f"unknown unit reference {ref!r}")

    def units(self, include_clamped: bool = True) -> Iterator[UnitRef]:
        """All unit references in layout order, skipping diagonal slots."""
        dims = self.dims
        for j in range(dims.n_objects):
            ref = ("object", j)
            if include_clamped or not self.clamp_o[j]:
                yield ref
        for i in range(dims.n_relation_types):
            for j in range(dims.n_objects):
                for k in range(dims.n_objects):
                    if j == k:
                        continue
                    if include_clamped or not self.clamp_r[i, j, k]:
                        yield ("relation", i, j, k)
        for i in range(dims.n_affordance_types):
            for j in range(dims.n_objects):
                for k in range(dims.n_objects):
                    if j == k:
                        continue
                    if include_clamped or not self.clamp_a[i, j, k]:
                        yield ("affordance", i, j, k)
        for m, hm in enumerate(dims.hidden):
            for l in range(hm):
                if include_clamped or not self.clamp_h[m][l]:
                    yield ("hidden", m, l)

    def equal_on_clamped(self, other: "ModelState") -> bool:
        """Bitwise equality of every clamped coordinate."""
        if not np.array_equal(self.o[self.clamp_o], other.o[self.clamp_o]):
            return False
        if not np.array_equal(self.r[self.clamp_r], other.r[self.clamp_r]):
            return False
        if not np.array_equal(self.a[self.clamp_a], other.a[self.clamp_a]):
            return False
        for hm, om, cm in zip(self.h, other.h, self.clamp_h):
            if not np.array_equal(hm[cm], om[cm]):
                return False
        return True
