"""Built-in planted-context suites for synthetic data.

Two profiles ship with the package. ``desk`` is a 12-object, 3-context
household vocabulary small enough to train in seconds. ``benchmark`` is
a 20-object, 5-context suite with disjoint contexts and near-deterministic
structure, sized so task-recovery scores sit far above random-guessing
chance levels. Both use two relation types (on-top/under, front/behind)
and two affordance types (use, hold for benchmark; sit, hold for desk).
"""

from __future__ import annotations

from scenebm.dataset import ContextSpec
from scenebm.vocab import RelationType, VocabularySet

PROFILES = ("desk", "benchmark")


def desk_vocabulary() -> VocabularySet:
    return VocabularySet(
        objects=(
            "table", "chair", "plate", "cup", "fridge", "bed",
            "pillow", "lamp", "monitor", "keyboard", "man", "book",
        ),
        relation_types=(
            RelationType("on-top", "under"),
            RelationType("front", "behind"),
        ),
        affordance_types=("sit", "hold"),
    )


def desk_contexts() -> list[ContextSpec]:
    return [
        ContextSpec(
            name="kitchen",
            objects={
                "table": 0.98, "chair": 0.95, "plate": 0.95,
                "cup": 0.9, "fridge": 0.95, "man": 0.5,
            },
            relations={
                ("on-top", "plate", "table"): 0.9,
                ("on-top", "cup", "table"): 0.85,
                ("front", "chair", "table"): 0.8,
            },
            affordances={
                ("sit", "man", "chair"): 0.8,
                ("hold", "man", "cup"): 0.7,
            },
        ),
        ContextSpec(
            name="bedroom",
            objects={
                "bed": 0.98, "pillow": 0.95, "lamp": 0.9,
                "book": 0.6, "man": 0.5,
            },
            relations={
                ("on-top", "pillow", "bed"): 0.9,
                ("on-top", "book", "bed"): 0.5,
                ("front", "lamp", "bed"): 0.7,
            },
            affordances={
                ("sit", "man", "bed"): 0.7,
                ("hold", "man", "book"): 0.6,
            },
        ),
        ContextSpec(
            name="office",
            objects={
                "table": 0.95, "chair": 0.95, "monitor": 0.95,
                "keyboard": 0.9, "man": 0.7, "book": 0.4,
            },
            relations={
                ("on-top", "monitor", "table"): 0.9,
                ("on-top", "keyboard", "table"): 0.85,
                ("front", "chair", "table"): 0.8,
            },
            affordances={
                ("sit", "man", "chair"): 0.8,
                ("hold", "man", "keyboard"): 0.5,
            },
        ),
    ]


def benchmark_vocabulary() -> VocabularySet:
    return VocabularySet(
        objects=(
            "chef", "stove", "pan", "fridge",
            "clerk", "desk", "monitor", "keyboard",
            "cyclist", "bicycle", "bench", "fountain",
            "sleeper", "bed", "pillow", "lamp",
            "carpenter", "workbench", "hammer", "toolbox",
        ),
        relation_types=(
            RelationType("on-top", "under"),
            RelationType("front", "behind"),
        ),
        affordance_types=("use", "hold"),
    )


def benchmark_contexts() -> list[ContextSpec]:
    def ctx(name, members, relations, affordances):
        return ContextSpec(
            name=name,
            objects={m: 0.97 for m in members},
            relations={t: 0.9 for t in relations},
            affordances={t: 0.85 for t in affordances},
        )

    return [
        ctx(
            "kitchen",
            ("chef", "stove", "pan", "fridge"),
            [("on-top", "pan", "stove"), ("front", "chef", "stove"),
             ("front", "fridge", "stove")],
            [("use", "chef", "stove"), ("hold", "chef", "pan")],
        ),
        ctx(
            "office",
            ("clerk", "desk", "monitor", "keyboard"),
            [("on-top", "monitor", "desk"), ("on-top", "keyboard", "desk"),
             ("front", "clerk", "desk")],
            [("use", "clerk", "monitor"), ("hold", "clerk", "keyboard")],
        ),
        ctx(
            "park",
            ("cyclist", "bicycle", "bench", "fountain"),
            [("front", "cyclist", "bicycle"), ("front", "bench", "fountain"),
             ("on-top", "cyclist", "bench")],
            [("use", "cyclist", "bicycle"), ("hold", "cyclist", "bench")],
        ),
        ctx(
            "bedroom",
            ("sleeper", "bed", "pillow", "lamp"),
            [("on-top", "sleeper", "bed"), ("on-top", "pillow", "bed"),
             ("front", "lamp", "bed")],
            [("use", "sleeper", "lamp"), ("hold", "sleeper", "pillow")],
        ),
        ctx(
            "workshop",
            ("carpenter", "workbench", "hammer", "toolbox"),
            [("on-top", "hammer", "workbench"), ("front", "carpenter", "workbench"),
             ("on-top", "toolbox", "workbench")],
            [("use", "carpenter", "hammer"), ("hold", "carpenter", "toolbox")],
        ),
    ]


def profile(name: str):
    """Return (vocabulary, contexts, default noise) for a built-in profile."""
    if name == "desk":
        return desk_vocabulary(), desk_contexts(), 0.01
    if name == "benchmark":
        return benchmark_vocabulary(), benchmark_contexts(), 0.005
    raise ValueError(f"unknown profile {name!r}; choose from {PROFILES}")
