import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scenebm.dataset import ContextSpec, split_dataset, synthesize_dataset
from scenebm.models import CosmoModel, GbmModel, ModelDims, RbmModel
from scenebm.training import TrainConfig, train
from scenebm.vocab import RelationType, VocabularySet

TINY_DIMS = ModelDims(2, 1, 1, (2,))


@pytest.fixture
def tiny_dims():
    return TINY_DIMS


@pytest.fixture
def tiny_cosmo():
    return CosmoModel.random(TINY_DIMS, sigma=0.5, rng=np.random.default_rng(0))


@pytest.fixture
def tiny_gbm():
    return GbmModel.random(TINY_DIMS, sigma=0.5, rng=np.random.default_rng(1))


@pytest.fixture
def tiny_rbm():
    return RbmModel.random(TINY_DIMS, sigma=0.5, rng=np.random.default_rng(2))


def tiny_vocabulary() -> VocabularySet:
    return VocabularySet(
        objects=("table", "plate", "cabinet", "man", "chair", "bicycle"),
        relation_types=(RelationType("on-top", "under"), RelationType("front", "behind")),
        affordance_types=("sit", "ride", "wear"),
    )


def tiny_contexts() -> list[ContextSpec]:
    return [
        ContextSpec(
            name="dining",
            objects={"table": 0.99, "plate": 0.95, "chair": 0.95, "man": 0.8},
            relations={
                ("on-top", "plate", "table"): 1.0,
                ("front", "chair", "table"): 0.9,
            },
            affordances={("sit", "man", "chair"): 0.95},
        ),
        ContextSpec(
            name="street",
            objects={"bicycle": 0.99, "man": 0.95},
            relations={("front", "man", "bicycle"): 0.9},
            affordances={("ride", "man", "bicycle"): 0.95},
        ),
    ]


@pytest.fixture(scope="session")
def planted_suite():
    """A small trained model plus its vocabulary and data splits."""
    vocab = tiny_vocabulary()
    scenes = synthesize_dataset(vocab, tiny_contexts(), 400, seed=13, noise=0.01)
    split = split_dataset(scenes, seed=13)
    config = TrainConfig(
        model_kind="cosmo", hidden=(10,), learning_rate=0.08, epochs=40,
        seed=4, patience=80,
    )
    result = train(split.train, split.validation, vocab, config)
    return {
        "vocab": vocab,
        "model": result.model,
        "result": result,
        "split": split,
        "contexts": tiny_contexts(),
        "config": config,
    }


@pytest.fixture
def zero_cosmo_medium():
    """Zero-weight model over the tiny task vocabulary."""
    vocab = tiny_vocabulary()
    dims = ModelDims.from_vocab(vocab, (8,))
    return CosmoModel.zeros(dims), vocab
