import json

import numpy as np
import pytest

from scenebm.dataset import (
    ContextSpec,
    dataset_fingerprint,
    load_dataset,
    save_dataset,
    split_dataset,
    synthesize_dataset,
)
from scenebm.errors import DataError, DatasetFormatError
from scenebm.scenes import SceneDescription

from conftest import tiny_contexts, tiny_vocabulary


def _scenes(n):
    return [SceneDescription.make(objects=[i % 3]) for i in range(n)]


def test_split_sizes_paper_scale():
    split = split_dataset(_scenes(6976), (0.6, 0.3, 0.1), seed=0)
    assert sum(split.sizes()) == 6976
    for size, expected in zip(split.sizes(), (4186, 2093, 697)):
        assert abs(size - expected) <= 1


def test_split_deterministic():
    scenes = _scenes(10)
    a = split_dataset(scenes, seed=1)
    b = split_dataset(scenes, seed=1)
    assert a.train == b.train and a.test == b.test and a.validation == b.validation


def test_split_is_partition():
    scenes = [SceneDescription.make(objects=[i % 5], context=str(i)) for i in range(103)]
    split = split_dataset(scenes, seed=7)
    combined = split.train + split.test + split.validation
    assert sorted(s.context for s in combined) == sorted(s.context for s in scenes)
    assert all(abs(len(part) - ratio * 103) <= 1 for part, ratio in
               zip((split.train, split.test, split.validation), (0.6, 0.3, 0.1)))


def test_split_rejects_bad_input():
    with pytest.raises(DataError):
        split_dataset([], seed=0)
    with pytest.raises(DataError):
        split_dataset(_scenes(5), (0.5, 0.3, 0.1), seed=0)


# -- synthesis -------------------------------------------------------------


def test_certain_objects_always_present():
    vocab = tiny_vocabulary()
    ctx = ContextSpec("sure", {"table": 1.0, "plate": 1.0})
    scenes = synthesize_dataset(vocab, [ctx], 100, seed=2, noise=0.0)
    ti, pi = vocab.object_index("table"), vocab.object_index("plate")
    assert all({ti, pi} <= s.objects for s in scenes)
    assert all(s.context == "sure" for s in scenes)


def test_disjoint_contexts_block_diagonal():
    vocab = tiny_vocabulary()
    ctx_a = ContextSpec("a", {"table": 1.0, "plate": 1.0})
    ctx_b = ContextSpec("b", {"man": 1.0, "bicycle": 1.0})
    scenes = synthesize_dataset(vocab, [ctx_a, ctx_b], 400, seed=5, noise=0.0)
    cooc = np.zeros((vocab.n_objects, vocab.n_objects))
    for scene in scenes:
        for j in scene.objects:
            for k in scene.objects:
                cooc[j, k] += 1
    a_ids = [vocab.object_index(n) for n in ("table", "plate")]
    b_ids = [vocab.object_index(n) for n in ("man", "bicycle")]
    assert cooc[np.ix_(a_ids, b_ids)].sum() == 0
    assert cooc[np.ix_(a_ids, a_ids)].sum() > 0
    assert cooc[np.ix_(b_ids, b_ids)].sum() > 0


def test_triple_frequency_matches_probability():
    vocab = tiny_vocabulary()
    ctx = ContextSpec(
        "half", {"table": 1.0, "plate": 1.0},
        relations={("on-top", "plate", "table"): 0.5},
    )
    scenes = synthesize_dataset(vocab, [ctx], 10_000, seed=8, noise=0.0)
    triple = (0, vocab.object_index("plate"), vocab.object_index("table"))
    freq = sum(triple in s.relations for s in scenes) / len(scenes)
    assert abs(freq - 0.5) < 0.02


def test_noise_adds_spurious_objects():
    vocab = tiny_vocabulary()
    ctx = ContextSpec("a", {"table": 1.0})
    scenes = synthesize_dataset(vocab, [ctx], 2000, seed=3, noise=0.1)
    spurious = sum(len(s.objects - {vocab.object_index("table")}) for s in scenes)
    expected = 2000 * (vocab.n_objects - 1) * 0.1
    assert abs(spurious - expected) / expected < 0.15


def test_synthesize_rejects_bad_args():
    vocab = tiny_vocabulary()
    ctx = ContextSpec("a", {"table": 1.0})
    with pytest.raises(DataError):
        synthesize_dataset(vocab, [], 5, seed=0)
    with pytest.raises(DataError):
        synthesize_dataset(vocab, [ctx], 0, seed=0)
    with pytest.raises(DataError):
        synthesize_dataset(vocab, [ContextSpec("bad", {"table": 1.5})], 5, seed=0)
    with pytest.raises(DataError):
        synthesize_dataset(vocab, [ContextSpec("bad", {})], 5, seed=0)


# -- file round trips ----------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    vocab = tiny_vocabulary()
    scenes = synthesize_dataset(vocab, tiny_contexts(), 50, seed=4, noise=0.02)
    path = tmp_path / "scenes.json"
    save_dataset(scenes, vocab, path)
    loaded_vocab, loaded = load_dataset(path)
    assert loaded_vocab == vocab
    assert loaded == scenes


def test_empty_dataset_round_trip(tmp_path):
    vocab = tiny_vocabulary()
    path = tmp_path / "empty.json"
    save_dataset([], vocab, path)
    loaded_vocab, loaded = load_dataset(path)
    assert loaded == []
    assert loaded_vocab == vocab


def test_unknown_object_name_reports_scene_and_token(tmp_path):
    vocab = tiny_vocabulary()
    payload = {
        "vocabulary": vocab.to_json(),
        "scenes": [
            {"objects": ["table"], "relations": [], "affordances": []},
            {"objects": ["spaceship"], "relations": [], "affordances": []},
        ],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(DatasetFormatError) as err:
        load_dataset(path)
    assert "scene 1" in str(err.value)
    assert "spaceship" in str(err.value)


def test_malformed_file_errors(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(DatasetFormatError):
        load_dataset(path)
    missing = tmp_path / "nowhere.json"
    with pytest.raises(DataError):
        load_dataset(missing)
    path.write_text(json.dumps({"scenes": []}))
    with pytest.raises(DatasetFormatError):
        load_dataset(path)


def test_fingerprint_stable_and_sensitive(tmp_path):
    vocab = tiny_vocabulary()
    scenes = synthesize_dataset(vocab, tiny_contexts(), 20, seed=1, noise=0.0)
    fp1 = dataset_fingerprint(scenes, vocab)
    fp2 = dataset_fingerprint(list(scenes), vocab)
    assert fp1 == fp2
    assert dataset_fingerprint(scenes[:-1], vocab) != fp1
