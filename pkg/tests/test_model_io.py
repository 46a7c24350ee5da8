import numpy as np
import pytest

from scenebm.errors import ModelFileError
from scenebm.models import (
    CosmoModel,
    GbmModel,
    ModelDims,
    RbmModel,
    load_model,
    save_model,
)

from conftest import tiny_vocabulary


def _tensors_equal(a, b):
    ta, tb = a.weight_tensors(), b.weight_tensors()
    return set(ta) == set(tb) and all(np.array_equal(ta[k], tb[k]) for k in ta)


@pytest.mark.parametrize("cls,seed", [(CosmoModel, 0), (GbmModel, 1), (RbmModel, 2)])
def test_round_trip_bit_exact(cls, seed, tmp_path, tiny_dims):
    model = cls.random(tiny_dims, sigma=0.5, rng=np.random.default_rng(seed))
    model.vocab_fingerprint = "f" * 64
    model.schedule_used = {"kind": "emc", "t0": 4.0, "a": 0.9}
    path = tmp_path / "model.bin"
    save_model(model, path)
    loaded, vocab = load_model(path)
    assert loaded.kind == model.kind
    assert _tensors_equal(model, loaded)
    assert loaded.vocab_fingerprint == model.vocab_fingerprint
    assert loaded.schedule_used == model.schedule_used
    assert vocab is None
    # a second save produces identical bytes
    again = tmp_path / "again.bin"
    save_model(loaded, again)
    assert path.read_bytes() == again.read_bytes()


def test_round_trip_multilayer(tmp_path):
    dims = ModelDims(2, 1, 1, (3, 2))
    model = CosmoModel.random(dims, sigma=0.3, rng=np.random.default_rng(5))
    path = tmp_path / "deep.bin"
    save_model(model, path)
    loaded, _ = load_model(path)
    assert loaded.dims == dims
    assert _tensors_equal(model, loaded)


def test_round_trip_with_vocabulary(tmp_path, tiny_dims):
    vocab = tiny_vocabulary()
    dims = ModelDims.from_vocab(vocab, (4,))
    model = RbmModel.random(dims, sigma=0.1, rng=np.random.default_rng(7))
    path = tmp_path / "vocab.bin"
    save_model(model, path, vocabulary=vocab)
    loaded, loaded_vocab = load_model(path)
    assert loaded_vocab == vocab
    assert loaded.vocab_fingerprint == vocab.fingerprint()


def test_missing_file(tmp_path):
    with pytest.raises(ModelFileError):
        load_model(tmp_path / "nothere.bin")


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTAMODELFILE")
    with pytest.raises(ModelFileError):
        load_model(path)


def test_truncated_payload(tmp_path, tiny_dims):
    model = CosmoModel.random(tiny_dims, sigma=0.5, rng=np.random.default_rng(3))
    path = tmp_path / "model.bin"
    save_model(model, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 16])
    with pytest.raises(ModelFileError):
        load_model(path)


def test_trailing_bytes(tmp_path, tiny_dims):
    model = RbmModel.random(tiny_dims, sigma=0.5, rng=np.random.default_rng(4))
    path = tmp_path / "model.bin"
    save_model(model, path)
    path.write_bytes(path.read_bytes() + b"extra")
    with pytest.raises(ModelFileError):
        load_model(path)


def test_corrupt_header(tmp_path, tiny_dims):
    model = RbmModel.random(tiny_dims, sigma=0.5, rng=np.random.default_rng(4))
    path = tmp_path / "model.bin"
    save_model(model, path)
    raw = bytearray(path.read_bytes())
    raw[14] = 0xFF  # stomp the JSON header
    path.write_bytes(bytes(raw))
    with pytest.raises(ModelFileError):
        load_model(path)
