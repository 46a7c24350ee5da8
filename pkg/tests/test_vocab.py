import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenebm.errors import VocabularyError
from scenebm.vocab import (
    RelationType,
    VocabularySet,
    canonicalize_relation,
    paper_scale_vocabulary,
)


@pytest.fixture
def vocab():
    return VocabularySet(
        objects=("table", "plate", "cabinet", "man"),
        relation_types=(RelationType("left", "right"), RelationType("on-top", "under")),
        affordance_types=("sit", "hold"),
    )


def test_canonical_passthrough(vocab):
    assert canonicalize_relation(("left", 3, 7), vocab) == ("left", 3, 7)


def test_opposite_swaps_endpoints(vocab):
    assert canonicalize_relation(("right", 3, 7), vocab) == ("left", 7, 3)
    assert canonicalize_relation(("under", 5, 2), vocab) == ("on-top", 2, 5)


def test_self_relation_rejected(vocab):
    with pytest.raises(VocabularyError):
        canonicalize_relation(("left", 2, 2), vocab)


def test_unknown_relation_rejected(vocab):
    with pytest.raises(VocabularyError):
        canonicalize_relation(("near", 0, 1), vocab)


@settings(deadline=None, max_examples=50)
@given(
    name=st.sampled_from(["left", "right", "on-top", "under"]),
    j=st.integers(0, 9),
    k=st.integers(0, 9),
)
def test_canonicalize_idempotent(name, j, k):
    vocab = VocabularySet(
        objects=tuple(f"o{i}" for i in range(10)),
        relation_types=(RelationType("left", "right"), RelationType("on-top", "under")),
        affordance_types=("sit",),
    )
    if j == k:
        return
    once = canonicalize_relation((name, j, k), vocab)
    assert canonicalize_relation(once, vocab) == once


def test_duplicate_names_rejected():
    with pytest.raises(VocabularyError):
        VocabularySet(("a", "a"), (), ())
    with pytest.raises(VocabularyError):
        VocabularySet(("a",), (RelationType("x"), RelationType("x")), ())
    with pytest.raises(VocabularyError):
        VocabularySet(("a",), (RelationType("x", "y"), RelationType("y")), ())


def test_unknown_names_raise(vocab):
    with pytest.raises(VocabularyError):
        vocab.object_index("fridge")
    with pytest.raises(VocabularyError):
        vocab.affordance_index("ride")


def test_paper_scale_counts():
    vocab = paper_scale_vocabulary()
    assert vocab.n_objects == 90
    assert vocab.n_relation_types == 4
    assert vocab.n_affordance_types == 10
    assert vocab.n_relation_types + vocab.n_affordance_types == 14
    assert vocab.vector_length == 113_490


def test_json_round_trip(vocab):
    clone = VocabularySet.from_json(vocab.to_json())
    assert clone == vocab
    assert clone.fingerprint() == vocab.fingerprint()


def test_fingerprint_changes_with_content(vocab):
    other = VocabularySet(
        objects=vocab.objects + ("lamp",),
        relation_types=vocab.relation_types,
        affordance_types=vocab.affordance_types,
    )
    assert other.fingerprint() != vocab.fingerprint()
