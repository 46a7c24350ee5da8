import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenebm.errors import DataError
from scenebm.metrics import (
    ChanceLevel,
    ConfusionCounts,
    average_precision,
    chance_level,
    confusion_counts,
    prf_scores,
)

from reference import naive_confusion


def test_exact_prediction_has_no_errors():
    ground = frozenset({"a", "b"})
    counts = confusion_counts(ground, ground, frozenset("abcdef"))
    assert (counts.fp, counts.fn) == (0, 0)
    assert counts.tp == 2 and counts.tn == 4


def test_worked_example():
    universe = frozenset(range(10))
    counts = confusion_counts(
        frozenset({0, 1, 2, 3}), frozenset({0, 1, 8}), universe
    )
    assert (counts.tp, counts.fp, counts.fn, counts.tn) == (2, 1, 2, 5)
    assert counts.total() == 10


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_counts_match_naive_loop(data):
    universe = frozenset(range(data.draw(st.integers(1, 30))))
    ground = frozenset(data.draw(st.sets(st.sampled_from(sorted(universe)))))
    predicted = frozenset(data.draw(st.sets(st.sampled_from(sorted(universe)))))
    counts = confusion_counts(ground, predicted, universe)
    assert (counts.tp, counts.tn, counts.fp, counts.fn) == naive_confusion(
        ground, predicted, universe
    )


def test_sets_must_stay_in_universe():
    with pytest.raises(DataError):
        confusion_counts(frozenset({9}), frozenset(), frozenset({0, 1}))


def test_prf_worked_example():
    p, r, f1 = prf_scores(ConfusionCounts(tp=2, tn=5, fp=1, fn=2))
    assert p == pytest.approx(2 / 3)
    assert r == pytest.approx(1 / 2)
    assert f1 == pytest.approx(4 / 7)


def test_prf_degenerate_conventions():
    assert prf_scores(ConfusionCounts(0, 10, 0, 0)) == (0.0, 0.0, 0.0)
    assert prf_scores(ConfusionCounts(0, 5, 3, 0)) == (0.0, 0.0, 0.0)
    assert prf_scores(ConfusionCounts(0, 5, 0, 3)) == (0.0, 0.0, 0.0)


def test_reported_headline_f1_identity():
    """The published precision/recall pair reproduces its own F1."""
    p, r = 0.1511, 0.3112
    f1 = 2 * p * r / (p + r)
    assert f1 == pytest.approx(0.2034, abs=5e-4)


@settings(deadline=None, max_examples=50)
@given(
    tp=st.integers(0, 50), tn=st.integers(0, 50),
    fp=st.integers(0, 50), fn=st.integers(0, 50),
    scale=st.integers(1, 9),
)
def test_prf_scale_free(tp, tn, fp, fn, scale):
    base = prf_scores(ConfusionCounts(tp, tn, fp, fn))
    scaled = prf_scores(ConfusionCounts(tp * scale, tn * scale, fp * scale, fn * scale))
    assert base == pytest.approx(scaled)


@settings(deadline=None, max_examples=50)
@given(tp=st.integers(0, 20), fp=st.integers(0, 20), fn=st.integers(0, 20))
def test_f1_bounds(tp, fp, fn):
    p, r, f1 = prf_scores(ConfusionCounts(tp, 0, fp, fn))
    assert 0.0 <= f1 <= max(p, r) + 1e-12
    if p + r:
        assert f1 == pytest.approx(2 * p * r / (p + r))


# -- average precision -----------------------------------------------------------


def test_average_precision_basic():
    scenes = [ConfusionCounts(2, 0, 0, 0), ConfusionCounts(1, 0, 1, 0)]
    result = average_precision(scenes)
    assert result.value == pytest.approx(0.75)
    assert result.skipped_scenes == 0


def test_average_precision_identical_scenes():
    scenes = [ConfusionCounts(3, 1, 1, 2)] * 5
    assert average_precision(scenes).value == pytest.approx(0.75)


def test_average_precision_skips_empty_predictions():
    scenes = [ConfusionCounts(1, 0, 0, 0), ConfusionCounts(0, 5, 0, 2)]
    result = average_precision(scenes)
    assert result.value == pytest.approx(1.0)
    assert result.skipped_scenes == 1
    assert result.used_scenes == 1


def test_average_precision_empty_inputs():
    with pytest.raises(DataError):
        average_precision([])
    with pytest.raises(DataError):
        average_precision([ConfusionCounts(0, 5, 0, 1)])


# -- chance levels ----------------------------------------------------------------


def test_chance_matches_hypergeometric_expectation():
    """Random activation of k among n scores k/n on average."""
    n, k, trials = 12, 3, 200
    universe = list(range(n))
    ground = frozenset(range(k))
    result = chance_level([ground], [universe], trials=trials, seed=5)
    expected = k / n
    # Exact per-trial variance of TP/k for sampling k of n without replacement.
    var_tp = k * (k / n) * (1 - k / n) * (n - k) / (n - 1)
    se = math.sqrt(var_tp) / k / math.sqrt(trials)
    assert abs(result.precision - expected) < 3 * se


@pytest.mark.parametrize("n,k", [(5, 2), (20, 7), (9, 9)])
def test_chance_brute_force_small_universes(n, k):
    universe = list(range(n))
    ground = frozenset(range(k))
    result = chance_level([ground], [universe], trials=400, seed=1)
    if k == n:
        assert result.precision == pytest.approx(1.0)
    var_tp = k * (k / n) * (1 - k / n) * (n - k) / max(n - 1, 1)
    se = math.sqrt(var_tp) / k / math.sqrt(400) if var_tp else 1e-9
    assert abs(result.precision - k / n) < max(3 * se, 1e-9)


def test_chance_precision_equals_recall_and_f1():
    result = chance_level(
        [frozenset({1, 2}), frozenset({0})],
        [list(range(8)), list(range(5))],
        trials=50, seed=3,
    )
    assert result.precision == pytest.approx(result.recall, abs=1e-12)
    assert result.precision == pytest.approx(result.f1, abs=1e-12)


def test_chance_deterministic():
    args = ([frozenset({1})], [list(range(6))])
    a = chance_level(*args, trials=30, seed=9)
    b = chance_level(*args, trials=30, seed=9)
    assert (a.precision, a.recall, a.f1) == (b.precision, b.recall, b.f1)


def test_chance_rejects_bad_input():
    with pytest.raises(DataError):
        chance_level([frozenset({1})], [[]], trials=10, seed=0)
    with pytest.raises(DataError):
        chance_level([frozenset({9})], [[0, 1]], trials=10, seed=0)
    with pytest.raises(DataError):
        chance_level([frozenset()], [[0]], trials=0, seed=0)
