import math

import numpy as np
import pytest

from scenebm import oracle
from scenebm.errors import BoundExceededError
from scenebm.models import CosmoModel, GbmModel, ModelDims, RbmModel
from scenebm.models.state import ModelState
from scenebm.sampling import estimate_marginals
from scenebm.scenes import SceneDescription

from reference import naive_enumerate


def test_zero_weights_partition_is_two_to_n(tiny_dims):
    for model in (CosmoModel.zeros(tiny_dims), GbmModel.zeros(tiny_dims),
                  RbmModel.zeros(tiny_dims)):
        n = len(oracle.free_unit_refs(model))
        assert oracle.exact_partition(model) == pytest.approx(2**n, rel=1e-12)


def test_two_unit_single_edge_partition():
    dims = ModelDims(1, 0, 0, (1,))
    model = RbmModel.zeros(dims)
    w = 1.3
    model.w_vh[0, 0] = w
    assert oracle.exact_partition(model) == pytest.approx(3.0 + math.exp(w), rel=1e-12)


@pytest.mark.parametrize("fixture", ["tiny_cosmo", "tiny_gbm", "tiny_rbm"])
def test_partition_matches_naive_enumerator(fixture, request):
    model = request.getfixturevalue(fixture)
    _, z_naive, probs_naive = naive_enumerate(model)
    assert oracle.exact_partition(model) == pytest.approx(z_naive, rel=1e-12)
    table = oracle.exact_distribution(model)
    for bits, p in probs_naive.items():
        assert table[bits] == pytest.approx(p, rel=1e-10)


def test_distribution_sums_to_one(tiny_cosmo):
    table = oracle.exact_distribution(tiny_cosmo)
    assert float(table.probs.sum()) == pytest.approx(1.0, abs=1e-10)


def test_zero_weights_distribution_uniform(tiny_dims):
    table = oracle.exact_distribution(CosmoModel.zeros(tiny_dims))
    assert np.allclose(table.probs, 1.0 / len(table))


def test_strong_pair_weight_creates_mode():
    dims = ModelDims(1, 0, 0, (1,))
    model = RbmModel.zeros(dims)
    model.w_vh[0, 0] = 6.0
    table = oracle.exact_distribution(model)
    mode = int(np.argmax(table.probs))
    bits = tuple((mode >> i) & 1 for i in range(len(table.refs)))
    assert bits == (1, 1)


def test_marginal_consistency(tiny_cosmo):
    """Summing the joint over a unit's complement equals its marginal."""
    table = oracle.exact_distribution(tiny_cosmo)
    marginals = table.marginals()
    idx = np.arange(len(table))
    for i, ref in enumerate(table.refs):
        direct = float(table.probs[((idx >> i) & 1).astype(bool)].sum())
        assert marginals[ref] == pytest.approx(direct, abs=1e-12)


def test_clamped_enumeration_restricts_space(tiny_cosmo, tiny_dims):
    scene = SceneDescription.make(objects=[0, 1], relations=[(0, 0, 1)])
    clamped = ModelState.from_scene(tiny_dims, scene, clamp_visible=True)
    table = oracle.exact_distribution(tiny_cosmo, clamped)
    assert len(table.refs) == 2  # only the hidden units stay free
    assert float(table.probs.sum()) == pytest.approx(1.0, abs=1e-12)


def test_free_edge_expectations_zero_weights(tiny_dims):
    stats = oracle.exact_edge_expectations(CosmoModel.zeros(tiny_dims))
    off = ~np.eye(tiny_dims.n_objects, dtype=bool)
    assert np.allclose(stats.tensors["w_hv"], 0.25)
    assert np.allclose(stats.tensors["w_r"][:, off], 0.125)
    assert np.allclose(stats.tensors["w_a"][:, off], 0.125)
    # Two independent fair relation slots against a fair hidden bit.
    assert np.allclose(stats.tensors["w_rh"], 2 * 0.25)


def test_fully_clamped_expectations_are_bit_products(tiny_cosmo, tiny_dims):
    rng = np.random.default_rng(3)
    state = ModelState.zeros(tiny_dims)
    for ref in state.units():
        state.set(ref, float(rng.integers(2)))
    state.clamp_all()
    stats = oracle.exact_edge_expectations(tiny_cosmo, state)
    expected_hv = np.outer(state.h[0], state.o)
    assert np.allclose(stats.tensors["w_hv"], expected_hv)
    pair = np.outer(state.o, state.o)
    assert np.allclose(stats.tensors["w_r"], state.r * pair[None])
    assert np.allclose(
        stats.tensors["w_rh"], np.outer(state.r.sum(axis=(1, 2)), state.h[0])
    )


def test_gibbs_edge_products_approach_exact(tiny_cosmo, tiny_dims):
    exact = oracle.exact_edge_expectations(tiny_cosmo)
    from scenebm.sampling import BufferedUniforms, sweep

    chain = ModelState.zeros(tiny_dims)
    buf = BufferedUniforms(np.random.default_rng(18))
    prod_hv = np.zeros_like(exact.tensors["w_hv"])
    prod_r = np.zeros_like(exact.tensors["w_r"])
    n = 0
    for i in range(101_000):
        sweep(tiny_cosmo, chain, 1.0, buf)
        if i >= 1000:
            prod_hv += np.outer(chain.h[0], chain.o)
            pair = np.outer(chain.o, chain.o)
            prod_r += chain.r * pair[None]
            n += 1
    assert np.max(np.abs(prod_hv / n - exact.tensors["w_hv"])) < 0.02
    assert np.max(np.abs(prod_r / n - exact.tensors["w_r"])) < 0.02


def test_gibbs_kl_non_increasing_with_sweeps(tiny_cosmo, tiny_dims):
    """KL(empirical || exact) shrinks as the chain runs longer."""
    table = oracle.exact_distribution(tiny_cosmo)
    refs = table.refs

    def empirical_kl(sweeps, seed):
        from scenebm.sampling import BufferedUniforms, sweep

        counts = np.zeros(len(table))
        chain = ModelState.zeros(tiny_dims)
        buf = BufferedUniforms(np.random.default_rng(seed))
        for _ in range(sweeps):
            sweep(tiny_cosmo, chain, 1.0, buf)
            idx = 0
            for i, ref in enumerate(refs):
                if chain.get(ref) > 0.5:
                    idx |= 1 << i
            counts[idx] += 1
        emp = (counts + 1e-12) / counts.sum()
        return float(np.sum(emp * (np.log(emp) - table.log_probs)))

    kls = [empirical_kl(s, 23) for s in (1000, 10_000, 100_000)]
    assert kls[1] <= kls[0] + 0.01
    assert kls[2] <= kls[1] + 0.01


@pytest.mark.parametrize("fixture", ["tiny_gbm", "tiny_rbm"])
def test_baseline_gibbs_matches_oracle_marginals(fixture, request, tiny_dims):
    """The baselines' samplers (sequential visible scan for the pairwise
    model) target the same distribution the oracle enumerates."""
    model = request.getfixturevalue(fixture)
    exact = oracle.exact_distribution(model).marginals()
    acc = estimate_marginals(model, ModelState.zeros(tiny_dims),
                             sweeps=40_000, burn_in=500, rng=29)
    worst = max(abs(acc.mean_of(ref) - p) for ref, p in exact.items())
    assert worst < 0.03


def test_clamped_object_conditional_distribution(tiny_cosmo, tiny_dims):
    """With objects clamped, the chain samples the exact conditional
    joint over the remaining units (total variation under 0.05)."""
    from scenebm.sampling import BufferedUniforms, sweep

    state = ModelState.zeros(tiny_dims)
    state.o[0] = 1.0
    state.clamp_o[:] = True
    table = oracle.exact_distribution(tiny_cosmo, state)
    refs = table.refs
    counts = np.zeros(len(table))
    chain = state.copy()
    buf = BufferedUniforms(np.random.default_rng(33))
    n = 30_000
    for i in range(n + 500):
        sweep(tiny_cosmo, chain, 1.0, buf,
              groups=("hidden", "relations", "affordances"))
        if i >= 500:
            idx = 0
            for u, ref in enumerate(refs):
                if chain.get(ref) > 0.5:
                    idx |= 1 << u
            counts[idx] += 1
    tv = 0.5 * float(np.abs(counts / n - table.probs).sum())
    assert tv < 0.05


def test_bound_enforced(tiny_dims):
    big = ModelDims(4, 1, 1, (4,))  # 4 + 2*12 + 4 = 32 free units
    model = CosmoModel.zeros(big)
    with pytest.raises(BoundExceededError):
        oracle.exact_log_partition(model)
    with pytest.raises(BoundExceededError):
        oracle.exact_log_partition(model, max_units=30)


def test_visible_likelihoods_normalize(tiny_cosmo, tiny_dims):
    """Summing p(v) over every visible configuration gives one."""
    state = ModelState.zeros(tiny_dims)
    visible_refs = [r for r in state.units() if r[0] != "hidden"]
    total = 0.0
    import itertools

    for bits in itertools.product((0, 1), repeat=len(visible_refs)):
        objects = [r[1] for r, b in zip(visible_refs, bits) if b and r[0] == "object"]
        relations = [r[1:] for r, b in zip(visible_refs, bits) if b and r[0] == "relation"]
        affordances = [r[1:] for r, b in zip(visible_refs, bits) if b and r[0] == "affordance"]
        scene = SceneDescription.make(objects, relations, affordances,
                                      inconsistent=True)
        total += math.exp(oracle.visible_log_likelihood(tiny_cosmo, scene))
    assert total == pytest.approx(1.0, abs=1e-9)
