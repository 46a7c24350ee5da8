"""Built-in verification suite: exact-oracle properties at desk scale.

Each property builds tiny models, compares the stochastic machinery
against exact enumeration, and reports pass/fail with a detail string.
The suite is what the ``verify`` CLI subcommand and service endpoint run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from scenebm import oracle
from scenebm.models import CosmoModel, GbmModel, ModelDims, RbmModel
from scenebm.models.state import ModelState
from scenebm.sampling import conditional, estimate_marginals, relax, sigmoid
from scenebm.schedules import AnnealSchedule, temperature

TINY = ModelDims(2, 1, 1, (2,))


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _random_models(seed: int, sigma: float = 0.5):
    rng = np.random.default_rng(seed)
    return [
        CosmoModel.random(TINY, sigma, rng),
        GbmModel.random(TINY, sigma, rng),
        RbmModel.random(TINY, sigma, rng),
    ]


def check_partition_identities(seed: int) -> PropertyResult:
    """Zero weights give Z = 2^n; distributions sum to one."""
    worst = 0.0
    for model in (CosmoModel.zeros(TINY), GbmModel.zeros(TINY), RbmModel.zeros(TINY)):
        n = len(oracle.free_unit_refs(model))
        z = oracle.exact_partition(model)
        worst = max(worst, abs(z - 2**n) / 2**n)
    for model in _random_models(seed):
        table = oracle.exact_distribution(model)
        worst = max(worst, abs(float(table.probs.sum()) - 1.0))
    return PropertyResult(
        "partition-identities", worst < 1e-9, f"worst deviation {worst:.2e}"
    )


def check_conditional_exactness(seed: int) -> PropertyResult:
    """Sigmoid conditionals equal oracle Bayes quotients on every state."""
    worst = 0.0
    for model in _random_models(seed):
        table = oracle.exact_distribution(model)
        for idx in range(len(table)):
            state = table.state_at(idx)
            for unit, ref in enumerate(table.refs):
                worst = max(worst, abs(
                    conditional(model, state, ref)
                    - table.conditional_given_state(idx, unit)
                ))
    return PropertyResult(
        "conditional-exactness", worst < 1e-10, f"worst gap {worst:.2e}"
    )


def check_energy_gap_identity(seed: int) -> PropertyResult:
    """Flipping one unit changes the energy by exactly minus net input."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for model in _random_models(seed):
        state = ModelState.zeros(model.dims)
        refs = list(state.units())
        for ref in refs:
            state.set(ref, float(rng.integers(2)))
        for ref in refs:
            state.set(ref, 0.0)
            e0 = model.energy(state)
            state.set(ref, 1.0)
            e1 = model.energy(state)
            gap = -(e1 - e0)
            worst = max(worst, abs(gap - model.net_input(state, ref)))
            state.set(ref, float(rng.integers(2)))
    return PropertyResult(
        "energy-gap-identity", worst < 1e-9, f"worst gap {worst:.2e}"
    )


def check_clamp_respect(seed: int) -> PropertyResult:
    """Relaxation never touches clamped coordinates."""
    rng = np.random.default_rng(seed)
    ok = True
    for model in _random_models(seed):
        state = ModelState.zeros(model.dims)
        for ref in state.units():
            state.set(ref, float(rng.integers(2)))
        state.clamp_o[: 1] = True
        state.clamp_r[:] = True
        out = relax(model, state, sweeps=25, rng=int(rng.integers(2**31)))
        ok = ok and out.equal_on_clamped(state)
        fully = state.copy()
        fully.clamp_all()
        out2 = relax(model, fully, sweeps=5, rng=0)
        ok = ok and all(
            out2.get(ref) == fully.get(ref) for ref in fully.units()
        )
    return PropertyResult("clamp-respect", ok, "clamped bits unchanged")


def check_gibbs_convergence(seed: int) -> PropertyResult:
    """Long-run Gibbs marginals approach exact marginals."""
    model = CosmoModel.random(TINY, 0.5, np.random.default_rng(seed))
    exact = oracle.exact_distribution(model).marginals()
    acc = estimate_marginals(
        model, ModelState.zeros(TINY), sweeps=20000, burn_in=500, rng=seed
    )
    worst = max(abs(acc.mean_of(ref) - p) for ref, p in exact.items())
    return PropertyResult(
        "gibbs-convergence", worst < 0.03, f"worst marginal gap {worst:.3f}"
    )


def check_schedule_formulas(seed: int) -> PropertyResult:
    """Temperatures match closed forms and never increase with the step."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    monotone = True
    for _ in range(250):
        t0 = float(rng.uniform(0.5, 8.0))
        for kind in ("emc", "li-mc", "log-mc", "constant"):
            if kind == "emc":
                a = float(rng.uniform(0.8, 0.9))
            elif kind == "li-mc":
                a = float(rng.uniform(0.01, 5.0))
            elif kind == "log-mc":
                a = float(rng.uniform(1.0 + 1e-6, 5.0))
            else:
                a = 0.0
            sched = AnnealSchedule(kind, t0, a)
            i = int(rng.integers(0, 200))
            if kind == "emc":
                expected = t0 * a**i
            elif kind == "li-mc":
                expected = t0 / (1 + a * i)
            elif kind == "log-mc":
                expected = t0 / (1 + a * math.log(1 + i))
            else:
                expected = t0
            worst = max(worst, abs(temperature(sched, i) - expected))
            seq = [temperature(sched, j) for j in range(25)]
            monotone = monotone and all(x >= y for x, y in zip(seq, seq[1:]))
    passed = worst == 0.0 and monotone
    return PropertyResult(
        "schedule-formulas", passed, f"worst formula gap {worst:.2e}"
    )


def check_sigmoid_symmetry(seed: int) -> PropertyResult:
    """sigmoid(x) + sigmoid(-x) = 1 to machine precision."""
    xs = np.random.default_rng(seed).normal(0, 10, size=500)
    worst = float(np.max(np.abs(sigmoid(xs) + sigmoid(-xs) - 1.0)))
    return PropertyResult("sigmoid-symmetry", worst < 1e-12, f"worst {worst:.2e}")


def check_edge_expectations(seed: int) -> PropertyResult:
    """Zero-weight free expectations are 1/4 two-way, 1/8 tri-way."""
    model = CosmoModel.zeros(TINY)
    stats = oracle.exact_edge_expectations(model)
    off = ~np.eye(TINY.n_objects, dtype=bool)
    worst = max(
        float(np.max(np.abs(stats.tensors["w_hv"] - 0.25))),
        float(np.max(np.abs(stats.tensors["w_r"][:, off] - 0.125))),
        float(np.max(np.abs(stats.tensors["w_a"][:, off] - 0.125))),
    )
    return PropertyResult(
        "edge-expectations", worst < 1e-9, f"worst deviation {worst:.2e}"
    )


ALL_PROPERTIES: list[Callable[[int], PropertyResult]] = [
    check_partition_identities,
    check_conditional_exactness,
    check_energy_gap_identity,
    check_clamp_respect,
    check_gibbs_convergence,
    check_schedule_formulas,
    check_sigmoid_symmetry,
    check_edge_expectations,
]


def run_verification(seed: int = 0) -> list[PropertyResult]:
    return [prop(seed) for prop in ALL_PROPERTIES]
