"""Stochastic unit updates and Gibbs relaxation.

A unit turns on with probability sigmoid(net / T): the energy gap for
switching the unit on is -net, so this is 1 / (1 + exp(dE / T)). At
T = 1 it reduces to the plain conditional activation probabilities. One
relaxation sweep samples unclamped hidden units, then objects, then
relations, then affordances; the temperature for sweep i comes from the
annealing schedule.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from scenebm.errors import UsageError
from scenebm.models.state import ModelState, UnitRef
from scenebm.schedules import CONSTANT_UNIT, AnnealSchedule, temperature

DEFAULT_GROUPS = ("hidden", "objects", "relations", "affordances")


def sigmoid(x):
    """Logistic function; clipped so extreme net inputs saturate cleanly."""
    if isinstance(x, np.ndarray):
        z = np.minimum(500.0, np.maximum(-500.0, x))
        return 1.0 / (1.0 + np.exp(-z))
    x = float(x)
    if x < -500.0:
        x = -500.0
    elif x > 500.0:
        x = 500.0
    return 1.0 / (1.0 + math.exp(-x))


class BufferedUniforms:
    """Serve uniforms from batched draws; the value stream is identical to
    calling ``Generator.random`` directly, just with less call overhead."""

    __slots__ = ("_rng", "_buf", "_pos", "_chunk")

    def __init__(self, rng, chunk: int = 1 << 14):
        self._rng = rng
        self._chunk = chunk
        self._buf = rng.random(chunk)
        self._pos = 0

    def random(self, size=None):
        buf, pos = self._buf, self._pos
        if size is None:
            if pos >= buf.shape[0]:
                self._buf = buf = self._rng.random(self._chunk)
                self._pos = pos = 0
            self._pos = pos + 1
            return buf[pos]
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = 1
        for dim in shape:
            n *= dim
        end = pos + n
        if end > buf.shape[0]:
            tail = buf[pos:]
            fresh = self._rng.random(max(self._chunk, n - tail.shape[0]))
            self._buf = buf = np.concatenate([tail, fresh])
            self._pos = pos = 0
            end = n
        self._pos = end
        return buf[pos:end].reshape(shape)


def conditional(model, state: ModelState, ref: UnitRef) -> float:
    """P(unit = 1 | all other units), i.e. sigmoid of the net input."""
    return float(sigmoid(model.net_input(state, ref)))


def sample_unit(model, state: ModelState, ref: UnitRef, t: float, rng) -> int:
    """Draw one unit at temperature t; the unit must not be clamped."""
    if t <= 0:
        raise UsageError(f"temperature must be positive, got {t}")
    if state.is_clamped(ref):
        raise UsageError(f"attempt to sample clamped unit {ref!r}")
    p = sigmoid(model.net_input(state, ref) / t)
    return int(rng.random() < p)


def sweep(model, state: ModelState, t: float, rng,
          groups: Sequence[str] = DEFAULT_GROUPS) -> None:
    """One in-place pass over the given unit groups."""
    for group in groups:
        model.sample_group(state, group, t, rng)


def relax(
    model,
    state: ModelState,
    sweeps: int,
    schedule: Optional[AnnealSchedule] = None,
    rng=None,
    groups: Sequence[str] = DEFAULT_GROUPS,
) -> ModelState:
    """Run Gibbs sweeps and return the relaxed state (input untouched).

    Deterministic given (state, seed); clamped units never change.
    """
    if sweeps < 1:
        raise UsageError(f"need at least one sweep, got {sweeps}")
    schedule = schedule or CONSTANT_UNIT
    rng = BufferedUniforms(np.random.default_rng(rng))
    out = state.copy()
    for i in range(sweeps):
        sweep(model, out, temperature(schedule, i), rng, groups)
    return out


class ChainAccumulator:
    """Running mean of unit activations along a Gibbs chain."""

    def __init__(self, state: ModelState):
        self.o = np.zeros_like(state.o)
        self.r = np.zeros_like(state.r)
        self.a = np.zeros_like(state.a)
        self.h = [np.zeros_like(hm) for hm in state.h]
        self.n = 0

    def push(self, state: ModelState) -> None:
        self.o += state.o
        self.r += state.r
        self.a += state.a
        for acc, hm in zip(self.h, state.h):
            acc += hm
        self.n += 1

    def mean_of(self, ref) -> float:
        kind = ref[0]
        if kind == "object":
            return float(self.o[ref[1]] / self.n)
        if kind == "relation":
            return float(self.r[ref[1], ref[2], ref[3]] / self.n)
        if kind == "affordance":
            return float(self.a[ref[1], ref[2], ref[3]] / self.n)
        return float(self.h[ref[1]][ref[2]] / self.n)


def estimate_marginals(
    model,
    state: ModelState,
    sweeps: int,
    burn_in: int = 0,
    t: float = 1.0,
    rng=None,
    groups: Sequence[str] = DEFAULT_GROUPS,
) -> ChainAccumulator:
    """Empirical per-unit activation frequencies from a single Gibbs chain."""
    rng = BufferedUniforms(np.random.default_rng(rng))
    chain = state.copy()
    acc = ChainAccumulator(chain)
    for i in range(burn_in + sweeps):
        sweep(model, chain, t, rng, groups)
        if i >= burn_in:
            acc.push(chain)
    return acc
