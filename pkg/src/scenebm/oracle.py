"""Exact enumeration over tiny models.

The partition function is a sum over every joint state, so it is only
computable when the number of free units is small; that is exactly the
regime where it is useful as ground truth for samplers, conditionals
and gradients. Everything here is computed in log space with
chunked, vectorized energy evaluation over blocks of states.

Clamping restricts the enumerated space: clamped coordinates keep their
values from the supplied state and only free units are enumerated, which
gives exact conditional semantics.
"""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from scenebm.errors import BoundExceededError, DataError
from scenebm.models.state import ModelState, UnitRef
from scenebm.scenes import SceneDescription
from scenebm.stats import EdgeStatistics

DEFAULT_MAX_UNITS = 16
HARD_CAP = 24
_CHUNK_BITS = 16


def _resolve_clamp(model, clamp) -> ModelState:
    if clamp is None:
        return ModelState.zeros(model.dims)
    if isinstance(clamp, SceneDescription):
        return ModelState.from_scene(model.dims, clamp, clamp_visible=True)
    if isinstance(clamp, ModelState):
        return clamp
    raise DataError(f"cannot interpret clamp of type {type(clamp).__name__}")


def free_unit_refs(model, clamp=None) -> list[UnitRef]:
    base = _resolve_clamp(model, clamp)
    return list(base.units(include_clamped=False))


def _check_bound(n_free: int, max_units: Optional[int]) -> None:
    limit = DEFAULT_MAX_UNITS if max_units is None else max_units
    if limit > HARD_CAP:
        raise BoundExceededError(
            f"enumeration cap {limit} exceeds the hard limit of {HARD_CAP} units"
        )
    if n_free > limit:
        raise BoundExceededError(
            f"{n_free} free units exceed the enumeration bound of {limit}; "
            "pass max_units to override (hard cap 24)"
        )


def _chunk_indices(n_free: int) -> Iterator[np.ndarray]:
    total = 1 << n_free
    step = 1 << min(_CHUNK_BITS, n_free)
    for start in range(0, total, step):
        yield np.arange(start, min(start + step, total), dtype=np.int64)


class _Layout:
    """Scatter map from free-unit bit columns into structured state arrays."""

    def __init__(self, model, base: ModelState, refs: list[UnitRef]):
        self.model = model
        self.base = base
        self.refs = refs
        self.obj_cols, self.obj_idx = [], []
        self.rel_cols, self.rel_idx = [], []
        self.aff_cols, self.aff_idx = [], []
        self.hid_cols = [[] for _ in model.dims.hidden]
        self.hid_idx = [[] for _ in model.dims.hidden]
        for col, ref in enumerate(refs):
            if ref[0] == "object":
                self.obj_cols.append(col)
                self.obj_idx.append(ref[1])
            elif ref[0] == "relation":
                self.rel_cols.append(col)
                self.rel_idx.append(ref[1:])
            elif ref[0] == "affordance":
                self.aff_cols.append(col)
                self.aff_idx.append(ref[1:])
            else:
                self.hid_cols[ref[1]].append(col)
                self.hid_idx[ref[1]].append(ref[2])

    def bits(self, idx: np.ndarray) -> np.ndarray:
        shifts = np.arange(len(self.refs), dtype=np.int64)
        return ((idx[:, None] >> shifts[None, :]) & 1).astype(float)

    def materialize(self, bits: np.ndarray):
        s = bits.shape[0]
        dims = self.model.dims
        o_mat = np.broadcast_to(self.base.o, (s, dims.n_objects)).copy()
        r_mat = np.broadcast_to(self.base.r, (s,) + self.base.r.shape).copy()
        a_mat = np.broadcast_to(self.base.a, (s,) + self.base.a.shape).copy()
        h_mats = [
            np.broadcast_to(hm, (s, hm.shape[0])).copy() for hm in self.base.h
        ]
        if self.obj_cols:
            o_mat[:, self.obj_idx] = bits[:, self.obj_cols]
        if self.rel_cols:
            ii, jj, kk = zip(*self.rel_idx)
            r_mat[:, ii, jj, kk] = bits[:, self.rel_cols]
        if self.aff_cols:
            ii, jj, kk = zip(*self.aff_idx)
            a_mat[:, ii, jj, kk] = bits[:, self.aff_cols]
        for m, cols in enumerate(self.hid_cols):
            if cols:
                h_mats[m][:, self.hid_idx[m]] = bits[:, cols]
        return o_mat, r_mat, a_mat, h_mats


def _energies(model, o_mat, r_mat, a_mat, h_mats) -> np.ndarray:
    kind = model.kind
    if kind == "cosmo":
        h0 = h_mats[0]
        e = -np.einsum("sl,lj,sj->s", h0, model.w_hv, o_mat)
        pair = np.einsum("sj,sk->sjk", o_mat, o_mat)
        e -= np.einsum("sijk,ijk,sjk->s", r_mat, model.w_r, pair)
        e -= np.einsum("sijk,ijk,sjk->s", a_mat, model.w_a, pair)
        e -= np.einsum("si,il,sl->s", r_mat.sum(axis=(2, 3)), model.w_rh, h0)
        e -= np.einsum("si,il,sl->s", a_mat.sum(axis=(2, 3)), model.w_ah, h0)
    else:
        s = o_mat.shape[0]
        v = np.concatenate(
            [o_mat, r_mat.reshape(s, -1), a_mat.reshape(s, -1)], axis=1
        )
        e = -np.einsum("si,il,sl->s", v, model.w_vh, h_mats[0])
        if kind == "gbm":
            e -= np.einsum("si,ij,sj->s", v, model.w_vv_upper, v)
    for m, mat in enumerate(model.w_hh):
        e -= np.einsum("sa,ab,sb->s", h_mats[m], mat, h_mats[m + 1])
    return e


def _logsumexp(values: np.ndarray) -> float:
    top = float(np.max(values))
    return top + float(np.log(np.sum(np.exp(values - top))))


def exact_log_partition(model, clamp=None, max_units: Optional[int] = None) -> float:
    """log Z over all free-unit configurations (clamped units held fixed)."""
    base = _resolve_clamp(model, clamp)
    refs = list(base.units(include_clamped=False))
    _check_bound(len(refs), max_units)
    layout = _Layout(model, base, refs)
    partials = []
    for idx in _chunk_indices(len(refs)):
        bits = layout.bits(idx)
        partials.append(_logsumexp(-_energies(model, *layout.materialize(bits))))
    return _logsumexp(np.array(partials))


def exact_partition(model, clamp=None, max_units: Optional[int] = None) -> float:
    return float(np.exp(exact_log_partition(model, clamp, max_units)))


class JointTable:
    """Exact joint distribution over the free units of a tiny model.

    State index s encodes free-unit bits little-endian: unit i of
    ``refs`` holds bit (s >> i) & 1. Behaves as a map from bit tuples to
    probabilities.
    """

    def __init__(self, model, base: ModelState, refs: list[UnitRef],
                 log_probs: np.ndarray):
        self.model = model
        self.base = base
        self.refs = refs
        self.log_probs = log_probs
        self.probs = np.exp(log_probs)

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, bits) -> float:
        idx = 0
        for i, b in enumerate(bits):
            idx |= (1 if b else 0) << i
        return float(self.probs[idx])

    def items(self):
        n = len(self.refs)
        for idx in range(len(self.probs)):
            bits = tuple((idx >> i) & 1 for i in range(n))
            yield bits, float(self.probs[idx])

    def state_at(self, idx: int) -> ModelState:
        state = self.base.copy()
        for i, ref in enumerate(self.refs):
            state.set(ref, float((idx >> i) & 1))
        return state

    def marginals(self) -> dict[UnitRef, float]:
        """P(unit = 1) for every free unit."""
        out = {}
        idx = np.arange(len(self.probs), dtype=np.int64)
        for i, ref in enumerate(self.refs):
            mask = ((idx >> i) & 1).astype(bool)
            out[ref] = float(self.probs[mask].sum())
        return out

    def marginal_of(self, ref: UnitRef) -> float:
        return self.marginals()[ref]

    def conditional_given_state(self, idx: int, unit: int) -> float:
        """P(unit = 1 | other units as in state idx)."""
        on = idx | (1 << unit)
        off = idx & ~(1 << unit)
        p_on, p_off = self.probs[on], self.probs[off]
        return float(p_on / (p_on + p_off))


def exact_distribution(model, clamp=None, max_units: Optional[int] = None) -> JointTable:
    """exp(-E)/Z over every free-unit configuration."""
    base = _resolve_clamp(model, clamp)
    refs = list(base.units(include_clamped=False))
    _check_bound(len(refs), max_units)
    layout = _Layout(model, base, refs)
    energies = np.empty(1 << len(refs))
    for idx in _chunk_indices(len(refs)):
        bits = layout.bits(idx)
        energies[idx[0] : idx[-1] + 1] = _energies(model, *layout.materialize(bits))
    log_z = _logsumexp(-energies)
    return JointTable(model, base, refs, -energies - log_z)


def exact_edge_expectations(
    model, clamp=None, max_units: Optional[int] = None
) -> EdgeStatistics:
    """Expected per-edge activation products under the exact distribution.

    With a clamp this is the clamped-conditional expectation (the exact
    data-phase statistic); without, the free-phase statistic.
    """
    base = _resolve_clamp(model, clamp)
    refs = list(base.units(include_clamped=False))
    _check_bound(len(refs), max_units)
    layout = _Layout(model, base, refs)

    log_z = exact_log_partition(model, base, max_units)
    stats = EdgeStatistics.zeros_like(model)
    for idx in _chunk_indices(len(refs)):
        bits = layout.bits(idx)
        o_mat, r_mat, a_mat, h_mats = layout.materialize(bits)
        p = np.exp(-_energies(model, o_mat, r_mat, a_mat, h_mats) - log_z)
        h0 = h_mats[0]
        if model.kind == "cosmo":
            stats.add("w_hv", np.einsum("s,sl,sj->lj", p, h0, o_mat))
            pair = np.einsum("sj,sk->sjk", o_mat, o_mat)
            stats.add("w_r", np.einsum("s,sijk,sjk->ijk", p, r_mat, pair))
            stats.add("w_a", np.einsum("s,sijk,sjk->ijk", p, a_mat, pair))
            stats.add("w_rh", np.einsum("s,si,sl->il", p, r_mat.sum(axis=(2, 3)), h0))
            stats.add("w_ah", np.einsum("s,si,sl->il", p, a_mat.sum(axis=(2, 3)), h0))
        else:
            s = o_mat.shape[0]
            v = np.concatenate(
                [o_mat, r_mat.reshape(s, -1), a_mat.reshape(s, -1)], axis=1
            )
            if model.kind == "gbm":
                vv = np.einsum("s,si,sj->ij", p, v, v)
                stats.add("w_vv", np.triu(vv, k=1))
            stats.add("w_vh", np.einsum("s,si,sl->il", p, v, h0))
        for m, _ in enumerate(model.w_hh):
            stats.add(f"w_hh_{m}", np.einsum("s,sa,sb->ab", p, h_mats[m], h_mats[m + 1]))
    stats.count = 1
    return stats


# -- likelihood helpers for gradient verification ---------------------------


def visible_log_likelihood(model, scene: SceneDescription,
                           max_units: Optional[int] = None) -> float:
    """log p(visible scene) = log Z(hidden | v clamped) - log Z."""
    clamped = ModelState.from_scene(model.dims, scene, clamp_visible=True)
    return exact_log_partition(model, clamped, max_units) - exact_log_partition(
        model, None, max_units
    )


def kl_data_to_model(model, scenes, max_units: Optional[int] = None) -> float:
    """KL(empirical scene distribution || model visible marginal)."""
    if not scenes:
        raise DataError("need at least one scene")
    counts: dict = {}
    for scene in scenes:
        key = (scene.objects, scene.relations, scene.affordances)
        counts[key] = counts.get(key, (0, scene))[0] + 1, scene
    n = len(scenes)
    kl = 0.0
    for (count, scene) in counts.values():
        p_hat = count / n
        kl += p_hat * (np.log(p_hat) - visible_log_likelihood(model, scene, max_units))
    return float(kl)
