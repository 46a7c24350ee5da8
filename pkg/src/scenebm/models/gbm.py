"""Baseline with two-way edges among all visible nodes ("gbm").

Visible nodes are the flat scene vector (objects, then relation slots,
then affordance slots). Energy:

    E = - sum_{i<j} v_i w_vv[i,j] v_j - sum_{j,l} v_j w_vh[j,l] h_l
        - hidden-hidden chain terms for extra layers

w_vv is symmetric with zero diagonal; it is stored as its strictly
upper triangle and exposed symmetrically. Diagonal relation/affordance
slots always carry zero bits, so their weights stay zero.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from scenebm.errors import DataError
from scenebm.models.state import ModelDims, ModelState, UnitRef


class GbmModel:
    kind = "gbm"

    def __init__(
        self,
        dims: ModelDims,
        w_vv_upper: np.ndarray,
        w_vh: np.ndarray,
        w_hh: Optional[list[np.ndarray]] = None,
        vocab_fingerprint: Optional[str] = None,
        schedule_used: Optional[dict] = None,
    ):
        v, h0 = dims.n_visible, dims.hidden[0]
        if w_vv_upper.shape != (v, v):
            raise DataError(f"w_vv has shape {w_vv_upper.shape}, expected {(v, v)}")
        if w_vh.shape != (v, h0):
            raise DataError(f"w_vh has shape {w_vh.shape}, expected {(v, h0)}")
        w_hh = list(w_hh) if w_hh else []
        if len(w_hh) != dims.n_layers - 1:
            raise DataError(
                f"need {dims.n_layers - 1} hidden-hidden matrices, got {len(w_hh)}"
            )
        self.dims = dims
        self.w_vv_upper = np.triu(w_vv_upper, k=1)
        self.w_vh = w_vh
        self.w_hh = w_hh
        self.vocab_fingerprint = vocab_fingerprint
        self.schedule_used = schedule_used

    @classmethod
    def zeros(cls, dims: ModelDims) -> "GbmModel":
        v, h0 = dims.n_visible, dims.hidden[0]
        return cls(
            dims,
            np.zeros((v, v)),
            np.zeros((v, h0)),
            [np.zeros((dims.hidden[m], dims.hidden[m + 1]))
             for m in range(dims.n_layers - 1)],
        )

    @classmethod
    def random(cls, dims: ModelDims, sigma: float = 0.01, rng=None) -> "GbmModel":
        rng = np.random.default_rng(rng)
        model = cls.zeros(dims)
        model.w_vv_upper[...] = np.triu(
            rng.normal(0.0, sigma, size=model.w_vv_upper.shape), k=1
        )
        model.w_vh[...] = rng.normal(0.0, sigma, size=model.w_vh.shape)
        for mat in model.w_hh:
            mat[...] = rng.normal(0.0, sigma, size=mat.shape)
        return model

    @property
    def w_vv(self) -> np.ndarray:
        """Symmetric view of the visible-visible weights."""
        return self.w_vv_upper + self.w_vv_upper.T

    def weight_tensors(self) -> dict[str, np.ndarray]:
        tensors = {"w_vv": self.w_vv_upper, "w_vh": self.w_vh}
        for m, mat in enumerate(self.w_hh):
            tensors[f"w_hh_{m}"] = mat
        return tensors

    def zero_structural(self) -> None:
        self.w_vv_upper[...] = np.triu(self.w_vv_upper, k=1)

    def new_state(self, scene=None, clamp_visible: bool = True) -> ModelState:
        if scene is None:
            return ModelState.zeros(self.dims)
        return ModelState.from_scene(self.dims, scene, clamp_visible)

    # -- energy -----------------------------------------------------------

    def energy(self, state: ModelState) -> float:
        v = state.flat_visible()
        e = -float(v @ self.w_vv_upper @ v)
        e -= float(v @ self.w_vh @ state.h[0])
        for m, mat in enumerate(self.w_hh):
            e -= float(state.h[m] @ mat @ state.h[m + 1])
        return e

    # -- net inputs ---------------------------------------------------------

    def hidden_net(self, state: ModelState, layer: int = 0) -> np.ndarray:
        if layer == 0:
            net = state.flat_visible() @ self.w_vh
        else:
            net = state.h[layer - 1] @ self.w_hh[layer - 1]
        if layer < self.dims.n_layers - 1:
            net = net + self.w_hh[layer] @ state.h[layer + 1]
        return net

    def visible_net(self, flat: np.ndarray, h0: np.ndarray, idx: int) -> float:
        row = self.w_vv_upper[idx] + self.w_vv_upper[:, idx]
        return float(row @ flat + self.w_vh[idx] @ h0)

    def visible_net_from_hidden(self, state: ModelState) -> np.ndarray:
        """Visible drive ignoring visible-visible edges (zeroed-visible step)."""
        return self.w_vh @ state.h[0]

    def visible_net_all(self, state: ModelState) -> np.ndarray:
        """Drive to every visible from the current full state (block view).

        Visible vectors are sparse, so the pairwise term gathers active
        columns instead of running dense V x V products.
        """
        flat = state.flat_visible()
        idx = np.flatnonzero(flat > 0.5)
        net = self.w_vh @ state.h[0]
        if idx.size:
            net = net + self.w_vv_upper[:, idx].sum(axis=1)
            net = net + self.w_vv_upper[idx, :].sum(axis=0)
        return net

    def _flat_index(self, ref: UnitRef) -> int:
        o = self.dims.n_objects
        if ref[0] == "object":
            return ref[1]
        if ref[0] == "relation":
            return o + ref[1] * o * o + ref[2] * o + ref[3]
        if ref[0] == "affordance":
            rt = self.dims.n_relation_types
            return o + rt * o * o + ref[1] * o * o + ref[2] * o + ref[3]
        raise DataError(f"not a visible unit: {ref!r}")

    def net_input(self, state: ModelState, ref: UnitRef) -> float:
        if ref[0] == "hidden":
            return float(self.hidden_net(state, ref[1])[ref[2]])
        return self.visible_net(state.flat_visible(), state.h[0], self._flat_index(ref))

    # -- group sampling --------------------------------------------------------

    def sample_group(self, state: ModelState, group: str, t: float, rng) -> None:
        """Sequential scan over visibles (they couple pairwise); block hidden."""
        from scenebm.sampling import sigmoid

        if group == "hidden":
            for m in range(self.dims.n_layers):
                free = ~state.clamp_h[m]
                if not free.any():
                    continue
                p = sigmoid(self.hidden_net(state, m) / t)
                draws = (rng.random(p.shape) < p).astype(float)
                state.h[m][free] = draws[free]
            return
        refs = _GROUP_REFS.get(group)
        if refs is None:
            raise DataError(f"unknown unit group {group!r}")
        flat = state.flat_visible()
        clamp = state.clamp_mask_flat()
        lo, hi = refs(self.dims)
        h0 = state.h[0]
        for idx in range(lo, hi):
            if clamp[idx]:
                continue
            p = sigmoid(self.visible_net(flat, h0, idx) / t)
            flat[idx] = 1.0 if rng.random() < p else 0.0
        state.set_flat_visible(flat)


def _objects_span(dims: ModelDims) -> tuple[int, int]:
    return 0, dims.n_objects


def _relations_span(dims: ModelDims) -> tuple[int, int]:
    o = dims.n_objects
    return o, o + dims.n_relation_types * o * o


def _affordances_span(dims: ModelDims) -> tuple[int, int]:
    o = dims.n_objects
    start = o + dims.n_relation_types * o * o
    return start, start + dims.n_affordance_types * o * o


_GROUP_REFS = {
    "objects": _objects_span,
    "relations": _relations_span,
    "affordances": _affordances_span,
}
