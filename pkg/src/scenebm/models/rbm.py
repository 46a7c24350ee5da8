"""Baseline restricted to visible-hidden edges ("rbm").

    E = - sum_{j,l} v_j w_vh[j,l] h_l  - hidden-hidden chain terms

The bipartite structure makes every visible unit conditionally
independent of the others given the hidden layer, so whole groups are
sampled as blocks.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from scenebm.errors import DataError
from scenebm.models.state import ModelDims, ModelState, UnitRef


class RbmModel:
    kind = "rbm"

    def __init__(
        self,
        dims: ModelDims,
        w_vh: np.ndarray,
        w_hh: Optional[list[np.ndarray]] = None,
        vocab_fingerprint: Optional[str] = None,
        schedule_used: Optional[dict] = None,
    ):
        v, h0 = dims.n_visible, dims.hidden[0]
        if w_vh.shape != (v, h0):
            raise DataError(f"w_vh has shape {w_vh.shape}, expected {(v, h0)}")
        w_hh = list(w_hh) if w_hh else []
        if len(w_hh) != dims.n_layers - 1:
            raise DataError(
                f"need {dims.n_layers - 1} hidden-hidden matrices, got {len(w_hh)}"
            )
        self.dims = dims
        self.w_vh = w_vh
        self.w_hh = w_hh
        self.vocab_fingerprint = vocab_fingerprint
        self.schedule_used = schedule_used

    @classmethod
    def zeros(cls, dims: ModelDims) -> "RbmModel":
        v, h0 = dims.n_visible, dims.hidden[0]
        return cls(
            dims,
            np.zeros((v, h0)),
            [np.zeros((dims.hidden[m], dims.hidden[m + 1]))
             for m in range(dims.n_layers - 1)],
        )

    @classmethod
    def random(cls, dims: ModelDims, sigma: float = 0.01, rng=None) -> "RbmModel":
        rng = np.random.default_rng(rng)
        model = cls.zeros(dims)
        model.w_vh[...] = rng.normal(0.0, sigma, size=model.w_vh.shape)
        for mat in model.w_hh:
            mat[...] = rng.normal(0.0, sigma, size=mat.shape)
        return model

    def weight_tensors(self) -> dict[str, np.ndarray]:
        tensors = {"w_vh": self.w_vh}
        for m, mat in enumerate(self.w_hh):
            tensors[f"w_hh_{m}"] = mat
        return tensors

    def zero_structural(self) -> None:
        pass

    def new_state(self, scene=None, clamp_visible: bool = True) -> ModelState:
        if scene is None:
            return ModelState.zeros(self.dims)
        return ModelState.from_scene(self.dims, scene, clamp_visible)

    def energy(self, state: ModelState) -> float:
        e = -float(state.flat_visible() @ self.w_vh @ state.h[0])
        for m, mat in enumerate(self.w_hh):
            e -= float(state.h[m] @ mat @ state.h[m + 1])
        return e

    def hidden_net(self, state: ModelState, layer: int = 0) -> np.ndarray:
        if layer == 0:
            net = state.flat_visible() @ self.w_vh
        else:
            net = state.h[layer - 1] @ self.w_hh[layer - 1]
        if layer < self.dims.n_layers - 1:
            net = net + self.w_hh[layer] @ state.h[layer + 1]
        return net

    def visible_net_all(self, state: ModelState) -> np.ndarray:
        return self.w_vh @ state.h[0]

    def visible_net_from_hidden(self, state: ModelState) -> np.ndarray:
        return self.w_vh @ state.h[0]

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
        return float(self.visible_net_all(state)[self._flat_index(ref)])

    def sample_group(self, state: ModelState, group: str, t: float, rng) -> None:
        """Block-sample a group; uniforms are drawn per free unit in index
        order so a zero-coupling GBM consumes the stream identically."""
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
        if group not in ("objects", "relations", "affordances"):
            raise DataError(f"unknown unit group {group!r}")
        o = self.dims.n_objects
        spans = {
            "objects": (0, o),
            "relations": (o, o + self.dims.n_relation_types * o * o),
            "affordances": (
                o + self.dims.n_relation_types * o * o,
                self.dims.n_visible,
            ),
        }
        lo, hi = spans[group]
        flat = state.flat_visible()
        clamp = state.clamp_mask_flat()
        free = ~clamp[lo:hi]
        n_free = int(free.sum())
        if n_free == 0:
            return
        p = sigmoid(self.visible_net_all(state)[lo:hi] / t)
        draws = (rng.random(n_free) < p[free]).astype(float)
        flat[lo:hi][free] = draws
        state.set_flat_visible(flat)
