"""Tri-way Boltzmann machine for contextualized scenes ("cosmo").

Energy of a joint state (o, r, a, h):

    E = - sum_{l,j}   h_l  w_hv[l,j] o_j
        - sum_{i,j,k} w_r[i,j,k]  r[i,j,k] o_j o_k
        - sum_{i,j,k,l} w_rh[i,l] r[i,j,k] h_l
        - sum_{i,j,k} w_a[i,j,k]  a[i,j,k] o_j o_k
        - sum_{i,j,k,l} w_ah[i,l] a[i,j,k] h_l
        - sum_m h[m] . w_hh[m] . h[m+1]          (extra hidden layers)

Each relation/affordance node joins its two object endpoints through a
single tri-way edge with weight w_r[i,j,k] / w_a[i,j,k]. The coupling to
the hidden layer is shared per type: one weight per (type, hidden unit),
applied identically to every endpoint pair, so the notion of a relation
or affordance type is the same wherever it occurs. Shared couplings
attach to the first hidden layer only; deeper layers connect in a chain.

No bias terms exist; diagonal slices of the tri-way tensors are
structural zeros. Conditional activation probabilities are sigmoids of
the energy gap for flipping the unit on, so an object unit collects
tri-way drive from every triple in which it sits in either endpoint
slot.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from scenebm.errors import DataError
from scenebm.models.state import ModelDims, ModelState, UnitRef


def _zero_diagonals(tensor: np.ndarray) -> None:
    if tensor.shape[0]:
        o = tensor.shape[1]
        tensor[:, np.arange(o), np.arange(o)] = 0.0


class CosmoModel:
    kind = "cosmo"

    def __init__(
        self,
        dims: ModelDims,
        w_hv: np.ndarray,
        w_r: np.ndarray,
        w_rh: np.ndarray,
        w_a: np.ndarray,
        w_ah: np.ndarray,
        w_hh: Optional[list[np.ndarray]] = None,
        vocab_fingerprint: Optional[str] = None,
        schedule_used: Optional[dict] = None,
    ):
        o, rt, at = dims.n_objects, dims.n_relation_types, dims.n_affordance_types
        h0 = dims.hidden[0]
        w_hh = list(w_hh) if w_hh else []
        expected = {
            "w_hv": (h0, o),
            "w_r": (rt, o, o),
            "w_rh": (rt, h0),
            "w_a": (at, o, o),
            "w_ah": (at, h0),
        }
        for name, arr in (("w_hv", w_hv), ("w_r", w_r), ("w_rh", w_rh),
                          ("w_a", w_a), ("w_ah", w_ah)):
            if arr.shape != expected[name]:
                raise DataError(
                    f"{name} has shape {arr.shape}, expected {expected[name]}"
                )
        if len(w_hh) != dims.n_layers - 1:
            raise DataError(
                f"need {dims.n_layers - 1} hidden-hidden matrices, got {len(w_hh)}"
            )
        for m, mat in enumerate(w_hh):
            if mat.shape != (dims.hidden[m], dims.hidden[m + 1]):
                raise DataError(f"w_hh[{m}] has shape {mat.shape}")
        self.dims = dims
        self.w_hv = w_hv
        self.w_r = w_r
        self.w_rh = w_rh
        self.w_a = w_a
        self.w_ah = w_ah
        self.w_hh = w_hh
        self.vocab_fingerprint = vocab_fingerprint
        self.schedule_used = schedule_used
        _zero_diagonals(self.w_r)
        _zero_diagonals(self.w_a)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, dims: ModelDims) -> "CosmoModel":
        o, rt, at = dims.n_objects, dims.n_relation_types, dims.n_affordance_types
        h0 = dims.hidden[0]
        return cls(
            dims,
            np.zeros((h0, o)),
            np.zeros((rt, o, o)),
            np.zeros((rt, h0)),
            np.zeros((at, o, o)),
            np.zeros((at, h0)),
            [np.zeros((dims.hidden[m], dims.hidden[m + 1]))
             for m in range(dims.n_layers - 1)],
        )

    @classmethod
    def random(cls, dims: ModelDims, sigma: float = 0.01, rng=None) -> "CosmoModel":
        rng = np.random.default_rng(rng)
        model = cls.zeros(dims)
        for arr in model.weight_tensors().values():
            arr[...] = rng.normal(0.0, sigma, size=arr.shape)
        _zero_diagonals(model.w_r)
        _zero_diagonals(model.w_a)
        return model

    def weight_tensors(self) -> dict[str, np.ndarray]:
        tensors = {
            "w_hv": self.w_hv,
            "w_r": self.w_r,
            "w_rh": self.w_rh,
            "w_a": self.w_a,
            "w_ah": self.w_ah,
        }
        for m, mat in enumerate(self.w_hh):
            tensors[f"w_hh_{m}"] = mat
        return tensors

    def zero_structural(self) -> None:
        """Re-zero diagonal tri-way slices (after weight updates)."""
        _zero_diagonals(self.w_r)
        _zero_diagonals(self.w_a)

    def new_state(self, scene=None, clamp_visible: bool = True) -> ModelState:
        if scene is None:
            return ModelState.zeros(self.dims)
        return ModelState.from_scene(self.dims, scene, clamp_visible)

    # -- energy ------------------------------------------------------------

    def energy(self, state: ModelState) -> float:
        h0 = state.h[0]
        e = -float(h0 @ self.w_hv @ state.o)
        pair = np.outer(state.o, state.o)
        e -= float(np.einsum("ijk,ijk,jk->", self.w_r, state.r, pair))
        e -= float(np.einsum("ijk,ijk,jk->", self.w_a, state.a, pair))
        n_r = state.r.sum(axis=(1, 2))
        n_a = state.a.sum(axis=(1, 2))
        e -= float(n_r @ self.w_rh @ h0)
        e -= float(n_a @ self.w_ah @ h0)
        for m, mat in enumerate(self.w_hh):
            e -= float(state.h[m] @ mat @ state.h[m + 1])
        return e

    # -- net inputs ----------------------------------------------------------

    def hidden_net(self, state: ModelState, layer: int = 0) -> np.ndarray:
        if layer == 0:
            net = self.w_hv @ state.o
            net += state.r.sum(axis=(1, 2)) @ self.w_rh
            net += state.a.sum(axis=(1, 2)) @ self.w_ah
        else:
            net = state.h[layer - 1] @ self.w_hh[layer - 1]
        if layer < self.dims.n_layers - 1:
            net = net + self.w_hh[layer] @ state.h[layer + 1]
        return net

    def object_net_hidden_only(self, state: ModelState) -> np.ndarray:
        """Object drive from the first hidden layer alone (bag-of-objects view)."""
        return state.h[0] @ self.w_hv

    def object_net(self, state: ModelState, j: int) -> float:
        o = state.o
        net = float(state.h[0] @ self.w_hv[:, j])
        # Tri-way drive from triples where j is the subject or the object slot.
        net += float(np.sum(self.w_r[:, j, :] * state.r[:, j, :] * o))
        net += float(np.sum(self.w_r[:, :, j] * state.r[:, :, j] * o))
        net += float(np.sum(self.w_a[:, j, :] * state.a[:, j, :] * o))
        net += float(np.sum(self.w_a[:, :, j] * state.a[:, :, j] * o))
        return net

    def relation_net(self, state: ModelState) -> np.ndarray:
        pair = state.o[:, None] * state.o[None, :]
        return self.w_r * pair[None, :, :] + (self.w_rh @ state.h[0])[:, None, None]

    def affordance_net(self, state: ModelState) -> np.ndarray:
        pair = state.o[:, None] * state.o[None, :]
        return self.w_a * pair[None, :, :] + (self.w_ah @ state.h[0])[:, None, None]

    def net_input(self, state: ModelState, ref: UnitRef) -> float:
        kind = ref[0]
        if kind == "object":
            return self.object_net(state, ref[1])
        if kind == "hidden":
            return float(self.hidden_net(state, ref[1])[ref[2]])
        if kind == "relation":
            i, j, k = ref[1], ref[2], ref[3]
            return float(
                self.w_r[i, j, k] * state.o[j] * state.o[k]
                + self.w_rh[i] @ state.h[0]
            )
        if kind == "affordance":
            i, j, k = ref[1], ref[2], ref[3]
            return float(
                self.w_a[i, j, k] * state.o[j] * state.o[k]
                + self.w_ah[i] @ state.h[0]
            )
        raise DataError(f"unknown unit reference {ref!r}")

    def object_coupling(self, state: ModelState) -> np.ndarray:
        """Symmetric object-object coupling through currently active triples.

        C[j, k] sums tri-way weights of active triples joining j and k, so
        the tri-way part of every object net input is simply C @ o.
        """
        half = (self.w_r * state.r).sum(axis=0) + (self.w_a * state.a).sum(axis=0)
        return half + half.T

    # -- group sampling -------------------------------------------------------

    def sample_group(self, state: ModelState, group: str, t: float, rng) -> None:
        """One Gibbs pass over a unit group, respecting clamps.

        Hidden layers and relation/affordance blocks are conditionally
        independent given the rest, so they are sampled as blocks;
        object units couple through tri-way terms and are scanned
        sequentially with incremental net updates.
        """
        from scenebm.sampling import sigmoid

        if group == "hidden":
            for m in range(self.dims.n_layers):
                free = ~state.clamp_h[m]
                if not free.any():
                    continue
                p = sigmoid(self.hidden_net(state, m) / t)
                np.copyto(state.h[m], rng.random(p.shape) < p, where=free)
        elif group == "objects":
            coupling = self.object_coupling(state)
            nets = state.h[0] @ self.w_hv + coupling @ state.o
            o = state.o
            for j in range(self.dims.n_objects):
                if state.clamp_o[j]:
                    continue
                p = sigmoid(float(nets[j]) / t)
                bit = 1.0 if rng.random() < p else 0.0
                if bit != o[j]:
                    nets += (bit - o[j]) * coupling[:, j]
                    o[j] = bit
        elif group == "relations":
            free = ~state.clamp_r
            if free.any():
                p = sigmoid(self.relation_net(state) / t)
                np.copyto(state.r, rng.random(p.shape) < p, where=free)
        elif group == "affordances":
            free = ~state.clamp_a
            if free.any():
                p = sigmoid(self.affordance_net(state) / t)
                np.copyto(state.a, rng.random(p.shape) < p, where=free)
        else:
            raise DataError(f"unknown unit group {group!r}")
