"""Training loop: clamped data phase, two-step free phase, Hebbian update.

Per scene the data (positive) phase clamps the visible layer and
computes hidden activation probabilities; per-edge statistics multiply
the connected units' values, using probabilities on hidden factors and
bits on visible ones. The free (negative) phase samples a binary hidden
vector, zeroes the visibles, samples objects from hidden drive alone
(the model first sees a bag of objects), then samples relations and
affordances from hidden drive plus the fresh objects, and finally
recomputes hidden probabilities. Weights move along

    w <- w + alpha * (data-phase mean - free-phase mean)

which descends the divergence between the data distribution and the
model's visible marginal; the sign is pinned by an exact finite-difference
check against the enumeration oracle in the test suite. Tri-way diagonal
slices are re-zeroed after every update.

Reconstruction error is the mean over scenes of the summed squared gap
between clamped visible bits and the free-phase reconstruction
probabilities, reported separately for the object, relation and
affordance blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from scenebm.errors import DataError, TrainingDivergedError, UsageError
from scenebm.models import new_model
from scenebm.models.state import ModelDims, ModelState
from scenebm.sampling import sigmoid
from scenebm.schedules import CONSTANT_UNIT, AnnealSchedule, temperature
from scenebm.stats import EdgeStatistics
from scenebm.vocab import VocabularySet

BLOCKS = ("object", "relation", "affordance")

# Integer namespaces for derived RNG streams (SeedSequence wants ints only).
_TAG_SAMPLE, _TAG_ORDER, _TAG_INIT, _TAG_VAL, _TAG_PRETRAIN = 1, 2, 3, 4, 5


@dataclass
class TrainConfig:
    """Knobs for the per-sample training loop.

    ``tie_scaled_updates`` applies tied-weight averaging to the shared
    type-hidden tensors: their statistics are sums over every endpoint
    pair, so an unscaled step lets them outrace the rest of the model by
    the pair count and collapse the hidden layer within the first epoch.
    """

    model_kind: str = "cosmo"
    hidden: tuple[int, ...] = (16,)
    learning_rate: float = 0.05
    epochs: int = 30
    gibbs_steps: int = 1
    schedule: AnnealSchedule = field(default_factory=lambda: CONSTANT_UNIT)
    seed: int = 0
    batch_size: int = 1
    patience: int = 5
    patience_tol: float = 1e-6
    init_sigma: float = 0.01
    pretrain_epochs: int = 0
    tie_scaled_updates: bool = True

    def __post_init__(self):
        if isinstance(self.hidden, int):
            self.hidden = (self.hidden,)
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.learning_rate < 0:
            raise UsageError(f"learning rate must not be negative: {self.learning_rate}")
        if self.epochs < 1 or self.gibbs_steps < 1 or self.batch_size < 1:
            raise UsageError("epochs, gibbs_steps and batch_size must be >= 1")

    def to_json(self) -> dict:
        data = {
            "model_kind": self.model_kind,
            "hidden": list(self.hidden),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "gibbs_steps": self.gibbs_steps,
            "schedule": self.schedule.to_json(),
            "seed": self.seed,
            "batch_size": self.batch_size,
            "patience": self.patience,
            "patience_tol": self.patience_tol,
            "init_sigma": self.init_sigma,
            "pretrain_epochs": self.pretrain_epochs,
            "tie_scaled_updates": self.tie_scaled_updates,
        }
        return data

    @classmethod
    def from_json(cls, data: dict) -> "TrainConfig":
        known = {
            "model_kind", "hidden", "learning_rate", "epochs", "gibbs_steps",
            "schedule", "seed", "batch_size", "patience", "patience_tol",
            "init_sigma", "pretrain_epochs", "tie_scaled_updates",
        }
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown training config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "hidden" in kwargs:
            kwargs["hidden"] = tuple(int(h) for h in kwargs["hidden"])
        if "schedule" in kwargs:
            kwargs["schedule"] = AnnealSchedule.from_json(kwargs["schedule"])
        return cls(**kwargs)


@dataclass
class PhaseResult:
    stats: EdgeStatistics
    hidden_probs: list[np.ndarray]


@dataclass
class NegativePhaseResult:
    stats: EdgeStatistics
    recon_probs: dict[str, np.ndarray]
    state: ModelState


# -- hidden inference -------------------------------------------------------


def hidden_probabilities(model, state: ModelState, t: float = 1.0,
                         passes: int = 3) -> list[np.ndarray]:
    """Mean activations of every hidden layer given the current visibles.

    With one hidden layer this is the exact conditional in a single
    pass; deeper stacks alternate conditional updates a few times, using
    mean values in place of samples.
    """
    probs = [np.full(hm, 0.5) for hm in model.dims.hidden]
    n_layers = model.dims.n_layers
    scratch = state.copy()
    loops = 1 if n_layers == 1 else passes
    for _ in range(loops):
        for m in range(n_layers):
            scratch.h = [p for p in probs]
            probs[m] = sigmoid(model.hidden_net(scratch, m) / t)
    return probs


# -- statistics --------------------------------------------------------------


def _accumulate(model, stats: EdgeStatistics, state: ModelState,
                hidden: list[np.ndarray]) -> None:
    """Add per-edge activation products for one configuration.

    ``hidden`` carries probabilities (or sampled bits) per layer; visible
    factors come from the state's bits.
    """
    h0 = hidden[0]
    if model.kind == "cosmo":
        stats.add("w_hv", np.outer(h0, state.o))
        pair = state.o[:, None] * state.o[None, :]
        stats.add("w_r", state.r * pair[None, :, :])
        stats.add("w_a", state.a * pair[None, :, :])
        stats.add("w_rh", np.outer(state.r.sum(axis=(1, 2)), h0))
        stats.add("w_ah", np.outer(state.a.sum(axis=(1, 2)), h0))
    else:
        # Visible bits are sparse; only active-index blocks contribute.
        flat = state.flat_visible()
        idx = np.flatnonzero(flat > 0.5)
        if model.kind == "gbm" and idx.size > 1:
            rows, cols = np.triu_indices(idx.size, 1)
            np.add.at(stats.tensors["w_vv"], (idx[rows], idx[cols]), 1.0)
        if idx.size:
            stats.tensors["w_vh"][idx, :] += h0[None, :]
    for m in range(model.dims.n_layers - 1):
        stats.add(f"w_hh_{m}", np.outer(hidden[m], hidden[m + 1]))
    stats.bump()


def positive_phase(model, scene, t: float = 1.0,
                   stats: Optional[EdgeStatistics] = None) -> PhaseResult:
    """Clamp the scene into the visibles and collect data-phase statistics.

    Pass an existing accumulator to add into it (avoids reallocating the
    large visible-visible tensors per sample); with ``stats=False`` no
    statistics are collected at all.
    """
    state = model.new_state(scene, clamp_visible=True)
    hidden = hidden_probabilities(model, state, t)
    if stats is False:
        return PhaseResult(None, hidden)
    if stats is None:
        stats = EdgeStatistics.zeros_like(model)
    _accumulate(model, stats, state, hidden)
    return PhaseResult(stats, hidden)


def negative_phase(model, hidden_sample: list[np.ndarray], rng,
                   gibbs_steps: int = 1, t: float = 1.0,
                   stats: Optional[EdgeStatistics] = None) -> NegativePhaseResult:
    """Free-phase reconstruction from a sampled hidden configuration."""
    state = ModelState.zeros(model.dims)
    state.h = [hs.astype(float).copy() for hs in hidden_sample]
    p_obj = p_rel = p_aff = None
    for _ in range(gibbs_steps):
        # Step 1: bag of objects -- visibles cleared, objects from hidden only.
        state.o[:] = 0.0
        state.r[:] = 0.0
        state.a[:] = 0.0
        if model.kind == "cosmo":
            obj_net = model.object_net_hidden_only(state)
        else:
            obj_net = model.visible_net_from_hidden(state)[: model.dims.n_objects]
        p_obj = sigmoid(obj_net / t)
        state.o[:] = rng.random(p_obj.shape) < p_obj
        # Step 2: relations and affordances from hidden plus fresh objects.
        p_rel, p_aff = _pair_node_probs(model, state, t)
        offdiag_r = ~_diag_mask(model.dims, p_rel.shape)
        offdiag_a = ~_diag_mask(model.dims, p_aff.shape)
        state.r[offdiag_r] = (rng.random(p_rel.shape) < p_rel)[offdiag_r]
        state.a[offdiag_a] = (rng.random(p_aff.shape) < p_aff)[offdiag_a]
        hidden = hidden_probabilities(model, state, t)
        hidden_sample = [(rng.random(p.shape) < p).astype(float) for p in hidden]
        state.h = [hs.copy() for hs in hidden_sample]
    if stats is not False:
        if stats is None:
            stats = EdgeStatistics.zeros_like(model)
        stats_state = state.copy()
        stats_state.h = hidden  # probabilities on hidden factors
        _accumulate(model, stats, stats_state, hidden)
    else:
        stats = None
    p_rel = p_rel * (~_diag_mask(model.dims, p_rel.shape))
    p_aff = p_aff * (~_diag_mask(model.dims, p_aff.shape))
    return NegativePhaseResult(
        stats, {"object": p_obj, "relation": p_rel, "affordance": p_aff}, state
    )


def _diag_mask(dims: ModelDims, shape) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    eye = np.eye(dims.n_objects, dtype=bool)
    mask[:, eye] = True
    return mask


def _pair_node_probs(model, state: ModelState, t: float):
    """Relation/affordance activation probabilities given objects and hidden."""
    if model.kind == "cosmo":
        return (
            sigmoid(model.relation_net(state) / t),
            sigmoid(model.affordance_net(state) / t),
        )
    o = model.dims.n_objects
    rt = model.dims.n_relation_types
    scratch = state.copy()
    scratch.r[:] = 0.0
    scratch.a[:] = 0.0
    if model.kind == "gbm":
        net = model.visible_net_all(scratch)
    else:
        net = model.visible_net_from_hidden(scratch)
    rel = sigmoid(net[o : o + rt * o * o].reshape(rt, o, o) / t)
    aff = sigmoid(net[o + rt * o * o :].reshape(-1, o, o) / t)
    return rel, aff


def update_weights(model, p_plus: EdgeStatistics, p_minus: EdgeStatistics,
                   learning_rate: float,
                   rate_scales: Optional[dict[str, float]] = None) -> None:
    """Apply w += alpha * (mean data stats - mean free stats) in place.

    ``rate_scales`` optionally rescales the step per tensor (positive
    factors only, so update directions are untouched). The training loop
    uses it to down-weight the type-hidden tensors, whose tied-instance
    gradients are sums over every endpoint pair and otherwise outrace the
    rest of the model by orders of magnitude.
    """
    if p_plus.count <= 0 or p_minus.count <= 0:
        raise DataError("statistics hold no samples")
    tensors = model.weight_tensors()
    if set(p_plus.tensors) != set(tensors):
        raise DataError("statistics do not match the model's weight tensors")
    for name, weight in tensors.items():
        scale = 1.0 if rate_scales is None else rate_scales.get(name, 1.0)
        if scale < 0:
            raise UsageError(f"rate scale for {name} must be non-negative")
        step = (learning_rate * scale / p_plus.count) * p_plus.tensors[name]
        step -= (learning_rate * scale / p_minus.count) * p_minus.tensors[name]
        if not np.all(np.isfinite(step)):
            raise TrainingDivergedError(-1, f"non-finite update for {name}")
        weight += step
    model.zero_structural()


def shared_rate_scales(model) -> dict[str, float]:
    """Tied-weight averaging factors: one over the tied-instance count."""
    if model.kind != "cosmo":
        return {}
    o = model.dims.n_objects
    pairs = o * (o - 1)
    return {"w_rh": 1.0 / pairs, "w_ah": 1.0 / pairs}


# -- reconstruction error -----------------------------------------------------


def reconstruction_error(model, scenes, seed=0, t: float = 1.0,
                         gibbs_steps: int = 1) -> dict[str, float]:
    """Mean squared clamped-vs-reconstructed gap per visible block."""
    if not scenes:
        raise DataError("need at least one scene")
    seed_tuple = seed if isinstance(seed, tuple) else (seed,)
    totals = {name: 0.0 for name in BLOCKS}
    for idx, scene in enumerate(scenes):
        rng = np.random.default_rng((*seed_tuple, idx))
        pos = positive_phase(model, scene, t, stats=False)
        hidden_sample = [
            (rng.random(p.shape) < p).astype(float) for p in pos.hidden_probs
        ]
        neg = negative_phase(model, hidden_sample, rng, gibbs_steps, t, stats=False)
        state = model.new_state(scene)
        totals["object"] += float(np.sum((state.o - neg.recon_probs["object"]) ** 2))
        totals["relation"] += float(np.sum((state.r - neg.recon_probs["relation"]) ** 2))
        totals["affordance"] += float(
            np.sum((state.a - neg.recon_probs["affordance"]) ** 2)
        )
    return {name: value / len(scenes) for name, value in totals.items()}


# -- the training loop ---------------------------------------------------------


@dataclass
class CurvePoint:
    epoch: int
    split: str
    block: str
    value: float


@dataclass
class TrainResult:
    model: object
    curves: list[CurvePoint]
    epochs_run: int
    stopped_early: bool

    def curve(self, split: str, block: str) -> list[float]:
        return [
            p.value for p in self.curves if p.split == split and p.block == block
        ]


def train(
    dataset_train: Sequence,
    dataset_validation: Sequence,
    vocab: VocabularySet,
    config: TrainConfig,
    init_model=None,
) -> TrainResult:
    """Per-sample training with early stopping on validation error.

    Deterministic given (datasets, config). Emits per-epoch error curves
    for both splits and all three visible blocks.
    """
    if not dataset_train:
        raise DataError("training split is empty")
    dims = ModelDims.from_vocab(vocab, config.hidden)
    rng_init = np.random.default_rng((config.seed, _TAG_INIT))
    if init_model is not None:
        model = init_model
    elif config.pretrain_epochs > 0 and dims.n_layers >= 2:
        model = pretrain_layerwise(dataset_train, vocab, config)
    else:
        model = new_model(config.model_kind, dims, config.init_sigma, rng_init)
    model.vocab_fingerprint = vocab.fingerprint()
    model.schedule_used = config.schedule.to_json()
    scales = shared_rate_scales(model) if config.tie_scaled_updates else None

    curves: list[CurvePoint] = []
    best = np.inf
    stale = 0
    epochs_run = 0
    stopped_early = False
    for epoch in range(config.epochs):
        t = temperature(config.schedule, epoch)
        order = np.random.default_rng((config.seed, _TAG_ORDER, epoch)).permutation(
            len(dataset_train)
        )
        train_totals = {name: 0.0 for name in BLOCKS}
        batch_plus = EdgeStatistics.zeros_like(model)
        batch_minus = EdgeStatistics.zeros_like(model)
        for pos_in_epoch, scene_idx in enumerate(order):
            scene = dataset_train[int(scene_idx)]
            rng = np.random.default_rng((config.seed, _TAG_SAMPLE, epoch, int(pos_in_epoch)))
            pos = positive_phase(model, scene, t, stats=batch_plus)
            hidden_sample = [
                (rng.random(p.shape) < p).astype(float) for p in pos.hidden_probs
            ]
            neg = negative_phase(model, hidden_sample, rng, config.gibbs_steps, t,
                                 stats=batch_minus)
            state = model.new_state(scene)
            train_totals["object"] += float(
                np.sum((state.o - neg.recon_probs["object"]) ** 2)
            )
            train_totals["relation"] += float(
                np.sum((state.r - neg.recon_probs["relation"]) ** 2)
            )
            train_totals["affordance"] += float(
                np.sum((state.a - neg.recon_probs["affordance"]) ** 2)
            )
            if batch_plus.count >= config.batch_size or pos_in_epoch == len(order) - 1:
                try:
                    update_weights(model, batch_plus, batch_minus,
                                   config.learning_rate, scales)
                except TrainingDivergedError as exc:
                    raise TrainingDivergedError(epoch, str(exc)) from exc
                for arr in batch_plus.tensors.values():
                    arr[...] = 0.0
                for arr in batch_minus.tensors.values():
                    arr[...] = 0.0
                batch_plus.count = 0
                batch_minus.count = 0
        epochs_run = epoch + 1
        for block in BLOCKS:
            value = train_totals[block] / len(dataset_train)
            if not np.isfinite(value):
                raise TrainingDivergedError(epoch, f"{block} error is not finite")
            curves.append(CurvePoint(epoch + 1, "train", block, value))
        if dataset_validation:
            # Fixed validation draws: epochs are measured under identical
            # sampling conditions, so curves compare weights, not noise.
            val = reconstruction_error(
                model, dataset_validation, seed=(config.seed, _TAG_VAL),
                t=t, gibbs_steps=config.gibbs_steps,
            )
            total_val = sum(val.values())
            for block in BLOCKS:
                curves.append(CurvePoint(epoch + 1, "validation", block, val[block]))
            if total_val < best - config.patience_tol:
                best = total_val
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    stopped_early = True
                    break
    return TrainResult(model, curves, epochs_run, stopped_early)


# -- layer-wise pretraining ----------------------------------------------------


class _VectorRbm:
    """Minimal RBM over raw vectors for pretraining internal layers.

    ``double_hidden`` doubles the hidden drive, compensating the missing
    top-down input that internal layers of a full stack would receive.
    """

    def __init__(self, n_visible: int, n_hidden: int, sigma: float, rng,
                 double_hidden: bool):
        self.w = rng.normal(0.0, sigma, size=(n_visible, n_hidden))
        self.hidden_factor = 2.0 if double_hidden else 1.0

    def hidden_net(self, v: np.ndarray) -> np.ndarray:
        return self.hidden_factor * (v @ self.w)

    def fit(self, data: np.ndarray, epochs: int, learning_rate: float, rng) -> None:
        for _ in range(epochs):
            for row in data:
                p_h = sigmoid(self.hidden_net(row))
                h_sample = (rng.random(p_h.shape) < p_h).astype(float)
                p_v = sigmoid(self.w @ h_sample)
                v_sample = (rng.random(p_v.shape) < p_v).astype(float)
                p_h_neg = sigmoid(self.hidden_net(v_sample))
                grad = np.outer(row, p_h) - np.outer(v_sample, p_h_neg)
                self.w += learning_rate * grad

    def transform(self, data: np.ndarray) -> np.ndarray:
        return sigmoid(self.hidden_net(data))


def pretrain_layerwise(dataset_train: Sequence, vocab: VocabularySet,
                       config: TrainConfig):
    """Initialize a multi-layer stack by training one layer at a time.

    The first layer is trained as a single-hidden-layer model of the
    requested kind; each further layer is a vector RBM on the previous
    layer's hidden probabilities, with doubled hidden drive on internal
    layers. Returns the stacked model ready for joint training.
    """
    if len(config.hidden) < 2:
        raise UsageError("layer-wise pretraining needs at least two hidden layers")
    epochs = config.pretrain_epochs if config.pretrain_epochs > 0 else config.epochs
    base_config = replace(
        config,
        hidden=(config.hidden[0],),
        epochs=epochs,
        pretrain_epochs=0,
        patience=epochs,
    )
    first = train(dataset_train, [], vocab, base_config).model

    activations = []
    for scene in dataset_train:
        state = first.new_state(scene)
        activations.append(hidden_probabilities(first, state)[0])
    data = np.asarray(activations)

    rng = np.random.default_rng((config.seed, _TAG_PRETRAIN))
    stack: list[_VectorRbm] = []
    for m in range(1, len(config.hidden)):
        rbm = _VectorRbm(
            config.hidden[m - 1], config.hidden[m], config.init_sigma, rng,
            double_hidden=True,
        )
        rbm.fit(data, epochs, config.learning_rate, rng)
        data = rbm.transform(data)
        stack.append(rbm)

    dims = ModelDims.from_vocab(vocab, config.hidden)
    model = new_model(config.model_kind, dims)
    for name, arr in first.weight_tensors().items():
        model.weight_tensors()[name][...] = arr
    for m, rbm in enumerate(stack):
        model.w_hh[m][...] = rbm.w
    return model
