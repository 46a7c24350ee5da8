"""HTTP service wrapping the scene-model core.

The service owns a registry of loaded models for interactive task
queries and exposes batch operations (synthesize, train, eval, sweep,
generate, verify) that read and write files on the host it runs on;
the bundled CLI drives these endpoints through an in-process transport
by default, so "server-side paths" are simply local paths.
"""

from __future__ import annotations

import itertools
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from scenebm import __version__
from scenebm.dataset import (
    dataset_fingerprint,
    load_dataset,
    save_dataset,
    scenes_to_json,
    split_dataset,
    synthesize_dataset,
)
from scenebm.errors import DataError, ScenebmError, UsageError
from scenebm.evaluation import (
    EvalConfig,
    evaluate,
    evaluate_rectification,
    macro_csv_rows,
    report_csv_rows,
)
from scenebm.manifest import write_manifest
from scenebm.metrics import average_precision, confusion_counts
from scenebm.models import load_model, save_model
from scenebm.planted import profile
from scenebm.scenes import SceneDescription
from scenebm.schedules import AnnealSchedule
from scenebm.service import schemas
from scenebm.tasks import (
    TaskQuery,
    generate_scene,
    rectify_detections,
    run_task,
)
from scenebm.training import (
    TrainConfig,
    TrainResult,
    hidden_probabilities,
    train,
)
from scenebm.vocab import VocabularySet, canonicalize_relation_indexed
from scenebm.verification import run_verification

import numpy as np


# -- converters ---------------------------------------------------------------


def scene_from_wire(wire: schemas.SceneModel, vocab: VocabularySet) -> SceneDescription:
    objects = frozenset(vocab.object_index(name) for name in wire.objects)
    relations = frozenset(
        canonicalize_relation_indexed(
            (rel, vocab.object_index(s), vocab.object_index(o)), vocab
        )
        for rel, s, o in wire.relations
    )
    affordances = frozenset(
        (vocab.affordance_index(a), vocab.object_index(s), vocab.object_index(o))
        for a, s, o in wire.affordances
    )
    return SceneDescription(objects, relations, affordances, wire.context)


def scene_to_wire(scene: SceneDescription, vocab: VocabularySet) -> schemas.SceneModel:
    return schemas.SceneModel(
        objects=sorted(vocab.objects[j] for j in scene.objects),
        relations=sorted(
            (vocab.relation_types[i].name, vocab.objects[j], vocab.objects[k])
            for (i, j, k) in scene.relations
        ),
        affordances=sorted(
            (vocab.affordance_types[i], vocab.objects[j], vocab.objects[k])
            for (i, j, k) in scene.affordances
        ),
        context=scene.context,
    )


def node_to_wire(ref, vocab: VocabularySet) -> str:
    if ref[0] == "object":
        return f"object:{vocab.objects[ref[1]]}"
    if ref[0] == "relation":
        name = vocab.relation_types[ref[1]].name
        return f"relation:{name}({vocab.objects[ref[2]]},{vocab.objects[ref[3]]})"
    if ref[0] == "affordance":
        name = vocab.affordance_types[ref[1]]
        return f"affordance:{name}({vocab.objects[ref[2]]},{vocab.objects[ref[3]]})"
    return f"hidden:{ref[1]}.{ref[2]}"


def train_config_from_wire(wire: schemas.TrainConfigModel) -> TrainConfig:
    return TrainConfig(
        model_kind=wire.model_kind,
        hidden=tuple(wire.hidden),
        learning_rate=wire.learning_rate,
        epochs=wire.epochs,
        gibbs_steps=wire.gibbs_steps,
        schedule=AnnealSchedule(wire.schedule.kind, wire.schedule.t0, wire.schedule.a),
        seed=wire.seed,
        batch_size=wire.batch_size,
        patience=wire.patience,
        patience_tol=wire.patience_tol,
        init_sigma=wire.init_sigma,
        pretrain_epochs=wire.pretrain_epochs,
        tie_scaled_updates=wire.tie_scaled_updates,
    )


def _write_curves(result: TrainResult, path: Path) -> None:
    lines = ["epoch,split,block,value"]
    lines += [
        f"{p.epoch},{p.split},{p.block},{p.value:.10g}" for p in result.curves
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _final_validation(result: TrainResult) -> dict[str, float]:
    out = {}
    for block in ("object", "relation", "affordance"):
        curve = result.curve("validation", block)
        if curve:
            out[block] = curve[-1]
    return out


class ModelRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self._models: dict[str, tuple] = {}
        self._next = itertools.count(1)

    def load(self, path: str) -> str:
        model, vocab = load_model(path)
        if vocab is None:
            raise DataError(
                f"{path}: model file carries no vocabulary; cannot serve task queries"
            )
        with self._lock:
            model_id = f"m{next(self._next)}"
            self._models[model_id] = (model, vocab, path)
        return model_id

    def get(self, model_id: str):
        try:
            return self._models[model_id]
        except KeyError:
            raise DataError(f"no loaded model with id {model_id!r}") from None

    def list_ids(self) -> list[str]:
        return sorted(self._models)


def create_app() -> FastAPI:
    app = FastAPI(title="scenebm", version=__version__)
    registry = ModelRegistry()

    @app.exception_handler(ScenebmError)
    async def scenebm_error_handler(request, exc: ScenebmError):
        kind = "usage" if isinstance(exc, UsageError) else "data"
        status = 400 if kind == "usage" else 422
        return JSONResponse(
            status_code=status,
            content={"error_kind": kind, "detail": str(exc)},
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    # -- datasets ---------------------------------------------------------

    @app.post("/datasets/synthesize", response_model=schemas.SynthesizeResponse)
    def synthesize(req: schemas.SynthesizeRequest):
        try:
            vocab, contexts, default_noise = profile(req.profile)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        noise = default_noise if req.noise is None else req.noise
        scenes = synthesize_dataset(vocab, contexts, req.n, req.seed, noise)
        save_dataset(scenes, vocab, req.out_path)
        fingerprint = dataset_fingerprint(scenes, vocab)
        write_manifest(
            req.out_path, "synthesize",
            req.model_dump(), req.seed, dataset_fingerprint=fingerprint,
        )
        return schemas.SynthesizeResponse(
            path=req.out_path, n_scenes=len(scenes), fingerprint=fingerprint
        )

    # -- training -----------------------------------------------------------

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_endpoint(req: schemas.TrainRequest):
        vocab, scenes = load_dataset(req.dataset_path)
        split = split_dataset(scenes, seed=req.split_seed)
        config = train_config_from_wire(req.config)
        result = train(split.train, split.validation, vocab, config)
        save_model(result.model, req.out_path, vocabulary=vocab)
        curves_path = Path(req.out_path).with_suffix(".curves.csv")
        _write_curves(result, curves_path)
        write_manifest(
            req.out_path, "train",
            {"config": req.config.model_dump(), "dataset": req.dataset_path,
             "split_seed": req.split_seed},
            config.seed,
            model_path=req.out_path,
            dataset_fingerprint=dataset_fingerprint(scenes, vocab),
        )
        return schemas.TrainResponse(
            model_path=req.out_path,
            curves_path=str(curves_path),
            epochs_run=result.epochs_run,
            stopped_early=result.stopped_early,
            final_validation_error=_final_validation(result),
        )

    # -- evaluation -----------------------------------------------------------

    @app.post("/eval", response_model=schemas.EvalResponse)
    def eval_endpoint(req: schemas.EvalRequest):
        model, vocab = load_model(req.model_path)
        data_vocab, scenes = load_dataset(req.dataset_path)
        if vocab is not None and vocab.fingerprint() != data_vocab.fingerprint():
            raise DataError(
                "model and dataset vocabularies differ (fingerprint mismatch); "
                "retrain the model on this dataset or pick the matching one"
            )
        split = split_dataset(scenes, seed=req.split_seed)
        plain_tasks = tuple(t for t in req.tasks if t != 7)
        rows = []
        if plain_tasks:
            cfg = EvalConfig(
                tasks=plain_tasks, theta=req.theta,
                theta_sweep=tuple(req.theta_sweep),
                gibbs_steps=req.gibbs_steps, seed=req.seed,
            )
            rows = evaluate(model, data_vocab, split.test, cfg)
        rectification = None
        if 7 in req.tasks:
            rectification = _run_task7(model, data_vocab, split, req)
        if not plain_tasks and rectification is None:
            raise UsageError("task list is empty")
        wire_rows = [
            schemas.ReportRowModel(
                task=r.task, model=r.model, split=r.split, theta=r.theta,
                tp=r.counts.tp, tn=r.counts.tn, fp=r.counts.fp, fn=r.counts.fn,
                precision=r.precision, recall=r.recall, f1=r.f1,
                chance_p=r.chance_p, aggregation=r.aggregation,
            )
            for r in rows
        ]
        report_path = None
        if req.out_path:
            report_path = req.out_path
            Path(report_path).write_text(
                "\n".join(report_csv_rows(rows)) + "\n", encoding="utf-8"
            )
            macro_path = Path(report_path).with_suffix(".macro.csv")
            macro_path.write_text(
                "\n".join(macro_csv_rows(rows)) + "\n", encoding="utf-8"
            )
            write_manifest(
                report_path, "eval", req.model_dump(), req.seed,
                model_path=req.model_path,
                dataset_fingerprint=dataset_fingerprint(scenes, data_vocab),
            )
        return schemas.EvalResponse(
            rows=wire_rows, rectification=rectification, report_path=report_path
        )

    def _run_task7(model, vocab, split, req: schemas.EvalRequest):
        if req.detections_path:
            report = _rectify_detection_file(
                model, vocab, req.detections_path, req.gibbs_steps, req.seed
            )
        else:
            report = evaluate_rectification(
                model, vocab, split.test[:100],
                gibbs_steps=req.gibbs_steps, seed=req.seed,
            )
        return schemas.RectificationRowModel(
            ap_before=report.ap_before.value,
            ap_after=report.ap_after.value,
            scenes=report.scenes,
            skipped_before=report.ap_before.skipped_scenes,
            skipped_after=report.ap_after.skipped_scenes,
        )

    def _rectify_detection_file(model, vocab, path: str, gibbs_steps: int, seed: int):
        from scenebm.evaluation import RectificationReport

        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"detections file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON: {exc}") from exc
        label_map = payload.get("label_map", {})
        min_score = float(payload.get("min_score", 0.0))
        before, after = [], []
        universe = frozenset(range(vocab.n_objects))
        for idx, item in enumerate(payload.get("items", [])):
            names = []
            for det in item.get("detections", []):
                if float(det.get("score", 1.0)) < min_score:
                    continue
                label = str(det["label"])
                names.append(label_map.get(label, label))
            truth_names = item.get("truth")
            if truth_names is None:
                raise DataError(f"{path}: item {idx} has no ground truth")
            truth = frozenset(vocab.object_index(n) for n in truth_names)
            detected = frozenset(vocab.object_index(n) for n in names)
            before.append(confusion_counts(truth, detected, universe, "object"))
            rect = rectify_detections(
                model, vocab, names, gibbs_steps, seed=seed + idx
            )
            after.append(
                confusion_counts(truth, rect.corrected_objects(), universe, "object")
            )
        if not before:
            raise DataError(f"{path}: no detection items")
        return RectificationReport(
            average_precision(before), average_precision(after), len(before)
        )

    # -- sweep -------------------------------------------------------------------

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep_endpoint(req: schemas.SweepRequest):
        vocab, scenes = load_dataset(req.dataset_path)
        split = split_dataset(scenes, seed=req.split_seed)
        base = train_config_from_wire(req.base)
        hidden_counts = req.hidden_counts or [base.hidden[0]]
        layer_counts = req.layer_counts or [len(base.hidden)]
        schedules = [
            AnnealSchedule(s.kind, s.t0, s.a) for s in req.schedules
        ] or [base.schedule]
        grid = list(itertools.product(hidden_counts, layer_counts, schedules))
        if not grid:
            raise UsageError("sweep grid is empty")
        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        def run_point(point):
            n_hidden, n_layers, schedule = point
            config = replace(
                base,
                hidden=(n_hidden,) * n_layers,
                schedule=schedule,
            )
            label = f"h{n_hidden}_l{n_layers}_{schedule.kind}"
            result = train(split.train, split.validation, vocab, config)
            curves_path = out_dir / f"{label}.curves.csv"
            _write_curves(result, curves_path)
            return schemas.SweepPointModel(
                label=label,
                hidden=list(config.hidden),
                schedule=schemas.ScheduleModel(**schedule.to_json()),
                final_validation_error=_final_validation(result),
                curves_path=str(curves_path),
            )

        if req.threads > 1:
            with ThreadPoolExecutor(max_workers=req.threads) as pool:
                points = list(pool.map(run_point, grid))
        else:
            points = [run_point(p) for p in grid]
        write_manifest(
            out_dir / "sweep", "sweep", req.model_dump(), base.seed,
            dataset_fingerprint=dataset_fingerprint(scenes, vocab),
        )
        return schemas.SweepResponse(points=points)

    # -- generation ------------------------------------------------------------------

    @app.post("/generate", response_model=schemas.GenerateResponse)
    def generate_endpoint(req: schemas.GenerateRequest):
        model, vocab = load_model(req.model_path)
        if vocab is None:
            raise DataError("model file carries no vocabulary; cannot decode scenes")
        units = list(req.hidden_units)
        if not units and req.prototype_objects:
            proto = SceneDescription.make(
                objects=[vocab.object_index(n) for n in req.prototype_objects]
            )
            probs = hidden_probabilities(model, model.new_state(proto))[0]
            units = [int(np.argmax(probs))]
        if not units:
            raise UsageError(
                "choose hidden units directly or give prototype objects "
                "to pick the most-correlated unit"
            )
        scenes = [
            generate_scene(
                model, units, req.gibbs_steps,
                seed=req.seed + i, free_hidden=req.free_hidden,
            )
            for i in range(req.n)
        ]
        out_path = None
        if req.out_path is not None:
            out_path = req.out_path
            payload = scenes_to_json(scenes, vocab)
            Path(out_path).write_text(
                json.dumps(payload, indent=2) + "\n", encoding="utf-8"
            )
            write_manifest(out_path, "generate", req.model_dump(), req.seed,
                           model_path=req.model_path)
        return schemas.GenerateResponse(
            scenes=[scene_to_wire(s, vocab) for s in scenes],
            hidden_units=units,
            out_path=out_path,
        )

    # -- verification ------------------------------------------------------------------

    @app.post("/verify", response_model=schemas.VerifyResponse)
    def verify_endpoint(req: schemas.VerifyRequest):
        results = run_verification(req.seed)
        model_ok = None
        model_detail = None
        if req.model_path:
            try:
                load_model(req.model_path)
                model_ok, model_detail = True, "model file loads cleanly"
            except ScenebmError as exc:
                model_ok, model_detail = False, str(exc)
        return schemas.VerifyResponse(
            passed=all(r.passed for r in results),
            properties=[
                schemas.PropertyModel(name=r.name, passed=r.passed, detail=r.detail)
                for r in results
            ],
            model_file_ok=model_ok,
            model_file_detail=model_detail,
        )

    # -- model registry and task queries ---------------------------------------------------

    @app.post("/models", response_model=schemas.ModelInfo)
    def load_model_endpoint(req: schemas.LoadModelRequest):
        model_id = registry.load(req.path)
        return _model_info(model_id)

    @app.get("/models")
    def list_models():
        return {"models": registry.list_ids()}

    @app.get("/models/{model_id}", response_model=schemas.ModelInfo)
    def model_info_endpoint(model_id: str):
        return _model_info(model_id)

    def _model_info(model_id: str) -> schemas.ModelInfo:
        model, vocab, _ = registry.get(model_id)
        return schemas.ModelInfo(
            model_id=model_id,
            kind=model.kind,
            n_objects=model.dims.n_objects,
            n_relation_types=model.dims.n_relation_types,
            n_affordance_types=model.dims.n_affordance_types,
            hidden=list(model.dims.hidden),
            vocabulary_fingerprint=model.vocab_fingerprint,
        )

    @app.post("/models/{model_id}/tasks/{task}",
              response_model=schemas.TaskResponseModel)
    def task_endpoint(model_id: str, task: str, req: schemas.TaskRequestModel):
        model, vocab, _ = registry.get(model_id)
        scene = scene_from_wire(req.scene, vocab)
        query = TaskQuery(
            task=task, scene=scene, action=req.action, subject=req.subject,
            target=req.target, gibbs_steps=req.gibbs_steps, theta=req.theta,
            seed=req.seed,
        )
        result = run_task(model, vocab, query)
        probs = [
            schemas.NodeProbability(node=node_to_wire(ref, vocab), probability=p)
            for ref, p in sorted(result.probabilities.items(),
                                 key=lambda item: -item[1])
        ]
        ranking = None
        if result.ranking is not None:
            ranking = [
                schemas.NodeProbability(node=vocab.objects[j], probability=p)
                for j, p in result.ranking
            ]
        return schemas.TaskResponseModel(
            task=task,
            predictions=[
                schemas.NodeProbability(
                    node=node_to_wire(ref, vocab),
                    probability=result.probabilities[ref],
                )
                for ref in sorted(result.predicted)
            ],
            probabilities=probs,
            ranking=ranking,
            reconstructed=scene_to_wire(result.reconstructed, vocab),
        )

    @app.post("/models/{model_id}/rectify",
              response_model=schemas.RectifyResponseModel)
    def rectify_endpoint(model_id: str, req: schemas.RectifyRequestModel):
        model, vocab, _ = registry.get(model_id)
        result = rectify_detections(
            model, vocab, req.detections, req.gibbs_steps,
            req.theta_add, req.theta_drop, req.seed,
        )
        return schemas.RectifyResponseModel(
            kept=sorted(vocab.objects[j] for j in result.kept),
            added=sorted(vocab.objects[j] for j in result.added),
            dropped=sorted(vocab.objects[j] for j in result.dropped),
            probabilities={
                vocab.objects[j]: p for j, p in result.probabilities.items()
            },
        )

    return app
