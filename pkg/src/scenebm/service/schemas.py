"""Pydantic wire models for the HTTP service.

Scenes travel as names, not indices; the service resolves them against
the vocabulary of the dataset or model involved. Config-bearing models
forbid unknown keys so typos fail loudly instead of being ignored.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class SceneModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    objects: list[str] = Field(default_factory=list)
    relations: list[tuple[str, str, str]] = Field(default_factory=list)
    affordances: list[tuple[str, str, str]] = Field(default_factory=list)
    context: Optional[str] = None


class ScheduleModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = "constant"
    t0: float = 1.0
    a: float = 0.0


class TrainConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model_kind: str = "cosmo"
    hidden: list[int] = Field(default_factory=lambda: [16])
    learning_rate: float = 0.05
    epochs: int = 30
    gibbs_steps: int = 1
    schedule: ScheduleModel = Field(default_factory=ScheduleModel)
    seed: int = 0
    batch_size: int = 1
    patience: int = 5
    patience_tol: float = 1e-6
    init_sigma: float = 0.01
    pretrain_epochs: int = 0
    tie_scaled_updates: bool = True


class SynthesizeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    profile: str = "desk"
    n: int = 600
    seed: int = 0
    noise: Optional[float] = None
    out_path: str


class SynthesizeResponse(BaseModel):
    path: str
    n_scenes: int
    fingerprint: str


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset_path: str
    out_path: str
    config: TrainConfigModel = Field(default_factory=TrainConfigModel)
    split_seed: int = 0


class CurvePointModel(BaseModel):
    epoch: int
    split: str
    block: str
    value: float


class TrainResponse(BaseModel):
    model_path: str
    curves_path: str
    epochs_run: int
    stopped_early: bool
    final_validation_error: dict[str, float]


class EvalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model_path: str
    dataset_path: str
    tasks: list[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    theta: float = 0.5
    theta_sweep: list[float] = Field(default_factory=list)
    gibbs_steps: int = 20
    seed: int = 0
    split_seed: int = 0
    out_path: Optional[str] = None
    detections_path: Optional[str] = None


class ReportRowModel(BaseModel):
    task: str
    model: str
    split: str
    theta: float
    tp: int
    tn: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    chance_p: float
    aggregation: str


class RectificationRowModel(BaseModel):
    ap_before: float
    ap_after: float
    scenes: int
    skipped_before: int
    skipped_after: int


class EvalResponse(BaseModel):
    rows: list[ReportRowModel]
    rectification: Optional[RectificationRowModel] = None
    report_path: Optional[str] = None


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset_path: str
    out_dir: str
    base: TrainConfigModel = Field(default_factory=TrainConfigModel)
    hidden_counts: list[int] = Field(default_factory=list)
    layer_counts: list[int] = Field(default_factory=list)
    schedules: list[ScheduleModel] = Field(default_factory=list)
    threads: int = 1
    split_seed: int = 0


class SweepPointModel(BaseModel):
    label: str
    hidden: list[int]
    schedule: ScheduleModel
    final_validation_error: dict[str, float]
    curves_path: str


class SweepResponse(BaseModel):
    points: list[SweepPointModel]


class GenerateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model_path: str
    n: int = 1
    gibbs_steps: int = 20
    seed: int = 0
    hidden_units: list[int] = Field(default_factory=list)
    prototype_objects: list[str] = Field(default_factory=list)
    free_hidden: bool = False
    out_path: Optional[str] = None


class GenerateResponse(BaseModel):
    scenes: list[SceneModel]
    hidden_units: list[int]
    out_path: Optional[str] = None


class VerifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    model_path: Optional[str] = None


class PropertyModel(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyResponse(BaseModel):
    passed: bool
    properties: list[PropertyModel]
    model_file_ok: Optional[bool] = None
    model_file_detail: Optional[str] = None


class LoadModelRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str


class ModelInfo(BaseModel):
    model_id: str
    kind: str
    n_objects: int
    n_relation_types: int
    n_affordance_types: int
    hidden: list[int]
    vocabulary_fingerprint: Optional[str]


class TaskRequestModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scene: SceneModel = Field(default_factory=SceneModel)
    action: Optional[str] = None
    subject: Optional[str] = None
    target: Optional[str] = None
    gibbs_steps: int = 20
    theta: float = 0.5
    seed: int = 0


class NodeProbability(BaseModel):
    node: str
    probability: float


class TaskResponseModel(BaseModel):
    task: str
    predictions: list[NodeProbability]
    probabilities: list[NodeProbability]
    ranking: Optional[list[NodeProbability]] = None
    reconstructed: SceneModel


class RectifyRequestModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    detections: list[str]
    gibbs_steps: int = 20
    theta_add: float = 0.8
    theta_drop: float = 0.2
    seed: int = 0


class RectifyResponseModel(BaseModel):
    kept: list[str]
    added: list[str]
    dropped: list[str]
    probabilities: dict[str, float]


class ErrorBody(BaseModel):
    error_kind: str
    detail: str
