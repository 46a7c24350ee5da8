"""Run manifests: every artifact-producing command records how it ran."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

from scenebm import __version__


def manifest_path(artifact: str | Path) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.name + ".manifest.json")


def write_manifest(
    artifact: str | Path,
    command: str,
    config: dict,
    seed: int,
    model_path: str | None = None,
    dataset_fingerprint: str | None = None,
) -> Path:
    payload = {
        "command": command,
        "config": config,
        "seed": seed,
        "model_path": model_path,
        "dataset_fingerprint": dataset_fingerprint,
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    path = manifest_path(artifact)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def read_manifest(artifact: str | Path) -> dict:
    return json.loads(manifest_path(artifact).read_text(encoding="utf-8"))
