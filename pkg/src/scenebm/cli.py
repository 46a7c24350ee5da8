"""Command-line client for the scene-model service.

Every subcommand talks HTTP to the service layer. By default the app is
mounted in-process (no server needed, paths are local); pass --server to
drive a remote instance instead. Exit codes: 0 success, 1 usage error,
2 data error, 3 verification failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3


class ClientError(Exception):
    def __init__(self, exit_code: int, message: str):
        self.exit_code = exit_code
        super().__init__(message)


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge onto the ASGI app, one event loop per request."""

    def __init__(self, app):
        self._transport = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def round_trip():
            response = await self._transport.handle_async_request(request)
            content = await response.aread()
            return httpx.Response(
                status_code=response.status_code,
                headers=response.headers,
                content=content,
            )

        return asyncio.run(round_trip())


class ServiceClient:
    """Thin HTTP wrapper; in-process ASGI transport unless --server is set."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            from scenebm.service import create_app

            self._client = httpx.Client(
                transport=_InProcessTransport(create_app()),
                base_url="http://scenebm.local",
                timeout=None,
            )

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code >= 400:
            raise ClientError(*self._decode_error(response))
        return response.json()

    @staticmethod
    def _decode_error(response: httpx.Response) -> tuple[int, str]:
        try:
            body = response.json()
        except json.JSONDecodeError:
            return EXIT_DATA, response.text
        if isinstance(body, dict) and "error_kind" in body:
            code = EXIT_USAGE if body["error_kind"] == "usage" else EXIT_DATA
            return code, str(body.get("detail", ""))
        # Pydantic validation errors arrive as {"detail": [...]}.
        return EXIT_DATA, json.dumps(body.get("detail", body))


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL (default: in-process).")
@click.pass_context
def cli(ctx, server):
    """Scene modeling with Boltzmann machines."""
    ctx.obj = {"server": server}


def _client(ctx) -> ServiceClient:
    return ServiceClient(ctx.obj.get("server"))


@cli.command()
@click.option("--out", required=True, type=click.Path(), help="Dataset JSON path.")
@click.option("--profile", default="desk", show_default=True,
              help="Built-in planted profile (desk or benchmark).")
@click.option("--n", default=600, show_default=True, help="Scene count.")
@click.option("--seed", default=0, show_default=True)
@click.option("--noise", default=None, type=float,
              help="Spurious-object rate (profile default if omitted).")
@click.pass_context
def synth(ctx, out, profile, n, seed, noise):
    """Generate a planted-context synthetic dataset."""
    body = _client(ctx).post("/datasets/synthesize", {
        "profile": profile, "n": n, "seed": seed, "noise": noise,
        "out_path": out,
    })
    click.echo(f"wrote {body['n_scenes']} scenes to {body['path']}")
    click.echo(f"fingerprint {body['fingerprint'][:16]}...")


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON training config (unknown keys are rejected).")
@click.option("--dataset", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Model file path.")
@click.option("--seed", default=None, type=int, help="Overrides the config seed.")
@click.option("--split-seed", default=0, show_default=True)
@click.pass_context
def train(ctx, config_path, dataset, out, seed, split_seed):
    """Train a model and write model file, curves CSV and manifest."""
    config = {}
    if config_path:
        config = _read_json(config_path)
    if seed is not None:
        config["seed"] = seed
    body = _client(ctx).post("/train", {
        "dataset_path": dataset, "out_path": out, "config": config,
        "split_seed": split_seed,
    })
    click.echo(f"model written to {body['model_path']}")
    click.echo(f"curves written to {body['curves_path']}")
    stopped = " (early stop)" if body["stopped_early"] else ""
    click.echo(f"epochs run: {body['epochs_run']}{stopped}")
    for block, value in body["final_validation_error"].items():
        click.echo(f"validation {block} error: {value:.4f}")


@cli.command()
@click.option("--model", required=True, type=click.Path())
@click.option("--dataset", required=True, type=click.Path())
@click.option("--tasks", default="1,2,3,4,5,6", show_default=True,
              help="Comma-separated task ids (1-7).")
@click.option("--out", default=None, type=click.Path(), help="Report CSV path.")
@click.option("--theta", default=0.5, show_default=True)
@click.option("--theta-sweep", default="0.1,0.3,0.7,0.9", show_default=True,
              help="Extra thresholds re-scored into the report ('' disables).")
@click.option("--gibbs-steps", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--split-seed", default=0, show_default=True)
@click.option("--detections", default=None, type=click.Path(),
              help="Detector output JSON for task 7.")
@click.pass_context
def eval(ctx, model, dataset, tasks, out, theta, theta_sweep, gibbs_steps, seed,
         split_seed, detections):
    """Score tasks on the test split; emits micro and macro CSV reports."""
    try:
        task_ids = [int(t) for t in tasks.split(",") if t.strip()]
        sweep_thetas = [float(t) for t in theta_sweep.split(",") if t.strip()]
    except ValueError:
        raise ClientError(EXIT_USAGE, f"cannot parse task or theta list")
    if not task_ids:
        raise ClientError(EXIT_USAGE, "task list is empty")
    body = _client(ctx).post("/eval", {
        "model_path": model, "dataset_path": dataset, "tasks": task_ids,
        "theta": theta, "theta_sweep": sweep_thetas,
        "gibbs_steps": gibbs_steps, "seed": seed,
        "split_seed": split_seed, "out_path": out,
        "detections_path": detections,
    })
    for row in body["rows"]:
        # The console shows the primary threshold; the sweep lands in the CSV.
        if row["aggregation"] != "micro" or abs(row["theta"] - theta) > 1e-9:
            continue
        click.echo(
            f"{row['task']:18s} theta={row['theta']:.2f} "
            f"P={row['precision']:.4f} R={row['recall']:.4f} "
            f"F1={row['f1']:.4f} chance={row['chance_p']:.3g}"
        )
    if body.get("rectification"):
        r = body["rectification"]
        click.echo(
            f"{'rectification':18s} AP {r['ap_before']:.4f} -> {r['ap_after']:.4f} "
            f"({r['scenes']} scenes)"
        )
    if body.get("report_path"):
        click.echo(f"report written to {body['report_path']}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(),
              help="JSON sweep config: base plus grid lists.")
@click.option("--dataset", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--threads", default=1, show_default=True)
@click.option("--split-seed", default=0, show_default=True)
@click.pass_context
def sweep(ctx, config_path, dataset, out, threads, split_seed):
    """Train every grid point and emit comparable error curves."""
    grid = _read_json(config_path)
    payload = {
        "dataset_path": dataset, "out_dir": out, "threads": threads,
        "split_seed": split_seed,
    }
    for key in ("base", "hidden_counts", "layer_counts", "schedules"):
        if key in grid:
            payload[key] = grid[key]
    unknown = set(grid) - {"base", "hidden_counts", "layer_counts", "schedules"}
    if unknown:
        raise ClientError(EXIT_USAGE, f"unknown sweep config keys: {sorted(unknown)}")
    body = _client(ctx).post("/sweep", payload)
    for point in body["points"]:
        errors = ", ".join(
            f"{k}={v:.4f}" for k, v in point["final_validation_error"].items()
        )
        click.echo(f"{point['label']:24s} {errors}")


@cli.command()
@click.option("--model", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path(), help="Scenes JSON path.")
@click.option("--n", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--gibbs-steps", default=20, show_default=True)
@click.option("--hidden-units", default="", help="Comma-separated unit indices.")
@click.option("--prototype", default="", help="Comma-separated object names whose "
              "most-correlated hidden unit seeds the generation.")
@click.option("--free-hidden", is_flag=True, default=False,
              help="Leave unselected hidden units free instead of zero.")
@click.pass_context
def generate(ctx, model, out, n, seed, gibbs_steps, hidden_units, prototype,
             free_hidden):
    """Sample scenes from clamped context units."""
    units = [int(u) for u in hidden_units.split(",") if u.strip()]
    proto = [p.strip() for p in prototype.split(",") if p.strip()]
    body = _client(ctx).post("/generate", {
        "model_path": model, "n": n, "seed": seed, "gibbs_steps": gibbs_steps,
        "hidden_units": units, "prototype_objects": proto,
        "free_hidden": free_hidden, "out_path": out,
    })
    click.echo(f"clamped hidden units: {body['hidden_units']}")
    for scene in body["scenes"]:
        click.echo("scene: " + ", ".join(scene["objects"]))
    if body.get("out_path"):
        click.echo(f"scenes written to {body['out_path']}")


@cli.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--model", default=None, type=click.Path(),
              help="Additionally check that this model file loads.")
@click.pass_context
def verify(ctx, seed, model):
    """Run the exact-oracle property suite; exit 3 on any failure."""
    body = _client(ctx).post("/verify", {"seed": seed, "model_path": model})
    for prop in body["properties"]:
        status = "pass" if prop["passed"] else "FAIL"
        click.echo(f"[{status}] {prop['name']}: {prop['detail']}")
    if body.get("model_file_ok") is not None:
        status = "ok" if body["model_file_ok"] else "load error"
        click.echo(f"model file: {status} ({body['model_file_detail']})")
    if not body["passed"]:
        raise ClientError(EXIT_VERIFY, "verification failed")
    click.echo("all properties passed")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from scenebm.service import create_app

    uvicorn.run(create_app(), host=host, port=port)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ClientError(EXIT_DATA, f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ClientError(EXIT_DATA, f"{path}: not valid JSON: {exc}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except ClientError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except httpx.HTTPError as exc:
        click.echo(f"transport error: {exc}", err=True)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
