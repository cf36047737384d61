"""FastAPI service wrapping the experiment runner.

Experiments can take minutes; requests run synchronously and return every
output file inline, so a remote client can persist byte-identical results
locally.  Error responses carry a category that clients map to exit codes:
usage -> 2, data -> 3, runtime -> 4.
"""

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..capacity import capacity_sweep
from ..datasets import DatasetError
from ..experiments import (ExperimentConfig, RuntimeFailure, UsageError,
                           list_experiments, run_experiment)
from ..serialize import manifest_from_text
from .schemas import (CapacityRequest, CapacityResponse, CapacityRow, ErrorBody,
                      ExperimentInfo, ExperimentListResponse, FilePayload,
                      HealthResponse, RunRequest, RunResponse)


def _error_response(status: int, category: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": ErrorBody(category=category,
                                                    message=message).model_dump()})


def create_app() -> FastAPI:
    app = FastAPI(title="branchlearn", version=__version__)

    @app.exception_handler(UsageError)
    async def _usage(_req, exc):
        return _error_response(400, "usage", str(exc))

    @app.exception_handler(DatasetError)
    async def _data(_req, exc):
        return _error_response(404, "data", str(exc))

    @app.exception_handler(RuntimeFailure)
    async def _runtime(_req, exc):
        return _error_response(500, "runtime", str(exc))

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/experiments", response_model=ExperimentListResponse)
    def experiments(filter: str | None = None):
        items = [ExperimentInfo(name=n, description=d)
                 for n, d in list_experiments(filter)]
        return ExperimentListResponse(experiments=items)

    @app.post("/experiments/run", response_model=RunResponse)
    def run(req: RunRequest):
        config = ExperimentConfig(experiment=req.experiment, seed=req.seed,
                                  scale=req.scale, threads=req.threads,
                                  data_dir=req.data_dir,
                                  overrides=dict(req.overrides))
        files, summary = run_experiment(config)
        manifest = manifest_from_text(files["manifest.txt"])
        return RunResponse(
            experiment=req.experiment,
            files=[FilePayload(name=n, text=t) for n, t in sorted(files.items())],
            summary=[{k: str(v) for k, v in row.items()} for row in summary],
            content_sha256=manifest["content_sha256"],
        )

    @app.post("/capacity", response_model=CapacityResponse)
    def capacity(req: CapacityRequest):
        try:
            rows = capacity_sweep(req.d, req.s, req.m_values)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        best = max(rows, key=lambda r: r[2])
        return CapacityResponse(
            rows=[CapacityRow(m=m, k=k, ln_capacity=v) for m, k, v in rows],
            argmax_m=best[0],
        )

    return app
