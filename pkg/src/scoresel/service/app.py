"""FastAPI app exposing the feature-selection pipelines.

Bad requests (unknown keys, out-of-range values) are 422s produced by the
schemas; pipeline failures surface as 400 with the error message so a thin
client can relay it.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from . import runs, schemas


def create_app() -> FastAPI:
    app = FastAPI(title="scoresel", version=__version__)

    def guarded(fn, req):
        try:
            return fn(req)
        except (ValueError, KeyError, FileNotFoundError, OSError) as err:
            raise HTTPException(status_code=400, detail=str(err)) from err

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.RunConfig):
        return guarded(runs.run_train, req)

    @app.post("/select", response_model=schemas.SelectResponse)
    def select(req: schemas.SelectRequest):
        return guarded(runs.run_select, req)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        return guarded(runs.run_eval, req)

    @app.post("/oracle", response_model=schemas.OracleResponse)
    def oracle(req: schemas.OracleRequest):
        return guarded(runs.run_oracle, req)

    @app.post("/sweep/n", response_model=schemas.ReportResponse)
    def sweep_n(req: schemas.SweepRequest):
        return guarded(runs.run_sweep_n, req)

    @app.post("/sweep/lambda1", response_model=schemas.ReportResponse)
    def sweep_lambda(req: schemas.SweepRequest):
        return guarded(runs.run_sweep_lambda, req)

    @app.post("/sweep/k", response_model=schemas.ReportResponse)
    def sweep_k(req: schemas.SweepRequest):
        return guarded(runs.run_sweep_k, req)

    @app.post("/beta", response_model=schemas.ReportResponse)
    def beta(req: schemas.BetaRequest):
        return guarded(runs.run_beta, req)

    @app.post("/overlap", response_model=schemas.ReportResponse)
    def overlap(req: schemas.OverlapRequest):
        return guarded(runs.run_overlap, req)

    @app.post("/gen-synth", response_model=schemas.GenSynthResponse)
    def gen_synth(req: schemas.GenSynthRequest):
        return guarded(runs.run_gen_synth, req)

    return app


app = create_app()
