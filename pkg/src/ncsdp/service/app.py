"""HTTP service exposing solve, compare, and verify."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import NcsdpError
from ..runner import run_compare, run_solve, run_verify
from .schemas import (
    CompareRequest,
    CompareResponse,
    SolveRequest,
    SolveResponse,
    VerifyRequest,
    VerifyResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="ncsdp", version="0.1.0")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> dict:
        try:
            return run_solve(
                problem=req.problem.to_choice(),
                solver=req.solver.to_choice(),
                schedule=req.schedule.to_choice(),
                seed=req.seed,
                total_iteration_budget=req.total_iteration_budget,
                include_trace=req.include_trace,
            )
        except NcsdpError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> dict:
        try:
            return run_compare(
                problem=req.problem.to_choice(),
                solver=req.solver.to_choice(),
                schedule=req.schedule.to_choice(),
                seeds=tuple(req.seeds),
                methods=tuple(req.methods),
                total_iteration_budget=req.total_iteration_budget,
                workers=req.workers,
            )
        except NcsdpError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest) -> dict:
        try:
            return run_verify(
                problem=req.problem.to_choice(),
                seed=req.seed,
                points=req.points,
                pairs=req.pairs,
                fault=req.fault,
            )
        except NcsdpError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    return app


app = create_app()
