"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..runner import ProblemChoice, ScheduleChoice, SolverChoice

Method = Literal["pdipm", "primal", "pdipm-no-nc"]


class ProblemModel(BaseModel):
    kind: Literal["psf", "scalar", "file"] = "psf"
    # packed-factorization benchmark dimensions
    m: int = Field(default=5, ge=1)
    n: int = Field(default=5, ge=1)
    q: int = Field(default=4, ge=1)
    r: float = Field(default=0.3, gt=0.0)
    # scalar model slope
    c: float = Field(default=1.0, gt=0.0)
    # serialized instance text for kind="file"
    content: str | None = None

    def to_choice(self) -> ProblemChoice:
        return ProblemChoice(kind=self.kind, m=self.m, n=self.n, q=self.q,
                             r=self.r, c=self.c, content=self.content)


class SolverModel(BaseModel):
    method: Method = "pdipm"
    step_mode: Literal["backtracking", "fixed"] = "backtracking"
    beta: float = Field(default=0.5, gt=0.0, lt=1.0)
    alpha_floor: float = Field(default=1e-16, gt=0.0, lt=1.0)
    h_min: float = Field(default=1.0, gt=0.0)
    h_max: float = Field(default=1.0, gt=0.0)
    kappa_min: float = Field(default=1.0, gt=0.0)
    kappa_max: float = Field(default=1.0, gt=0.0)
    max_inner_iters: int = Field(default=10000, ge=1)
    procedures: list[int] | None = None
    l0: float | None = Field(default=None, gt=0.0)
    l1: float | None = Field(default=None, ge=0.0)
    l2: float | None = Field(default=None, ge=0.0)

    def to_choice(self) -> SolverChoice:
        procs = None if self.procedures is None else tuple(self.procedures)
        return SolverChoice(
            method=self.method, step_mode=self.step_mode, beta=self.beta,
            alpha_floor=self.alpha_floor, h_min=self.h_min, h_max=self.h_max,
            kappa_min=self.kappa_min, kappa_max=self.kappa_max,
            max_inner_iters=self.max_inner_iters, procedures=procs,
            l0=self.l0, l1=self.l1, l2=self.l2,
        )


class ScheduleModel(BaseModel):
    mu_init: float = Field(default=0.3, gt=0.0)
    mu_min: float = Field(default=1e-8, gt=0.0)
    max_outer_iters: int = Field(default=60, ge=1)
    nu_fixed: float | None = Field(default=None, ge=0.0)

    def to_choice(self) -> ScheduleChoice:
        return ScheduleChoice(mu_init=self.mu_init, mu_min=self.mu_min,
                              max_outer_iters=self.max_outer_iters,
                              nu_fixed=self.nu_fixed)


class SolveRequest(BaseModel):
    problem: ProblemModel = ProblemModel()
    solver: SolverModel = SolverModel()
    schedule: ScheduleModel = ScheduleModel()
    seed: int = 1
    total_iteration_budget: int | None = Field(default=None, ge=1)
    include_trace: bool = False


class SummaryModel(BaseModel):
    status: str
    stop_reason: str
    method: str
    seed: int
    problem: dict
    final_f: float
    final_x: list[float]
    outer_iters: int
    inner_iters_total: int
    counts: dict[str, int]
    nc_count: int
    wall_time_s: float
    certificates: dict
    outer: list[dict]
    schedule: dict
    solver: dict


class SolveResponse(BaseModel):
    summary: SummaryModel
    trace: list[dict] | None = None


class CompareRequest(BaseModel):
    problem: ProblemModel = ProblemModel()
    solver: SolverModel = SolverModel()
    schedule: ScheduleModel = ScheduleModel()
    seeds: list[int] = Field(default=[1, 2, 3, 4, 5, 6], min_length=1)
    methods: list[Method] = Field(default=["pdipm", "pdipm-no-nc"], min_length=1)
    total_iteration_budget: int | None = Field(default=300, ge=1)
    workers: int = Field(default=4, ge=1)


class CompareRow(BaseModel):
    seed: int
    method: str
    nc_count: int
    final_f: float
    wall_time_s: float


class CompareResponse(BaseModel):
    rows: list[CompareRow]
    # per run: [global iteration, objective value, procedure name]
    plots: dict[str, list]


class VerifyRequest(BaseModel):
    problem: ProblemModel = ProblemModel()
    seed: int = 1
    points: int = Field(default=6, ge=1)
    pairs: int = Field(default=20, ge=1)
    fault: Literal["grad-f"] | None = None


class CheckModel(BaseModel):
    name: str
    passed: bool
    ran: bool
    detail: str = ""


class VerifyResponse(BaseModel):
    all_passed: bool
    checks: list[CheckModel]
    problem: dict
    fault: str | None = None
