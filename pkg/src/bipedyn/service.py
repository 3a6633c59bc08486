"""HTTP service wrapping the dynamics engine.

Config documents travel in request bodies as text, results come back as
JSON; the CLI is a thin client of these endpoints. Errors map to
structured payloads: config problems -> 400 {"error": "config"},
numerical degeneracies -> 422 {"error": "numerical"}.
"""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .errors import ModelConfigError, NumericsError
from .assembly import assemble
from .model import load_model
from .reduction import reduce as reduce_model
from .reduction import lift_nullspace, velocity_basis
from .sim import chart_to_state, build_full_state, parse_sim_config, simulate
from .verify import run_checks

__all__ = ["create_app", "app"]


class VersionResponse(BaseModel):
    name: str
    version: str


class ValidateRequest(BaseModel):
    robot_config: str


class ValidateResponse(BaseModel):
    ok: bool
    n_dof: int
    total_mass: float


class CheckRequest(BaseModel):
    robot_config: str
    seed: int = 0
    samples: int = Field(default=1000, ge=1, le=1_000_000)


class CheckItem(BaseModel):
    name: str
    samples: int
    max_residual: float
    tolerance: float
    passed: bool


class CheckResponse(BaseModel):
    seed: int
    samples: int
    passed: bool
    checks: list[CheckItem]


class MatrixDump(BaseModel):
    name: str
    rows: int
    cols: int
    data: list[list[float]]


class ReduceRequest(BaseModel):
    robot_config: str
    phi: list[float] | None = None
    phi_dot: list[float] | None = None
    dump_all: bool = False


class ReduceResponse(BaseModel):
    n: int
    j: list[list[float]]
    h: list[float]
    g: list[float]
    d: list[list[float]]
    d_condition: float
    dumps: list[MatrixDump] | None = None


class SimulateRequest(BaseModel):
    robot_config: str
    sim_config: str


class SimulateResponse(BaseModel):
    summary: dict
    columns: list[str]
    samples: list[list[float | str]]
    metadata: dict


def _grid(name: str, arr: np.ndarray) -> MatrixDump:
    m = np.atleast_2d(np.asarray(arr, dtype=float))
    return MatrixDump(name=name, rows=m.shape[0], cols=m.shape[1], data=m.tolist())


def create_app() -> FastAPI:
    app = FastAPI(title="bipedyn", version=__version__)

    @app.exception_handler(ModelConfigError)
    async def _config_error(request: Request, exc: ModelConfigError):
        return JSONResponse(status_code=400, content={"error": "config", "message": str(exc)})

    @app.exception_handler(NumericsError)
    async def _numerics_error(request: Request, exc: NumericsError):
        return JSONResponse(status_code=422, content={"error": "numerical", "message": str(exc)})

    @app.get("/version", response_model=VersionResponse)
    def version() -> VersionResponse:
        return VersionResponse(name="bipedyn", version=__version__)

    @app.post("/model/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        model = load_model(req.robot_config)
        return ValidateResponse(
            ok=True, n_dof=model.n_dof, total_mass=float(np.sum(model.masses))
        )

    @app.post("/check", response_model=CheckResponse)
    def check(req: CheckRequest) -> CheckResponse:
        model = load_model(req.robot_config)
        results = run_checks(model, seed=req.seed, samples=req.samples)
        items = [
            CheckItem(
                name=r.name, samples=r.samples, max_residual=r.max_residual,
                tolerance=r.tolerance, passed=r.passed,
            )
            for r in results
        ]
        return CheckResponse(
            seed=req.seed, samples=req.samples,
            passed=all(r.passed for r in results), checks=items,
        )

    @app.post("/reduce", response_model=ReduceResponse)
    def reduce_endpoint(req: ReduceRequest) -> ReduceResponse:
        model = load_model(req.robot_config)
        n = model.n_dof
        phi = np.zeros(n) if req.phi is None else np.asarray(req.phi, dtype=float)
        phi_dot = np.zeros(n) if req.phi_dot is None else np.asarray(req.phi_dot, dtype=float)
        st = chart_to_state(model, phi, phi_dot)
        full = build_full_state(model, st)
        red = reduce_model(model, full, phi_dot)
        dumps = None
        if req.dump_all:
            asm = assemble(model, full)
            p8, p9, p10, p11 = lift_nullspace(asm)
            p12, p13 = velocity_basis(model, full, phi_dot)
            dumps = [
                _grid("P1", asm.p1), _grid("P2", asm.p2.reshape(-1, 1)),
                _grid("P3", asm.p3), _grid("P4", asm.p4), _grid("P5", asm.p5),
                _grid("P6", asm.p6.reshape(-1, 1)), _grid("P7", asm.p7.reshape(-1, 1)),
                _grid("P8", p8), _grid("P9", p9), _grid("P10", p10),
                _grid("P11", p11.reshape(-1, 1)), _grid("P12", p12),
                _grid("P13", p13.reshape(-1, 1)),
            ]
        return ReduceResponse(
            n=red.n, j=red.j.tolist(), h=red.h.tolist(), g=red.g.tolist(),
            d=red.d.tolist(), d_condition=red.d_condition, dumps=dumps,
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate_endpoint(req: SimulateRequest) -> SimulateResponse:
        model = load_model(req.robot_config)
        cfg = parse_sim_config(req.sim_config)
        traj = simulate(model, cfg)
        summary = {
            "n_samples": traj.metadata.get("n_samples", 0),
            "n_impacts": traj.metadata.get("n_impacts", 0),
            "events": traj.metadata.get("events", []),
            "max_drift_holonomic_m": traj.metadata.get("max_drift_holonomic_m"),
            "energy_drift_J": traj.metadata.get("energy_drift_J"),
            "aborted": traj.metadata.get("aborted"),
        }
        doc = traj.to_json_doc()
        return SimulateResponse(
            summary=summary, columns=doc["columns"], samples=doc["samples"],
            metadata=doc["metadata"],
        )

    return app


app = create_app()
