"""HTTP front end: one POST endpoint per operation.

Run with ``apc serve`` or ``uvicorn apconflict.api:app``.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .errors import DivergenceError, ParameterError
from .service import (SimulateRequest, SimulateResponse, SolveRequest,
                      SolveResponse, SweepRequest, SweepResponse,
                      VerifyRequest, VerifyResponse, run_simulate, run_solve,
                      run_sweep, run_verify)

app = FastAPI(
    title="apconflict",
    version=__version__,
    description="Quasi-equilibrium solver and Monte-Carlo simulator for "
                "two-country all-pay conflicts with fractional forfeiture.",
)


@app.exception_handler(ParameterError)
async def _parameter_error(request: Request, exc: ParameterError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(DivergenceError)
async def _divergence_error(request: Request, exc: DivergenceError) -> JSONResponse:
    return JSONResponse(status_code=409,
                        content={"detail": str(exc), "k0_trace": exc.trace})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    return run_solve(req)


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    return run_verify(req)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    return run_simulate(req)


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    return run_sweep(req)
