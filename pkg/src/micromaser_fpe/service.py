"""FastAPI service wrapping the simulator: one endpoint per workflow."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .models import HealthResponse, RunResult, Scenario
from .scenarios import run_scenario

app = FastAPI(
    title="micromaser-fpe",
    version=__version__,
    description=(
        "Noise of micromaser light generated by correlated atom bunches: "
        "drift/diffusion coefficients, steady states, Mandel parameter, "
        "zero-frequency photocurrent spectrum and an exact Fock-space check."
    ),
)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=RunResult)
def run(scenario: Scenario) -> RunResult:
    """Run a single-point scenario (any mode except sweep)."""
    if scenario.mode == "sweep":
        raise HTTPException(status_code=400, detail="use POST /sweep for sweep mode")
    return _execute(scenario)


@app.post("/sweep", response_model=RunResult)
def sweep(scenario: Scenario) -> RunResult:
    """Run a one-axis parameter sweep; rows are ordered along the axis."""
    if scenario.sweep is None:
        raise HTTPException(status_code=400, detail="sweep mode requires a sweep section")
    return _execute(scenario.model_copy(update={"mode": "sweep"}))


@app.post("/compare", response_model=RunResult)
def compare(scenario: Scenario) -> RunResult:
    """Run the drift/diffusion prediction and the Fock-space oracle side by side."""
    if scenario.oracle is None:
        raise HTTPException(status_code=400,
                            detail="compare mode requires oracle truncation parameters")
    return _execute(scenario.model_copy(update={"mode": "compare"}))


def _execute(scenario: Scenario) -> RunResult:
    try:
        return run_scenario(scenario)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
