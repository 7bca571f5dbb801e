"""Pydantic request/response models shared by the service, client and CLI."""
from __future__ import annotations

import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from . import fpe_engine
from .pump_states import CLONE_MIXTURE, FAMILIES, GHZ_CLASS, PRODUCT_UPPER, Z_STATE, PumpState

MODES = ("coefficients", "steady-state", "noise", "oracle", "compare", "sweep", "sde")

FAMILY_ALIASES = {
    "ghz": GHZ_CLASS,
    "ghz_class": GHZ_CLASS,
    "clone": CLONE_MIXTURE,
    "clone_mixture": CLONE_MIXTURE,
    "mixture": CLONE_MIXTURE,
    "zstate": Z_STATE,
    "z_state": Z_STATE,
    "z": Z_STATE,
    "product_upper": PRODUCT_UPPER,
    "upper": PRODUCT_UPPER,
}

SWEEP_AXES = ("pump.lambda1", "pump.alpha_abs", "pump.ab_abs", "cavity.gT", "cavity.CT")


class PumpSpec(BaseModel):
    family: str
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    beta_re: float = 0.0
    beta_im: float = 0.0
    lambda1: float = 1.0
    b: int = 1
    n_atoms: int = Field(default=2, ge=1)

    @field_validator("family")
    @classmethod
    def _canonical_family(cls, v: str) -> str:
        key = v.strip().lower().replace("-", "_")
        if key not in FAMILY_ALIASES:
            raise ValueError(f"unknown pump family {v!r}; expected one of {sorted(set(FAMILY_ALIASES))}")
        return FAMILY_ALIASES[key]

    @model_validator(mode="after")
    def _realizable(self):
        # surface family-specific constraint violations at parse time
        self.to_pump()
        return self

    def to_pump(self) -> PumpState:
        return PumpState(
            family=self.family,
            n_atoms=self.n_atoms,
            alpha=complex(self.alpha_re, self.alpha_im),
            beta=complex(self.beta_re, self.beta_im),
            lambda1=self.lambda1,
            b=self.b,
        )


class CavitySpec(BaseModel):
    gT: float = Field(gt=0)
    CT: float = Field(gt=0)

    def to_cavity(self, n_atoms: int) -> fpe_engine.CavityConfig:
        return fpe_engine.CavityConfig(gT=self.gT, CT=self.CT, n_atoms=n_atoms)


class OracleSpec(BaseModel):
    n_max: int = Field(default=64, ge=4)
    conv_tol: float = Field(default=1e-8, gt=0)
    max_cycles: int = Field(default=20000, ge=1)


class SdeSpec(BaseModel):
    n_traj: int = Field(default=10000, ge=1)
    dt: float = Field(default=1.0, gt=0)
    t_end: Optional[float] = Field(default=None, gt=0)


class FieldPoint(BaseModel):
    """Explicit field point for coefficients mode; defaults to the steady state."""

    I: Optional[float] = Field(default=None, gt=0)
    phi: Optional[float] = None


class SweepSpec(BaseModel):
    axis: str
    start: float
    stop: float
    points: int = Field(ge=2)

    @field_validator("axis")
    @classmethod
    def _known_axis(cls, v: str) -> str:
        if v not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {v!r}; expected one of {SWEEP_AXES}")
        return v

    def values(self) -> list[float]:
        step = (self.stop - self.start) / (self.points - 1)
        return [self.start + i * step for i in range(self.points)]


class NoiseOptions(BaseModel):
    """Noise-mode knobs: Q_II route and optional operating-point optimization."""

    method: Literal["auto", "closed-form", "quadrature"] = "auto"
    optimize_b: bool = False
    b_min: float = fpe_engine.B_SEARCH_MIN
    b_max: float = fpe_engine.B_SEARCH_MAX


class Scenario(BaseModel):
    pump: PumpSpec
    cavity: CavitySpec
    mode: Literal[MODES] = "noise"  # type: ignore[valid-type]
    oracle: Optional[OracleSpec] = None
    sde: SdeSpec = SdeSpec()
    field_point: FieldPoint = FieldPoint()
    sweep: Optional[SweepSpec] = None
    noise: NoiseOptions = NoiseOptions()
    seed: int = 0
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _mode_requirements(self):
        if self.mode == "sweep" and self.sweep is None:
            raise ValueError("sweep mode requires a sweep section (exactly one axis)")
        if self.mode in ("oracle", "compare") and self.oracle is None:
            raise ValueError(f"{self.mode} mode requires oracle truncation parameters")
        return self


class ResultRow(BaseModel):
    """One evaluated point; mirrors the CSV columns plus a free-text note."""

    point_id: int
    swept_value: Optional[float] = None
    I_ss: Optional[float] = None
    B: Optional[float] = None
    phi_ss: Optional[float] = None
    Gamma: Optional[float] = None
    xi: Optional[float] = None
    i2_zero: Optional[float] = None
    Q_II: Optional[float] = None
    stable: Optional[bool] = None
    sf_valid: Optional[bool] = None
    trunc_ok: Optional[bool] = None
    method: str = ""
    note: str = ""

    def has_nan(self) -> bool:
        for name in ("swept_value", "I_ss", "B", "phi_ss", "Gamma", "xi",
                     "i2_zero", "Q_II"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                return True
        return False


class PointFailure(BaseModel):
    point_id: int
    swept_value: Optional[float] = None
    error: str


class RunResult(BaseModel):
    rows: list[ResultRow]
    warnings: list[str] = []
    discrepancies: list[dict] = []
    failures: list[PointFailure] = []
    manifest: dict


class HealthResponse(BaseModel):
    status: str
    version: str
