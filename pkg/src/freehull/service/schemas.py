"""Request and response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class PointModel(BaseModel):
    """A g-tuple of symmetric n x n matrices, row-major."""

    model_config = ConfigDict(extra="forbid")

    g: int = Field(ge=1)
    n: int = Field(ge=1)
    matrices: list[list[list[float]]]

    @field_validator("matrices")
    @classmethod
    def _shape(cls, v, info):
        g, n = info.data.get("g"), info.data.get("n")
        if g is not None and len(v) != g:
            raise ValueError(f"expected {g} matrices, got {len(v)}")
        for M in v:
            if n is not None and (len(M) != n or any(len(r) != n for r in M)):
                raise ValueError(f"every matrix must be {n}x{n}")
        return v


class MemberRequest(BaseModel):
    poly: str
    point: PointModel
    level: int = Field(0, ge=0)
    box: Optional[float] = Field(None, gt=0)
    arch_constant: Optional[float] = Field(None, gt=0)
    tol: Optional[float] = Field(None, gt=0, description="strict-feasibility threshold")
    include_witness: bool = False


class CertificateModel(BaseModel):
    multipliers: list[list[list[float]]]
    lam_plus: list[float]
    lam_minus: list[float]
    gap: float
    verified: bool


class MemberResponse(BaseModel):
    status: str
    margin: float
    level: int
    n: int
    box_radius: float
    iterations: int
    certificate: Optional[CertificateModel] = None
    witness: Optional[dict[str, Any]] = None
    diagnostics: dict[str, Any] = {}


class SeparateResponse(BaseModel):
    c0: float
    C: list[list[list[float]]]
    provenance: str
    level: int
    value_at_point: float


class GnsRequest(BaseModel):
    moments: dict[str, Any]
    degree: int = Field(ge=1)
    rank_tol: float = Field(1e-8, gt=0)
    poly: Optional[str] = None


class GnsResponse(BaseModel):
    dim: int
    Z: list[list[list[float]]]
    Q: list[list[float]]
    rank_profile: list[int]
    residuals: dict[str, Optional[float]]


class SosCheckRequest(BaseModel):
    target: str
    poly: str
    alpha: int = Field(ge=0)
    beta: int = Field(ge=0)
    box: float = Field(100.0, gt=0)


class SosCheckResponse(BaseModel):
    found: bool
    reason: Optional[str] = None
    certificate: Optional[dict[str, Any]] = None


class ArchVerifyRequest(BaseModel):
    poly: str
    k_squared: float
    sos: list[str] = []
    loc: list[str] = []


class ArchVerifyResponse(BaseModel):
    valid: bool
    residual_terms: int


class EvalRequest(BaseModel):
    poly: str
    point: PointModel


class EvalResponse(BaseModel):
    canonical: str
    value: list[list[float]]
    min_eig: float
    psd: bool


class ScenarioRequest(BaseModel):
    seed: int = 0
    grid: int = Field(20, ge=2)
    samples: int = Field(50, ge=1)
    per_side: int = Field(30, ge=1)
    timing: bool = False


class ErrorResponse(BaseModel):
    kind: str
    detail: str
