"""Pydantic request/response models for the service and the CLI.

The CLI builds the same request models and calls the same handlers as the
HTTP routes, so the two surfaces cannot drift apart.
"""

from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator


class AccountRequest(BaseModel):
    l: int = Field(ge=1)
    c: float = Field(default=1.0, gt=0)
    sigma_x: float = Field(ge=0)
    sigma_y: float = Field(ge=0)
    n: int = Field(ge=1)
    t: int = Field(ge=1)
    delta: float = Field(default=1e-5, gt=0, lt=1)
    alpha_max: int = Field(default=256, ge=3)
    p_mode: Literal["global", "per-class"] = "global"
    min_class_count: Optional[int] = Field(default=None, ge=1)


class PrivacyReportModel(BaseModel):
    epsilon: Optional[float]  # None means non-private (infinite)
    non_private: bool
    delta: float
    alpha_star: Optional[int]
    boundary_minimum: bool
    precision_note: str
    rdp_orders: List[int]
    rdp_epsilons: List[Optional[float]]
    baseline_epsilon: Optional[float] = None
    params: dict


class CalibrateRequest(BaseModel):
    target_epsilon: float = Field(gt=0)
    delta: float = Field(default=1e-5, gt=0, lt=1)
    l: int = Field(ge=1)
    c: float = Field(default=1.0, gt=0)
    n: int = Field(ge=1)
    t: int = Field(ge=1)
    ratio: float = Field(default=1.0, gt=0)
    alpha_max: int = Field(default=256, ge=3)
    p_mode: Literal["global", "per-class"] = "global"
    min_class_count: Optional[int] = Field(default=None, ge=1)


class CalibrateResponse(BaseModel):
    sigma_x: float
    sigma_y: float
    bracket_hit: bool
    report: PrivacyReportModel


class SweepRequest(BaseModel):
    ls: List[int] = Field(min_length=1)
    sigmas: List[float] = Field(min_length=1)
    c: float = Field(default=1.0, gt=0)
    n: int = Field(ge=1)
    t: int = Field(ge=1)
    delta: float = Field(default=1e-5, gt=0, lt=1)
    ratio: float = Field(default=1.0, gt=0)
    alpha_max: int = Field(default=256, ge=3)
    p_mode: Literal["global", "per-class"] = "global"
    min_class_count: Optional[int] = Field(default=None, ge=1)


class SweepRowModel(BaseModel):
    l: int
    sigma_x: float
    sigma_y: float
    alpha_star: Optional[int]
    epsilon: Optional[float]
    status: str


class SweepResponse(BaseModel):
    rows: List[SweepRowModel]


class CompareRequest(AccountRequest):
    d_x: int = Field(ge=1)
    d_y: int = Field(ge=1)


class CompareResponse(BaseModel):
    ours: PrivacyReportModel
    baseline: PrivacyReportModel
    tighter: bool


class SynthesizeRequest(BaseModel):
    input_path: str
    format: Literal["idx", "cifar10", "csv"]
    labels_path: Optional[str] = None  # idx only
    label_column: Optional[Union[int, str]] = None  # csv only, default "label"
    l: int = Field(ge=1)
    t: int = Field(ge=1)
    c: float = Field(default=1.0, gt=0)
    sigma_x: Optional[float] = Field(default=None, ge=0)
    sigma_y: Optional[float] = Field(default=None, ge=0)
    epsilon: Optional[float] = Field(default=None, gt=0)
    ratio: float = Field(default=1.0, gt=0)
    delta: float = Field(default=1e-5, gt=0, lt=1)
    seed: int = Field(ge=0, lt=2**64)
    alpha_max: int = Field(default=256, ge=3)
    p_mode: Literal["global", "per-class"] = "global"
    out_path: str
    out_format: Literal["container", "csv"] = "container"
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _noise_given_exactly_one_way(self):
        pair = self.sigma_x is not None and self.sigma_y is not None
        partial = (self.sigma_x is None) != (self.sigma_y is None)
        if partial:
            raise ValueError("sigma_x and sigma_y must be given together")
        if pair == (self.epsilon is not None):
            raise ValueError("give either (sigma_x, sigma_y) or a target epsilon")
        if self.format == "idx" and not self.labels_path:
            raise ValueError("idx input needs labels_path")
        return self


class SynthesizeResponse(BaseModel):
    out_path: str
    manifest_path: str
    t: int
    d_x: int
    class_count: int
    per_class_counts: List[int]
    sigma_x: float
    sigma_y: float
    report: PrivacyReportModel


class PreviewRequest(BaseModel):
    input_path: str
    out_path: str
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    cell_height: int = Field(ge=1)
    cell_width: int = Field(ge=1)
    color: Literal["gray", "rgb"] = "gray"


class PreviewResponse(BaseModel):
    out_path: str
    manifest_path: str
    width: int
    height: int
    pixel_min: float
    pixel_max: float


class HealthResponse(BaseModel):
    status: str
    version: str
