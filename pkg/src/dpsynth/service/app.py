"""FastAPI service wrapping the synthesis and accounting pipeline.

Run with: uvicorn dpsynth.service.app:app

File-touching endpoints (synthesize, preview) operate on server-local
paths; the pure accounting endpoints are plain JSON computations.
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import CalibrationError, PrecisionFailureError
from . import handlers
from .schemas import (
    AccountRequest,
    CalibrateRequest,
    CalibrateResponse,
    CompareRequest,
    CompareResponse,
    HealthResponse,
    PreviewRequest,
    PreviewResponse,
    PrivacyReportModel,
    SweepRequest,
    SweepResponse,
    SynthesizeRequest,
    SynthesizeResponse,
)

app = FastAPI(
    title="dpsynth service",
    version=__version__,
    description="Differentially private synthetic data: synthesis, accounting, "
    "noise calibration and privacy sweeps.",
)


def _error(status: int, error_type: str, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error_type": error_type, "detail": str(exc)}
    )


@app.exception_handler(PrecisionFailureError)
async def precision_failure(request: Request, exc: PrecisionFailureError):
    return _error(422, "precision_failure", exc)


@app.exception_handler(CalibrationError)
async def calibration_error(request: Request, exc: CalibrationError):
    return _error(400, "calibration", exc)


@app.exception_handler(ValueError)
async def validation_error(request: Request, exc: ValueError):
    # covers the DataError / ConfigurationError families
    return _error(400, "validation", exc)


@app.exception_handler(FileNotFoundError)
async def missing_file(request: Request, exc: FileNotFoundError):
    return _error(404, "io", exc)


@app.exception_handler(OSError)
async def io_error(request: Request, exc: OSError):
    return _error(400, "io", exc)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/account", response_model=PrivacyReportModel)
def account(request: AccountRequest) -> PrivacyReportModel:
    return handlers.handle_account(request)


@app.post("/calibrate", response_model=CalibrateResponse)
def calibrate(request: CalibrateRequest) -> CalibrateResponse:
    return handlers.handle_calibrate(request)


@app.post("/sweep", response_model=SweepResponse)
def run_sweep(request: SweepRequest) -> SweepResponse:
    return handlers.handle_sweep(request)


@app.post("/compare", response_model=CompareResponse)
def compare(request: CompareRequest) -> CompareResponse:
    return handlers.handle_compare(request)


@app.post("/synthesize", response_model=SynthesizeResponse)
def synthesize(request: SynthesizeRequest) -> SynthesizeResponse:
    return handlers.handle_synthesize(request)


@app.post("/preview", response_model=PreviewResponse)
def preview(request: PreviewRequest) -> PreviewResponse:
    return handlers.handle_preview(request)
