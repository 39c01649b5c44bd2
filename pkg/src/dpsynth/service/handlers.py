"""Command handlers shared by the HTTP routes and the CLI.

Each handler maps a request model to a response model, raising the domain
exceptions from dpsynth.errors; transport concerns (HTTP statuses, exit
codes) live in the callers. Handlers that produce an output file also write
a JSON run manifest beside it (<out>.manifest.json) recording the resolved
parameters and, where applicable, the embedded privacy report.
"""

from __future__ import annotations

import json
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..accountant import (
    AccountingParams,
    PrivacyReport,
    baseline_lee_epsilon,
    calibrate_noise,
    compose_and_convert,
    sweep,
)
from ..dataset_io import (
    Dataset,
    PreviewGrid,
    load_cifar10,
    load_csv,
    load_idx,
    read_synthetic,
    render_preview_grid,
    write_synthetic,
)
from ..errors import ConfigurationError, InsufficientClassSizeError
from ..preprocess import ClipParam, clip_l2, zscore_apply, zscore_fit
from ..synthesizer import SynthesisConfig, partition_by_class, synthesize_dataset
from .schemas import (
    AccountRequest,
    CalibrateRequest,
    CalibrateResponse,
    CompareRequest,
    CompareResponse,
    PreviewRequest,
    PreviewResponse,
    PrivacyReportModel,
    SweepRequest,
    SweepResponse,
    SweepRowModel,
    SynthesizeRequest,
    SynthesizeResponse,
)

MANIFEST_SUFFIX = ".manifest.json"


def _report_model(report: PrivacyReport) -> PrivacyReportModel:
    return PrivacyReportModel(**report.to_dict())


def _params_from_account(req: AccountRequest) -> AccountingParams:
    return AccountingParams(
        l=req.l, c=req.c, sigma_x=req.sigma_x, sigma_y=req.sigma_y,
        n=req.n, t=req.t, delta=req.delta, alpha_max=req.alpha_max,
        p_mode=req.p_mode, min_class_count=req.min_class_count,
    )


def manifest_path_for(out_path) -> Path:
    return Path(str(out_path) + MANIFEST_SUFFIX)


def write_manifest(
    command: str,
    parameters: dict,
    input_paths: list,
    output_paths: list,
    started: float,
    report: PrivacyReport | None = None,
) -> Path:
    """Write the machine-readable run manifest beside the first output."""
    manifest = {
        "command": command,
        "tool_version": __version__,
        "parameters": parameters,
        "input_paths": [str(p) for p in input_paths],
        "output_paths": [str(p) for p in output_paths],
        "started_at": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "duration_seconds": round(time.time() - started, 6),
    }
    if report is not None:
        manifest["privacy_report"] = report.to_dict()
    path = manifest_path_for(output_paths[0])
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def handle_account(req: AccountRequest) -> PrivacyReportModel:
    return _report_model(compose_and_convert(_params_from_account(req)))


def handle_calibrate(req: CalibrateRequest) -> CalibrateResponse:
    result = calibrate_noise(
        target_epsilon=req.target_epsilon,
        delta=req.delta,
        l=req.l,
        c=req.c,
        n=req.n,
        t=req.t,
        ratio=req.ratio,
        alpha_max=req.alpha_max,
        p_mode=req.p_mode,
        min_class_count=req.min_class_count,
    )
    return CalibrateResponse(
        sigma_x=result.sigma_x,
        sigma_y=result.sigma_y,
        bracket_hit=result.bracket_hit,
        report=_report_model(result.report),
    )


def handle_sweep(req: SweepRequest) -> SweepResponse:
    rows = sweep(
        req.sigmas,
        req.ls,
        c=req.c,
        n=req.n,
        t=req.t,
        delta=req.delta,
        ratio=req.ratio,
        alpha_max=req.alpha_max,
        p_mode=req.p_mode,
        min_class_count=req.min_class_count,
    )
    out = []
    for r in rows:
        finite = r.epsilon is not None and np.isfinite(r.epsilon)
        status = r.status
        if status == "ok" and not finite:
            status = "non-private"
        out.append(
            SweepRowModel(
                l=r.l, sigma_x=r.sigma_x, sigma_y=r.sigma_y,
                alpha_star=r.alpha_star,
                epsilon=r.epsilon if finite else None,
                status=status,
            )
        )
    return SweepResponse(rows=out)


def handle_compare(req: CompareRequest) -> CompareResponse:
    params = _params_from_account(req)
    ours = compose_and_convert(params)
    baseline = baseline_lee_epsilon(params, req.d_x, req.d_y)
    return CompareResponse(
        ours=_report_model(ours),
        baseline=_report_model(baseline),
        tighter=ours.epsilon < baseline.epsilon,
    )


def load_dataset(format: str, input_path: str, labels_path=None, label_column=None) -> Dataset:
    if format == "idx":
        return load_idx(input_path, labels_path)
    if format == "cifar10":
        return load_cifar10(input_path)
    if format == "csv":
        return load_csv(input_path, "label" if label_column is None else label_column)
    raise ConfigurationError(f"unknown input format {format!r}")


def preprocess_dataset(ds: Dataset, c: float) -> Dataset:
    """z-score, then clip to the l2 ball of radius c."""
    z = zscore_apply(ds.features, zscore_fit(ds.features))
    clipped = clip_l2(z, ClipParam(c))
    return Dataset(
        features=clipped,
        labels=ds.labels,
        class_count=ds.class_count,
        source_name=ds.source_name,
        label_values=ds.label_values,
    )


def handle_synthesize(req: SynthesizeRequest) -> SynthesizeResponse:
    started = time.time()
    raw = load_dataset(req.format, req.input_path, req.labels_path, req.label_column)
    prepared = preprocess_dataset(raw, req.c)
    index = partition_by_class(prepared)
    if req.l > index.min_count:
        raise InsufficientClassSizeError(
            f"insufficient class size: order of mixture {req.l} exceeds "
            f"smallest class size {index.min_count}"
        )

    if req.epsilon is not None:
        calibration = calibrate_noise(
            target_epsilon=req.epsilon,
            delta=req.delta,
            l=req.l,
            c=req.c,
            n=prepared.n,
            t=req.t,
            ratio=req.ratio,
            alpha_max=req.alpha_max,
            p_mode=req.p_mode,
            min_class_count=index.min_count,
        )
        sigma_x, sigma_y = calibration.sigma_x, calibration.sigma_y
        report = calibration.report
    else:
        sigma_x, sigma_y = req.sigma_x, req.sigma_y
        report = compose_and_convert(
            AccountingParams(
                l=req.l, c=req.c, sigma_x=sigma_x, sigma_y=sigma_y,
                n=prepared.n, t=req.t, delta=req.delta, alpha_max=req.alpha_max,
                p_mode=req.p_mode, min_class_count=index.min_count,
            )
        )

    config = SynthesisConfig(
        l=req.l, t=req.t, sigma_x=sigma_x, sigma_y=sigma_y, seed=req.seed, c=req.c
    )
    synthetic = synthesize_dataset(prepared, config, threads=req.threads)
    synthetic.metadata["accounting"] = report.to_dict()
    write_synthetic(synthetic, req.out_path, format=req.out_format)

    parameters = req.model_dump()
    parameters["resolved_sigma_x"] = sigma_x
    parameters["resolved_sigma_y"] = sigma_y
    manifest = write_manifest(
        "synthesize",
        parameters,
        input_paths=[req.input_path] + ([req.labels_path] if req.labels_path else []),
        output_paths=[req.out_path],
        started=started,
        report=report,
    )
    counts = np.bincount(synthetic.labels, minlength=synthetic.class_count + 1)[1:]
    return SynthesizeResponse(
        out_path=str(req.out_path),
        manifest_path=str(manifest),
        t=synthetic.t,
        d_x=synthetic.d_x,
        class_count=synthetic.class_count,
        per_class_counts=[int(v) for v in counts],
        sigma_x=sigma_x,
        sigma_y=sigma_y,
        report=_report_model(report),
    )


def handle_preview(req: PreviewRequest) -> PreviewResponse:
    started = time.time()
    ds = read_synthetic(req.input_path)
    grid = PreviewGrid(
        rows=req.rows, cols=req.cols,
        cell_height=req.cell_height, cell_width=req.cell_width, color=req.color,
    )
    render_preview_grid(ds, grid, req.out_path)
    shown = ds.features[: req.rows * req.cols]
    manifest = write_manifest(
        "preview",
        req.model_dump(),
        input_paths=[req.input_path],
        output_paths=[req.out_path],
        started=started,
    )
    return PreviewResponse(
        out_path=str(req.out_path),
        manifest_path=str(manifest),
        width=req.cols * req.cell_width,
        height=req.rows * req.cell_height,
        pixel_min=float(np.min(shown)),
        pixel_max=float(np.max(shown)),
    )
