"""Command-line client for the synthesis and accounting pipeline.

Thin by design: every command builds the same request model the HTTP
service accepts and calls the shared handler in-process, then prints a
human summary and writes outputs/manifests. Long-form flags only.

Exit codes: 0 success, 1 validation/usage error, 2 precision failure,
3 I/O error.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import pydantic

from . import __version__
from .errors import PrecisionFailureError
from .service import handlers
from .service.schemas import (
    AccountRequest,
    CalibrateRequest,
    CompareRequest,
    PreviewRequest,
    SweepRequest,
    SynthesizeRequest,
)

SWEEP_CSV_HEADER = ["l", "sigma_x", "sigma_y", "alpha_star", "epsilon", "status"]


@click.group(name="dpsynth")
@click.version_option(__version__)
def cli():
    """Differentially private synthetic data toolkit."""


def _fmt_eps(epsilon) -> str:
    if epsilon is None or not math.isfinite(epsilon):
        return "inf (non-private)"
    return f"{epsilon:.6g}"


def _echo_report(report, delta: float) -> None:
    click.echo(f"epsilon = {_fmt_eps(report.epsilon)} at delta = {delta:g}")
    if report.alpha_star is not None:
        click.echo(f"alpha* = {report.alpha_star}" + (" (boundary; raise --alpha-max)" if report.boundary_minimum else ""))
    click.echo(f"arithmetic: {report.precision_note}")


def _write_json_out(out, payload: dict, command: str, parameters: dict, inputs: list, started) -> None:
    Path(out).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    handlers.write_manifest(command, parameters, inputs, [out], started)


_grid_options = [
    click.option("--c", "c", type=float, default=1.0, show_default=True, help="l2 clipping bound."),
    click.option("--n", "n", type=int, required=True, help="Private dataset size."),
    click.option("--t", "t", type=int, required=True, help="Released sample count."),
    click.option("--delta", type=float, default=1e-5, show_default=True, help="DP failure probability."),
    click.option("--alpha-max", type=int, default=256, show_default=True, help="Largest searched order."),
    click.option("--p-mode", type=click.Choice(["global", "per-class"]), default="global", show_default=True, help="Subsampling-ratio reading."),
    click.option("--min-class-count", type=int, default=None, help="Smallest class size (per-class mode)."),
]

_account_options = [
    click.option("--l", "l", type=int, required=True, help="Order of mixture."),
] + _grid_options


def _add(options):
    def wrap(f):
        for option in reversed(options):
            f = option(f)
        return f

    return wrap


@cli.command()
@_add(_account_options)
@click.option("--sigma-x", type=float, required=True, help="Feature noise std.")
@click.option("--sigma-y", type=float, required=True, help="Label noise std.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report as JSON.")
def account(l, c, n, t, delta, alpha_max, p_mode, min_class_count, sigma_x, sigma_y, out):
    """Compute the (epsilon, delta) guarantee of a release configuration."""
    import time

    started = time.time()
    request = AccountRequest(
        l=l, c=c, sigma_x=sigma_x, sigma_y=sigma_y, n=n, t=t, delta=delta,
        alpha_max=alpha_max, p_mode=p_mode, min_class_count=min_class_count,
    )
    report = handlers.handle_account(request)
    _echo_report(report, delta)
    if out:
        _write_json_out(out, report.model_dump(), "account", request.model_dump(), [], started)
        click.echo(f"report written to {out}")


@cli.command()
@_add(_account_options)
@click.option("--target-epsilon", type=float, required=True, help="Desired epsilon.")
@click.option("--ratio", type=float, default=1.0, show_default=True, help="sigma_y / sigma_x.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the result as JSON.")
def calibrate(l, c, n, t, delta, alpha_max, p_mode, min_class_count, target_epsilon, ratio, out):
    """Find the noise pair that achieves a target epsilon."""
    import time

    started = time.time()
    request = CalibrateRequest(
        target_epsilon=target_epsilon, delta=delta, l=l, c=c, n=n, t=t,
        ratio=ratio, alpha_max=alpha_max, p_mode=p_mode, min_class_count=min_class_count,
    )
    result = handlers.handle_calibrate(request)
    click.echo(f"sigma_x = {result.sigma_x:.6g}")
    click.echo(f"sigma_y = {result.sigma_y:.6g}")
    if result.bracket_hit:
        click.echo("note: bracket endpoint hit; target looser than the least-noise end")
    _echo_report(result.report, delta)
    if out:
        _write_json_out(out, result.model_dump(), "calibrate", request.model_dump(), [], started)
        click.echo(f"result written to {out}")


@cli.command()
@_add(_grid_options)
@click.option("--sigmas", type=str, default=None, help="Comma-separated sigma_x values.")
@click.option("--sigma-min", type=float, default=None, help="Log-spaced grid start.")
@click.option("--sigma-max", type=float, default=None, help="Log-spaced grid end.")
@click.option("--sigma-count", type=int, default=None, help="Log-spaced grid size.")
@click.option("--ls", type=str, required=True, help="Comma-separated mixture orders.")
@click.option("--ratio", type=float, default=1.0, show_default=True, help="sigma_y / sigma_x.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write rows as CSV.")
def sweep(c, n, t, delta, alpha_max, p_mode, min_class_count, sigmas, sigma_min, sigma_max, sigma_count, ls, ratio, out):
    """Tabulate epsilon over an (l, sigma) grid."""
    import time

    import numpy as np

    started = time.time()
    if sigmas is not None:
        sigma_values = [float(v) for v in sigmas.split(",") if v]
        if sigma_min is not None or sigma_max is not None or sigma_count is not None:
            raise click.UsageError("give either --sigmas or the --sigma-min/max/count trio")
    else:
        if None in (sigma_min, sigma_max, sigma_count):
            raise click.UsageError("give --sigmas or all of --sigma-min/--sigma-max/--sigma-count")
        sigma_values = [float(v) for v in np.geomspace(sigma_min, sigma_max, sigma_count)]
    l_values = [int(v) for v in ls.split(",") if v]
    request = SweepRequest(
        ls=l_values, sigmas=sigma_values, c=c, n=n, t=t, delta=delta, ratio=ratio,
        alpha_max=alpha_max, p_mode=p_mode, min_class_count=min_class_count,
    )
    response = handlers.handle_sweep(request)
    failures = sum(1 for r in response.rows if r.status != "ok")
    click.echo(f"{len(response.rows)} cells evaluated, {failures} precision failures")
    if out:
        with open(out, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(SWEEP_CSV_HEADER)
            for r in response.rows:
                writer.writerow([
                    r.l,
                    repr(float(r.sigma_x)),
                    repr(float(r.sigma_y)),
                    "" if r.alpha_star is None else r.alpha_star,
                    "" if r.epsilon is None else repr(float(r.epsilon)),
                    r.status,
                ])
        handlers.write_manifest("sweep", request.model_dump(), [], [out], started)
        click.echo(f"rows written to {out}")
    else:
        for r in response.rows:
            click.echo(
                f"l={r.l} sigma_x={r.sigma_x:.6g} sigma_y={r.sigma_y:.6g} "
                f"alpha*={r.alpha_star} epsilon={_fmt_eps(r.epsilon)} [{r.status}]"
            )


@cli.command()
@_add(_account_options)
@click.option("--sigma-x", type=float, required=True, help="Feature noise std.")
@click.option("--sigma-y", type=float, required=True, help="Label noise std.")
@click.option("--d-x", type=int, required=True, help="Feature dimension (baseline).")
@click.option("--d-y", type=int, required=True, help="Label dimension (baseline).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write both reports as JSON.")
def compare(l, c, n, t, delta, alpha_max, p_mode, min_class_count, sigma_x, sigma_y, d_x, d_y, out):
    """Compare this accountant against the dimension-dependent baseline."""
    import time

    started = time.time()
    request = CompareRequest(
        l=l, c=c, sigma_x=sigma_x, sigma_y=sigma_y, n=n, t=t, delta=delta,
        alpha_max=alpha_max, p_mode=p_mode, min_class_count=min_class_count,
        d_x=d_x, d_y=d_y,
    )
    response = handlers.handle_compare(request)
    click.echo(f"epsilon (this analysis)          = {_fmt_eps(response.ours.epsilon)}")
    click.echo(f"epsilon (dimension baseline)     = {_fmt_eps(response.baseline.epsilon)}")
    if response.ours.epsilon and response.baseline.epsilon:
        click.echo(f"baseline / ours                  = {response.baseline.epsilon / response.ours.epsilon:.4g}")
    click.echo("tighter" if response.tighter else "NOT tighter")
    if out:
        _write_json_out(out, response.model_dump(), "compare", request.model_dump(), [], started)
        click.echo(f"comparison written to {out}")


@cli.command()
@click.option("--input", "input_path", type=str, required=True, help="Dataset path (file or CIFAR directory).")
@click.option("--format", "format_", type=click.Choice(["idx", "cifar10", "csv"]), required=True, help="Input format.")
@click.option("--labels", "labels_path", type=str, default=None, help="IDX label file.")
@click.option("--label-column", type=str, default=None, help="CSV label column (name or 0-based index).")
@click.option("--l", "l", type=int, required=True, help="Order of mixture.")
@click.option("--t", "t", type=int, required=True, help="Synthetic sample count.")
@click.option("--c", "c", type=float, default=1.0, show_default=True, help="l2 clipping bound.")
@click.option("--sigma-x", type=float, default=None, help="Feature noise std (with --sigma-y).")
@click.option("--sigma-y", type=float, default=None, help="Label noise std (with --sigma-x).")
@click.option("--epsilon", type=float, default=None, help="Target epsilon; calibrates the noise.")
@click.option("--ratio", type=float, default=1.0, show_default=True, help="sigma_y / sigma_x for calibration.")
@click.option("--delta", type=float, default=1e-5, show_default=True, help="DP failure probability.")
@click.option("--seed", type=int, required=True, help="Unsigned 64-bit seed; all randomness derives from it.")
@click.option("--alpha-max", type=int, default=256, show_default=True, help="Largest searched order.")
@click.option("--p-mode", type=click.Choice(["global", "per-class"]), default="global", show_default=True, help="Subsampling-ratio reading.")
@click.option("--out", "out_path", type=str, required=True, help="Output container path.")
@click.option("--out-format", type=click.Choice(["container", "csv"]), default="container", show_default=True, help="Output format.")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker threads (does not affect results).")
def synthesize(input_path, format_, labels_path, label_column, l, t, c, sigma_x, sigma_y,
               epsilon, ratio, delta, seed, alpha_max, p_mode, out_path, out_format, threads):
    """Generate a private synthetic dataset and its privacy report."""
    if label_column is not None and label_column.isdigit():
        label_column = int(label_column)
    request = SynthesizeRequest(
        input_path=input_path, format=format_, labels_path=labels_path,
        label_column=label_column, l=l, t=t, c=c, sigma_x=sigma_x, sigma_y=sigma_y,
        epsilon=epsilon, ratio=ratio, delta=delta, seed=seed, alpha_max=alpha_max,
        p_mode=p_mode, out_path=out_path, out_format=out_format, threads=threads,
    )
    response = handlers.handle_synthesize(request)
    click.echo(f"wrote {response.t} samples ({response.d_x} features, "
               f"{response.class_count} classes) to {response.out_path}")
    click.echo(f"per-class counts: {response.per_class_counts}")
    click.echo(f"sigma_x = {response.sigma_x:.6g}, sigma_y = {response.sigma_y:.6g}")
    _echo_report(response.report, delta)
    click.echo(f"manifest: {response.manifest_path}")


@cli.command()
@click.option("--input", "input_path", type=str, required=True, help="Synthetic container path.")
@click.option("--out", "out_path", type=str, required=True, help="Output PGM/PPM path.")
@click.option("--rows", type=int, required=True, help="Grid rows.")
@click.option("--cols", type=int, required=True, help="Grid columns.")
@click.option("--cell-height", type=int, required=True, help="Cell height in pixels.")
@click.option("--cell-width", type=int, required=True, help="Cell width in pixels.")
@click.option("--color", type=click.Choice(["gray", "rgb"]), default="gray", show_default=True, help="gray=PGM, rgb=PPM (planar cells).")
def preview(input_path, out_path, rows, cols, cell_height, cell_width, color):
    """Render a sample grid from a synthetic container."""
    request = PreviewRequest(
        input_path=input_path, out_path=out_path, rows=rows, cols=cols,
        cell_height=cell_height, cell_width=cell_width, color=color,
    )
    response = handlers.handle_preview(request)
    click.echo(f"wrote {response.width}x{response.height} {color} grid to {response.out_path}")
    click.echo(f"pixel range rescaled from [{response.pixel_min:.6g}, {response.pixel_max:.6g}]")


def run_command(argv) -> int:
    """Run one CLI invocation; returns the process exit code."""
    try:
        cli.main(args=list(argv), standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except pydantic.ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except PrecisionFailureError as exc:
        click.echo(f"precision failure: {exc}", err=True)
        return 2
    except ValueError as exc:  # DataError / ConfigurationError / CalibrationError
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        return 3


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
