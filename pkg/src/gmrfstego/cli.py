"""Command-line front end.

Subcommands: model (field estimation), probs (change probabilities),
embed (full pipeline), verify (oracle battery).  Exit codes: 0 success,
1 usage or infeasible payload, 2 finished without the multiplier
stopping rule (results still written), 3 I/O or format trouble.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import image_io
from .image_io import FormatError
from .optimizer import LOG2_3, CapacityError, entropy_ternary, trace_csv
from .pipeline import compute_probabilities, embed_image


def _common(f):
    f = click.option("--out-dir", default=".", show_default=True,
                     type=click.Path(file_okay=False),
                     help="directory for output files")(f)
    f = click.option("--threads", default=1, show_default=True, type=int,
                     help="worker cap (accepted for compatibility; "
                          "computation is vectorized in-process)")(f)
    return f


def _model_opts(f):
    f = click.option("--wiener", default=2, show_default=True, type=int,
                     help="denoiser box side")(f)
    f = click.option("--degree", default=2, show_default=True, type=int,
                     help="local fit polynomial degree")(f)
    f = click.option("--block", default=9, show_default=True, type=int,
                     help="fitting block side")(f)
    return f


def _check_threads(threads: int):
    if threads < 1:
        raise click.UsageError("--threads must be at least 1")


def _check_rate_cli(payload: float):
    if not 0.0 < payload <= LOG2_3:
        raise click.UsageError(
            f"--payload must lie in (0, {LOG2_3:.5f}] bits per pixel")


def _outpath(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


@click.group()
def cli():
    """Pairwise-model adaptive steganography tools."""


@cli.command("model")
@click.argument("input", type=click.Path(dir_okay=False))
@_model_opts
@_common
def cmd_model(input, block, degree, wiener, threads, out_dir):
    """Estimate variance and correlation maps of a cover image."""
    _check_threads(threads)
    from .estimation import estimate_model

    cover = image_io.read_pgm(input)
    residual = image_io.compute_residual(cover, wiener)
    model = estimate_model(residual, block, degree)
    image_io.write_float_map(_outpath(out_dir, "variance.gmap"),
                             model.variance)
    image_io.write_float_map(_outpath(out_dir, "rho_h.gmap"), model.rho_h)
    image_io.write_float_map(_outpath(out_dir, "rho_v.gmap"), model.rho_v)
    summary = {
        "variance_mean": float(model.variance.mean()),
        "variance_min": float(model.variance.min()),
        "variance_max": float(model.variance.max()),
        "rho_h_mean": float(model.rho_h.mean()),
        "rho_v_mean": float(model.rho_v.mean()),
    }
    click.echo(json.dumps(summary))
    return 0


@cli.command("probs")
@click.argument("input", type=click.Path(dir_okay=False))
@click.option("--payload", required=True, type=float,
              help="payload rate in bits per pixel")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--beta-t", default=0.1, show_default=True, type=float,
              help="clique activation threshold")
@_model_opts
@_common
def cmd_probs(input, payload, seed, beta_t, block, degree, wiener, threads,
              out_dir):
    """Optimize change probabilities and write the map plus a trace."""
    _check_threads(threads)
    _check_rate_cli(payload)
    cover = image_io.read_pgm(input)
    optimum, _ = compute_probabilities(
        cover, payload, seed, wiener_window=wiener, block=block,
        degree=degree, beta_t=beta_t)
    image_io.write_float_map(_outpath(out_dir, "beta.gmap"), optimum.beta)
    with open(_outpath(out_dir, "trace.csv"), "w") as fh:
        fh.write(trace_csv(optimum))
    summary = {
        "payload_bits": payload * cover.size,
        "achieved_bits": float(np.sum(entropy_ternary(optimum.beta))),
        "lambda_a": optimum.lambdas_a[-1],
        "lambda_b": optimum.lambdas_b[-1],
        "iterations": optimum.iterations,
        "converged": optimum.converged,
    }
    click.echo(json.dumps(summary))
    return 0 if optimum.converged else 2


@cli.command("embed")
@click.argument("input", type=click.Path(dir_okay=False))
@click.option("--payload", required=True, type=float,
              help="payload rate in bits per pixel")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--beta-t", default=0.1, show_default=True, type=float,
              help="clique activation threshold")
@click.option("--smooth/--no-smooth", default=True, show_default=True,
              help="average costs before the final probability fit")
@click.option("--kernel", default=7, show_default=True, type=int,
              help="cost smoothing window side")
@_model_opts
@_common
def cmd_embed(input, payload, seed, beta_t, smooth, kernel, block, degree,
              wiener, threads, out_dir):
    """Run the full pipeline and write the stego image and maps."""
    _check_threads(threads)
    _check_rate_cli(payload)
    cover = image_io.read_pgm(input)
    result = embed_image(
        cover, payload, seed, smooth=smooth, kernel=kernel,
        wiener_window=wiener, block=block, degree=degree, beta_t=beta_t)
    image_io.write_pgm(_outpath(out_dir, "stego.pgm"), result.stego)
    image_io.write_float_map(_outpath(out_dir, "beta.gmap"),
                             result.beta_final)
    image_io.write_float_map(_outpath(out_dir, "changes.gmap"),
                             result.changes.astype(np.float64))
    cost = result.cost_smoothed if result.cost_smoothed is not None \
        else result.cost
    image_io.write_float_map(_outpath(out_dir, "costs.gmap"), cost)
    summary = {
        "payload_bits": result.payload_bits,
        "achieved_bits": result.achieved_bits,
        "iterations": result.optimum.iterations,
        "converged": result.optimum.converged,
        "changed_pixels": int(np.count_nonzero(result.changes)),
        "rate_a": result.rate_a,
        "rate_b": result.rate_b,
    }
    click.echo(json.dumps(summary))
    return 0 if result.optimum.converged else 2


@cli.command("verify")
@click.option("--quick", is_flag=True,
              help="smaller parameter lattice for fast checks")
@click.option("--threads", default=1, show_default=True, type=int,
              help="worker cap (accepted for compatibility)")
def cmd_verify(quick, threads):
    """Cross-check the closed-form kernels against the oracles."""
    _check_threads(threads)
    from .oracle import run_verification

    report = run_verification(quick=quick)
    for line in report.lines():
        click.echo(line)
    return 0 if report.passed else 1


def main(argv=None) -> int:
    """Entry point mapping exceptions onto the documented exit codes."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except CapacityError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except FormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        return 3
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 3
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
