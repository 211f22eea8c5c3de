"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import functools
import json
import sys

import click
import numpy as np

from .cluster import evaluate
from .data import load_dataset, make_blobs_multiview, save_dataset
from .exceptions import ConfigError, DataError, NumericalError
from .pipeline import TrainConfig, emit_report, export_matrix_csv, run


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(2)
        except DataError as e:
            click.echo(f"data error: {e}", err=True)
            sys.exit(3)
        except NumericalError as e:
            click.echo(f"numerical failure: {e}", err=True)
            sys.exit(4)
    return wrapper


@click.group()
def main():
    """Consensus-graph multi-view clustering."""


@main.command("run")
@click.option("--data", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Dataset directory.")
@click.option("--ablation", default="full",
              type=click.Choice(["full", "mg", "g", "m", "cgg", "pgs"]),
              help="Component subset to run.")
@click.option("--seed", default=0, type=int, help="Base seed; run i uses seed+i.")
@click.option("--runs", default=10, type=int, help="Number of seeded runs.")
@click.option("--out", "out_path", default="report.json", type=click.Path(),
              help="Report JSON destination.")
@click.option("--m", default=10, type=int, help="Embedding width.")
@click.option("--lambda1", default=0.01, type=float, help="Trace-penalty weight.")
@click.option("--lambda2", default=0.001, type=float, help="Mutual-information weight.")
@click.option("--k-g", default=10, type=int, help="k-NN graph neighbors.")
@click.option("--k-m", default=3, type=int, help="Positive-pair neighbors.")
@click.option("--h1", default=256, type=int, help="Encoder first hidden width.")
@click.option("--h2", default=64, type=int, help="Encoder second hidden width.")
@click.option("--epochs-gfn", default=200, type=int)
@click.option("--epochs-mgae", default=400, type=int)
@click.option("--q-refresh", default=5, type=int, help="Indicator refresh cadence.")
@click.option("--lr", default=1e-3, type=float)
@click.option("--metric", default="euclidean", type=click.Choice(["euclidean", "cosine"]))
@click.option("--kmeans-restarts", default=20, type=int)
@click.option("--joint-mode", is_flag=True, help="Interleave fusion and encoder epochs.")
@click.option("--clusters", default=None, type=int,
              help="Cluster count when the dataset has no labels.")
@click.option("--export-consensus", default=None, type=click.Path(),
              help="Write the first run's consensus adjacency as dense CSV.")
@click.option("--export-embedding", default=None, type=click.Path(),
              help="Write the first run's common embedding as CSV.")
@_exit_codes
def run_cmd(data_dir, ablation, seed, runs, out_path, m, lambda1, lambda2, k_g, k_m,
            h1, h2, epochs_gfn, epochs_mgae, q_refresh, lr, metric, kmeans_restarts,
            joint_mode, clusters, export_consensus, export_embedding):
    """Train the selected pipeline on a dataset and report the metric suite."""
    cfg = TrainConfig(m=m, lambda1=lambda1, lambda2=lambda2, k_g=k_g, k_m=k_m,
                      h1=h1, h2=h2, epochs_gfn=epochs_gfn, epochs_mgae=epochs_mgae,
                      q_refresh=q_refresh, lr=lr, seed=seed, runs=runs,
                      ablation=ablation, joint_mode=joint_mode, metric=metric,
                      kmeans_restarts=kmeans_restarts, cluster_count=clusters)
    ds = load_dataset(data_dir)
    report = run(cfg, ds)
    emit_report(report, out_path)
    if export_consensus:
        if report.consensus is None:
            raise ConfigError(f"ablation {ablation!r} produces no consensus graph")
        export_matrix_csv(report.consensus, export_consensus)
    if export_embedding:
        if report.embedding is None:
            raise ConfigError(f"ablation {ablation!r} produces no embedding")
        export_matrix_csv(report.embedding, export_embedding)
    if report.metrics.runs:
        for name, value in report.metrics.mean.items():
            click.echo(f"{name}: {value:.4f} +/- {report.metrics.std[name]:.4f}")
    else:
        click.echo("no labels in dataset; metrics skipped")
    click.echo(f"report written to {out_path}")


@main.command("make-synth")
@click.option("--blobs", required=True, type=int, help="Number of clusters.")
@click.option("--n", required=True, type=int, help="Number of samples.")
@click.option("--views", default=2, type=int, help="Number of views.")
@click.option("--dim", default=5, type=int, help="Features per view.")
@click.option("--separation", default=10.0, type=float,
              help="Minimum center distance in within-cluster sigmas.")
@click.option("--noise", default="0", help="Extra feature noise; one value or "
              "comma-separated per view.")
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_exit_codes
def make_synth_cmd(blobs, n, views, dim, separation, noise, seed, out_dir):
    """Generate a labeled multi-view Gaussian-blob dataset directory."""
    try:
        noise_values = [float(tok) for tok in str(noise).split(",")]
    except ValueError as e:
        raise ConfigError(f"bad --noise value {noise!r}: {e}") from e
    if len(noise_values) == 1:
        noise_values = noise_values * views
    if len(noise_values) != views:
        raise ConfigError(f"--noise lists {len(noise_values)} values for {views} views")
    ds = make_blobs_multiview(n, blobs, views, dim=dim, separation=separation,
                              noise=noise_values, rng=seed)
    save_dataset(ds, out_dir)
    click.echo(f"wrote {n} samples, {views} views, {blobs} clusters to {out_dir}")


@main.command("eval")
@click.option("--pred", "pred_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--truth", "truth_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@_exit_codes
def eval_cmd(pred_path, truth_path):
    """Score a predicted labeling against ground truth."""
    def read_labels(path):
        try:
            return np.loadtxt(path, dtype=np.int64, ndmin=1)
        except Exception as e:
            raise DataError(f"cannot parse labels file {path}: {e}") from e

    pred = read_labels(pred_path)
    truth = read_labels(truth_path)
    if pred.size != truth.size:
        raise DataError(f"label files disagree on length: {pred.size} vs {truth.size}")
    scores = evaluate(pred, truth)
    click.echo(json.dumps(scores, indent=2))


if __name__ == "__main__":
    main()
