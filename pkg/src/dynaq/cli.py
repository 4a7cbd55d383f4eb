"""Command-line interface: experiment runs, both tuning phases, statistics
reports, and the labeling service."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import click

from .config import (DatasetSpec, ExperimentConfig, desk_config, load_config,
                     resolve_dataset)
from .data import partition
from .engine import METHODS
from .harness import report_from_records, run_experiment
from .rng import PARTITION, derive_seed
from .tuning import (jasmine_tune, tune_gbm, write_gbm_report,
                     write_jasmine_report)


def _dataset_spec_from_flag(value: str) -> DatasetSpec:
    if value in ("synthetic", "synthetic-shifted"):
        return DatasetSpec(kind=value)
    p = Path(value)
    if p.suffix in (".csv", ".txt") or p.exists():
        return DatasetSpec(kind="csv", path=str(p))
    raise click.BadParameter(
        f"--dataset takes 'synthetic', 'synthetic-shifted', or a CSV path; "
        f"got {value!r}")


def _build_config(config_path, scale, dataset, methods, seed, out) -> ExperimentConfig:
    if config_path:
        cfg = load_config(config_path)
    else:
        cfg = desk_config(seed=seed if seed is not None else 0)
        if scale not in (None, "desk"):
            raise click.BadParameter(f"unknown scale {scale!r}")
    updates = {}
    if dataset:
        updates["dataset"] = _dataset_spec_from_flag(dataset)
    if methods:
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise click.BadParameter(f"unknown methods {unknown}; "
                                     f"choose from {sorted(METHODS)}")
        updates["methods"] = tuple(methods)
    if seed is not None:
        updates["seed"] = seed
    if out:
        updates["out_dir"] = out
    return dataclasses.replace(cfg, **updates) if updates else cfg


@click.group()
def main():
    """Active-learning intrusion-detection experiments with adaptive query
    fractions."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="YAML experiment config.")
@click.option("--scale", type=click.Choice(["desk"]), default=None,
              help="Built-in preset used when no config file is given.")
@click.option("--dataset", default=None,
              help="Dataset override: synthetic, synthetic-shifted, or a CSV path.")
@click.option("--method", "methods", multiple=True,
              help="Restrict to these methods (repeatable).")
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="Output directory.")
def run(config_path, scale, dataset, methods, seed, out):
    """Run the full simulation matrix and write record + statistics files."""
    cfg = _build_config(config_path, scale, dataset, methods, seed, out)
    outputs = run_experiment(cfg, log=click.echo)
    click.echo(f"records written to {outputs.out_dir}")


def _starting_pool(cfg: ExperimentConfig):
    data, fixed_eval = resolve_dataset(cfg.dataset)
    part = partition(data, cfg.labeled0,
                     0 if fixed_eval is not None else cfg.eval_size,
                     fixed_eval, seed=derive_seed(cfg.seed, PARTITION, 0))
    return data.take(part.labeled, name="tuning-pool")


@main.command("tune-gbm")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--dataset", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--budget", type=float, default=None,
              help="Wall-clock budget in seconds.")
@click.option("--max-combos", type=int, default=None)
@click.option("--out", default="tuning_gbm.csv", help="Report CSV path.")
def tune_gbm_cmd(config_path, dataset, seed, budget, max_combos, out):
    """Random-search the classifier grid on the starting pool."""
    cfg = _build_config(config_path, None, dataset, (), seed, None)
    pool = _starting_pool(cfg)
    outcome = tune_gbm(
        pool.features, pool.labels,
        time_budget=budget if budget is not None else cfg.gbm_time_budget,
        max_combos=max_combos if max_combos is not None else cfg.gbm_max_combos,
        k=min(cfg.k_folds, pool.n_rows), seed=cfg.seed)
    write_gbm_report(outcome, out)
    click.echo(f"evaluated {len(outcome.results)} combos, report at {out}")
    click.echo(f"chosen: {outcome.results[outcome.chosen].combo}")


@main.command("tune-jasmine")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--dataset", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--inner-sims", type=int, default=None)
@click.option("--max-combos", type=int, default=None)
@click.option("--out", default="tuning_dynamics.csv", help="Report CSV path.")
def tune_jasmine_cmd(config_path, dataset, seed, inner_sims, max_combos, out):
    """Pick dynamics parameters via inner simulations on the starting pool."""
    cfg = _build_config(config_path, None, dataset, (), seed, None)
    if isinstance(cfg.gbm, str):
        raise click.UsageError(
            "the config must carry concrete classifier parameters "
            "(run tune-gbm first and paste its winner)")
    pool = _starting_pool(cfg)
    outcome = jasmine_tune(
        pool, cfg.gbm, cfg.query_size,
        inner_sims=inner_sims if inner_sims is not None else cfg.jasmine_inner_sims,
        seed=cfg.seed,
        max_combos=max_combos if max_combos is not None else cfg.jasmine_max_combos)
    write_jasmine_report(outcome, out)
    click.echo(f"scored {len(outcome.rows)} combos, report at {out}")
    click.echo(f"chosen: {outcome.rows[outcome.chosen].combo}")


@main.command()
@click.option("--out", required=True, type=click.Path(exists=True),
              help="Run directory holding learning_curves.csv.")
def report(out):
    """Recompute areas.csv and wilcoxon.csv from a run directory."""
    area_rows, wilcox_rows = report_from_records(out)
    click.echo(f"{len(area_rows)} area rows, {len(wilcox_rows)} test rows "
               f"written to {out}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--ui-dir", default=None, type=click.Path(exists=True),
              help="Static directory to serve at / (the labeling console).")
def serve(host, port, ui_dir):
    """Start the labeling-session HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(static_dir=ui_dir), host=host, port=port,
                log_level="info")


if __name__ == "__main__":
    main()
