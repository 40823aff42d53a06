"""Command-line surface: estimate, bench, fit-density, calibrate, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 upstream failure.

The bench config is YAML with exactly these keys (unknown keys are
rejected, not ignored):

    dataset: path to a JSONL record file            (required)
    out_dir: directory for report.json/report.txt   (required)
    estimators: [names...]                          (required)
    quality_metrics: [rougeL|rouge1|bleu...]        (default [rougeL])
    seed: int                                       (default 1)
    subsample_eval_dataset: int, -1 = all           (default -1)
    bootstrap_samples: int                          (default 1000)
    ignore_exceptions: bool                         (default true)
    density_artifacts: path                         (optional)
    huq_calibration: path to JSON                   (optional)
    nli_url: URL                                    (optional)
    batch_size: int, NLI batching                   (default 64)
    task: str, model: str                           (optional, metadata)

Reports are byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np
import yaml

from . import __version__
from .benchmark import run_benchmark
from .calibration import (fit_bins, load_calibration_table,
                          save_calibration_table)
from .density import (DensityArtifacts, HuqConfig, fit_gaussian, fit_rde,
                      load_density_artifacts, save_density_artifacts)
from .errors import (AuthError, GenUqError, TransportError, UnavailableInputError,
                     UsageError)
from .gateway import ModelEndpoint, NliClient
from .records import load_dataset
from .registry import EstimatorContext, Registry, default_registry

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UPSTREAM = 0, 1, 2, 3

_BENCH_KEYS = {
    "dataset", "out_dir", "estimators", "quality_metrics", "seed",
    "subsample_eval_dataset", "bootstrap_samples", "ignore_exceptions",
    "density_artifacts", "huq_calibration", "nli_url", "batch_size",
    "task", "model",
}


def _build_context(nli_url: str | None, density_path: str | None,
                   huq_path: str | None, nli_batch: int = 64
                   ) -> EstimatorContext:
    ctx = EstimatorContext()
    if nli_url:
        client = NliClient(nli_url, batch_size=nli_batch)
        ctx.nli = client.nli_pairwise
    if density_path:
        ctx.density = load_density_artifacts(density_path)
    if huq_path:
        with open(huq_path, encoding="utf-8") as fh:
            obj = json.load(fh)
        ctx.huq = HuqConfig(
            alpha=float(obj.get("alpha", 0.5)),
            calibration_density=tuple(obj["density_scores"]),
            calibration_info=tuple(obj["info_scores"]))
    return ctx


def _load_embeddings(path: str) -> list[list[float]]:
    """JSONL embeddings: each line either a plain array or an object with
    an `embedding` key (so record files work directly)."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            vec = obj["embedding"] if isinstance(obj, dict) else obj
            if vec is None:
                continue
            out.append([float(x) for x in vec])
    return out


@click.group()
@click.version_option(__version__)
def cli() -> None:
    """Uncertainty quantification for language-model text generation."""


@cli.command()
@click.option("--records", required=True, type=click.Path(exists=True))
@click.option("--estimators", required=True,
              help="comma-separated estimator names")
@click.option("--out", required=True, type=click.Path())
@click.option("--nli-url", default=None, envvar="POLYGRAPH_NLI_URL")
@click.option("--density", default=None, type=click.Path(exists=True))
@click.option("--huq-calibration", default=None, type=click.Path(exists=True))
def estimate(records, estimators, out, nli_url, density, huq_calibration):
    """Score a record file; writes a CSV of record id x estimator."""
    registry = default_registry()
    names = [n.strip() for n in estimators.split(",") if n.strip()]
    entries = [registry.get(n) for n in names]
    dataset = load_dataset(records)
    ctx = _build_context(nli_url, density, huq_calibration)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id"] + names)
        for record in dataset:
            row = [record.id]
            for entry in entries:
                try:
                    row.append(repr(entry.fn(record, ctx)))
                except GenUqError:
                    row.append("unavailable")
            writer.writerow(row)
    click.echo(f"wrote {out} ({len(dataset)} records x {len(names)} estimators)")


def _parse_bench_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise UsageError("bench config must be a mapping")
    unknown = set(cfg) - _BENCH_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for key in ("dataset", "out_dir", "estimators"):
        if key not in cfg:
            raise UsageError(f"bench config is missing required key {key!r}")
    return cfg


@cli.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--seed", default=None, type=int,
              help="override the config seed")
@click.option("--out", "out_override", default=None, type=click.Path(),
              help="override the config out_dir")
def bench(config_path, seed, out_override):
    """Run the selective-generation benchmark described by a config."""
    cfg = _parse_bench_config(config_path)
    base = os.path.dirname(os.path.abspath(config_path))

    def resolve(p):
        return p if p is None or os.path.isabs(p) else os.path.join(base, p)

    dataset = load_dataset(resolve(cfg["dataset"]))
    if seed is None:
        seed = int(cfg.get("seed", 1))
    subsample = int(cfg.get("subsample_eval_dataset", -1))
    records = list(dataset)
    if 0 < subsample < len(records):
        rng = np.random.default_rng(seed)
        keep = sorted(rng.choice(len(records), size=subsample, replace=False))
        records = [records[i] for i in keep]
    from .records import Dataset
    dataset = Dataset(records=tuple(records), metadata=dataset.metadata)

    registry = default_registry()
    ctx = _build_context(cfg.get("nli_url"),
                         resolve(cfg.get("density_artifacts")),
                         resolve(cfg.get("huq_calibration")),
                         nli_batch=int(cfg.get("batch_size", 64)))
    estimators = [(name, (lambda r, e=registry.get(name): e.fn(r, ctx)))
                  for name in cfg["estimators"]]

    report = run_benchmark(
        dataset,
        estimators,
        metrics=list(cfg.get("quality_metrics", ["rougeL"])),
        seed=seed,
        bootstrap_samples=int(cfg.get("bootstrap_samples", 1000)),
        ignore_exceptions=bool(cfg.get("ignore_exceptions", True)),
    )
    for key in ("task", "model"):
        if key in cfg:
            report.metadata[key] = str(cfg[key])

    out_dir = out_override or resolve(cfg["out_dir"])
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "report.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    text_path = os.path.join(out_dir, "report.txt")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(report.render_text())
    click.echo(f"wrote {json_path} and {text_path}")


@cli.command("fit-density")
@click.option("--train-embeddings", required=True, type=click.Path(exists=True))
@click.option("--background", default=None, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--rde-dim", default=None, type=int,
              help="also fit the reduced robust model at this dimension")
@click.option("--support-fraction", default=0.75, type=float)
@click.option("--seed", default=0, type=int)
@click.option("--reg", default=None, type=float)
def fit_density(train_embeddings, background, out, rde_dim,
                support_fraction, seed, reg):
    """Fit density models on embedding files and persist them."""
    train = _load_embeddings(train_embeddings)
    fit = fit_gaussian(train, reg=reg)
    bg = fit_gaussian(_load_embeddings(background), reg=reg) if background else None
    rde = (fit_rde(train, rde_dim, mcd_support_fraction=support_fraction,
                   seed=seed, reg=reg)
           if rde_dim is not None else None)
    save_density_artifacts(DensityArtifacts(fit=fit, background=bg, rde=rde), out)
    click.echo(f"wrote {out} (dim={fit.dim}, n={len(train)})")


@cli.command()
@click.option("--records", required=True, type=click.Path(exists=True))
@click.option("--estimator", required=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--bins", default=10, type=int)
@click.option("--metric", default="rougeL",
              type=click.Choice(["rougeL", "rouge1", "bleu"]))
@click.option("--nli-url", default=None, envvar="POLYGRAPH_NLI_URL")
@click.option("--density", default=None, type=click.Path(exists=True))
def calibrate(records, estimator, out, bins, metric, nli_url, density):
    """Fit an uncertainty-to-confidence table from a labeled record file."""
    from .benchmark import quality_scores
    registry = default_registry()
    entry = registry.get(estimator)
    dataset = load_dataset(records)
    ctx = _build_context(nli_url, density, None)
    qualities = quality_scores(dataset, metric)
    scores, kept_quality = [], []
    skipped = 0
    for record, q in zip(dataset, qualities):
        try:
            scores.append(float(entry.fn(record, ctx)))
            kept_quality.append(q)
        except UnavailableInputError:
            skipped += 1
    if skipped:
        click.echo(f"skipped {skipped} records lacking inputs", err=True)
    table = fit_bins(scores, kept_quality, num_bins=bins,
                     estimator_name=entry.name)
    save_calibration_table(table, out)
    for warning in table.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"wrote {out} ({len(table.bin_confidence)} bins)")


@cli.command()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8765, type=int)
@click.option("--frontend", default=None, type=click.Path(exists=True),
              help="directory of built UI assets to serve at /")
def serve(config_path, host, port, frontend):
    """Run the chat-with-confidence HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    models: dict[str, ModelEndpoint] = {}
    nli_url = os.environ.get("POLYGRAPH_NLI_URL")
    calibrations = {}
    density = None
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        for name, spec in (raw.get("models") or {}).items():
            models[name] = ModelEndpoint(
                base_url=spec["base_url"],
                api_key=spec.get("api_key")
                or os.environ.get("POLYGRAPH_API_KEY", ""),
                model_name=spec.get("model_name", name),
                timeout=float(spec.get("timeout", 30.0)),
                max_parallel=int(spec.get("max_parallel", 4)))
        nli_url = raw.get("nli_url", nli_url)
        if raw.get("density_artifacts"):
            density = load_density_artifacts(raw["density_artifacts"])
        for est, path in (raw.get("calibrations") or {}).items():
            calibrations[est] = load_calibration_table(path)
    config = ServiceConfig(models=models, nli_url=nli_url,
                           calibrations=calibrations, density=density,
                           frontend_dist=frontend)
    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")


@cli.command("mock-server")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8770, type=int)
@click.option("--delay", default=0.0, type=float)
def mock_server(host, port, delay):
    """Run the bundled deterministic mock model + NLI provider."""
    from .mockserver import serve as serve_mock
    serve_mock(host=host, port=port, delay=delay)


def main() -> None:
    try:
        cli(standalone_mode=False)
        sys.exit(EXIT_OK)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    except (click.UsageError, click.ClickException) as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except UsageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except (AuthError, TransportError) as exc:
        click.echo(f"upstream error: {exc}", err=True)
        sys.exit(EXIT_UPSTREAM)
    except (GenUqError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)


if __name__ == "__main__":
    main()
