"""Experiment orchestration CLI: train / evaluate / impute / serve / synth-data."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import click
import torch

from . import baselines
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    Dataset,
    MaskingProtocol,
    SplitSpec,
    SyntheticConfig,
    generate_synthetic,
    load_csv,
    make_masked_testset,
    split,
)
from .diffusion import DenoiserConfig, GraphDiffusionImputer, NoiseSchedule, TrainingConfig
from .encoder import GraphEncoderConfig
from .fusion import FusionConfig
from .metrics import deterministic_sampler, evaluate
from .schema import designs_from_csv, designs_to_csv, load_graph, load_schema


@dataclass
class ExperimentConfig:
    """Parsed experiment config file; see README for the JSON layout."""

    doc: dict
    base: Path

    def path(self, key: str) -> Path:
        if key not in self.doc:
            raise click.UsageError(f"config is missing required path {key!r}")
        p = Path(self.doc[key])
        if not p.is_absolute():
            p = self.base / p
        if not p.exists():
            raise click.UsageError(f"{key}: file not found: {p}")
        return p

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        p = Path(path)
        if not p.exists():
            raise click.UsageError(f"config file not found: {p}")
        return cls(doc=json.loads(p.read_text(encoding="utf-8")), base=p.parent)

    def encoder_config(self, variant_override: str | None = None) -> GraphEncoderConfig:
        cfg = dict(self.doc.get("encoder", {}))
        if variant_override:
            cfg["variant"] = variant_override
        return GraphEncoderConfig(**cfg)

    def fusion_config(self) -> FusionConfig:
        return FusionConfig(**self.doc.get("fusion", {}))

    def denoiser_config(self) -> DenoiserConfig:
        return DenoiserConfig(**self.doc.get("denoiser", {}))

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule.quadratic(**self.doc.get("schedule", {}))

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(**self.doc.get("training", {}))

    def masking(self, target_feature: str | None = None) -> MaskingProtocol:
        cfg = dict(self.doc.get("masking", {}))
        if target_feature:
            cfg["mode"] = "fixed_feature"
            cfg["target_feature"] = target_feature
        return MaskingProtocol(**cfg)

    def load_world(self):
        """Returns (schema, graph, dataset) from files or the synthetic spec."""
        if "synthetic" in self.doc:
            synth = SyntheticConfig.from_dict(self.doc["synthetic"])
            return generate_synthetic(synth, seed=int(self.doc.get("seed", 0)))
        schema = load_schema(self.path("schema_path"))
        graph = load_graph(self.path("graph_path"), schema)
        dataset = load_csv(self.path("data_path"), schema)
        return schema, graph, dataset

    def split_data(self, dataset: Dataset):
        spec = SplitSpec(**self.doc.get("split", {"train_fraction": 0.9, "seed": 0}))
        return split(dataset, spec)


@click.group()
def main():
    """Graph-guided diffusion imputation for parametric assembly designs."""


@main.command("synth-data")
@click.option("--config", "config_path", required=True, type=click.Path(), help="synthetic config JSON")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="output CSV")
@click.option("--schema-out", type=click.Path(), help="write the generated schema JSON here")
@click.option("--graph-out", type=click.Path(), help="write the generated graph JSON here")
def synth_data(config_path, seed, out, schema_out, graph_out):
    """Generate a synthetic parametric-assembly dataset."""
    if not Path(config_path).exists():
        raise click.UsageError(f"config file not found: {config_path}")
    config = SyntheticConfig.load(config_path)
    schema, graph, dataset = generate_synthetic(config, seed=seed)
    Path(out).write_text(designs_to_csv(dataset.rows), encoding="utf-8")
    if schema_out:
        Path(schema_out).write_text(json.dumps(schema.to_dict(), indent=2), encoding="utf-8")
    if graph_out:
        Path(graph_out).write_text(json.dumps(graph.to_dict(), indent=2), encoding="utf-8")
    click.echo(f"wrote {len(dataset)} rows to {out}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "ckpt_path", required=True, type=click.Path(), help="checkpoint output path")
@click.option("--loss-out", type=click.Path(), help="loss trace CSV output path")
@click.option("--ablate-graph", type=click.Choice(["gcn", "gatv2", "none"]), default=None)
def train(config_path, ckpt_path, loss_out, ablate_graph):
    """Train the diffusion imputer end to end and write a checkpoint."""
    cfg = ExperimentConfig.load(config_path)
    schema, graph, dataset = cfg.load_world()
    train_set, _ = cfg.split_data(dataset)
    torch.manual_seed(int(cfg.doc.get("seed", 0)))  # parameter initialization
    model = GraphDiffusionImputer(
        schema=schema,
        graph=graph,
        encoder_config=cfg.encoder_config(ablate_graph),
        fusion_config=cfg.fusion_config(),
        denoiser_config=cfg.denoiser_config(),
        schedule=cfg.schedule(),
    )
    trace = model.fit(train_set, cfg.training_config(), seed=int(cfg.doc.get("seed", 0)))
    save_checkpoint(model, ckpt_path)
    if loss_out:
        with open(loss_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "mean_loss"])
            for i, loss in enumerate(trace):
                writer.writerow([i, loss])
    click.echo(f"trained {len(trace)} epochs; final loss {trace[-1]:.4f}; checkpoint at {ckpt_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--checkpoint", "ckpt_path", type=click.Path())
@click.option("--method", type=click.Choice(["diffusion", "hotdeck", "ppca", "forest"]), default="diffusion")
@click.option("--mask-feature", default=None, help="fixed-feature study: hide only this feature")
@click.option("--k", default=50, show_default=True)
@click.option("--out", "report_path", required=True, type=click.Path())
def evaluate_cmd(config_path, ckpt_path, method, mask_feature, k, report_path):
    """Evaluate a trained model or a deterministic baseline on the test split."""
    cfg = ExperimentConfig.load(config_path)
    schema, graph, dataset = cfg.load_world()
    train_set, test_set = cfg.split_data(dataset)
    protocol = cfg.masking(mask_feature)
    pairs = make_masked_testset(test_set, protocol)
    seed = int(cfg.doc.get("seed", 0))
    if method == "diffusion":
        if not ckpt_path:
            raise click.UsageError("--method diffusion requires --checkpoint")
        model = load_checkpoint(ckpt_path)
        sampler = model.sample
    elif method == "hotdeck":
        sampler = deterministic_sampler(lambda p: baselines.hotdeck_impute(train_set, p))
    elif method == "ppca":
        ppca = baselines.ppca_fit(train_set)
        sampler = deterministic_sampler(lambda p: baselines.ppca_impute(ppca, p))
    else:
        sampler = deterministic_sampler(lambda p: baselines.forest_impute(train_set, [p], seed=seed)[0])
    report = evaluate(
        sampler, pairs, schema, train_set, k=k, seed=seed, method=method,
        config_echo={"config": str(config_path), "mask_feature": mask_feature},
    )
    Path(report_path).write_text(report.to_json(), encoding="utf-8")
    click.echo(f"wrote report to {report_path}")


@main.command()
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path(), help="partial-design CSV (empty cells = missing)")
@click.option("--k", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="point-estimate completions CSV")
def impute(ckpt_path, input_path, k, seed, out):
    """Impute point estimates for each partial row of a CSV."""
    if not Path(ckpt_path).exists():
        raise click.UsageError(f"checkpoint not found: {ckpt_path}")
    if not Path(input_path).exists():
        raise click.UsageError(f"input file not found: {input_path}")
    model = load_checkpoint(ckpt_path)
    partials = designs_from_csv(Path(input_path).read_text(encoding="utf-8"), model.schema, complete=False)
    completions = [model.impute_point(p, k, seed + i) for i, p in enumerate(partials)]
    Path(out).write_text(designs_to_csv(completions), encoding="utf-8")
    click.echo(f"imputed {len(completions)} rows to {out}")


@main.command()
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path())
@click.option("--bind", default="127.0.0.1:8321", show_default=True, help="host:port (env GRAPHFILL_BIND overrides)")
def serve(ckpt_path, bind):
    """Serve the completion API over HTTP."""
    import uvicorn

    from .service import create_app

    if not Path(ckpt_path).exists():
        raise click.UsageError(f"checkpoint not found: {ckpt_path}")
    digest = hashlib.sha256(Path(ckpt_path).read_bytes()).hexdigest()[:12]
    model = load_checkpoint(ckpt_path)
    app = create_app(model, model_version=digest)
    bind = os.environ.get("GRAPHFILL_BIND", bind)
    host, _, port = bind.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
