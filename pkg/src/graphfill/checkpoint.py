"""Deterministic model checkpoints: a zip archive of config JSON and named
float32 little-endian parameter tensors."""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .diffusion import DenoiserConfig, GraphDiffusionImputer, NoiseSchedule
from .encoder import GraphEncoderConfig
from .fusion import FusionConfig
from .schema import FeatureSchema, graph_from_dict

CHECKPOINT_VERSION = 1

# fixed zip metadata so identical models produce identical bytes
_EPOCH = (1980, 1, 1, 0, 0, 0)


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(model: GraphDiffusionImputer, path: str | Path) -> None:
    config = {
        "version": CHECKPOINT_VERSION,
        "schema": model.schema.to_dict(),
        "graph": model.graph.to_dict(),
        "encoder": asdict(model.encoder_config),
        "fusion": asdict(model.fusion_config),
        "denoiser": asdict(model.denoiser_config),
        "schedule": {"betas": list(model.schedule.betas)},
        "trained": model.trained,
    }
    state = model.state_dict()
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        _write(zf, "config.json", json.dumps(config, sort_keys=True, indent=1).encode("utf-8"))
        for name in sorted(state):
            buf = io.BytesIO()
            np.save(buf, state[name].detach().cpu().numpy().astype("<f4"))
            _write(zf, f"params/{name}.npy", buf.getvalue())


def _write(zf: zipfile.ZipFile, name: str, payload: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.external_attr = 0o644 << 16
    zf.writestr(info, payload)


def load_checkpoint(path: str | Path) -> GraphDiffusionImputer:
    try:
        with zipfile.ZipFile(path, "r") as zf:
            config = json.loads(zf.read("config.json"))
            if config.get("version") != CHECKPOINT_VERSION:
                raise CheckpointError(f"unsupported checkpoint version {config.get('version')!r}")
            schema = FeatureSchema.from_dict(config["schema"])
            graph = graph_from_dict(config["graph"], schema)
            model = GraphDiffusionImputer(
                schema=schema,
                graph=graph,
                encoder_config=GraphEncoderConfig(**config["encoder"]),
                fusion_config=FusionConfig(**config["fusion"]),
                denoiser_config=DenoiserConfig(**config["denoiser"]),
                schedule=NoiseSchedule(betas=tuple(config["schedule"]["betas"])),
            )
            state = {}
            for item in zf.namelist():
                if item.startswith("params/") and item.endswith(".npy"):
                    arr = np.load(io.BytesIO(zf.read(item)))
                    state[item[len("params/") : -len(".npy")]] = torch.from_numpy(arr)
            model.load_state_dict(state)
            model.trained = bool(config["trained"])
            model.eval()
            return model
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot load checkpoint {path}: {exc}") from exc
