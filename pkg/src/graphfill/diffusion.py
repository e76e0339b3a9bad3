"""Conditional denoising diffusion over the missing-feature subvector.

Trains an epsilon-prediction objective on hidden positions only and samples
reverse trajectories conditioned on the fused graph/token embedding, drawing
from P(missing | observed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .data import Dataset, masked_count
from .encoder import GraphEncoder, GraphEncoderConfig
from .fusion import ConditioningNetwork, FusionConfig, positional_encoding
from .schema import AssemblyGraph, CompleteDesign, FeatureSchema, PartialDesign, SchemaError
from .tensors import ContinuousRep, encode_rows


@dataclass(frozen=True)
class NoiseSchedule:
    """Step count T and per-step betas; alpha_bar is the cumulative signal."""

    betas: tuple[float, ...]

    def __post_init__(self):
        if len(self.betas) == 0:
            raise ValueError("schedule needs at least one step")
        if any(not 0.0 <= b < 1.0 for b in self.betas):
            raise ValueError("betas must lie in [0, 1)")

    @property
    def t_steps(self) -> int:
        return len(self.betas)

    @property
    def alphas(self) -> np.ndarray:
        return 1.0 - np.asarray(self.betas)

    @property
    def alpha_bars(self) -> np.ndarray:
        """alpha_bar[t] for t = 0..T, with alpha_bar[0] = 1 by convention."""
        return np.concatenate([[1.0], np.cumprod(self.alphas)])

    @classmethod
    def quadratic(cls, t_steps: int = 50, beta_start: float = 1e-4, beta_end: float = 0.5) -> "NoiseSchedule":
        roots = np.linspace(math.sqrt(beta_start), math.sqrt(beta_end), t_steps)
        return cls(betas=tuple((roots**2).tolist()))


def forward_noise(x0: np.ndarray, t: int, noise: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise."""
    if not 1 <= t <= schedule.t_steps:
        raise ValueError(f"t must lie in [1, {schedule.t_steps}], got {t}")
    ab = schedule.alpha_bars[t]
    return math.sqrt(ab) * np.asarray(x0) + math.sqrt(1.0 - ab) * np.asarray(noise)


@dataclass(frozen=True)
class DenoiserConfig:
    blocks: int = 4
    width: int = 64
    time_dim: int = 64
    attn_heads: int = 4

    def __post_init__(self):
        if min(self.blocks, self.width, self.time_dim, self.attn_heads) < 1:
            raise ValueError("all denoiser dimensions must be positive")


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 50
    batch_size: int = 128
    lr: float = 1e-3
    conditioning_fraction: float = 0.10
    cosine_lr_decay: bool = True


class SelfAttention(nn.Module):
    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = width // heads
        self.qkv = nn.Linear(width, 3 * width)
        self.out = nn.Linear(width, width)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        b, d, w = h.shape
        q, k, v = self.qkv(h).chunk(3, dim=-1)
        q = q.view(b, d, self.heads, self.head_dim).transpose(1, 2)
        k = k.view(b, d, self.heads, self.head_dim).transpose(1, 2)
        v = v.view(b, d, self.heads, self.head_dim).transpose(1, 2)
        scores = torch.matmul(q, k.transpose(-1, -2)) / math.sqrt(self.head_dim)
        ctx = torch.matmul(torch.softmax(scores, dim=-1), v)
        return self.out(ctx.transpose(1, 2).reshape(b, d, w))


class DenoiserBlock(nn.Module):
    def __init__(self, width: int, heads: int, time_dim: int, d_token: int):
        super().__init__()
        self.time_proj = nn.Linear(time_dim, width)
        self.cond_proj = nn.Linear(d_token, width)
        self.attn = SelfAttention(width, heads)
        self.norm1 = nn.LayerNorm(width)
        self.norm2 = nn.LayerNorm(width)
        self.ff = nn.Sequential(nn.Linear(width, 2 * width), nn.SiLU(), nn.Linear(2 * width, width))

    def forward(self, h: torch.Tensor, t_emb: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        # re-inject conditioning every block so it survives depth
        h = h + self.time_proj(t_emb).unsqueeze(1) + self.cond_proj(cond)
        h = h + self.attn(self.norm1(h))
        return h + self.ff(self.norm2(h))


class Denoiser(nn.Module):
    """Predicts the noise on each feature slot from the noised reps, observed
    flags, diffusion step, and the fused conditioning tensor."""

    def __init__(self, rep_width: int, d_token: int, config: DenoiserConfig):
        super().__init__()
        self.config = config
        self.in_proj = nn.Linear(rep_width + 1, config.width)
        self.cond_proj = nn.Linear(d_token, config.width)
        self.blocks = nn.ModuleList(
            [DenoiserBlock(config.width, config.attn_heads, config.time_dim, d_token) for _ in range(config.blocks)]
        )
        self.out_norm = nn.LayerNorm(config.width)
        self.out_proj = nn.Linear(config.width, rep_width)
        self.time_mlp = nn.Sequential(nn.Linear(config.time_dim, config.time_dim), nn.SiLU(), nn.Linear(config.time_dim, config.time_dim))

    def time_embedding(self, t: torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
        half = self.config.time_dim // 2
        freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=dtype) / half)
        angles = t.to(dtype).unsqueeze(1) * freqs.unsqueeze(0)
        emb = torch.cat([torch.sin(angles), torch.cos(angles)], dim=1)
        if emb.shape[1] < self.config.time_dim:
            emb = F.pad(emb, (0, self.config.time_dim - emb.shape[1]))
        return self.time_mlp(emb)

    def forward(
        self, x: torch.Tensor, observed: torch.Tensor, cond: torch.Tensor, t: torch.Tensor
    ) -> torch.Tensor:
        t_emb = self.time_embedding(t, x.dtype)
        h = self.in_proj(torch.cat([x, observed.unsqueeze(-1)], dim=-1)) + self.cond_proj(cond)
        for block in self.blocks:
            h = block(h, t_emb, cond)
        return self.out_proj(self.out_norm(h))


@dataclass
class SampleSet:
    """K completions for one partial design, plus the raw per-feature draws."""

    partial: PartialDesign
    draws: list[CompleteDesign]

    @property
    def k(self) -> int:
        return len(self.draws)

    def values_for(self, j: int) -> list:
        return [d.values[j] for d in self.draws]


class GraphDiffusionImputer(nn.Module):
    """End-to-end model: graph encoder + tokenizer/fusion + denoiser."""

    def __init__(
        self,
        schema: FeatureSchema,
        graph: AssemblyGraph,
        encoder_config: GraphEncoderConfig = GraphEncoderConfig(),
        fusion_config: FusionConfig = FusionConfig(),
        denoiser_config: DenoiserConfig = DenoiserConfig(),
        schedule: NoiseSchedule | None = None,
    ):
        super().__init__()
        self.schema = schema
        self.graph = graph
        self.encoder_config = encoder_config
        self.fusion_config = fusion_config
        self.denoiser_config = denoiser_config
        self.schedule = schedule or NoiseSchedule.quadratic()
        self.rep = ContinuousRep(schema)
        self.graph_encoder = GraphEncoder(schema, graph, encoder_config)
        self.conditioning = ConditioningNetwork(schema, encoder_config.hidden_dim, fusion_config)
        self.denoiser = Denoiser(self.rep.rep_width, fusion_config.d_token, denoiser_config)
        self.trained = False

    def condition(self, num_norm: torch.Tensor, cat_idx: torch.Tensor, observed: torch.Tensor) -> torch.Tensor:
        graph_emb = self.graph_encoder(num_norm, cat_idx, observed)
        return self.conditioning(num_norm, cat_idx, observed, graph_emb)

    # --- training -----------------------------------------------------------

    def fit(self, train: Dataset, config: TrainingConfig, seed: int = 0) -> list[float]:
        """Train in place; returns the per-epoch mean loss trace."""
        if len(train) == 0:
            raise ValueError("empty training dataset")
        torch.manual_seed(seed)
        gen = torch.Generator().manual_seed(seed)
        num_norm, cat_idx, _ = encode_rows(train.rows, self.schema)
        x0_all = self.rep.encode(num_norm, cat_idx)
        n, d = num_norm.shape
        n_hidden = masked_count(d, config.conditioning_fraction)
        valid = self.rep.valid  # [D, R]
        opt = torch.optim.Adam(self.parameters(), lr=config.lr)
        scheduler = (
            torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=config.epochs)
            if config.cosine_lr_decay
            else None
        )
        self.train()
        trace: list[float] = []
        for _epoch in range(config.epochs):
            order = torch.randperm(n, generator=gen)
            losses = []
            for start in range(0, n, config.batch_size):
                idx = order[start : start + config.batch_size]
                b = len(idx)
                x0 = x0_all[idx]
                # fresh random conditioning mask per row
                scores = torch.rand(b, d, generator=gen)
                hidden_pos = scores.argsort(dim=1)[:, :n_hidden]
                hidden = torch.zeros(b, d)
                hidden.scatter_(1, hidden_pos, 1.0)
                obs = 1.0 - hidden
                cond = self.condition(num_norm[idx] * obs, cat_idx[idx] * obs.long(), obs)
                t = torch.randint(1, self.schedule.t_steps + 1, (b,), generator=gen)
                ab = torch.tensor(self.schedule.alpha_bars, dtype=x0.dtype)[t].view(b, 1, 1)
                eps = torch.randn(x0.shape, generator=gen)
                x_t = (ab.sqrt() * x0 + (1 - ab).sqrt() * eps)
                weight = hidden.unsqueeze(-1) * valid.unsqueeze(0)
                x_in = x_t * weight  # observed slots and invalid channels zeroed
                pred = self.denoiser(x_in, obs, cond, t)
                loss = ((pred - eps) ** 2 * weight).sum() / weight.sum()
                if not torch.isfinite(loss):
                    raise RuntimeError(f"non-finite training loss at epoch {_epoch}")
                opt.zero_grad()
                loss.backward()
                opt.step()
                losses.append(float(loss.detach()))
            trace.append(float(np.mean(losses)))
            if scheduler is not None:
                scheduler.step()
        self.eval()
        self.trained = True
        return trace

    # --- sampling -----------------------------------------------------------

    @torch.no_grad()
    def sample_many(self, partials: Sequence[PartialDesign], k: int, seed: int = 0) -> list[SampleSet]:
        """Batched reverse diffusion: K draws for each of the given rows.

        All K trajectories of a chunk of rows share one denoiser batch; the
        result is fully determined by (model, partials, k, seed).
        """
        if not self.trained:
            raise RuntimeError("model has not been trained")
        for partial in partials:
            if partial.schema != self.schema:
                raise SchemaError("partial design does not match the model schema")
        self.eval()
        gen = torch.Generator().manual_seed(_mix_seed(seed))
        results: list[SampleSet] = []
        chunk_rows = max(1, 4096 // max(1, k))
        for start in range(0, len(partials), chunk_rows):
            chunk = list(partials[start : start + chunk_rows])
            results.extend(self._sample_chunk(chunk, k, gen))
        return results

    def sample(self, partial: PartialDesign, k: int, seed: int = 0) -> SampleSet:
        """K reverse-diffusion draws over the missing subvector of one row."""
        return self.sample_many([partial], k, seed)[0]

    def _sample_chunk(self, chunk: list[PartialDesign], k: int, gen: torch.Generator) -> list[SampleSet]:
        n, d, r = len(chunk), self.schema.d, self.rep.rep_width
        num_norm, cat_idx, obs = encode_rows(chunk, self.schema)
        cond = self.condition(num_norm, cat_idx, obs).repeat_interleave(k, dim=0)
        obs_b = obs.repeat_interleave(k, dim=0)
        weight = (1.0 - obs_b).unsqueeze(-1) * self.rep.valid.unsqueeze(0)
        b = n * k
        ab = self.schedule.alpha_bars
        betas = self.schedule.betas
        x = torch.randn(b, d, r, generator=gen) * weight
        if weight.any():
            for t in range(self.schedule.t_steps, 0, -1):
                t_vec = torch.full((b,), t, dtype=torch.long)
                eps_hat = self.denoiser(x, obs_b, cond, t_vec)
                alpha_t = 1.0 - betas[t - 1]
                coef = betas[t - 1] / math.sqrt(1.0 - ab[t])
                x = (x - coef * eps_hat) / math.sqrt(alpha_t)
                if t > 1:
                    sigma = math.sqrt((1.0 - ab[t - 1]) / (1.0 - ab[t]) * betas[t - 1])
                    x = x + sigma * torch.randn(x.shape, generator=gen)
                x = x * weight
        x = x.view(n, k, d, r)
        results = []
        for i, partial in enumerate(chunk):
            missing = partial.missing_positions
            decoded = {j: self.rep.decode_feature(j, x[i, :, j, :]) for j in missing}
            draws = []
            for draw_i in range(k):
                values = list(partial.values)
                for j in missing:
                    values[j] = decoded[j][draw_i]
                draws.append(CompleteDesign.from_values(self.schema, values))
            results.append(SampleSet(partial=partial, draws=draws))
        return results

    def impute_point(self, partial: PartialDesign, k: int, seed: int = 0) -> CompleteDesign:
        """Point estimate: numeric mean, categorical mode (ties -> lowest index)."""
        sample_set = self.sample(partial, k, seed)
        return aggregate_point(sample_set)


def aggregate_point(sample_set: SampleSet) -> CompleteDesign:
    partial = sample_set.partial
    schema = partial.schema
    values = list(partial.values)
    for j in partial.missing_positions:
        spec = schema.features[j]
        draws = sample_set.values_for(j)
        if spec.is_numeric:
            lo, hi = spec.numeric_range
            values[j] = min(hi, max(lo, float(np.mean(draws))))
        else:
            counts = [0] * len(spec.categories)
            for v in draws:
                counts[spec.categories.index(v)] += 1
            values[j] = spec.categories[int(np.argmax(counts))]
    return CompleteDesign.from_values(schema, values)


def _mix_seed(seed: int) -> int:
    # keep user seeds and training seeds in distinct RNG streams
    return (seed * 0x9E3779B97F4A7C15 + 0x243F6A8885A308D3) % (2**63)
