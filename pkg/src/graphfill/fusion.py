"""Feature/positional tokenization and cross-modal fusion with graph context."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .schema import FeatureSchema


@dataclass(frozen=True)
class FusionConfig:
    d_token: int = 64
    fusion_heads: int = 4
    dropout: float = 0.1

    def __post_init__(self):
        if self.d_token % self.fusion_heads != 0:
            raise ValueError("d_token must be divisible by fusion_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


class FeatureTokenizer(nn.Module):
    """One token per feature: per-feature affine lift for numeric values,
    embedding lookup for categorical labels, shared [MASK] token when missing."""

    def __init__(self, schema: FeatureSchema, d_token: int):
        super().__init__()
        self.schema = schema
        self.d_token = d_token
        d = schema.d
        self.num_weight = nn.Parameter(torch.empty(d, d_token))
        self.num_bias = nn.Parameter(torch.zeros(d, d_token))
        nn.init.normal_(self.num_weight, std=0.02)
        self.cat_tables = nn.ModuleList(
            [
                nn.Embedding(len(f.categories), d_token) if not f.is_numeric else nn.Identity()
                for f in schema.features
            ]
        )
        self.mask_token = nn.Parameter(torch.zeros(d_token))
        self.register_buffer(
            "is_numeric", torch.tensor([1.0 if f.is_numeric else 0.0 for f in schema.features])
        )

    def forward(self, num_norm: torch.Tensor, cat_idx: torch.Tensor, observed: torch.Tensor) -> torch.Tensor:
        b, d = num_norm.shape
        numeric_tok = num_norm.unsqueeze(-1) * self.num_weight + self.num_bias  # [B,D,d]
        cat_toks = []
        for j, f in enumerate(self.schema.features):
            if f.is_numeric:
                cat_toks.append(torch.zeros(b, self.d_token, dtype=num_norm.dtype, device=num_norm.device))
            else:
                cat_toks.append(self.cat_tables[j](cat_idx[:, j]))
        cat_tok = torch.stack(cat_toks, dim=1)
        isnum = self.is_numeric.view(1, d, 1).to(num_norm.dtype)
        content = isnum * numeric_tok + (1.0 - isnum) * cat_tok
        obs = observed.unsqueeze(-1)
        return obs * content + (1.0 - obs) * self.mask_token


def positional_encoding(d: int, d_token: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Fixed sinusoidal encoding: pe[pos, 2k] = sin(pos/10000^(2k/d)),
    pe[pos, 2k+1] = cos of the same angle."""
    pe = torch.zeros(d, d_token, dtype=dtype)
    pos = torch.arange(d, dtype=dtype).unsqueeze(1)
    k = torch.arange(0, d_token, 2, dtype=dtype)
    div = torch.exp(-math.log(10000.0) * k / d_token)
    angles = pos * div
    pe[:, 0::2] = torch.sin(angles)
    pe[:, 1::2] = torch.cos(angles[:, : pe[:, 1::2].shape[1]])
    return pe


class CrossAttentionFusion(nn.Module):
    """Cross-attention with tokens as queries and graph embeddings as
    keys/values, a residual connection, and a per-token feed-forward layer.

    Key and value projections carry no bias, so an all-zero graph embedding
    contributes nothing and the output reduces to the token-only path.
    """

    def __init__(self, d_token: int, graph_dim: int, heads: int, dropout: float = 0.1):
        super().__init__()
        self.heads = heads
        self.head_dim = d_token // heads
        self.q_proj = nn.Linear(d_token, d_token)
        self.k_proj = nn.Linear(graph_dim, d_token, bias=False)
        self.v_proj = nn.Linear(graph_dim, d_token, bias=False)
        self.out_proj = nn.Linear(d_token, d_token, bias=False)
        self.dropout = nn.Dropout(dropout)
        self.ff = nn.Sequential(
            nn.Linear(d_token, 2 * d_token), nn.GELU(), nn.Dropout(dropout), nn.Linear(2 * d_token, d_token)
        )
        self.norm = nn.LayerNorm(d_token)

    def attention(self, tokens: torch.Tensor, graph_emb: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        b, d, _ = tokens.shape
        n = graph_emb.shape[1]
        q = self.q_proj(tokens).view(b, d, self.heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(graph_emb).view(b, n, self.heads, self.head_dim).transpose(1, 2)
        v = self.v_proj(graph_emb).view(b, n, self.heads, self.head_dim).transpose(1, 2)
        scores = torch.matmul(q, k.transpose(-1, -2)) / math.sqrt(self.head_dim)
        alpha = torch.softmax(scores, dim=-1)  # [B,H,D,n]
        ctx = torch.matmul(alpha, v).transpose(1, 2).reshape(b, d, -1)
        return self.out_proj(ctx), alpha

    def forward(self, tokens: torch.Tensor, graph_emb: torch.Tensor) -> torch.Tensor:
        ctx, _ = self.attention(tokens, graph_emb)
        h = tokens + self.dropout(ctx)
        return h + self.ff(self.norm(h))


class ConditioningNetwork(nn.Module):
    """tokenize -> add positional encoding -> fuse with graph embedding."""

    def __init__(self, schema: FeatureSchema, graph_dim: int, config: FusionConfig):
        super().__init__()
        self.schema = schema
        self.config = config
        self.tokenizer = FeatureTokenizer(schema, config.d_token)
        self.fusion = CrossAttentionFusion(config.d_token, graph_dim, config.fusion_heads, config.dropout)
        self.register_buffer("pos_enc", positional_encoding(schema.d, config.d_token))

    def forward(
        self, num_norm: torch.Tensor, cat_idx: torch.Tensor, observed: torch.Tensor, graph_emb: torch.Tensor
    ) -> torch.Tensor:
        tokens = self.tokenizer(num_norm, cat_idx, observed)
        tokens = tokens + self.pos_enc.to(tokens.dtype)
        return self.fusion(tokens, graph_emb)
