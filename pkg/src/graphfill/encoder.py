"""Assembly-graph encoder: node feature construction + GCN / GATv2 stacks."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .schema import AssemblyGraph, FeatureSchema


@dataclass(frozen=True)
class GraphEncoderConfig:
    variant: str = "gatv2"  # gcn | gatv2 | none
    hidden_dim: int = 64
    layers: int = 2
    heads: int = 4
    leaky_slope: float = 0.2
    category_embed_dim: int = 8

    def __post_init__(self):
        if self.variant not in ("gcn", "gatv2", "none"):
            raise ValueError(f"unknown graph encoder variant {self.variant!r}")
        if self.layers < 1 or self.heads < 1 or self.hidden_dim < 1:
            raise ValueError("layers, heads, and hidden_dim must be positive")
        if self.variant == "gatv2" and self.hidden_dim % self.heads != 0:
            raise ValueError("hidden_dim must be divisible by heads for gatv2")


def adjacency_with_self_loops(graph: AssemblyGraph) -> torch.Tensor:
    """Dense adjacency over graph.nodes order, self-loops included."""
    n = len(graph.nodes)
    pos = {name: i for i, name in enumerate(graph.nodes)}
    adj = torch.eye(n)
    for a, b in graph.edge_list():
        adj[pos[a], pos[b]] = 1.0
        adj[pos[b], pos[a]] = 1.0
    return adj


def gcn_norm(adj: torch.Tensor) -> torch.Tensor:
    """Symmetric normalization D^-1/2 A D^-1/2 of a self-looped adjacency."""
    deg = adj.sum(dim=1)
    inv_sqrt = deg.rsqrt()
    return adj * inv_sqrt.unsqueeze(0) * inv_sqrt.unsqueeze(1)


class NodeFeatureBuilder(nn.Module):
    """Per-component raw node vectors from a batched partial design.

    Component c's vector is [values of its features in schema order,
    observed flags]; numeric values are normalized, observed categoricals
    contribute a learned embedding, missing slots contribute zeros.
    """

    def __init__(self, schema: FeatureSchema, graph: AssemblyGraph, category_embed_dim: int):
        super().__init__()
        self.schema = schema
        self.nodes = graph.nodes
        self.embed_dim = category_embed_dim
        self.cat_embeddings = nn.ModuleDict()
        for f in schema.features:
            if not f.is_numeric:
                self.cat_embeddings[_key(f.name)] = nn.Embedding(len(f.categories), category_embed_dim)
        self.widths = {}
        for comp in self.nodes:
            idx = schema.component_index[comp]
            n_cat = sum(1 for j in idx if not schema.features[j].is_numeric)
            n_num = len(idx) - n_cat
            self.widths[comp] = n_num + n_cat * category_embed_dim + len(idx)

    def forward(
        self, num_norm: torch.Tensor, cat_idx: torch.Tensor, observed: torch.Tensor
    ) -> list[torch.Tensor]:
        """Returns one [B, width_c] tensor per graph node, in node order."""
        out = []
        for comp in self.nodes:
            idx = self.schema.component_index[comp]
            slots = []
            for j in idx:
                spec = self.schema.features[j]
                obs = observed[:, j : j + 1]
                if spec.is_numeric:
                    slots.append(num_norm[:, j : j + 1] * obs)
                else:
                    emb = self.cat_embeddings[_key(spec.name)](cat_idx[:, j])
                    slots.append(emb * obs)
            slots.append(observed[:, list(idx)])
            out.append(torch.cat(slots, dim=1))
        return out


def _key(name: str) -> str:
    # ModuleDict keys may not contain '.'
    return name.replace(".", "·")


class GCNLayer(nn.Module):
    """h'_i = sum_j A_hat[i,j] h_j W with symmetric normalization."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.linear = nn.Linear(in_dim, out_dim, bias=False)

    def forward(self, h: torch.Tensor, norm_adj: torch.Tensor) -> torch.Tensor:
        return torch.matmul(norm_adj, self.linear(h))


class GATv2Layer(nn.Module):
    """Multi-head GATv2: scores a . LeakyReLU(W_l h_i + W_r h_j), softmax over
    the self-looped neighborhood, messages are W_r h_j per head."""

    def __init__(self, in_dim: int, out_dim: int, heads: int, leaky_slope: float = 0.2):
        super().__init__()
        if out_dim % heads != 0:
            raise ValueError("out_dim must be divisible by heads")
        self.heads = heads
        self.head_dim = out_dim // heads
        self.leaky_slope = leaky_slope
        self.w_left = nn.Linear(in_dim, out_dim, bias=False)
        self.w_right = nn.Linear(in_dim, out_dim, bias=False)
        self.attn = nn.Parameter(torch.empty(heads, self.head_dim))
        nn.init.xavier_uniform_(self.attn)

    def forward(
        self, h: torch.Tensor, adj: torch.Tensor, return_attention: bool = False
    ):
        b, n, _ = h.shape
        left = self.w_left(h).view(b, n, self.heads, self.head_dim)
        right = self.w_right(h).view(b, n, self.heads, self.head_dim)
        # pair[b,i,j,h,d] = W_l h_i + W_r h_j; attention vector applied after
        # the nonlinearity (the GATv2 ordering).
        pair = left.unsqueeze(2) + right.unsqueeze(1)
        scores = (F.leaky_relu(pair, self.leaky_slope) * self.attn).sum(dim=-1)  # [B,n,n,H]
        mask = adj.unsqueeze(0).unsqueeze(-1) > 0
        scores = scores.masked_fill(~mask, float("-inf"))
        alpha = torch.softmax(scores, dim=2)  # over neighbors j
        out = torch.einsum("bijh,bjhd->bihd", alpha, right).reshape(b, n, -1)
        if return_attention:
            return out, alpha
        return out


class GraphEncoder(nn.Module):
    """Per-component projection followed by a stack of GCN or GATv2 layers.

    The `none` variant returns an all-zero embedding of the right shape,
    realizing the no-graph ablation.
    """

    def __init__(self, schema: FeatureSchema, graph: AssemblyGraph, config: GraphEncoderConfig):
        super().__init__()
        self.schema = schema
        self.graph = graph
        self.config = config
        self.n_nodes = len(graph.nodes)
        adj = adjacency_with_self_loops(graph)
        self.register_buffer("adj", adj)
        self.register_buffer("norm_adj", gcn_norm(adj))
        if config.variant == "none":
            return
        self.builder = NodeFeatureBuilder(schema, graph, config.category_embed_dim)
        self.projections = nn.ModuleList(
            [nn.Linear(self.builder.widths[c], config.hidden_dim) for c in graph.nodes]
        )
        layers = []
        for _ in range(config.layers):
            if config.variant == "gcn":
                layers.append(GCNLayer(config.hidden_dim, config.hidden_dim))
            else:
                layers.append(GATv2Layer(config.hidden_dim, config.hidden_dim, config.heads, config.leaky_slope))
        self.layers = nn.ModuleList(layers)

    def forward(self, num_norm: torch.Tensor, cat_idx: torch.Tensor, observed: torch.Tensor) -> torch.Tensor:
        b = num_norm.shape[0]
        if self.config.variant == "none":
            return torch.zeros(b, self.n_nodes, self.config.hidden_dim, dtype=num_norm.dtype, device=num_norm.device)
        raw = self.builder(num_norm, cat_idx, observed)
        h = torch.stack([proj(v) for proj, v in zip(self.projections, raw)], dim=1)
        for i, layer in enumerate(self.layers):
            if self.config.variant == "gcn":
                h = layer(h, self.norm_adj.to(h.dtype))
            else:
                h = layer(h, self.adj)
            if i < len(self.layers) - 1:
                h = F.relu(h)
        return h
