"""Batched tensor encodings of design rows shared by the neural modules."""

from __future__ import annotations

from typing import Sequence

import torch

from .schema import FeatureSchema, PartialDesign


def encode_rows(
    designs: Sequence[PartialDesign],
    schema: FeatureSchema,
    dtype: torch.dtype = torch.float32,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Encode rows as (num_norm [B,D], cat_idx [B,D], observed [B,D]).

    Missing positions carry 0 in every tensor; observed numeric values are
    min-max normalized to [0,1]; observed categorical values are integer
    category indices.
    """
    b, d = len(designs), schema.d
    num_norm = torch.zeros(b, d, dtype=dtype)
    cat_idx = torch.zeros(b, d, dtype=torch.long)
    observed = torch.zeros(b, d, dtype=dtype)
    for r, design in enumerate(designs):
        for j, (spec, value, obs) in enumerate(zip(schema.features, design.values, design.mask.observed)):
            if not obs:
                continue
            observed[r, j] = 1.0
            if spec.is_numeric:
                num_norm[r, j] = spec.normalize(float(value))
            else:
                cat_idx[r, j] = spec.categories.index(value)
    return num_norm, cat_idx, observed


class ContinuousRep:
    """Fixed continuous representation of a design row for diffusion.

    Every feature occupies a slot of width R = max(1, max category count).
    Numeric features use channel 0 with values rescaled to [-1, 1];
    categorical features use a signed one-hot code (+CODE_SCALE at the
    category index, -CODE_SCALE on the other valid channels) — the scale
    widens the nearest-code decode margin relative to residual sampling
    noise. Channels beyond a feature's width are invalid and always
    forced to zero.
    """

    CODE_SCALE = 1.0

    def __init__(self, schema: FeatureSchema):
        self.schema = schema
        widths = [len(f.categories) if not f.is_numeric else 1 for f in schema.features]
        self.rep_width = max(widths)
        d = schema.d
        valid = torch.zeros(d, self.rep_width)
        codes = torch.zeros(d, self.rep_width, self.rep_width)  # [feature, category, channel]
        for j, spec in enumerate(schema.features):
            if spec.is_numeric:
                valid[j, 0] = 1.0
            else:
                c = len(spec.categories)
                valid[j, :c] = 1.0
                codes[j, :c, :c] = -self.CODE_SCALE
                for k in range(c):
                    codes[j, k, k] = self.CODE_SCALE
        self.valid = valid  # [D, R]
        self.codes = codes  # [D, R, R]

    def encode(self, num_norm: torch.Tensor, cat_idx: torch.Tensor) -> torch.Tensor:
        """Map (num_norm [B,D], cat_idx [B,D]) of complete rows to reps [B,D,R]."""
        b, d = num_norm.shape
        rep = torch.zeros(b, d, self.rep_width, dtype=num_norm.dtype)
        for j, spec in enumerate(self.schema.features):
            if spec.is_numeric:
                rep[:, j, 0] = 2.0 * num_norm[:, j] - 1.0
            else:
                rep[:, j, :] = self.codes[j, cat_idx[:, j], :].to(num_norm.dtype)
        return rep

    def decode_feature(self, j: int, rep_j: torch.Tensor):
        """Decode one feature's rep [K, R] to K values (floats or labels)."""
        spec = self.schema.features[j]
        if spec.is_numeric:
            v = ((rep_j[:, 0] + 1.0) / 2.0).clamp(0.0, 1.0)
            lo, hi = spec.numeric_range
            return [min(hi, max(lo, spec.denormalize(float(x)))) for x in v]
        c = len(spec.categories)
        codes = self.codes[j, :c, :].to(rep_j.dtype)  # [C, R]
        dist = torch.cdist(rep_j.unsqueeze(0), codes.unsqueeze(0)).squeeze(0)  # [K, C]
        picks = torch.argmin(dist, dim=1)
        return [spec.categories[int(k)] for k in picks]
