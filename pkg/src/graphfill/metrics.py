"""Evaluation metrics for generative imputation and the report builder.

All metrics operate on normalized values: numeric features min-max scaled by
their schema range, categorical features as integer codes scaled by 1/(C-1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import Dataset, MaskingProtocol
from .diffusion import SampleSet, aggregate_point
from .schema import CompleteDesign, FeatureSchema, ObservationMask, PartialDesign


class MetricError(ValueError):
    pass


def _norm_value(schema: FeatureSchema, j: int, value) -> float:
    spec = schema.features[j]
    if spec.is_numeric:
        return spec.normalize(float(value))
    c = len(spec.categories)
    return spec.categories.index(value) / (c - 1)


def rmse(
    predictions: Sequence[CompleteDesign],
    truths: Sequence[CompleteDesign],
    masks: Sequence[ObservationMask],
    schema: FeatureSchema,
) -> float:
    """Per-row RMSE over missing numeric features (normalized), averaged over
    rows; rows without missing numeric features are excluded."""
    per_row = []
    for pred, truth, mask in zip(predictions, truths, masks):
        sq = [
            (_norm_value(schema, j, pred.values[j]) - _norm_value(schema, j, truth.values[j])) ** 2
            for j, obs in enumerate(mask.observed)
            if not obs and schema.features[j].is_numeric
        ]
        if sq:
            per_row.append(float(np.sqrt(np.mean(sq))))
    if not per_row:
        raise MetricError("no missing numeric feature in any row")
    return float(np.mean(per_row))


def error_rate(
    predictions: Sequence[CompleteDesign],
    truths: Sequence[CompleteDesign],
    masks: Sequence[ObservationMask],
    schema: FeatureSchema,
) -> float:
    """Fraction of mismatched imputed categorical cells, per-row mean then
    across-row mean; rows without missing categoricals are excluded."""
    per_row = []
    for pred, truth, mask in zip(predictions, truths, masks):
        flags = [
            0.0 if pred.values[j] == truth.values[j] else 1.0
            for j, obs in enumerate(mask.observed)
            if not obs and not schema.features[j].is_numeric
        ]
        if flags:
            per_row.append(float(np.mean(flags)))
    if not per_row:
        raise MetricError("no missing categorical feature in any row")
    return float(np.mean(per_row))


def mae(
    predictions: Sequence[CompleteDesign],
    truths: Sequence[CompleteDesign],
    masks: Sequence[ObservationMask],
    schema: FeatureSchema,
) -> float:
    """Mean absolute error pooled over all missing numeric cells (normalized)."""
    errs = _pooled_errors(predictions, truths, masks, schema)
    return float(np.mean(np.abs(errs)))


def r_squared(
    predictions: Sequence[CompleteDesign],
    truths: Sequence[CompleteDesign],
    masks: Sequence[ObservationMask],
    schema: FeatureSchema,
) -> float | None:
    """1 - SSE/SST over pooled missing numeric cells; None when SST = 0."""
    preds, ys = [], []
    for pred, truth, mask in zip(predictions, truths, masks):
        for j, obs in enumerate(mask.observed):
            if not obs and schema.features[j].is_numeric:
                preds.append(_norm_value(schema, j, pred.values[j]))
                ys.append(_norm_value(schema, j, truth.values[j]))
    if not ys:
        raise MetricError("no missing numeric feature in any row")
    ys = np.asarray(ys)
    preds = np.asarray(preds)
    sst = float(np.sum((ys - ys.mean()) ** 2))
    if sst == 0.0:
        return None
    sse = float(np.sum((preds - ys) ** 2))
    return 1.0 - sse / sst


def _pooled_errors(predictions, truths, masks, schema) -> np.ndarray:
    errs = []
    for pred, truth, mask in zip(predictions, truths, masks):
        for j, obs in enumerate(mask.observed):
            if not obs and schema.features[j].is_numeric:
                errs.append(_norm_value(schema, j, pred.values[j]) - _norm_value(schema, j, truth.values[j]))
    if not errs:
        raise MetricError("no missing numeric feature in any row")
    return np.asarray(errs)


def mean_abs_correlations(schema: FeatureSchema, train: Dataset) -> np.ndarray:
    """Per feature: mean |Pearson r| against all other features over the
    training data (categoricals as integer codes; constant columns give 0)."""
    x = np.zeros((len(train), schema.d))
    for i, row in enumerate(train.rows):
        for j in range(schema.d):
            x[i, j] = _norm_value(schema, j, row.values[j])
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(x, rowvar=False)
    corr = np.nan_to_num(corr, nan=0.0)
    d = schema.d
    if d == 1:
        return np.zeros(1)
    abs_corr = np.abs(corr)
    np.fill_diagonal(abs_corr, 0.0)
    return abs_corr.sum(axis=1) / (d - 1)


def eligible_features(schema: FeatureSchema, train: Dataset) -> list[int]:
    """Features whose mean absolute correlation exceeds the median."""
    means = mean_abs_correlations(schema, train)
    median = float(np.median(means))
    return [j for j in range(schema.d) if means[j] > median]


def per_feature_max_gap(sample_set: SampleSet, j: int) -> float:
    """Max pairwise |gap| among the K draws for feature j, normalized."""
    schema = sample_set.partial.schema
    vals = [_norm_value(schema, j, v) for v in sample_set.values_for(j)]
    return float(max(vals) - min(vals))


def diversity_score(
    sample_sets: Sequence[SampleSet],
    schema: FeatureSchema,
    train: Dataset,
    eligible: Sequence[int] | None = None,
) -> float:
    """Mean over rows and eligible missing features of the max pairwise gap
    among the K draws (normalized values)."""
    if any(s.k < 2 for s in sample_sets):
        raise MetricError("diversity needs at least 2 draws per row")
    if eligible is None:
        eligible = eligible_features(schema, train)
    eligible = set(eligible)
    gaps = []
    for s in sample_sets:
        for j in s.partial.missing_positions:
            if j in eligible:
                gaps.append(per_feature_max_gap(s, j))
    if not gaps:
        raise MetricError("no eligible missing feature")
    return float(np.mean(gaps))


def feature_kl(
    generated: Sequence, reference: Sequence, schema: FeatureSchema, j: int, bins: int = 20
) -> float:
    """KL(generated || reference) over add-one-smoothed histograms.

    Numeric features use equal-width bins spanning the schema range;
    categorical features use category counts.
    """
    if bins < 2:
        raise MetricError("need at least 2 bins")
    if len(generated) == 0 or len(reference) == 0:
        raise MetricError("both samples must be non-empty")
    spec = schema.features[j]
    if spec.is_numeric:
        lo, hi = spec.numeric_range
        edges = np.linspace(lo, hi, bins + 1)
        p_counts, _ = np.histogram(np.asarray(generated, dtype=float), bins=edges)
        q_counts, _ = np.histogram(np.asarray(reference, dtype=float), bins=edges)
    else:
        cats = spec.categories
        p_counts = np.array([sum(1 for v in generated if v == c) for c in cats])
        q_counts = np.array([sum(1 for v in reference if v == c) for c in cats])
    p = (p_counts + 1.0) / (p_counts.sum() + len(p_counts))
    q = (q_counts + 1.0) / (q_counts.sum() + len(q_counts))
    return float(np.sum(p * np.log(p / q)))


def conditional_distance(
    sample_sets: Sequence[SampleSet], truths: Sequence[CompleteDesign], schema: FeatureSchema, j: int
) -> float:
    """Mean over rows of |mean_k S_kj - truth_j| on normalized values;
    feature j must be missing in every evaluated row."""
    dists = []
    for s, truth in zip(sample_sets, truths):
        if j not in s.partial.missing_positions:
            raise MetricError(f"feature {schema.features[j].name!r} is observed in some row")
        draw_mean = float(np.mean([_norm_value(schema, j, v) for v in s.values_for(j)]))
        dists.append(abs(draw_mean - _norm_value(schema, j, truth.values[j])))
    if not dists:
        raise MetricError("no rows to evaluate")
    return float(np.mean(dists))


@dataclass
class EvaluationReport:
    method: str
    n_test: int
    k: int
    seed: int
    rmse: float | None
    error_rate: float | None
    mae: float | None
    r_squared: float | None
    diversity_score: float | None
    per_feature_kl: dict[str, float]
    conditional_distance: dict[str, float]
    per_row_missing: list[int]
    config_echo: dict = field(default_factory=dict)
    notes: str = "all metrics computed on normalized values (numeric min-max per schema range)"

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2)


def evaluate(
    sampler: Callable[[PartialDesign, int, int], SampleSet],
    pairs: Sequence[tuple[PartialDesign, CompleteDesign]],
    schema: FeatureSchema,
    train: Dataset,
    k: int = 50,
    seed: int = 0,
    method: str = "unknown",
    config_echo: Mapping | None = None,
) -> EvaluationReport:
    """Run a masked test set through a sampler and compute every metric.

    `sampler(partial, k, seed)` must return a SampleSet; deterministic
    baselines replicate their single output K times. When the sampler's
    owner exposes `sample_many`, all rows are drawn in one batched call.
    """
    if hasattr(sampler, "__self__") and hasattr(sampler.__self__, "sample_many"):
        sample_sets = sampler.__self__.sample_many([p for p, _ in pairs], k, seed)
    else:
        sample_sets = [sampler(partial, k, seed + i) for i, (partial, _) in enumerate(pairs)]
    truths = [truth for _, truth in pairs]
    masks = [partial.mask for partial, _ in pairs]
    points = [aggregate_point(s) for s in sample_sets]

    def _try(fn, *args):
        try:
            return fn(*args)
        except MetricError:
            return None

    report = EvaluationReport(
        method=method,
        n_test=len(pairs),
        k=k,
        seed=seed,
        rmse=_try(rmse, points, truths, masks, schema),
        error_rate=_try(error_rate, points, truths, masks, schema),
        mae=_try(mae, points, truths, masks, schema),
        r_squared=_try(r_squared, points, truths, masks, schema),
        diversity_score=_try(diversity_score, sample_sets, schema, train),
        per_feature_kl={},
        conditional_distance={},
        per_row_missing=[len(p.missing_positions) for p, _ in pairs],
        config_echo=dict(config_echo or {}),
    )
    # distribution studies: pooled draws per feature vs the training data
    hidden_anywhere = sorted({j for s in sample_sets for j in s.partial.missing_positions})
    for j in hidden_anywhere:
        name = schema.features[j].name
        generated = [v for s in sample_sets for v in (s.values_for(j) if j in s.partial.missing_positions else [])]
        reference = [row.values[j] for row in train.rows]
        report.per_feature_kl[name] = feature_kl(generated, reference, schema, j)
        rows_with = [(s, t) for s, t in zip(sample_sets, truths) if j in s.partial.missing_positions]
        sub_sets, sub_truths = zip(*rows_with)
        report.conditional_distance[name] = conditional_distance(sub_sets, sub_truths, schema, j)
    return report


def deterministic_sampler(impute_fn: Callable[[PartialDesign], CompleteDesign]):
    """Wrap a deterministic point imputer as a K-replicating sampler."""

    def sampler(partial: PartialDesign, k: int, seed: int) -> SampleSet:
        point = impute_fn(partial)
        return SampleSet(partial=partial, draws=[point] * k)

    return sampler
