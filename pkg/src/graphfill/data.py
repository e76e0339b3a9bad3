"""Dataset loading, augmentation, splitting, masking, and synthetic data.

The synthetic generator produces desk-scale parametric-assembly datasets with
a controllable latent coupling structure, used throughout the test suite as a
stand-in for full-scale training data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .schema import (
    MISSING,
    AssemblyGraph,
    CompleteDesign,
    FeatureSchema,
    FeatureSpec,
    ObservationMask,
    PartialDesign,
    SchemaError,
    apply_mask,
    designs_from_csv,
)


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    rows: tuple[CompleteDesign, ...]
    provenance: str = "loaded"  # loaded | augmented | synthetic

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            if row.schema is not self.schema and row.schema != self.schema:
                raise SchemaError("dataset row does not share the dataset schema")

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class MaskingProtocol:
    missing_fraction: float = 0.10
    mode: str = "random_per_row"  # random_per_row | fixed_feature
    target_feature: str | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.missing_fraction < 1.0:
            raise ValueError("missing_fraction must lie in (0, 1)")
        if self.mode not in ("random_per_row", "fixed_feature"):
            raise ValueError(f"unknown masking mode {self.mode!r}")
        if self.mode == "fixed_feature" and not self.target_feature:
            raise ValueError("fixed_feature mode needs a target_feature")


def load_csv(path: str | Path, schema: FeatureSchema) -> Dataset:
    """Load a complete-design CSV; every cell must parse and validate."""
    text = Path(path).read_text(encoding="utf-8")
    rows = designs_from_csv(text, schema, complete=True)
    return Dataset(schema=schema, rows=tuple(rows), provenance="loaded")


def augment(dataset: Dataset, target_size: int, seed: int) -> Dataset:
    """Extend a dataset by cloning rows and resampling a random feature subset.

    Each new row takes a uniformly chosen existing row and redraws a uniformly
    chosen nonempty subset of its features: numeric uniformly within range,
    categorical uniformly over labels.
    """
    if len(dataset) == 0:
        raise ValueError("cannot augment an empty dataset")
    if target_size < len(dataset):
        raise ValueError("target_size must be at least the current size")
    if target_size == len(dataset):
        return dataset
    schema = dataset.schema
    rng = np.random.default_rng(seed)
    new_rows = list(dataset.rows)
    for _ in range(target_size - len(dataset)):
        src = dataset.rows[int(rng.integers(len(dataset)))]
        k = int(rng.integers(1, schema.d + 1))
        positions = rng.choice(schema.d, size=k, replace=False)
        values = list(src.values)
        for pos in positions:
            spec = schema.features[pos]
            if spec.is_numeric:
                lo, hi = spec.numeric_range
                values[pos] = float(rng.uniform(lo, hi))
            else:
                values[pos] = spec.categories[int(rng.integers(len(spec.categories)))]
        new_rows.append(CompleteDesign.from_values(schema, values))
    return Dataset(schema=schema, rows=tuple(new_rows), provenance="augmented")


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Disjoint train/test partition, ⌊fraction·N⌋ training rows."""
    if len(dataset) == 0:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(dataset))
    n_train = int(math.floor(spec.train_fraction * len(dataset)))
    train = tuple(dataset.rows[i] for i in order[:n_train])
    test = tuple(dataset.rows[i] for i in order[n_train:])
    return (
        Dataset(schema=dataset.schema, rows=train, provenance=dataset.provenance),
        Dataset(schema=dataset.schema, rows=test, provenance=dataset.provenance),
    )


def masked_count(d: int, fraction: float) -> int:
    """Number of features to hide: round fraction·D to nearest, minimum 1."""
    return max(1, int(math.floor(fraction * d + 0.5)))


def make_masked_testset(
    test: Dataset, protocol: MaskingProtocol
) -> list[tuple[PartialDesign, CompleteDesign]]:
    """Pair each test row with a masked copy per the masking protocol.

    Hidden positions are drawn independently per row; row i uses the RNG
    stream seeded by (protocol.seed, i), so rows may be generated in parallel.
    """
    schema = test.schema
    if protocol.mode == "fixed_feature":
        if protocol.target_feature not in schema.name_index:
            raise SchemaError(f"fixed feature {protocol.target_feature!r} not in schema")
        target = schema.name_index[protocol.target_feature]
        mask = ObservationMask.hiding(schema.d, [target])
        return [(apply_mask(row, mask), row) for row in test.rows]
    n_hidden = masked_count(schema.d, protocol.missing_fraction)
    pairs = []
    for i, row in enumerate(test.rows):
        rng = np.random.default_rng([protocol.seed, i])
        hidden = rng.choice(schema.d, size=n_hidden, replace=False)
        mask = ObservationMask.hiding(schema.d, hidden.tolist())
        pairs.append((apply_mask(row, mask), row))
    return pairs


# --- synthetic parametric-assembly generator --------------------------------


@dataclass(frozen=True)
class SyntheticComponent:
    name: str
    numeric: int
    signal: bool = True


@dataclass(frozen=True)
class SyntheticConfig:
    """Latent-factor synthetic assembly.

    Numeric features in signal components follow
    coupling·g + (1−coupling)·e_c + noise·ε, where g is a row-global factor
    and e_c is shared within component c; non-signal components are pure
    noise. One categorical feature is a deterministic threshold of its
    component's first numeric feature ("strongly conditional") and one is
    independent uniform noise ("weakly correlated"). ``band_margin`` keeps
    the driver feature's mass away from the threshold (as a fraction of the
    half-range) so the conditional label is identifiable at finite samples;
    the monotone remap preserves the threshold rule exactly.
    """

    components: tuple[SyntheticComponent, ...]
    coupling: float = 0.6
    noise: float = 0.1
    n_rows: int = 2000
    edges: tuple[tuple[str, str], ...] | None = None  # default: chain
    with_conditional_categorical: bool = True
    with_noise_categorical: bool = True
    band_margin: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.coupling <= 1.0:
            raise ValueError("coupling must lie in [0, 1]")
        if not 0.0 <= self.band_margin < 1.0:
            raise ValueError("band_margin must lie in [0, 1)")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        if not self.components or any(c.numeric < 1 for c in self.components):
            raise ValueError("need at least one component, each with numeric features")

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticConfig":
        comps = tuple(
            SyntheticComponent(name=c["name"], numeric=int(c["numeric"]), signal=bool(c.get("signal", True)))
            for c in doc["components"]
        )
        edges = tuple(tuple(e) for e in doc["edges"]) if "edges" in doc else None
        return cls(
            components=comps,
            coupling=float(doc.get("coupling", 0.6)),
            noise=float(doc.get("noise", 0.1)),
            n_rows=int(doc.get("n_rows", 2000)),
            edges=edges,
            with_conditional_categorical=bool(doc.get("with_conditional_categorical", True)),
            with_noise_categorical=bool(doc.get("with_noise_categorical", True)),
            band_margin=float(doc.get("band_margin", 0.2)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SyntheticConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


NOISE_CATEGORIES = ("a", "b", "c", "d")
CONDITIONAL_CATEGORIES = ("low", "high")


def synthetic_schema(config: SyntheticConfig) -> tuple[FeatureSchema, AssemblyGraph]:
    features: list[FeatureSpec] = []
    for ci, comp in enumerate(config.components):
        for k in range(comp.numeric):
            features.append(
                FeatureSpec(name=f"{comp.name} f{k}", kind="numeric", component=comp.name, numeric_range=(0.0, 10.0))
            )
        if config.with_conditional_categorical and ci == 0:
            features.append(
                FeatureSpec(
                    name=f"{comp.name} band", kind="categorical", component=comp.name,
                    categories=CONDITIONAL_CATEGORIES,
                )
            )
        if config.with_noise_categorical and ci == len(config.components) - 1:
            features.append(
                FeatureSpec(
                    name=f"{comp.name} finish", kind="categorical", component=comp.name,
                    categories=NOISE_CATEGORIES,
                )
            )
    names = tuple(c.name for c in config.components)
    schema = FeatureSchema(features=tuple(features), components=names)
    if config.edges is not None:
        edges = frozenset(frozenset(e) for e in config.edges)
    else:
        edges = frozenset(frozenset((names[i], names[i + 1])) for i in range(len(names) - 1))
    graph = AssemblyGraph(schema=schema, nodes=names, edges=edges)
    return schema, graph


def generate_synthetic(config: SyntheticConfig, seed: int) -> tuple[FeatureSchema, AssemblyGraph, Dataset]:
    """Generate a latent-factor synthetic dataset; row i uses RNG (seed, i)."""
    schema, graph = synthetic_schema(config)
    scale = math.sqrt(config.coupling**2 + (1 - config.coupling) ** 2 + config.noise**2)
    rows: list[CompleteDesign] = []
    comp_by_name = {c.name: c for c in config.components}
    driver_index = (
        schema.component_index[config.components[0].name][0]
        if config.with_conditional_categorical
        else None
    )
    for i in range(config.n_rows):
        rng = np.random.default_rng([seed, i])
        g = rng.standard_normal()
        e = {c.name: rng.standard_normal() for c in config.components}
        values: list = []
        for spec in schema.features:
            comp = comp_by_name[spec.component]
            if spec.is_numeric:
                if comp.signal:
                    raw = config.coupling * g + (1 - config.coupling) * e[comp.name] + config.noise * rng.standard_normal()
                    raw /= scale
                else:
                    raw = rng.standard_normal()
                lo, hi = spec.numeric_range
                v = float(lo + (hi - lo) * norm.cdf(raw))
                if len(values) == driver_index and config.band_margin > 0.0:
                    # push the band driver away from its threshold with a
                    # monotone remap of [0, half] onto [margin, half]
                    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
                    m = config.band_margin * half
                    sign = 1.0 if v >= mid else -1.0
                    v = mid + sign * (m + (1.0 - m / half) * abs(v - mid))
                values.append(min(hi, max(lo, v)))
            elif spec.categories == CONDITIONAL_CATEGORIES and spec.name.endswith(" band"):
                # deterministic function of the first numeric feature of its component
                first = schema.component_index[spec.component][0]
                lo, hi = schema.features[first].numeric_range
                values.append("high" if values[first] > (lo + hi) / 2 else "low")
            else:
                values.append(NOISE_CATEGORIES[int(rng.integers(len(NOISE_CATEGORIES)))])
        rows.append(CompleteDesign.from_values(schema, values))
    return schema, graph, Dataset(schema=schema, rows=tuple(rows), provenance="synthetic")
