"""Core data model: feature schemas, designs, masks, and the assembly graph.

Every other module consumes these types. All types are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

# Missing values are represented by None throughout the data model; numeric 0
# is a legal value and must never be conflated with "missing".
MISSING = None

Value = float | str | None


class SchemaError(ValueError):
    """Raised when a schema, graph, or design fails validation."""


@dataclass(frozen=True)
class FeatureSpec:
    """One design feature: numeric with a range, or categorical with labels."""

    name: str
    kind: str  # "numeric" | "categorical"
    component: str
    numeric_range: tuple[float, float] | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind == "numeric":
            if self.numeric_range is None or self.categories is not None:
                raise SchemaError(f"feature {self.name!r}: numeric features need a range and no categories")
            lo, hi = self.numeric_range
            if not lo < hi:
                raise SchemaError(f"feature {self.name!r}: range must satisfy lo < hi, got [{lo}, {hi}]")
        elif self.kind == "categorical":
            if self.categories is None or self.numeric_range is not None:
                raise SchemaError(f"feature {self.name!r}: categorical features need categories and no range")
            if len(self.categories) < 2:
                raise SchemaError(f"feature {self.name!r}: need at least 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"feature {self.name!r}: duplicate category labels")
        else:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")

    @property
    def is_numeric(self) -> bool:
        return self.kind == "numeric"

    def normalize(self, value: float) -> float:
        """Min-max normalize a numeric value to [0, 1]."""
        lo, hi = self.numeric_range
        return (value - lo) / (hi - lo)

    def denormalize(self, value: float) -> float:
        lo, hi = self.numeric_range
        return lo + value * (hi - lo)

    def validate_value(self, value: Value) -> None:
        if value is MISSING:
            return
        if self.is_numeric:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SchemaError(f"feature {self.name!r}: expected a number, got {value!r}")
            lo, hi = self.numeric_range
            if not lo <= float(value) <= hi:
                raise SchemaError(f"feature {self.name!r}: value {value} outside range [{lo}, {hi}]")
        else:
            if value not in self.categories:
                raise SchemaError(f"feature {self.name!r}: unknown category {value!r}")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered declaration of all D features and their component membership."""

    features: tuple[FeatureSpec, ...]
    components: tuple[str, ...]
    component_index: Mapping[str, tuple[int, ...]] = field(init=False, repr=False)
    name_index: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise SchemaError(f"duplicate feature name {dup!r}")
        if len(set(self.components)) != len(self.components):
            raise SchemaError("duplicate component ids")
        declared = set(self.components)
        index: dict[str, list[int]] = {c: [] for c in self.components}
        for i, f in enumerate(self.features):
            if f.component not in declared:
                raise SchemaError(f"feature {f.name!r} references undeclared component {f.component!r}")
            index[f.component].append(i)
        object.__setattr__(self, "component_index", {c: tuple(v) for c, v in index.items()})
        object.__setattr__(self, "name_index", {n: i for i, n in enumerate(names)})

    @property
    def d(self) -> int:
        return len(self.features)

    def feature(self, name: str) -> FeatureSpec:
        return self.features[self.name_index[name]]

    def to_dict(self) -> dict:
        feats = []
        for f in self.features:
            entry: dict = {"name": f.name, "kind": f.kind, "component": f.component}
            if f.is_numeric:
                entry["range"] = list(f.numeric_range)
            else:
                entry["categories"] = list(f.categories)
            feats.append(entry)
        return {"features": feats, "components": list(self.components)}

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSchema":
        try:
            features = tuple(
                FeatureSpec(
                    name=entry["name"],
                    kind=entry["kind"],
                    component=entry["component"],
                    numeric_range=tuple(entry["range"]) if "range" in entry else None,
                    categories=tuple(entry["categories"]) if "categories" in entry else None,
                )
                for entry in doc["features"]
            )
            components = tuple(doc["components"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc
        return cls(features=features, components=components)


@dataclass(frozen=True)
class ObservationMask:
    """Per-feature observed flags: True = observed (set O), False = missing (set M)."""

    observed: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "observed", tuple(bool(b) for b in self.observed))

    @property
    def n_observed(self) -> int:
        return sum(self.observed)

    @classmethod
    def all_observed(cls, d: int) -> "ObservationMask":
        return cls(observed=(True,) * d)

    @classmethod
    def hiding(cls, d: int, hidden_positions: Sequence[int]) -> "ObservationMask":
        hidden = set(hidden_positions)
        return cls(observed=tuple(i not in hidden for i in range(d)))


@dataclass(frozen=True)
class PartialDesign:
    """One design row; missing entries carry the MISSING sentinel."""

    schema: FeatureSchema
    values: tuple[Value, ...]
    mask: ObservationMask

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != self.schema.d:
            raise SchemaError(f"expected {self.schema.d} values, got {len(self.values)}")
        if len(self.mask.observed) != self.schema.d:
            raise SchemaError(f"mask length {len(self.mask.observed)} != D={self.schema.d}")
        for i, (spec, value, obs) in enumerate(zip(self.schema.features, self.values, self.mask.observed)):
            if (value is MISSING) == obs:
                raise SchemaError(f"feature {spec.name!r}: sentinel/mask mismatch at position {i}")
            spec.validate_value(value)

    @property
    def missing_positions(self) -> tuple[int, ...]:
        return tuple(i for i, o in enumerate(self.mask.observed) if not o)

    def is_complete(self) -> bool:
        return all(self.mask.observed)


@dataclass(frozen=True)
class CompleteDesign(PartialDesign):
    """A fully specified design row (all-true mask, no sentinel anywhere)."""

    def __post_init__(self):
        super().__post_init__()
        if not all(self.mask.observed):
            raise SchemaError("CompleteDesign requires an all-true mask")

    @classmethod
    def from_values(cls, schema: FeatureSchema, values: Sequence[Value]) -> "CompleteDesign":
        return cls(schema=schema, values=tuple(values), mask=ObservationMask.all_observed(schema.d))


@dataclass(frozen=True)
class AssemblyGraph:
    """Components as nodes, physical-connection edges."""

    schema: FeatureSchema
    nodes: tuple[str, ...]
    edges: frozenset[frozenset]

    def __post_init__(self):
        node_set = set(self.nodes)
        if node_set != set(self.schema.components):
            raise SchemaError("graph node set does not match schema components")
        norm = set()
        for edge in self.edges:
            pair = tuple(edge)
            if len(pair) != 2:
                raise SchemaError(f"self-loop or malformed edge: {sorted(edge)}")
            a, b = pair
            for end in (a, b):
                if end not in node_set:
                    raise SchemaError(f"edge endpoint {end!r} is not a component")
            norm.add(frozenset((a, b)))
        object.__setattr__(self, "edges", frozenset(norm))

    def neighbors(self, node: str) -> tuple[str, ...]:
        out = []
        for edge in self.edges:
            a, b = tuple(edge)
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return tuple(sorted(out))

    def edge_list(self) -> list[tuple[str, str]]:
        """Edges as sorted pairs in a deterministic order."""
        return sorted(tuple(sorted(e)) for e in self.edges)

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "edges": [list(e) for e in self.edge_list()]}


def load_schema(path: str | Path) -> FeatureSchema:
    """Load and validate a feature schema from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return FeatureSchema.from_dict(doc)


def load_graph(path: str | Path, schema: FeatureSchema) -> AssemblyGraph:
    """Load and validate an assembly graph from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return graph_from_dict(doc, schema)


def graph_from_dict(doc: dict, schema: FeatureSchema) -> AssemblyGraph:
    try:
        nodes = tuple(doc["nodes"])
        edges = frozenset(frozenset(pair) for pair in doc["edges"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed graph document: {exc}") from exc
    return AssemblyGraph(schema=schema, nodes=nodes, edges=edges)


def apply_mask(design: CompleteDesign, mask: ObservationMask) -> PartialDesign:
    """Hide the mask-false positions of a complete design."""
    if len(mask.observed) != design.schema.d:
        raise SchemaError(f"mask length {len(mask.observed)} != D={design.schema.d}")
    values = tuple(v if obs else MISSING for v, obs in zip(design.values, mask.observed))
    return PartialDesign(schema=design.schema, values=values, mask=mask)


# --- CSV row serialization (missing cells are empty strings) ---------------


def _parse_cell(spec: FeatureSpec, cell: str) -> Value:
    if cell == "":
        return MISSING
    if spec.is_numeric:
        try:
            return float(cell)
        except ValueError as exc:
            raise SchemaError(f"feature {spec.name!r}: cannot parse {cell!r} as a number") from exc
    return cell


def _format_cell(value: Value) -> str:
    if value is MISSING:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def designs_to_csv(designs: Sequence[PartialDesign]) -> str:
    schema = designs[0].schema
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f.name for f in schema.features])
    for d in designs:
        writer.writerow([_format_cell(v) for v in d.values])
    return buf.getvalue()


def designs_from_csv(text: str, schema: FeatureSchema, complete: bool = True) -> list[PartialDesign]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = [f.name for f in schema.features]
    if header != expected:
        raise SchemaError(f"CSV header does not match schema feature names (got {header})")
    rows: list[PartialDesign] = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != schema.d:
            raise SchemaError(f"row {lineno}: expected {schema.d} cells, got {len(row)}")
        values = []
        for spec, cell in zip(schema.features, row):
            try:
                values.append(_parse_cell(spec, cell))
            except SchemaError as exc:
                raise SchemaError(f"row {lineno}: {exc}") from exc
        if complete:
            if any(v is MISSING for v in values):
                col = expected[values.index(MISSING)]
                raise SchemaError(f"row {lineno}, column {col!r}: empty cell in a complete dataset")
            try:
                rows.append(CompleteDesign.from_values(schema, values))
            except SchemaError as exc:
                raise SchemaError(f"row {lineno}: {exc}") from exc
        else:
            mask = ObservationMask(observed=tuple(v is not MISSING for v in values))
            rows.append(PartialDesign(schema=schema, values=tuple(values), mask=mask))
    return rows
