"""Shared fixtures and small builders used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from graphfill.schema import (
    AssemblyGraph,
    CompleteDesign,
    FeatureSchema,
    FeatureSpec,
    ObservationMask,
    apply_mask,
)
from graphfill.data import Dataset


def make_schema(n_numeric: int = 2, n_categorical: int = 1, components: int = 2) -> FeatureSchema:
    """A small mixed schema spreading features round-robin over components."""
    comp_names = tuple(f"C{i}" for i in range(components))
    features = []
    for j in range(n_numeric):
        features.append(
            FeatureSpec(
                name=f"num{j}",
                kind="numeric",
                component=comp_names[j % components],
                numeric_range=(0.0, 10.0),
            )
        )
    for j in range(n_categorical):
        features.append(
            FeatureSpec(
                name=f"cat{j}",
                kind="categorical",
                component=comp_names[j % components],
                categories=("a", "b", "c"),
            )
        )
    return FeatureSchema(features=tuple(features), components=comp_names)


def chain_graph(schema: FeatureSchema) -> AssemblyGraph:
    nodes = schema.components
    edges = frozenset(frozenset((nodes[i], nodes[i + 1])) for i in range(len(nodes) - 1))
    return AssemblyGraph(schema=schema, nodes=nodes, edges=edges)


def random_row(schema: FeatureSchema, rng: np.random.Generator) -> CompleteDesign:
    values = []
    for spec in schema.features:
        if spec.is_numeric:
            lo, hi = spec.numeric_range
            values.append(float(rng.uniform(lo, hi)))
        else:
            values.append(spec.categories[int(rng.integers(len(spec.categories)))])
    return CompleteDesign.from_values(schema, values)


def random_dataset(schema: FeatureSchema, n: int, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(schema=schema, rows=tuple(random_row(schema, rng) for _ in range(n)))


def random_partial(schema: FeatureSchema, rng: np.random.Generator, n_hidden: int = 1):
    """Returns (partial, truth) with n_hidden uniformly chosen hidden positions."""
    truth = random_row(schema, rng)
    hidden = rng.choice(schema.d, size=n_hidden, replace=False).tolist()
    mask = ObservationMask.hiding(schema.d, hidden)
    return apply_mask(truth, mask), truth


@pytest.fixture
def mixed_schema() -> FeatureSchema:
    return make_schema(n_numeric=3, n_categorical=2, components=2)


@pytest.fixture
def mixed_graph(mixed_schema) -> AssemblyGraph:
    return chain_graph(mixed_schema)
