"""Graph-guided diffusion imputation for parametric assembly designs."""

from importlib import resources

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
    load_graph,
    load_schema,
)

__version__ = "0.1.0"


def default_bike_schema_path():
    return resources.files("graphfill") / "assets" / "bike_schema.json"


def default_bike_graph_path():
    return resources.files("graphfill") / "assets" / "bike_graph.json"
