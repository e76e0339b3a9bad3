"""HTTP completion service contract tests."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from graphfill.data import SyntheticComponent, SyntheticConfig, generate_synthetic
from graphfill.diffusion import DenoiserConfig, GraphDiffusionImputer, NoiseSchedule, TrainingConfig
from graphfill.encoder import GraphEncoderConfig
from graphfill.fusion import FusionConfig
from graphfill.service import create_app

CFG = SyntheticConfig(
    components=(SyntheticComponent("A", 2), SyntheticComponent("B", 1)),
    n_rows=150,
    coupling=0.5,
    noise=0.2,
)


@pytest.fixture(scope="module")
def world():
    schema, graph, ds = generate_synthetic(CFG, seed=0)
    model = GraphDiffusionImputer(
        schema,
        graph,
        GraphEncoderConfig(variant="gatv2", hidden_dim=8, layers=1, heads=2, category_embed_dim=2),
        FusionConfig(d_token=8, fusion_heads=2, dropout=0.0),
        DenoiserConfig(blocks=1, width=16, time_dim=8, attn_heads=2),
        NoiseSchedule.quadratic(8),
    )
    model.fit(ds, TrainingConfig(epochs=3, batch_size=64), seed=0)
    return schema, ds, model


@pytest.fixture(scope="module")
def client(world):
    _, _, model = world
    return TestClient(create_app(model, model_version="test-v1"), raise_server_exceptions=False)


def full_row_payload(world):
    schema, ds, _ = world
    row = ds.rows[0]
    return {spec.name: row.values[j] for j, spec in enumerate(schema.features)}


class TestHealthAndSchema:
    def test_health(self, client):
        r = client.get("/v1/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok", "model_version": "test-v1"}

    def test_schema_includes_features_components_edges(self, client, world):
        schema, *_ = world
        doc = client.get("/v1/schema").json()
        assert [f["name"] for f in doc["features"]] == [f.name for f in schema.features]
        assert doc["components"] == list(schema.components)
        assert doc["graph_edges"] == [["A", "B"]]


class TestComplete:
    def test_basic_completion(self, client, world):
        schema, ds, _ = world
        observed = full_row_payload(world)
        hidden = schema.features[0].name
        del observed[hidden]
        r = client.post("/v1/complete", json={"observed": observed, "k": 4, "seed": 7})
        assert r.status_code == 200
        body = r.json()
        assert body["seed"] == 7 and body["k"] == 4
        assert len(body["completions"]) == 4
        for completion in body["completions"]:
            for name, v in observed.items():
                assert completion[name] == pytest.approx(v) if isinstance(v, float) else completion[name] == v
        assert hidden in body["summaries"]

    def test_numeric_summary_histogram_counts_equal_k(self, client, world):
        schema, *_ = world
        observed = full_row_payload(world)
        hidden = next(f.name for f in schema.features if f.is_numeric)
        del observed[hidden]
        body = client.post("/v1/complete", json={"observed": observed, "k": 9, "seed": 1}).json()
        summary = body["summaries"][hidden]
        assert summary["kind"] == "numeric"
        assert sum(summary["histogram"]["counts"]) == 9
        assert len(summary["histogram"]["counts"]) == 20

    def test_categorical_summary_counts(self, client, world):
        schema, *_ = world
        observed = full_row_payload(world)
        hidden = next(f.name for f in schema.features if not f.is_numeric)
        del observed[hidden]
        body = client.post("/v1/complete", json={"observed": observed, "k": 6, "seed": 1}).json()
        summary = body["summaries"][hidden]
        assert summary["kind"] == "categorical"
        assert sum(summary["counts"].values()) == 6
        assert summary["mode"] in summary["counts"]

    def test_unknown_feature_400_names_field(self, client):
        r = client.post("/v1/complete", json={"observed": {"bogus": 1.0}, "k": 2})
        assert r.status_code == 400
        body = r.json()
        assert body["field"] == "bogus"
        assert "bogus" in body["detail"]

    def test_invalid_value_400_names_field(self, client, world):
        schema, *_ = world
        name = next(f.name for f in schema.features if f.is_numeric)
        r = client.post("/v1/complete", json={"observed": {name: 1e9}, "k": 2})
        assert r.status_code == 400
        assert r.json()["field"] == name

    def test_all_observed_k1_is_200_echo(self, client, world):
        observed = full_row_payload(world)
        r = client.post("/v1/complete", json={"observed": observed, "k": 1, "seed": 0})
        assert r.status_code == 200
        assert len(r.json()["completions"]) == 1

    def test_all_observed_k_gt_1_is_422_with_copies(self, client, world):
        observed = full_row_payload(world)
        r = client.post("/v1/complete", json={"observed": observed, "k": 3, "seed": 0})
        assert r.status_code == 422
        body = r.json()
        assert len(body["completions"]) == 3
        first = body["completions"][0]
        assert all(c == first for c in body["completions"])

    def test_idempotent_for_fixed_seed(self, client, world):
        schema, *_ = world
        observed = full_row_payload(world)
        del observed[schema.features[0].name]
        payload = {"observed": observed, "k": 3, "seed": 42}
        a = client.post("/v1/complete", json=payload).json()
        b = client.post("/v1/complete", json=payload).json()
        assert a == b

    def test_seed_drawn_and_echoed_when_absent(self, client, world):
        schema, *_ = world
        observed = full_row_payload(world)
        del observed[schema.features[0].name]
        body = client.post("/v1/complete", json={"observed": observed, "k": 2}).json()
        assert isinstance(body["seed"], int)
        # replaying with the echoed seed reproduces the response
        replay = client.post(
            "/v1/complete", json={"observed": observed, "k": 2, "seed": body["seed"]}
        ).json()
        assert replay["completions"] == body["completions"]

    def test_k_bounds_enforced(self, client, world):
        observed = full_row_payload(world)
        assert client.post("/v1/complete", json={"observed": observed, "k": 0}).status_code == 422
        assert client.post("/v1/complete", json={"observed": observed, "k": 501}).status_code == 422

    def test_internal_error_returns_opaque_id(self, world):
        schema, ds, model = world

        class Broken:
            schema = model.schema
            graph = model.graph

            def sample(self, *a, **k):
                raise RuntimeError("boom")

        client = TestClient(create_app(Broken(), model_version="x"), raise_server_exceptions=False)
        observed = {schema.features[0].name: ds.rows[0].values[0]}
        r = client.post("/v1/complete", json={"observed": observed, "k": 2})
        assert r.status_code == 500
        body = r.json()
        assert body["detail"] == "internal error"
        assert "boom" not in str(body)
        assert len(body["id"]) == 32
