import math

import pytest
from fastapi.testclient import TestClient

from quantchar.service.app import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


UNIFORM = {"kind": "uniform", "params": {"a": 0, "b": 1}}
DIRAC_HALF = {"kind": "dirac", "params": {"c": 0.5}}
TWO_ATOMS = {"kind": "discrete", "params": {}, "atoms": [[0.0], [1.0]], "weights": [0.5, 0.5]}


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_qerr_analytic(client):
    r = client.post("/qerr", json={"measure": UNIFORM, "grid": [0.25, 0.75], "p": 2})
    assert r.status_code == 200
    body = r.json()
    assert body["method"] == "analytic"
    assert body["value"] == pytest.approx(math.sqrt(1 / 48), rel=1e-12)
    assert body["std_error"] is None


def test_qerr_mc_path(client):
    r = client.post(
        "/qerr",
        json={"measure": UNIFORM, "grid": [0.5], "p": 3, "mc_samples": 20000, "seed": 1},
    )
    body = r.json()
    assert body["method"] == "mc" and body["std_error"] > 0


def test_qerr_norm_order_wire_format(client):
    r = client.post(
        "/qerr",
        json={"measure": TWO_ATOMS, "grid": [[0.0]], "p": 1, "r": "inf"},
    )
    assert r.json()["value"] == pytest.approx(0.5)


def test_lloyd_discrete_support(client):
    r = client.post("/lloyd", json={"measure": TWO_ATOMS, "n": 2})
    body = r.json()
    assert sorted(x[0] for x in body["grid"]) == [0.0, 1.0]
    assert body["distortion"] == 0.0
    assert body["distinct_points"] == 2


def test_lloyd_pool_backed(client):
    r = client.post(
        "/lloyd",
        json={"measure": UNIFORM, "n": 2, "iters": 150, "seed": 3, "pool_size": 100_000},
    )
    grid = sorted(x[0] for x in r.json()["grid"])
    assert grid == pytest.approx([0.25, 0.75], abs=0.01)


def test_qdist_report(client):
    r = client.post(
        "/qdist", json={"mu": UNIFORM, "nu": DIRAC_HALF, "n": 1, "p": 1, "restarts": 3, "seed": 0}
    )
    body = r.json()
    assert body["lower_bound"] == pytest.approx(0.25, abs=1e-6)
    assert body["pitch"] > 0
    assert body["search_box"][0] < body["search_box"][1]


def test_wasserstein_quantile(client):
    r = client.post("/wasserstein", json={"mu": UNIFORM, "nu": DIRAC_HALF, "p": 1})
    assert r.json() == {"value": 0.25, "plan_kind": "quantile_1d"}


def test_wasserstein_assignment(client):
    r = client.post(
        "/wasserstein/assignment",
        json={"xs": [[0, 0], [1, 0]], "ys": [[0, 1], [1, 1]], "p": 2},
    )
    assert r.json()["value"] == pytest.approx(1.0)
    assert r.json()["plan_kind"] == "assignment"


def test_covering_certificate(client):
    r = client.post("/covering", json={"dim": 2, "r": 1, "samples": 20000, "seed": 1})
    body = r.json()
    assert body["valid"] is True
    assert body["max_min_distance"] <= 1 + 1e-9
    assert sorted(body["centers"]) == [[-0.5, 0.5], [0.5, -0.5]]


def test_covering_unsupported_pair(client):
    r = client.post("/covering", json={"dim": 9, "r": 2, "samples": 100, "seed": 0})
    assert r.status_code == 400
    assert "no construction known" in r.json()["detail"]


def test_mollify_rows(client):
    r = client.post(
        "/mollify",
        json={"measure": {"kind": "normal", "params": {"m": 0, "s": 1}}, "p": 2, "eps": 0.05, "xs": [0.0, 1.0]},
    )
    body = r.json()
    assert body["c_phi"] == pytest.approx(0.5, abs=1e-8)
    assert body["rows"][0][1] == pytest.approx(0.3989, abs=0.004)
    assert body["rows"][1][1] == pytest.approx(0.2420, abs=0.003)


def test_cdf_extract_rows(client):
    r = client.post("/cdf-extract", json={"measure": UNIFORM, "xs": [0.25, 0.75]})
    rows = r.json()["rows"]
    assert rows[0][1] == pytest.approx(0.25, abs=1e-4)
    assert rows[1][1] == pytest.approx(0.75, abs=1e-4)


def test_counterexample_experiment(client):
    r = client.post("/experiments/counterexample", json={"n_max": 3, "grid_budget": 300})
    body = r.json()
    assert body["passed"] is True
    assert [row["n"] for row in body["rows"]] == [1, 2, 3]
    assert body["columns"][0] == "n"


def test_grid_law_experiment(client):
    r = client.post(
        "/experiments/grid-law", json={"Ns": [10, 25], "pool_size": 100_000, "seed": 1}
    )
    body = r.json()
    ks = [row["kolmogorov_distance"] for row in body["rows"]]
    assert ks[1] < ks[0]
    assert body["passed"] is True


def test_equivalence_experiment(client):
    r = client.post("/experiments/equivalence", json={"family": "widening-uniform", "n_list": [1, 2]})
    body = r.json()
    assert body["passed"] is True
    assert body["rows"][0]["wasserstein"] == pytest.approx(0.5)


def test_validation_error_is_422(client):
    r = client.post("/qerr", json={"measure": {"kind": "cauchy"}, "grid": [0.0], "p": 2})
    assert r.status_code == 422


def test_domain_error_is_400(client):
    r = client.post(
        "/qerr", json={"measure": {"kind": "uniform", "params": {"a": 1, "b": 0}}, "grid": [0.0], "p": 2}
    )
    assert r.status_code == 400
    assert "a < b" in r.json()["detail"]
