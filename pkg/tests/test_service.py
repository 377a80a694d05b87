"""HTTP layer: request validation, solver plumbing, error mapping."""

import pytest
from fastapi.testclient import TestClient

from ncsdp.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


SCALAR = {"kind": "scalar", "c": 1.0}


class TestHealth:
    def test_healthz(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}


class TestSolve:
    def test_scalar_solve_summary_shape(self, client):
        resp = client.post("/solve", json={"problem": SCALAR, "seed": 7})
        assert resp.status_code == 200
        body = resp.json()
        assert body["trace"] is None
        s = body["summary"]
        assert s["status"] == "converged"
        assert s["stop_reason"] in ("mu_min", "converged", "max_outer_iters")
        assert s["method"] == "pdipm"
        assert s["seed"] == 7
        assert s["problem"]["kind"] == "scalar"
        assert len(s["final_x"]) == 1
        assert s["outer_iters"] == len(s["outer"])
        assert "final_mu" in s["certificates"]
        mus = [rec["mu"] for rec in s["outer"]]
        assert all(a > b for a, b in zip(mus, mus[1:]))

    def test_trace_included_on_request(self, client):
        resp = client.post(
            "/solve", json={"problem": SCALAR, "include_trace": True}
        )
        assert resp.status_code == 200
        trace = resp.json()["trace"]
        assert isinstance(trace, list) and trace
        for key in ("k", "mu", "global_iter", "procedure", "merit_after"):
            assert key in trace[0]

    def test_psf_solve_with_budget(self, client):
        req = {
            "problem": {"kind": "psf", "m": 3, "n": 3, "q": 2, "r": 0.3},
            "seed": 2,
            "total_iteration_budget": 60,
        }
        resp = client.post("/solve", json=req)
        assert resp.status_code == 200
        s = resp.json()["summary"]
        assert s["problem"]["n_var"] == 18
        assert s["problem"]["matrix_order"] == 12
        assert s["inner_iters_total"] <= 60
        assert s["status"] in ("converged", "partial_progress")

    def test_primal_method(self, client):
        req = {"problem": SCALAR, "solver": {"method": "primal"}}
        resp = client.post("/solve", json=req)
        assert resp.status_code == 200
        s = resp.json()["summary"]
        assert s["method"] == "primal"
        assert s["counts"].get("dual_grad", 0) == 0

    def test_domain_error_maps_to_422(self, client):
        # q must stay below min(m, n) for the factorization benchmark
        req = {"problem": {"kind": "psf", "m": 3, "n": 3, "q": 3}}
        resp = client.post("/solve", json=req)
        assert resp.status_code == 422
        assert "q" in resp.json()["detail"]

    def test_payload_validation_422(self, client):
        resp = client.post("/solve", json={"problem": {"kind": "psf", "r": -1.0}})
        assert resp.status_code == 422
        resp = client.post("/solve", json={"solver": {"method": "newton"}})
        assert resp.status_code == 422

    def test_file_problem_round_trip(self, client):
        from ncsdp.benchmarks import PsfConfig, dumps_instance, generate_psf

        inst = generate_psf(PsfConfig(m=3, n=3, q=2, r=0.3), seed=5)
        req = {
            "problem": {"kind": "file", "content": dumps_instance(inst)},
            "seed": 5,
            "total_iteration_budget": 40,
        }
        resp = client.post("/solve", json=req)
        assert resp.status_code == 200
        assert resp.json()["summary"]["problem"]["kind"] == "file"

    def test_file_problem_needs_content(self, client):
        resp = client.post("/solve", json={"problem": {"kind": "file"}})
        assert resp.status_code == 422


class TestCompare:
    def test_rows_and_plots(self, client):
        req = {
            "problem": SCALAR,
            "seeds": [1, 2],
            "total_iteration_budget": 40,
            "workers": 2,
        }
        resp = client.post("/compare", json=req)
        assert resp.status_code == 200
        body = resp.json()
        rows = body["rows"]
        assert [(r["seed"], r["method"]) for r in rows] == [
            (1, "pdipm"), (1, "pdipm-no-nc"), (2, "pdipm"), (2, "pdipm-no-nc"),
        ]
        for row in rows:
            assert row["nc_count"] >= 0
            assert isinstance(row["final_f"], float)
        assert set(body["plots"]) == {
            "seed1_pdipm", "seed1_pdipm-no-nc", "seed2_pdipm", "seed2_pdipm-no-nc",
        }
        first = body["plots"]["seed1_pdipm"][0]
        assert first[0] == 1 and isinstance(first[2], str)

    def test_empty_seed_list_rejected(self, client):
        resp = client.post("/compare", json={"seeds": []})
        assert resp.status_code == 422


class TestVerify:
    def test_clean_scalar_passes(self, client):
        req = {"problem": SCALAR, "points": 4, "pairs": 10}
        resp = client.post("/verify", json=req)
        assert resp.status_code == 200
        body = resp.json()
        assert body["all_passed"] is True
        assert len(body["checks"]) == 10
        assert body["fault"] is None
        assert body["problem"]["kind"] == "scalar"

    def test_injected_fault_fails(self, client):
        req = {"problem": SCALAR, "points": 4, "pairs": 10, "fault": "grad-f"}
        resp = client.post("/verify", json=req)
        assert resp.status_code == 200
        body = resp.json()
        assert body["all_passed"] is False
        assert body["fault"] == "grad-f"
        failed = {c["name"] for c in body["checks"] if not c["passed"]}
        assert "objective-derivatives" in failed

    def test_unknown_fault_rejected(self, client):
        resp = client.post("/verify", json={"fault": "hess-f"})
        assert resp.status_code == 422
