"""HTTP surface tests: every endpoint group, auth gating, and the
error-to-status table.

These drive the FastAPI app in-process with a TestClient against fully
started services, so jobs submitted over HTTP really execute.
"""

import time

import pytest
from fastapi.testclient import TestClient

from conftest import login as _login
from helpers import wait_until
from stagework import errors as err
from stagework import fixtures
from stagework.api import ERROR_STATUS, create_app, status_for

TERMINAL = ("completed", "failed")


def _make_workflow(client, headers, fixture_fn=fixtures.single_echo, **kwargs):
    definition, scripts = fixture_fn(**kwargs)
    r = client.post("/api/workflows", json=definition, headers=headers)
    assert r.status_code == 201, r.text
    wf = r.json()
    for name, text in scripts.items():
        put = client.put(f"/api/workflows/{wf['id']}/scripts/{name}",
                         content=text.encode(), headers=headers)
        assert put.status_code == 200, put.text
    return wf


def _submit(client, headers, wf_id, inputs=None, **extra):
    payload = {"workflow_id": wf_id, "inputs": inputs or {}}
    payload.update(extra)
    r = client.post("/api/jobs", json=payload, headers=headers)
    assert r.status_code == 201, r.text
    return r.json()


def _get_job(client, headers, job_id):
    r = client.get(f"/api/jobs/{job_id}", headers=headers)
    assert r.status_code == 200, r.text
    return r.json()


def _wait_job(client, headers, job_id, timeout=30.0):
    wait_until(
        lambda: _get_job(client, headers, job_id)["verdict"] in TERMINAL,
        timeout=timeout)
    return _get_job(client, headers, job_id)


def _sleep_definition(seconds, name="sleeper"):
    return {"name": name,
            "stages": [{"name": "slow",
                        "command_template": f"sleep {seconds}"}]}


def _chain_definition():
    return {"name": "chain", "stages": [
        {"name": "first", "command_template": "sleep 1"},
        {"name": "second", "command_template": "true",
         "dependencies": [{"upstream": "first",
                           "condition": {"kind": "success"}}]},
    ]}


# --------------------------------------------------------------------- auth


class TestAuthEndpoints:
    def test_login_returns_token_and_identity(self, client, alice):
        r = client.post("/api/auth/login",
                        json={"username": "alice", "password": "alice-pw"})
        assert r.status_code == 200
        body = r.json()
        assert body["username"] == "alice"
        assert body["is_admin"] is False
        assert body["expires_in"] > 0
        assert len(body["token"]) == 64

    def test_wrong_password_and_unknown_user_are_indistinguishable(
            self, client, alice):
        wrong = client.post("/api/auth/login",
                            json={"username": "alice", "password": "nope"})
        ghost = client.post("/api/auth/login",
                            json={"username": "nobody", "password": "nope"})
        assert wrong.status_code == ghost.status_code == 401
        # Byte-identical bodies: the response must not leak which part
        # of the credential pair was wrong.
        assert wrong.content == ghost.content

    def test_missing_token_rejected(self, client):
        r = client.get("/api/jobs")
        assert r.status_code == 401
        assert r.json()["error"] == "Unauthenticated"

    @pytest.mark.parametrize("header", ["Basic abc", "Bearer", "token xyz"])
    def test_malformed_authorization_header(self, client, header):
        r = client.get("/api/jobs", headers={"Authorization": header})
        assert r.status_code == 401

    def test_garbage_token_rejected(self, client):
        r = client.get("/api/jobs",
                       headers={"Authorization": "Bearer deadbeef"})
        assert r.status_code == 401

    def test_logout_revokes_token(self, client, as_alice):
        assert client.get("/api/users/me",
                          headers=as_alice).status_code == 200
        assert client.post("/api/auth/logout",
                           headers=as_alice).status_code == 200
        assert client.get("/api/users/me",
                          headers=as_alice).status_code == 401

    def test_whoami(self, client, as_alice):
        body = client.get("/api/users/me", headers=as_alice).json()
        assert body == {"username": "alice", "is_admin": False,
                        "disabled": False, "groups": []}

    def test_domain_error_body_shape(self, client, as_alice):
        r = client.get("/api/jobs/999", headers=as_alice)
        assert r.status_code == 404
        assert set(r.json()) == {"error", "detail"}


# ------------------------------------------------------------------ cluster


class TestClusterEndpoints:
    def test_summary_shape(self, client, as_alice):
        body = client.get("/api/cluster/summary", headers=as_alice).json()
        for key in ("nodes_online", "nodes_offline", "utilization",
                    "jobs_running", "jobs_queued", "disk_available_bytes",
                    "nodes", "queue"):
            assert key in body
        assert body["nodes_online"] == 1
        names = [n["name"] for n in body["nodes"]]
        assert "node1" in names
        assert body["queue"] == []

    def test_summary_queue_lists_active_jobs(self, client, as_alice):
        wf = _make_workflow(client, as_alice, lambda: (_sleep_definition(30), {}))
        job = _submit(client, as_alice, wf["id"])

        def queued():
            s = client.get("/api/cluster/summary", headers=as_alice).json()
            return len(s["queue"]) > 0
        wait_until(queued, timeout=10)
        entry = client.get("/api/cluster/summary",
                           headers=as_alice).json()["queue"][0]
        assert entry["owner"] == "alice"
        assert entry["state"] in ("Queued", "Running", "Held", "Suspended")
        assert entry["cores"] >= 1
        client.post(f"/api/jobs/{job['id']}/cancel", headers=as_alice)
        _wait_job(client, as_alice, job["id"])

    def test_nodes_visible_to_regular_users(self, client, as_alice):
        body = client.get("/api/cluster/nodes", headers=as_alice).json()
        assert body[0]["cores_total"] == 4
        assert body[0]["state"] == "online"

    def test_node_management_is_admin_only(self, client, as_alice):
        payload = {"name": "n9", "cores": 2, "memory": 1 << 30}
        assert client.post("/api/cluster/nodes", json=payload,
                           headers=as_alice).status_code == 403
        assert client.put("/api/cluster/nodes/node1",
                          json={"state": "offline"},
                          headers=as_alice).status_code == 403
        assert client.delete("/api/cluster/nodes/node1",
                             headers=as_alice).status_code == 403

    def test_node_lifecycle_as_admin(self, client, as_admin):
        payload = {"name": "n9", "cores": 2, "memory": 1 << 30}
        r = client.post("/api/cluster/nodes", json=payload, headers=as_admin)
        assert r.status_code == 201
        assert r.json()["cores_total"] == 2
        dup = client.post("/api/cluster/nodes", json=payload,
                          headers=as_admin)
        assert dup.status_code == 400

        off = client.put("/api/cluster/nodes/n9", json={"state": "offline"},
                         headers=as_admin)
        assert off.json()["state"] == "offline"
        bad = client.put("/api/cluster/nodes/n9", json={"state": "broken"},
                         headers=as_admin)
        assert bad.status_code == 400

        assert client.delete("/api/cluster/nodes/n9",
                             headers=as_admin).status_code == 200
        gone = client.put("/api/cluster/nodes/n9", json={"state": "online"},
                          headers=as_admin)
        assert gone.status_code == 404

    def test_queue_lifecycle(self, client, as_alice, as_admin):
        assert client.post("/api/cluster/queues", json={"name": "gpu"},
                           headers=as_alice).status_code == 403
        r = client.post("/api/cluster/queues",
                        json={"name": "gpu", "max_queued": 5},
                        headers=as_admin)
        assert r.status_code == 201
        assert r.json() == {"name": "gpu", "enabled": True,
                            "max_walltime": None, "max_queued": 5}
        dup = client.post("/api/cluster/queues", json={"name": "gpu"},
                          headers=as_admin)
        assert dup.status_code == 400

        names = [q["name"] for q in
                 client.get("/api/cluster/queues", headers=as_alice).json()]
        assert {"batch", "gpu"} <= set(names)

        upd = client.put("/api/cluster/queues/gpu", json={"enabled": False},
                         headers=as_admin)
        assert upd.json()["enabled"] is False
        missing = client.put("/api/cluster/queues/nope", json={},
                             headers=as_admin)
        assert missing.status_code == 404

        assert client.delete("/api/cluster/queues/gpu",
                             headers=as_admin).status_code == 200
        protected = client.delete("/api/cluster/queues/batch",
                                  headers=as_admin)
        assert protected.status_code == 409

    def test_settings_admin_only_roundtrip(self, client, as_alice, as_admin):
        assert client.get("/api/cluster/settings",
                          headers=as_alice).status_code == 403
        body = client.get("/api/cluster/settings", headers=as_admin).json()
        assert body["default_queue"] == "batch"
        upd = client.put("/api/cluster/settings",
                         json={"grace_seconds": 0.2}, headers=as_admin)
        assert upd.json()["grace_seconds"] == 0.2
        again = client.get("/api/cluster/settings", headers=as_admin).json()
        assert again["grace_seconds"] == 0.2


# ---------------------------------------------------------------- workflows


class TestWorkflowEndpoints:
    def test_create_and_get(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        assert wf["owner"] == "alice"
        assert wf["name"] == "echo-text"
        got = client.get(f"/api/workflows/{wf['id']}", headers=as_alice)
        assert got.status_code == 200
        assert got.json()["id"] == wf["id"]

    def test_invalid_definition_rejected(self, client, as_alice):
        broken = {"name": "broken", "stages": [
            {"name": "a", "command_template": "true",
             "dependencies": [{"upstream": "ghost",
                               "condition": {"kind": "success"}}]}]}
        r = client.post("/api/workflows", json=broken, headers=as_alice)
        assert r.status_code == 400
        assert r.json()["error"] == "InvalidWorkflow"
        assert "ghost" in r.json()["detail"]

    def test_malformed_definition_rejected(self, client, as_alice):
        # A stage without command_template is structural garbage; it must
        # come back as a 400, never a 500.
        broken = {"name": "broken", "description": "",
                  "stages": [{"name": "a"}]}
        r = client.post("/api/workflows", json=broken, headers=as_alice)
        assert r.status_code == 400
        assert r.json()["error"] == "InvalidWorkflow"

    def test_other_users_workflow_reads_as_404(self, client, as_alice, as_bob):
        wf = _make_workflow(client, as_alice)
        r = client.get(f"/api/workflows/{wf['id']}", headers=as_bob)
        assert r.status_code == 404
        listing = client.get("/api/workflows", headers=as_bob).json()
        assert wf["id"] not in [w["id"] for w in listing]

    def test_update_and_delete(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        definition, _ = fixtures.single_echo()
        definition["name"] = "renamed"
        upd = client.put(f"/api/workflows/{wf['id']}", json=definition,
                         headers=as_alice)
        assert upd.status_code == 200
        assert upd.json()["name"] == "renamed"
        assert upd.json()["id"] == wf["id"]

        assert client.delete(f"/api/workflows/{wf['id']}",
                             headers=as_alice).status_code == 200
        assert client.get(f"/api/workflows/{wf['id']}",
                          headers=as_alice).status_code == 404

    def test_share_view_then_edit(self, client, as_alice, as_bob):
        wf = _make_workflow(client, as_alice)
        url = f"/api/workflows/{wf['id']}"
        assert client.post(f"{url}/share", json={"user": "bob"},
                           headers=as_alice).status_code == 200
        assert client.get(url, headers=as_bob).status_code == 200

        definition, _ = fixtures.single_echo()
        denied = client.put(url, json=definition, headers=as_bob)
        assert denied.status_code == 403

        client.post(f"{url}/share", json={"user": "bob", "level": "edit"},
                    headers=as_alice)
        assert client.put(url, json=definition, headers=as_bob).status_code == 200

    def test_share_requires_edit_and_valid_level(self, client, as_alice,
                                                 as_bob):
        wf = _make_workflow(client, as_alice)
        url = f"/api/workflows/{wf['id']}/share"
        stranger = client.post(url, json={"user": "alice"}, headers=as_bob)
        assert stranger.status_code == 404
        bad = client.post(url, json={"user": "bob", "level": "boss"},
                          headers=as_alice)
        assert bad.status_code == 400

    def test_export_is_deterministic_and_imports(self, client, as_alice,
                                                 as_bob):
        wf = _make_workflow(client, as_alice, fixtures.docking_pipeline)
        url = f"/api/workflows/{wf['id']}/export"
        one = client.get(url, headers=as_alice)
        two = client.get(url, headers=as_alice)
        assert one.status_code == 200
        assert one.headers["content-type"].startswith("application/zip")
        assert one.content == two.content

        imported = client.post(
            "/api/workflows/import",
            files={"file": ("wf.zip", one.content, "application/zip")},
            headers=as_bob)
        assert imported.status_code == 201
        body = imported.json()
        assert body["owner"] == "bob"
        assert body["id"] != wf["id"]
        assert body["name"] == wf["name"]
        scripts = client.get(f"/api/workflows/{body['id']}/scripts",
                             headers=as_bob).json()
        assert "run_dock.sh" in scripts

    def test_import_rejects_garbage(self, client, as_alice):
        r = client.post("/api/workflows/import",
                        files={"file": ("x.zip", b"not a zip", "application/zip")},
                        headers=as_alice)
        assert r.status_code == 400

    def test_script_endpoints(self, client, as_alice, as_bob):
        wf = _make_workflow(client, as_alice)
        base = f"/api/workflows/{wf['id']}/scripts"
        put = client.put(f"{base}/setup.sh", content=b"#!/bin/sh\necho s\n",
                         headers=as_alice)
        assert put.status_code == 200
        got = client.get(f"{base}/setup.sh", headers=as_alice)
        assert got.content == b"#!/bin/sh\necho s\n"
        assert got.headers["content-type"].startswith("text/plain")
        assert client.get(base, headers=as_alice).json() == ["setup.sh"]

        assert client.get(f"{base}/missing.sh",
                          headers=as_alice).status_code == 400
        # No access at all reads as an unknown workflow.
        assert client.get(f"{base}/setup.sh",
                          headers=as_bob).status_code == 404

    def test_profile_endpoints(self, client, as_alice, as_bob):
        wf = _make_workflow(client, as_alice)
        base = f"/api/workflows/{wf['id']}/profiles"
        made = client.post(base, json={"name": "loud",
                                       "values": {"message": "HEY"}},
                           headers=as_alice)
        assert made.status_code == 201
        pid = made.json()["id"]
        assert made.json()["values"] == {"message": "HEY"}

        assert [p["id"] for p in
                client.get(base, headers=as_alice).json()] == [pid]
        upd = client.put(f"{base}/{pid}",
                         json={"name": "soft", "values": {"message": "shh"}},
                         headers=as_alice)
        assert upd.json()["name"] == "soft"

        assert client.get(f"{base}/{pid}", headers=as_bob).status_code == 404
        assert client.get(f"{base}/nope", headers=as_alice).status_code == 404
        assert client.delete(f"{base}/{pid}",
                             headers=as_alice).status_code == 200
        assert client.get(f"{base}/{pid}",
                          headers=as_alice).status_code == 404


# --------------------------------------------------------------------- jobs


class TestJobEndpoints:
    def test_submit_poll_and_fetch_output(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        job = _submit(client, as_alice, wf["id"],
                      {"message": "hello endpoint"})
        done = _wait_job(client, as_alice, job["id"])
        assert done["verdict"] == "completed"
        run = done["stage_runs"]["say"]
        assert run["state"] == "succeeded"

        listing = client.get("/api/jobs", headers=as_alice).json()
        assert job["id"] in [j["id"] for j in listing]

        out = client.get(f"/api/jobs/{job['id']}/files/{run['stdout_file']}",
                         headers=as_alice)
        assert out.status_code == 200
        assert out.content == b"hello endpoint\n"

    def test_submit_unknown_workflow(self, client, as_alice):
        r = client.post("/api/jobs", json={"workflow_id": "nope"},
                        headers=as_alice)
        assert r.status_code == 404

    def test_submit_unknown_parameter(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        r = client.post("/api/jobs",
                        json={"workflow_id": wf["id"],
                              "inputs": {"bogus": 1}},
                        headers=as_alice)
        assert r.status_code == 400
        assert r.json()["error"] == "UnknownParameter"

    def test_malformed_body_is_400(self, client, as_alice):
        r = client.post("/api/jobs", json={"inputs": {}}, headers=as_alice)
        assert r.status_code == 400
        assert r.json()["error"] == "ValidationError"

    def test_cancel_running_then_repeat_cancel_conflicts(self, client,
                                                         as_alice):
        wf = _make_workflow(client, as_alice,
                            lambda: (_sleep_definition(30), {}))
        job = _submit(client, as_alice, wf["id"])
        wait_until(lambda: _get_job(client, as_alice, job["id"])
                   ["stage_runs"]["slow"]["state"] == "running", timeout=10)
        first = client.post(f"/api/jobs/{job['id']}/cancel", headers=as_alice)
        assert first.status_code == 200
        done = _wait_job(client, as_alice, job["id"])
        assert done["verdict"] == "failed"
        assert "canceled" in done["verdict_reason"]
        again = client.post(f"/api/jobs/{job['id']}/cancel", headers=as_alice)
        assert again.status_code == 409

    def test_hold_and_release(self, client, as_alice):
        wf = _make_workflow(client, as_alice,
                            lambda: (_chain_definition(), {}))
        job = _submit(client, as_alice, wf["id"])
        wait_until(lambda: _get_job(client, as_alice, job["id"])
                   ["stage_runs"]["first"]["state"] == "running", timeout=10)
        held = client.post(f"/api/jobs/{job['id']}/hold", headers=as_alice)
        assert held.status_code == 200
        assert held.json()["held"] is True

        wait_until(lambda: _get_job(client, as_alice, job["id"])
                   ["stage_runs"]["first"]["state"] == "succeeded",
                   timeout=10)
        time.sleep(0.3)
        snap = _get_job(client, as_alice, job["id"])
        assert snap["verdict"] == "running"
        assert snap["stage_runs"]["second"]["cluster_job_id"] is None

        released = client.post(f"/api/jobs/{job['id']}/release",
                               headers=as_alice)
        assert released.status_code == 200
        assert released.json()["held"] is False
        done = _wait_job(client, as_alice, job["id"])
        assert done["verdict"] == "completed"

    def test_repeat_endpoint(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        job = _submit(client, as_alice, wf["id"], {"message": "orig"})
        _wait_job(client, as_alice, job["id"])

        rep = client.post(f"/api/jobs/{job['id']}/repeat", headers=as_alice)
        assert rep.status_code == 201
        assert rep.json()["id"] != job["id"]
        done = _wait_job(client, as_alice, rep.json()["id"])
        assert done["verdict"] == "completed"
        assert done["inputs"] == {"message": "orig"}

        bad = client.post(f"/api/jobs/{job['id']}/repeat",
                          json={"from_stage": "nope"}, headers=as_alice)
        assert bad.status_code == 404

    def test_delete_job(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        job = _submit(client, as_alice, wf["id"])
        _wait_job(client, as_alice, job["id"])
        assert client.delete(f"/api/jobs/{job['id']}",
                             headers=as_alice).status_code == 200
        assert client.get(f"/api/jobs/{job['id']}",
                          headers=as_alice).status_code == 404

    def test_delete_running_job_conflicts(self, client, as_alice):
        wf = _make_workflow(client, as_alice,
                            lambda: (_sleep_definition(30), {}))
        job = _submit(client, as_alice, wf["id"])
        r = client.delete(f"/api/jobs/{job['id']}", headers=as_alice)
        assert r.status_code == 409
        client.post(f"/api/jobs/{job['id']}/cancel", headers=as_alice)
        _wait_job(client, as_alice, job["id"])

    def test_share_job_capped_at_view(self, client, as_alice, as_bob):
        wf = _make_workflow(client, as_alice)
        job = _submit(client, as_alice, wf["id"])
        _wait_job(client, as_alice, job["id"])

        assert client.get(f"/api/jobs/{job['id']}",
                          headers=as_bob).status_code == 404
        shared = client.post(f"/api/jobs/{job['id']}/share",
                             json={"user": "bob", "level": "run"},
                             headers=as_alice)
        assert shared.status_code == 200
        assert client.get(f"/api/jobs/{job['id']}",
                          headers=as_bob).status_code == 200
        # The grant is capped at read access: acting on the job is denied.
        denied = client.post(f"/api/jobs/{job['id']}/repeat", headers=as_bob)
        assert denied.status_code == 403

        missing_user = client.post(f"/api/jobs/{job['id']}/share",
                                   json={"level": "view"}, headers=as_alice)
        assert missing_user.status_code == 400

    def test_other_users_job_reads_as_404(self, client, as_alice, as_bob):
        wf = _make_workflow(client, as_alice)
        job = _submit(client, as_alice, wf["id"])
        _wait_job(client, as_alice, job["id"])
        assert client.get(f"/api/jobs/{job['id']}",
                          headers=as_bob).status_code == 404
        assert client.get("/api/jobs", headers=as_bob).json() == []

    def test_job_file_traversal_and_missing(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        job = _submit(client, as_alice, wf["id"])
        _wait_job(client, as_alice, job["id"])
        sneaky = client.get(
            f"/api/jobs/{job['id']}/files/..%2f..%2fsecret.txt",
            headers=as_alice)
        assert sneaky.status_code == 403
        missing = client.get(f"/api/jobs/{job['id']}/files/say/nope.log",
                             headers=as_alice)
        assert missing.status_code == 404

    def test_batch_submission(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        csv = "message\nfirst\nsecond\n"
        r = client.post("/api/jobs/batch",
                        data={"workflow_id": wf["id"]},
                        files={"file": ("rows.csv", csv.encode(), "text/csv")},
                        headers=as_alice)
        assert r.status_code == 201, r.text
        ids = r.json()["job_ids"]
        assert len(ids) == 2
        messages = []
        for job_id in ids:
            done = _wait_job(client, as_alice, job_id)
            assert done["verdict"] == "completed"
            messages.append(done["inputs"]["message"])
        assert messages == ["first", "second"]

    def test_batch_rejects_unknown_column(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        r = client.post("/api/jobs/batch",
                        data={"workflow_id": wf["id"]},
                        files={"file": ("rows.csv", b"message,bogus\na,b\n",
                                        "text/csv")},
                        headers=as_alice)
        assert r.status_code == 400
        assert r.json()["error"] == "UnknownColumn"


# -------------------------------------------------------------- alterations


class TestAlterationEndpoints:
    def test_request_and_decide_flow(self, client, as_alice, as_bob,
                                     as_admin):
        wf = _make_workflow(client, as_alice,
                            lambda: (_sleep_definition(30), {}))
        job = _submit(client, as_alice, wf["id"])
        made = client.post(f"/api/jobs/{job['id']}/alterations",
                           json={"changes": {"walltime": 7}},
                           headers=as_alice)
        assert made.status_code == 201
        request = made.json()
        assert request["state"] == "pending"
        assert request["requester"] == "alice"

        assert len(client.get("/api/alterations",
                              headers=as_alice).json()) == 1
        assert client.get("/api/alterations", headers=as_bob).json() == []
        assert len(client.get("/api/alterations",
                              headers=as_admin).json()) == 1

        non_admin = client.post(f"/api/alterations/{request['id']}/decide",
                                json={"approve": True}, headers=as_alice)
        assert non_admin.status_code == 403

        decided = client.post(f"/api/alterations/{request['id']}/decide",
                              json={"approve": True}, headers=as_admin)
        assert decided.status_code == 200
        assert decided.json()["state"] == "approved"
        assert decided.json()["decided_by"] == "boss"

        twice = client.post(f"/api/alterations/{request['id']}/decide",
                            json={"approve": False}, headers=as_admin)
        assert twice.status_code == 409

        client.post(f"/api/jobs/{job['id']}/cancel", headers=as_alice)
        _wait_job(client, as_alice, job["id"])

    def test_bad_requests(self, client, as_alice):
        wf = _make_workflow(client, as_alice)
        job = _submit(client, as_alice, wf["id"])
        _wait_job(client, as_alice, job["id"])
        terminal = client.post(f"/api/jobs/{job['id']}/alterations",
                               json={"changes": {"walltime": 5}},
                               headers=as_alice)
        assert terminal.status_code == 409

        wf2 = _make_workflow(client, as_alice,
                             lambda: (_sleep_definition(30, "s2"), {}))
        running = _submit(client, as_alice, wf2["id"])
        unknown = client.post(f"/api/jobs/{running['id']}/alterations",
                              json={"changes": {"nice": 10}},
                              headers=as_alice)
        assert unknown.status_code == 400
        client.post(f"/api/jobs/{running['id']}/cancel", headers=as_alice)
        _wait_job(client, as_alice, running["id"])


# ----------------------------------------------------------- users & groups


class TestUserEndpoints:
    def test_listing_is_admin_only(self, client, as_alice, as_admin):
        assert client.get("/api/users", headers=as_alice).status_code == 403
        users = client.get("/api/users", headers=as_admin).json()
        assert "alice" in [u["username"] for u in users]

    def test_create_user_and_duplicate(self, client, as_alice, as_admin):
        payload = {"username": "carol", "password": "carol-pw"}
        assert client.post("/api/users", json=payload,
                           headers=as_alice).status_code == 403
        made = client.post("/api/users", json=payload, headers=as_admin)
        assert made.status_code == 201
        assert made.json()["username"] == "carol"
        assert _login(client, "carol", "carol-pw")
        dup = client.post("/api/users", json=payload, headers=as_admin)
        assert dup.status_code == 400

    def test_disable_revokes_sessions(self, client, as_bob, as_admin):
        assert client.get("/api/users/me", headers=as_bob).status_code == 200
        r = client.put("/api/users/bob", json={"disabled": True},
                       headers=as_admin)
        assert r.json()["disabled"] is True
        assert client.get("/api/users/me", headers=as_bob).status_code == 401
        login = client.post("/api/auth/login",
                            json={"username": "bob", "password": "bob-pw"})
        assert login.status_code == 403

        client.put("/api/users/bob", json={"disabled": False},
                   headers=as_admin)
        assert _login(client, "bob", "bob-pw")

    def test_password_change(self, client, as_admin):
        client.put("/api/users/bob", json={"password": "fresh-pw"},
                   headers=as_admin)
        old = client.post("/api/auth/login",
                          json={"username": "bob", "password": "bob-pw"})
        assert old.status_code == 401
        assert _login(client, "bob", "fresh-pw")

    def test_update_unknown_user(self, client, as_admin):
        r = client.put("/api/users/nobody", json={"disabled": True},
                       headers=as_admin)
        assert r.status_code == 404


class TestGroupEndpoints:
    def test_group_lifecycle(self, client, as_alice, as_bob):
        made = client.post("/api/groups", json={"name": "lab"},
                           headers=as_alice)
        assert made.status_code == 201
        assert made.json()["members"] == ["alice"]

        upd = client.put("/api/groups/lab/members",
                         json={"username": "bob"}, headers=as_alice)
        assert "bob" in upd.json()["members"]

        groups = client.get("/api/groups", headers=as_bob).json()
        assert "lab" in [g["name"] for g in groups]

        non_owner = client.put("/api/groups/lab/members",
                               json={"username": "alice", "member": False},
                               headers=as_bob)
        assert non_owner.status_code == 403

        assert client.delete("/api/groups/lab",
                             headers=as_alice).status_code == 200
        assert client.delete("/api/groups/lab",
                             headers=as_alice).status_code == 404

    def test_group_share_grants_access(self, client, as_alice, as_bob):
        wf = _make_workflow(client, as_alice)
        client.post("/api/groups", json={"name": "team"}, headers=as_alice)
        client.put("/api/groups/team/members", json={"username": "bob"},
                   headers=as_alice)
        assert client.get(f"/api/workflows/{wf['id']}",
                          headers=as_bob).status_code == 404
        client.post(f"/api/workflows/{wf['id']}/share",
                    json={"group": "team"}, headers=as_alice)
        assert client.get(f"/api/workflows/{wf['id']}",
                          headers=as_bob).status_code == 200


# ----------------------------------------------------------------- plumbing


def _all_domain_errors():
    found, stack = set(), [err.StageworkError]
    while stack:
        for sub in stack.pop().__subclasses__():
            if sub not in found:
                found.add(sub)
                stack.append(sub)
    return found


class TestErrorTable:
    def test_every_domain_error_maps_to_a_client_status(self):
        assert len(_all_domain_errors()) >= 30
        for cls in sorted(_all_domain_errors(), key=lambda c: c.__name__):
            instance = cls.__new__(cls)
            assert status_for(instance) in (400, 401, 403, 404, 409), \
                cls.__name__

    def test_unmapped_exception_is_server_error(self):
        assert status_for(RuntimeError("boom")) == 500

    def test_table_statuses_are_sane(self):
        assert set(ERROR_STATUS.values()) <= {400, 401, 403, 404, 409}


class TestFrontendMount:
    def test_static_files_served_when_present(self, services, admin,
                                              tmp_path):
        site = tmp_path / "site"
        site.mkdir()
        (site / "index.html").write_text("<html><body>ui</body></html>")
        (site / "app.js").write_text("console.log('ui');")
        client = TestClient(create_app(services, frontend_dir=site))

        index = client.get("/")
        assert index.status_code == 200
        assert b"ui" in index.content
        assert client.get("/app.js").status_code == 200
        # API routes still win over the static mount.
        assert client.get("/api/cluster/summary").status_code == 401

    def test_no_mount_without_frontend_dir(self, client):
        assert client.get("/").status_code == 404
