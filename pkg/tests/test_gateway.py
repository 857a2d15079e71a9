import json
import threading
import urllib.error
import urllib.request

import pytest

from ctxgate.appmodel import PermissionType
from ctxgate.gateway import GatewayApp, make_server
from ctxgate.learners import Algo, PermissionModel
from ctxgate.mediator import DeviceState, MediatorConfig

from .test_mediator import COMPOSE_STACK


def compose_trace_docs():
    return [
        {"time": 1, "kind": "LaunchActivity", "package": "com.qksms",
         "component": "ComposeActivity"},
        {"time": 2, "kind": "ListenerInvoke", "package": "com.qksms",
         "widget_id": "com.qksms:id/compose_button"},
        {"time": 3, "kind": "SensitiveCall", "package": "com.qksms",
         "stack": list(COMPOSE_STACK)},
    ]


class Client:
    def __init__(self, port):
        self.base = f"http://127.0.0.1:{port}"

    def request(self, method, path, body=None):
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(
            self.base + path, data=data, method=method,
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as e:
            return e.code, json.loads(e.read())

    def get(self, path):
        return self.request("GET", path)

    def post(self, path, body):
        return self.request("POST", path, body)


@pytest.fixture
def gateway(qksms_pkg, api_map, tmp_path):
    static = tmp_path / "console"
    static.mkdir()
    (static / "index.html").write_text("<html><body>console</body></html>")
    state = DeviceState(
        packages={qksms_pkg.package_id: qksms_pkg},
        api_map=api_map,
        models={perm: PermissionModel(permission=perm, algo=Algo.NB)
                for perm in PermissionType},
        config=MediatorConfig(),
    )
    app = GatewayApp(state, static_dir=static)
    server = make_server(app, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield Client(server.server_address[1]), state
    finally:
        server.shutdown()
        server.server_close()


class TestPending:
    def test_empty(self, gateway):
        client, _ = gateway
        status, body = client.get("/v1/pending")
        assert status == 200
        assert body == {"tickets": []}

    def test_prompt_summary_fields(self, gateway):
        client, _ = gateway
        status, posted = client.post("/v1/traces", {"events": compose_trace_docs()})
        assert status == 200
        assert len(posted["ticket_ids"]) == 1
        status, body = client.get("/v1/pending")
        t = body["tickets"][0]
        assert t["permission"] == "SEND_SMS"
        assert t["package_id"] == "com.qksms"
        assert t["highlighted_widget"] == "com.qksms:id/compose_button"
        assert t["entry_event"] == "onClick"
        assert t["snapshot_id"]

    def test_fifo_order(self, gateway):
        client, _ = gateway
        client.post("/v1/traces", {"events": compose_trace_docs()})
        client.post("/v1/traces", {"events": compose_trace_docs()})
        _, body = client.get("/v1/pending")
        created = [t["created_at"] for t in body["tickets"]]
        assert created == sorted(created)
        assert len(created) == 2


class TestDecisions:
    def test_allow_closes_and_reports_post_p(self, gateway):
        client, state = gateway
        _, posted = client.post("/v1/traces", {"events": compose_trace_docs()})
        ticket_id = posted["ticket_ids"][0]
        status, body = client.post("/v1/decisions", {"ticket_id": ticket_id, "allow": True})
        assert status == 200
        assert body["record"]["verdict"] == "Allow"
        assert body["record"]["decision_source"] == "User"
        assert body["post_p_legal"] > 0.5
        assert state.pending == {}

    def test_second_submission_conflicts(self, gateway):
        client, _ = gateway
        _, posted = client.post("/v1/traces", {"events": compose_trace_docs()})
        ticket_id = posted["ticket_ids"][0]
        client.post("/v1/decisions", {"ticket_id": ticket_id, "allow": False})
        status, body = client.post("/v1/decisions", {"ticket_id": ticket_id, "allow": False})
        assert status == 409

    def test_unknown_ticket_404(self, gateway):
        client, _ = gateway
        status, _ = client.post("/v1/decisions", {"ticket_id": "tGHOST", "allow": True})
        assert status == 404

    def test_bad_body_400(self, gateway):
        client, _ = gateway
        status, _ = client.post("/v1/decisions", {"ticket_id": 5, "allow": "yes"})
        assert status == 400

    def test_deny_then_replay_auto_denies(self, gateway):
        client, _ = gateway
        _, posted = client.post("/v1/traces", {"events": compose_trace_docs()})
        client.post("/v1/decisions", {"ticket_id": posted["ticket_ids"][0], "allow": False})
        # identical context again: now confidently denied without a prompt
        status, second = client.post("/v1/traces", {"events": compose_trace_docs()})
        assert status == 200
        assert second["ticket_ids"] == []
        assert len(second["record_ids"]) == 1
        _, records = client.get("/v1/records")
        last = records["records"][-1]
        assert last["verdict"] == "Deny"
        assert last["decision_source"] == "Model"
        assert last["p_legal"] <= 0.2


class TestRecordsAndStats:
    def test_records_page(self, gateway):
        client, _ = gateway
        _, posted = client.post("/v1/traces", {"events": compose_trace_docs()})
        client.post("/v1/decisions", {"ticket_id": posted["ticket_ids"][0], "allow": True})
        status, body = client.get("/v1/records?offset=0&limit=10")
        assert status == 200
        assert body["total"] == 1
        assert body["records"][0]["permission"] == "SEND_SMS"

    def test_fresh_server_reports_loaded_model_counts(self, qksms_pkg, api_map):
        # a gateway over pretrained models shows their update counts as-is
        from ctxgate.features import empty_features
        from ctxgate.learners import Label, TrainExample

        model = PermissionModel(permission=PermissionType.SEND_SMS, algo=Algo.NB)
        for _ in range(17):
            model.update(TrainExample(features=empty_features(), label=Label.LEGAL,
                                      permission=PermissionType.SEND_SMS))
        state = DeviceState(
            packages={qksms_pkg.package_id: qksms_pkg},
            api_map=api_map,
            models={PermissionType.SEND_SMS: model},
        )
        app = GatewayApp(state)
        status, body = app.get_stats()
        assert status == 200
        assert body["models"]["SEND_SMS"]["examples_seen"] == 17
        assert body["verdicts"] == {"Allow": 0, "Deny": 0, "Prompted": 0}

    def test_stats_shape(self, gateway):
        client, _ = gateway
        _, posted = client.post("/v1/traces", {"events": compose_trace_docs()})
        client.post("/v1/decisions", {"ticket_id": posted["ticket_ids"][0], "allow": True})
        status, body = client.get("/v1/models/stats")
        assert status == 200
        assert body["models"]["SEND_SMS"]["examples_seen"] == 1
        assert body["models"]["SEND_SMS"]["thresholds"] == [0.2, 0.8]
        assert body["verdicts"]["Allow"] == 1
        assert body["pending"] == 0
        assert body["resolved"] == 1


class TestSnapshots:
    def test_fetch_by_id(self, gateway):
        client, _ = gateway
        client.post("/v1/traces", {"events": compose_trace_docs()})
        _, pending = client.get("/v1/pending")
        snapshot_id = pending["tickets"][0]["snapshot_id"]
        status, body = client.get(f"/v1/snapshots/{snapshot_id}")
        assert status == 200
        assert body["activity_id"] == "ComposeActivity"
        assert any(w["widget_id"] == "com.qksms:id/compose_button" for w in body["widgets"])

    def test_unknown_snapshot_404(self, gateway):
        client, _ = gateway
        status, _ = client.get("/v1/snapshots/nope")
        assert status == 404


class TestTraces:
    def test_malformed_trace_400(self, gateway):
        client, _ = gateway
        status, _ = client.post("/v1/traces", {"events": [{"time": 1, "kind": "Nope"}]})
        assert status == 400
        status, _ = client.post("/v1/traces", {"events": []})
        assert status == 400

    def test_invalid_reference_400(self, gateway):
        client, _ = gateway
        events = [{"time": 1, "kind": "LaunchActivity", "package": "com.qksms",
                   "component": "GhostActivity"}]
        status, _ = client.post("/v1/traces", {"events": events})
        assert status == 400


class TestStatic:
    def test_console_served_at_root(self, gateway):
        client, _ = gateway
        req = urllib.request.Request(client.base + "/")
        with urllib.request.urlopen(req) as resp:
            assert resp.status == 200
            assert b"console" in resp.read()

    def test_unknown_route_404(self, gateway):
        client, _ = gateway
        status, _ = client.get("/v1/nope")
        assert status == 404
