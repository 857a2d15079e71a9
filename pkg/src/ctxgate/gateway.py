"""HTTP surface over the mediator for the decision console.

Plain local HTTP with JSON bodies under a /v1 prefix: pending prompts,
decision submission, the decision log, model stats, snapshots, and trace
replay. All state mutation funnels through one lock, preserving the
mediator's single-writer contract; the gateway itself never touches
models directly. Optionally serves a static console build at /.
"""

from __future__ import annotations

import json
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import urlparse

from .mediator import (
    AlreadyResolvedError,
    DeviceState,
    MediatorError,
    TraceEvent,
    UnknownTicketError,
    Verdict,
    resolve_prompt,
    run_trace,
)
from .render import snapshot_to_doc

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


class GatewayApp:
    def __init__(self, state: DeviceState, static_dir: str | Path | None = None):
        self.state = state
        self.static_dir = Path(static_dir) if static_dir else None
        self.lock = threading.Lock()

    # ---- handlers return (status, payload) ----

    def get_pending(self) -> tuple[int, dict]:
        with self.lock:
            tickets = sorted(self.state.pending.values(), key=lambda t: t.created_at)
            return 200, {"tickets": [t.summary() for t in tickets]}

    def post_decision(self, body: dict) -> tuple[int, dict]:
        ticket_id = body.get("ticket_id")
        allow = body.get("allow")
        if not isinstance(ticket_id, str) or not isinstance(allow, bool):
            return 400, {"error": "body must be {ticket_id: string, allow: boolean}"}
        with self.lock:
            try:
                record = resolve_prompt(self.state, ticket_id, allow)
            except UnknownTicketError as e:
                return 404, {"error": str(e)}
            except AlreadyResolvedError as e:
                return 409, {"error": str(e)}
            post_p = self.state.model_for(record.permission).predict(record.features)
            return 200, {"record": record.to_doc(), "post_p_legal": post_p}

    def get_records(self, query: dict) -> tuple[int, dict]:
        offset = int(query.get("offset", 0))
        limit = int(query.get("limit", 100))
        with self.lock:
            page = self.state.records[offset : offset + limit]
            return 200, {
                "total": len(self.state.records),
                "offset": offset,
                "records": [r.to_doc() for r in page],
            }

    def get_stats(self) -> tuple[int, dict]:
        with self.lock:
            verdicts = {v.value: 0 for v in Verdict}
            for r in self.state.records:
                verdicts[r.verdict.value] += 1
            models = {
                perm.value: {
                    "algo": model.algo.value,
                    "examples_seen": model.examples_seen,
                    "thresholds": list(model.thresholds),
                }
                for perm, model in sorted(
                    self.state.models.items(), key=lambda kv: kv[0].value
                )
            }
            return 200, {
                "models": models,
                "verdicts": verdicts,
                "pending": len(self.state.pending),
                "resolved": len(self.state.resolved),
            }

    def get_snapshot(self, snapshot_id: str) -> tuple[int, dict]:
        with self.lock:
            snapshot = self.state.snapshots.get(snapshot_id)
            if snapshot is None:
                return 404, {"error": f"no snapshot {snapshot_id!r}"}
            return 200, snapshot_to_doc(snapshot)

    def post_trace(self, body: dict) -> tuple[int, dict]:
        raw_events = body.get("events")
        if not isinstance(raw_events, list) or not raw_events:
            return 400, {"error": "body must carry a non-empty events list"}
        try:
            events = [TraceEvent.from_doc(e) for e in raw_events]
        except Exception as e:
            return 400, {"error": f"malformed trace: {e}"}
        with self.lock:
            # traces carry their own timeline; rebase it past the device
            # clock so the same trace can be replayed again and again
            shift = self.state.clock + 1 - events[0].time
            if shift:
                events = [replace(e, time=e.time + shift) for e in events]
            before = {t for t in self.state.pending}
            try:
                records = run_trace(self.state, events)
            except MediatorError as e:
                return 400, {"error": str(e)}
            new_tickets = [t for t in self.state.pending if t not in before]
            return 200, {
                "record_ids": [r.request_id for r in records],
                "ticket_ids": new_tickets,
            }

    # ---- static console ----

    def serve_static(self, path: str):
        if self.static_dir is None:
            return None
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            return None
        suffix = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        return suffix, target.read_bytes()


def make_server(app: GatewayApp, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet by default
            pass

        def _send_json(self, status: int, payload: dict) -> None:
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

        def _read_body(self) -> dict | None:
            length = int(self.headers.get("Content-Length", 0))
            try:
                return json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError:
                return None

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            query = dict(
                pair.split("=", 1) for pair in url.query.split("&") if "=" in pair
            )
            if parts[:1] == ["v1"]:
                rest = parts[1:]
                if rest == ["pending"]:
                    return self._send_json(*app.get_pending())
                if rest == ["records"]:
                    return self._send_json(*app.get_records(query))
                if rest == ["models", "stats"]:
                    return self._send_json(*app.get_stats())
                if len(rest) == 2 and rest[0] == "snapshots":
                    return self._send_json(*app.get_snapshot(rest[1]))
                return self._send_json(404, {"error": f"no route {url.path}"})
            static = app.serve_static(url.path)
            if static is not None:
                content_type, data = static
                self.send_response(200)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
                return
            self._send_json(404, {"error": f"no route {url.path}"})

        def do_POST(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            body = self._read_body()
            if body is None:
                return self._send_json(400, {"error": "request body is not valid JSON"})
            if parts == ["v1", "decisions"]:
                return self._send_json(*app.post_decision(body))
            if parts == ["v1", "traces"]:
                return self._send_json(*app.post_trace(body))
            self._send_json(404, {"error": f"no route {url.path}"})

    return ThreadingHTTPServer((host, port), Handler)


def serve_forever(app: GatewayApp, host: str, port: int) -> None:
    server = make_server(app, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
