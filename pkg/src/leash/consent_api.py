"""Loopback HTTP surface for the consent panel (and anything else local).

Endpoints:
    GET  /pending        current pending ask with indexed options
    POST /decide         {"ask_id": n, "option": i} resolves the held call
    GET  /policy         rule list with ids (invariants and user rules)
    GET  /audit/stream   server-sent events: replay of past records, then live
    POST /invariants     {"text": "<dsl rule>"} installs a deny invariant
    DELETE /rules/<id>   revokes a durable user rule

Static panel files are served from an optional directory at `/`.
"""

from __future__ import annotations

import json
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, List, Optional

from .authorizer import CallOutcome, Session
from .dsl import DslParseError
from .policy import ORIGIN_USER, PolicyError, boundary_to_obj


class StaleAskError(Exception):
    pass


class SessionController:
    """Thread-safe bridge between HTTP/TTY frontends and one authorizer.

    `on_outcomes` receives every outcome list produced by a decision so the
    proxy can forward or answer held wire requests.
    """

    def __init__(
        self,
        session: Session,
        on_outcomes: Optional[Callable[[List[CallOutcome]], None]] = None,
        resolve: Optional[Callable[[int], List[CallOutcome]]] = None,
    ):
        self.session = session
        self._on_outcomes = on_outcomes
        self._resolve = resolve
        self._audit_lock = threading.Lock()
        self._subscribers: List[queue.Queue] = []

    # -- audit fan-out -----------------------------------------------------

    def publish_audit(self, record) -> None:
        obj = record.to_obj()
        with self._audit_lock:
            for q in self._subscribers:
                q.put(obj)

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._audit_lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._audit_lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    # -- views ---------------------------------------------------------------

    def pending_view(self) -> Optional[dict]:
        ask = self.session.pending
        if ask is None:
            return None
        return {
            "ask_id": ask.ask_id,
            "issued_at": ask.issued_at,
            "degraded": ask.degraded,
            "call": {
                "step": ask.call.step,
                "tool_ref": ask.call.tool_ref,
                "params": dict(ask.call.params),
            },
            "boundary": boundary_to_obj(ask.boundary.rule_form()),
            "options": [
                {
                    "index": i,
                    "label": o.label,
                    "durable": o.durable,
                    "action": o.action,
                    "boundary": boundary_to_obj(o.boundary),
                }
                for i, o in enumerate(ask.options)
            ],
        }

    def policy_view(self) -> dict:
        def rule_obj(r):
            return {
                "id": r.id,
                "action": r.action,
                "origin": r.origin,
                "created_at": r.created_at,
                "boundary": boundary_to_obj(r.boundary),
            }

        rules = sorted(self.session.policy.rules, key=lambda r: r.id)
        return {
            "invariants": [rule_obj(r) for r in rules if r.origin != ORIGIN_USER],
            "rules": [rule_obj(r) for r in rules if r.origin == ORIGIN_USER],
        }

    def audit_snapshot(self) -> List[dict]:
        return [r.to_obj() for r in self.session.audit]

    # -- actions ---------------------------------------------------------------

    def decide(self, ask_id: int, option_index: int) -> List[dict]:
        ask = self.session.pending
        if ask is None or ask.ask_id != ask_id:
            raise StaleAskError(f"no pending ask with id {ask_id}")
        if self._resolve is not None:
            outcomes = self._resolve(option_index)
        else:
            outcomes = self.session.resolve_consent(option_index)
            if self._on_outcomes is not None:
                self._on_outcomes(outcomes)
        return [
            {"step": o.call.step, "tool_ref": o.call.tool_ref, "kind": o.kind}
            for o in outcomes
        ]

    def submit_invariant(self, text: str) -> dict:
        rule = self.session.submit_invariant(text)
        return {
            "id": rule.id,
            "action": rule.action,
            "origin": rule.origin,
            "boundary": boundary_to_obj(rule.boundary),
        }

    def delete_rule(self, rule_id: str) -> None:
        rule = self.session.policy.get_rule(rule_id)
        if rule is None:
            raise KeyError(rule_id)
        if rule.origin != ORIGIN_USER:
            raise PermissionError("invariants are non-overridable; refusing to delete")
        self.session.policy.remove_rule(rule_id)


_MIME = {".html": "text/html", ".js": "text/javascript", ".css": "text/css",
         ".map": "application/json", ".svg": "image/svg+xml"}


def make_handler(controller: SessionController, panel_dir: Optional[Path]):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet; the audit log is the record
            pass

        def _json(self, status: int, obj) -> None:
            body = json.dumps(obj).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            try:
                return json.loads(self.rfile.read(length))
            except json.JSONDecodeError:
                return {}

        # -- GET ----------------------------------------------------------

        def do_GET(self):
            if self.path == "/pending":
                self._json(200, {"pending": controller.pending_view()})
            elif self.path == "/policy":
                self._json(200, controller.policy_view())
            elif self.path == "/audit/stream":
                self._stream_audit()
            elif panel_dir is not None:
                self._static()
            else:
                self._json(404, {"error": "not found"})

        def _static(self):
            rel = self.path.lstrip("/") or "index.html"
            target = (panel_dir / rel).resolve()
            if not str(target).startswith(str(panel_dir.resolve())) or not target.is_file():
                self._json(404, {"error": "not found"})
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", _MIME.get(target.suffix, "application/octet-stream"))
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _stream_audit(self):
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            q = controller.subscribe()
            try:
                for obj in controller.audit_snapshot():
                    self._send_event(obj)
                while True:
                    try:
                        obj = q.get(timeout=0.5)
                    except queue.Empty:
                        self.wfile.write(b": keep-alive\n\n")
                        self.wfile.flush()
                        continue
                    self._send_event(obj)
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                controller.unsubscribe(q)

        def _send_event(self, obj) -> None:
            self.wfile.write(b"data: " + json.dumps(obj).encode() + b"\n\n")
            self.wfile.flush()

        # -- POST / DELETE --------------------------------------------------

        def do_POST(self):
            body = self._read_body()
            if self.path == "/decide":
                try:
                    outcomes = controller.decide(int(body.get("ask_id", -1)),
                                                 int(body.get("option", -1)))
                    self._json(200, {"outcomes": outcomes})
                except StaleAskError as exc:
                    self._json(409, {"error": str(exc)})
                except Exception as exc:
                    self._json(400, {"error": str(exc)})
            elif self.path == "/invariants":
                text = body.get("text", "")
                try:
                    self._json(200, controller.submit_invariant(text))
                except DslParseError as exc:
                    self._json(422, {
                        "error": exc.message,
                        "offset": exc.offset,
                        "expected": sorted(exc.expected),
                        "line": exc.line,
                    })
                except PolicyError as exc:
                    self._json(422, {"error": str(exc), "offset": 0, "expected": [],
                                     "line": None})
            else:
                self._json(404, {"error": "not found"})

        def do_DELETE(self):
            if self.path.startswith("/rules/"):
                rule_id = self.path[len("/rules/"):]
                try:
                    controller.delete_rule(rule_id)
                    self._json(200, {"removed": rule_id})
                except KeyError:
                    self._json(404, {"error": f"no rule {rule_id}"})
                except PermissionError as exc:
                    self._json(403, {"error": str(exc)})
            else:
                self._json(404, {"error": "not found"})

    return Handler


class ConsentApi:
    """Loopback-only HTTP server wrapping a SessionController."""

    def __init__(self, controller: SessionController, port: int = 0,
                 panel_dir: Optional[str] = None):
        handler = make_handler(controller, Path(panel_dir) if panel_dir else None)
        self.httpd = ThreadingHTTPServer(("127.0.0.1", port), handler)
        self.httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
