"""Transport-level interposition between an MCP host and upstream servers.

Speaks JSON-RPC 2.0 over stdio pipes: the host connects on our stdin/stdout,
upstream servers are spawned as subprocesses.  `tools/call` requests route
through the authorizer; everything else passes through.  With a single
upstream, pass-through traffic is forwarded as raw bytes (request ids
preserved end-to-end); with several upstreams, ids are rewritten into a
per-upstream namespace and tool names are prefixed `alias.tool`.

Blocked calls answer with JSON-RPC error -32090 carrying the violated rule
id.  Calls awaiting consent are held (and queue FIFO) until a decision
arrives from the consent API, the TTY prompt, or the timeout.
"""

from __future__ import annotations

import shlex
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .abstraction import RawCall
from .authorizer import AWAIT_CONSENT, BLOCK, EXECUTE, CallOutcome, Session
from .framing import FramingError, dump_message, read_message

DENY_ERROR_CODE = -32090
UPSTREAM_GONE_CODE = -32000


@dataclass
class _HeldCall:
    host_id: object
    upstream: "Upstream"
    wire_name: str
    arguments: dict
    raw: bytes


class Upstream:
    """One spawned MCP server and its id-remapping state."""

    def __init__(self, alias: str, command: str):
        self.alias = alias
        self.command = command
        self.proc: Optional[subprocess.Popen] = None
        self.pending: Dict[object, object] = {}  # local id -> host id
        self._next_local = 0
        self._write_lock = threading.Lock()

    def spawn(self) -> None:
        self.proc = subprocess.Popen(
            shlex.split(self.command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )

    def next_local_id(self) -> str:
        self._next_local += 1
        return f"{self.alias}-{self._next_local}"

    def write(self, raw: bytes) -> None:
        assert self.proc is not None and self.proc.stdin is not None
        with self._write_lock:
            self.proc.stdin.write(raw)
            self.proc.stdin.flush()

    def terminate(self) -> None:
        if self.proc is None:
            return
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.terminate()
            self.proc.wait(timeout=2)
        except Exception:
            self.proc.kill()


class ProxyServer:
    def __init__(
        self,
        upstreams: List[Tuple[str, str]],
        session: Session,
        host_in=None,
        host_out=None,
        poll_interval: float = 1.0,
    ):
        if not upstreams:
            raise ValueError("at least one upstream server is required")
        self.upstreams = [Upstream(alias, cmd) for alias, cmd in upstreams]
        self.by_alias = {u.alias: u for u in self.upstreams}
        self.session = session
        self.host_in = host_in if host_in is not None else sys.stdin.buffer
        self.host_out = host_out if host_out is not None else sys.stdout.buffer
        self.poll_interval = poll_interval
        self.multi = len(self.upstreams) > 1
        self._lock = threading.RLock()
        self._host_write_lock = threading.Lock()
        self._held: Dict[int, _HeldCall] = {}
        self._step = 0
        self._exit_code = 0
        self._stopping = threading.Event()
        self._threads: List[threading.Thread] = []

    # -- plumbing --------------------------------------------------------

    def _write_host(self, raw: bytes) -> None:
        with self._host_write_lock:
            try:
                self.host_out.write(raw)
                self.host_out.flush()
            except (BrokenPipeError, ValueError):
                self._stopping.set()

    def _respond(self, msg_id, result=None, error=None) -> None:
        obj = {"jsonrpc": "2.0", "id": msg_id}
        if error is not None:
            obj["error"] = error
        else:
            obj["result"] = result
        self._write_host(dump_message(obj))

    def _next_step(self) -> int:
        self._step += 1
        return self._step

    # -- host -> proxy -----------------------------------------------------

    def run(self) -> int:
        for up in self.upstreams:
            up.spawn()
            t = threading.Thread(target=self._upstream_loop, args=(up,), daemon=True)
            t.start()
            self._threads.append(t)
        timer = threading.Thread(target=self._timeout_loop, daemon=True)
        timer.start()
        self._threads.append(timer)

        while not self._stopping.is_set():
            try:
                msg, raw = read_message(self.host_in)
            except FramingError:
                self._respond(None, error={"code": -32700, "message": "parse error"})
                continue
            except ValueError:
                break
            if msg is None:
                break
            self._dispatch_host(msg, raw)
        self.shutdown()
        return self._exit_code

    def shutdown(self) -> None:
        self._stopping.set()
        for up in self.upstreams:
            up.terminate()

    def _dispatch_host(self, msg, raw: bytes) -> None:
        if not isinstance(msg, dict) or msg.get("jsonrpc") != "2.0":
            self._respond(None, error={"code": -32600, "message": "invalid request"})
            return
        method = msg.get("method")
        msg_id = msg.get("id")
        if method is None:
            return  # stray response from the host; nothing to route
        if msg_id is None:
            with self._lock:
                for up in self.upstreams:
                    up.write(raw)
            return
        if method == "tools/call":
            with self._lock:
                self._handle_call(msg, raw)
        elif self.multi and method == "tools/list":
            self._aggregate_tools_list(msg_id)
        elif self.multi and method == "initialize":
            self._broadcast_initialize(msg, msg_id)
        else:
            with self._lock:
                up = self.upstreams[0]
                if self.multi:
                    local = up.next_local_id()
                    up.pending[local] = msg_id
                    rewritten = dict(msg)
                    rewritten["id"] = local
                    up.write(dump_message(rewritten))
                else:
                    up.pending[msg_id] = msg_id
                    up.write(raw)

    def _handle_call(self, msg, raw: bytes) -> None:
        msg_id = msg.get("id")
        params = msg.get("params") or {}
        name = params.get("name") or ""
        arguments = params.get("arguments") or {}
        if self.multi:
            alias, _, wire_name = name.partition(".")
            upstream = self.by_alias.get(alias)
            if upstream is None or not wire_name:
                self._respond(msg_id, error={
                    "code": -32602,
                    "message": f"unknown server prefix in tool name {name!r}",
                })
                return
            tool_ref = name
        else:
            upstream = self.upstreams[0]
            wire_name = name
            tool_ref = f"{upstream.alias}.{name}"
        step = self._next_step()
        self._held[step] = _HeldCall(msg_id, upstream, wire_name, arguments, raw)
        outcome = self.session.process_call(RawCall(tool_ref, arguments, step))
        self._apply_outcome(outcome)

    # -- outcome dispatch -------------------------------------------------

    def _apply_outcomes(self, outcomes: List[CallOutcome]) -> None:
        with self._lock:
            for outcome in outcomes:
                self._apply_outcome(outcome)

    def _apply_outcome(self, outcome: CallOutcome) -> None:
        step = outcome.call.step
        if outcome.kind == AWAIT_CONSENT:
            return  # stays held (possibly queued behind the active ask)
        meta = self._held.pop(step, None)
        if meta is None:
            return
        if outcome.kind == EXECUTE:
            up = meta.upstream
            if self.multi:
                local = up.next_local_id()
                up.pending[local] = meta.host_id
                up.write(dump_message({
                    "jsonrpc": "2.0",
                    "id": local,
                    "method": "tools/call",
                    "params": {"name": meta.wire_name, "arguments": meta.arguments},
                }))
            else:
                up.pending[meta.host_id] = meta.host_id
                up.write(meta.raw)
        elif outcome.kind == BLOCK:
            rule_id = outcome.matched[0] if outcome.matched else None
            self._respond(meta.host_id, error={
                "code": DENY_ERROR_CODE,
                "message": "consent denied",
                "data": {"rule_id": rule_id, "reason": outcome.reason},
            })

    # -- consent entry points ----------------------------------------------

    def resolve_pending(self, answer) -> List[CallOutcome]:
        with self._lock:
            outcomes = self.session.resolve_consent(answer)
            for outcome in outcomes:
                self._apply_outcome(outcome)
            return outcomes

    def _timeout_loop(self) -> None:
        while not self._stopping.wait(self.poll_interval):
            with self._lock:
                outcomes = self.session.check_timeout()
                for outcome in outcomes:
                    self._apply_outcome(outcome)

    # -- multi-upstream fan-out ---------------------------------------------

    def _aggregate_tools_list(self, msg_id) -> None:
        tools = []
        for up in self.upstreams:
            reply = self._call_upstream(up, "tools/list", {})
            for tool in (reply.get("result") or {}).get("tools", []):
                prefixed = dict(tool)
                prefixed["name"] = f"{up.alias}.{tool.get('name', '')}"
                tools.append(prefixed)
        self._respond(msg_id, result={"tools": tools})

    def _broadcast_initialize(self, msg, msg_id) -> None:
        merged = None
        for up in self.upstreams:
            reply = self._call_upstream(up, "initialize", msg.get("params") or {})
            result = reply.get("result") or {}
            if merged is None:
                merged = result
            else:
                caps = dict(merged.get("capabilities") or {})
                caps.update(result.get("capabilities") or {})
                merged["capabilities"] = caps
        self._respond(msg_id, result=merged or {})

    def _call_upstream(self, up: Upstream, method: str, params: dict, timeout=10.0) -> dict:
        # Runs without the dispatch lock held: the reader thread needs it to
        # deliver the reply.
        event = threading.Event()
        slot: Dict[str, dict] = {}
        with self._lock:
            local = up.next_local_id()
            up.pending[local] = ("internal", event, slot)
        up.write(dump_message({"jsonrpc": "2.0", "id": local, "method": method,
                               "params": params}))
        event.wait(timeout)
        return slot.get("reply", {})

    # -- upstream -> host ----------------------------------------------------

    def _upstream_loop(self, up: Upstream) -> None:
        assert up.proc is not None and up.proc.stdout is not None
        while True:
            try:
                msg, raw = read_message(up.proc.stdout)
            except FramingError:
                continue  # garbage on the upstream pipe: drop the frame
            except ValueError:
                msg = None
            if msg is None:
                self._on_upstream_exit(up)
                return
            self._route_upstream_message(up, msg, raw)

    def _route_upstream_message(self, up: Upstream, msg, raw: bytes) -> None:
        msg_id = msg.get("id") if isinstance(msg, dict) else None
        if msg_id is not None:
            with self._lock:
                target = up.pending.pop(msg_id, None)
            if target is None:
                return  # unsolicited response
            if isinstance(target, tuple) and target[0] == "internal":
                _, event, slot = target
                slot["reply"] = msg
                event.set()
                return
            if self.multi or target != msg_id:
                rewritten = dict(msg)
                rewritten["id"] = target
                self._write_host(dump_message(rewritten))
            else:
                self._write_host(raw)
            return
        # notification (or server-initiated request): relay as-is
        self._write_host(raw)

    def _on_upstream_exit(self, up: Upstream) -> None:
        if self._stopping.is_set():
            return
        with self._lock:
            pending = dict(up.pending)
            up.pending.clear()
        for _local, target in pending.items():
            if isinstance(target, tuple) and target[0] == "internal":
                target[1].set()
                continue
            self._respond(target, error={
                "code": UPSTREAM_GONE_CODE,
                "message": f"upstream {up.alias} terminated",
            })
        self._exit_code = 1
        self._stopping.set()
        try:
            self.host_in.close()
        except Exception:
            pass
