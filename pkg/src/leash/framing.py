"""JSON-RPC message framing over byte streams.

Primary framing is newline-delimited JSON.  Content-Length (LSP-style)
framing is accepted on input for compatibility; output is always NDJSON.
Raw bytes are returned alongside each parsed message so pass-through paths
can forward them untouched.
"""

from __future__ import annotations

import json
from typing import Optional, Tuple


class FramingError(Exception):
    def __init__(self, message: str, raw: bytes = b""):
        self.raw = raw
        super().__init__(message)


def dump_message(obj) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode() + b"\n"


def read_message(stream) -> Tuple[Optional[dict], bytes]:
    """Next message as (parsed, raw bytes); (None, b'') at EOF.

    Raises FramingError for frames that cannot be parsed; the stream stays
    usable afterwards.
    """
    line = stream.readline()
    if not line:
        return None, b""
    stripped = line.strip()
    if not stripped:
        return read_message(stream)
    if stripped.lower().startswith(b"content-length:"):
        try:
            length = int(stripped.split(b":", 1)[1])
        except ValueError:
            raise FramingError("bad Content-Length header", line)
        # consume remaining headers up to the blank line
        while True:
            header = stream.readline()
            if not header:
                return None, b""
            if header in (b"\r\n", b"\n"):
                break
        body = stream.read(length)
        if len(body) < length:
            return None, b""
        try:
            return json.loads(body), body if body.endswith(b"\n") else body + b"\n"
        except json.JSONDecodeError as exc:
            raise FramingError(f"invalid JSON body: {exc.msg}", body)
    try:
        return json.loads(stripped), line
    except json.JSONDecodeError as exc:
        raise FramingError(f"invalid JSON frame: {exc.msg}", line)
