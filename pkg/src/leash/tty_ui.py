"""Terminal consent prompt: the fallback surface when no panel is attached.

Watches for pending asks and renders the same indexed options the panel
would; an empty or invalid answer leaves the ask pending (the timeout will
eventually deny once).  Streams are injectable for tests; by default the
prompt goes to stderr and answers come from the controlling terminal.
"""

from __future__ import annotations

import threading
from typing import Optional, TextIO

from .consent_api import SessionController, StaleAskError
from .lattice import render_boundary


def render_ask(view: dict) -> str:
    call = view["call"]
    lines = [
        f"consent needed for step {call['step']}: {call['tool_ref']} {call['params']}",
    ]
    for opt in view["options"]:
        durability = "always" if opt["durable"] else "once"
        lines.append(f"  [{opt['index']}] ({durability}) {opt['label']}")
    lines.append("choice> ")
    return "\n".join(lines)


class TtyPrompt:
    def __init__(self, controller: SessionController, out: TextIO, answers: TextIO,
                 poll_interval: float = 0.2):
        self.controller = controller
        self.out = out
        self.answers = answers
        self.poll_interval = poll_interval
        self._stop = threading.Event()
        self._last_ask: Optional[int] = None
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()

    def _loop(self) -> None:
        while not self._stop.wait(self.poll_interval):
            view = self.controller.pending_view()
            if view is None or view["ask_id"] == self._last_ask:
                continue
            self._last_ask = view["ask_id"]
            self.out.write(render_ask(view))
            self.out.flush()
            line = self.answers.readline()
            if not line:
                continue
            try:
                choice = int(line.strip())
            except ValueError:
                self.out.write("not a number; ask left pending\n")
                continue
            try:
                self.controller.decide(view["ask_id"], choice)
                self.out.write(f"applied option {choice}\n")
            except StaleAskError:
                pass
            except Exception as exc:
                self.out.write(f"rejected: {exc}\n")


def open_tty(path: str = "/dev/tty"):
    """Controlling-terminal streams, or None when headless."""
    try:
        return open(path, "r"), open(path, "w")
    except OSError:
        return None
