"""TTY consent prompt: renders the same indexed options and resolves asks."""

import io
import time

from leash.abstraction import RawCall, SessionContext, load_profiles
from leash.authorizer import EXECUTE, Session
from leash.consent_api import SessionController
from leash.tty_ui import TtyPrompt, render_ask

from conftest import DATA_DIR

PROFILES = load_profiles((DATA_DIR / "profiles.json").read_text())


def test_render_lists_indexed_options():
    session = Session(SessionContext(workdir="/ws"), PROFILES)
    session.process_call(RawCall("filesystem.read_file", {"path": "/ws/a.txt"}, 1))
    controller = SessionController(session)
    text = render_ask(controller.pending_view())
    assert "filesystem.read_file" in text
    assert "[0]" in text and "[1]" in text
    assert "(once)" in text and "(always)" in text


def test_prompt_resolves_ask_from_answer_stream():
    session = Session(SessionContext(workdir="/ws"), PROFILES)
    controller = SessionController(session)
    out = io.StringIO()
    answers = io.StringIO("0\n")  # allow once
    prompt = TtyPrompt(controller, out, answers, poll_interval=0.01)
    prompt.start()
    try:
        outcome = session.process_call(
            RawCall("filesystem.read_file", {"path": "/ws/a.txt"}, 1)
        )
        assert outcome.kind != EXECUTE
        deadline = time.time() + 3
        while session.pending is not None and time.time() < deadline:
            time.sleep(0.01)
        assert session.pending is None
        assert "applied option 0" in out.getvalue()
        assert session.audit[-1].verdict == "ALLOW"
    finally:
        prompt.stop()


def test_invalid_answer_leaves_ask_pending():
    session = Session(SessionContext(workdir="/ws"), PROFILES)
    controller = SessionController(session)
    out = io.StringIO()
    answers = io.StringIO("not-a-number\n")
    prompt = TtyPrompt(controller, out, answers, poll_interval=0.01)
    prompt.start()
    try:
        session.process_call(RawCall("filesystem.read_file", {"path": "/ws/a.txt"}, 1))
        time.sleep(0.2)
        assert session.pending is not None
        assert "ask left pending" in out.getvalue()
    finally:
        prompt.stop()
