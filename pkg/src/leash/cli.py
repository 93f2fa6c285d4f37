"""Command-line entry points: proxy, replay, bench."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from importlib import resources
from pathlib import Path

from .abstraction import SessionContext, load_profiles, load_session_config
from .authorizer import Session
from .consent_api import ConsentApi, SessionController
from .dsl import parse_policy_file
from .policy import DENY, ORIGIN_INVARIANT, Policy, load_policy
from .proxy import ProxyServer
from .replay import MODE_RE_ABSTRACT, MODE_USE_CAPABILITY, load_traces, replay_all, score
from .tty_ui import TtyPrompt, open_tty

_ALIAS_RE = re.compile(r"^([A-Za-z_][\w-]*)=(.+)$", re.S)


def _bundled(name: str) -> str:
    return (resources.files("leash") / "data" / name).read_text()


def _parse_server(value: str, index: int):
    m = _ALIAS_RE.match(value)
    if m:
        return m.group(1), m.group(2)
    return f"server{index + 1}", value


def _load_invariants(session: Session, path: str) -> None:
    for parsed in parse_policy_file(Path(path).read_text()):
        if parsed.action != DENY:
            raise SystemExit(f"{path}: invariant files accept deny rules only")
        session.policy.add_rule(
            session.policy.new_rule(DENY, parsed.boundary, ORIGIN_INVARIANT)
        )


def cmd_proxy(args) -> int:
    profiles = load_profiles(
        Path(args.profiles).read_text() if args.profiles else _bundled("profiles.json")
    )
    if args.session:
        ctx = load_session_config(Path(args.session).read_text(), default_sensitive=True)
    else:
        ctx = load_session_config({"workdir": os.getcwd()}, default_sensitive=True)

    policy_path = args.policy or os.environ.get("LEASH_POLICY")
    policy = load_policy(Path(policy_path).read_bytes()) if policy_path else Policy()

    audit_fh = open(args.audit, "a", buffering=1) if args.audit else None
    controller_holder = {}

    def audit_sink(record):
        if audit_fh is not None:
            audit_fh.write(json.dumps(record.to_obj()) + "\n")
        controller = controller_holder.get("c")
        if controller is not None:
            controller.publish_audit(record)

    session = Session(
        ctx,
        profiles,
        policy=policy,
        consent_timeout=args.consent_timeout,
        audit_sink=audit_sink,
    )
    if args.invariants:
        _load_invariants(session, args.invariants)

    upstreams = [_parse_server(value, i) for i, value in enumerate(args.server)]
    proxy = ProxyServer(upstreams, session)
    controller = SessionController(session, resolve=proxy.resolve_pending)
    controller_holder["c"] = controller

    api = None
    if args.listen is not None:
        api = ConsentApi(controller, port=args.listen, panel_dir=args.panel)
        api.start()
        print(f"consent api on http://127.0.0.1:{api.port}", file=sys.stderr)

    prompt = None
    if args.ui == "tty":
        tty = open_tty()
        if tty is None:
            print("no controlling terminal; asks resolve by timeout", file=sys.stderr)
        else:
            answers, out = tty
            prompt = TtyPrompt(controller, out, answers)
            prompt.start()

    try:
        return proxy.run()
    finally:
        if prompt is not None:
            prompt.stop()
        if api is not None:
            api.stop()
        if audit_fh is not None:
            audit_fh.close()


def cmd_replay(args) -> int:
    traces = load_traces(args.traces)
    if not traces:
        print(f"no traces under {args.traces}", file=sys.stderr)
        return 2
    profiles = None
    if args.mode == MODE_RE_ABSTRACT:
        profiles = load_profiles(
            Path(args.profiles).read_text() if args.profiles else _bundled("profiles.json")
        )
    results = replay_all(traces, mode=args.mode, profiles=profiles)
    report = score(results)
    print(
        f"traces={report.traces} steps={report.steps} "
        f"step_accuracy={report.step_accuracy:.4f} trace_accuracy={report.trace_accuracy:.4f}"
    )
    print(
        f"precision={report.precision:.4f} recall={report.recall:.4f} f1={report.f1:.4f} "
        f"decide_p50={report.latency_ms['p50']:.3f}ms"
    )
    for category, stats in sorted(report.per_category.items()):
        print(
            f"  {category:<20} traces={stats['traces']:>3} steps={stats['steps']:>4} "
            f"step_acc={stats['step_accuracy']:.4f} trace_acc={stats['trace_accuracy']:.4f}"
        )
    for res in results:
        if not res.all_correct:
            print(f"  MISMATCH {res.trace.name}: predicted={res.predicted} "
                  f"expected={res.expected}")
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_obj(), indent=2) + "\n")
        print(f"report written to {args.report}")
    return 0 if report.step_accuracy == 1.0 else 1


def cmd_bench(args) -> int:
    from . import bench

    argv = []
    if args.sizes:
        argv += ["--sizes", *map(str, args.sizes)]
    if args.rules:
        argv += ["--rules", *map(str, args.rules)]
    return bench.main(argv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leash",
                                     description="boundary-scoped consent middleware")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("proxy", help="interpose between an MCP host and servers")
    p.add_argument("--server", action="append", required=True,
                   metavar="[ALIAS=]CMD",
                   help="upstream server command; repeat for multi-server sessions")
    p.add_argument("--policy", help="policy file (fallback: LEASH_POLICY env var)")
    p.add_argument("--invariants", help="invariant DSL file, one deny rule per line")
    p.add_argument("--profiles", help="tool profile JSON (default: bundled set)")
    p.add_argument("--session", help="session config JSON (workdir, anchors, ...)")
    p.add_argument("--ui", choices=["web", "tty"], default="web")
    p.add_argument("--listen", type=int, default=None,
                   help="consent API port on 127.0.0.1 (0 = ephemeral)")
    p.add_argument("--audit", help="audit log path (JSONL, appended)")
    p.add_argument("--panel", help="directory of built panel files to serve at /")
    p.add_argument("--consent-timeout", type=float, default=300.0)
    p.set_defaults(func=cmd_proxy)

    r = sub.add_parser("replay", help="replay a trace corpus and score it")
    r.add_argument("traces", help="directory of *.jsonl trace files")
    r.add_argument("--mode", choices=[MODE_USE_CAPABILITY, MODE_RE_ABSTRACT],
                   default=MODE_USE_CAPABILITY)
    r.add_argument("--report", help="write the metrics report to this JSON file")
    r.add_argument("--profiles", help="tool profile JSON for re-abstract mode")
    r.set_defaults(func=cmd_replay)

    b = sub.add_parser("bench", help="kernel and decide micro-benchmarks")
    b.add_argument("--sizes", type=int, nargs="*")
    b.add_argument("--rules", type=int, nargs="*")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
