"""Trace replay harness and scoring.

Traces are newline-delimited JSON documents: one trace object per line, each
with a `session_context` (workdir, user_intent, invariants, plus optional
topology keys) and a `sequence` of steps carrying `tool_ref`, `params`, a
`capability` lattice tuple, the oracle `expected_decision`, and for Ask steps
the simulated durable grant in `consent_bound` ({lattice, refinement}).

Replay runs each step through the decision pipeline.  In use-capability mode
the boundary comes from the trace's capability field (concrete guards are
recovered from params by a fixed key-priority convention, part of the trace
format contract); in re-abstract mode the boundary is recomputed from tool
profiles.  Scripted consent applies the trace's bound as a durable ALLOW.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .abstraction import (
    KIND_FILESYSTEM,
    KIND_NETWORK,
    SessionContext,
    abstract_call,
    canonical_resource,
    stricter_taint,
)
from .abstraction import AbstractionError  # noqa: F401  (re-exported for callers)
from .dsl import parse_policy_file
from .lattice import (
    EFFECTS,
    TAINT_LABELS,
    Boundary,
    LocationBound,
    LocationClass,
    ResourceGuard,
)
from .policy import ALLOW, ASK, DENY, ORIGIN_INVARIANT, ORIGIN_USER, Policy
from .abstraction import RawCall
from .taint import CTXT_KEY, TaintEnvironment

MODE_USE_CAPABILITY = "use-capability"
MODE_RE_ABSTRACT = "re-abstract"

LABEL_ALLOW = "Allow"
LABEL_ASK = "Ask"
LABEL_DENY = "Deny"
_VERDICT_LABEL = {ALLOW: LABEL_ALLOW, ASK: LABEL_ASK, DENY: LABEL_DENY}

# Param keys scanned for the concrete source/sink resources, in order.
INPUT_PARAM_PRIORITY = ("path", "file", "src", "source", "attachment", "url", "target", "dir")
SINK_PARAM_PRIORITY = ("to", "recipient", "dest", "destination", "channel", "url", "path")

_SESSION_KEYS = {"workdir", "user_intent", "invariants", "sensitive", "internal_hosts", "anchors"}
_STEP_KEYS = {"step", "tool_ref", "params", "capability", "expected_decision", "consent_bound"}
_CAP_KEYS = {"l_i", "l_o", "taint", "effects"}
_BOUND_KEYS = {"lattice", "refinement"}


class TraceFormatError(Exception):
    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{message}" + (f" at {where}" if where else ""))


@dataclass(frozen=True)
class ConsentBound:
    lattice: Boundary
    input_refinement: Optional[str] = None
    output_refinement: Optional[str] = None

    def rule_boundary(self) -> Boundary:
        li = self.lattice.input
        lo = self.lattice.output
        if self.input_refinement:
            li = LocationBound(li.cls, ResourceGuard.parse(self.input_refinement))
        if self.output_refinement:
            lo = LocationBound(lo.cls, ResourceGuard.parse(self.output_refinement))
        return Boundary(li, lo, self.lattice.taint, self.lattice.effects)


@dataclass(frozen=True)
class TraceStep:
    step: int
    tool_ref: str
    params: dict
    capability: Boundary
    expected: str
    consent_bound: Optional[ConsentBound] = None


@dataclass(frozen=True)
class Trace:
    name: str
    category: str
    workdir: str
    user_intent: str
    invariants: Tuple[str, ...]
    steps: Tuple[TraceStep, ...]
    sensitive: Tuple[str, ...] = ()
    internal_hosts: Tuple[str, ...] = ()
    anchors: Tuple[str, ...] = ()

    def servers(self) -> set:
        return {s.tool_ref.split(".", 1)[0] for s in self.steps}


@dataclass
class TraceResult:
    trace: Trace
    predicted: List[str]
    expected: List[str]
    latencies_ms: List[float]

    @property
    def correct_steps(self) -> int:
        return sum(p == e for p, e in zip(self.predicted, self.expected))

    @property
    def all_correct(self) -> bool:
        return self.predicted == self.expected


@dataclass
class MetricsReport:
    step_accuracy: float
    trace_accuracy: float
    precision: float
    recall: float
    f1: float
    steps: int
    traces: int
    confusion: Dict[str, int]
    per_category: Dict[str, dict]
    latency_ms: Dict[str, float]

    def to_obj(self) -> dict:
        return {
            "step_accuracy": self.step_accuracy,
            "trace_accuracy": self.trace_accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "steps": self.steps,
            "traces": self.traces,
            "confusion": self.confusion,
            "per_category": self.per_category,
            "latency_ms": self.latency_ms,
        }


# --- loading -----------------------------------------------------------------

def _capability_from_obj(obj, where: str) -> Boundary:
    if not isinstance(obj, dict):
        raise TraceFormatError("capability must be an object", where)
    unknown = set(obj) - _CAP_KEYS
    if unknown:
        raise TraceFormatError(f"unknown capability key {sorted(unknown)[0]!r}", where)
    for key in _CAP_KEYS:
        if key not in obj:
            raise TraceFormatError(f"capability missing {key!r}", where)
    try:
        li = LocationClass(obj["l_i"])
        lo = LocationClass(obj["l_o"])
    except ValueError as exc:
        raise TraceFormatError(str(exc), where)
    taint = obj["taint"]
    if isinstance(taint, str):
        taint_set = frozenset({taint})  # the trace format writes one label
    else:
        taint_set = frozenset(taint)
    if taint_set - set(TAINT_LABELS):
        raise TraceFormatError(f"unknown taint in {sorted(taint_set)}", where)
    effects = frozenset(obj["effects"])
    if not effects or effects - set(EFFECTS):
        raise TraceFormatError(f"invalid effects {sorted(obj['effects'])}", where)
    return Boundary.abstract(li, lo, taint_set, effects)


def _consent_bound_from_obj(obj, where: str) -> ConsentBound:
    if not isinstance(obj, dict):
        raise TraceFormatError("consent_bound must be an object", where)
    unknown = set(obj) - _BOUND_KEYS
    if unknown:
        raise TraceFormatError(f"unknown consent_bound key {sorted(unknown)[0]!r}", where)
    if "lattice" not in obj:
        raise TraceFormatError("consent_bound missing 'lattice'", where)
    lattice = _capability_from_obj(obj["lattice"], where + ".lattice")
    refinement = obj.get("refinement")
    if refinement is None:
        return ConsentBound(lattice)
    if isinstance(refinement, str):
        return ConsentBound(lattice, input_refinement=refinement)
    if isinstance(refinement, dict) and set(refinement) <= {"input", "output"}:
        return ConsentBound(
            lattice,
            input_refinement=refinement.get("input"),
            output_refinement=refinement.get("output"),
        )
    raise TraceFormatError("refinement must be a pattern or {input, output}", where)


def parse_trace(obj: dict, name: str = "trace", category: str = "uncategorized") -> Trace:
    if not isinstance(obj, dict) or set(obj) - {"session_context", "sequence"}:
        raise TraceFormatError("trace must be {session_context, sequence}", name)
    sc = obj.get("session_context")
    if not isinstance(sc, dict):
        raise TraceFormatError("missing session_context", name)
    unknown = set(sc) - _SESSION_KEYS
    if unknown:
        raise TraceFormatError(f"unknown session_context key {sorted(unknown)[0]!r}", name)
    if "workdir" not in sc:
        raise TraceFormatError("session_context missing workdir", name)
    seq = obj.get("sequence")
    if not isinstance(seq, list) or not seq:
        raise TraceFormatError("sequence must be a non-empty list", name)
    steps: List[TraceStep] = []
    last_ordinal = 0
    for idx, raw in enumerate(seq):
        where = f"{name}.sequence[{idx}]"
        if not isinstance(raw, dict):
            raise TraceFormatError("step must be an object", where)
        unknown = set(raw) - _STEP_KEYS
        if unknown:
            raise TraceFormatError(f"unknown step key {sorted(unknown)[0]!r}", where)
        for key in ("step", "tool_ref", "params", "capability", "expected_decision"):
            if key not in raw:
                raise TraceFormatError(f"step missing {key!r}", where)
        ordinal = raw["step"]
        if not isinstance(ordinal, int) or ordinal <= last_ordinal:
            raise TraceFormatError("step ordinals must be strictly increasing", where)
        last_ordinal = ordinal
        expected = raw["expected_decision"]
        if expected not in (LABEL_ALLOW, LABEL_ASK, LABEL_DENY):
            raise TraceFormatError(f"unknown expected_decision {expected!r}", where)
        bound = None
        if "consent_bound" in raw and raw["consent_bound"] is not None:
            bound = _consent_bound_from_obj(raw["consent_bound"], where + ".consent_bound")
        steps.append(
            TraceStep(
                step=ordinal,
                tool_ref=raw["tool_ref"],
                params=dict(raw["params"]),
                capability=_capability_from_obj(raw["capability"], where + ".capability"),
                expected=expected,
                consent_bound=bound,
            )
        )
    for idx, st in enumerate(steps):
        if st.expected == LABEL_ASK and st.consent_bound is None and idx < len(steps) - 1:
            raise TraceFormatError(
                "non-final Ask step needs a consent_bound", f"{name}.sequence[{idx}]"
            )
    return Trace(
        name=name,
        category=category,
        workdir=sc["workdir"],
        user_intent=sc.get("user_intent", ""),
        invariants=tuple(sc.get("invariants", [])),
        steps=tuple(steps),
        sensitive=tuple(sc.get("sensitive", [])),
        internal_hosts=tuple(sc.get("internal_hosts", [])),
        anchors=tuple(sc.get("anchors", [])),
    )


def load_traces(directory) -> List[Trace]:
    """All traces under a directory: *.jsonl files, one trace per line."""
    root = Path(directory)
    traces: List[Trace] = []
    for path in sorted(root.glob("*.jsonl")):
        category = path.stem
        with path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise TraceFormatError(f"invalid JSON: {exc.msg}", f"{path.name}:{lineno}")
                traces.append(parse_trace(obj, f"{path.stem}[{lineno}]", category))
    return traces


# --- replay ------------------------------------------------------------------

def _trace_context(trace: Trace) -> SessionContext:
    return SessionContext(
        workdir=trace.workdir,
        anchors=frozenset(trace.anchors),
        internal_hosts=trace.internal_hosts,
        sensitive=tuple(ResourceGuard.parse(p) for p in trace.sensitive),
    )


def _pick_param(params: dict, priority: Sequence[str], skip: Optional[str] = None) -> Optional[str]:
    for key in priority:
        if key == skip:
            continue
        value = params.get(key)
        if isinstance(value, str) and value.strip():
            return key
    return None


def _step_resources(step: TraceStep, ctx: SessionContext) -> Tuple[Optional[str], Optional[str], str, str]:
    """(input key, sink key, source taint key, sink taint key)."""
    cap = step.capability
    in_param = None
    if cap.input.cls is not LocationClass.CTXT:
        in_param = _pick_param(step.params, INPUT_PARAM_PRIORITY)
    out_param = None
    if cap.output.cls is not LocationClass.CTXT:
        out_param = _pick_param(step.params, SINK_PARAM_PRIORITY, skip=in_param)

    def canon(param: Optional[str], cls: LocationClass) -> Optional[str]:
        if param is None:
            return None
        kind = KIND_NETWORK if cls in (LocationClass.INTNET, LocationClass.EXTNET) else KIND_FILESYSTEM
        return canonical_resource(str(step.params[param]), kind, ctx)

    in_key = canon(in_param, cap.input.cls)
    out_key = canon(out_param, cap.output.cls)
    return in_key, out_key, in_key or CTXT_KEY, out_key or CTXT_KEY


def _capability_boundary(step: TraceStep, ctx: SessionContext, env: TaintEnvironment):
    cap = step.capability
    in_key, out_key, source_key, sink_key = _step_resources(step, ctx)
    li = LocationBound.at(cap.input.cls, in_key) if in_key else (
        LocationBound(LocationClass.CTXT, ResourceGuard.exact(CTXT_KEY), CTXT_KEY)
        if cap.input.cls is LocationClass.CTXT
        else LocationBound.abstract(cap.input.cls)
    )
    lo = LocationBound.at(cap.output.cls, out_key) if out_key else (
        LocationBound(LocationClass.CTXT, ResourceGuard.exact(CTXT_KEY), CTXT_KEY)
        if cap.output.cls is LocationClass.CTXT
        else LocationBound.abstract(cap.output.cls)
    )
    labels = set(cap.taint) or {"untainted"}
    external = "tainted" if "tainted" in labels else "untainted"
    label = stricter_taint(env.query(source_key), external)
    boundary = Boundary(li, lo, frozenset({label}), cap.effects)
    return boundary, source_key, sink_key


def replay(
    trace: Trace,
    mode: str = MODE_USE_CAPABILITY,
    profiles: Optional[dict] = None,
    perf=time.perf_counter,
) -> TraceResult:
    """Replay one trace through the decision pipeline with a scripted user."""
    if mode not in (MODE_USE_CAPABILITY, MODE_RE_ABSTRACT):
        raise ValueError(f"unknown replay mode {mode!r}")
    if mode == MODE_RE_ABSTRACT and not profiles:
        raise ValueError("re-abstract mode needs tool profiles")

    ctx = _trace_context(trace)
    policy = Policy(clock=lambda: 0.0)
    for parsed in parse_policy_file("\n".join(trace.invariants)):
        if parsed.action != DENY:
            raise TraceFormatError("trace invariants must be deny rules", trace.name)
        policy.add_rule(policy.new_rule(DENY, parsed.boundary, ORIGIN_INVARIANT))
    env = TaintEnvironment.seeded(ctx.sensitive)

    predicted: List[str] = []
    latencies: List[float] = []
    for idx, step in enumerate(trace.steps):
        if mode == MODE_USE_CAPABILITY:
            boundary, source_key, sink_key = _capability_boundary(step, ctx, env)
        else:
            call = RawCall(step.tool_ref, step.params, step.step)
            abstracted = abstract_call(ctx, env, profiles, call)
            boundary, source_key, sink_key = abstracted

        start = perf()
        decision = policy.decide(boundary)
        latencies.append((perf() - start) * 1000.0)
        label = _VERDICT_LABEL[decision.verdict]
        predicted.append(label)

        executed = decision.verdict == ALLOW
        if decision.verdict == ASK and step.consent_bound is not None:
            # Scripted durable grant at the stated granularity; the held call
            # then proceeds (basic refinement only, mirroring the oracle).
            policy.add_rule(
                policy.new_rule(ALLOW, step.consent_bound.rule_boundary(), ORIGIN_USER)
            )
            executed = True
        if executed:
            env = env.propagate(boundary, sink_key, source_key)

    return TraceResult(trace, predicted, [s.expected for s in trace.steps], latencies)


def replay_all(traces: Sequence[Trace], mode: str = MODE_USE_CAPABILITY,
               profiles: Optional[dict] = None) -> List[TraceResult]:
    return [replay(t, mode=mode, profiles=profiles) for t in traces]


# --- scoring -----------------------------------------------------------------

def _positive(label: str) -> bool:
    return label in (LABEL_ASK, LABEL_DENY)


def _percentile(values: List[float], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
    return ordered[int(idx)]


def _rates(results: Sequence[TraceResult]) -> dict:
    tp = fp = fn = tn = 0
    correct = total = 0
    perfect = 0
    for res in results:
        correct += res.correct_steps
        total += len(res.expected)
        perfect += res.all_correct
        for p, e in zip(res.predicted, res.expected):
            if _positive(p) and _positive(e):
                tp += 1
            elif _positive(p):
                fp += 1
            elif _positive(e):
                fn += 1
            else:
                tn += 1
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "tp": tp, "fp": fp, "fn": fn, "tn": tn,
        "step_accuracy": correct / total if total else 1.0,
        "trace_accuracy": perfect / len(results) if results else 1.0,
        "precision": precision, "recall": recall, "f1": f1,
        "steps": total, "traces": len(results),
    }


def score(results: Sequence[TraceResult]) -> MetricsReport:
    """Step/trace accuracy plus P/R/F1 with positive class {Ask, Deny}."""
    for res in results:
        if len(res.predicted) != len(res.expected):
            raise ValueError(f"{res.trace.name}: decision/step length mismatch")
    overall = _rates(results)
    by_cat: Dict[str, dict] = {}
    for category in sorted({r.trace.category for r in results}):
        sub = _rates([r for r in results if r.trace.category == category])
        by_cat[category] = {
            "steps": sub["steps"],
            "traces": sub["traces"],
            "step_accuracy": sub["step_accuracy"],
            "trace_accuracy": sub["trace_accuracy"],
        }
    lat = [ms for r in results for ms in r.latencies_ms]
    return MetricsReport(
        step_accuracy=overall["step_accuracy"],
        trace_accuracy=overall["trace_accuracy"],
        precision=overall["precision"],
        recall=overall["recall"],
        f1=overall["f1"],
        steps=overall["steps"],
        traces=overall["traces"],
        confusion={k: overall[k] for k in ("tp", "fp", "fn", "tn")},
        per_category=by_cat,
        latency_ms={
            "p50": _percentile(lat, 0.50),
            "p90": _percentile(lat, 0.90),
            "p99": _percentile(lat, 0.99),
        },
    )
