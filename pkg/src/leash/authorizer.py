"""Per-call authorization loop.

Ties abstraction, the policy decision, consent handling, taint propagation,
and refinement together for one session: abstract the call, decide; ALLOW
executes and propagates taint, DENY blocks with the violated rule, ASK parks
the call behind a pending consent prompt.  Calls arriving while an ask is
pending queue FIFO.  Every outcome appends an audit record.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, List, Optional, Sequence, Tuple, Union

from .abstraction import (
    AbstractionError,
    Classifier,
    RawCall,
    SessionContext,
    ToolProfile,
    abstract_call,
)
from .dsl import parse_rule
from .lattice import (
    EFFECTS,
    TAINTED,
    UNTAINTED,
    Boundary,
    LocationBound,
    LocationClass,
    render_boundary,
)
from .policy import ALLOW, ASK, DENY, ORIGIN_INVARIANT, Policy, PolicyError, Rule
from .refine import ConsentOption, generalize, generate_options, refine
from .taint import CTXT_KEY, TaintEnvironment

EXECUTE = "EXECUTE"
BLOCK = "BLOCK"
AWAIT_CONSENT = "AWAIT_CONSENT"

DEFAULT_CONSENT_TIMEOUT = 300.0


class ConsentError(Exception):
    """Invalid consent resolution; the pending ask is left untouched."""


@dataclass(frozen=True)
class AuditRecord:
    step: int
    tool_ref: str
    boundary: Boundary
    verdict: str
    matched: Tuple[str, ...]
    latency_ms: float
    option: Optional[str] = None

    def to_obj(self) -> dict:
        from .policy import boundary_to_obj

        return {
            "step": self.step,
            "tool_ref": self.tool_ref,
            "boundary": boundary_to_obj(self.boundary),
            "verdict": self.verdict,
            "matched": list(self.matched),
            "latency_ms": round(self.latency_ms, 3),
            "option": self.option,
        }


@dataclass
class PendingAsk:
    ask_id: int
    call: RawCall
    boundary: Boundary
    options: Tuple[ConsentOption, ...]
    issued_at: float
    degraded: bool = False
    source_key: Optional[str] = None
    sink_key: Optional[str] = None


@dataclass(frozen=True)
class CallOutcome:
    kind: str
    call: RawCall
    reason: str = ""
    matched: Tuple[str, ...] = ()
    pending: Optional[PendingAsk] = None
    queued: bool = False


def _degraded_boundary() -> Boundary:
    # Could-be-anything envelope shown to the user when abstraction failed.
    return Boundary(
        LocationBound(LocationClass.LOCAL),
        LocationBound(LocationClass.EXTNET),
        frozenset({TAINTED, UNTAINTED}),
        frozenset(EFFECTS),
    )


class Session:
    """One authorizer per tool session; single-writer over policy and taint."""

    def __init__(
        self,
        ctx: SessionContext,
        profiles: dict,
        policy: Optional[Policy] = None,
        env: Optional[TaintEnvironment] = None,
        classifier: Optional[Classifier] = None,
        clock: Callable[[], float] = time.time,
        perf: Callable[[], float] = time.perf_counter,
        consent_timeout: float = DEFAULT_CONSENT_TIMEOUT,
        audit_sink: Optional[Callable[[AuditRecord], None]] = None,
    ):
        self.ctx = ctx
        self.profiles = profiles
        self.policy = policy if policy is not None else Policy(clock=clock)
        self.env = env if env is not None else TaintEnvironment.seeded(ctx.sensitive)
        self.classifier = classifier
        self.clock = clock
        self.perf = perf
        self.consent_timeout = consent_timeout
        self.audit: List[AuditRecord] = []
        self.audit_sink = audit_sink
        self.pending: Optional[PendingAsk] = None
        self.queue: Deque[RawCall] = deque()
        # abstraction is timed separately from decide (the audit latency
        # field measures decide only)
        self.stats = {"abstract_ms": 0.0, "decide_ms": 0.0, "calls": 0}
        self._ask_counter = 0
        self._lock = threading.RLock()

    # -- audit ---------------------------------------------------------

    def _record(
        self,
        call: RawCall,
        boundary: Boundary,
        verdict: str,
        matched: Tuple[str, ...],
        latency_ms: float,
        option: Optional[str] = None,
    ) -> AuditRecord:
        rec = AuditRecord(call.step, call.tool_ref, boundary.rule_form(), verdict,
                          matched, latency_ms, option)
        self.audit.append(rec)
        if self.audit_sink is not None:
            self.audit_sink(rec)
        return rec

    # -- the loop --------------------------------------------------------

    def process_call(self, call: RawCall) -> CallOutcome:
        """Authorize one call; AWAIT_CONSENT if it must wait on the user.

        While an ask is pending, further calls queue FIFO and report the
        existing pending ask.
        """
        with self._lock:
            if self.pending is not None:
                self.queue.append(call)
                return CallOutcome(AWAIT_CONSENT, call, pending=self.pending, queued=True)
            return self._evaluate(call)

    def _new_ask(
        self,
        call: RawCall,
        boundary: Boundary,
        options: Sequence[ConsentOption],
        degraded: bool,
        source_key: Optional[str],
        sink_key: Optional[str],
    ) -> PendingAsk:
        self._ask_counter += 1
        ask = PendingAsk(
            self._ask_counter, call, boundary, tuple(options), self.clock(),
            degraded, source_key, sink_key,
        )
        self.pending = ask
        return ask

    def _evaluate(self, call: RawCall) -> CallOutcome:
        self.stats["calls"] += 1
        abstract_start = self.perf()
        try:
            abstracted = abstract_call(self.ctx, self.env, self.profiles, call,
                                       classifier=self.classifier)
            self.stats["abstract_ms"] += (self.perf() - abstract_start) * 1000.0
        except AbstractionError as exc:
            self.stats["abstract_ms"] += (self.perf() - abstract_start) * 1000.0
            boundary = _degraded_boundary()
            options = (
                ConsentOption(f"Allow once (unrecognized call: {exc})", boundary, False, ALLOW),
                ConsentOption(f"Deny once (unrecognized call: {exc})", boundary, False, DENY),
            )
            ask = self._new_ask(call, boundary, options, True, None, None)
            self._record(call, boundary, ASK, (), 0.0)
            return CallOutcome(AWAIT_CONSENT, call, reason=str(exc), pending=ask)

        start = self.perf()
        decision = self.policy.decide(abstracted.boundary)
        latency_ms = (self.perf() - start) * 1000.0
        self.stats["decide_ms"] += latency_ms

        if decision.verdict == ALLOW:
            self.env = self.env.propagate(
                abstracted.boundary, abstracted.sink_key, abstracted.source_key
            )
            self._record(call, abstracted.boundary, ALLOW, decision.matched, latency_ms)
            return CallOutcome(EXECUTE, call, reason=decision.reason, matched=decision.matched)
        if decision.verdict == DENY:
            self._record(call, abstracted.boundary, DENY, decision.matched, latency_ms)
            return CallOutcome(BLOCK, call, reason=decision.reason, matched=decision.matched)

        options = generate_options(abstracted.boundary)
        ask = self._new_ask(call, abstracted.boundary, options, False,
                            abstracted.source_key, abstracted.sink_key)
        self._record(call, abstracted.boundary, ASK, decision.matched, latency_ms)
        return CallOutcome(AWAIT_CONSENT, call, reason=decision.reason, pending=ask)

    def _resolve_option(self, answer: Union[int, ConsentOption]) -> ConsentOption:
        assert self.pending is not None
        if isinstance(answer, int):
            if not 0 <= answer < len(self.pending.options):
                raise ConsentError(f"option index {answer} out of range")
            return self.pending.options[answer]
        if answer not in self.pending.options:
            raise ConsentError("answer is not among the offered options")
        return answer

    def resolve_consent(self, answer: Union[int, ConsentOption]) -> List[CallOutcome]:
        """Apply a consent answer to the held call, then drain queued calls.

        Returns the held call's outcome first, followed by outcomes for
        drained calls up to the next AWAIT_CONSENT (inclusive).
        """
        with self._lock:
            if self.pending is None:
                raise ConsentError("no pending ask")
            option = self._resolve_option(answer)
            return self._finish_pending(option)

    def _finish_pending(self, option: ConsentOption) -> List[CallOutcome]:
        assert self.pending is not None
        ask = self.pending
        created: Tuple[str, ...] = ()
        if option.durable:
            before = {r.id for r in self.policy.rules}
            refine(self.policy, option)
            created = tuple(r.id for r in self.policy.rules if r.id not in before)
            generalize(self.policy)
        else:
            refine(self.policy, option)

        if option.action == ALLOW:
            if ask.degraded:
                # Unknown flow executed: assume the context absorbed something.
                self.env = TaintEnvironment(
                    tuple(sorted(dict(self.env.entries, **{CTXT_KEY: TAINTED}).items())),
                    self.env.seeds,
                )
            else:
                self.env = self.env.propagate(ask.boundary, ask.sink_key, ask.source_key)
            self._record(ask.call, ask.boundary, ALLOW, created, 0.0, option.label)
            first = CallOutcome(EXECUTE, ask.call, reason="consented", matched=created)
        else:
            self._record(ask.call, ask.boundary, DENY, created, 0.0, option.label)
            first = CallOutcome(BLOCK, ask.call, reason="consent denied", matched=created)

        self.pending = None
        outcomes = [first]
        while self.queue and self.pending is None:
            outcomes.append(self._evaluate(self.queue.popleft()))
        return outcomes

    def check_timeout(self, now: Optional[float] = None) -> List[CallOutcome]:
        """Resolve an expired pending ask as deny-once (fail-safe)."""
        with self._lock:
            if self.pending is None:
                return []
            now = self.clock() if now is None else now
            if now - self.pending.issued_at < self.consent_timeout:
                return []
            deny_once = next(
                o for o in self.pending.options if o.action == DENY and not o.durable
            )
            return self._finish_pending(deny_once)

    def submit_invariant(self, text: str) -> Rule:
        """Parse and install a DSL invariant; only deny rules are accepted."""
        with self._lock:
            parsed = parse_rule(text)
            if parsed.action != DENY:
                raise PolicyError("invariants must be deny rules")
            rule = self.policy.new_rule(DENY, parsed.boundary, ORIGIN_INVARIANT)
            self.policy.add_rule(rule)
            return rule
