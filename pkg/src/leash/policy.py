"""Policy store and the three-valued decision query.

A policy is a set of action-tagged boundaries split by origin: non-overridable
`invariant` DENY rules and accumulated `user` rules.  `decide` checks
invariants first, then takes the action consensus of the frontier (the most
specific user rules covering the query); anything else is ASK.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import kernel
from .lattice import (
    Boundary,
    LocationBound,
    LocationClass,
    ResourceGuard,
    boundary_leq,
    encode_abstract,
    render_boundary,
    _ordered_effects,
    _ordered_taint,
)

ALLOW = "ALLOW"
DENY = "DENY"
ASK = "ASK"
ACTIONS = (ALLOW, DENY)

ORIGIN_INVARIANT = "invariant"
ORIGIN_USER = "user"
ORIGINS = (ORIGIN_INVARIANT, ORIGIN_USER)


class PolicyError(Exception):
    pass


class PolicyFormatError(PolicyError):
    """Schema violation in a serialized policy; carries the offending field."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f" at {path}" if path else ""
        if line is not None:
            where += f" (line {line})"
        super().__init__(message + where)


@dataclass(frozen=True)
class Rule:
    id: str
    action: str
    boundary: Boundary
    origin: str
    created_at: float

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"rule action must be ALLOW or DENY, got {self.action!r}")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown rule origin {self.origin!r}")
        if self.origin == ORIGIN_INVARIANT and self.action != DENY:
            raise ValueError("invariant rules must carry DENY")


@dataclass(frozen=True)
class Decision:
    verdict: str
    matched: Tuple[str, ...]
    reason: str


_ID_RE = re.compile(r"^[iu]-(\d+)$")


class Policy:
    """Rule set plus the session log of queried boundaries.

    Single-writer contract: rule insertion/removal and history appends are
    serialized by the caller; decisions may run concurrently on a snapshot.
    """

    def __init__(self, clock: Callable[[], float] = time.time):
        self.rules: List[Rule] = []
        self.history: List[Tuple[Boundary, Decision]] = []
        self.clock = clock
        self._cache = None

    # -- construction -------------------------------------------------

    def next_id(self, origin: str) -> str:
        prefix = "i" if origin == ORIGIN_INVARIANT else "u"
        top = 0
        for r in self.rules:
            m = _ID_RE.match(r.id)
            if m and r.id.startswith(prefix):
                top = max(top, int(m.group(1)))
        return f"{prefix}-{top + 1:04d}"

    def new_rule(
        self,
        action: str,
        boundary: Boundary,
        origin: str = ORIGIN_USER,
        created_at: Optional[float] = None,
    ) -> Rule:
        stamp = self.clock() if created_at is None else created_at
        return Rule(self.next_id(origin), action, boundary.rule_form(), origin, stamp)

    def add_rule(self, rule: Rule) -> "Policy":
        if any(r.id == rule.id for r in self.rules):
            raise PolicyError(f"duplicate rule id {rule.id}")
        clean = Rule(rule.id, rule.action, rule.boundary.rule_form(), rule.origin, rule.created_at)
        for r in self.rules:
            if (r.action, r.boundary, r.origin) == (clean.action, clean.boundary, clean.origin):
                return self  # idempotent on identical content
        self.rules.append(clean)
        self._cache = None
        return self

    def remove_rule(self, rule_id: str) -> Rule:
        for i, r in enumerate(self.rules):
            if r.id == rule_id:
                del self.rules[i]
                self._cache = None
                return r
        raise PolicyError(f"no rule with id {rule_id}")

    def get_rule(self, rule_id: str) -> Optional[Rule]:
        for r in self.rules:
            if r.id == rule_id:
                return r
        return None

    # -- queries --------------------------------------------------------

    def _encoded(self):
        if self._cache is None:
            inv = sorted((r for r in self.rules if r.origin == ORIGIN_INVARIANT), key=lambda r: r.id)
            usr = sorted((r for r in self.rules if r.origin == ORIGIN_USER), key=lambda r: r.id)
            self._cache = (
                inv,
                kernel.as_codes([encode_abstract(r.boundary) for r in inv]),
                usr,
                kernel.as_codes([encode_abstract(r.boundary) for r in usr]),
            )
        return self._cache

    def _covering(self, rules: Sequence[Rule], codes, phi: Boundary) -> List[Rule]:
        if not rules:
            return []
        mask = kernel.covers_mask(codes, encode_abstract(phi))
        out = []
        for idx in mask.nonzero()[0]:
            r = rules[int(idx)]
            if phi.input.guard.is_none and phi.output.guard.is_none:
                # abstract query: the kernel check is already exact unless the
                # rule narrows a guard
                if r.boundary.input.guard.is_none and r.boundary.output.guard.is_none:
                    out.append(r)
                    continue
            if boundary_leq(phi, r.boundary):
                out.append(r)
        return out

    def tagged_upper_set(self, phi: Boundary) -> List[Rule]:
        """All rules whose boundary covers phi, in stable id order."""
        inv, inv_codes, usr, usr_codes = self._encoded()
        hits = self._covering(inv, inv_codes, phi) + self._covering(usr, usr_codes, phi)
        return sorted(hits, key=lambda r: r.id)

    def frontier(self, phi: Boundary) -> List[Rule]:
        """Minimal elements of the tagged upper set under strict boundary order."""
        return _minimal_rules(self.tagged_upper_set(phi))

    def _decide(self, phi: Boundary) -> Decision:
        inv, inv_codes, usr, usr_codes = self._encoded()
        for r in self._covering(inv, inv_codes, phi):
            return Decision(DENY, (r.id,), f"invariant {r.id} denies {render_boundary(r.boundary)}")
        front = _minimal_rules(self._covering(usr, usr_codes, phi))
        if not front:
            return Decision(ASK, (), "no covering rule")
        actions = {r.action for r in front}
        matched = _collapse_equal(front)
        if len(actions) == 1:
            action = front[0].action
            return Decision(action, matched, f"frontier consensus {action} via {','.join(matched)}")
        return Decision(ASK, matched, f"conflicting frontier actions via {','.join(matched)}")

    def decide(self, phi: Boundary) -> Decision:
        """Three-valued decision for phi; the query is appended to history.

        History keeps the lattice point only (concrete raw arguments are
        stripped; guards stay, they are part of the order)."""
        decision = self._decide(phi)
        self.history.append((phi.rule_form(), decision))
        return decision


def _minimal_rules(rules: List[Rule]) -> List[Rule]:
    n = len(rules)
    if n <= 1:
        return list(rules)
    bounds = [r.boundary for r in rules]
    m_abs = None
    if n > 16:
        codes = kernel.as_codes([encode_abstract(b) for b in bounds])
        m_abs = kernel.leq_matrix(codes, codes)

    def leq(i: int, j: int) -> bool:
        if m_abs is not None and not m_abs[i, j]:
            return False
        return boundary_leq(bounds[i], bounds[j])

    minimal = []
    for i in range(n):
        dominated = False
        for j in range(n):
            if j != i and leq(j, i) and not leq(i, j):
                dominated = True
                break
        if not dominated:
            minimal.append(rules[i])
    return minimal


def _collapse_equal(front: List[Rule]) -> Tuple[str, ...]:
    # Equal boundaries with equal actions are one logical match; keep the
    # lowest id.  Equal boundaries with different actions both stay (the
    # caller sees the conflict through the action set).
    kept: Dict[Tuple[Boundary, str], str] = {}
    for r in sorted(front, key=lambda r: r.id):
        kept.setdefault((r.boundary, r.action), r.id)
    return tuple(sorted(kept.values()))


# --- serialization ---------------------------------------------------------

_RULE_KEYS = {"action", "boundary", "origin", "created_at"}
_BOUNDARY_KEYS = {"input", "output", "taint", "effects"}
_BOUND_KEYS = {"class", "guard"}


def _bound_to_obj(bound: LocationBound) -> dict:
    return {"class": bound.cls.value, "guard": bound.guard.serialized()}


def boundary_to_obj(b: Boundary) -> dict:
    return {
        "input": _bound_to_obj(b.input),
        "output": _bound_to_obj(b.output),
        "taint": _ordered_taint(b.taint),
        "effects": _ordered_effects(b.effects),
    }


def boundary_from_obj(obj, path: str = "boundary") -> Boundary:
    return _boundary_from_obj(obj, path)


def _rule_to_obj(rule: Rule) -> dict:
    return {
        "action": rule.action,
        "boundary": boundary_to_obj(rule.boundary),
        "origin": rule.origin,
        "created_at": rule.created_at,
    }


def _reject_unknown(obj: dict, allowed: set, path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise PolicyFormatError(f"unknown key {sorted(unknown)[0]!r}", path)


def _bound_from_obj(obj, path: str) -> LocationBound:
    if not isinstance(obj, dict):
        raise PolicyFormatError("location bound must be an object", path)
    _reject_unknown(obj, _BOUND_KEYS, path)
    if "class" not in obj:
        raise PolicyFormatError("missing 'class'", path)
    try:
        cls = LocationClass(obj["class"])
    except ValueError:
        raise PolicyFormatError(f"unknown location class {obj['class']!r}", path + ".class")
    guard = obj.get("guard")
    if guard is not None and not isinstance(guard, str):
        raise PolicyFormatError("guard must be a string or null", path + ".guard")
    return LocationBound(cls, ResourceGuard.parse(guard))


def _boundary_from_obj(obj, path: str) -> Boundary:
    if not isinstance(obj, dict):
        raise PolicyFormatError("boundary must be an object", path)
    _reject_unknown(obj, _BOUNDARY_KEYS, path)
    for key in ("input", "output", "taint", "effects"):
        if key not in obj:
            raise PolicyFormatError(f"missing {key!r}", path)
    if not isinstance(obj["taint"], list) or not isinstance(obj["effects"], list):
        raise PolicyFormatError("taint and effects must be lists", path)
    try:
        return Boundary(
            _bound_from_obj(obj["input"], path + ".input"),
            _bound_from_obj(obj["output"], path + ".output"),
            frozenset(obj["taint"]),
            frozenset(obj["effects"]),
        )
    except ValueError as exc:
        raise PolicyFormatError(str(exc), path)


def _rule_from_obj(obj, origin: str, rule_id: str, path: str) -> Rule:
    if not isinstance(obj, dict):
        raise PolicyFormatError("rule must be an object", path)
    _reject_unknown(obj, _RULE_KEYS, path)
    if "action" not in obj or "boundary" not in obj:
        raise PolicyFormatError("rule needs 'action' and 'boundary'", path)
    action = obj["action"]
    if action not in ACTIONS:
        raise PolicyFormatError(f"unknown action {action!r}", path + ".action")
    stated = obj.get("origin", origin)
    if stated != origin:
        raise PolicyFormatError(
            f"origin {stated!r} conflicts with its section ({origin})", path + ".origin"
        )
    created = obj.get("created_at", 0.0)
    if not isinstance(created, (int, float)):
        raise PolicyFormatError("created_at must be a number", path + ".created_at")
    boundary = _boundary_from_obj(obj["boundary"], path + ".boundary")
    try:
        return Rule(rule_id, action, boundary, origin, float(created))
    except ValueError as exc:
        raise PolicyFormatError(str(exc), path)


def save_policy(policy: Policy) -> bytes:
    doc = {
        "invariants": [
            _rule_to_obj(r)
            for r in sorted(policy.rules, key=lambda r: r.id)
            if r.origin == ORIGIN_INVARIANT
        ],
        "rules": [
            _rule_to_obj(r)
            for r in sorted(policy.rules, key=lambda r: r.id)
            if r.origin == ORIGIN_USER
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode()


def load_policy(data, clock: Callable[[], float] = time.time) -> Policy:
    if isinstance(data, bytes):
        data = data.decode()
    if not data.strip():
        return Policy(clock=clock)
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise PolicyFormatError(f"invalid JSON: {exc.msg}", line=exc.lineno)
    if not isinstance(doc, dict):
        raise PolicyFormatError("policy document must be an object")
    _reject_unknown(doc, {"invariants", "rules"}, "$")
    policy = Policy(clock=clock)
    for section, origin, prefix in (
        ("invariants", ORIGIN_INVARIANT, "i"),
        ("rules", ORIGIN_USER, "u"),
    ):
        items = doc.get(section, [])
        if not isinstance(items, list):
            raise PolicyFormatError(f"{section} must be a list", section)
        for idx, obj in enumerate(items):
            rule = _rule_from_obj(obj, origin, f"{prefix}-{idx + 1:04d}", f"{section}[{idx}]")
            policy.add_rule(rule)
    return policy
