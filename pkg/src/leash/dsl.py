"""Textual rule grammar: parser and pretty-printer.

    rule   := ("allow" | "deny") loc guard? "-[" taints ";" effects "]->" loc guard?
    loc    := exact | parent | local | ctxt | intnet | extnet
    guard  := "(" <resource or pattern> ")"
    taints := label ("," label)*          label  ∈ {tainted, untainted}
    effects:= effect ("," effect)*        effect ∈ {read, write, del, exec, spawn}

Example: deny local -[tainted; write]-> extnet

Lists use "," inside and ";" between so the grammar stays LL(1).  Rendering
then reparsing yields a structurally equal rule; rendering normalizes label
order and whitespace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Set, Tuple

from .lattice import (
    EFFECTS,
    TAINT_LABELS,
    Boundary,
    LocationBound,
    LocationClass,
    ResourceGuard,
    _ordered_effects,
    _ordered_taint,
)
from .policy import ACTIONS, ALLOW, DENY

_LOC_NAMES = {c.value for c in LocationClass}


class DslParseError(Exception):
    """Located parse failure: byte offset plus the token set expected there."""

    def __init__(self, message: str, offset: int, expected: Optional[Set[str]] = None,
                 line: Optional[int] = None):
        self.message = message
        self.offset = offset
        self.expected = set(expected or ())
        self.line = line
        at = f" at offset {offset}"
        if line is not None:
            at = f" on line {line}" + at
        hint = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(message + at + hint)


@dataclass(frozen=True)
class DslRule:
    action: str
    boundary: Boundary
    span: Tuple[int, int]
    line: Optional[int] = None


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def word(self, expected: Set[str], what: str) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        token = self.text[start:self.pos]
        if token not in expected:
            self.pos = start
            shown = token if token else self.text[start:start + 1] or "<end>"
            raise DslParseError(f"unexpected token {shown!r} for {what}", start, expected)
        return token

    def literal(self, lit: str) -> None:
        self.skip_ws()
        if not self.text.startswith(lit, self.pos):
            raise DslParseError(
                f"expected {lit!r}", self.pos, {lit}
            )
        self.pos += len(lit)

    def peek(self, lit: str) -> bool:
        self.skip_ws()
        return self.text.startswith(lit, self.pos)


def _parse_guard(cur: _Cursor) -> ResourceGuard:
    if not cur.peek("("):
        return ResourceGuard.none()
    cur.literal("(")
    start = cur.pos
    end = cur.text.find(")", start)
    if end < 0:
        raise DslParseError("unterminated guard", start, {")"})
    raw = cur.text[start:end].strip()
    cur.pos = end + 1
    if not raw:
        raise DslParseError("empty guard", start)
    return ResourceGuard.parse(raw)


def _parse_list(cur: _Cursor, vocab: Tuple[str, ...], what: str) -> frozenset:
    items: List[str] = []
    expected = set(vocab)
    items.append(cur.word(expected, what))
    while cur.peek(","):
        cur.literal(",")
        items.append(cur.word(expected, what))
    return frozenset(items)


def _parse_location(cur: _Cursor) -> LocationBound:
    name = cur.word(_LOC_NAMES, "location class")
    guard = _parse_guard(cur)
    return LocationBound(LocationClass(name), guard)


def parse_rule(text: str, line: Optional[int] = None) -> DslRule:
    """Parse one rule line; raises DslParseError with offset and expected set."""
    cur = _Cursor(text)
    start = cur.pos
    action_word = cur.word({"allow", "deny"}, "action")
    action = ALLOW if action_word == "allow" else DENY
    source = _parse_location(cur)
    cur.literal("-[")
    taint = _parse_list(cur, TAINT_LABELS, "taint label")
    cur.literal(";")
    effects = _parse_list(cur, EFFECTS, "effect")
    cur.literal("]->")
    sink = _parse_location(cur)
    if not cur.at_end():
        raise DslParseError(f"trailing input {cur.text[cur.pos:].strip()!r}", cur.pos)
    boundary = Boundary(source, sink, taint, effects)
    return DslRule(action, boundary, (start, cur.pos), line)


def render_rule(rule: DslRule) -> str:
    return render(rule.action, rule.boundary)


def render(action: str, boundary: Boundary) -> str:
    if action not in ACTIONS:
        raise ValueError(f"unknown action {action!r}")

    def loc(bound: LocationBound) -> str:
        if bound.guard.is_none:
            return bound.cls.value
        return f"{bound.cls.value}({bound.guard.pattern})"

    taints = ",".join(_ordered_taint(boundary.taint))
    effects = ",".join(_ordered_effects(boundary.effects))
    return (
        f"{action.lower()} {loc(boundary.input)} "
        f"-[{taints}; {effects}]-> {loc(boundary.output)}"
    )


def parse_policy_file(text: str) -> List[DslRule]:
    """One rule per non-empty, non-comment line; fails on the first bad line."""
    rules: List[DslRule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            rules.append(parse_rule(raw.rstrip("\n"), line=lineno))
        except DslParseError as exc:
            raise DslParseError(exc.message, exc.offset, exc.expected, line=lineno) from None
    return rules
