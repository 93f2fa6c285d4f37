"""Risk-lattice core: location classes, resource guards, flow boundaries.

Every authorization question in this package reduces to subsumption between
*boundaries*: 4-tuples of an input location bound, an output location bound,
a taint set, and an effect set.  Each dimension carries its own partial
order and the product order is their conjunction, nothing else.

All types in this module are immutable values; every operation is pure and
safe to call concurrently.
"""

from __future__ import annotations

import posixpath
from dataclasses import dataclass, field
from enum import Enum
from fnmatch import fnmatchcase
from typing import Iterator, List, Optional, Tuple

TAINTED = "tainted"
UNTAINTED = "untainted"
TAINT_LABELS = (TAINTED, UNTAINTED)

READ = "read"
WRITE = "write"
DEL = "del"
EXEC = "exec"
SPAWN = "spawn"
EFFECTS = (READ, WRITE, DEL, EXEC, SPAWN)


class LocationClass(str, Enum):
    """Abstract location of a resource.

    Two chains and one isolated point:
    exact < parent < local, intnet < extnet, and ctxt alone.
    """

    EXACT = "exact"
    PARENT = "parent"
    LOCAL = "local"
    CTXT = "ctxt"
    INTNET = "intnet"
    EXTNET = "extnet"

    def __str__(self) -> str:  # render as the bare name, not LocationClass.X
        return self.value


# Immediate cover steps; everything else is reflexivity + transitivity.
_LOC_UP = {
    LocationClass.EXACT: LocationClass.PARENT,
    LocationClass.PARENT: LocationClass.LOCAL,
    LocationClass.INTNET: LocationClass.EXTNET,
}

# Kernel index order; keep in sync with the tables in _kernel.pyx/_kernel_py.
LOC_INDEX = {
    LocationClass.EXACT: 0,
    LocationClass.PARENT: 1,
    LocationClass.LOCAL: 2,
    LocationClass.CTXT: 3,
    LocationClass.INTNET: 4,
    LocationClass.EXTNET: 5,
}
LOC_BY_INDEX = {i: c for c, i in LOC_INDEX.items()}

# Depth within the class's own chain; used only for narrowest-first sorting.
_CLASS_LEVEL = {
    LocationClass.EXACT: 0,
    LocationClass.PARENT: 1,
    LocationClass.LOCAL: 2,
    LocationClass.CTXT: 0,
    LocationClass.INTNET: 0,
    LocationClass.EXTNET: 1,
}


def _loc_leq_pairs() -> frozenset:
    pairs = set()
    for a in LocationClass:
        b = a
        while True:
            pairs.add((a, b))
            nxt = _LOC_UP.get(b)
            if nxt is None:
                break
            b = nxt
    return frozenset(pairs)


_LOC_LEQ = _loc_leq_pairs()


def location_class_leq(a: LocationClass, b: LocationClass) -> bool:
    """True iff a is at most as permissive as b in the class order."""
    return (a, b) in _LOC_LEQ


class GuardKind(str, Enum):
    NONE = "none"
    EXACT = "exact"
    GLOB = "glob"


def _split_segments(text: str) -> Tuple[str, ...]:
    # A leading "/" yields a leading empty segment, which keeps absolute and
    # relative patterns as distinct languages ("**/.env" still matches
    # absolute paths because "**" consumes the empty segment).
    if text.endswith("/") and text != "/":
        text = text.rstrip("/")
    return tuple(text.split("/"))


def _has_wildcard(segment: str) -> bool:
    return "*" in segment or "?" in segment or "[" in segment


def _match_segments(res: Tuple[str, ...], pat: Tuple[str, ...]) -> bool:
    if not pat:
        return not res
    head = pat[0]
    if head == "**":
        return any(_match_segments(res[k:], pat[1:]) for k in range(len(res) + 1))
    if not res:
        return False
    return fnmatchcase(res[0], head) and _match_segments(res[1:], pat[1:])


def _segment_covers(sub: str, sup: str) -> bool:
    if sup == "*":
        return True
    if sub == sup:
        return True
    if _has_wildcard(sub):
        return False
    return fnmatchcase(sub, sup)


def _segments_covered(sub: Tuple[str, ...], sup: Tuple[str, ...]) -> bool:
    # Does every path matched by `sub` also match `sup`?  Sound for the
    # segment vocabulary used here (literals, single-segment *, and **).
    if not sup:
        return not sub
    if sup[0] == "**":
        return any(_segments_covered(sub[k:], sup[1:]) for k in range(len(sub) + 1))
    if not sub:
        return False
    if sub[0] == "**":
        return False
    return _segment_covers(sub[0], sup[0]) and _segments_covered(sub[1:], sup[1:])


@dataclass(frozen=True)
class ResourceGuard:
    """Constraint on the concrete resource behind a location bound.

    `none` matches everything, `exact` matches the byte-equal resource, and
    `glob` uses /-separated segments where `*` matches one segment and `**`
    matches any run of segments.  Construct through the factories: they
    canonicalize patterns so that no two distinct guards denote the same
    resource set (keeps guard containment antisymmetric).
    """

    kind: GuardKind
    pattern: str = ""

    @staticmethod
    def none() -> "ResourceGuard":
        return ResourceGuard(GuardKind.NONE, "")

    @staticmethod
    def exact(pattern: str) -> "ResourceGuard":
        if not pattern:
            raise ValueError("exact guard needs a non-empty resource")
        return ResourceGuard(GuardKind.EXACT, pattern)

    @staticmethod
    def glob(pattern: str) -> "ResourceGuard":
        if not pattern:
            raise ValueError("glob guard needs a non-empty pattern")
        segs = list(_split_segments(pattern))
        out: List[str] = []
        for seg in segs:
            if seg == "**" and out and out[-1] == "**":
                continue  # collapse ** runs
            out.append(seg)
        canonical = "/".join(out)
        if all(not _has_wildcard(s) and s != "**" for s in out):
            return ResourceGuard(GuardKind.EXACT, canonical)
        if out == ["**"]:
            return ResourceGuard(GuardKind.NONE, "")
        return ResourceGuard(GuardKind.GLOB, canonical)

    @staticmethod
    def parse(pattern: Optional[str]) -> "ResourceGuard":
        """Guard from its serialized form: null/None is none, a string is
        exact or glob depending on wildcard presence."""
        if pattern is None or pattern == "":
            return ResourceGuard.none()
        if _has_wildcard(pattern) or "**" in pattern:
            return ResourceGuard.glob(pattern)
        return ResourceGuard.exact(pattern)

    @property
    def is_none(self) -> bool:
        return self.kind is GuardKind.NONE

    def matches(self, resource: str) -> bool:
        if self.kind is GuardKind.NONE:
            return True
        if self.kind is GuardKind.EXACT:
            return resource == self.pattern
        return _match_segments(_split_segments(resource), _split_segments(self.pattern))

    def covers(self, other: "ResourceGuard") -> bool:
        """True iff every resource matched by `other` is matched by self."""
        if self.kind is GuardKind.NONE:
            return True
        if other.kind is GuardKind.NONE:
            return False
        if self.kind is GuardKind.EXACT:
            return other.kind is GuardKind.EXACT and other.pattern == self.pattern
        if other.kind is GuardKind.EXACT:
            return self.matches(other.pattern)
        return _segments_covered(
            _split_segments(other.pattern), _split_segments(self.pattern)
        )

    def serialized(self) -> Optional[str]:
        return None if self.kind is GuardKind.NONE else self.pattern

    def generality(self) -> int:
        # Strictly increases along any guard-lift chain; used for sorting.
        if self.kind is GuardKind.NONE:
            return 1000
        if self.kind is GuardKind.EXACT:
            return 0
        segs = _split_segments(self.pattern)
        return 1 + sum(2 if s == "**" else (1 if _has_wildcard(s) else 0) for s in segs)

    def __str__(self) -> str:
        if self.kind is GuardKind.NONE:
            return "*any*"
        return self.pattern


def guard_leq(a: ResourceGuard, b: ResourceGuard) -> bool:
    return b.covers(a)


@dataclass(frozen=True)
class LocationBound:
    """A location class plus an optional resource guard.

    Concrete-call bounds additionally carry the canonical resource in
    `concrete`; rule bounds never do.  The order ignores `concrete`.
    """

    cls: LocationClass
    guard: ResourceGuard = field(default_factory=ResourceGuard.none)
    concrete: Optional[str] = None

    @staticmethod
    def abstract(cls: LocationClass, guard: Optional[ResourceGuard] = None) -> "LocationBound":
        return LocationBound(cls, guard or ResourceGuard.none())

    @staticmethod
    def at(cls: LocationClass, resource: str) -> "LocationBound":
        """Bound for a concrete call: exact guard pinned on the resource."""
        return LocationBound(cls, ResourceGuard.exact(resource), resource)

    def leq(self, other: "LocationBound") -> bool:
        return location_class_leq(self.cls, other.cls) and guard_leq(self.guard, other.guard)

    def without_concrete(self) -> "LocationBound":
        if self.concrete is None:
            return self
        return LocationBound(self.cls, self.guard)

    def __str__(self) -> str:
        if self.guard.is_none:
            return str(self.cls)
        return f"{self.cls}({self.guard})"


def _validated_taint(taint) -> frozenset:
    ts = frozenset(taint)
    bad = ts - set(TAINT_LABELS)
    if bad:
        raise ValueError(f"unknown taint labels: {sorted(bad)}")
    return ts

def _validated_effects(effects) -> frozenset:
    es = frozenset(effects)
    bad = es - set(EFFECTS)
    if bad:
        raise ValueError(f"unknown effects: {sorted(bad)}")
    return es


@dataclass(frozen=True)
class Boundary:
    """Flow summary of one tool call: input -> output qualified by taint/effects.

    Subsumption (`boundary_leq`) is the conjunction of the four dimensional
    orders: both location bounds (class and guard), taint-set inclusion, and
    effect-set inclusion.
    """

    input: LocationBound
    output: LocationBound
    taint: frozenset
    effects: frozenset

    def __post_init__(self):
        object.__setattr__(self, "taint", _validated_taint(self.taint))
        object.__setattr__(self, "effects", _validated_effects(self.effects))

    @staticmethod
    def abstract(li: LocationClass, lo: LocationClass, taint, effects) -> "Boundary":
        return Boundary(LocationBound.abstract(li), LocationBound.abstract(lo), frozenset(taint), frozenset(effects))

    def rule_form(self) -> "Boundary":
        """Boundary with concrete resources stripped (rules carry none)."""
        return Boundary(
            self.input.without_concrete(),
            self.output.without_concrete(),
            self.taint,
            self.effects,
        )

    def generality(self) -> int:
        return (
            _CLASS_LEVEL[self.input.cls]
            + _CLASS_LEVEL[self.output.cls]
            + self.input.guard.generality()
            + self.output.guard.generality()
            + len(self.taint)
            + len(self.effects)
        )

    def __str__(self) -> str:
        return render_boundary(self)


def boundary_leq(phi: Boundary, phi_prime: Boundary) -> bool:
    """True iff phi is no more permissive than phi_prime on all four dimensions."""
    return (
        phi.input.leq(phi_prime.input)
        and phi.output.leq(phi_prime.output)
        and phi.taint <= phi_prime.taint
        and phi.effects <= phi_prime.effects
    )


def _ordered_taint(taint) -> List[str]:
    return [t for t in TAINT_LABELS if t in taint]


def _ordered_effects(effects) -> List[str]:
    return [e for e in EFFECTS if e in effects]


def render_boundary(b: Boundary) -> str:
    taints = ",".join(_ordered_taint(b.taint)) or "-"
    effects = ",".join(_ordered_effects(b.effects)) or "-"
    return f"{b.input} -[{taints}; {effects}]-> {b.output}"


# --- single-step generalizations -----------------------------------------

def _guard_lift_chain(resource: str) -> List[ResourceGuard]:
    """Resource-axis lifts of an exact guard: sibling glob, then the
    recursive glob anchored one directory higher."""
    lifts: List[ResourceGuard] = []
    parent = posixpath.dirname(resource)
    if parent and parent != resource:
        stem = "" if parent == "/" else parent
        lifts.append(ResourceGuard.glob(stem + "/*"))
        grand = posixpath.dirname(parent)
        if grand == parent:  # parent was the root
            lifts.append(ResourceGuard.glob("**"))
        elif grand:
            stem2 = "" if grand == "/" else grand
            lifts.append(ResourceGuard.glob(stem2 + "/**"))
        else:
            lifts.append(ResourceGuard.glob("**"))
    else:
        # single-segment resource (bare host, channel): only "any one segment"
        lifts.append(ResourceGuard.glob("*"))
        lifts.append(ResourceGuard.glob("**"))
    # glob("**") canonicalizes to the none guard; keep whatever came out
    seen = set()
    out = []
    for g in lifts:
        if g not in seen:
            seen.add(g)
            out.append(g)
    return out


def _bound_guard_lifts(bound: LocationBound) -> List[LocationBound]:
    if bound.cls is LocationClass.CTXT:
        return []
    lifted: List[LocationBound] = []
    if bound.guard.kind is GuardKind.EXACT:
        for g in _guard_lift_chain(bound.guard.pattern):
            lifted.append(LocationBound(bound.cls, g))
    elif bound.guard.kind is GuardKind.GLOB:
        lifted.append(LocationBound(bound.cls, ResourceGuard.none()))
    return lifted


def _bound_class_lift(bound: LocationBound) -> Optional[LocationBound]:
    up = _LOC_UP.get(bound.cls)
    if up is None:
        return None
    # widening the class drops the resource pin: the option means
    # "anywhere in <up>", not "this same resource reclassified"
    return LocationBound(up, ResourceGuard.none())


def lift_candidates(phi: Boundary) -> List[Boundary]:
    """Finite set of single-step generalizations of a concrete boundary.

    Resource-axis lifts widen one guard along its directory chain;
    abstract-axis lifts raise one location class to its immediate parent.
    Every candidate strictly covers phi; the result is deduplicated and
    ordered narrowest-first.
    """
    base = phi.rule_form()
    candidates: List[Boundary] = []

    for lifted in _bound_guard_lifts(base.input):
        candidates.append(Boundary(lifted, base.output, base.taint, base.effects))
    for lifted in _bound_guard_lifts(base.output):
        candidates.append(Boundary(base.input, lifted, base.taint, base.effects))

    up_in = _bound_class_lift(base.input)
    if up_in is not None:
        candidates.append(Boundary(up_in, base.output, base.taint, base.effects))
    up_out = _bound_class_lift(base.output)
    if up_out is not None:
        candidates.append(Boundary(base.input, up_out, base.taint, base.effects))

    unique: List[Boundary] = []
    seen = set()
    for c in candidates:
        if c in seen or c == base:
            continue
        if not (boundary_leq(base, c) and not boundary_leq(c, base)):
            continue  # keep only strict covers
        seen.add(c)
        unique.append(c)
    unique.sort(key=lambda b: (b.generality(), render_boundary(b)))
    return unique


# --- bit-packed codes for the kernels -------------------------------------

_TAINT_BIT = {TAINTED: 1, UNTAINTED: 2}
_EFFECT_BIT = {e: 1 << i for i, e in enumerate(EFFECTS)}


def taint_bits(taint) -> int:
    return sum(_TAINT_BIT[t] for t in taint)


def effect_bits(effects) -> int:
    return sum(_EFFECT_BIT[e] for e in effects)


def encode_abstract(b: Boundary) -> int:
    """Pack the guard-free projection of a boundary into 13 bits."""
    return (
        LOC_INDEX[b.input.cls]
        | (LOC_INDEX[b.output.cls] << 3)
        | (taint_bits(b.taint) << 6)
        | (effect_bits(b.effects) << 8)
    )


def decode_abstract(code: int) -> Boundary:
    li = LOC_BY_INDEX[code & 7]
    lo = LOC_BY_INDEX[(code >> 3) & 7]
    tb = (code >> 6) & 3
    eb = (code >> 8) & 31
    taint = frozenset(t for t, bit in _TAINT_BIT.items() if tb & bit)
    effects = frozenset(e for e, bit in _EFFECT_BIT.items() if eb & bit)
    return Boundary.abstract(li, lo, taint, effects)


def enumerate_abstract_codes() -> Iterator[int]:
    """All 6*6*4*32 = 4,608 abstract lattice points in canonical order."""
    for li in range(6):
        for lo in range(6):
            for tb in range(4):
                for eb in range(32):
                    yield li | (lo << 3) | (tb << 6) | (eb << 8)
