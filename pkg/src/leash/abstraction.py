"""Deterministic projection of raw tool calls into boundaries.

Tool profiles statically declare each tool's effects and which parameters
carry the source/sink resources; session topology (working directory,
anchored files, internal hosts, sensitive seeds) turns concrete resources
into location classes.  A pluggable classifier hook can stand in for missing
profiles; its output is untrusted and validated against the enum domains,
and the taint environment always wins when it is stricter.
"""

from __future__ import annotations

import ipaddress
import json
import os
import posixpath
from dataclasses import dataclass, field
from fnmatch import fnmatchcase
from typing import Dict, Mapping, NamedTuple, Optional, Protocol, Tuple
from urllib.parse import urlsplit

from .lattice import (
    EFFECTS,
    TAINTED,
    TAINT_LABELS,
    Boundary,
    LocationBound,
    LocationClass,
    ResourceGuard,
)
from .taint import CTXT_KEY, TaintEnvironment

KIND_FILESYSTEM = "filesystem"
KIND_NETWORK = "network"
KIND_CONTEXT = "context"
SINK_KINDS = (KIND_FILESYSTEM, KIND_NETWORK, KIND_CONTEXT)

# Sensible sensitive scopes for live use; replay fixtures declare their own.
DEFAULT_SENSITIVE = ("~/.ssh/**", "**/.env", "/etc/shadow")


class AbstractionError(Exception):
    """Call could not be projected; the authorizer must escalate, never allow."""


class UnknownToolError(AbstractionError):
    pass


class MalformedCallError(AbstractionError):
    pass


class ProfileFormatError(Exception):
    pass


@dataclass(frozen=True)
class RawCall:
    tool_ref: str
    params: Mapping[str, object]
    step: int

    def __post_init__(self):
        if not self.tool_ref:
            raise ValueError("tool_ref must be non-empty")


@dataclass(frozen=True)
class ToolProfile:
    tool_ref: str
    effects: frozenset
    input_param: Optional[str] = None
    sink_param: Optional[str] = None
    sink_kind: str = KIND_CONTEXT

    def __post_init__(self):
        if not self.effects:
            raise ValueError(f"profile {self.tool_ref}: effects must be non-empty")
        bad = set(self.effects) - set(EFFECTS)
        if bad:
            raise ValueError(f"profile {self.tool_ref}: unknown effects {sorted(bad)}")
        if self.sink_kind not in SINK_KINDS:
            raise ValueError(f"profile {self.tool_ref}: unknown sink_kind {self.sink_kind!r}")


@dataclass(frozen=True)
class SessionContext:
    workdir: str
    anchors: frozenset = frozenset()
    internal_hosts: Tuple[str, ...] = ()
    sensitive: Tuple[ResourceGuard, ...] = ()

    def __post_init__(self):
        wd = os.path.expanduser(self.workdir)
        if not wd.startswith("/"):
            raise ValueError(f"workdir must be absolute, got {self.workdir!r}")
        object.__setattr__(self, "workdir", posixpath.normpath(wd))
        object.__setattr__(
            self,
            "anchors",
            frozenset(_canonical_path(a, self.workdir) for a in self.anchors),
        )


class AbstractedCall(NamedTuple):
    boundary: Boundary
    source_key: str
    sink_key: str


def stricter_taint(env_label: str, external_label: str) -> str:
    """The propagated label prevails when stricter than an external one."""
    return TAINTED if env_label == TAINTED else external_label


# --- canonicalization ------------------------------------------------------

def _canonical_path(resource: str, workdir: str) -> str:
    p = os.path.expanduser(resource)
    if not p.startswith("/"):
        p = posixpath.join(workdir, p)
    p = posixpath.normpath(p)
    if os.path.exists(p):  # resolve symlinks only for paths that exist
        p = os.path.realpath(p)
    return p


def _canonical_network(resource: str) -> str:
    r = resource.strip()
    if "://" in r:
        parts = urlsplit(r)
        host = (parts.hostname or "").lower()
        if not host:
            raise AbstractionError(f"URL without a host: {resource!r}")
        path = parts.path.rstrip("/")
        return host + path
    if "@" in r and not r.startswith("@") and not r.endswith("@"):
        local, _, host = r.rpartition("@")
        return f"{host.lower()}/{local}"
    host = r.lower()
    if host.count(":") == 1:  # strip a bare port
        name, _, port = host.partition(":")
        if port.isdigit():
            host = name
    return host


def resource_kind(resource: str) -> str:
    """Infer whether a source resource is a path or a network endpoint.

    The profile schema only declares the sink kind; inputs are classified by
    syntax: a scheme or a user@host form means network, everything else is a
    filesystem path.
    """
    r = resource.strip()
    if "://" in r:
        return KIND_NETWORK
    if "@" in r and not r.startswith("@") and "/" not in r.split("@")[-1]:
        return KIND_NETWORK
    return KIND_FILESYSTEM


def canonical_resource(resource: str, kind: str, ctx: SessionContext) -> str:
    if not isinstance(resource, str) or not resource.strip():
        raise AbstractionError(f"un-canonicalizable resource {resource!r}")
    if kind == KIND_CONTEXT:
        return CTXT_KEY
    if kind == KIND_NETWORK:
        return _canonical_network(resource)
    return _canonical_path(resource.strip(), ctx.workdir)


def _network_host(key: str) -> str:
    return key.split("/", 1)[0]


def _is_internal_host(ctx: SessionContext, host: str) -> bool:
    if host in ("localhost",) or host.endswith(".localhost"):
        return True
    try:
        addr = ipaddress.ip_address(host)
    except ValueError:
        addr = None
    if addr is not None and (addr.is_loopback or addr.is_private):
        return True
    return any(fnmatchcase(host, pat) for pat in ctx.internal_hosts)


def classify_location(ctx: SessionContext, resource: str, kind: str) -> LocationClass:
    """Map a canonical resource to its location class.

    context -> ctxt; network -> intnet for loopback/private/configured
    internal hosts, else extnet; filesystem -> exact for anchored resources,
    parent when under the working directory, local otherwise.
    """
    if kind == KIND_CONTEXT:
        return LocationClass.CTXT
    if kind == KIND_NETWORK:
        host = _network_host(resource)
        if not host:
            raise AbstractionError(f"network resource without host: {resource!r}")
        return LocationClass.INTNET if _is_internal_host(ctx, host) else LocationClass.EXTNET
    if resource in ctx.anchors:
        return LocationClass.EXACT
    if resource == ctx.workdir or resource.startswith(ctx.workdir.rstrip("/") + "/"):
        return LocationClass.PARENT
    return LocationClass.LOCAL


def _ctxt_bound() -> LocationBound:
    return LocationBound(LocationClass.CTXT, ResourceGuard.exact(CTXT_KEY), CTXT_KEY)


def _resource_bound(ctx: SessionContext, raw: object, kind: str) -> Tuple[LocationBound, str]:
    if not isinstance(raw, str):
        raise MalformedCallError(f"resource parameter must be a string, got {type(raw).__name__}")
    key = canonical_resource(raw, kind, ctx)
    cls = classify_location(ctx, key, kind)
    return LocationBound.at(cls, key), key


class Classifier(Protocol):
    """Untrusted frontend proposing a classification for an unprofiled call."""

    def classify(self, call: RawCall) -> "ClassifiedCall":
        ...


class ClassifiedCall(NamedTuple):
    input_class: str
    output_class: str
    taint: str
    effects: frozenset
    source_key: str = CTXT_KEY
    sink_key: str = CTXT_KEY


def _validated_proposal(proposal: ClassifiedCall) -> ClassifiedCall:
    if proposal.input_class not in {c.value for c in LocationClass}:
        raise AbstractionError(f"classifier proposed unknown input class {proposal.input_class!r}")
    if proposal.output_class not in {c.value for c in LocationClass}:
        raise AbstractionError(f"classifier proposed unknown output class {proposal.output_class!r}")
    if proposal.taint not in TAINT_LABELS:
        raise AbstractionError(f"classifier proposed unknown taint {proposal.taint!r}")
    effects = frozenset(proposal.effects)
    if not effects or effects - set(EFFECTS):
        raise AbstractionError(f"classifier proposed invalid effects {sorted(proposal.effects)}")
    if not proposal.source_key or not proposal.sink_key:
        raise AbstractionError("classifier proposal missing resource keys")
    return ClassifiedCall(
        proposal.input_class, proposal.output_class, proposal.taint, effects,
        proposal.source_key, proposal.sink_key,
    )


def abstract_call(
    ctx: SessionContext,
    env: TaintEnvironment,
    profiles: Mapping[str, ToolProfile],
    call: RawCall,
    classifier: Optional[Classifier] = None,
) -> AbstractedCall:
    """Project a raw call into (boundary, source key, sink key).

    Missing profile raises UnknownToolError unless a classifier hook is
    supplied; a declared parameter absent from the call raises
    MalformedCallError.  The emitted taint never underestimates the
    environment's label for the source.
    """
    profile = profiles.get(call.tool_ref)
    if profile is None:
        if classifier is not None:
            proposal = _validated_proposal(classifier.classify(call))
            taint = stricter_taint(env.query(proposal.source_key), proposal.taint)
            boundary = Boundary(
                LocationBound.at(LocationClass(proposal.input_class), proposal.source_key),
                LocationBound.at(LocationClass(proposal.output_class), proposal.sink_key),
                frozenset({taint}),
                proposal.effects,
            )
            return AbstractedCall(boundary, proposal.source_key, proposal.sink_key)
        raise UnknownToolError(f"no profile for tool {call.tool_ref!r}")

    if profile.input_param is not None:
        if profile.input_param not in call.params:
            raise MalformedCallError(
                f"{call.tool_ref}: missing declared parameter {profile.input_param!r}"
            )
        raw = call.params[profile.input_param]
        li, source_key = _resource_bound(ctx, raw, resource_kind(str(raw)))
    else:
        li, source_key = _ctxt_bound(), CTXT_KEY

    if profile.sink_param is not None:
        if profile.sink_param not in call.params:
            raise MalformedCallError(
                f"{call.tool_ref}: missing declared parameter {profile.sink_param!r}"
            )
        lo, sink_key = _resource_bound(ctx, call.params[profile.sink_param], profile.sink_kind)
    else:
        lo, sink_key = _ctxt_bound(), CTXT_KEY

    taint = env.query(source_key)
    boundary = Boundary(li, lo, frozenset({taint}), profile.effects)
    return AbstractedCall(boundary, source_key, sink_key)


# --- configuration loading ---------------------------------------------------

_PROFILE_KEYS = {"tool_ref", "effects", "input_param", "sink_param", "sink_kind"}
_SESSION_KEYS = {"workdir", "anchors", "internal_hosts", "sensitive"}


def load_profiles(data) -> Dict[str, ToolProfile]:
    """Profile map from its JSON document ({"tools": [...]})."""
    if isinstance(data, bytes):
        data = data.decode()
    if isinstance(data, str):
        if not data.strip():
            return {}
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ProfileFormatError(f"invalid JSON: {exc.msg} (line {exc.lineno})")
    else:
        doc = data
    if not isinstance(doc, dict) or set(doc) - {"tools"}:
        raise ProfileFormatError("profile document must be {'tools': [...]}")
    out: Dict[str, ToolProfile] = {}
    for idx, obj in enumerate(doc.get("tools", [])):
        if not isinstance(obj, dict):
            raise ProfileFormatError(f"tools[{idx}] must be an object")
        unknown = set(obj) - _PROFILE_KEYS
        if unknown:
            raise ProfileFormatError(f"tools[{idx}]: unknown key {sorted(unknown)[0]!r}")
        ref = obj.get("tool_ref")
        if not ref or not isinstance(ref, str):
            raise ProfileFormatError(f"tools[{idx}]: tool_ref required")
        if ref in out:
            raise ProfileFormatError(f"duplicate tool_ref {ref!r}")
        effects = obj.get("effects")
        if not isinstance(effects, list) or not effects:
            raise ProfileFormatError(f"profile {ref}: effects must be a non-empty list")
        bad = set(effects) - set(EFFECTS)
        if bad:
            raise ProfileFormatError(f"profile {ref}: unknown effect {sorted(bad)[0]!r}")
        try:
            out[ref] = ToolProfile(
                tool_ref=ref,
                effects=frozenset(effects),
                input_param=obj.get("input_param"),
                sink_param=obj.get("sink_param"),
                sink_kind=obj.get("sink_kind", KIND_CONTEXT),
            )
        except ValueError as exc:
            raise ProfileFormatError(str(exc))
    return out


def load_session_config(data, default_sensitive: bool = False) -> SessionContext:
    """Session topology from its JSON document.

    Keys: workdir (required), anchors, internal_hosts, sensitive.
    """
    if isinstance(data, bytes):
        data = data.decode()
    if isinstance(data, str):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ProfileFormatError(f"invalid JSON: {exc.msg} (line {exc.lineno})")
    else:
        doc = data
    if not isinstance(doc, dict):
        raise ProfileFormatError("session config must be an object")
    unknown = set(doc) - _SESSION_KEYS
    if unknown:
        raise ProfileFormatError(f"session config: unknown key {sorted(unknown)[0]!r}")
    if "workdir" not in doc:
        raise ProfileFormatError("session config: workdir required")
    patterns = list(doc.get("sensitive", []))
    if default_sensitive and not patterns:
        patterns = list(DEFAULT_SENSITIVE)
    seeds = tuple(ResourceGuard.parse(os.path.expanduser(p)) for p in patterns)
    return SessionContext(
        workdir=doc["workdir"],
        anchors=frozenset(doc.get("anchors", [])),
        internal_hosts=tuple(doc.get("internal_hosts", [])),
        sensitive=seeds,
    )
