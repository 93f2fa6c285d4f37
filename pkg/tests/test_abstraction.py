"""Deterministic call abstraction: classification, profiles, classifier hook."""

import pytest

from leash.abstraction import (
    AbstractionError,
    ClassifiedCall,
    MalformedCallError,
    ProfileFormatError,
    RawCall,
    SessionContext,
    ToolProfile,
    UnknownToolError,
    abstract_call,
    canonical_resource,
    classify_location,
    load_profiles,
    load_session_config,
    resource_kind,
)
from leash.lattice import LocationClass, ResourceGuard
from leash.taint import CTXT_KEY, TaintEnvironment

L = LocationClass

CTX = SessionContext(workdir="/home/user/project")


def ctx_with(**kw):
    base = dict(workdir="/home/user/project")
    base.update(kw)
    return SessionContext(**base)


class TestClassify:
    def test_outside_workdir_is_local(self):
        assert classify_location(CTX, "/etc/shadow", "filesystem") is L.LOCAL

    def test_under_workdir_is_parent(self):
        assert classify_location(CTX, "/home/user/project/a.txt", "filesystem") is L.PARENT
        assert classify_location(CTX, "/home/user/project", "filesystem") is L.PARENT

    def test_anchored_resource_is_exact(self):
        ctx = ctx_with(anchors=frozenset({"/home/user/project/report.md"}))
        assert classify_location(ctx, "/home/user/project/report.md", "filesystem") is L.EXACT

    def test_public_endpoint_is_extnet(self):
        assert classify_location(CTX, "api.service.example", "network") is L.EXTNET

    def test_private_addresses_are_intnet(self):
        assert classify_location(CTX, "192.168.1.5", "network") is L.INTNET
        assert classify_location(CTX, "127.0.0.1", "network") is L.INTNET
        assert classify_location(CTX, "10.2.3.4", "network") is L.INTNET
        assert classify_location(CTX, "localhost", "network") is L.INTNET

    def test_internal_host_patterns(self):
        ctx = ctx_with(internal_hosts=("*.corp.internal", "acme.com"))
        assert classify_location(ctx, "wiki.corp.internal/page", "network") is L.INTNET
        assert classify_location(ctx, "acme.com/alice", "network") is L.INTNET
        assert classify_location(ctx, "vendor.net/kate", "network") is L.EXTNET

    def test_context_kind(self):
        assert classify_location(CTX, CTXT_KEY, "context") is L.CTXT

    def test_classification_total_over_kinds(self):
        for path in ("/", "/tmp/x", "/home/user/project/deep/n.txt"):
            assert classify_location(CTX, path, "filesystem") in (L.EXACT, L.PARENT, L.LOCAL)
        for host in ("one.example", "192.0.2.9", "localhost:8080"):
            key = canonical_resource(host, "network", CTX)
            assert classify_location(CTX, key, "network") in (L.INTNET, L.EXTNET)


class TestCanonical:
    def test_paths_normalized(self):
        assert canonical_resource("/a/b/../c", "filesystem", CTX) == "/a/c"
        assert (
            canonical_resource("sub/x.txt", "filesystem", CTX)
            == "/home/user/project/sub/x.txt"
        )

    def test_url_host_lowercased(self):
        key = canonical_resource("https://API.Example.COM/v1/Send", "network", CTX)
        assert key == "api.example.com/v1/Send"

    def test_recipient_becomes_host_slash_local(self):
        assert canonical_resource("Alice@Acme.COM", "network", CTX) == "acme.com/Alice"

    def test_bare_port_stripped(self):
        assert canonical_resource("db.internal:5432", "network", CTX) == "db.internal"

    def test_kind_inference(self):
        assert resource_kind("https://x.example/a") == "network"
        assert resource_kind("alice@acme.com") == "network"
        assert resource_kind("/etc/hosts") == "filesystem"
        assert resource_kind("relative/path.txt") == "filesystem"

    def test_uncanonicalizable_raises(self):
        with pytest.raises(AbstractionError):
            canonical_resource("", "filesystem", CTX)
        with pytest.raises(AbstractionError):
            canonical_resource("https:///nohost", "network", CTX)


PROFILES = {
    "fs.read_file": ToolProfile("fs.read_file", frozenset({"read"}), input_param="path"),
    "mail.send": ToolProfile(
        "mail.send", frozenset({"write"}), input_param="attachment",
        sink_param="to", sink_kind="network",
    ),
    "fs.write_file": ToolProfile(
        "fs.write_file", frozenset({"write"}), sink_param="path", sink_kind="filesystem"
    ),
}


class TestAbstractCall:
    def test_credential_read_worked_example(self):
        ctx = ctx_with(sensitive=(ResourceGuard.exact("/etc/shadow"),))
        env = TaintEnvironment.seeded(ctx.sensitive)
        call = RawCall("fs.read_file", {"path": "/etc/shadow"}, 1)
        boundary, source_key, sink_key = abstract_call(ctx, env, PROFILES, call)
        assert boundary.input.cls is L.LOCAL
        assert boundary.output.cls is L.CTXT
        assert boundary.taint == frozenset({"tainted"})
        assert boundary.effects == frozenset({"read"})
        assert source_key == "/etc/shadow" and sink_key == CTXT_KEY

    def test_in_workdir_untainted_read(self):
        env = TaintEnvironment()
        call = RawCall("fs.read_file", {"path": "/home/user/project/a.txt"}, 1)
        boundary, _, _ = abstract_call(CTX, env, PROFILES, call)
        assert boundary.input.cls is L.PARENT
        assert boundary.taint == frozenset({"untainted"})
        assert boundary.input.guard.pattern == "/home/user/project/a.txt"
        assert boundary.input.concrete == "/home/user/project/a.txt"

    def test_attachment_tainted_by_earlier_step(self):
        env = TaintEnvironment()
        # an earlier step wrote tainted data to the attachment path
        from leash.lattice import Boundary

        earlier = Boundary.abstract(L.CTXT, L.PARENT, {"tainted"}, {"write"})
        env = env.propagate(earlier, "/home/user/project/k.zip", CTXT_KEY)
        call = RawCall("mail.send", {"to": "ext@x.com", "attachment": "/home/user/project/k.zip"}, 2)
        boundary, source_key, sink_key = abstract_call(CTX, env, PROFILES, call)
        assert boundary.taint == frozenset({"tainted"})
        assert boundary.output.cls is L.EXTNET
        assert sink_key == "x.com/ext"

    def test_sink_defaults_to_ctxt(self):
        env = TaintEnvironment()
        call = RawCall("fs.read_file", {"path": "/tmp/x"}, 1)
        boundary, _, sink_key = abstract_call(CTX, env, PROFILES, call)
        assert boundary.output.cls is L.CTXT and sink_key == CTXT_KEY

    def test_missing_profile_is_unknown_tool(self):
        with pytest.raises(UnknownToolError):
            abstract_call(CTX, TaintEnvironment(), PROFILES, RawCall("fs.nuke", {}, 1))

    def test_missing_declared_param_is_malformed(self):
        with pytest.raises(MalformedCallError):
            abstract_call(CTX, TaintEnvironment(), PROFILES, RawCall("fs.read_file", {}, 1))

    def test_deterministic(self):
        env = TaintEnvironment()
        call = RawCall("fs.read_file", {"path": "/home/user/project/a.txt"}, 1)
        assert abstract_call(CTX, env, PROFILES, call) == abstract_call(CTX, env, PROFILES, call)

    def test_taint_never_underestimates_env(self):
        ctx = ctx_with(sensitive=(ResourceGuard.glob("/secret/**"),))
        env = TaintEnvironment.seeded(ctx.sensitive)
        call = RawCall("fs.read_file", {"path": "/secret/key"}, 1)
        boundary, source_key, _ = abstract_call(ctx, env, PROFILES, call)
        assert env.query(source_key) in boundary.taint


class StubClassifier:
    def __init__(self, proposal):
        self.proposal = proposal

    def classify(self, call):
        return self.proposal


class TestClassifierHook:
    def test_valid_proposal_used_for_unknown_tool(self):
        proposal = ClassifiedCall("local", "extnet", "untainted",
                                  frozenset({"write"}), "/data/f.bin", "drop.example/up")
        boundary, source_key, sink_key = abstract_call(
            CTX, TaintEnvironment(), PROFILES, RawCall("custom.upload", {}, 1),
            classifier=StubClassifier(proposal),
        )
        assert boundary.input.cls is L.LOCAL and boundary.output.cls is L.EXTNET
        assert source_key == "/data/f.bin" and sink_key == "drop.example/up"

    def test_invalid_class_rejected(self):
        proposal = ClassifiedCall("universe", "extnet", "untainted",
                                  frozenset({"write"}), "/a", "b")
        with pytest.raises(AbstractionError):
            abstract_call(CTX, TaintEnvironment(), PROFILES, RawCall("custom.x", {}, 1),
                          classifier=StubClassifier(proposal))

    def test_invalid_effects_rejected(self):
        proposal = ClassifiedCall("local", "extnet", "untainted", frozenset(), "/a", "b")
        with pytest.raises(AbstractionError):
            abstract_call(CTX, TaintEnvironment(), PROFILES, RawCall("custom.x", {}, 1),
                          classifier=StubClassifier(proposal))

    def test_env_taint_overrides_proposal(self):
        ctx = ctx_with(sensitive=(ResourceGuard.glob("/secret/**"),))
        env = TaintEnvironment.seeded(ctx.sensitive)
        proposal = ClassifiedCall("local", "extnet", "untainted",
                                  frozenset({"write"}), "/secret/k", "drop.example/up")
        boundary, _, _ = abstract_call(ctx, env, PROFILES, RawCall("custom.x", {}, 1),
                                       classifier=StubClassifier(proposal))
        assert boundary.taint == frozenset({"tainted"})


class TestProfileLoading:
    def test_bundled_profiles_cover_fixture_servers(self, profiles):
        servers = {ref.split(".", 1)[0] for ref in profiles}
        assert {"filesystem", "terminal", "gmail", "slack"} <= servers

    def test_empty_document(self):
        assert load_profiles("") == {}

    def test_duplicate_tool_ref_rejected(self):
        doc = {"tools": [
            {"tool_ref": "a.b", "effects": ["read"]},
            {"tool_ref": "a.b", "effects": ["write"]},
        ]}
        with pytest.raises(ProfileFormatError, match="duplicate"):
            load_profiles(doc)

    def test_unknown_effect_names_profile(self):
        doc = {"tools": [{"tool_ref": "a.b", "effects": ["browse"]}]}
        with pytest.raises(ProfileFormatError, match="a.b"):
            load_profiles(doc)

    def test_unknown_key_rejected(self):
        doc = {"tools": [{"tool_ref": "a.b", "effects": ["read"], "color": "red"}]}
        with pytest.raises(ProfileFormatError, match="color"):
            load_profiles(doc)


class TestSessionConfig:
    def test_full_config(self):
        ctx = load_session_config(
            '{"workdir": "/w", "anchors": ["/w/a.txt"], '
            '"internal_hosts": ["acme.com"], "sensitive": ["/w/.env"]}'
        )
        assert ctx.workdir == "/w"
        assert "/w/a.txt" in ctx.anchors
        assert ctx.internal_hosts == ("acme.com",)
        assert ctx.sensitive[0].pattern == "/w/.env"

    def test_unknown_key_rejected(self):
        with pytest.raises(ProfileFormatError):
            load_session_config('{"workdir": "/w", "banner": "hi"}')

    def test_workdir_required(self):
        with pytest.raises(ProfileFormatError):
            load_session_config('{"anchors": []}')

    def test_default_seeds_opt_in(self):
        ctx = load_session_config('{"workdir": "/w"}', default_sensitive=True)
        assert ctx.sensitive
