"""Consent options, refinement, and history-preserving generalization."""

import random

from leash.lattice import (
    Boundary,
    GuardKind,
    LocationBound,
    LocationClass,
    ResourceGuard,
    boundary_leq,
    decode_abstract,
    enumerate_abstract_codes,
)
from leash.policy import ALLOW, ASK, DENY, ORIGIN_INVARIANT, ORIGIN_USER, Policy, Rule
from leash.refine import ConsentOption, generalize, generate_options, refine

L = LocationClass


def concrete_search(path="/project/sales/q3.csv"):
    return Boundary(
        LocationBound.at(L.PARENT, path),
        LocationBound(L.CTXT, ResourceGuard.exact("ctxt"), "ctxt"),
        frozenset({"untainted"}),
        frozenset({"read"}),
    )


class TestGenerateOptions:
    def test_search_offers_file_parent_and_local(self):
        opts = generate_options(concrete_search())
        assert opts[0].action == ALLOW and not opts[0].durable  # this call only
        durable_allows = [o for o in opts if o.durable and o.action == ALLOW]
        patterns = [
            o.boundary.input.guard.pattern
            for o in durable_allows
            if o.boundary.input.guard.kind is GuardKind.GLOB
        ]
        assert "/project/sales/*" in patterns
        assert any(
            o.boundary.input.cls is L.LOCAL and o.boundary.input.guard.is_none
            for o in durable_allows
        )

    def test_deny_options_present(self):
        opts = generate_options(concrete_search())
        denies = [o for o in opts if o.action == DENY]
        assert [o.durable for o in denies] == [False, True]

    def test_every_option_covers_the_call(self):
        phi = concrete_search()
        for o in generate_options(phi):
            assert boundary_leq(phi.rule_form(), o.boundary)

    def test_option_count_bounded(self):
        opts = generate_options(concrete_search())
        assert len([o for o in opts if o.action == ALLOW]) <= 8

    def test_options_pairwise_distinct(self):
        opts = generate_options(concrete_search())
        keys = [(o.action, o.durable, o.boundary) for o in opts]
        assert len(keys) == len(set(keys))

    def test_chain_top_has_resource_axis_only(self):
        phi = Boundary(
            LocationBound.at(L.LOCAL, "/var/cache/blob"),
            LocationBound(L.CTXT, ResourceGuard.exact("ctxt"), "ctxt"),
            frozenset({"untainted"}),
            frozenset({"read"}),
        )
        for o in generate_options(phi):
            if o.durable and o.action == ALLOW:
                assert o.boundary.input.cls is L.LOCAL


class TestRefine:
    def test_durable_allow_covers_next_call(self):
        policy = Policy(clock=lambda: 0.0)
        phi = concrete_search()
        parent_opt = next(
            o for o in generate_options(phi)
            if o.durable and o.action == ALLOW
            and o.boundary.input.guard.kind is GuardKind.GLOB
        )
        refine(policy, parent_opt)
        sibling = concrete_search("/project/sales/q2.csv")
        assert policy.decide(sibling).verdict == ALLOW

    def test_once_allow_adds_nothing(self):
        policy = Policy(clock=lambda: 0.0)
        phi = concrete_search()
        once = generate_options(phi)[0]
        refine(policy, once)
        assert policy.rules == []
        assert policy.decide(phi).verdict == ASK

    def test_durable_deny_blocks_next_call(self):
        policy = Policy(clock=lambda: 0.0)
        phi = concrete_search()
        deny_always = [o for o in generate_options(phi) if o.action == DENY][-1]
        refine(policy, deny_always)
        assert policy.decide(phi).verdict == DENY

    def test_durable_refine_idempotent(self):
        policy = Policy(clock=lambda: 0.0)
        opt = next(o for o in generate_options(concrete_search()) if o.durable)
        refine(policy, opt)
        refine(policy, opt)
        assert len(policy.rules) == 1


def exact_read_rule(policy, path):
    boundary = Boundary(
        LocationBound(L.EXACT, ResourceGuard.exact(path)),
        LocationBound(L.CTXT),
        frozenset({"untainted"}),
        frozenset({"read"}),
    )
    return policy.new_rule(ALLOW, boundary, ORIGIN_USER)


class TestGeneralize:
    def test_sibling_exact_rules_merge_to_parent_rule(self):
        policy = Policy(clock=lambda: 0.0)
        policy.add_rule(exact_read_rule(policy, "/project/main.py"))
        policy.add_rule(exact_read_rule(policy, "/project/utils.py"))
        generalize(policy)
        assert len(policy.rules) == 1
        merged = policy.rules[0].boundary
        assert merged.input.cls is L.PARENT
        assert merged.input.guard.is_none
        assert merged.output.cls is L.CTXT
        assert merged.taint == frozenset({"untainted"})
        assert merged.effects == frozenset({"read"})

    def test_single_rule_unchanged(self):
        policy = Policy(clock=lambda: 0.0)
        policy.add_rule(exact_read_rule(policy, "/project/main.py"))
        before = list(policy.rules)
        generalize(policy)
        assert policy.rules == before

    def test_rule_count_never_increases(self):
        rng = random.Random(51)
        codes = list(enumerate_abstract_codes())
        for _ in range(50):
            policy = Policy(clock=lambda: 0.0)
            for _ in range(rng.randint(0, 6)):
                policy.add_rule(
                    policy.new_rule(rng.choice([ALLOW, DENY]), decode_abstract(rng.choice(codes)))
                )
            n = len(policy.rules)
            generalize(policy)
            assert len(policy.rules) <= n

    def test_history_decisions_preserved(self):
        rng = random.Random(52)
        codes = list(enumerate_abstract_codes())
        for _ in range(30):
            policy = Policy(clock=lambda: 0.0)
            for _ in range(rng.randint(2, 6)):
                policy.add_rule(
                    policy.new_rule(rng.choice([ALLOW, DENY]), decode_abstract(rng.choice(codes)))
                )
            probes = [decode_abstract(rng.choice(codes)) for _ in range(40)]
            before = [policy.decide(phi).verdict for phi in probes]  # builds history too
            generalize(policy)
            after = [policy._decide(phi).verdict for phi in probes]
            assert after == before

    def test_full_lattice_equivalence_with_total_history(self):
        # With every abstract point in the history, generalize must be
        # decision-equivalent everywhere.
        rng = random.Random(53)
        codes = list(enumerate_abstract_codes())
        probe = [decode_abstract(c) for c in codes[:: 16]]
        for _ in range(5):
            policy = Policy(clock=lambda: 0.0)
            for _ in range(rng.randint(2, 8)):
                policy.add_rule(
                    policy.new_rule(rng.choice([ALLOW, ALLOW, DENY]), decode_abstract(rng.choice(codes)))
                )
            for phi in probe:
                policy.decide(phi)
            before = [d.verdict for _, d in policy.history]
            generalize(policy)
            after = [policy._decide(phi).verdict for phi, _ in policy.history]
            assert after == before

    def test_ask_flips_only_to_shared_action(self):
        rng = random.Random(54)
        codes = list(enumerate_abstract_codes())
        for _ in range(20):
            policy = Policy(clock=lambda: 0.0)
            action = rng.choice([ALLOW, DENY])
            for _ in range(rng.randint(2, 5)):
                policy.add_rule(policy.new_rule(action, decode_abstract(rng.choice(codes))))
            probes = [decode_abstract(rng.choice(codes)) for _ in range(60)]
            before = {id(p): policy._decide(p).verdict for p in probes}
            generalize(policy)
            for p in probes:
                now = policy._decide(p).verdict
                if before[id(p)] == ASK and now != ASK:
                    assert now == action

    def test_invariants_never_merged(self):
        policy = Policy(clock=lambda: 0.0)
        b1 = Boundary.abstract(L.EXACT, L.CTXT, {"tainted"}, {"read"})
        b2 = Boundary.abstract(L.PARENT, L.CTXT, {"tainted"}, {"read"})
        policy.add_rule(policy.new_rule(DENY, b1, ORIGIN_INVARIANT))
        policy.add_rule(policy.new_rule(DENY, b2, ORIGIN_INVARIANT))
        generalize(policy)
        assert len(policy.rules) == 2
        assert all(r.origin == ORIGIN_INVARIANT for r in policy.rules)
