"""Turning consent answers into policy: options, refinement, generalization.

Each ASK presents the triggering boundary plus its single-step lattice
generalizations as durable options.  Durable answers insert user rules;
generalization then greedily merges rule pairs through a common lift whenever
that changes no decision over the session's query history.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .lattice import (
    Boundary,
    GuardKind,
    LocationBound,
    LocationClass,
    ResourceGuard,
    boundary_leq,
    lift_candidates,
    render_boundary,
    _bound_class_lift,
    _guard_lift_chain,
)
from .policy import ALLOW, DENY, ORIGIN_USER, Policy, Rule

_CLASS_PHRASE = {
    LocationClass.EXACT: "this anchored resource",
    LocationClass.PARENT: "anywhere under the working directory",
    LocationClass.LOCAL: "anywhere on the local filesystem",
    LocationClass.CTXT: "the agent context",
    LocationClass.INTNET: "any internal network endpoint",
    LocationClass.EXTNET: "any external network endpoint",
}


@dataclass(frozen=True)
class ConsentOption:
    label: str
    boundary: Boundary
    durable: bool
    action: str


def _lift_label(base: Boundary, lifted: Boundary) -> str:
    if lifted.input != base.input:
        side, old, new = "source", base.input, lifted.input
    else:
        side, old, new = "destination", base.output, lifted.output
    if new.cls != old.cls:
        return f"Always allow: {side} {_CLASS_PHRASE[new.cls]}"
    return f"Always allow: {side} matching {new.guard}"


def generate_options(phi: Boundary) -> List[ConsentOption]:
    """Options for a pending ask: allow-once, durable single-step lifts,
    deny-once, deny-always; allow options ordered narrowest-first."""
    base = phi.rule_form()
    options = [ConsentOption(f"Allow once: {render_boundary(base)}", base, False, ALLOW)]
    for candidate in lift_candidates(phi):
        options.append(ConsentOption(_lift_label(base, candidate), candidate, True, ALLOW))
    options.append(ConsentOption(f"Deny once: {render_boundary(base)}", base, False, DENY))
    options.append(ConsentOption(f"Always deny: {render_boundary(base)}", base, True, DENY))
    return options


def refine(policy: Policy, choice: ConsentOption) -> Policy:
    """Apply a consent answer: durable choices insert a user rule, once
    choices leave the policy unchanged."""
    if choice.durable:
        policy.add_rule(policy.new_rule(choice.action, choice.boundary, ORIGIN_USER))
    return policy


# --- generalization ---------------------------------------------------------

def _rule_lifts(boundary: Boundary) -> List[Boundary]:
    """Single-step lifts of a rule boundary, class lifts first.

    Class lifts come first so merging lands on the location hierarchy (the
    parent-class rule) rather than a directory glob when both preserve
    history.
    """
    out: List[Boundary] = []

    def push(candidate: Boundary) -> None:
        if candidate == boundary or candidate in out:
            return
        if boundary_leq(boundary, candidate) and not boundary_leq(candidate, boundary):
            out.append(candidate)

    for attr in ("input", "output"):
        bound: LocationBound = getattr(boundary, attr)
        up = _bound_class_lift(bound)
        if up is not None:
            push(_replace_side(boundary, attr, up))
    for attr in ("input", "output"):
        bound = getattr(boundary, attr)
        chain: List[ResourceGuard] = []
        if bound.guard.kind is GuardKind.EXACT and bound.cls is not LocationClass.CTXT:
            chain = _guard_lift_chain(bound.guard.pattern)
        if bound.guard.kind is GuardKind.GLOB:
            chain = [ResourceGuard.none()]
        for guard in chain:
            push(_replace_side(boundary, attr, LocationBound(bound.cls, guard)))
        if chain and not chain[-1].is_none:
            push(_replace_side(boundary, attr, LocationBound(bound.cls, ResourceGuard.none())))
    return out


def _replace_side(boundary: Boundary, attr: str, bound: LocationBound) -> Boundary:
    if attr == "input":
        return Boundary(bound, boundary.output, boundary.taint, boundary.effects)
    return Boundary(boundary.input, bound, boundary.taint, boundary.effects)


def _merge_preserves_history(policy: Policy, drop: Tuple[str, str], merged: Rule) -> bool:
    trial = Policy(clock=policy.clock)
    trial.rules = [r for r in policy.rules if r.id not in drop] + [merged]
    for psi, _past in policy.history:
        if trial._decide(psi).verdict != policy._decide(psi).verdict:
            return False
    return True


def generalize(policy: Policy) -> Policy:
    """Greedily merge same-action user-rule pairs through a common immediate
    lift whenever the merge changes no decision over the query history.
    Repeats to fixpoint; the rule count never increases."""
    while True:
        users = sorted(
            (r for r in policy.rules if r.origin == ORIGIN_USER), key=lambda r: r.id
        )
        merged_any = False
        for i in range(len(users)):
            for j in range(i + 1, len(users)):
                r1, r2 = users[i], users[j]
                if r1.action != r2.action:
                    continue
                lifts2 = set(_rule_lifts(r2.boundary))
                commons = [c for c in _rule_lifts(r1.boundary) if c in lifts2]
                for candidate in commons:
                    merged = Rule(
                        policy.next_id(ORIGIN_USER),
                        r1.action,
                        candidate,
                        ORIGIN_USER,
                        max(r1.created_at, r2.created_at),
                    )
                    if _merge_preserves_history(policy, (r1.id, r2.id), merged):
                        policy.remove_rule(r1.id)
                        policy.remove_rule(r2.id)
                        policy.add_rule(merged)
                        merged_any = True
                        break
                if merged_any:
                    break
            if merged_any:
                break
        if not merged_any:
            return policy
