"""Boundary-scoped consent middleware for MCP-style tool sessions.

Tool calls are abstracted into flow-summary boundaries, checked against a
lattice-ordered policy with taint tracking and non-overridable invariants,
escalated to the user only on boundary crossings, and each answer is
generalized into a reusable scoped rule.
"""

from .lattice import (
    Boundary,
    LocationBound,
    LocationClass,
    ResourceGuard,
    boundary_leq,
    lift_candidates,
    location_class_leq,
    render_boundary,
)
from .policy import (
    ALLOW,
    ASK,
    DENY,
    Decision,
    Policy,
    Rule,
    load_policy,
    save_policy,
)
from .taint import TaintEnvironment, propagate, query_taint
from .abstraction import (
    RawCall,
    SessionContext,
    ToolProfile,
    abstract_call,
    classify_location,
    load_profiles,
    load_session_config,
)
from .dsl import DslParseError, DslRule, parse_policy_file, parse_rule
from .refine import ConsentOption, generalize, generate_options, refine
from .authorizer import (
    AWAIT_CONSENT,
    BLOCK,
    EXECUTE,
    AuditRecord,
    CallOutcome,
    PendingAsk,
    Session,
)

__version__ = "0.1.0"
