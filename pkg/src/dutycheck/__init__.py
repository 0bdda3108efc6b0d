"""RBAC separation- and combination-of-duty constraint engine."""

from .constraints import (
    Constraint,
    Dcd,
    Dsd,
    MinCount,
    MissingCommonItems,
    MissingUnionItems,
    NamedItems,
    NoHelperSet,
    NotEnoughRoles,
    NoValidPartition,
    SatisfyingPartition,
    Scd,
    ScdItems,
    Ssd,
    TooManyRoles,
    Verdict,
    Witness,
    family_keyword,
    validate_constraint,
)
from .evaluate import evaluate, evaluate_all
from .model import (
    CapacityError,
    Diagnostic,
    DutycheckError,
    HierarchyCycleError,
    Permission,
    RbacState,
    RoleView,
    SessionRecord,
    UnknownEntityError,
    activated_roles,
    assigned_roles,
    authorized_roles,
    make_state,
    rh_closure,
    role_items,
    role_ops_on_ob,
    user_sessions,
    validate_state,
)
from .oracle import oracle_eval, verify_witness
from .policy import emit_policy, parse_policy
from .report import emit_report
from .solver import (
    ContributionVector,
    PartitionWitness,
    Unsat,
    find_partition,
    minimality_check,
    reachable_unions,
)
from .trace import Transaction, TraceEvent, parse_trace, replay

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "Constraint",
    "ContributionVector",
    "Dcd",
    "Diagnostic",
    "Dsd",
    "DutycheckError",
    "HierarchyCycleError",
    "MinCount",
    "MissingCommonItems",
    "MissingUnionItems",
    "NamedItems",
    "NoHelperSet",
    "NotEnoughRoles",
    "NoValidPartition",
    "PartitionWitness",
    "SatisfyingPartition",
    "TooManyRoles",
    "Permission",
    "RbacState",
    "RoleView",
    "Scd",
    "ScdItems",
    "SessionRecord",
    "Ssd",
    "TraceEvent",
    "Transaction",
    "UnknownEntityError",
    "Unsat",
    "Verdict",
    "Witness",
    "activated_roles",
    "assigned_roles",
    "authorized_roles",
    "emit_policy",
    "emit_report",
    "evaluate",
    "evaluate_all",
    "family_keyword",
    "find_partition",
    "make_state",
    "minimality_check",
    "oracle_eval",
    "parse_policy",
    "parse_trace",
    "reachable_unions",
    "replay",
    "rh_closure",
    "role_items",
    "role_ops_on_ob",
    "user_sessions",
    "validate_constraint",
    "validate_state",
    "verify_witness",
]
