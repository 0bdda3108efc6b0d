"""Constraint catalog: typed bodies, parameter validation, verdicts.

Families:

* separation constraints -- an upper bound on conflicting roles held per
  user (static) or activated per session (dynamic);
* combination constraints type I/II/III -- lower-bound style requirements
  on dependent roles, per entity (I), with helper sets (II), or via a
  disjoint group partition (III);
* item constraints -- combination type I strengthened with a common
  (intersection) or union requirement on the objects / operations /
  permissions granted to the matched roles.

Static families take a role view: the hierarchical view substitutes the
authorized-role and inherited-grant queries for the direct ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import Diagnostic, Permission, RbacState, RoleView


@dataclass(frozen=True)
class NamedItems:
    """Requirement: the computed item set must include these items."""

    items: frozenset

    def __post_init__(self) -> None:
        if not self.items:
            raise ValueError("named item set cannot be empty")


@dataclass(frozen=True)
class MinCount:
    """Requirement: the computed item set must have at least this many members."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("item count must be at least 1")


ItemRequirement = Union[NamedItems, MinCount]


@dataclass(frozen=True)
class Ssd:
    """Static separation: each user holds < n of the conflicting roles."""

    rs: frozenset[str]
    n: int
    view: RoleView = RoleView.DIRECT


@dataclass(frozen=True)
class Dsd:
    """Dynamic separation: each session activates < n of the conflicting roles."""

    rs: frozenset[str]
    n: int


@dataclass(frozen=True)
class Scd:
    """Static combination, types I-III over dependent roles."""

    type: int  # 1, 2 or 3
    rs: frozenset[str]
    n: int
    view: RoleView = RoleView.DIRECT


@dataclass(frozen=True)
class ScdItems:
    """Static combination type I with a common- or union-item requirement."""

    mode: str  # "common" | "union"
    kind: str  # "obs" | "ops" | "obsops" | "prms"
    rs: frozenset[str]
    n: int
    ob_req: ItemRequirement | None = None
    op_req: ItemRequirement | None = None
    prm_req: ItemRequirement | None = None
    view: RoleView = RoleView.DIRECT


@dataclass(frozen=True)
class Dcd:
    """Dynamic combination, per session or per user, types I-III."""

    scope: str  # "session" | "user"
    type: int
    rs: frozenset[str]
    n: int


ConstraintBody = Union[Ssd, Dsd, Scd, ScdItems, Dcd]


@dataclass(frozen=True)
class Constraint:
    id: str
    body: ConstraintBody


# --- witness details -------------------------------------------------------

@dataclass(frozen=True)
class TooManyRoles:
    """Separation breach: the entity holds/activates at least ``limit`` conflicting roles."""

    limit: int


@dataclass(frozen=True)
class NotEnoughRoles:
    """Combination breach: 0 < matched <= threshold."""

    threshold: int


@dataclass(frozen=True)
class MissingCommonItems:
    items_kind: str  # "objects" | "operations" | "permissions" | "ops_on_objects"
    have: tuple[str, ...]
    missing: tuple[str, ...]
    required_count: int | None = None


@dataclass(frozen=True)
class MissingUnionItems:
    items_kind: str
    have: tuple[str, ...]
    missing: tuple[str, ...]
    required_count: int | None = None


@dataclass(frozen=True)
class NoHelperSet:
    """No set of other entities combines with this one past the threshold."""

    threshold: int


@dataclass(frozen=True)
class NoValidPartition:
    checked_count: int


@dataclass(frozen=True)
class SatisfyingPartition:
    groups: tuple[frozenset[str], ...]
    zero_groups: tuple[frozenset[str], ...]


WitnessDetail = Union[
    TooManyRoles,
    NotEnoughRoles,
    MissingCommonItems,
    MissingUnionItems,
    NoHelperSet,
    NoValidPartition,
    SatisfyingPartition,
]


@dataclass(frozen=True)
class Witness:
    entity: str | None  # None for population-level (partition) witnesses
    matched_roles: frozenset[str]
    detail: WitnessDetail


@dataclass(frozen=True)
class Verdict:
    constraint_id: str
    satisfied: bool
    witnesses: tuple[Witness, ...] = ()


def family_keyword(body: ConstraintBody) -> str:
    """Policy-file keyword for a constraint body (stable report label)."""
    if isinstance(body, Ssd):
        return "ssdh" if body.view is RoleView.HIERARCHICAL else "ssd"
    if isinstance(body, Dsd):
        return "dsd"
    if isinstance(body, Scd):
        h = "h" if body.view is RoleView.HIERARCHICAL else ""
        return f"scd{h}{body.type}"
    if isinstance(body, ScdItems):
        h = "h" if body.view is RoleView.HIERARCHICAL else ""
        m = "c" if body.mode == "common" else "u"
        k = {"obs": "ob", "ops": "op", "obsops": "obop", "prms": "prms"}[body.kind]
        return f"scd{h}{m}{k}1"
    if isinstance(body, Dcd):
        return f"dcd{body.scope[0]}{body.type}"
    raise TypeError(f"unknown constraint body: {body!r}")


def _check_requirement(
    req: ItemRequirement | None,
    present: bool,
    label: str,
    err,
) -> None:
    if present and req is None:
        err(f"{label} requirement is mandatory for this constraint kind")
    if not present and req is not None:
        err(f"{label} requirement is not allowed for this constraint kind")


def validate_constraint(c: Constraint, state: RbacState) -> list[Diagnostic]:
    """Check parameter bounds and role references against the state."""
    diags: list[Diagnostic] = []

    def err(message: str) -> None:
        diags.append(Diagnostic("error", f"constraint '{c.id}': {message}"))

    body = c.body
    rs, n = body.rs, body.n
    if isinstance(body, (Ssd, Dsd)):
        if not 2 <= n <= len(rs):
            err(f"SD bound violation: need 2 <= n <= |roles|, got n={n}, |roles|={len(rs)}")
    else:
        if not 1 <= n < len(rs):
            err(f"CD bound violation: need 1 <= n < |roles|, got n={n}, |roles|={len(rs)}")
    if isinstance(body, Scd) and body.type not in (1, 2, 3):
        err(f"unknown combination type {body.type}")
    if isinstance(body, Dcd):
        if body.type not in (1, 2, 3):
            err(f"unknown combination type {body.type}")
        if body.scope not in ("session", "user"):
            err(f"unknown scope '{body.scope}'")
    if isinstance(body, ScdItems):
        if body.mode not in ("common", "union"):
            err(f"unknown item mode '{body.mode}'")
        if body.kind not in ("obs", "ops", "obsops", "prms"):
            err(f"unknown item kind '{body.kind}'")
        else:
            _check_requirement(body.ob_req, body.kind in ("obs", "obsops"), "object", err)
            _check_requirement(body.op_req, body.kind in ("ops", "obsops"), "operation", err)
            _check_requirement(body.prm_req, body.kind == "prms", "permission", err)
        for req, declared, kind in (
            (body.ob_req, state.objects, "object"),
            (body.op_req, state.operations, "operation"),
        ):
            if isinstance(req, NamedItems):
                for item in sorted(req.items):
                    if item not in declared:
                        err(f"undeclared {kind} '{item}' in requirement")
        if isinstance(body.prm_req, NamedItems):
            for item in sorted(body.prm_req.items):
                if not isinstance(item, Permission):
                    err(f"permission requirement holds a non-permission: {item!r}")
                elif item.op not in state.operations or item.ob not in state.objects:
                    err(f"undeclared permission {item} in requirement")
    for r in sorted(rs):
        if r not in state.roles:
            err(f"undeclared role '{r}'")
    return diags
