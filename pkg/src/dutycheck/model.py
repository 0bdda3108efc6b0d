"""Core RBAC state: entity sets, assignments, role hierarchy, sessions.

The state is an immutable snapshot. All query functions are pure; mutation
happens only by building a new snapshot (see :mod:`dutycheck.trace`).
Queries raise :class:`UnknownEntityError` for undeclared ids rather than
returning empty sets -- an undeclared id indicates a policy bug.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple


class RoleView(Enum):
    """Whether queries look at direct assignments or include inherited ones."""

    DIRECT = "direct"
    HIERARCHICAL = "hierarchical"


class DutycheckError(Exception):
    """Base class for engine errors."""


class UnknownEntityError(DutycheckError):
    """An id was not declared in the state."""


class HierarchyCycleError(DutycheckError):
    """The role hierarchy contains a cycle."""

    def __init__(self, cycle: tuple[str, ...]):
        self.cycle = cycle
        super().__init__("role hierarchy cycle: " + " > ".join(cycle))


class CapacityError(DutycheckError):
    """Instance exceeds a configured solver limit; result would be a guess."""


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int = 0
    column: int = 0
    snippet: str = ""

    def __str__(self) -> str:
        loc = f"{self.line}:{self.column}: " if self.line else ""
        return f"{loc}{self.severity}: {self.message}"


@dataclass(frozen=True, order=True)
class Permission:
    """An approval to perform an operation on an object."""

    op: str
    ob: str

    def __str__(self) -> str:
        return f"({self.ob},{self.op})"


@dataclass(frozen=True)
class SessionRecord:
    owner: str
    active: frozenset[str]


@dataclass(frozen=True, eq=False)
class RbacState:
    users: frozenset[str]
    roles: frozenset[str]
    objects: frozenset[str]
    operations: frozenset[str]
    ua: frozenset[tuple[str, str]]  # (user, role)
    pa: frozenset[tuple[Permission, str]]  # (permission, role)
    rh_edges: frozenset[tuple[str, str]]  # (senior, junior), direct only
    sessions: Mapping[str, SessionRecord] = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RbacState):
            return NotImplemented
        return (
            self.users == other.users
            and self.roles == other.roles
            and self.objects == other.objects
            and self.operations == other.operations
            and self.ua == other.ua
            and self.pa == other.pa
            and self.rh_edges == other.rh_edges
            and dict(self.sessions) == dict(other.sessions)
        )


def make_state(
    users: Iterable[str] = (),
    roles: Iterable[str] = (),
    objects: Iterable[str] = (),
    operations: Iterable[str] = (),
    ua: Iterable[tuple[str, str]] = (),
    pa: Iterable[tuple[str, str, str]] = (),
    rh_edges: Iterable[tuple[str, str]] = (),
    sessions: Mapping[str, tuple[str, Iterable[str]]] | None = None,
) -> RbacState:
    """Build a state from plain iterables.

    ``pa`` entries are ``(role, op, ob)`` triples; ``sessions`` maps a
    session id to ``(owner, active_roles)``.
    """
    return RbacState(
        users=frozenset(users),
        roles=frozenset(roles),
        objects=frozenset(objects),
        operations=frozenset(operations),
        ua=frozenset(ua),
        pa=frozenset((Permission(op, ob), r) for r, op, ob in pa),
        rh_edges=frozenset(rh_edges),
        sessions={
            sid: SessionRecord(owner, frozenset(active))
            for sid, (owner, active) in (sessions or {}).items()
        },
    )


@dataclass(frozen=True)
class RhClosure:
    """Reflexive-transitive closure of the seniority relation."""

    juniors_of: Mapping[str, frozenset[str]]
    seniors_of: Mapping[str, frozenset[str]]


class RoleItems(NamedTuple):
    prms: frozenset[Permission]
    obs: frozenset[str]
    ops: frozenset[str]


def _find_cycle(roles: frozenset[str], edges: frozenset[tuple[str, str]]) -> tuple[str, ...] | None:
    """Return one cycle in the direct-edge graph, or None if acyclic."""
    out: dict[str, list[str]] = {r: [] for r in roles}
    for senior, junior in edges:
        out.setdefault(senior, []).append(junior)
    color: dict[str, int] = {}  # 0 = visiting, 1 = done
    stack: list[str] = []

    def visit(node: str) -> tuple[str, ...] | None:
        color[node] = 0
        stack.append(node)
        for nxt in sorted(out.get(node, ())):
            if color.get(nxt) == 0:
                return tuple(stack[stack.index(nxt):] + [nxt])
            if nxt not in color:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[node] = 1
        return None

    for start in sorted(out):
        if start not in color:
            found = visit(start)
            if found:
                return found
    return None


def rh_closure(state: RbacState) -> RhClosure:
    """Compute the downward (juniors) and upward (seniors) closures.

    Reflexivity is implicit: every role is its own junior and senior.
    Raises :class:`HierarchyCycleError` naming a cycle witness if the
    direct edges are not acyclic.
    """
    cycle = _find_cycle(state.roles, state.rh_edges)
    if cycle:
        raise HierarchyCycleError(cycle)
    direct: dict[str, set[str]] = {r: {r} for r in state.roles}
    for senior, junior in state.rh_edges:
        direct.setdefault(senior, {senior}).add(junior)
    # Fixpoint over direct edges; role counts are small.
    changed = True
    while changed:
        changed = False
        for r, downs in direct.items():
            extra = set()
            for d in downs:
                extra |= direct.get(d, {d})
            if not extra <= downs:
                downs |= extra
                changed = True
    juniors = {r: frozenset(v) for r, v in direct.items()}
    seniors: dict[str, set[str]] = {r: set() for r in state.roles}
    for r, downs in juniors.items():
        for d in downs:
            seniors.setdefault(d, set()).add(r)
    return RhClosure(
        juniors_of=juniors,
        seniors_of={r: frozenset(v) for r, v in seniors.items()},
    )


def _require(declared: frozenset[str], entity: str, kind: str) -> None:
    if entity not in declared:
        raise UnknownEntityError(f"unknown {kind} '{entity}'")


def validate_state(state: RbacState) -> list[Diagnostic]:
    """Check every structural invariant; return one diagnostic per breach."""
    diags: list[Diagnostic] = []

    def err(message: str) -> None:
        diags.append(Diagnostic("error", message))

    for u, r in sorted(state.ua):
        if u not in state.users:
            err(f"assignment ({u},{r}) references undeclared user '{u}'")
        if r not in state.roles:
            err(f"assignment ({u},{r}) references undeclared role '{r}'")
    for p, r in sorted(state.pa, key=lambda e: (e[1], e[0])):
        if r not in state.roles:
            err(f"permission {p} granted to undeclared role '{r}'")
        if p.op not in state.operations:
            err(f"permission {p} references undeclared operation '{p.op}'")
        if p.ob not in state.objects:
            err(f"permission {p} references undeclared object '{p.ob}'")
    for senior, junior in sorted(state.rh_edges):
        for r in (senior, junior):
            if r not in state.roles:
                err(f"hierarchy edge ({senior},{junior}) references undeclared role '{r}'")
    cycle = _find_cycle(state.roles, state.rh_edges)
    if cycle:
        err("role hierarchy cycle: " + " > ".join(cycle))
    for sid in sorted(state.sessions):
        rec = state.sessions[sid]
        if rec.owner not in state.users:
            err(f"session '{sid}' owned by undeclared user '{rec.owner}'")
            continue
        assigned = {r for u, r in state.ua if u == rec.owner}
        for r in sorted(rec.active):
            if r not in state.roles:
                err(f"session '{sid}' activates undeclared role '{r}'")
            elif r not in assigned:
                err(
                    f"session '{sid}' activates role '{r}' not assigned to "
                    f"its owner '{rec.owner}'"
                )
    return diags


def assigned_roles(state: RbacState, u: str) -> frozenset[str]:
    """Roles directly assigned to the user."""
    _require(state.users, u, "user")
    return frozenset(r for user, r in state.ua if user == u)


def authorized_roles(
    state: RbacState, u: str, closure: RhClosure | None = None
) -> frozenset[str]:
    """Roles assigned to the user or inherited downward through seniority."""
    _require(state.users, u, "user")
    closure = closure or rh_closure(state)
    out: set[str] = set()
    for r in assigned_roles(state, u):
        out |= closure.juniors_of.get(r, frozenset({r}))
    return frozenset(out)


def role_items(
    state: RbacState,
    r: str,
    view: RoleView = RoleView.DIRECT,
    closure: RhClosure | None = None,
) -> RoleItems:
    """Permissions, objects and operations granted to a role under a view.

    The hierarchical view unions the grants of every junior of ``r``.
    """
    _require(state.roles, r, "role")
    if view is RoleView.HIERARCHICAL:
        closure = closure or rh_closure(state)
        lineage = closure.juniors_of.get(r, frozenset({r}))
    else:
        lineage = frozenset({r})
    prms = frozenset(p for p, role in state.pa if role in lineage)
    return RoleItems(
        prms=prms,
        obs=frozenset(p.ob for p in prms),
        ops=frozenset(p.op for p in prms),
    )


def role_ops_on_ob(
    state: RbacState,
    r: str,
    ob: str,
    view: RoleView = RoleView.DIRECT,
    closure: RhClosure | None = None,
) -> frozenset[str]:
    """Operations the role may perform on the object under the view."""
    _require(state.roles, r, "role")
    _require(state.objects, ob, "object")
    if view is RoleView.HIERARCHICAL:
        closure = closure or rh_closure(state)
        lineage = closure.juniors_of.get(r, frozenset({r}))
    else:
        lineage = frozenset({r})
    return frozenset(p.op for p, role in state.pa if role in lineage and p.ob == ob)


def user_sessions(state: RbacState, u: str) -> frozenset[str]:
    """Session ids owned by the user."""
    _require(state.users, u, "user")
    return frozenset(sid for sid, rec in state.sessions.items() if rec.owner == u)


def activated_roles(state: RbacState, u: str) -> frozenset[str]:
    """Union of active role sets across all sessions owned by the user."""
    _require(state.users, u, "user")
    out: set[str] = set()
    for rec in state.sessions.values():
        if rec.owner == u:
            out |= rec.active
    return frozenset(out)
