"""Constraint evaluation over a state snapshot.

Each family reduces to a per-entity matched-role map (the entity's role
set intersected with the constraint's dependent/conflicting roles):

* static families map users via assigned or authorized roles;
* dynamic session scope maps sessions via their active roles;
* dynamic user scope maps users via their activated roles.

Types II and III delegate the existential checks to :mod:`dutycheck.solver`.
Entities are always visited in sorted order so reports are reproducible.
"""

from __future__ import annotations

from typing import Callable, Mapping

from . import model
from .constraints import (
    Constraint,
    Dcd,
    Dsd,
    ItemRequirement,
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
    validate_constraint,
)
from .model import DutycheckError, RbacState, RoleView
from .solver import (
    DEFAULT_MAX_ENTITIES,
    ContributionVector,
    PartitionWitness,
    find_partition,
    reachable_unions,
)

MatchedMap = Mapping[str, frozenset]


def _static_matched(state: RbacState, rs: frozenset, view: RoleView) -> dict[str, frozenset]:
    closure = model.rh_closure(state) if view is RoleView.HIERARCHICAL else None
    out = {}
    for u in sorted(state.users):
        held = (
            model.authorized_roles(state, u, closure)
            if view is RoleView.HIERARCHICAL
            else model.assigned_roles(state, u)
        )
        out[u] = held & rs
    return out


def _session_matched(state: RbacState, rs: frozenset) -> dict[str, frozenset]:
    return {sid: state.sessions[sid].active & rs for sid in sorted(state.sessions)}


def _user_activated_matched(state: RbacState, rs: frozenset) -> dict[str, frozenset]:
    return {u: model.activated_roles(state, u) & rs for u in sorted(state.users)}


def _separation_witnesses(matched: MatchedMap, n: int) -> list[Witness]:
    return [
        Witness(entity=e, matched_roles=m, detail=TooManyRoles(limit=n))
        for e, m in sorted(matched.items())
        if len(m) >= n
    ]


def _type1_witnesses(matched: MatchedMap, n: int) -> list[Witness]:
    return [
        Witness(entity=e, matched_roles=m, detail=NotEnoughRoles(threshold=n))
        for e, m in sorted(matched.items())
        if 0 < len(m) <= n
    ]


def _type2_witnesses(matched: MatchedMap, rs: frozenset, n: int) -> list[Witness]:
    cv = ContributionVector.from_sets(matched, rs)
    witnesses = []
    for e, m in sorted(matched.items()):
        if not 0 < len(m) <= n:
            continue
        own = cv.contrib[e]
        reached = reachable_unions(cv, exclude=e, cap=n)
        if not any((u | own).bit_count() > n for u in reached):
            witnesses.append(
                Witness(entity=e, matched_roles=m, detail=NoHelperSet(threshold=n))
            )
    return witnesses


def _type3_verdict(
    cid: str, matched: MatchedMap, rs: frozenset, n: int, max_entities: int
) -> Verdict:
    cv = ContributionVector.from_sets(matched, rs)
    result = find_partition(cv, n, max_entities=max_entities)
    if isinstance(result, PartitionWitness):
        detail = SatisfyingPartition(groups=result.groups, zero_groups=result.zero_groups)
        return Verdict(cid, True, (Witness(None, frozenset(), detail),))
    detail = NoValidPartition(checked_count=result.checked_count)
    return Verdict(cid, False, (Witness(None, frozenset(), detail),))


# --- item constraints -------------------------------------------------------

def _combine(sets: list[frozenset], mode: str) -> frozenset:
    result = sets[0]
    for s in sets[1:]:
        result = result & s if mode == "common" else result | s
    return result


def _req_holds(req: ItemRequirement, items: frozenset) -> bool:
    if isinstance(req, NamedItems):
        return req.items <= items
    return req.count <= len(items)


def _render(items) -> tuple[str, ...]:
    return tuple(str(i) for i in sorted(items, key=str))


def _missing_detail(mode: str, items_kind: str, req: ItemRequirement, have: frozenset):
    cls = MissingCommonItems if mode == "common" else MissingUnionItems
    if isinstance(req, NamedItems):
        return cls(items_kind, have=_render(have), missing=_render(req.items - have))
    return cls(items_kind, have=_render(have), missing=(), required_count=req.count)


def _item_failure(
    state: RbacState,
    body: ScdItems,
    matched: frozenset,
    closure: model.RhClosure | None,
):
    """Detail for a user whose matched roles fail the item clause, else None."""
    mode, view = body.mode, body.view
    roles = sorted(matched)
    if body.kind in ("obs", "ops", "prms"):
        per_role = [model.role_items(state, r, view, closure) for r in roles]
        field = {"obs": 1, "ops": 2, "prms": 0}[body.kind]
        combined = _combine([items[field] for items in per_role], mode)
        req = {"obs": body.ob_req, "ops": body.op_req, "prms": body.prm_req}[body.kind]
        kind_label = {"obs": "objects", "ops": "operations", "prms": "permissions"}[body.kind]
        assert req is not None
        if _req_holds(req, combined):
            return None
        return _missing_detail(mode, kind_label, req, combined)

    # obsops: object clause plus a per-object operation clause.
    assert body.ob_req is not None and body.op_req is not None
    obs_sets = [model.role_items(state, r, view, closure).obs for r in roles]
    combined_obs = _combine(obs_sets, mode)

    def ops_on(ob: str) -> frozenset:
        return _combine([model.role_ops_on_ob(state, r, ob, view, closure) for r in roles], mode)

    if isinstance(body.ob_req, NamedItems):
        if not body.ob_req.items <= combined_obs:
            return _missing_detail(mode, "objects", body.ob_req, combined_obs)
        failing = {
            ob: ops_on(ob)
            for ob in sorted(body.ob_req.items)
            if not _req_holds(body.op_req, ops_on(ob))
        }
        if not failing:
            return None
        cls = MissingCommonItems if mode == "common" else MissingUnionItems
        have = tuple(f"{ob}:{op}" for ob in sorted(failing) for op in sorted(failing[ob]))
        if isinstance(body.op_req, NamedItems):
            missing = tuple(
                f"{ob}:{op}"
                for ob in sorted(failing)
                for op in sorted(body.op_req.items - failing[ob])
            )
            return cls("ops_on_objects", have=have, missing=missing)
        return cls("ops_on_objects", have=have, missing=(), required_count=body.op_req.count)

    # Count-form object requirement: there must be a witness set of at
    # least ob_n combined objects on each of which the operation clause
    # holds; equivalently, enough satisfying objects exist.
    satisfying = [ob for ob in sorted(combined_obs) if _req_holds(body.op_req, ops_on(ob))]
    if len(satisfying) >= body.ob_req.count:
        return None
    cls = MissingCommonItems if mode == "common" else MissingUnionItems
    if len(combined_obs) < body.ob_req.count:
        return _missing_detail(mode, "objects", body.ob_req, combined_obs)
    return cls(
        "ops_on_objects",
        have=tuple(satisfying),
        missing=(),
        required_count=body.ob_req.count,
    )


def _eval_items(state: RbacState, cid: str, body: ScdItems) -> Verdict:
    closure = model.rh_closure(state) if body.view is RoleView.HIERARCHICAL else None
    matched = _static_matched(state, body.rs, body.view)
    witnesses: list[Witness] = []
    for u, m in sorted(matched.items()):
        if not m:
            continue
        if len(m) <= body.n:
            witnesses.append(Witness(u, m, NotEnoughRoles(threshold=body.n)))
            continue
        detail = _item_failure(state, body, m, closure)
        if detail is not None:
            witnesses.append(Witness(u, m, detail))
    return Verdict(cid, not witnesses, tuple(witnesses))


# --- dispatch ---------------------------------------------------------------

def evaluate(
    state: RbacState, constraint: Constraint, max_entities: int = DEFAULT_MAX_ENTITIES
) -> Verdict:
    """Evaluate one constraint against the snapshot, producing a verdict.

    Raises :class:`DutycheckError` if the constraint does not validate
    against the state, and :class:`CapacityError` when a type II/III
    instance exceeds the solver limits.
    """
    problems = validate_constraint(constraint, state)
    if problems:
        raise DutycheckError("; ".join(d.message for d in problems))
    body = constraint.body
    cid = constraint.id

    if isinstance(body, Ssd):
        matched = _static_matched(state, body.rs, body.view)
        witnesses = _separation_witnesses(matched, body.n)
        return Verdict(cid, not witnesses, tuple(witnesses))
    if isinstance(body, Dsd):
        matched = _session_matched(state, body.rs)
        witnesses = _separation_witnesses(matched, body.n)
        return Verdict(cid, not witnesses, tuple(witnesses))
    if isinstance(body, Scd):
        matched = _static_matched(state, body.rs, body.view)
        return _combination_verdict(cid, body.type, matched, body.rs, body.n, max_entities)
    if isinstance(body, ScdItems):
        return _eval_items(state, cid, body)
    if isinstance(body, Dcd):
        matched = (
            _session_matched(state, body.rs)
            if body.scope == "session"
            else _user_activated_matched(state, body.rs)
        )
        return _combination_verdict(cid, body.type, matched, body.rs, body.n, max_entities)
    raise TypeError(f"unknown constraint body: {body!r}")


def _combination_verdict(
    cid: str, ctype: int, matched: MatchedMap, rs: frozenset, n: int, max_entities: int
) -> Verdict:
    if ctype == 1:
        witnesses = _type1_witnesses(matched, n)
        return Verdict(cid, not witnesses, tuple(witnesses))
    if ctype == 2:
        witnesses = _type2_witnesses(matched, rs, n)
        return Verdict(cid, not witnesses, tuple(witnesses))
    return _type3_verdict(cid, matched, rs, n, max_entities)


def evaluate_all(
    state: RbacState,
    constraints: list[Constraint],
    max_entities: int = DEFAULT_MAX_ENTITIES,
) -> list[Verdict]:
    """Evaluate every constraint, ordered by constraint id."""
    return [
        evaluate(state, c, max_entities=max_entities)
        for c in sorted(constraints, key=lambda c: c.id)
    ]
