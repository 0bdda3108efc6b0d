"""Naive, formula-literal constraint checker for differential testing.

Every family is decided by direct quantifier enumeration: helper sets by
full power-set scans, partitions by exhaustive set-partition enumeration,
with no pruning. This is the correctness anchor for the engine, not a
performance path; inputs are bounded to desk scale.

Interpretation note (shared with the engine): the partition formula for
the static type III family is read with the same zero-contribution group
exemption that the dynamic type III formulas spell out -- a group may
contribute no dependent roles instead of crossing the threshold.
Without it, any zero-contribution entity would make every instance
unsatisfiable.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Iterator, Mapping, Union

from . import model
from .constraints import (
    Constraint,
    Dcd,
    Dsd,
    MissingCommonItems,
    MissingUnionItems,
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
)
from .evaluate import _item_failure, _session_matched, _static_matched, _user_activated_matched
from .model import CapacityError, DutycheckError, RbacState, RoleView
from .solver import PartitionWitness

MAX_ORACLE_ENTITIES = 10
MAX_ORACLE_ROLES = 10


class UsageError(DutycheckError):
    """A witness was checked against the wrong constraint kind."""


def set_partitions(items: Iterable[str]) -> Iterator[list[frozenset[str]]]:
    """Every partition of ``items`` into nonempty blocks."""
    items = sorted(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] | {first}] + part[i + 1:]
        yield [frozenset({first})] + part


def _matched_map(state: RbacState, c: Constraint) -> dict[str, frozenset]:
    body = c.body
    if isinstance(body, (Ssd, Scd, ScdItems)):
        return _static_matched(state, body.rs, body.view)
    if isinstance(body, Dsd):
        return _session_matched(state, body.rs)
    if isinstance(body, Dcd):
        if body.scope == "session":
            return _session_matched(state, body.rs)
        return _user_activated_matched(state, body.rs)
    raise TypeError(f"unknown constraint body: {body!r}")


def _union(matched: Mapping[str, frozenset], group: Iterable[str]) -> frozenset:
    out: frozenset = frozenset()
    for e in group:
        out = out | matched[e]
    return out


def _helper_exists(matched: Mapping[str, frozenset], entity: str, n: int) -> bool:
    """Literal power-set scan for the type II existential."""
    others = sorted(e for e in matched if e != entity)
    own = matched[entity]
    for size in range(len(others) + 1):
        for subset in combinations(others, size):
            joined = _union(matched, subset)
            if len(joined) <= n and len(joined | own) > n:
                return True
    return False


def _block_ok(matched: Mapping[str, frozenset], block: frozenset[str], n: int) -> bool:
    joined = _union(matched, block)
    if len(joined) == 0:
        return True
    if len(joined) <= n:
        return False
    for dropped in block:
        if len(_union(matched, block - {dropped})) > n:
            return False
    return True


def _partition_exists(matched: Mapping[str, frozenset], n: int) -> bool:
    return any(
        all(_block_ok(matched, block, n) for block in part)
        for part in set_partitions(matched)
    )


def oracle_eval(state: RbacState, c: Constraint) -> Verdict:
    """Decide satisfaction by exhaustive enumeration.

    The verdict carries no witnesses; it exists to be compared against
    the engine's ``satisfied`` flag and to re-check emitted witnesses.
    """
    body = c.body
    if len(body.rs) > MAX_ORACLE_ROLES:
        raise CapacityError(f"oracle is bounded to {MAX_ORACLE_ROLES} dependent roles")
    if len(state.users) > MAX_ORACLE_ENTITIES or len(state.sessions) > MAX_ORACLE_ENTITIES:
        raise CapacityError(f"oracle is bounded to {MAX_ORACLE_ENTITIES} users/sessions")
    matched = _matched_map(state, c)
    n = body.n

    if isinstance(body, (Ssd, Dsd)):
        ok = all(len(m) < n for m in matched.values())
    elif isinstance(body, ScdItems):
        closure = model.rh_closure(state) if body.view is RoleView.HIERARCHICAL else None
        ok = all(
            len(m) == 0
            or (len(m) > n and _item_failure(state, body, m, closure) is None)
            for m in matched.values()
        )
    else:
        ctype = body.type
        if ctype == 1:
            ok = all(len(m) == 0 or len(m) > n for m in matched.values())
        elif ctype == 2:
            ok = all(
                _helper_exists(matched, e, n)
                for e, m in matched.items()
                if 0 < len(m) <= n
            )
        else:
            ok = _partition_exists(matched, n)
    return Verdict(c.id, ok)


def _verify_partition(
    matched: Mapping[str, frozenset],
    n: int,
    groups: tuple[frozenset[str], ...],
    zero_groups: tuple[frozenset[str], ...],
) -> bool:
    blocks = list(groups) + list(zero_groups)
    covered: set[str] = set()
    for block in blocks:
        if not block or block & covered or not block <= set(matched):
            return False
        covered |= block
    if covered != set(matched):
        return False
    for block in zero_groups:
        if len(_union(matched, block)) != 0:
            return False
    return all(_block_ok(matched, block, n) and _union(matched, block) for block in groups)


def verify_witness(
    state: RbacState, c: Constraint, w: Union[Witness, PartitionWitness]
) -> bool:
    """True iff the witness substitutes into the defining formula as claimed."""
    if isinstance(w, PartitionWitness):
        w = Witness(None, frozenset(), SatisfyingPartition(w.groups, w.zero_groups))
    body = c.body
    detail = w.detail
    matched = _matched_map(state, c)
    n = body.n

    is_type = lambda t: (isinstance(body, (Scd, Dcd)) and body.type == t)

    if isinstance(detail, TooManyRoles):
        if not isinstance(body, (Ssd, Dsd)):
            raise UsageError("separation witness checked against a combination constraint")
        m = matched.get(w.entity)
        return m is not None and m == w.matched_roles and len(m) >= n
    if isinstance(detail, NotEnoughRoles):
        if not (is_type(1) or isinstance(body, ScdItems)):
            raise UsageError("role-count witness only applies to type I families")
        m = matched.get(w.entity)
        return m is not None and m == w.matched_roles and 0 < len(m) <= n
    if isinstance(detail, (MissingCommonItems, MissingUnionItems)):
        if not isinstance(body, ScdItems):
            raise UsageError("item witness checked against a non-item constraint")
        expected = MissingCommonItems if body.mode == "common" else MissingUnionItems
        if not isinstance(detail, expected):
            raise UsageError(f"item witness mode does not match constraint mode '{body.mode}'")
        m = matched.get(w.entity)
        if m is None or m != w.matched_roles or len(m) <= n:
            return False
        closure = model.rh_closure(state) if body.view is RoleView.HIERARCHICAL else None
        return _item_failure(state, body, m, closure) is not None
    if isinstance(detail, NoHelperSet):
        if not is_type(2):
            raise UsageError("helper-set witness only applies to type II families")
        m = matched.get(w.entity)
        if m is None or m != w.matched_roles or not 0 < len(m) <= n:
            return False
        return not _helper_exists(matched, w.entity, n)
    if isinstance(detail, (NoValidPartition, SatisfyingPartition)):
        if not is_type(3):
            raise UsageError("partition witness only applies to type III families")
        if isinstance(detail, NoValidPartition):
            if len(matched) > MAX_ORACLE_ENTITIES:
                raise CapacityError("unsatisfiability re-check is bounded to desk scale")
            return not _partition_exists(matched, n)
        return _verify_partition(matched, n, detail.groups, detail.zero_groups)
    raise UsageError(f"unknown witness detail: {detail!r}")
