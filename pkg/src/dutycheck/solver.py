"""Decision procedures behind type II and III combination constraints.

Entity contributions (an entity's matched dependent roles) are encoded as
bit vectors over a stable, sorted indexing of the constraint's role set.
Type II reduces to bounded-size union reachability; type III to a
backtracking search for a partition into minimal threshold-crossing
groups plus zero-contribution groups.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .model import CapacityError

MAX_ROLE_BITS = 32
DEFAULT_MAX_ENTITIES = 20


@dataclass(frozen=True)
class ContributionVector:
    entities: tuple[str, ...]  # sorted
    roles: tuple[str, ...]  # sorted indexing of the dependent-role set
    contrib: Mapping[str, int]  # entity -> role bitmask

    @classmethod
    def from_sets(
        cls, contribs: Mapping[str, Iterable[str]], rs: Iterable[str]
    ) -> "ContributionVector":
        roles = tuple(sorted(rs))
        if len(roles) > MAX_ROLE_BITS:
            raise CapacityError(
                f"{len(roles)} dependent roles exceed the {MAX_ROLE_BITS}-bit "
                "solver width; fall back to the reference oracle"
            )
        index = {r: i for i, r in enumerate(roles)}
        masks = {}
        for entity, held in contribs.items():
            mask = 0
            for r in held:
                mask |= 1 << index[r]
            masks[entity] = mask
        return cls(entities=tuple(sorted(contribs)), roles=roles, contrib=masks)

    def roles_of(self, mask: int) -> frozenset[str]:
        return frozenset(r for i, r in enumerate(self.roles) if mask >> i & 1)


@dataclass(frozen=True)
class PartitionWitness:
    groups: tuple[frozenset[str], ...]
    zero_groups: tuple[frozenset[str], ...]


@dataclass(frozen=True)
class Unsat:
    checked_count: int


def reachable_unions(
    cv: ContributionVector, exclude: str | None = None, cap: int = MAX_ROLE_BITS
) -> set[int]:
    """All subset-union bitmasks with population count <= cap.

    Exact over every subset of ``cv.entities`` minus ``exclude``, including
    the empty subset (empty union). Union size only grows as entities are
    added, so filtering intermediate masks above the cap loses nothing.
    """
    reached: set[int] = {0}
    for entity in cv.entities:
        if entity == exclude:
            continue
        c = cv.contrib[entity]
        if c.bit_count() > cap:
            continue
        new = {m | c for m in reached}
        reached |= {m for m in new if m.bit_count() <= cap}
    return reached


def union_mask(cv: ContributionVector, group: Iterable[str]) -> int:
    mask = 0
    for entity in group:
        mask |= cv.contrib[entity]
    return mask


def minimality_check(group: Iterable[str], cv: ContributionVector, n: int) -> bool:
    """Group union exceeds n and every (size-1)-subset's union stays <= n."""
    members = sorted(group)
    total = union_mask(cv, members)
    if total.bit_count() <= n:
        return False
    for dropped in members:
        rest = union_mask(cv, (e for e in members if e != dropped))
        if rest.bit_count() > n:
            return False
    return True


def find_partition(
    cv: ContributionVector, n: int, max_entities: int = DEFAULT_MAX_ENTITIES
) -> Union[PartitionWitness, Unsat]:
    """Partition entities into minimal threshold-crossing groups.

    Zero-contribution entities can never sit in a minimal group (dropping
    them leaves the union unchanged), so they are segregated up front.
    The remaining entities are covered by backtracking search in
    lexicographic entity order; the first witness found is returned.
    ``Unsat`` carries the number of candidate groups examined and, within
    the configured limits, proves nonexistence.
    """
    zeros = frozenset(e for e in cv.entities if cv.contrib[e] == 0)
    active = [e for e in cv.entities if e not in zeros]
    if len(active) > max_entities:
        raise CapacityError(
            f"{len(active)} contributing entities exceed the partition-search "
            f"limit of {max_entities}; result would be undecided"
        )
    max_single = max((cv.contrib[e].bit_count() for e in active), default=0)
    checked = 0
    failed: set[frozenset[str]] = set()

    def candidate_groups(remaining: tuple[str, ...]):
        """Groups containing remaining[0], grown in lexicographic order.

        A partial union already past n + max_single cannot regain
        minimality (no single drop removes enough bits), so that branch
        and all its extensions are pruned.
        """
        first = remaining[0]
        rest = remaining[1:]

        def extend(group: list[str], mask: int, start: int):
            yield group, mask
            for i in range(start, len(rest)):
                new_mask = mask | cv.contrib[rest[i]]
                if new_mask.bit_count() > n + max_single:
                    continue
                yield from extend(group + [rest[i]], new_mask, i + 1)

        yield from extend([first], cv.contrib[first], 0)

    def search(remaining: tuple[str, ...]) -> list[frozenset[str]] | None:
        nonlocal checked
        if not remaining:
            return []
        key = frozenset(remaining)
        if key in failed:
            return None
        for group, mask in candidate_groups(remaining):
            checked += 1
            if mask.bit_count() <= n:
                continue
            if not minimality_check(group, cv, n):
                continue
            chosen = frozenset(group)
            rest = tuple(e for e in remaining if e not in chosen)
            sub = search(rest)
            if sub is not None:
                return [chosen] + sub
        failed.add(key)
        return None

    groups = search(tuple(active))
    if groups is None:
        return Unsat(checked_count=checked)
    return PartitionWitness(
        groups=tuple(groups),
        zero_groups=(zeros,) if zeros else (),
    )
