"""Verdict serialization: deterministic text and JSON reports."""

from __future__ import annotations

import json
from typing import Iterable, Mapping

from .constraints import (
    Constraint,
    MissingCommonItems,
    MissingUnionItems,
    NoHelperSet,
    NotEnoughRoles,
    NoValidPartition,
    SatisfyingPartition,
    TooManyRoles,
    Verdict,
    Witness,
    family_keyword,
)


def _detail_dict(detail) -> dict:
    if isinstance(detail, TooManyRoles):
        return {"kind": "too_many_roles", "limit": detail.limit}
    if isinstance(detail, NotEnoughRoles):
        return {"kind": "not_enough_roles", "threshold": detail.threshold}
    if isinstance(detail, (MissingCommonItems, MissingUnionItems)):
        out = {
            "kind": "missing_common_items"
            if isinstance(detail, MissingCommonItems)
            else "missing_union_items",
            "items_kind": detail.items_kind,
            "have": list(detail.have),
            "missing": list(detail.missing),
        }
        if detail.required_count is not None:
            out["required_count"] = detail.required_count
        return out
    if isinstance(detail, NoHelperSet):
        return {"kind": "no_helper_set", "threshold": detail.threshold}
    if isinstance(detail, NoValidPartition):
        return {"kind": "no_valid_partition", "checked_count": detail.checked_count}
    if isinstance(detail, SatisfyingPartition):
        return {
            "kind": "satisfying_partition",
            "groups": sorted(sorted(g) for g in detail.groups),
            "zero_groups": sorted(sorted(g) for g in detail.zero_groups),
        }
    raise TypeError(f"unknown witness detail: {detail!r}")


def _witness_dict(w: Witness) -> dict:
    return {
        "entity": w.entity,
        "matched_roles": sorted(w.matched_roles),
        "detail": _detail_dict(w.detail),
    }


def _families(constraints: Iterable[Constraint]) -> Mapping[str, str]:
    return {c.id: family_keyword(c.body) for c in constraints}


def emit_report(
    verdicts: list[Verdict],
    format: str = "text",
    constraints: Iterable[Constraint] = (),
    policy: str = "policy",
) -> str:
    """Render verdicts; identical inputs produce byte-identical output."""
    if format not in ("text", "json"):
        raise ValueError(f"unknown report format '{format}'")
    families = _families(constraints)
    ordered = sorted(verdicts, key=lambda v: v.constraint_id)
    if format == "json":
        doc = {
            "policy": policy,
            "results": [
                {
                    "constraint": v.constraint_id,
                    "family": families.get(v.constraint_id, ""),
                    "satisfied": v.satisfied,
                    "witnesses": [_witness_dict(w) for w in v.witnesses],
                }
                for v in ordered
            ],
            "summary": {
                "total": len(ordered),
                "violated": sum(1 for v in ordered if not v.satisfied),
            },
        }
        return json.dumps(doc, indent=2) + "\n"

    lines = [f"policy: {policy}"]
    for v in ordered:
        family = families.get(v.constraint_id, "")
        status = "satisfied" if v.satisfied else "VIOLATED"
        lines.append(f"{v.constraint_id} [{family}]: {status}")
        for w in v.witnesses:
            lines += _witness_lines(w)
    violated = sum(1 for v in ordered if not v.satisfied)
    lines.append(f"summary: {len(ordered)} constraint(s), {violated} violated")
    return "\n".join(lines) + "\n"


def _witness_lines(w: Witness) -> list[str]:
    d = w.detail
    roles = "{" + ",".join(sorted(w.matched_roles)) + "}"
    if isinstance(d, TooManyRoles):
        return [f"  {w.entity}: holds {len(w.matched_roles)} conflicting roles {roles}, limit {d.limit}"]
    if isinstance(d, NotEnoughRoles):
        return [
            f"  {w.entity}: holds only {len(w.matched_roles)} dependent roles {roles}, "
            f"needs more than {d.threshold}"
        ]
    if isinstance(d, (MissingCommonItems, MissingUnionItems)):
        word = "common" if isinstance(d, MissingCommonItems) else "union"
        have = "{" + ",".join(d.have) + "}"
        if d.required_count is not None:
            need = f"needs {d.required_count}"
        else:
            need = "missing {" + ",".join(d.missing) + "}"
        return [f"  {w.entity}: {word} {d.items_kind} {have}, {need} (roles {roles})"]
    if isinstance(d, NoHelperSet):
        return [
            f"  {w.entity}: holds {roles} and no other entities combine past {d.threshold}"
        ]
    if isinstance(d, NoValidPartition):
        return [f"  no valid group partition exists ({d.checked_count} candidate groups checked)"]
    if isinstance(d, SatisfyingPartition):
        groups = " ".join(
            "{" + ",".join(sorted(g)) + "}" for g in sorted(d.groups, key=sorted)
        )
        zeros = " ".join(
            "{" + ",".join(sorted(g)) + "}" for g in sorted(d.zero_groups, key=sorted)
        )
        line = f"  partition: {groups}" if groups else "  partition:"
        if zeros:
            line += f" zero-contribution: {zeros}"
        return [line]
    raise TypeError(f"unknown witness detail: {d!r}")
