"""Command-line front end.

Subcommands:

* ``check POLICY``          -- evaluate every constraint, print a report;
* ``trace POLICY TRACE``    -- replay a transaction trace (enforce/audit);
* ``explain POLICY ID``     -- walk through one constraint's evaluation.

Exit codes: 0 all satisfied, 1 violations found, 2 parse/validation error
or unusable input. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys

from . import model
from .constraints import Constraint, Dcd, Dsd, ScdItems, Ssd, family_keyword
from .evaluate import evaluate, evaluate_all
from .model import CapacityError, Diagnostic, DutycheckError, RbacState, RoleView
from .oracle import oracle_eval
from .policy import parse_policy
from .report import _witness_lines, emit_report
from .solver import DEFAULT_MAX_ENTITIES
from .trace import parse_trace, replay


def _print_diagnostics(diags: list[Diagnostic], path: str) -> None:
    for d in diags:
        print(f"{path}:{d}", file=sys.stderr)


def _load_policy(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read '{path}': {exc}", file=sys.stderr)
        return None
    result = parse_policy(text)
    if not result.ok:
        _print_diagnostics(result.diagnostics, path)
        return None
    return result


def cmd_check(args: argparse.Namespace) -> int:
    loaded = _load_policy(args.policy)
    if loaded is None:
        return 2
    try:
        verdicts = evaluate_all(loaded.state, loaded.constraints, max_entities=args.max_entities)
    except (CapacityError, DutycheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        emit_report(verdicts, args.format, loaded.constraints, policy=args.policy),
        end="",
    )
    return 0 if all(v.satisfied for v in verdicts) else 1


def cmd_trace(args: argparse.Namespace) -> int:
    loaded = _load_policy(args.policy)
    if loaded is None:
        return 2
    try:
        with open(args.trace, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read '{args.trace}': {exc}", file=sys.stderr)
        return 2
    parsed = parse_trace(text, loaded.state)
    if not parsed.ok:
        _print_diagnostics(parsed.diagnostics, args.trace)
        return 2
    try:
        final, results = replay(
            loaded.state,
            loaded.constraints,
            parsed.transactions,
            mode=args.mode,
            max_entities=args.max_entities,
        )
    except (CapacityError, DutycheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    clean = True
    if args.format == "json":
        import json

        doc = {
            "policy": args.policy,
            "trace": args.trace,
            "mode": args.mode,
            "transactions": [
                {
                    "label": r.label,
                    "applied": r.applied,
                    "violated": r.violated,
                    "error": r.error,
                }
                for r in results
            ],
        }
        clean = all(r.applied and not r.violated and r.error is None for r in results)
        doc["summary"] = {"total": len(results), "clean": clean}
        print(json.dumps(doc, indent=2))
    else:
        for r in results:
            if r.error is not None:
                print(f"txn {r.label}: REJECTED ({r.error})")
                clean = False
            elif r.violated:
                action = "applied, violations logged" if r.applied else "rolled back"
                print(f"txn {r.label}: {action}: {', '.join(r.violated)}")
                clean = False
            else:
                print(f"txn {r.label}: ok")
        print(f"final state: {len(final.sessions)} session(s), {len(final.ua)} assignment(s)")
    return 0 if clean else 1


def _matched_roles(state: RbacState, body) -> dict[str, frozenset]:
    from .evaluate import _session_matched, _static_matched, _user_activated_matched

    if isinstance(body, (Ssd,)) or hasattr(body, "view"):
        return _static_matched(state, body.rs, getattr(body, "view", RoleView.DIRECT))
    if isinstance(body, Dsd) or (isinstance(body, Dcd) and body.scope == "session"):
        return _session_matched(state, body.rs)
    return _user_activated_matched(state, body.rs)


def cmd_explain(args: argparse.Namespace) -> int:
    loaded = _load_policy(args.policy)
    if loaded is None:
        return 2
    state = loaded.state
    by_id = {c.id: c for c in loaded.constraints}
    constraint = by_id.get(args.constraint_id)
    if constraint is None:
        print(f"error: no constraint with id '{args.constraint_id}'", file=sys.stderr)
        return 2
    body = constraint.body
    print(f"constraint {constraint.id} [{family_keyword(body)}]")
    print(f"  roles: {{{','.join(sorted(body.rs))}}}  n: {body.n}")
    if isinstance(body, ScdItems):
        for label, req in (("objects", body.ob_req), ("operations", body.op_req),
                           ("permissions", body.prm_req)):
            if req is not None:
                print(f"  required {label}: {req}")

    matched = _matched_roles(state, body)
    closure = (
        model.rh_closure(state)
        if getattr(body, "view", RoleView.DIRECT) is RoleView.HIERARCHICAL
        else None
    )
    for entity, m in sorted(matched.items()):
        line = f"  {entity}: matched roles {{{','.join(sorted(m))}}}"
        if isinstance(body, ScdItems) and m:
            from .evaluate import _combine

            items = [model.role_items(state, r, body.view, closure) for r in sorted(m)]
            obs = _combine([i.obs for i in items], body.mode)
            ops = _combine([i.ops for i in items], body.mode)
            prms = _combine([i.prms for i in items], body.mode)
            line += (
                f"; {body.mode} objects {{{','.join(sorted(obs))}}}"
                f", operations {{{','.join(sorted(ops))}}}"
                f", permissions {{{','.join(str(p) for p in sorted(prms))}}}"
            )
        print(line)

    try:
        verdict = evaluate(state, constraint, max_entities=args.max_entities)
    except (CapacityError, DutycheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"verdict: {'satisfied' if verdict.satisfied else 'VIOLATED'}")
    for w in verdict.witnesses:
        for line in _witness_lines(w):
            print(line)
    if args.verify:
        try:
            other = oracle_eval(state, constraint)
        except CapacityError as exc:
            print(f"oracle: skipped ({exc})")
        else:
            agree = other.satisfied == verdict.satisfied
            print(f"oracle: {'agree' if agree else 'DISAGREE'}")
            if not agree:
                return 1
    return 0 if verdict.satisfied else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dutycheck",
        description="Evaluate separation- and combination-of-duty constraints "
        "over an RBAC policy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--max-entities",
            type=int,
            default=DEFAULT_MAX_ENTITIES,
            help="partition-search capacity limit (default %(default)s)",
        )

    p_check = sub.add_parser("check", help="evaluate all constraints in a policy")
    p_check.add_argument("policy")
    p_check.add_argument("--format", choices=("text", "json"), default="text")
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_trace = sub.add_parser("trace", help="replay a transaction trace against a policy")
    p_trace.add_argument("policy")
    p_trace.add_argument("trace")
    p_trace.add_argument("--mode", choices=("enforce", "audit"), default="enforce")
    p_trace.add_argument("--format", choices=("text", "json"), default="text")
    common(p_trace)
    p_trace.set_defaults(func=cmd_trace)

    p_explain = sub.add_parser("explain", help="walk through one constraint's evaluation")
    p_explain.add_argument("policy")
    p_explain.add_argument("constraint_id")
    p_explain.add_argument("--verify", action="store_true",
                           help="cross-check the verdict against the brute-force oracle")
    common(p_explain)
    p_explain.set_defaults(func=cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
