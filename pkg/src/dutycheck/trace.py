"""Transactional trace parsing and replay.

Traces are blocks of state-transition events:

    txn LABEL {
        assign u1 r1
        session s1 u1
        activate s1 r1
    }

Events (single-line form ``txn t { assign u1 r1 }`` also accepted, with
``;`` between events): ``assign U R``, ``deassign U R``,
``grant R OP OB``, ``revoke R OP OB``, ``inherit SR JR``,
``uninherit SR JR``, ``session S U``, ``endsession S``,
``activate S R``, ``deactivate S R``.

Constraints are state predicates, so they are checked only at transaction
commit: the intermediate edits inside a transaction (assigning the first
of three dependent roles, say) necessarily pass through violating states.
In enforce mode a violating transaction is rolled back; in audit mode the
violation is recorded and the state advances regardless. A transaction
that would break a structural state invariant is rejected in both modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .constraints import Constraint, Verdict
from .evaluate import evaluate_all
from .model import (
    Diagnostic,
    Permission,
    RbacState,
    SessionRecord,
    _find_cycle,
)
from .policy import _tokens
from .solver import DEFAULT_MAX_ENTITIES


@dataclass(frozen=True)
class TraceEvent:
    kind: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return " ".join((self.kind,) + self.args)


@dataclass(frozen=True)
class Transaction:
    label: str
    events: tuple[TraceEvent, ...]


@dataclass
class TraceParseResult:
    transactions: list[Transaction]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


_EVENT_ARITY = {
    "assign": 2,
    "deassign": 2,
    "grant": 3,
    "revoke": 3,
    "inherit": 2,
    "uninherit": 2,
    "session": 2,
    "endsession": 1,
    "activate": 2,
    "deactivate": 2,
}


class TransitionError(Exception):
    """An event cannot apply to the current state without breaking it."""


def apply_event(state: RbacState, ev: TraceEvent) -> RbacState:
    """Apply one event, returning a new snapshot.

    Raises :class:`TransitionError` for unknown ids or edits that would
    break a structural invariant (activating an unassigned role,
    de-assigning a role still active in a session, hierarchy cycles,
    duplicate session ids).
    """
    k, a = ev.kind, ev.args
    sessions = dict(state.sessions)
    if k == "assign":
        u, r = a
        _need(u in state.users, f"unknown user '{u}'")
        _need(r in state.roles, f"unknown role '{r}'")
        return replace(state, ua=state.ua | {(u, r)})
    if k == "deassign":
        u, r = a
        _need((u, r) in state.ua, f"user '{u}' is not assigned role '{r}'")
        for sid, rec in sessions.items():
            if rec.owner == u and r in rec.active:
                raise TransitionError(
                    f"cannot deassign role '{r}' from '{u}': still active in session '{sid}'"
                )
        return replace(state, ua=state.ua - {(u, r)})
    if k == "grant":
        r, op, ob = a
        _need(r in state.roles, f"unknown role '{r}'")
        _need(op in state.operations, f"unknown operation '{op}'")
        _need(ob in state.objects, f"unknown object '{ob}'")
        return replace(state, pa=state.pa | {(Permission(op, ob), r)})
    if k == "revoke":
        r, op, ob = a
        entry = (Permission(op, ob), r)
        _need(entry in state.pa, f"role '{r}' does not hold permission ({ob},{op})")
        return replace(state, pa=state.pa - {entry})
    if k == "inherit":
        senior, junior = a
        _need(senior in state.roles, f"unknown role '{senior}'")
        _need(junior in state.roles, f"unknown role '{junior}'")
        edges = state.rh_edges | {(senior, junior)}
        cycle = _find_cycle(state.roles, edges)
        if cycle:
            raise TransitionError("hierarchy edge would create a cycle: " + " > ".join(cycle))
        return replace(state, rh_edges=edges)
    if k == "uninherit":
        senior, junior = a
        _need((senior, junior) in state.rh_edges, f"no hierarchy edge ({senior},{junior})")
        return replace(state, rh_edges=state.rh_edges - {(senior, junior)})
    if k == "session":
        sid, u = a
        _need(sid not in sessions, f"session '{sid}' already exists")
        _need(u in state.users, f"unknown user '{u}'")
        sessions[sid] = SessionRecord(u, frozenset())
        return replace(state, sessions=sessions)
    if k == "endsession":
        (sid,) = a
        _need(sid in sessions, f"unknown session '{sid}'")
        del sessions[sid]
        return replace(state, sessions=sessions)
    if k == "activate":
        sid, r = a
        _need(sid in sessions, f"unknown session '{sid}'")
        rec = sessions[sid]
        if (rec.owner, r) not in state.ua:
            raise TransitionError(
                f"cannot activate '{r}' in session '{sid}': not assigned to owner '{rec.owner}'"
            )
        sessions[sid] = SessionRecord(rec.owner, rec.active | {r})
        return replace(state, sessions=sessions)
    if k == "deactivate":
        sid, r = a
        _need(sid in sessions, f"unknown session '{sid}'")
        rec = sessions[sid]
        _need(r in rec.active, f"role '{r}' is not active in session '{sid}'")
        sessions[sid] = SessionRecord(rec.owner, rec.active - {r})
        return replace(state, sessions=sessions)
    raise TransitionError(f"unknown event '{k}'")


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise TransitionError(message)


def parse_trace(text: str, base: RbacState) -> TraceParseResult:
    """Parse transaction blocks, resolving ids against the evolving state.

    The parse simulates every event in order (transactions applied
    unconditionally) so that references to entities created earlier in
    the trace resolve and invariant-breaking events are reported with
    their line numbers.
    """
    diagnostics: list[Diagnostic] = []
    transactions: list[Transaction] = []
    current_label: str | None = None
    current_events: list[TraceEvent] = []
    sim = base
    seen_labels: set[str] = set()

    def error(line: int, col: int, message: str) -> None:
        diagnostics.append(Diagnostic("error", message, line, col))

    def handle_event(toks: list[tuple[str, int]], lineno: int) -> None:
        nonlocal sim
        (kind, col), args = toks[0], toks[1:]
        if kind not in _EVENT_ARITY:
            error(lineno, col, f"unknown event '{kind}'")
            return
        if len(args) != _EVENT_ARITY[kind]:
            error(lineno, col, f"'{kind}' takes {_EVENT_ARITY[kind]} arguments, got {len(args)}")
            return
        ev = TraceEvent(kind, tuple(t for t, _ in args))
        try:
            sim = apply_event(sim, ev)
        except TransitionError as exc:
            error(lineno, col, str(exc))
            return
        current_events.append(ev)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("txn"):
            if current_label is not None:
                error(lineno, 1, f"transaction '{current_label}' is not closed before a new one")
                transactions.append(Transaction(current_label, tuple(current_events)))
            m = _tokens(line)
            if len(m) < 2 or m[1][0] == "{":
                error(lineno, 1, "txn statement needs a label")
                current_label, current_events = "_anon", []
                continue
            label = m[1][0]
            if label in seen_labels:
                error(lineno, m[1][1], f"duplicate transaction label '{label}'")
            seen_labels.add(label)
            current_label, current_events = label, []
            inline = line.split("{", 1)
            if len(inline) != 2:
                error(lineno, 1, "txn statement needs an opening '{'")
                continue
            body = inline[1]
            closed = body.rstrip().endswith("}")
            if closed:
                body = body.rstrip()[:-1]
            for chunk in body.split(";"):
                toks = _tokens(chunk)
                if toks:
                    handle_event(toks, lineno)
            if closed:
                transactions.append(Transaction(current_label, tuple(current_events)))
                current_label = None
        elif line == "}":
            if current_label is None:
                error(lineno, 1, "'}' outside a transaction")
            else:
                transactions.append(Transaction(current_label, tuple(current_events)))
                current_label = None
        else:
            if current_label is None:
                error(lineno, 1, f"event outside a transaction: '{line}'")
                continue
            handle_event(_tokens(line), lineno)

    if current_label is not None:
        error(len(text.splitlines()) or 1, 1, f"transaction '{current_label}' is not closed")
        transactions.append(Transaction(current_label, tuple(current_events)))
    return TraceParseResult(transactions, diagnostics)


@dataclass
class TransactionResult:
    label: str
    applied: bool
    verdicts: list[Verdict] = field(default_factory=list)
    violated: list[str] = field(default_factory=list)  # constraint ids
    error: str | None = None  # invariant breach; transaction rejected


def replay(
    base: RbacState,
    constraints: list[Constraint],
    transactions: list[Transaction],
    mode: str = "enforce",
    max_entities: int = DEFAULT_MAX_ENTITIES,
) -> tuple[RbacState, list[TransactionResult]]:
    """Replay transactions, checking every constraint at each commit.

    Enforce mode rolls a violating transaction back; audit mode records
    the violation and advances. Transactions that cannot apply (an event
    breaks a structural invariant, which can happen after an earlier
    rollback changed the state the trace was validated against) are
    rejected in both modes.
    """
    if mode not in ("enforce", "audit"):
        raise ValueError(f"unknown replay mode '{mode}'")
    state = base
    results: list[TransactionResult] = []
    for txn in transactions:
        candidate = state
        try:
            for ev in txn.events:
                candidate = apply_event(candidate, ev)
        except TransitionError as exc:
            results.append(TransactionResult(txn.label, applied=False, error=str(exc)))
            continue
        verdicts = evaluate_all(candidate, constraints, max_entities=max_entities)
        violated = [v.constraint_id for v in verdicts if not v.satisfied]
        applied = not violated or mode == "audit"
        if applied:
            state = candidate
        results.append(
            TransactionResult(txn.label, applied=applied, verdicts=verdicts, violated=violated)
        )
    return state, results
