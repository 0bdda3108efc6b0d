"""Policy file parsing and canonical emission.

Line-oriented grammar, one statement per line, ``#`` starts a comment:

    user ID | role ID | object ID | op ID
    perm ROLE OP OB
    assign USER ROLE
    inherit SENIOR JUNIOR
    session SID USER
    activate SID ROLE
    constraint KIND [id=LABEL] roles=[r1,r2] n=K [item args...]

Item arguments: ``obs=[...]`` xor ``obn=K``; ``ops=[...]`` xor ``opn=K``;
``prms=[(ob,op),...]`` xor ``prmn=K``. Supplying both alternatives of a
pair is an error. Identifiers match ``[A-Za-z_][A-Za-z0-9_]*`` and must
be declared before use; duplicate declarations are errors.

Parsing recovers per line, so one run reports every error it can find.
A policy parses successfully only if the resulting state and constraints
validate cleanly; no partial states are ever returned.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .constraints import (
    Constraint,
    Dcd,
    Dsd,
    ItemRequirement,
    MinCount,
    NamedItems,
    Scd,
    ScdItems,
    Ssd,
    family_keyword,
    validate_constraint,
)
from .model import (
    Diagnostic,
    Permission,
    RbacState,
    RoleView,
    SessionRecord,
    _find_cycle,
)

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

#: keyword -> (kind tag, extra info); expanded into bodies by _build_constraint
CONSTRAINT_KEYWORDS = (
    "ssd", "ssdh", "dsd",
    "scd1", "scd2", "scd3", "scdh1", "scdh2", "scdh3",
    "scdcob1", "scdcop1", "scdcobop1", "scdcprms1",
    "scduob1", "scduop1", "scduobop1", "scduprms1",
    "scdhcob1", "scdhcop1", "scdhcobop1", "scdhcprms1",
    "scdhuob1", "scdhuop1", "scdhuobop1", "scdhuprms1",
    "dcds1", "dcds2", "dcds3", "dcdu1", "dcdu2", "dcdu3",
)

_ITEM_KIND = {"ob": "obs", "op": "ops", "obop": "obsops", "prms": "prms"}


@dataclass
class PolicyParseResult:
    state: RbacState | None
    constraints: list[Constraint]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.state is not None


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.diagnostics: list[Diagnostic] = []
        self.users: set[str] = set()
        self.roles: set[str] = set()
        self.objects: set[str] = set()
        self.operations: set[str] = set()
        self.ua: set[tuple[str, str]] = set()
        self.pa: set[tuple[Permission, str]] = set()
        self.rh_edges: set[tuple[str, str]] = set()
        self.edge_lines: dict[tuple[str, str], int] = {}
        self.session_owner: dict[str, str] = {}
        self.session_active: dict[str, set[str]] = {}
        self.activate_lines: list[tuple[str, str, int]] = []
        self.constraints: list[Constraint] = []
        self.constraint_lines: dict[str, int] = {}
        self._auto_id = 0

    def error(self, line: int, col: int, message: str, snippet: str = "") -> None:
        self.diagnostics.append(Diagnostic("error", message, line, col, snippet))

    # -- statement handlers --------------------------------------------------

    def _declare(self, pool: set[str], name: str, kind: str, line: int, col: int) -> None:
        if not IDENT.match(name):
            self.error(line, col, f"invalid identifier '{name}'")
        elif name in pool:
            self.error(line, col, f"duplicate {kind} declaration '{name}'")
        else:
            pool.add(name)

    def _ref(self, pool: set[str], name: str, kind: str, line: int, col: int) -> bool:
        if name not in pool:
            self.error(line, col, f"unknown {kind} '{name}'")
            return False
        return True

    def parse(self) -> PolicyParseResult:
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.split("#", 1)[0]
            toks = _tokens(line)
            if not toks:
                continue
            self._statement(toks, lineno, raw)
        self._finish_checks()
        if any(d.severity == "error" for d in self.diagnostics):
            return PolicyParseResult(None, [], self.diagnostics)
        state = RbacState(
            users=frozenset(self.users),
            roles=frozenset(self.roles),
            objects=frozenset(self.objects),
            operations=frozenset(self.operations),
            ua=frozenset(self.ua),
            pa=frozenset(self.pa),
            rh_edges=frozenset(self.rh_edges),
            sessions={
                sid: SessionRecord(self.session_owner[sid], frozenset(self.session_active[sid]))
                for sid in self.session_owner
            },
        )
        diags = []
        for c in self.constraints:
            for d in validate_constraint(c, state):
                line = self.constraint_lines.get(c.id, 0)
                diags.append(Diagnostic("error", d.message, line, 1))
        if diags:
            return PolicyParseResult(None, [], self.diagnostics + diags)
        return PolicyParseResult(state, self.constraints, self.diagnostics)

    def _statement(self, toks: list[tuple[str, int]], lineno: int, raw: str) -> None:
        (head, hcol), args = toks[0], toks[1:]

        def arity(n: int) -> bool:
            if len(args) != n:
                self.error(
                    lineno, hcol,
                    f"'{head}' takes {n} argument{'s' if n != 1 else ''}, got {len(args)}",
                    raw.strip(),
                )
                return False
            return True

        if head == "user":
            if arity(1):
                self._declare(self.users, args[0][0], "user", lineno, args[0][1])
        elif head == "role":
            if arity(1):
                self._declare(self.roles, args[0][0], "role", lineno, args[0][1])
        elif head == "object":
            if arity(1):
                self._declare(self.objects, args[0][0], "object", lineno, args[0][1])
        elif head == "op":
            if arity(1):
                self._declare(self.operations, args[0][0], "operation", lineno, args[0][1])
        elif head == "perm":
            if arity(3):
                (r, rc), (op, oc), (ob, bc) = args
                if (
                    self._ref(self.roles, r, "role", lineno, rc)
                    & self._ref(self.operations, op, "operation", lineno, oc)
                    & self._ref(self.objects, ob, "object", lineno, bc)
                ):
                    self.pa.add((Permission(op, ob), r))
        elif head == "assign":
            if arity(2):
                (u, uc), (r, rc) = args
                if self._ref(self.users, u, "user", lineno, uc) & self._ref(
                    self.roles, r, "role", lineno, rc
                ):
                    self.ua.add((u, r))
        elif head == "inherit":
            if arity(2):
                (senior, sc), (junior, jc) = args
                if self._ref(self.roles, senior, "role", lineno, sc) & self._ref(
                    self.roles, junior, "role", lineno, jc
                ):
                    self.rh_edges.add((senior, junior))
                    self.edge_lines[(senior, junior)] = lineno
        elif head == "session":
            if arity(2):
                (sid, sc), (u, uc) = args
                if sid in self.session_owner:
                    self.error(lineno, sc, f"duplicate session declaration '{sid}'")
                elif IDENT.match(sid) is None:
                    self.error(lineno, sc, f"invalid identifier '{sid}'")
                elif self._ref(self.users, u, "user", lineno, uc):
                    self.session_owner[sid] = u
                    self.session_active[sid] = set()
        elif head == "activate":
            if arity(2):
                (sid, sc), (r, rc) = args
                if sid not in self.session_owner:
                    self.error(lineno, sc, f"unknown session '{sid}'")
                elif self._ref(self.roles, r, "role", lineno, rc):
                    self.session_active[sid].add(r)
                    self.activate_lines.append((sid, r, lineno))
        elif head == "constraint":
            self._constraint(args, lineno, hcol, raw)
        else:
            self.error(lineno, hcol, f"unknown statement '{head}'", raw.strip())

    # -- constraint statements -----------------------------------------------

    def _constraint(self, args: list[tuple[str, int]], lineno: int, hcol: int, raw: str) -> None:
        if not args:
            self.error(lineno, hcol, "constraint statement needs a kind keyword")
            return
        (keyword, kcol), rest = args[0], args[1:]
        if keyword not in CONSTRAINT_KEYWORDS:
            self.error(lineno, kcol, f"unknown constraint kind '{keyword}'")
            return
        kv: dict[str, tuple[str, int]] = {}
        ok = True
        for tok, col in rest:
            if "=" not in tok:
                self.error(lineno, col, f"expected key=value, got '{tok}'")
                ok = False
                continue
            key, value = tok.split("=", 1)
            if key in kv:
                self.error(lineno, col, f"duplicate argument '{key}'")
                ok = False
            else:
                kv[key] = (value, col)
        if not ok:
            return
        body = self._build_constraint(keyword, kv, lineno)
        if body is None:
            return
        if "id" in kv:
            cid = kv.pop("id")[0]
        else:
            self._auto_id += 1
            cid = f"c{self._auto_id}"
        if cid in self.constraint_lines:
            self.error(lineno, kcol, f"duplicate constraint id '{cid}'")
            return
        self.constraints.append(Constraint(cid, body))
        self.constraint_lines[cid] = lineno

    def _take(self, kv: dict, key: str, lineno: int) -> tuple[str, int] | None:
        if key not in kv:
            self.error(lineno, 1, f"missing required argument '{key}='")
            return None
        return kv.pop(key)

    def _id_list(self, value: str, lineno: int, col: int) -> list[str] | None:
        if not (value.startswith("[") and value.endswith("]")):
            self.error(lineno, col, f"expected a [a,b,...] list, got '{value}'")
            return None
        inner = value[1:-1]
        if not inner:
            return []
        items = inner.split(",")
        for item in items:
            if not IDENT.match(item):
                self.error(lineno, col, f"invalid identifier '{item}' in list")
                return None
        return items

    def _prm_list(self, value: str, lineno: int, col: int) -> list[Permission] | None:
        if not (value.startswith("[") and value.endswith("]")):
            self.error(lineno, col, f"expected a [(ob,op),...] list, got '{value}'")
            return None
        inner = value[1:-1]
        if not inner:
            return []
        out = []
        for m in re.finditer(r"\(([^()]*)\)", inner):
            parts = m.group(1).split(",")
            if len(parts) != 2 or not all(IDENT.match(p) for p in parts):
                self.error(lineno, col, f"malformed permission pair '({m.group(1)})'")
                return None
            ob, op = parts
            out.append(Permission(op, ob))
        if not re.fullmatch(r"(\([^()]*\))(,\([^()]*\))*", inner):
            self.error(lineno, col, f"malformed permission list '{value}'")
            return None
        return out

    def _nat(self, value: str, key: str, lineno: int, col: int) -> int | None:
        if not value.isdigit():
            self.error(lineno, col, f"'{key}' must be a natural number, got '{value}'")
            return None
        return int(value)

    def _item_req(
        self, kv: dict, set_key: str, count_key: str, lineno: int, parse_list
    ) -> tuple[ItemRequirement | None, bool]:
        """One side of a ``set || count`` alternative; both present is an error."""
        has_set, has_count = set_key in kv, count_key in kv
        if has_set and has_count:
            _, col = kv[count_key]
            self.error(
                lineno, col,
                f"'{set_key}' and '{count_key}' are alternatives; supply only one",
            )
            return None, False
        if has_set:
            value, col = kv.pop(set_key)
            items = parse_list(value, lineno, col)
            if items is None:
                return None, False
            if not items:
                self.error(lineno, col, f"'{set_key}' cannot be empty")
                return None, False
            return NamedItems(frozenset(items)), True
        if has_count:
            value, col = kv.pop(count_key)
            count = self._nat(value, count_key, lineno, col)
            if count is None:
                return None, False
            if count < 1:
                self.error(lineno, col, f"'{count_key}' cannot be zero")
                return None, False
            return MinCount(count), True
        self.error(lineno, 1, f"missing item requirement: '{set_key}=' or '{count_key}='")
        return None, False

    def _build_constraint(self, keyword: str, kv: dict, lineno: int):
        roles_tok = self._take(kv, "roles", lineno)
        n_tok = self._take(kv, "n", lineno)
        if roles_tok is None or n_tok is None:
            return None
        rs = self._id_list(roles_tok[0], lineno, roles_tok[1])
        n = self._nat(n_tok[0], "n", lineno, n_tok[1])
        if rs is None or n is None:
            return None
        rs = frozenset(rs)

        body = None
        if keyword in ("ssd", "ssdh"):
            view = RoleView.HIERARCHICAL if keyword == "ssdh" else RoleView.DIRECT
            body = Ssd(rs, n, view)
        elif keyword == "dsd":
            body = Dsd(rs, n)
        elif re.fullmatch(r"scdh?[123]", keyword):
            view = RoleView.HIERARCHICAL if "h" in keyword else RoleView.DIRECT
            body = Scd(int(keyword[-1]), rs, n, view)
        elif keyword.startswith("dcd"):
            scope = "session" if keyword[3] == "s" else "user"
            body = Dcd(scope, int(keyword[-1]), rs, n)
        else:
            m = re.fullmatch(r"scd(h?)([cu])(ob|op|obop|prms)1", keyword)
            assert m, keyword
            view = RoleView.HIERARCHICAL if m.group(1) else RoleView.DIRECT
            mode = "common" if m.group(2) == "c" else "union"
            kind = _ITEM_KIND[m.group(3)]
            ob_req = op_req = prm_req = None
            ok = True
            if kind in ("obs", "obsops"):
                ob_req, got = self._item_req(kv, "obs", "obn", lineno, self._id_list)
                ok &= got
            if kind in ("ops", "obsops"):
                op_req, got = self._item_req(kv, "ops", "opn", lineno, self._id_list)
                ok &= got
            if kind == "prms":
                prm_req, got = self._item_req(kv, "prms", "prmn", lineno, self._prm_list)
                ok &= got
            if not ok:
                return None
            body = ScdItems(mode, kind, rs, n, ob_req, op_req, prm_req, view)
        leftovers = {k: v for k, v in kv.items() if k != "id"}
        for key, (_, col) in sorted(leftovers.items()):
            self.error(lineno, col, f"unexpected argument '{key}' for '{keyword}'")
        if leftovers:
            return None
        return body

    # -- whole-file checks -----------------------------------------------------

    def _finish_checks(self) -> None:
        cycle = _find_cycle(frozenset(self.roles), frozenset(self.rh_edges))
        if cycle:
            edges_in_cycle = list(zip(cycle, cycle[1:]))
            line = max(self.edge_lines.get(e, 0) for e in edges_in_cycle)
            self.error(line, 1, "role hierarchy cycle: " + " > ".join(cycle))
        for sid, r, line in self.activate_lines:
            owner = self.session_owner[sid]
            if (owner, r) not in self.ua:
                self.error(
                    line, 1,
                    f"session '{sid}' activates role '{r}' not assigned to its owner '{owner}'",
                )


def parse_policy(text: str) -> PolicyParseResult:
    """Parse policy text into a validated state and constraint list."""
    return _Parser(text).parse()


def _req_args(set_key: str, count_key: str, req: ItemRequirement, render) -> str:
    if isinstance(req, NamedItems):
        return f"{set_key}=[{','.join(render(i) for i in sorted(req.items, key=str))}]"
    return f"{count_key}={req.count}"


def emit_policy(state: RbacState, constraints: list[Constraint]) -> str:
    """Canonical textual form; parsing it back reproduces the inputs."""
    lines: list[str] = []
    for kw, pool in (
        ("user", state.users),
        ("role", state.roles),
        ("object", state.objects),
        ("op", state.operations),
    ):
        lines += [f"{kw} {name}" for name in sorted(pool)]
    lines += [f"perm {r} {p.op} {p.ob}" for p, r in sorted(state.pa, key=lambda e: (e[1], e[0]))]
    lines += [f"assign {u} {r}" for u, r in sorted(state.ua)]
    lines += [f"inherit {s} {j}" for s, j in sorted(state.rh_edges)]
    for sid in sorted(state.sessions):
        rec = state.sessions[sid]
        lines.append(f"session {sid} {rec.owner}")
        lines += [f"activate {sid} {r}" for r in sorted(rec.active)]
    for c in sorted(constraints, key=lambda c: c.id):
        body = c.body
        parts = [
            "constraint",
            family_keyword(body),
            f"id={c.id}",
            f"roles=[{','.join(sorted(body.rs))}]",
            f"n={body.n}",
        ]
        if isinstance(body, ScdItems):
            if body.ob_req is not None:
                parts.append(_req_args("obs", "obn", body.ob_req, str))
            if body.op_req is not None:
                parts.append(_req_args("ops", "opn", body.op_req, str))
            if body.prm_req is not None:
                parts.append(
                    _req_args("prms", "prmn", body.prm_req, lambda p: f"({p.ob},{p.op})")
                )
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")
