"""Policy grammar, diagnostics, and canonical emission."""

import random

from dutycheck import (
    Dcd,
    MinCount,
    NamedItems,
    Scd,
    ScdItems,
    Ssd,
    emit_policy,
    parse_policy,
)

from _randgen import ALL_KEYWORDS, random_constraint, random_state

GOOD = """\
# comment line
user u1
user u2
role r1
role r2
object ob1
op op1
perm r1 op1 ob1
assign u1 r1
assign u1 r2
inherit r1 r2
session s1 u1
activate s1 r1
constraint ssd id=sep roles=[r1,r2] n=2
constraint scd1 roles=[r1,r2] n=1
constraint scdcprms1 id=need roles=[r1,r2] n=1 prms=[(ob1,op1)]
constraint scduobop1 id=cnt roles=[r1,r2] n=1 obn=1 opn=1
"""


class TestParse:
    def test_good_policy(self):
        res = parse_policy(GOOD)
        assert res.ok, [str(d) for d in res.diagnostics]
        assert res.state.users == {"u1", "u2"}
        assert ("u1", "r1") in res.state.ua
        assert res.state.sessions["s1"].active == {"r1"}
        ids = [c.id for c in res.constraints]
        assert ids == ["sep", "c1", "need", "cnt"]

    def test_auto_ids_count_up(self):
        res = parse_policy(
            "role r1\nrole r2\n"
            "constraint ssd roles=[r1,r2] n=2\n"
            "constraint dsd roles=[r1,r2] n=2\n"
        )
        assert [c.id for c in res.constraints] == ["c1", "c2"]

    def test_item_bodies(self):
        res = parse_policy(GOOD)
        bodies = {c.id: c.body for c in res.constraints}
        assert isinstance(bodies["sep"], Ssd)
        assert isinstance(bodies["need"], ScdItems) and bodies["need"].mode == "common"
        cnt = bodies["cnt"]
        assert cnt.kind == "obsops"
        assert cnt.ob_req == MinCount(1) and cnt.op_req == MinCount(1)

    def test_dcd_forms(self):
        res = parse_policy(
            "role r1\nrole r2\n"
            "constraint dcds2 roles=[r1,r2] n=1\n"
            "constraint dcdu3 roles=[r1,r2] n=1\n"
        )
        assert res.ok
        s, u = (c.body for c in res.constraints)
        assert isinstance(s, Dcd) and s.scope == "session" and s.type == 2
        assert u.scope == "user" and u.type == 3


def errors_of(text):
    res = parse_policy(text)
    assert not res.ok
    assert res.state is None and res.constraints == []
    return res.diagnostics


class TestDiagnostics:
    def test_undeclared_reference_with_position(self):
        (d,) = errors_of("role r1\nassign u9 r1\n")
        assert d.line == 2 and d.column == 8
        assert "u9" in d.message

    def test_declare_after_use_is_an_error(self):
        diags = errors_of("assign u1 r1\nuser u1\nrole r1\n")
        assert any(d.line == 1 for d in diags)

    def test_duplicate_declaration(self):
        (d,) = errors_of("user u1\nuser u1\n")
        assert d.line == 2 and "duplicate" in d.message

    def test_both_alternatives_rejected(self):
        diags = errors_of(
            "role r1\nrole r2\n"
            "constraint scdcob1 roles=[r1,r2] n=1 obs=[ob1] obn=2\n"
        )
        assert any("alternatives" in d.message for d in diags)

    def test_unknown_keyword(self):
        (d,) = errors_of("constraint sod roles=[r1] n=2\n")
        assert "sod" in d.message

    def test_bad_bounds_reported_on_constraint_line(self):
        diags = errors_of("role r1\nrole r2\nconstraint ssd roles=[r1,r2] n=5\n")
        assert any(d.line == 3 and "2 <= n" in d.message for d in diags)

    def test_activate_unassigned_role(self):
        diags = errors_of(
            "user u1\nrole r1\nsession s1 u1\nactivate s1 r1\n"
        )
        assert any(d.line == 4 and "not assigned" in d.message for d in diags)

    def test_hierarchy_cycle(self):
        diags = errors_of(
            "role a\nrole b\ninherit a b\ninherit b a\n"
        )
        assert any("cycle" in d.message for d in diags)

    def test_multiple_errors_in_one_run(self):
        diags = errors_of("user u1\nuser u1\nassign u9 r9\nbogus x\n")
        assert len(diags) >= 3

    def test_duplicate_constraint_id(self):
        diags = errors_of(
            "role r1\nrole r2\n"
            "constraint ssd id=x roles=[r1,r2] n=2\n"
            "constraint dsd id=x roles=[r1,r2] n=2\n"
        )
        assert any("duplicate constraint id" in d.message for d in diags)

    def test_malformed_permission_list(self):
        diags = errors_of(
            "role r1\nrole r2\nobject ob1\nop op1\n"
            "constraint scdcprms1 roles=[r1,r2] n=1 prms=[(ob1op1)]\n"
        )
        assert any("malformed" in d.message for d in diags)


class TestEmit:
    def test_round_trip_fixpoint(self):
        res = parse_policy(GOOD)
        text1 = emit_policy(res.state, res.constraints)
        res2 = parse_policy(text1)
        assert res2.ok
        assert res2.state == res.state
        assert sorted(res2.constraints, key=lambda c: c.id) == sorted(
            res.constraints, key=lambda c: c.id
        )
        assert emit_policy(res2.state, res2.constraints) == text1

    def test_random_round_trips(self):
        rng = random.Random(99)
        for i in range(40):
            state = random_state(rng)
            cs = [
                random_constraint(rng, state, rng.choice(ALL_KEYWORDS), f"k{j}")
                for j in range(3)
            ]
            text = emit_policy(state, cs)
            res = parse_policy(text)
            assert res.ok, [str(d) for d in res.diagnostics]
            assert res.state == state
            assert sorted(res.constraints, key=lambda c: c.id) == sorted(
                cs, key=lambda c: c.id
            )
            assert emit_policy(res.state, res.constraints) == text

    def test_emit_deterministic(self):
        res = parse_policy(GOOD)
        outs = {emit_policy(res.state, res.constraints) for _ in range(5)}
        assert len(outs) == 1
