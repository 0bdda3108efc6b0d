"""Trace parsing and transactional replay."""

import pytest

from dutycheck import (
    Constraint,
    Dsd,
    Scd,
    Ssd,
    make_state,
    parse_trace,
    replay,
)
from dutycheck.trace import TraceEvent, TransitionError, apply_event

BASE = make_state(
    users=["u1", "u2"],
    roles=["r1", "r2", "r3"],
    objects=["ob1"],
    operations=["op1"],
)


class TestApplyEvent:
    def test_assign_and_deassign(self):
        s = apply_event(BASE, TraceEvent("assign", ("u1", "r1")))
        assert ("u1", "r1") in s.ua
        s = apply_event(s, TraceEvent("deassign", ("u1", "r1")))
        assert ("u1", "r1") not in s.ua

    def test_base_is_untouched(self):
        apply_event(BASE, TraceEvent("assign", ("u1", "r1")))
        assert not BASE.ua

    def test_deassign_blocked_while_active(self):
        s = apply_event(BASE, TraceEvent("assign", ("u1", "r1")))
        s = apply_event(s, TraceEvent("session", ("s1", "u1")))
        s = apply_event(s, TraceEvent("activate", ("s1", "r1")))
        with pytest.raises(TransitionError):
            apply_event(s, TraceEvent("deassign", ("u1", "r1")))
        s = apply_event(s, TraceEvent("deactivate", ("s1", "r1")))
        apply_event(s, TraceEvent("deassign", ("u1", "r1")))

    def test_activate_requires_assignment(self):
        s = apply_event(BASE, TraceEvent("session", ("s1", "u1")))
        with pytest.raises(TransitionError):
            apply_event(s, TraceEvent("activate", ("s1", "r1")))

    def test_inherit_cycle_blocked(self):
        s = apply_event(BASE, TraceEvent("inherit", ("r1", "r2")))
        with pytest.raises(TransitionError):
            apply_event(s, TraceEvent("inherit", ("r2", "r1")))

    def test_grant_revoke(self):
        s = apply_event(BASE, TraceEvent("grant", ("r1", "op1", "ob1")))
        assert len(s.pa) == 1
        s = apply_event(s, TraceEvent("revoke", ("r1", "op1", "ob1")))
        assert not s.pa
        with pytest.raises(TransitionError):
            apply_event(s, TraceEvent("revoke", ("r1", "op1", "ob1")))

    def test_endsession(self):
        s = apply_event(BASE, TraceEvent("session", ("s1", "u1")))
        s = apply_event(s, TraceEvent("endsession", ("s1",)))
        assert not s.sessions


class TestParseTrace:
    def test_block_form(self):
        res = parse_trace(
            "txn setup {\n  assign u1 r1\n  session s1 u1\n  activate s1 r1\n}\n",
            BASE,
        )
        assert res.ok
        (t,) = res.transactions
        assert t.label == "setup" and len(t.events) == 3

    def test_inline_form(self):
        res = parse_trace("txn quick { assign u1 r1; assign u2 r2 }\n", BASE)
        assert res.ok
        assert len(res.transactions[0].events) == 2

    def test_unknown_reference_reported_with_line(self):
        res = parse_trace("txn t {\n  assign ghost r1\n}\n", BASE)
        assert not res.ok
        assert res.diagnostics[0].line == 2

    def test_invariant_breach_at_parse_time(self):
        text = "txn t {\n  session s1 u1\n  activate s1 r1\n}\n"
        res = parse_trace(text, BASE)
        assert not res.ok
        assert "not assigned" in res.diagnostics[0].message

    def test_unclosed_transaction(self):
        res = parse_trace("txn t {\n  assign u1 r1\n", BASE)
        assert not res.ok

    def test_duplicate_label(self):
        res = parse_trace("txn t { assign u1 r1 }\ntxn t { assign u2 r2 }\n", BASE)
        assert not res.ok

    def test_event_outside_transaction(self):
        res = parse_trace("assign u1 r1\n", BASE)
        assert not res.ok

    def test_later_transactions_see_earlier_state(self):
        text = "txn a { assign u1 r1 }\ntxn b { session s1 u1; activate s1 r1 }\n"
        res = parse_trace(text, BASE)
        assert res.ok


class TestReplay:
    def constraints(self):
        return [Constraint("sep", Ssd(frozenset({"r1", "r2"}), 2))]

    def txns(self, text):
        res = parse_trace(text, BASE)
        assert res.ok, [str(d) for d in res.diagnostics]
        return res.transactions

    def test_enforce_rolls_back(self):
        txns = self.txns("txn ok { assign u1 r1 }\ntxn bad { assign u1 r2 }\n")
        final, results = replay(BASE, self.constraints(), txns, mode="enforce")
        assert [r.applied for r in results] == [True, False]
        assert results[1].violated == ["sep"]
        assert ("u1", "r2") not in final.ua

    def test_audit_applies_and_logs(self):
        txns = self.txns("txn ok { assign u1 r1 }\ntxn bad { assign u1 r2 }\n")
        final, results = replay(BASE, self.constraints(), txns, mode="audit")
        assert [r.applied for r in results] == [True, True]
        assert results[1].violated == ["sep"]
        assert ("u1", "r2") in final.ua

    def test_checks_only_at_commit(self):
        # inside one transaction the state may pass through a violation
        cs = [Constraint("dep", Scd(1, frozenset({"r1", "r2"}), 1))]
        txns = self.txns("txn both { assign u1 r1; assign u1 r2 }\n")
        _, results = replay(BASE, cs, txns, mode="enforce")
        assert results[0].applied and not results[0].violated

    def test_rollback_can_invalidate_later_events(self):
        # txn b relies on the assignment txn a made; after a rolls back,
        # b breaks an invariant and is rejected in both modes
        cs = [Constraint("sep", Ssd(frozenset({"r1", "r3"}), 2))]
        text = (
            "txn a { assign u1 r1; assign u1 r3 }\n"
            "txn b { session s1 u1; activate s1 r1 }\n"
        )
        txns = self.txns(text)
        for mode in ("enforce",):
            final, results = replay(BASE, cs, txns, mode=mode)
            assert not results[0].applied
            assert not results[1].applied and results[1].error is not None
            assert not final.sessions

    def test_dynamic_constraint_on_sessions(self):
        cs = [Constraint("dyn", Dsd(frozenset({"r1", "r2"}), 2))]
        text = (
            "txn setup { assign u1 r1; assign u1 r2; session s1 u1 }\n"
            "txn first { activate s1 r1 }\n"
            "txn second { activate s1 r2 }\n"
        )
        txns = self.txns(text)
        final, results = replay(BASE, cs, txns, mode="enforce")
        assert [r.applied for r in results] == [True, True, False]
        assert final.sessions["s1"].active == {"r1"}
