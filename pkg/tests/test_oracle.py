"""Reference oracle and witness verification."""

import random

import pytest

from dutycheck import (
    CapacityError,
    Constraint,
    Dsd,
    NoHelperSet,
    NotEnoughRoles,
    Scd,
    Ssd,
    TooManyRoles,
    Witness,
    evaluate,
    make_state,
    oracle_eval,
    verify_witness,
)
from dutycheck.oracle import UsageError, set_partitions
from dutycheck.solver import PartitionWitness

from _randgen import ALL_KEYWORDS, random_constraint, random_state


def bell(n):
    row = [1]
    for _ in range(n - 1):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
    return row[-1]


class TestSetPartitions:
    def test_counts_match_bell_numbers(self):
        for k in range(1, 7):
            parts = list(set_partitions([f"e{i}" for i in range(k)]))
            assert len(parts) == bell(k)
            # each really is a partition
            for p in parts:
                assert sorted(x for b in p for x in b) == [f"e{i}" for i in range(k)]

    def test_empty(self):
        assert list(set_partitions([])) == [[]]


class TestOracleEval:
    def test_capacity_roles(self):
        s = make_state(users=["u1"], roles=[f"r{i}" for i in range(11)])
        c = Constraint("c", Ssd(frozenset(s.roles), 2))
        with pytest.raises(CapacityError):
            oracle_eval(s, c)

    def test_capacity_users(self):
        s = make_state(users=[f"u{i}" for i in range(11)], roles=["r1", "r2"])
        with pytest.raises(CapacityError):
            oracle_eval(s, Constraint("c", Ssd(frozenset({"r1", "r2"}), 2)))

    def test_smoke_agreement_with_engine(self):
        rng = random.Random(12345)
        for i in range(150):
            state = random_state(rng)
            kw = rng.choice(ALL_KEYWORDS)
            c = random_constraint(rng, state, kw, f"c{i}")
            assert evaluate(state, c).satisfied == oracle_eval(state, c).satisfied, (
                kw, state, c
            )


class TestVerifyWitness:
    def state(self):
        return make_state(
            users=["u1", "u2"],
            roles=["r1", "r2"],
            ua=[("u1", "r1"), ("u1", "r2"), ("u2", "r1")],
        )

    def test_separation_witness_accepted(self):
        s = self.state()
        c = Constraint("c", Ssd(frozenset({"r1", "r2"}), 2))
        (w,) = evaluate(s, c).witnesses
        assert verify_witness(s, c, w)

    def test_fabricated_separation_witness_rejected(self):
        s = self.state()
        c = Constraint("c", Ssd(frozenset({"r1", "r2"}), 2))
        fake = Witness("u2", frozenset({"r1", "r2"}), TooManyRoles(limit=2))
        assert not verify_witness(s, c, fake)

    def test_kind_mismatch_raises(self):
        s = self.state()
        c = Constraint("c", Scd(1, frozenset({"r1", "r2"}), 1))
        w = Witness("u2", frozenset({"r1"}), TooManyRoles(limit=2))
        with pytest.raises(UsageError):
            verify_witness(s, c, w)

    def test_type1_witness(self):
        s = self.state()
        c = Constraint("c", Scd(1, frozenset({"r1", "r2"}), 1))
        (w,) = evaluate(s, c).witnesses
        assert verify_witness(s, c, w)
        fake = Witness("u1", frozenset({"r1", "r2"}), NotEnoughRoles(threshold=1))
        assert not verify_witness(s, c, fake)

    def test_no_helper_witness(self):
        s = make_state(users=["u1", "u2"], roles=["r1", "r2"],
                       ua=[("u1", "r1"), ("u2", "r1")])
        c = Constraint("c", Scd(2, frozenset({"r1", "r2"}), 1))
        v = evaluate(s, c)
        assert all(verify_witness(s, c, w) for w in v.witnesses)
        # a deficient entity that does have a helper is rejected
        s2 = make_state(users=["u1", "u2"], roles=["r1", "r2"],
                        ua=[("u1", "r1"), ("u2", "r2")])
        fake = Witness("u1", frozenset({"r1"}), NoHelperSet(threshold=1))
        assert not verify_witness(s2, c, fake)

    def test_partition_witness_and_fabrication(self):
        s = make_state(
            users=["u1", "u2", "u3"],
            roles=["r1", "r2"],
            ua=[("u1", "r1"), ("u2", "r2"), ("u3", "r1")],
        )
        c = Constraint("c", Scd(3, frozenset({"r1", "r2"}), 1))
        v = evaluate(s, c)
        assert not v.satisfied  # u3 left over
        # engine says unsatisfiable; oracle confirms via its own enumeration
        assert verify_witness(s, c, v.witnesses[0])
        # a fabricated partition with overlap is rejected
        bad = PartitionWitness(
            groups=(frozenset({"u1", "u2"}), frozenset({"u2", "u3"})), zero_groups=()
        )
        assert not verify_witness(s, c, bad)
        # a fabricated partition with a non-minimal group is rejected
        bad2 = PartitionWitness(groups=(frozenset({"u1", "u2", "u3"}),), zero_groups=())
        assert not verify_witness(s, c, bad2)

    def test_partition_witness_accepts_solver_output(self):
        s = make_state(
            users=["u1", "u2", "u3", "u4"],
            roles=["r1", "r2"],
            ua=[("u1", "r1"), ("u2", "r2"), ("u3", "r1"), ("u4", "r2")],
        )
        c = Constraint("c", Scd(3, frozenset({"r1", "r2"}), 1))
        v = evaluate(s, c)
        assert v.satisfied
        assert verify_witness(s, c, v.witnesses[0])

    def test_dsd_witness_against_wrong_family(self):
        s = self.state()
        c = Constraint("c", Dsd(frozenset({"r1", "r2"}), 2))
        w = Witness("u1", frozenset({"r1"}), NotEnoughRoles(threshold=1))
        with pytest.raises(UsageError):
            verify_witness(s, c, w)
