"""Oracle families, the free-room closure, and the sampled axiom checker."""

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairrent.oracles import (
    DecisionRule,
    OracleContractError,
    InteractiveOracle,
    check_axioms,
    decision_list_oracle,
    exchange_quasilinear_oracle,
    free_room_closure,
    hungry_cake_oracle,
    quasilinear_oracle,
    sample_simplex_points,
)
from fairrent.simplex import CubePoint, PriceVector

AB = ("A", "B")
ABC = ("A", "B", "C")


def pv(rooms, *fracs):
    return PriceVector.from_fractions(rooms, fracs)


class TestQuasilinear:
    def test_clear_favorite(self):
        o = quasilinear_oracle("i", AB, {"A": "9/10", "B": "1/10"}, {"A": 1, "B": 1})
        assert o.demand(pv(AB, "1/2", "1/2")) == {"A"}

    def test_symmetric_tie_is_full_set(self):
        o = quasilinear_oracle("i", ABC, {r: "1/2" for r in ABC}, {r: 1 for r in ABC})
        assert o.demand(PriceVector.uniform(ABC)) == set(ABC)

    def test_per_unit_cost_tie(self):
        o = quasilinear_oracle("i", AB, {"A": "3/5", "B": "2/5"}, {"A": 2, "B": 1})
        # utilities (0.6 - 0.8/2, 0.4 - 0.2) tie at 0.2
        assert o.demand(pv(AB, "4/5", "1/5")) == {"A", "B"}

    @given(st.integers(1, 9), st.integers(0, 20), st.integers(1, 3), st.integers(1, 3))
    def test_argmax_invariant_under_common_scaling(self, scale, num, ca, cb):
        # scaling all values and all per-unit costs by one positive rational
        # leaves the argmax set unchanged: check the oracle against directly
        # scaled utilities
        p = PriceVector(AB, (num, 20 - num), 20)
        vals = {"A": F(7, 10), "B": F(2, 5)}
        caps = {"A": ca, "B": cb}
        o = quasilinear_oracle("i", AB, vals, caps)
        scaled_utilities = {
            r: scale * vals[r] - scale * p.value(r) / caps[r] for r in AB
        }
        best = max(scaled_utilities.values())
        assert o.demand(p) == {r for r, u in scaled_utilities.items() if u == best}


class TestFreeRoomClosure:
    def test_adds_free_rooms(self):
        inner = quasilinear_oracle("i", AB, {"A": 1, "B": 0}, {"A": 1, "B": 1})
        o = free_room_closure(inner)
        assert o.demand(pv(AB, 1, 0)) == {"A", "B"}

    def test_full_support_unchanged(self):
        inner = quasilinear_oracle("i", AB, {"A": "9/10", "B": "1/10"}, {"A": 1, "B": 1})
        o = free_room_closure(inner)
        p = pv(AB, "1/2", "1/2")
        assert o.demand(p) == inner.demand(p) == {"A"}

    def test_negative_value_room_still_free(self):
        inner = quasilinear_oracle("i", AB, {"A": 1, "B": "-1/2"}, {"A": 1, "B": 1})
        assert inner.demand(pv(AB, 1, 0)) == {"A"}
        assert free_room_closure(inner).demand(pv(AB, 1, 0)) == {"A", "B"}

    @given(st.integers(0, 24))
    def test_free_rooms_always_included(self, num):
        p = PriceVector(ABC, (num, 24 - num, 0), 24)
        inner = quasilinear_oracle(
            "i", ABC, {"A": "1/2", "B": "1/3", "C": "1/4"}, {r: 1 for r in ABC}
        )
        assert p.free_rooms() <= free_room_closure(inner).demand(p)


class TestHungryCake:
    def test_only_supported_piece(self):
        o = hungry_cake_oracle("i", AB, {"A": 1, "B": 1})
        assert o.demand(pv(AB, 1, 0)) == {"A"}

    def test_symmetry_tie(self):
        o = hungry_cake_oracle("i", AB, {"A": 1, "B": 1})
        assert o.demand(pv(AB, "1/2", "1/2")) == {"A", "B"}

    def test_exact_rational_tie(self):
        o = hungry_cake_oracle("i", AB, {"A": 2, "B": 1})
        assert o.demand(pv(AB, "1/3", "2/3")) == {"A", "B"}

    @given(st.integers(0, 30), st.integers(0, 30))
    def test_never_demands_empty_piece(self, a, b):
        if a + b == 0:
            a = 1
        p = PriceVector(ABC, (a, b, 30 - min(a + b, 30) if a + b <= 30 else 0), a + b + (30 - min(a + b, 30) if a + b <= 30 else 0))
        o = hungry_cake_oracle("i", ABC, {"A": 3, "B": 2, "C": 1})
        assert not (o.demand(p) & p.free_rooms())
        assert o.demand(p) <= p.support()


class TestDecisionList:
    def bargain(self):
        # bargain hunter: normally wants C, but once A's price pulls more
        # than 1/8 ahead of B's, B looks like a deal
        rule = DecisionRule({"A": 1, "B": -1}, ">", F(1, 8), frozenset({"B"}))
        return decision_list_oracle("i", ABC, [rule], {"C"})

    def test_narrative_switch(self):
        o = self.bargain()
        assert o.demand(pv(ABC, "3/10", "3/10", "4/10")) == {"C"}
        # A's price rises while B's stays fixed: the demand moves to B even
        # though B's own price never changed
        assert o.demand(pv(ABC, "1/2", "3/10", "1/5")) == {"B"}

    def test_four_room_narrative_other_prices_fixed(self):
        rooms = tuple("ABCD")
        rule = DecisionRule({"A": 1, "B": -1}, ">", F(1, 8), frozenset({"B"}))
        o = decision_list_oracle("i", rooms, [rule], {"C"})
        before = pv(rooms, "1/4", "1/4", "3/10", "1/5")
        after = pv(rooms, "2/5", "1/4", "3/10", "1/20")
        assert o.demand(before) == {"C"}
        assert o.demand(after) == {"B"}
        assert before.value("B") == after.value("B")
        assert before.value("C") == after.value("C")

    def test_constant_list(self):
        o = decision_list_oracle("i", AB, [], {"A"})
        for p in sample_simplex_points(AB, 20, 3):
            assert o.demand(p) == {"A"}

    def test_boundary_returns_union(self):
        rule = DecisionRule({"A": 1, "B": -1}, ">", 0, frozenset({"A"}))
        o = decision_list_oracle("i", AB, [rule], {"B"})
        assert o.demand(pv(AB, "1/2", "1/2")) == {"A", "B"}
        assert o.demand(pv(AB, "3/4", "1/4")) == {"A"}
        assert o.demand(pv(AB, "1/4", "3/4")) == {"B"}

    def test_malformed_rules_rejected(self):
        with pytest.raises(ValueError):
            DecisionRule({"A": 1}, ">=", 0, frozenset({"A"}))
        with pytest.raises(ValueError):
            DecisionRule({"A": 1}, ">", 0, frozenset())
        with pytest.raises(ValueError):
            decision_list_oracle("i", AB, [], {"Z"})


class TestInteractive:
    def test_cache_prevents_repeat_questions(self):
        asked = []

        def ask(p):
            asked.append(p)
            return {"A"}

        o = InteractiveOracle("i", AB, ask)
        p = pv(AB, "1/2", "1/2")
        assert o.demand(p) == {"A"}
        assert o.demand(PriceVector(AB, (2, 2), 4)) == {"A"}  # same point, new denominators
        assert len(asked) == 1
        assert not o.concurrent_safe

    def test_empty_answer_is_contract_violation(self):
        o = InteractiveOracle("i", AB, lambda p: set())
        with pytest.raises(OracleContractError):
            o.demand(pv(AB, 1, 0))


class TestAxiomChecker:
    def test_closure_passes_rental_checks(self):
        inner = quasilinear_oracle(
            "i", ABC, {"A": "9/10", "B": "1/2", "C": "1/10"}, {r: 1 for r in ABC}
        )
        report = check_axioms(free_room_closure(inner), "rental", samples=300, seed=7)
        assert report.passed
        assert report.check("demands-all-free-rooms").verdict == "pass"
        assert report.check("closed-demand-graph").verdict == "not-checkable"

    def test_raw_quasilinear_fails_free_room_check(self):
        # with three rooms and unequal values there are boundary prices
        # where the free room is not demanded
        inner = quasilinear_oracle(
            "i", ABC, {"A": "9/10", "B": "1/2", "C": "1/10"}, {r: 1 for r in ABC}
        )
        report = check_axioms(inner, "rental", samples=300, seed=7)
        bad = report.check("demands-all-free-rooms")
        assert bad.verdict == "fail"
        cx = bad.counterexample
        assert cx["price"].free_rooms() - inner.demand(cx["price"])

    def test_hungry_oracle_passes_cake_checks(self):
        o = hungry_cake_oracle("i", ABC, {"A": 3, "B": 2, "C": 1})
        report = check_axioms(o, "cake", samples=300, seed=11)
        assert report.passed
        assert report.check("demands-only-supported-rooms").verdict == "pass"

    def test_exchange_oracle_passes(self):
        o = exchange_quasilinear_oracle("i", AB, {"A": "2/3", "B": "1/3"})
        report = check_axioms(o, "exchange", samples=300, seed=13)
        assert report.passed
        # at the all-ones corner nothing is demanded, and that is allowed
        assert o.demand(CubePoint.of(AB, [1, 1])) == set()

    def test_fail_verdict_carries_counterexample(self):
        o = hungry_cake_oracle("i", AB, {"A": 1, "B": 1})
        report = check_axioms(o, "rental", samples=200, seed=3)
        bad = report.check("demands-all-free-rooms")
        assert bad.verdict == "fail" and bad.counterexample is not None

    def test_wrong_domain_rejected(self):
        o = exchange_quasilinear_oracle("i", AB, {"A": 1, "B": 0})
        with pytest.raises(ValueError):
            check_axioms(o, "rental")
