"""Demand graphs, Hall-with-capacities, and flow certificates."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_force_feasible, hall_holds
from fairrent.matching import (
    Assignment,
    DemandGraph,
    build_demand_graph,
    deficiency,
    feasible_assignment,
    has_sufficient_demand,
    neighborhood_size,
    union_demand_graph,
)
from fairrent.oracles import OracleContractError, free_room_closure, quasilinear_oracle
from fairrent.simplex import PriceVector

AB = ("A", "B")


def graph(rooms, caps, demands):
    agents = tuple(demands)
    masks = tuple(
        sum(1 << rooms.index(r) for r in demands[a]) for a in agents
    )
    return DemandGraph(tuple(rooms), tuple(caps), agents, masks)


class TestBuildGraph:
    def test_edges_from_oracles(self):
        caps = {"A": 1, "B": 1}
        oracles = [
            quasilinear_oracle("1", AB, {"A": "9/10", "B": "1/10"}, caps),
            quasilinear_oracle("2", AB, {"A": "1/5", "B": "4/5"}, caps),
        ]
        g = build_demand_graph(oracles, PriceVector(AB, (1, 1), 2), caps)
        assert g.edges() == [("1", "A"), ("2", "B")]

    def test_closure_connects_everyone_to_free_room(self):
        caps = {"A": 1, "B": 1}
        oracles = [
            free_room_closure(quasilinear_oracle(str(i), AB, {"A": 1, "B": 0}, caps))
            for i in range(2)
        ]
        g = build_demand_graph(oracles, PriceVector(AB, (2, 0), 2), caps)
        assert all(("%d" % i, "B") in g.edges() for i in range(2))

    def test_empty_demand_is_contract_violation(self):
        caps = {"A": 1}

        class Empty(quasilinear_oracle("x", ("A",), {"A": 1}, caps).__class__):
            def demand_mask(self, p):
                return 0

        bad = Empty("x", ("A",), {"A": 1}, caps)
        with pytest.raises(OracleContractError) as err:
            build_demand_graph([bad], PriceVector(("A",), (1,), 1), caps)
        assert "x" in str(err.value)

    def test_union_graph_is_edge_union(self):
        g1 = graph(AB, (1, 1), {"1": {"A"}, "2": {"A"}})
        g2 = graph(AB, (1, 1), {"1": {"B"}, "2": {"A"}})
        u = union_demand_graph([g1, g2])
        assert u.demands() == {"1": {"A", "B"}, "2": {"A"}}


class TestSubsetCounts:
    def test_neighborhood_size(self):
        g = graph(AB, (1, 1), {"1": {"A"}, "2": {"B"}})
        assert neighborhood_size(g, {"A"}) == 1
        assert neighborhood_size(g, ()) == 0
        full = graph(AB, (1, 1), {"1": {"A", "B"}, "2": {"A", "B"}})
        assert neighborhood_size(full, {"A"}) == 2
        assert neighborhood_size(full, {"B"}) == 2

    def test_sufficient_demand(self):
        g = graph(("A",), (2,), {"1": {"A"}, "2": {"A"}, "3": {"A"}})
        assert has_sufficient_demand(g, {"A"})  # 3 >= 2
        assert has_sufficient_demand(g, ())  # 0 >= 0
        g2 = graph(AB, (1, 1), {"1": {"A"}, "2": {"A"}})
        assert not has_sufficient_demand(g2, {"B"})


class TestFlow:
    def test_unique_perfect_matching(self):
        g = graph(AB, (1, 1), {"1": {"A"}, "2": {"B"}})
        w = feasible_assignment(g)
        assert w.feasible and w.assignment.mapping == {"1": "A", "2": "B"}

    def test_violating_set_and_deficiency(self):
        g = graph(AB, (1, 1), {"1": {"A"}, "2": {"A"}})
        w = feasible_assignment(g)
        assert not w.feasible
        assert w.flow == 1
        assert w.violating_rooms == {"B"}
        assert w.deficiency == 1
        assert deficiency(g) == 1

    def test_capacity_two_assignment(self):
        g = graph(AB, (2, 1), {"1": {"A"}, "2": {"A"}, "3": {"B"}})
        w = feasible_assignment(g)
        assert w.assignment.mapping == {"1": "A", "2": "A", "3": "B"}

    def test_empty_graph_deficiency(self):
        g = DemandGraph(("A", "B", "C"), (1, 1, 1), ("1", "2", "3"), (0, 0, 0))
        assert deficiency(g) == 3
        w = feasible_assignment(g)
        assert w.violating_rooms == {"A", "B", "C"} and w.deficiency == 3

    def test_capacity_mismatch_rejected(self):
        g = graph(AB, (1, 1), {"1": {"A"}})
        with pytest.raises(ValueError):
            feasible_assignment(g)

    def test_assignment_invariants_enforced(self):
        with pytest.raises(ValueError):
            Assignment({"1": "A", "2": "A"}, {"A": 1, "B": 1})

    def test_full_enumeration_two_rooms(self):
        # every edge set on 4 agents x 2 rooms, all capacity splits
        rooms = AB
        agents = tuple("1234")
        for ca in (1, 2, 3):
            caps = (ca, 4 - ca)
            capmap = dict(zip(rooms, caps))
            for code in range(4 ** len(agents)):
                masks = tuple((code >> (2 * i)) & 3 for i in range(4))
                g = DemandGraph(rooms, caps, agents, masks)
                expected = brute_force_feasible(g.demands(), capmap)
                w = feasible_assignment(g)
                assert w.feasible == (expected is not None)
                if w.feasible:
                    occupancy = {r: 0 for r in rooms}
                    for a in agents:
                        room = w.assignment.room_of(a)
                        assert room in g.demands()[a]
                        occupancy[room] += 1
                    assert occupancy == capmap
                else:
                    rooms_sub = w.violating_rooms
                    short = sum(capmap[r] for r in rooms_sub) - neighborhood_size(
                        g, rooms_sub
                    )
                    assert short == w.deficiency > 0


@st.composite
def random_graphs(draw):
    num_rooms = draw(st.integers(1, 3))
    rooms = tuple("ABC"[:num_rooms])
    n = draw(st.integers(num_rooms, 6))
    cuts = sorted(
        draw(
            st.lists(
                st.integers(1, n - 1), min_size=num_rooms - 1, max_size=num_rooms - 1
            )
        )
    ) if num_rooms > 1 else []
    bounds = [0] + cuts + [n]
    caps = tuple(bounds[i + 1] - bounds[i] for i in range(num_rooms))
    if min(caps) < 1:
        caps = tuple(1 for _ in rooms[:-1]) + (n - num_rooms + 1,)
    masks = tuple(
        draw(st.integers(0, (1 << num_rooms) - 1)) for _ in range(n)
    )
    return DemandGraph(rooms, caps, tuple(str(i) for i in range(n)), masks)


class TestEquivalences:
    @given(random_graphs())
    @settings(max_examples=400, deadline=None)
    def test_flow_matches_brute_force(self, g):
        capmap = dict(zip(g.rooms, g.capacities))
        expected = brute_force_feasible(g.demands(), capmap)
        w = feasible_assignment(g)
        assert w.feasible == (expected is not None)

    @given(random_graphs())
    @settings(max_examples=400, deadline=None)
    def test_flow_matches_hall(self, g):
        capmap = dict(zip(g.rooms, g.capacities))
        assert (deficiency(g) == 0) == hall_holds(g.demands(), capmap)

    @given(random_graphs(), st.data())
    @settings(max_examples=200, deadline=None)
    def test_deficiency_monotone_under_edge_addition(self, g, data):
        extra = tuple(
            m | data.draw(st.integers(0, (1 << len(g.rooms)) - 1))
            for m in g.demand_masks
        )
        g2 = DemandGraph(g.rooms, g.capacities, g.agents, extra)
        assert deficiency(g2) <= deficiency(g)
        # grid-level monotonicity of subset demand counts
        for subset in ({"A"}, set(g.rooms)):
            if subset <= set(g.rooms):
                assert neighborhood_size(g2, subset) >= neighborhood_size(g, subset)

    def test_determinism(self):
        rng = random.Random(5)
        for _ in range(50):
            n = rng.randrange(2, 7)
            caps = (1, n - 1)
            masks = tuple(rng.randrange(0, 4) for _ in range(n))
            g = DemandGraph(AB, caps, tuple(str(i) for i in range(n)), masks)
            runs = {repr(feasible_assignment(g)) for _ in range(3)}
            assert len(runs) == 1
