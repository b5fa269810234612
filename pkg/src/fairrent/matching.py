"""Bipartite demand graphs and capacity-respecting assignment.

A demand graph joins agents to the rooms they demand at a price.  The
room-capacity version of Hall's condition — every room subset's demand
neighborhood covers its total capacity — is decided by augmenting-path
max flow, which either extracts a full assignment or certifies failure
with a violating room subset read off the residual cut.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from fairrent.oracles import OracleContractError, PreferenceOracle, mask_to_rooms
from fairrent.simplex import GridCell, PriceVector, _check_rooms


@dataclass(frozen=True)
class DemandGraph:
    """Agents-to-rooms demand edges recorded with their provenance.

    demand_masks[i] is a bitmask over `rooms` of the rooms agent i
    demands; `price` (or `cell`, for a union graph over a cell's
    vertices) records where the demands were queried.
    """

    rooms: tuple[str, ...]
    capacities: tuple[int, ...]
    agents: tuple[str, ...]
    demand_masks: tuple[int, ...]
    price: Optional[PriceVector] = None
    cell: Optional[GridCell] = None

    def __post_init__(self):
        object.__setattr__(self, "rooms", _check_rooms(self.rooms))
        if len(self.capacities) != len(self.rooms):
            raise ValueError("one capacity per room required")
        if any(c < 1 for c in self.capacities):
            raise ValueError("capacities must be positive integers")
        if len(set(self.agents)) != len(self.agents):
            raise ValueError("agent names must be unique")
        if len(self.demand_masks) != len(self.agents):
            raise ValueError("one demand mask per agent required")
        full = (1 << len(self.rooms)) - 1
        if any(m < 0 or m > full for m in self.demand_masks):
            raise ValueError("demand mask out of range")

    @property
    def n(self) -> int:
        return len(self.agents)

    def demands(self) -> dict[str, frozenset[str]]:
        return {
            a: mask_to_rooms(self.rooms, m)
            for a, m in zip(self.agents, self.demand_masks)
        }

    def edges(self) -> list[tuple[str, str]]:
        out = []
        for a, m in zip(self.agents, self.demand_masks):
            for i, r in enumerate(self.rooms):
                if (m >> i) & 1:
                    out.append((a, r))
        return out

    def capacity_of(self, room: str) -> int:
        return self.capacities[self.rooms.index(room)]


def build_demand_graph(
    oracles: Sequence[PreferenceOracle],
    p: PriceVector,
    capacities: Mapping[str, int],
) -> DemandGraph:
    """Query every oracle once at p.  An empty answer violates the
    nonempty-demand contract and is reported with agent and price."""
    rooms = tuple(capacities)
    masks = []
    for o in oracles:
        if o.rooms != rooms:
            raise ValueError(f"oracle {o.agent!r} is over rooms {o.rooms}, expected {rooms}")
        m = o.demand_mask(p)
        if m == 0:
            raise OracleContractError(o.agent, p, "empty demand set")
        masks.append(m)
    return DemandGraph(
        rooms,
        tuple(capacities[r] for r in rooms),
        tuple(o.agent for o in oracles),
        tuple(masks),
        price=p,
    )


def union_demand_graph(graphs: Sequence[DemandGraph], cell: Optional[GridCell] = None) -> DemandGraph:
    """Edge-union of demand graphs over the same agents and rooms
    (typically the vertex graphs of one grid cell)."""
    if not graphs:
        raise ValueError("need at least one graph")
    first = graphs[0]
    masks = list(first.demand_masks)
    for g in graphs[1:]:
        if g.rooms != first.rooms or g.agents != first.agents or g.capacities != first.capacities:
            raise ValueError("graphs are not over the same market")
        masks = [m | x for m, x in zip(masks, g.demand_masks)]
    return DemandGraph(
        first.rooms, first.capacities, first.agents, tuple(masks), cell=cell
    )


def neighborhood_size(graph: DemandGraph, rooms_subset: Iterable[str]) -> int:
    """Number of agents demanding at least one room of the subset."""
    mask = 0
    for r in rooms_subset:
        mask |= 1 << graph.rooms.index(r)
    return sum(1 for m in graph.demand_masks if m & mask)


def has_sufficient_demand(graph: DemandGraph, rooms_subset: Iterable[str]) -> bool:
    """True iff the subset's demand neighborhood covers its total capacity
    (the Hall inequality for this one subset)."""
    subset = tuple(rooms_subset)
    need = sum(graph.capacities[graph.rooms.index(r)] for r in subset)
    return neighborhood_size(graph, subset) >= need


@dataclass(frozen=True)
class Assignment:
    """Agent-to-room map filling every room exactly to capacity."""

    mapping: Mapping[str, str]
    capacities: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))
        object.__setattr__(self, "capacities", dict(self.capacities))
        counts = {r: 0 for r in self.capacities}
        for agent, room in self.mapping.items():
            if room not in counts:
                raise ValueError(f"agent {agent!r} assigned unknown room {room!r}")
            counts[room] += 1
        if counts != dict(self.capacities):
            raise ValueError(f"assignment fills {counts}, capacities are {dict(self.capacities)}")

    def room_of(self, agent: str) -> str:
        return self.mapping[agent]

    def occupants(self, room: str) -> tuple[str, ...]:
        return tuple(a for a, r in self.mapping.items() if r == room)

    def items(self):
        return self.mapping.items()


@dataclass(frozen=True)
class FlowWitness:
    """Outcome of the feasibility flow: a full assignment when the flow
    saturates all agents, otherwise a room subset whose capacity exceeds
    its demand neighborhood, with the (positive) deficiency."""

    flow: int
    assignment: Optional[Assignment] = None
    violating_rooms: Optional[frozenset[str]] = None
    deficiency: int = 0

    @property
    def feasible(self) -> bool:
        return self.assignment is not None


def _augment(masks: Sequence[int], caps: Sequence[int]) -> tuple[int, list[int], list[list[int]]]:
    """Kuhn-style augmenting paths with room capacities.

    Agents are offered in index order and try rooms in index order, so the
    outcome is deterministic.  Returns (flow, room_of, occupants).
    """
    n, d = len(masks), len(caps)
    room_of = [-1] * n
    occupants: list[list[int]] = [[] for _ in range(d)]
    flow = 0
    for i in range(n):
        visited = [False] * d

        def place(agent: int) -> bool:
            m = masks[agent]
            for r in range(d):
                if not (m >> r) & 1 or visited[r]:
                    continue
                visited[r] = True
                if len(occupants[r]) < caps[r]:
                    occupants[r].append(agent)
                    room_of[agent] = r
                    return True
                for tenant in occupants[r]:
                    if place(tenant):
                        occupants[r].remove(tenant)
                        occupants[r].append(agent)
                        room_of[agent] = r
                        return True
            return False

        if place(i):
            flow += 1
    return flow, room_of, occupants


def _violating_set(masks: Sequence[int], caps: Sequence[int], room_of: Sequence[int]) -> frozenset[int]:
    """Rooms unreachable from any unassigned agent by alternating paths;
    their total capacity provably exceeds their demand neighborhood."""
    n, d = len(masks), len(caps)
    agent_seen = [room_of[i] == -1 for i in range(n)]
    room_seen = [False] * d
    frontier = [i for i in range(n) if agent_seen[i]]
    while frontier:
        nxt = []
        for i in frontier:
            m = masks[i]
            for r in range(d):
                if (m >> r) & 1 and not room_seen[r]:
                    room_seen[r] = True
                    for j in range(n):
                        if room_of[j] == r and not agent_seen[j]:
                            agent_seen[j] = True
                            nxt.append(j)
        frontier = nxt
    return frozenset(r for r in range(d) if not room_seen[r])


def feasible_assignment(graph: DemandGraph) -> FlowWitness:
    """Decide whether the demand graph admits a full capacity assignment.

    Requires total capacity == number of agents.  Success returns the
    assignment read off the flow; failure returns a violating room subset
    extracted from the residual cut, achieving the maximum deficiency.
    """
    if sum(graph.capacities) != graph.n:
        raise ValueError(
            f"total capacity {sum(graph.capacities)} != {graph.n} agents"
        )
    flow, room_of, _ = _augment(graph.demand_masks, graph.capacities)
    if flow == graph.n:
        mapping = {a: graph.rooms[room_of[i]] for i, a in enumerate(graph.agents)}
        assignment = Assignment(mapping, dict(zip(graph.rooms, graph.capacities)))
        return FlowWitness(flow, assignment=assignment)
    bad = _violating_set(graph.demand_masks, graph.capacities, room_of)
    rooms = frozenset(graph.rooms[r] for r in bad)
    short = sum(graph.capacities[r] for r in bad) - neighborhood_size(graph, rooms)
    return FlowWitness(flow, violating_rooms=rooms, deficiency=short)


def deficiency(graph: DemandGraph) -> int:
    """Agents left unassigned by a maximum flow; zero iff a full
    assignment exists.  Equals the worst capacity-minus-neighborhood gap
    over all room subsets."""
    if sum(graph.capacities) != graph.n:
        raise ValueError(
            f"total capacity {sum(graph.capacities)} != {graph.n} agents"
        )
    flow, _, _ = _augment(graph.demand_masks, graph.capacities)
    return graph.n - flow
