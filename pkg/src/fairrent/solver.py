"""Mesh-refinement search for market-clearing envy-free prices.

The target predicate is max-flow feasibility of the demand graph: by the
capacity version of Hall's theorem this holds exactly when every room
subset's demand neighborhood covers its capacity, which is what the
existence theorem guarantees at some price vector.  Existence is not
constructive, so the solver sweeps a grid, returns an exact solution when
a grid vertex clears the market, and otherwise refines around the most
promising cells until a cell of diameter <= epsilon has a feasible
vertex-union demand graph (an eps-certificate).  Soundness is always
checkable; termination relies on the solution set not hiding from every
refined grid, hence the optional seeded mesh offset.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from fairrent.matching import (
    Assignment,
    DemandGraph,
    FlowWitness,
    build_demand_graph,
    feasible_assignment,
    has_sufficient_demand,
)
from fairrent.oracles import PreferenceOracle
from fairrent.simplex import BalancedFamily, GridCell, PriceVector, triangulate


class PropertyViolation(RuntimeError):
    """A guarantee the inputs were declared to satisfy did not hold."""


@dataclass(frozen=True)
class SolverConfig:
    """Search-control knobs.

    epsilon is the target cell diameter for certificates; query_budget
    caps distinct (agent, price) oracle queries (None = unlimited);
    beam_width is how many top-ranked cells survive a refinement round;
    mesh_offset, when set, jitters the initial mesh denominator from the
    seed so that repeated runs can escape grids aligned with a degenerate
    solution locus.  workers > 1 evaluates grid vertices concurrently when
    every oracle allows it; results never depend on scheduling.
    """

    initial_mesh: int = 4
    epsilon: Fraction = Fraction(1, 1000)
    max_doublings: int = 18
    seed: int = 0
    query_budget: Optional[int] = None
    beam_width: int = 32
    mesh_offset: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.initial_mesh < 1:
            raise ValueError("initial mesh denominator must be >= 1")
        if self.beam_width < 1:
            raise ValueError("beam width must be >= 1")
        if self.max_doublings < 0:
            raise ValueError("max doublings must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.query_budget is not None and self.query_budget < 1:
            raise ValueError("query budget must be >= 1 or None")


@dataclass
class SolverStats:
    oracle_queries: int = 0
    vertex_evaluations: int = 0
    cells_visited: int = 0
    doublings: int = 0
    final_mesh: int = 0
    meshes: tuple[int, ...] = ()


@dataclass(frozen=True)
class Certificate:
    """Per-agent evidence that the assigned room really is demanded.

    For an exact solution every witness is the solution price itself; for
    an eps-certificate each witness is a vertex of the reported cell at
    which the agent demanded their assigned room.
    """

    witnesses: Mapping[str, PriceVector]

    def __post_init__(self):
        object.__setattr__(self, "witnesses", dict(self.witnesses))


@dataclass(frozen=True)
class Solution:
    """Prices plus a capacity-exact assignment and its evidence.

    status 'exact': every agent demands their room at `prices`.
    status 'eps': `cell` has diameter <= epsilon, prices are its
    barycenter, and the certificate witnesses each agent's room at some
    vertex of the cell.  status 'failed': search budget ran out; the most
    promising cell is reported.  `certificate_space` is 'price' when
    witnesses live in the same coordinates as `prices`, or 'internal'
    when a variant pipeline solved in transformed coordinates.
    """

    status: str
    prices: Optional[object]  # PriceVector, or CubePoint for exchange markets
    assignment: Optional[Assignment]
    certificate: Optional[Certificate]
    stats: SolverStats
    variant: str = "rental"
    price_space: str = "simplex"
    certificate_space: str = "price"
    cell: Optional[GridCell] = None
    diameter_squared: Optional[Fraction] = None
    failure_reason: Optional[str] = None
    internal_prices: Optional[PriceVector] = None

    @property
    def succeeded(self) -> bool:
        return self.status in ("exact", "eps")


class BudgetExhausted(Exception):
    pass


class _Evaluator:
    """Caches demand masks and feasibility per grid vertex.

    The query counter counts distinct (agent, price) pairs, so budgets and
    reported stats are identical under sequential and concurrent sweeps.
    """

    def __init__(self, oracles, rooms, capacities, budget, workers):
        self.oracles = list(oracles)
        self.rooms = rooms
        self.capacities = capacities
        self.budget = budget
        self.workers = workers if all(o.concurrent_safe for o in oracles) else 1
        self.demand_cache: dict[PriceVector, DemandGraph] = {}
        self.flow_cache: dict[PriceVector, FlowWitness] = {}
        self.queries = 0

    def _evaluate_one(self, p: PriceVector) -> DemandGraph:
        return build_demand_graph(self.oracles, p, self.capacities)

    def sweep(self, vertices: Sequence[PriceVector]) -> None:
        """Evaluate all unseen vertices, canonical order, budget permitting."""
        fresh = [p for p in vertices if p not in self.demand_cache]
        if not fresh:
            return
        n = len(self.oracles)
        if self.budget is not None:
            allowed = max(0, (self.budget - self.queries)) // n
            if allowed < len(fresh):
                fresh, overflow = fresh[:allowed], True
            else:
                overflow = False
        else:
            overflow = False
        if self.workers > 1 and len(fresh) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                graphs = list(pool.map(self._evaluate_one, fresh))
        else:
            graphs = [self._evaluate_one(p) for p in fresh]
        for p, g in zip(fresh, graphs):
            self.demand_cache[p] = g
            self.queries += n
        if overflow:
            raise BudgetExhausted

    def graph(self, p: PriceVector) -> DemandGraph:
        return self.demand_cache[p]

    def witness(self, p: PriceVector) -> FlowWitness:
        w = self.flow_cache.get(p)
        if w is None:
            w = feasible_assignment(self.demand_cache[p])
            self.flow_cache[p] = w
        return w

    def vertex_deficiency(self, p: PriceVector) -> int:
        return len(self.oracles) - self.witness(p).flow


def _validate_market(oracles, capacities):
    rooms = tuple(capacities)
    caps = {r: int(capacities[r]) for r in rooms}
    if any(c < 1 for c in caps.values()):
        raise ValueError("capacities must be positive integers")
    n = len(oracles)
    if sum(caps.values()) != n:
        raise ValueError(
            f"total capacity {sum(caps.values())} must equal the number of agents {n}"
        )
    names = [o.agent for o in oracles]
    if len(set(names)) != len(names):
        raise ValueError("agent names must be unique")
    for o in oracles:
        if o.rooms != rooms:
            raise ValueError(f"oracle {o.agent!r} is over rooms {o.rooms}, expected {rooms}")
    return rooms, caps


def solve_rental(
    oracles: Sequence[PreferenceOracle],
    capacities: Mapping[str, int],
    config: Optional[SolverConfig] = None,
    progress: Optional[Callable[[int, int, int], None]] = None,
) -> Solution:
    """Search the price simplex for a market-clearing price vector.

    Per mesh round: evaluate the demand graph at every grid vertex of the
    active region and return an exact Solution at the canonically first
    zero-deficiency vertex; otherwise rank cells by (vertex-union graph
    feasibility, then minimal vertex deficiency, then canonical order),
    return an eps-certificate if a union-feasible cell is small enough,
    and otherwise double the mesh inside the kept beam.  Deterministic
    for a fixed config and deterministic oracles.
    """
    config = config or SolverConfig()
    rooms, caps = _validate_market(oracles, capacities)
    evaluator = _Evaluator(oracles, rooms, caps, config.query_budget, config.workers)
    stats = SolverStats()

    mesh = config.initial_mesh
    if config.mesh_offset:
        mesh += random.Random(config.seed).randrange(1, config.initial_mesh + 2)
    cells = sorted(triangulate(rooms, mesh), key=GridCell.sort_key)
    eps_sq = config.epsilon * config.epsilon
    best_cell: Optional[GridCell] = None
    meshes: list[int] = []

    def finish(status: str, **kw) -> Solution:
        stats.oracle_queries = evaluator.queries
        stats.vertex_evaluations = len(evaluator.demand_cache)
        stats.final_mesh = mesh
        stats.meshes = tuple(meshes)
        return Solution(status=status, stats=stats, **kw)

    for round_idx in range(config.max_doublings + 1):
        meshes.append(mesh)
        stats.cells_visited += len(cells)
        vertices = sorted(
            {v for c in cells for v in c.vertices()}, key=PriceVector.sort_key
        )
        try:
            evaluator.sweep(vertices)
        except BudgetExhausted:
            evaluated = [v for v in vertices if v in evaluator.demand_cache]
            for v in evaluated:
                if evaluator.vertex_deficiency(v) == 0:
                    return _exact_solution(v, evaluator, finish)
            if best_cell is None and evaluated:
                pick = min(evaluated, key=lambda v: (evaluator.vertex_deficiency(v), v.sort_key()))
                best_cell = next((c for c in cells if pick in c.vertices()), None)
            return finish(
                "failed",
                prices=best_cell.barycenter() if best_cell else None,
                assignment=None,
                certificate=None,
                cell=best_cell,
                diameter_squared=best_cell.diameter_squared() if best_cell else None,
                failure_reason="query-budget",
            )

        for v in vertices:
            if evaluator.vertex_deficiency(v) == 0:
                return _exact_solution(v, evaluator, finish)

        ranked = []
        for idx, cell in enumerate(cells):
            vs = cell.vertices()
            union = _union_graph(evaluator, cell, vs)
            union_witness = feasible_assignment(union)
            min_def = min(evaluator.vertex_deficiency(v) for v in vs)
            ranked.append(
                ((0 if union_witness.feasible else 1, min_def, idx), cell, union_witness)
            )
        ranked.sort(key=lambda t: t[0])
        best_cell = ranked[0][1]

        for key, cell, union_witness in ranked:
            if key[0] != 0:
                break
            if cell.diameter_squared() <= eps_sq:
                return _eps_solution(cell, union_witness, evaluator, finish)

        if progress is not None:
            progress(mesh, len(cells), evaluator.queries)

        if round_idx == config.max_doublings:
            break
        kept = [cell for _, cell, _ in ranked[: config.beam_width]]
        children = sorted(
            {child for cell in kept for child in cell.children()},
            key=GridCell.sort_key,
        )
        mesh *= 2
        if not children:  # defensive: refinement should always tile the beam
            children = sorted(triangulate(rooms, mesh), key=GridCell.sort_key)
        cells = children
        stats.doublings += 1

    return finish(
        "failed",
        prices=best_cell.barycenter() if best_cell else None,
        assignment=None,
        certificate=None,
        cell=best_cell,
        diameter_squared=best_cell.diameter_squared() if best_cell else None,
        failure_reason="max-doublings",
    )


def _union_graph(evaluator: _Evaluator, cell: GridCell, vertices) -> DemandGraph:
    masks = None
    for v in vertices:
        g = evaluator.graph(v)
        masks = g.demand_masks if masks is None else tuple(
            a | b for a, b in zip(masks, g.demand_masks)
        )
    first = evaluator.graph(vertices[0])
    return DemandGraph(first.rooms, first.capacities, first.agents, masks, cell=cell)


def _exact_solution(v: PriceVector, evaluator: _Evaluator, finish) -> Solution:
    witness = evaluator.witness(v)
    cert = Certificate({a: v for a in witness.assignment.mapping})
    return finish(
        "exact",
        prices=v,
        assignment=witness.assignment,
        certificate=cert,
        diameter_squared=Fraction(0),
    )


def _eps_solution(cell: GridCell, union_witness: FlowWitness, evaluator: _Evaluator, finish) -> Solution:
    vertices = cell.vertices()
    witnesses = {}
    for agent, room in union_witness.assignment.items():
        for v in vertices:  # canonical: first vertex where the room is demanded
            g = evaluator.graph(v)
            idx = g.agents.index(agent)
            if (g.demand_masks[idx] >> g.rooms.index(room)) & 1:
                witnesses[agent] = v
                break
        else:  # pragma: no cover - contradicts the union construction
            raise PropertyViolation(f"no vertex of {cell} witnesses {agent}->{room}")
    return finish(
        "eps",
        prices=cell.barycenter(),
        assignment=union_witness.assignment,
        certificate=Certificate(witnesses),
        cell=cell,
        diameter_squared=cell.diameter_squared(),
    )


def verify_envy_free(solution: Solution, oracles: Sequence[PreferenceOracle]) -> tuple[bool, dict]:
    """Re-query every oracle at the solution prices and check membership of
    each assigned room; independent of how the solution was produced.
    Only exact solutions are verifiable at a point."""
    if solution.status != "exact":
        raise ValueError("only exact solutions can be verified at a point")
    by_name = {o.agent: o for o in oracles}
    offenders = []
    for agent, room in solution.assignment.items():
        demand = by_name[agent].demand(solution.prices)
        if room not in demand:
            offenders.append({"agent": agent, "room": room, "demand": sorted(demand)})
    return not offenders, {"offenders": offenders, "checked": len(solution.assignment.mapping)}


def check_eps_certificate(solution: Solution, oracles: Sequence[PreferenceOracle]) -> tuple[bool, dict]:
    """Validate an eps-certificate: witnesses are vertices of the reported
    cell, each agent demands their room at their witness, the assignment
    is capacity-exact, and the prices are the cell's barycenter."""
    if solution.status != "eps":
        raise ValueError("not an eps solution")
    cell = solution.cell
    vertex_set = set(cell.vertices())
    by_name = {o.agent: o for o in oracles}
    problems = []
    if solution.certificate_space == "price" and solution.prices != cell.barycenter():
        problems.append({"error": "prices are not the certified cell's barycenter"})
    if cell.diameter_squared() != solution.diameter_squared:
        problems.append({"error": "reported diameter does not match the cell"})
    for agent, room in solution.assignment.items():
        w = solution.certificate.witnesses.get(agent)
        if w is None or w not in vertex_set:
            problems.append({"agent": agent, "error": "witness is not a cell vertex"})
            continue
        if room not in by_name[agent].demand(w):
            problems.append({"agent": agent, "error": "room not demanded at witness"})
    return not problems, {"problems": problems, "checked": len(solution.assignment.mapping)}


def balanced_cover_witness(
    oracles: Sequence[PreferenceOracle],
    capacities: Mapping[str, int],
    family: BalancedFamily,
    p: PriceVector,
) -> frozenset[str]:
    """Return a member set of the balanced family whose demand neighborhood
    at p covers its capacity.

    Such a member always exists when every agent demands something (the
    covering half of the existence argument), so coming up empty signals a
    broken oracle or an unbalanced family and raises PropertyViolation.
    """
    rooms, caps = _validate_market(oracles, capacities)
    if set(family.rooms) != set(rooms):
        raise ValueError("family and market room sets differ")
    graph = build_demand_graph(oracles, p, caps)
    for member in family.members:
        if has_sufficient_demand(graph, member):
            return member
    raise PropertyViolation(
        f"no member of {family.members} has sufficient demand at {p}; "
        "an oracle returned an impossible demand pattern or the family is not balanced"
    )
