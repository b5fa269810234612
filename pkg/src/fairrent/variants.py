"""Cake/chore division and exchange-economy pipelines.

Both problems reduce to the rental market by transforming preferences.

Cake division flips the free-room monotonicity: a hungry agent never
wants an empty piece, i.e. demand stays inside the support.  The
transform shrinks the simplex by the affine map sending each vertex to
the barycenter of the opposite face and extends preferences off the
image with "relatively cheap rooms only", which restores the
likes-free-rooms property; any market-clearing point of the transformed
problem necessarily falls in the image's interior and pulls back to a
division for the original preferences.

The exchange economy prices rooms in a unit cube instead of the simplex
(price 1 = never chosen).  The cube's zero-slice is homeomorphic to the
simplex by q[r] = (1 - p[r]) / sum(1 - p), turning the price-ceiling
property into support-confinement, i.e. a cake problem.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional

from fairrent.matching import Assignment
from fairrent.oracles import PreferenceOracle
from fairrent.simplex import (
    PriceVector,
    cake_image_position,
    cake_unembed,
    simplex_to_cube,
)
from fairrent.solver import (
    Certificate,
    PropertyViolation,
    Solution,
    SolverConfig,
    SolverStats,
    solve_rental,
)


@dataclass(frozen=True)
class CakeProblem:
    """Agents with support-confined demand over divisions of a cake (or a
    chore list with compensations); capacities are piece multiplicities
    or chore headcounts."""

    oracles: tuple[PreferenceOracle, ...]
    capacities: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "oracles", tuple(self.oracles))
        object.__setattr__(self, "capacities", dict(self.capacities))


@dataclass(frozen=True)
class ExchangeProblem:
    """Agents with cube-price demand (price-1 rooms never chosen) and
    room capacities."""

    oracles: tuple[PreferenceOracle, ...]
    capacities: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "oracles", tuple(self.oracles))
        object.__setattr__(self, "capacities", dict(self.capacities))


class CakeTransformOracle(PreferenceOracle):
    """Rental-style oracle induced by a support-confined one.

    Inside the shrunken simplex's interior, answers are the inner
    oracle's at the pulled-back division; on the image boundary the
    relatively cheap rooms (price <= 1/|R|) are added; outside, only the
    cheap rooms are liked.  The case split is decided exactly, because it
    is razor-thin and a float would misclassify it.
    """

    def __init__(self, inner: PreferenceOracle):
        super().__init__(
            inner.agent,
            inner.rooms,
            concurrent_safe=inner.concurrent_safe,
            family=f"cake-transform({inner.family})",
        )
        self.inner = inner

    def _cheap_mask(self, p: PriceVector) -> int:
        d = len(self.rooms)
        mask = 0
        for i, f in enumerate(p.fractions):
            if f * d <= 1:
                mask |= 1 << i
        return mask

    def demand_mask(self, p: PriceVector) -> int:
        position = cake_image_position(p)
        if position == "outside":
            return self._cheap_mask(p)
        inner_mask = self.inner.demand_mask(cake_unembed(p))
        if position == "boundary":
            return inner_mask | self._cheap_mask(p)
        return inner_mask


def cake_transform(oracle: PreferenceOracle) -> PreferenceOracle:
    return CakeTransformOracle(oracle)


class ExchangeTransformOracle(PreferenceOracle):
    """Simplex oracle induced by a cube-price oracle through the
    zero-slice homeomorphism; price-ceiling avoidance becomes support
    confinement (rooms at simplex price 0 were cube price 1)."""

    def __init__(self, inner: PreferenceOracle):
        super().__init__(
            inner.agent,
            inner.rooms,
            concurrent_safe=inner.concurrent_safe,
            family=f"exchange-transform({inner.family})",
        )
        self.inner = inner

    def demand_mask(self, q: PriceVector) -> int:
        return self.inner.demand_mask(simplex_to_cube(q))


def exchange_transform(oracle: PreferenceOracle) -> PreferenceOracle:
    return ExchangeTransformOracle(oracle)


def _trivial_single_room(problem: CakeProblem) -> Solution:
    # the simplex is a single point; every support-confined oracle must
    # demand the one room there
    (room,) = tuple(problem.capacities)
    point = PriceVector((room,), (1,), 1)
    for o in problem.oracles:
        if room not in o.demand(point):
            raise PropertyViolation(f"agent {o.agent!r} refuses the only room at {point}")
    assignment = Assignment(
        {o.agent: room for o in problem.oracles}, dict(problem.capacities)
    )
    return Solution(
        status="exact",
        prices=point,
        assignment=assignment,
        certificate=Certificate({a: point for a in assignment.mapping}),
        stats=SolverStats(final_mesh=1, meshes=(1,)),
        variant="cake",
    )


def solve_cake(problem: CakeProblem, config: Optional[SolverConfig] = None,
               progress=None) -> Solution:
    """Solve a cake/chore division by transforming to a rental market.

    The returned prices are the division point for the original
    preferences; any market-clearing point of the transformed problem is
    provably interior to the shrunken simplex, so a boundary/outside hit
    means an oracle was not support-confined and raises
    PropertyViolation.  Exact results are re-verified against the inner
    oracles before being returned.
    """
    if len(problem.capacities) == 1:
        return _trivial_single_room(problem)
    transformed = [cake_transform(o) for o in problem.oracles]
    inner_sol = solve_rental(transformed, problem.capacities, config, progress)
    if inner_sol.status == "failed":
        return replace(inner_sol, variant="cake", certificate_space="internal",
                       internal_prices=inner_sol.prices, prices=None)
    position = cake_image_position(inner_sol.prices)
    if position != "interior":
        raise PropertyViolation(
            f"market-clearing point {inner_sol.prices} is {position} of the embedded "
            "simplex; some oracle demanded an unsupported piece"
        )
    division = cake_unembed(inner_sol.prices)
    if inner_sol.status == "exact":
        by_name = {o.agent: o for o in problem.oracles}
        for agent, room in inner_sol.assignment.items():
            if room not in by_name[agent].demand(division):
                raise PropertyViolation(
                    f"agent {agent!r} does not demand piece {room!r} at {division}"
                )
        return replace(
            inner_sol,
            variant="cake",
            prices=division,
            certificate=Certificate({a: division for a in inner_sol.assignment.mapping}),
        )
    # eps: the certificate stays in the transformed coordinates, where the
    # cell and its witness vertices live
    return replace(
        inner_sol,
        variant="cake",
        prices=division,
        certificate_space="internal",
        internal_prices=inner_sol.prices,
    )


def solve_exchange(problem: ExchangeProblem, config: Optional[SolverConfig] = None,
                   progress=None) -> Solution:
    """Solve the exchange economy; prices return in the cube with minimum
    coordinate exactly 0 and no agent assigned a ceiling-priced room."""
    transformed = [exchange_transform(o) for o in problem.oracles]
    cake_sol = solve_cake(CakeProblem(tuple(transformed), problem.capacities), config, progress)
    if cake_sol.status == "failed":
        return replace(cake_sol, variant="exchange", price_space="cube", prices=None)
    cube_prices = simplex_to_cube(cake_sol.prices)
    by_name = {o.agent: o for o in problem.oracles}
    if cake_sol.status == "exact":
        for agent, room in cake_sol.assignment.items():
            if cube_prices.value(room) >= 1:
                raise PropertyViolation(
                    f"agent {agent!r} assigned ceiling-priced room {room!r}"
                )
            if room not in by_name[agent].demand(cube_prices):
                raise PropertyViolation(
                    f"agent {agent!r} does not demand {room!r} at {cube_prices}"
                )
        return replace(
            cake_sol,
            variant="exchange",
            prices=cube_prices,
            price_space="cube",
            certificate=Certificate({a: cube_prices for a in cake_sol.assignment.mapping}),
            certificate_space="price",
        )
    return replace(
        cake_sol,
        variant="exchange",
        prices=cube_prices,
        price_space="cube",
        certificate_space="internal",
    )
