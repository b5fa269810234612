"""Independent brute-force oracles shared by the unit and acceptance tests.

Everything here must stay independent of the package's flow/solver code
paths: feasibility is decided by assignment enumeration or by exhaustive
Hall-style subset counting, and grid scans recompute demands from raw
value matrices with plain integer arithmetic (vectorized when numpy
helps).
"""

from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

from fairrent.simplex import PriceVector


def all_capacity_assignments(agents, capacities):
    """Yield every agent->room map filling each room exactly to capacity."""
    slots = []
    for room, c in capacities.items():
        slots.extend([room] * c)
    if len(slots) != len(agents):
        return
    seen = set()
    for perm in permutations(slots):
        if perm in seen:
            continue
        seen.add(perm)
        yield dict(zip(agents, perm))


def brute_force_feasible(demands, capacities):
    """Assignment-enumeration feasibility: independent of any flow code."""
    agents = list(demands)
    for assignment in all_capacity_assignments(agents, capacities):
        if all(assignment[a] in demands[a] for a in agents):
            return assignment
    return None


def hall_holds(demands, capacities):
    """Exhaustive subset form: every room subset's neighborhood covers its
    capacity."""
    rooms = list(capacities)
    for size in range(1, len(rooms) + 1):
        for subset in combinations(rooms, size):
            need = sum(capacities[r] for r in subset)
            seen = sum(1 for a in demands if demands[a] & set(subset))
            if seen < need:
                return False
    return True


def quasilinear_demand(values, capacities, price: PriceVector):
    """Direct argmax recomputation of v[r] - p[r]/c[r] with Fractions."""
    utilities = {
        r: Fraction(values[r]) - price.value(r) / capacities[r] for r in price.rooms
    }
    best = max(utilities.values())
    return {r for r, u in utilities.items() if u == best}


def closure_demand(values, capacities, price: PriceVector):
    return quasilinear_demand(values, capacities, price) | set(price.free_rooms())


def envy_free_at(values_by_agent, capacities, price, assignment, closure=True):
    """Independent envy check: each agent's assigned room attains their
    utility argmax at the given prices (free rooms admitted when closure
    preferences are in force)."""
    for agent, vals in values_by_agent.items():
        demand = (
            closure_demand(vals, capacities, price)
            if closure
            else quasilinear_demand(vals, capacities, price)
        )
        if assignment[agent] not in demand:
            return False
    return True


def grid_vertices(num_rooms, mesh):
    """All integer compositions of `mesh` into num_rooms parts, as an array."""
    if num_rooms == 1:
        return np.array([[mesh]], dtype=np.int64)
    rows = []

    def rec(prefix, remaining, parts):
        if parts == 1:
            rows.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, parts - 1)

    rec([], mesh, num_rooms)
    return np.array(rows, dtype=np.int64)


def scan_zero_deficiency(values_by_agent, capacities, mesh, closure=True):
    """Exhaustive mesh scan for a price vertex admitting a full assignment.

    Demands are recomputed from the raw values with integer arithmetic and
    feasibility is decided by exhaustive Hall subset counting, so this is
    a fully independent route to the solver's target predicate.  Returns
    the first qualifying vertex in lexicographic order, or None.
    """
    rooms = list(capacities)
    d = len(rooms)
    caps = np.array([capacities[r] for r in rooms], dtype=np.int64)
    K = grid_vertices(d, mesh)  # (V, d) numerators over denominator `mesh`
    clcm = int(np.lcm.reduce(caps))
    masks = np.zeros((K.shape[0], len(values_by_agent)), dtype=np.int64)
    for ai, (_, vals) in enumerate(values_by_agent.items()):
        fr = [Fraction(vals[r]) for r in rooms]
        vden = 1
        for f in fr:
            vden = vden * f.denominator // np.gcd(vden, f.denominator)
        vnum = np.array([f.numerator * (vden // f.denominator) for f in fr], dtype=np.int64)
        # utility * (mesh * vden * clcm): integer-exact
        u = vnum[None, :] * (mesh * clcm) - K * vden * (clcm // caps)[None, :]
        best = u.max(axis=1, keepdims=True)
        demand = u == best
        if closure:
            demand = demand | (K == 0)
        masks[:, ai] = demand.astype(np.int64) @ (1 << np.arange(d))
    feasible = np.ones(K.shape[0], dtype=bool)
    for size in range(1, d + 1):
        for subset in combinations(range(d), size):
            tmask = sum(1 << i for i in subset)
            need = int(caps[list(subset)].sum())
            seen = ((masks & tmask) != 0).sum(axis=1)
            feasible &= seen >= need
    hits = np.nonzero(feasible)[0]
    if hits.size == 0:
        return None
    nums = tuple(int(x) for x in K[hits[0]])
    return PriceVector(tuple(rooms), nums, mesh)


def random_market(rng, num_rooms, max_agents=8):
    """Random quasilinear market: values on the 1/100 grid, capacities a
    random positive composition."""
    rooms = tuple("ABCDEFGH"[:num_rooms])
    n = rng.randrange(num_rooms, max_agents + 1)
    cuts = sorted(rng.sample(range(1, n), num_rooms - 1)) if num_rooms > 1 else []
    bounds = [0] + cuts + [n]
    capacities = {
        r: bounds[i + 1] - bounds[i] for i, r in enumerate(rooms)
    }
    values = {
        f"agent{i + 1}": {r: Fraction(rng.randrange(0, 101), 100) for r in rooms}
        for i in range(n)
    }
    return rooms, capacities, values
