"""Exact-rational geometry of the price simplex.

Points, supports, the standard mesh triangulation and its refinement,
balanced families of room subsets, and the affine / cube maps used by the
cake and exchange pipelines.  Everything here is pure and exact: supports
and face membership are set predicates, so no coordinate ever passes
through a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Iterable, Iterator, Optional, Sequence

Rooms = tuple[str, ...]


class DomainError(ValueError):
    """Input lies outside the operation's domain (e.g. not in the boundary slice)."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError(f"refusing float coordinate {x!r}; pass a Fraction, int or string")
    return Fraction(x)


def _check_rooms(rooms: Sequence[str]) -> Rooms:
    rooms = tuple(rooms)
    if not rooms:
        raise ValueError("room set must be nonempty")
    if len(set(rooms)) != len(rooms):
        raise ValueError(f"duplicate room names in {rooms}")
    return rooms


@dataclass(frozen=True, eq=False)
class PriceVector:
    """A point of the price simplex with exact rational coordinates.

    Stored as per-room integer numerators over one positive denominator,
    with sum(numerators) == denominator (total rent normalized to 1).
    Equality and hashing are by value, so the same point built at two
    different mesh denominators compares (and caches) as equal.
    """

    rooms: Rooms
    numerators: tuple[int, ...]
    denominator: int
    fractions: tuple[Fraction, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "rooms", _check_rooms(self.rooms))
        nums = tuple(int(k) for k in self.numerators)
        object.__setattr__(self, "numerators", nums)
        if len(nums) != len(self.rooms):
            raise ValueError("one numerator per room required")
        if self.denominator < 1:
            raise ValueError("denominator must be a positive integer")
        if any(k < 0 for k in nums):
            raise ValueError(f"negative coordinate in {nums}")
        if sum(nums) != self.denominator:
            raise ValueError(
                f"numerators {nums} do not sum to denominator {self.denominator}"
            )
        object.__setattr__(
            self, "fractions", tuple(Fraction(k, self.denominator) for k in nums)
        )

    @classmethod
    def from_fractions(cls, rooms: Sequence[str], values: Iterable) -> "PriceVector":
        vals = [_as_fraction(v) for v in values]
        den = math.lcm(*(v.denominator for v in vals)) if vals else 1
        return cls(tuple(rooms), tuple(v.numerator * (den // v.denominator) for v in vals), den)

    @classmethod
    def unit(cls, rooms: Sequence[str], room: str) -> "PriceVector":
        rooms = tuple(rooms)
        return cls(rooms, tuple(1 if r == room else 0 for r in rooms), 1)

    @classmethod
    def uniform(cls, rooms: Sequence[str]) -> "PriceVector":
        rooms = tuple(rooms)
        return cls(rooms, (1,) * len(rooms), len(rooms))

    def value(self, room: str) -> Fraction:
        return self.fractions[self.rooms.index(room)]

    def support(self) -> frozenset[str]:
        return frozenset(r for r, k in zip(self.rooms, self.numerators) if k > 0)

    def support_mask(self) -> int:
        mask = 0
        for i, k in enumerate(self.numerators):
            if k > 0:
                mask |= 1 << i
        return mask

    def free_rooms(self) -> frozenset[str]:
        return frozenset(r for r, k in zip(self.rooms, self.numerators) if k == 0)

    def as_floats(self) -> dict[str, float]:
        return {r: k / self.denominator for r, k in zip(self.rooms, self.numerators)}

    def sort_key(self) -> tuple[Fraction, ...]:
        return self.fractions

    def __eq__(self, other):
        if not isinstance(other, PriceVector):
            return NotImplemented
        return self.rooms == other.rooms and self.fractions == other.fractions

    def __hash__(self):
        return hash((self.rooms, self.fractions))

    def __repr__(self):
        coords = ", ".join(f"{r}={k}/{self.denominator}" for r, k in zip(self.rooms, self.numerators))
        return f"PriceVector({coords})"


@dataclass(frozen=True)
class CubePoint:
    """A point of the unit cube of room prices (exchange-economy price space)."""

    rooms: Rooms
    coords: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "rooms", _check_rooms(self.rooms))
        vals = tuple(_as_fraction(c) for c in self.coords)
        object.__setattr__(self, "coords", vals)
        if len(vals) != len(self.rooms):
            raise ValueError("one coordinate per room required")
        if any(c < 0 or c > 1 for c in vals):
            raise ValueError(f"cube coordinates must lie in [0,1]: {vals}")

    @classmethod
    def of(cls, rooms: Sequence[str], values: Iterable) -> "CubePoint":
        return cls(tuple(rooms), tuple(_as_fraction(v) for v in values))

    def value(self, room: str) -> Fraction:
        return self.coords[self.rooms.index(room)]

    def in_boundary_slice(self) -> bool:
        """True when some coordinate is exactly zero."""
        return min(self.coords) == 0

    def as_floats(self) -> dict[str, float]:
        return {r: float(c) for r, c in zip(self.rooms, self.coords)}


# ---------------------------------------------------------------------------
# Standard triangulation
#
# Cells are encoded as (base vertex, move permutation).  The base is the
# lexicographically smallest vertex; step k adds e_j - e_{j+1} with
# j = moves[k], which in partial-sum ("staircase") coordinates is a unit
# step along axis j.  Mesh m cuts the simplex into m^(d-1) such cells.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridCell:
    """One simplex of the mesh-`mesh` standard triangulation.

    Vertices are the chain base, base + step(moves[0]), ... where
    step(j) shifts one rent unit from room j+1 to room j.
    """

    rooms: Rooms
    mesh: int
    base: tuple[int, ...]
    moves: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "rooms", _check_rooms(self.rooms))
        object.__setattr__(self, "base", tuple(int(k) for k in self.base))
        object.__setattr__(self, "moves", tuple(int(j) for j in self.moves))
        d = len(self.rooms)
        if self.mesh < 1:
            raise ValueError("mesh denominator must be >= 1")
        if len(self.base) != d or sum(self.base) != self.mesh or min(self.base, default=0) < 0:
            raise ValueError(f"base {self.base} is not a mesh-{self.mesh} grid point")
        if sorted(self.moves) != list(range(d - 1)):
            raise ValueError(f"moves {self.moves} must permute 0..{d - 2}")
        if self.vertex_numerators() is None:
            raise ValueError(f"cell {self.base}/{self.moves} leaves the simplex")

    def vertex_numerators(self) -> Optional[tuple[tuple[int, ...], ...]]:
        chain = [self.base]
        cur = list(self.base)
        for j in self.moves:
            cur = cur[:]
            cur[j] += 1
            cur[j + 1] -= 1
            if cur[j + 1] < 0:
                return None
            chain.append(tuple(cur))
        return tuple(chain)

    def vertices(self) -> tuple[PriceVector, ...]:
        return tuple(
            PriceVector(self.rooms, nums, self.mesh) for nums in self.vertex_numerators()
        )

    def barycenter(self) -> PriceVector:
        chain = self.vertex_numerators()
        d = len(self.rooms)
        sums = tuple(sum(v[i] for v in chain) for i in range(d))
        return PriceVector(self.rooms, sums, d * self.mesh)

    def diameter_squared(self) -> Fraction:
        """Exact squared Euclidean diameter (max over vertex pairs)."""
        chain = self.vertex_numerators()
        worst = 0
        for a, b in combinations(chain, 2):
            worst = max(worst, sum((x - y) ** 2 for x, y in zip(a, b)))
        return Fraction(worst, self.mesh**2)

    def diameter(self) -> float:
        return math.sqrt(self.diameter_squared())

    def _staircase_base(self) -> tuple[int, ...]:
        out, acc = [], 0
        for k in self.base[:-1]:
            acc += k
            out.append(acc)
        return tuple(out)

    def contains(self, p: PriceVector) -> bool:
        """Exact closed-hull membership test."""
        if p.rooms != self.rooms:
            raise ValueError("room sets differ")
        d = len(self.rooms)
        if d == 1:
            return True
        zb = self._staircase_base()
        acc = Fraction(0)
        fracs = []
        for i in range(d - 1):
            acc += p.fractions[i]
            f = acc * self.mesh - zb[i]
            if f < 0 or f > 1:
                return False
            fracs.append(f)
        return all(
            fracs[self.moves[k]] >= fracs[self.moves[k + 1]] for k in range(d - 2)
        )

    def children(self) -> tuple["GridCell", ...]:
        """The mesh-doubled cells tiling this cell (2^(d-1) of them)."""
        d = len(self.rooms)
        m2 = 2 * self.mesh
        if d == 1:
            return (GridCell(self.rooms, m2, (m2,), ()),)
        zb2 = tuple(2 * z for z in self._staircase_base())
        out = []
        for delta in product((0, 1), repeat=d - 1):
            zb = tuple(z + dv for z, dv in zip(zb2, delta))
            nums = _staircase_to_numerators(zb, m2)
            if nums is None:
                continue
            for pi in permutations(range(d - 1)):
                try:
                    cell = GridCell(self.rooms, m2, nums, pi)
                except ValueError:
                    continue
                if all(self.contains(v) for v in cell.vertices()):
                    out.append(cell)
        out.sort(key=lambda c: (c.base, c.moves))
        return tuple(out)

    def sort_key(self):
        return (self.base, self.moves)


def _staircase_to_numerators(zb: Sequence[int], mesh: int) -> Optional[tuple[int, ...]]:
    nums = []
    prev = 0
    for z in zb:
        if z < prev:
            return None
        nums.append(z - prev)
        prev = z
    if prev > mesh:
        return None
    nums.append(mesh - prev)
    return tuple(nums)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def triangulate(rooms: Sequence[str], mesh: int) -> Iterator[GridCell]:
    """Yield every cell of the mesh-`mesh` standard triangulation once.

    Deterministic canonical order: lexicographic on (base numerators,
    move permutation).  The vertex set is exactly the grid
    {k/mesh : sum(k) == mesh}.
    """
    rooms = _check_rooms(rooms)
    if mesh < 1:
        raise ValueError("mesh denominator must be >= 1")
    d = len(rooms)
    if d == 1:
        yield GridCell(rooms, mesh, (mesh,), ())
        return
    for base in _compositions(mesh, d):
        for pi in permutations(range(d - 1)):
            chain_ok = True
            cur = list(base)
            for j in pi:
                cur[j] += 1
                cur[j + 1] -= 1
                if cur[j + 1] < 0:
                    chain_ok = False
                    break
            if chain_ok:
                yield GridCell(rooms, mesh, base, pi)


def locate_cells(rooms: Sequence[str], mesh: int, p: PriceVector) -> tuple[GridCell, ...]:
    """All mesh cells whose closed hull contains `p` (several iff on a shared face)."""
    rooms = _check_rooms(rooms)
    if p.rooms != rooms:
        raise ValueError("room sets differ")
    d = len(rooms)
    if d == 1:
        return (GridCell(rooms, mesh, (mesh,), ()),)
    z = []
    acc = Fraction(0)
    for i in range(d - 1):
        acc += p.fractions[i]
        z.append(acc * mesh)
    base_options = []
    for zi in z:
        floor = int(zi)
        opts = {floor}
        if zi == floor:
            opts.add(floor - 1)
        base_options.append(sorted(k for k in opts if 0 <= k <= mesh))
    found = set()
    for zb in product(*base_options):
        fracs = [zi - b for zi, b in zip(z, zb)]
        if any(f < 0 or f > 1 for f in fracs):
            continue
        nums = _staircase_to_numerators(zb, mesh)
        if nums is None:
            continue
        for pi in permutations(range(d - 1)):
            if any(fracs[pi[k]] < fracs[pi[k + 1]] for k in range(d - 2)):
                continue
            try:
                found.add(GridCell(rooms, mesh, nums, pi))
            except ValueError:
                continue
    return tuple(sorted(found, key=GridCell.sort_key))


# ---------------------------------------------------------------------------
# Balanced families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BalancedFamily:
    """Subsets of the room set with nonnegative weights whose weighted
    indicator vectors sum exactly to the all-ones vector."""

    rooms: Rooms
    members: tuple[frozenset[str], ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "rooms", _check_rooms(self.rooms))
        members = tuple(frozenset(m) for m in self.members)
        weights = tuple(_as_fraction(w) for w in self.weights)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)
        if len(members) != len(weights):
            raise ValueError("one weight per member set required")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        room_set = set(self.rooms)
        for m in members:
            if not m or not m.issubset(room_set):
                raise ValueError(f"member {set(m)} is not a nonempty subset of {room_set}")
        for r in self.rooms:
            total = sum((w for m, w in zip(members, weights) if r in m), Fraction(0))
            if total != 1:
                raise ValueError(f"weighted cover of room {r!r} is {total}, not 1")

    def __iter__(self):
        return iter(self.members)


def _set_partitions(items: Sequence[str]) -> Iterator[tuple[frozenset[str], ...]]:
    items = list(items)
    if not items:
        yield ()
        return
    head, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i, block in enumerate(part):
            yield part[:i] + (block | {head},) + part[i + 1 :]
        yield part + (frozenset({head}),)


def _canonical_members(members: Iterable[frozenset[str]]) -> tuple[frozenset[str], ...]:
    return tuple(sorted(members, key=lambda m: (len(m), tuple(sorted(m)))))


def canonical_balanced_families(rooms: Sequence[str]) -> list[BalancedFamily]:
    """Every partition of the room set (unit weights) plus, for each k, the
    family of all k-subsets with uniform weight 1/C(|R|-1, k-1)."""
    rooms = _check_rooms(rooms)
    d = len(rooms)
    seen = set()
    out = []

    def add(members, weights):
        members = _canonical_members(members)
        key = (members, tuple(weights))
        if key not in seen:
            seen.add(key)
            out.append(BalancedFamily(rooms, members, tuple(weights)))

    for part in _set_partitions(rooms):
        members = _canonical_members(part)
        add(members, [Fraction(1)] * len(members))
    for k in range(1, d + 1):
        members = _canonical_members(frozenset(c) for c in combinations(rooms, k))
        w = Fraction(1, math.comb(d - 1, k - 1))
        add(members, [w] * len(members))
    return out


# ---------------------------------------------------------------------------
# Affine shrinking map (cake pipeline) and cube homeomorphism (exchange)
# ---------------------------------------------------------------------------


def cake_embed(p: PriceVector) -> PriceVector:
    """Affine map sending each simplex vertex to the barycenter of the
    opposite face; coordinates become (1 - p[r]) / (|R| - 1)."""
    d = len(p.rooms)
    if d < 2:
        raise ValueError("embedding needs at least two rooms")
    nums = tuple(p.denominator - k for k in p.numerators)
    return PriceVector(p.rooms, nums, p.denominator * (d - 1))


def cake_image_position(q: PriceVector) -> str:
    """Classify q relative to the shrunken simplex: 'interior', 'boundary'
    or 'outside'.  Exact; the case split feeds the piecewise preference
    transform, so no tolerance is allowed."""
    d = len(q.rooms)
    if d < 2:
        raise ValueError("embedding needs at least two rooms")
    # preimage coordinate: 1 - (d-1) * q[r]
    has_zero = False
    for f in q.fractions:
        pre = 1 - (d - 1) * f
        if pre < 0:
            return "outside"
        if pre == 0:
            has_zero = True
    return "boundary" if has_zero else "interior"


def cake_unembed(q: PriceVector) -> Optional[PriceVector]:
    """Invert cake_embed; None when q is outside the image."""
    if cake_image_position(q) == "outside":
        return None
    d = len(q.rooms)
    return PriceVector.from_fractions(q.rooms, (1 - (d - 1) * f for f in q.fractions))


def cube_to_simplex(p: CubePoint) -> PriceVector:
    """Homeomorphism from the cube's zero-coordinate slice onto the simplex:
    q[r] = (1 - p[r]) / sum_s (1 - p[s]).  Sends price-1 rooms to price 0."""
    if not p.in_boundary_slice():
        raise DomainError(f"{p} has no zero coordinate; not in the boundary slice")
    total = sum((1 - c for c in p.coords), Fraction(0))
    return PriceVector.from_fractions(p.rooms, ((1 - c) / total for c in p.coords))


def simplex_to_cube(q: PriceVector) -> CubePoint:
    """Inverse of cube_to_simplex: p[r] = 1 - q[r] / max_s q[s]."""
    top = max(q.fractions)
    return CubePoint(q.rooms, tuple(1 - f / top for f in q.fractions))
