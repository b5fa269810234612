"""Problem/solution/report JSON formats and oracle construction.

Problems declare a variant (rental, cake or exchange), rooms with
capacities, one oracle per agent, and optional solver overrides.  Files
are validated against the schemas shipped with the package; rationals
travel as strings so nothing is ever rounded.  Solutions round-trip
losslessly and embed everything needed for independent re-verification,
including elicited answers for interactive agents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Callable, Mapping, Optional, Sequence

import jsonschema

from fairrent.matching import Assignment
from fairrent.oracles import (
    CallableOracle,
    InteractiveOracle,
    DecisionRule,
    PreferenceOracle,
    decision_list_oracle,
    exchange_quasilinear_oracle,
    free_room_closure,
    hungry_cake_oracle,
    quasilinear_oracle,
)
from fairrent.simplex import CubePoint, GridCell, PriceVector
from fairrent.solver import (
    Certificate,
    Solution,
    SolverConfig,
    SolverStats,
    check_eps_certificate,
    solve_rental,
    verify_envy_free,
)
from fairrent.variants import (
    CakeProblem,
    ExchangeProblem,
    cake_transform,
    exchange_transform,
    solve_cake,
    solve_exchange,
)

PROBLEM_FORMAT = "fairrent-problem/1"
SOLUTION_FORMAT = "fairrent-solution/1"
REPORT_FORMAT = "fairrent-report/1"

_FAMILIES_BY_VARIANT = {
    "rental": {"quasilinear", "decision-list", "interactive"},
    "cake": {"hungry-cake"},
    "exchange": {"exchange-quasilinear"},
}


class ProblemError(ValueError):
    """Malformed problem or solution input; carries a JSON pointer path."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


def _schema(name: str) -> dict:
    text = resources.files("fairrent").joinpath(f"schemas/{name}").read_text()
    return json.loads(text)


def _validate(instance: dict, schema_name: str) -> None:
    schema = _schema(schema_name)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        pointer = "/" + "/".join(str(part) for part in e.absolute_path)
        raise ProblemError(pointer or "/", e.message)


@dataclass(frozen=True)
class AgentSpec:
    name: str
    family: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProblemSpec:
    """Validated, semantically checked problem description."""

    variant: str
    rooms: tuple[str, ...]
    capacities: dict[str, int]
    agents: tuple[AgentSpec, ...]
    apply_free_room_closure: bool
    allow_surplus: bool
    solver: dict

    @property
    def interactive_agents(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.agents if a.family == "interactive")

    @property
    def surplus(self) -> int:
        return sum(self.capacities.values()) - len(self.agents)


def load_problem(source, variant_override: Optional[str] = None) -> ProblemSpec:
    """Parse and validate a problem from a dict, JSON text, or file path."""
    if isinstance(source, dict):
        data = source
    else:
        text = source if str(source).lstrip().startswith("{") else open(source).read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ProblemError("/", f"not valid JSON: {e}") from e
    _validate(data, "problem.schema.json")

    variant = data.get("variant", "rental")
    if variant_override is not None:
        if "variant" in data and data["variant"] != variant_override:
            raise ProblemError(
                "/variant",
                f"problem declares variant {data['variant']!r}; "
                f"command line asked for {variant_override!r}",
            )
        variant = variant_override

    rooms = tuple(r["name"] for r in data["rooms"])
    if len(set(rooms)) != len(rooms):
        raise ProblemError("/rooms", "room names must be unique")
    capacities = {r["name"]: r["capacity"] for r in data["rooms"]}

    agents = []
    names = set()
    for i, a in enumerate(data["agents"]):
        if a["name"] in names:
            raise ProblemError(f"/agents/{i}/name", f"duplicate agent name {a['name']!r}")
        names.add(a["name"])
        family = a["oracle"]["family"]
        if family not in _FAMILIES_BY_VARIANT[variant]:
            raise ProblemError(
                f"/agents/{i}/oracle/family",
                f"family {family!r} is not usable with variant {variant!r}",
            )
        agents.append(AgentSpec(a["name"], family, dict(a["oracle"].get("params", {}))))

    allow_surplus = bool(data.get("allow_surplus", False))
    total = sum(capacities.values())
    if total < len(agents):
        raise ProblemError(
            "/rooms", f"total capacity {total} is less than {len(agents)} agents"
        )
    if total > len(agents) and not allow_surplus:
        raise ProblemError(
            "/rooms",
            f"total capacity {total} exceeds {len(agents)} agents; "
            'set "allow_surplus": true to fill spare units with synthetic agents',
        )

    spec = ProblemSpec(
        variant=variant,
        rooms=rooms,
        capacities=capacities,
        agents=tuple(agents),
        apply_free_room_closure=bool(data.get("apply_free_room_closure", variant == "rental")),
        allow_surplus=allow_surplus,
        solver=dict(data.get("solver", {})),
    )
    _check_params(spec)
    return spec


def _check_params(spec: ProblemSpec) -> None:
    room_set = set(spec.rooms)
    for i, a in enumerate(spec.agents):
        where = f"/agents/{i}/oracle/params"
        if a.family in ("quasilinear", "hungry-cake", "exchange-quasilinear"):
            values = a.params.get("values")
            if values is None:
                raise ProblemError(where, f"family {a.family!r} requires 'values'")
            if set(values) != room_set:
                raise ProblemError(
                    f"{where}/values", f"must name exactly the rooms {sorted(room_set)}"
                )
        elif a.family == "decision-list":
            if "default" not in a.params:
                raise ProblemError(where, "decision-list requires 'default'")
            for j, rule in enumerate(a.params.get("rules", [])):
                bad = (set(rule["weights"]) | set(rule["demand"])) - room_set
                if bad:
                    raise ProblemError(
                        f"{where}/rules/{j}", f"unknown rooms {sorted(bad)}"
                    )
            if set(a.params["default"]) - room_set:
                raise ProblemError(f"{where}/default", "unknown rooms")


def resolve_config(spec: ProblemSpec, overrides: Optional[Mapping] = None) -> SolverConfig:
    """Defaults <- problem's solver block <- explicit overrides."""
    merged: dict = dict(spec.solver)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    if "epsilon" in merged:
        merged["epsilon"] = Fraction(str(merged["epsilon"]))
    return SolverConfig(**merged)


AskFn = Callable[[PriceVector], Sequence[str]]


def build_oracles(
    spec: ProblemSpec,
    ask_factory: Optional[Callable[[str], AskFn]] = None,
    replay: Optional[Mapping[str, Mapping[PriceVector, Sequence[str]]]] = None,
) -> list[PreferenceOracle]:
    """Instantiate one oracle per agent, plus synthetic fillers for surplus
    capacity.  Interactive agents need an ask_factory (live session) or a
    replay table of previously elicited answers."""
    rooms = spec.rooms
    oracles: list[PreferenceOracle] = []
    for a in spec.agents:
        if a.family == "quasilinear":
            o = quasilinear_oracle(a.name, rooms, a.params["values"], spec.capacities)
        elif a.family == "hungry-cake":
            o = hungry_cake_oracle(a.name, rooms, a.params["values"])
        elif a.family == "exchange-quasilinear":
            o = exchange_quasilinear_oracle(a.name, rooms, a.params["values"])
        elif a.family == "decision-list":
            rules = [
                DecisionRule(
                    r["weights"], r["op"], Fraction(str(r["threshold"])), frozenset(r["demand"])
                )
                for r in a.params.get("rules", [])
            ]
            o = decision_list_oracle(a.name, rooms, rules, a.params["default"])
        elif a.family == "interactive":
            if ask_factory is not None:
                o = InteractiveOracle(a.name, rooms, ask_factory(a.name))
            elif replay is not None and a.name in replay:
                answers = replay[a.name]

                def lookup(p, _answers=answers, _name=a.name):
                    try:
                        return _answers[p]
                    except KeyError:
                        raise ProblemError(
                            "/elicited_answers",
                            f"no recorded answer for agent {_name!r} at {p}",
                        )

                o = CallableOracle(a.name, rooms, lookup, family="interactive-replay",
                                   concurrent_safe=False)
            else:
                raise ProblemError(
                    "/agents",
                    f"agent {a.name!r} is interactive; use the session server "
                    "or supply recorded answers",
                )
        else:  # pragma: no cover - schema forbids it
            raise ProblemError("/agents", f"unknown family {a.family!r}")
        oracles.append(o)

    for k in range(spec.surplus):
        name = f"surplus-{k + 1}"
        if any(a.name == name for a in spec.agents):
            raise ProblemError("/agents", f"agent name {name!r} collides with surplus fillers")
        oracles.append(_surplus_oracle(name, spec))

    if spec.variant == "rental" and spec.apply_free_room_closure:
        oracles = [free_room_closure(o) for o in oracles]
    return oracles


def _surplus_oracle(name: str, spec: ProblemSpec) -> PreferenceOracle:
    # fillers must satisfy the variant's assumptions: indifferent-to-all
    # works for rental, but cake fillers must stay inside the support and
    # exchange fillers below the price ceiling
    if spec.variant == "rental":
        return CallableOracle(name, spec.rooms, lambda p: spec.rooms, family="surplus-filler")
    if spec.variant == "cake":
        return hungry_cake_oracle(name, spec.rooms, {r: 1 for r in spec.rooms})
    return exchange_quasilinear_oracle(name, spec.rooms, {r: 0 for r in spec.rooms})


def solve_spec(
    spec: ProblemSpec,
    config: Optional[SolverConfig] = None,
    ask_factory=None,
    progress=None,
) -> tuple[Solution, list[PreferenceOracle]]:
    """Build oracles and dispatch to the variant's pipeline."""
    config = config if config is not None else resolve_config(spec)
    oracles = build_oracles(spec, ask_factory=ask_factory)
    if spec.variant == "rental":
        sol = solve_rental(oracles, spec.capacities, config, progress)
    elif spec.variant == "cake":
        sol = solve_cake(CakeProblem(tuple(oracles), spec.capacities), config, progress)
    else:
        sol = solve_exchange(ExchangeProblem(tuple(oracles), spec.capacities), config, progress)
    return sol, oracles


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _frac_str(f: Fraction) -> str:
    return str(Fraction(f))


def point_rationals(point) -> dict:
    if isinstance(point, PriceVector):
        return {r: _frac_str(f) for r, f in zip(point.rooms, point.fractions)}
    return {r: _frac_str(c) for r, c in zip(point.rooms, point.coords)}


def _point_prices(point) -> dict:
    rationals = point_rationals(point)
    return {
        r: {"rational": s, "decimal": float(Fraction(s))} for r, s in rationals.items()
    }


def _parse_point(rationals: Mapping[str, str], rooms, space: str):
    values = [Fraction(rationals[r]) for r in rooms]
    if space == "cube":
        return CubePoint(tuple(rooms), tuple(values))
    return PriceVector.from_fractions(rooms, values)


def solution_to_dict(
    solution: Solution,
    spec: ProblemSpec,
    config: SolverConfig,
    elicited: Optional[Mapping[str, Sequence[tuple[PriceVector, Sequence[str]]]]] = None,
) -> dict:
    rooms = spec.rooms
    agent_rows = [{"name": a.name, "family": a.family} for a in spec.agents]
    for k in range(spec.surplus):
        agent_rows.append(
            {"name": f"surplus-{k + 1}", "family": "surplus-filler", "synthetic": True}
        )
    out: dict = {
        "format": SOLUTION_FORMAT,
        "variant": solution.variant,
        "status": solution.status,
        "price_space": solution.price_space,
        "failure_reason": solution.failure_reason,
        "rooms": [{"name": r, "capacity": spec.capacities[r]} for r in rooms],
        "agents": agent_rows,
        "prices": _point_prices(solution.prices) if solution.prices is not None else None,
        "per_unit_prices": None,
        "assignment": dict(solution.assignment.mapping) if solution.assignment else None,
        "certificate": None,
        "cell": None,
        "internal_prices": None,
        "diameter": None,
        "stats": {
            "oracle_queries": solution.stats.oracle_queries,
            "vertex_evaluations": solution.stats.vertex_evaluations,
            "cells_visited": solution.stats.cells_visited,
            "doublings": solution.stats.doublings,
            "final_mesh": solution.stats.final_mesh,
            "meshes": list(solution.stats.meshes),
        },
        "config": {
            "initial_mesh": config.initial_mesh,
            "epsilon": _frac_str(config.epsilon),
            "max_doublings": config.max_doublings,
            "seed": config.seed,
            "query_budget": config.query_budget,
            "beam_width": config.beam_width,
            "mesh_offset": config.mesh_offset,
            "workers": config.workers,
        },
    }
    if solution.variant == "rental" and solution.prices is not None:
        out["per_unit_prices"] = {
            r: {
                "rational": _frac_str(solution.prices.value(r) / spec.capacities[r]),
                "decimal": float(solution.prices.value(r) / spec.capacities[r]),
            }
            for r in rooms
        }
    if solution.certificate is not None:
        out["certificate"] = {
            "space": solution.certificate_space,
            "witnesses": {
                agent: {
                    "room": solution.assignment.mapping[agent],
                    "price": point_rationals(w),
                }
                for agent, w in solution.certificate.witnesses.items()
            },
        }
    if solution.cell is not None:
        out["cell"] = {
            "rooms": list(solution.cell.rooms),
            "mesh": solution.cell.mesh,
            "base": list(solution.cell.base),
            "moves": list(solution.cell.moves),
        }
    if solution.internal_prices is not None:
        out["internal_prices"] = point_rationals(solution.internal_prices)
    if solution.diameter_squared is not None:
        out["diameter"] = {
            "squared_rational": _frac_str(solution.diameter_squared),
            "approx": float(solution.diameter_squared) ** 0.5,
        }
    if elicited:
        out["elicited_answers"] = {
            agent: [
                {"price": point_rationals(p), "rooms": sorted(rooms_)}
                for p, rooms_ in answers
            ]
            for agent, answers in elicited.items()
        }
    return out


def solution_from_dict(data: dict) -> Solution:
    _validate(data, "solution.schema.json")
    rooms = tuple(r["name"] for r in data["rooms"])
    caps = {r["name"]: r["capacity"] for r in data["rooms"]}
    space = data["price_space"]
    prices = (
        _parse_point({r: e["rational"] for r, e in data["prices"].items()}, rooms, space)
        if data.get("prices")
        else None
    )
    assignment = (
        Assignment(data["assignment"], caps) if data.get("assignment") else None
    )
    cert = None
    cert_space = "price"
    if data.get("certificate"):
        cert_space = data["certificate"]["space"]
        witness_space = "simplex" if cert_space == "internal" else space
        cert = Certificate(
            {
                agent: _parse_point(w["price"], rooms, witness_space)
                for agent, w in data["certificate"]["witnesses"].items()
            }
        )
    cell = None
    if data.get("cell"):
        c = data["cell"]
        cell = GridCell(tuple(c["rooms"]), c["mesh"], tuple(c["base"]), tuple(c["moves"]))
    stats = SolverStats(**{**data["stats"], "meshes": tuple(data["stats"]["meshes"])})
    return Solution(
        status=data["status"],
        prices=prices,
        assignment=assignment,
        certificate=cert,
        stats=stats,
        variant=data["variant"],
        price_space=space,
        certificate_space=cert_space,
        cell=cell,
        diameter_squared=(
            Fraction(data["diameter"]["squared_rational"]) if data.get("diameter") else None
        ),
        failure_reason=data.get("failure_reason"),
        internal_prices=(
            _parse_point(data["internal_prices"], rooms, "simplex")
            if data.get("internal_prices")
            else None
        ),
    )


def collect_elicited(oracles: Sequence[PreferenceOracle]) -> dict:
    """Pull the (price -> raw human answer) caches out of interactive
    oracles, unwrapping closure layers."""
    out = {}
    for o in oracles:
        inner = getattr(o, "inner", o)
        if isinstance(inner, InteractiveOracle):
            from fairrent.oracles import mask_to_rooms

            out[inner.agent] = [
                (p, sorted(mask_to_rooms(inner.rooms, mask)))
                for p, mask in sorted(inner.cache.items(), key=lambda kv: kv[0].sort_key())
            ]
    return out


def replay_from_dict(data: dict) -> dict:
    """Rebuild the replay tables from a solution file's elicited answers."""
    rooms = tuple(r["name"] for r in data["rooms"])
    replay = {}
    for agent, rows in data.get("elicited_answers", {}).items():
        table = {}
        for row in rows:
            table[_parse_point(row["price"], rooms, "simplex")] = frozenset(row["rooms"])
        replay[agent] = table
    return replay


def dumps_canonical(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Independent verification of solution files
# ---------------------------------------------------------------------------

VERIFY_OK = 0
VERIFY_FAILED = 3
VERIFY_EPS_CERTIFIED = 4
VERIFY_EPS_FAILED = 5


def verify_solution_dict(spec: ProblemSpec, data: dict) -> tuple[int, dict]:
    """Re-check a solution file against its problem.

    Exact solutions are re-verified by querying the (rebuilt) oracles at
    the reported prices.  Eps solutions cannot be verified at a point; the
    cell certificate is checked instead and a distinct code returned.
    """
    solution = solution_from_dict(data)
    if solution.variant != spec.variant:
        raise ProblemError("/variant", "solution and problem variants differ")
    replay = replay_from_dict(data)
    oracles = build_oracles(spec, replay=replay)

    if solution.status == "failed":
        return VERIFY_FAILED, {"error": "solution file records a failed run"}

    if solution.status == "exact":
        if spec.variant == "rental":
            ok, report = verify_envy_free(solution, oracles)
        elif spec.variant == "cake":
            ok, report = verify_envy_free(solution, oracles)
            if ok and not all(
                solution.prices.value(room) > 0
                for room in solution.assignment.mapping.values()
            ):
                ok, report = False, {"error": "an assigned piece has price zero"}
        else:
            ok, report = verify_envy_free(solution, oracles)
            if ok and min(solution.prices.coords) != 0:
                ok, report = False, {"error": "cube prices must touch zero"}
            if ok and any(
                solution.prices.value(room) >= 1
                for room in solution.assignment.mapping.values()
            ):
                ok, report = False, {"error": "an agent holds a ceiling-priced room"}
        return (VERIFY_OK if ok else VERIFY_FAILED), report

    # eps: check the certificate in whichever space it lives
    check_oracles = oracles
    if solution.certificate_space == "internal":
        if spec.variant == "cake":
            check_oracles = [cake_transform(o) for o in oracles]
        elif spec.variant == "exchange":
            check_oracles = [
                cake_transform(exchange_transform(o)) for o in oracles
            ]
        probe = solution.internal_prices
        if probe is None or solution.cell is None or probe != solution.cell.barycenter():
            return VERIFY_EPS_FAILED, {
                "error": "internal certificate lacks a matching cell barycenter"
            }
    ok, report = check_eps_certificate(solution, check_oracles)
    return (VERIFY_EPS_CERTIFIED if ok else VERIFY_EPS_FAILED), report
