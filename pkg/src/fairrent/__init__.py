"""Envy-free room assignment and rent division.

Computes price vectors at which every agent can be assigned a room they
demand, with room capacities exactly filled, for preferences that may
depend on the entire price vector.  Includes reductions for cake/chore
division and for exchange economies with indivisible goods, a JSON batch
CLI, and a socket session server for interactive preference elicitation.
"""

from fairrent.matching import (
    Assignment,
    DemandGraph,
    FlowWitness,
    build_demand_graph,
    deficiency,
    feasible_assignment,
    has_sufficient_demand,
    neighborhood_size,
    union_demand_graph,
)
from fairrent.oracles import (
    AxiomCheck,
    AxiomReport,
    CallableOracle,
    DecisionRule,
    InteractiveOracle,
    OracleContractError,
    PreferenceOracle,
    check_axioms,
    decision_list_oracle,
    exchange_quasilinear_oracle,
    free_room_closure,
    hungry_cake_oracle,
    quasilinear_oracle,
)
from fairrent.simplex import (
    BalancedFamily,
    CubePoint,
    DomainError,
    GridCell,
    PriceVector,
    cake_embed,
    cake_image_position,
    cake_unembed,
    canonical_balanced_families,
    cube_to_simplex,
    locate_cells,
    simplex_to_cube,
    triangulate,
)
from fairrent.solver import (
    Certificate,
    PropertyViolation,
    Solution,
    SolverConfig,
    SolverStats,
    balanced_cover_witness,
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

__all__ = [
    "Assignment",
    "AxiomCheck",
    "AxiomReport",
    "BalancedFamily",
    "CakeProblem",
    "CallableOracle",
    "Certificate",
    "CubePoint",
    "DecisionRule",
    "DemandGraph",
    "DomainError",
    "ExchangeProblem",
    "FlowWitness",
    "GridCell",
    "InteractiveOracle",
    "OracleContractError",
    "PreferenceOracle",
    "PriceVector",
    "PropertyViolation",
    "Solution",
    "SolverConfig",
    "SolverStats",
    "balanced_cover_witness",
    "build_demand_graph",
    "cake_embed",
    "cake_image_position",
    "cake_transform",
    "cake_unembed",
    "canonical_balanced_families",
    "check_axioms",
    "check_eps_certificate",
    "cube_to_simplex",
    "decision_list_oracle",
    "deficiency",
    "exchange_quasilinear_oracle",
    "exchange_transform",
    "feasible_assignment",
    "free_room_closure",
    "has_sufficient_demand",
    "hungry_cake_oracle",
    "locate_cells",
    "neighborhood_size",
    "quasilinear_oracle",
    "simplex_to_cube",
    "solve_cake",
    "solve_exchange",
    "solve_rental",
    "triangulate",
    "union_demand_graph",
    "verify_envy_free",
]

__version__ = "0.1.0"
