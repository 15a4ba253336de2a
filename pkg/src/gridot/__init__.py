"""Exact Wasserstein distances between d-dimensional histograms.

The distance of order p between two histograms on a common grid is computed
by integerizing the masses, building an uncapacitated min-cost-flow network
(either the classic bipartite one or a layered multipartite one that exploits
separable ground costs), and solving it exactly with a network simplex over
integer arithmetic. Entropic scaling variants are included as baselines.
"""

from .cost import SeparableCost, ground_cost, load_cost_tables, power_cost
from .errors import (
    DegenerateBoundsError,
    EmptyInputError,
    GridotError,
    InconsistentFlowsError,
    IndexOutOfRangeError,
    InfeasibleError,
    InvalidPlanError,
    LengthMismatchError,
    NegativeMassError,
    NumericalUnderflowError,
    OverflowGuardError,
    ParseError,
    ShapeMismatchError,
    TooLargeError,
    UnbalancedTotalsError,
    UnsupportedFormatError,
    ZeroOptimumError,
    ZeroTotalError,
)
from .graphbuild import FlowNetwork, build_bipartite, build_multipartite, write_dimacs
from .histogram import (
    DEFAULT_TARGET_TOTAL,
    GridShape,
    Histogram,
    IntegerHistogram,
    bin_points,
    from_dense,
    integerize,
    load_csv,
    load_pgm,
    load_points_csv,
    write_csv,
)
from .netsimplex import INFEASIBLE, OPTIMAL, FlowSolution, SolveStats, solve
from .oracle import OracleSolution, enumerate_tiny, ssp_solve
from .sinkhorn import (
    SinkhornConfig,
    SinkhornResult,
    gap,
    improved_sinkhorn_2d,
    median_ground_cost,
    sinkhorn,
)
from .transport import (
    DistanceResult,
    FlowChart,
    TransportPlan,
    emd,
    flow_cost,
    flows_from_solution,
    flows_to_plan,
    plan_from_solution,
    plan_to_flows,
    wasserstein,
    write_plan_csv,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TARGET_TOTAL",
    "DegenerateBoundsError",
    "DistanceResult",
    "EmptyInputError",
    "FlowChart",
    "FlowNetwork",
    "FlowSolution",
    "GridShape",
    "GridotError",
    "Histogram",
    "INFEASIBLE",
    "InconsistentFlowsError",
    "IndexOutOfRangeError",
    "InfeasibleError",
    "IntegerHistogram",
    "InvalidPlanError",
    "LengthMismatchError",
    "NegativeMassError",
    "NumericalUnderflowError",
    "OPTIMAL",
    "OracleSolution",
    "OverflowGuardError",
    "ParseError",
    "SeparableCost",
    "ShapeMismatchError",
    "SinkhornConfig",
    "SinkhornResult",
    "SolveStats",
    "TooLargeError",
    "TransportPlan",
    "UnbalancedTotalsError",
    "UnsupportedFormatError",
    "ZeroOptimumError",
    "ZeroTotalError",
    "bin_points",
    "build_bipartite",
    "build_multipartite",
    "emd",
    "enumerate_tiny",
    "flow_cost",
    "flows_from_solution",
    "flows_to_plan",
    "from_dense",
    "gap",
    "ground_cost",
    "improved_sinkhorn_2d",
    "integerize",
    "load_cost_tables",
    "load_csv",
    "load_pgm",
    "load_points_csv",
    "median_ground_cost",
    "plan_from_solution",
    "plan_to_flows",
    "power_cost",
    "sinkhorn",
    "solve",
    "ssp_solve",
    "wasserstein",
    "write_csv",
    "write_dimacs",
    "write_plan_csv",
]
