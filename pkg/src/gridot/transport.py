"""Distances, transport plans, and per-axis flow families.

A TransportPlan couples source and target bins directly. A FlowChart holds the
equivalent per-axis view: family i moves coordinate i, keyed by the mixed
coordinate (b_1..b_{i-1}, a_i..a_d) plus the new value b_i. Converting flows
back to a plan glues the families one axis at a time through their shared
mid-marginals; that gluing is carried out in exact rational arithmetic so the
result's marginals and cost match the flows exactly, not just to float
precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .cost import SeparableCost, ground_cost, power_cost
from .errors import (
    GridotError,
    InconsistentFlowsError,
    InvalidPlanError,
    ShapeMismatchError,
)
from .graphbuild import FlowNetwork, build_bipartite, build_multipartite
from .histogram import (
    DEFAULT_TARGET_TOTAL,
    GridShape,
    Histogram,
    IntegerHistogram,
    integerize,
)
from .netsimplex import OPTIMAL, FlowSolution, SolveStats, solve

METHODS = ("multipartite", "bipartite")


def _exact(value) -> int | Fraction:
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else value
    raise GridotError(f"masses must be integers or Fractions, got {type(value).__name__}")


@dataclass
class TransportPlan:
    """Sparse coupling keyed by (flat source bin, flat target bin)."""

    shape: GridShape
    entries: dict[tuple[int, int], int | Fraction]

    def __post_init__(self) -> None:
        n = self.shape.nbins
        clean: dict[tuple[int, int], int | Fraction] = {}
        for (x, y), v in self.entries.items():
            v = _exact(v)
            if v < 0:
                raise InvalidPlanError(f"negative mass {v} at ({x}, {y})")
            if not (0 <= x < n and 0 <= y < n):
                raise InvalidPlanError(f"bin pair ({x}, {y}) outside grid")
            if v != 0:
                clean[(int(x), int(y))] = v
        self.entries = clean

    @property
    def total(self) -> int | Fraction:
        return sum(self.entries.values(), start=0)

    def marginals(self) -> tuple[list, list]:
        """Row and column sums as exact values, indexed by flat bin."""
        n = self.shape.nbins
        mu = [0] * n
        nu = [0] * n
        for (x, y), v in self.entries.items():
            mu[x] += v
            nu[y] += v
        return mu, nu

    def cost_under(self, cost: SeparableCost) -> int | Fraction:
        acc = 0
        for (x, y), v in self.entries.items():
            acc += ground_cost(cost, self.shape.unravel(x), self.shape.unravel(y)) * v
        return _exact(acc) if acc else 0


@dataclass
class FlowChart:
    """Per-axis flow families; families[i-1] moves coordinate i.

    Keys are (b_1..b_{i-1}, a_i..a_d, b_i): the mixed coordinate before the
    move plus the coordinate value after it.
    """

    shape: GridShape
    families: tuple[dict[tuple[int, ...], int | Fraction], ...]

    def __post_init__(self) -> None:
        d = self.shape.ndim
        if len(self.families) != d:
            raise InconsistentFlowsError(f"need {d} families, got {len(self.families)}")
        cleaned = []
        for i, fam in enumerate(self.families, start=1):
            out: dict[tuple[int, ...], int | Fraction] = {}
            for key, v in fam.items():
                if len(key) != d + 1:
                    raise InconsistentFlowsError(f"family {i} key {key} must have {d + 1} entries")
                for axis, c in enumerate(key[:d]):
                    if not 0 <= c < self.shape.dims[axis]:
                        raise InconsistentFlowsError(f"family {i} key {key} outside grid")
                if not 0 <= key[d] < self.shape.dims[i - 1]:
                    raise InconsistentFlowsError(f"family {i} key {key} outside grid")
                v = _exact(v)
                if v < 0:
                    raise InconsistentFlowsError(f"negative flow {v} in family {i}")
                if v != 0:
                    out[tuple(int(c) for c in key)] = v
            cleaned.append(out)
        self.families = tuple(cleaned)

    def flow_cost(self, cost: SeparableCost) -> int | Fraction:
        acc = 0
        for i, fam in enumerate(self.families, start=1):
            table = cost.tables[i - 1]
            for key, v in fam.items():
                acc += int(table[key[i - 1], key[-1]]) * v
        return _exact(acc) if acc else 0

    def source_marginal(self) -> list:
        """Mass per source bin implied by family 1 (sums over b_1)."""
        out = [0] * self.shape.nbins
        for key, v in self.families[0].items():
            out[self.shape.ravel(key[:-1])] += v
        return out

    def target_marginal(self) -> list:
        """Mass per target bin implied by family d (sums over a_d)."""
        d = self.shape.ndim
        out = [0] * self.shape.nbins
        for key, v in self.families[d - 1].items():
            out[self.shape.ravel(key[: d - 1] + (key[d],))] += v
        return out

    def validate_connections(self) -> None:
        """Check that adjacent families agree on their shared mid-marginals."""
        d = self.shape.ndim
        for i in range(1, d):
            left: dict[tuple[int, ...], int | Fraction] = {}
            for key, v in self.families[i - 1].items():
                shared = key[: i - 1] + (key[d],) + key[i:d]
                left[shared] = left.get(shared, 0) + v
            right: dict[tuple[int, ...], int | Fraction] = {}
            for key, v in self.families[i].items():
                shared = key[:d]
                right[shared] = right.get(shared, 0) + v
            left = {k: v for k, v in left.items() if v != 0}
            right = {k: v for k, v in right.items() if v != 0}
            if left != right:
                raise InconsistentFlowsError(
                    f"families {i} and {i + 1} disagree on their shared marginal"
                )


def plan_to_flows(plan: TransportPlan, shape: GridShape | None = None) -> FlowChart:
    """Project a plan onto its d per-axis flow families.

    Family i aggregates plan mass over (a_1..a_{i-1}, b_{i+1}..b_d), the
    coordinates already moved or not yet moved when axis i changes.
    """
    shape = shape or plan.shape
    if shape != plan.shape:
        raise ShapeMismatchError("plan and shape disagree")
    d = shape.ndim
    families: list[dict[tuple[int, ...], int | Fraction]] = [{} for _ in range(d)]
    for (fx, fy), v in plan.entries.items():
        x = shape.unravel(fx)
        y = shape.unravel(fy)
        for i in range(1, d + 1):
            key = y[: i - 1] + x[i - 1 :] + (y[i - 1],)
            fam = families[i - 1]
            fam[key] = fam.get(key, 0) + v
    return FlowChart(shape, tuple(families))


def flows_to_plan(flows: FlowChart, shape: GridShape | None = None) -> TransportPlan:
    """Glue the d families into one coupling with the same cost and marginals.

    Adjacent families are combined through their shared mid-marginal using the
    product rule sigma * f / m (with 0/0 = 0), in exact rational arithmetic.
    The result is one valid coupling among possibly many; its per-axis
    projections reproduce the input families exactly.
    """
    shape = shape or flows.shape
    if shape != flows.shape:
        raise ShapeMismatchError("flows and shape disagree")
    flows.validate_connections()
    d = shape.ndim

    sigma: dict[tuple[tuple[int, ...], tuple[int, ...]], Fraction] = {}
    for key, v in flows.families[0].items():
        sigma[(key[:d], (key[d],))] = Fraction(v)

    for i in range(2, d + 1):
        mid_mass: dict[tuple[int, ...], Fraction] = {}
        for (a, bs), v in sigma.items():
            mid = bs + a[i - 1 :]
            mid_mass[mid] = mid_mass.get(mid, Fraction(0)) + v
        by_mid: dict[tuple[int, ...], list[tuple[int, Fraction]]] = {}
        for key, v in flows.families[i - 1].items():
            mid = key[:d]
            by_mid.setdefault(mid, []).append((key[d], Fraction(v)))
        nxt: dict[tuple[tuple[int, ...], tuple[int, ...]], Fraction] = {}
        for (a, bs), v in sigma.items():
            mid = bs + a[i - 1 :]
            mm = mid_mass[mid]
            for b_i, fv in by_mid.get(mid, ()):
                key = (a, bs + (b_i,))
                nxt[key] = nxt.get(key, Fraction(0)) + v * fv / mm
        sigma = nxt

    entries: dict[tuple[int, int], int | Fraction] = {}
    for (a, bs), v in sigma.items():
        if v:
            entries[(shape.ravel(a), shape.ravel(bs))] = _exact(v)
    return TransportPlan(shape, entries)


def flow_cost(flows: FlowChart, cost: SeparableCost) -> int | Fraction:
    """Total cost of a FlowChart: sum over families of table[a_i, b_i] * flow."""
    return flows.flow_cost(cost)


def flows_from_solution(net: FlowNetwork, solution: FlowSolution) -> FlowChart:
    """Read the d flow families off an optimal multipartite solution."""
    if net.kind != "multipartite" or net.layer_arc_offsets is None:
        raise GridotError("flow families require a multipartite network")
    shape = net.shape
    n = shape.nbins
    d = shape.ndim
    strides = shape.strides()
    offsets = net.layer_arc_offsets
    families: list[dict[tuple[int, ...], int | Fraction]] = [{} for _ in range(d)]
    for a in np.flatnonzero(solution.flows):
        layer = 1
        while offsets[layer] <= a:
            layer += 1
        axis = layer - 1
        tail_local = int(net.tails[a]) - (layer - 1) * n
        head_local = int(net.heads[a]) - layer * n
        b = (head_local // strides[axis]) % shape.dims[axis]
        key = shape.unravel(tail_local) + (b,)
        families[axis][key] = int(solution.flows[a])
    return FlowChart(shape, tuple(families))


def plan_from_solution(net: FlowNetwork, solution: FlowSolution) -> TransportPlan:
    """Read a coupling off an optimal bipartite solution."""
    if net.kind != "bipartite":
        raise GridotError("direct plans require a bipartite network")
    n = net.shape.nbins
    entries: dict[tuple[int, int], int | Fraction] = {}
    for a in np.flatnonzero(solution.flows):
        entries[(int(net.tails[a]), int(net.heads[a]) - n)] = int(solution.flows[a])
    return TransportPlan(net.shape, entries)


def write_plan_csv(plan: TransportPlan, path: str | Path) -> None:
    """Write plan triples: d source coords, d target coords, mass (int or p/q)."""
    d = plan.shape.ndim
    xs = ",".join(f"x{i + 1}" for i in range(d))
    ys = ",".join(f"y{i + 1}" for i in range(d))
    with open(path, "w") as fh:
        fh.write(f"# columns: {xs},{ys},mass\n")
        for (fx, fy) in sorted(plan.entries):
            x = plan.shape.unravel(fx)
            y = plan.shape.unravel(fy)
            v = plan.entries[(fx, fy)]
            fh.write(",".join(str(c) for c in x + y) + f",{v}\n")


@dataclass
class DistanceResult:
    """Exact transport cost and derived distance for integerized inputs."""

    distance: float
    objective: int
    p: int
    method: str
    target_total: int
    plan: TransportPlan | None
    stats: SolveStats


def _as_integer(h, target_total: int) -> IntegerHistogram:
    if isinstance(h, IntegerHistogram):
        return h
    if isinstance(h, Histogram):
        return integerize(h, target_total)
    raise GridotError(f"expected a histogram, got {type(h).__name__}")


def wasserstein(
    mu,
    nu,
    p: int = 2,
    method: str = "multipartite",
    target_total: int = DEFAULT_TARGET_TOTAL,
    spacing: float = 1.0,
    want_plan: bool = False,
    block_size: int | None = None,
) -> DistanceResult:
    """Order-p Wasserstein distance between two histograms on one grid.

    Inputs are integerized to target_total (IntegerHistogram inputs pass
    through untouched), the chosen network is solved exactly, and the distance
    is (objective / total)^(1/p) scaled by the grid spacing.
    """
    p = int(p)
    if p < 1:
        raise GridotError(f"order p must be a positive integer, got {p}")
    if method not in METHODS:
        raise GridotError(f"method must be one of {METHODS}, got {method!r}")
    if not spacing > 0:
        raise GridotError(f"spacing must be positive, got {spacing}")
    imu = _as_integer(mu, target_total)
    inu = _as_integer(nu, target_total)
    if imu.shape != inu.shape:
        raise ShapeMismatchError(f"grids differ: {imu.shape.dims} vs {inu.shape.dims}")

    cost = power_cost(imu.shape, p)
    build = build_multipartite if method == "multipartite" else build_bipartite
    net = build(imu, inu, cost)
    sol = solve(net, block_size)
    assert sol.status == OPTIMAL  # complete/layered networks are always feasible

    distance = float(sol.objective / imu.total) ** (1.0 / p) * spacing
    plan = None
    if want_plan:
        if method == "multipartite":
            plan = flows_to_plan(flows_from_solution(net, sol))
        else:
            plan = plan_from_solution(net, sol)
    return DistanceResult(distance, sol.objective, p, method, imu.total, plan, sol.stats)


def emd(
    mu,
    nu,
    cost: SeparableCost,
    method: str = "multipartite",
    target_total: int = DEFAULT_TARGET_TOTAL,
) -> float:
    """Earth mover's distance: optimal cost divided by transported mass."""
    if method not in METHODS:
        raise GridotError(f"method must be one of {METHODS}, got {method!r}")
    imu = _as_integer(mu, target_total)
    inu = _as_integer(nu, target_total)
    build = build_multipartite if method == "multipartite" else build_bipartite
    sol = solve(build(imu, inu, cost))
    assert sol.status == OPTIMAL
    return sol.objective / imu.total
