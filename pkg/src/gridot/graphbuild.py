"""Builders for the bipartite and layered (multipartite) min-cost-flow networks.

Both formulations share one arc-list representation: integer costs, int32
endpoints, and a signed supply per node (positive sends, negative receives).
The bipartite network has 2n nodes and n^2 arcs for n bins. The layered
network stacks d+1 copies of the grid; an arc between layers l-1 and l changes
coordinate l only, so it has (d+1)n nodes and n * sum(N_i) arcs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cost import SeparableCost
from .errors import (
    GridotError,
    IndexOutOfRangeError,
    OverflowGuardError,
    ShapeMismatchError,
    UnbalancedTotalsError,
)
from .histogram import GridShape, IntegerHistogram

# Keeps big-M reduced-cost arithmetic inside int64 (see netsimplex).
SUPPLY_COST_GUARD = 2**59

# int32 node ids plus an artificial root must stay addressable.
MAX_NODES = 2**31 - 2


@dataclass(frozen=True)
class FlowNetwork:
    """Uncapacitated min-cost-flow instance over integer data."""

    node_count: int
    tails: np.ndarray
    heads: np.ndarray
    costs: np.ndarray
    supplies: np.ndarray
    kind: str
    shape: GridShape
    layer_arc_offsets: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        for name, dtype in (
            ("tails", np.int32),
            ("heads", np.int32),
            ("costs", np.int64),
            ("supplies", np.int64),
        ):
            arr = np.asarray(getattr(self, name))
            if arr.dtype != dtype:
                arr = arr.astype(dtype)
            object.__setattr__(self, name, arr)
        if self.supplies.shape[0] != self.node_count:
            raise GridotError("one supply per node required")
        if np.any(self.costs < 0):
            raise GridotError("arc costs must be nonnegative")
        if int(self.supplies.sum()) != 0:
            raise UnbalancedTotalsError("supplies must sum to zero")
        for arr in (self.tails, self.heads, self.costs, self.supplies):
            arr.flags.writeable = False

    @property
    def arc_count(self) -> int:
        return int(self.tails.shape[0])

    @property
    def arc_bytes(self) -> int:
        """Bytes held by the per-arc arrays (tails, heads, costs)."""
        return self.tails.nbytes + self.heads.nbytes + self.costs.nbytes


class NodeIndexer:
    """Bijection between layer-l mixed coordinates and flat node ids.

    Layer l holds one node per grid bin; ids are contiguous, layer l occupying
    [l*n, (l+1)*n) with the usual row-major order inside the layer.
    """

    def __init__(self, shape: GridShape, layer: int):
        if layer < 0:
            raise IndexOutOfRangeError(f"layer {layer} negative")
        self.shape = shape
        self.layer = layer

    def encode(self, coords: tuple[int, ...]) -> int:
        return self.layer * self.shape.nbins + self.shape.ravel(coords)

    def decode(self, node: int) -> tuple[int, ...]:
        n = self.shape.nbins
        lo = self.layer * n
        if not lo <= node < lo + n:
            raise IndexOutOfRangeError(f"node {node} outside layer {self.layer}")
        return self.shape.unravel(node - lo)


def _check_inputs(mu: IntegerHistogram, nu: IntegerHistogram, cost: SeparableCost) -> None:
    if not isinstance(mu, IntegerHistogram) or not isinstance(nu, IntegerHistogram):
        raise GridotError("builders take IntegerHistogram inputs; integerize first")
    if mu.shape != nu.shape:
        raise ShapeMismatchError(f"grids differ: {mu.shape.dims} vs {nu.shape.dims}")
    if not cost.matches(mu.shape):
        raise ShapeMismatchError(
            f"cost tables sized {cost.axis_sizes} do not match grid {mu.shape.dims}"
        )
    if mu.total != nu.total:
        raise UnbalancedTotalsError(f"totals differ: {mu.total} vs {nu.total}")
    if cost.max_ground_cost * mu.total >= SUPPLY_COST_GUARD:
        raise OverflowGuardError(
            "max ground cost times total mass exceeds the exact-arithmetic guard"
        )


def build_bipartite(mu: IntegerHistogram, nu: IntegerHistogram, cost: SeparableCost) -> FlowNetwork:
    """Complete bipartite network: every source bin to every target bin."""
    _check_inputs(mu, nu, cost)
    shape = mu.shape
    n = shape.nbins
    if 2 * n > MAX_NODES:
        raise OverflowGuardError(f"{2 * n} nodes exceed the node index range")

    dense = np.zeros((n, n), dtype=np.int64)
    for axis, table in enumerate(cost.tables):
        ci = shape.axis_coords(axis)
        dense += table[ci[:, None], ci[None, :]]

    tails = np.repeat(np.arange(n, dtype=np.int32), n)
    heads = np.tile(np.arange(n, 2 * n, dtype=np.int32), n)
    supplies = np.concatenate([mu.mass, -nu.mass])
    net = FlowNetwork(2 * n, tails, heads, dense.ravel(), supplies, "bipartite", shape)
    assert net.node_count == 2 * n and net.arc_count == n * n
    return net


def build_multipartite(mu: IntegerHistogram, nu: IntegerHistogram, cost: SeparableCost) -> FlowNetwork:
    """Layered network changing one coordinate per layer transition.

    A node in layer l carries the mixed coordinate (b_1..b_l, a_{l+1}..a_d);
    arcs from layer l-1 to layer l rewrite coordinate l from a_l to b_l at cost
    tables[l-1][a_l, b_l]. Supplies sit on layer 0 (+mu) and layer d (-nu).
    """
    _check_inputs(mu, nu, cost)
    shape = mu.shape
    n = shape.nbins
    d = shape.ndim
    if (d + 1) * n > MAX_NODES:
        raise OverflowGuardError(f"{(d + 1) * n} nodes exceed the node index range")

    strides = shape.strides()
    flat = np.arange(n, dtype=np.int64)
    tails_parts = []
    heads_parts = []
    costs_parts = []
    offsets = [0]
    for layer in range(1, d + 1):
        axis = layer - 1
        nl = shape.dims[axis]
        coord = shape.axis_coords(axis)
        zeroed = flat - coord * strides[axis]
        b = np.tile(np.arange(nl, dtype=np.int64), n)
        tails_parts.append(((layer - 1) * n + np.repeat(flat, nl)).astype(np.int32))
        heads_parts.append((layer * n + np.repeat(zeroed, nl) + b * strides[axis]).astype(np.int32))
        costs_parts.append(cost.tables[axis][np.repeat(coord, nl), b])
        offsets.append(offsets[-1] + n * nl)

    supplies = np.zeros((d + 1) * n, dtype=np.int64)
    supplies[:n] = mu.mass
    supplies[d * n :] = -nu.mass
    net = FlowNetwork(
        (d + 1) * n,
        np.concatenate(tails_parts),
        np.concatenate(heads_parts),
        np.concatenate(costs_parts),
        supplies,
        "multipartite",
        shape,
        tuple(offsets),
    )
    assert net.node_count == (d + 1) * n and net.arc_count == n * sum(shape.dims)
    return net


def write_dimacs(net: FlowNetwork, path: str | Path) -> None:
    """Write the network in DIMACS min-cost-flow format (1-based node ids)."""
    cap = int(net.supplies[net.supplies > 0].sum())
    with open(path, "w") as fh:
        fh.write(f"c {net.kind} network on grid {net.shape.dims}\n")
        fh.write(f"p min {net.node_count} {net.arc_count}\n")
        for v in np.flatnonzero(net.supplies):
            fh.write(f"n {v + 1} {int(net.supplies[v])}\n")
        for t, h, c in zip(net.tails, net.heads, net.costs):
            fh.write(f"a {t + 1} {h + 1} 0 {cap} {c}\n")
