"""Independent reference solvers used to cross-check the network simplex.

ssp_solve runs successive shortest paths with node potentials (Dijkstra over
reduced costs in the residual graph), a wholly different algorithm from the
simplex and sharing no code with it. enumerate_tiny brute-forces every integer
coupling of very small instances. Three-way agreement between these and the
simplex is the exactness argument for the whole package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .cost import SeparableCost, ground_cost
from .errors import GridotError, InfeasibleError, TooLargeError, UnbalancedTotalsError
from .graphbuild import FlowNetwork
from .histogram import IntegerHistogram

ENUM_MAX_TOTAL = 6
ENUM_MAX_BINS = 4

_INF = np.int64(2**62)


@dataclass(frozen=True)
class OracleSolution:
    objective: int
    method: str


@njit(cache=True, nogil=True)
def _heap_push(keys, nodes, hs, key, node):
    i = hs
    keys[i] = key
    nodes[i] = node
    while i > 0:
        par = (i - 1) >> 1
        if keys[par] <= keys[i]:
            break
        keys[par], keys[i] = keys[i], keys[par]
        nodes[par], nodes[i] = nodes[i], nodes[par]
        i = par
    return hs + 1


@njit(cache=True, nogil=True)
def _heap_pop(keys, nodes, hs):
    key = keys[0]
    node = nodes[0]
    hs -= 1
    keys[0] = keys[hs]
    nodes[0] = nodes[hs]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= hs:
            break
        small = l
        r = l + 1
        if r < hs and keys[r] < keys[l]:
            small = r
        if keys[i] <= keys[small]:
            break
        keys[i], keys[small] = keys[small], keys[i]
        nodes[i], nodes[small] = nodes[small], nodes[i]
        i = small
    return key, node, hs


@njit(cache=True, nogil=True)
def _ssp(n, tails, heads, costs, supplies):
    m = tails.shape[0]
    # Residual arcs: slot a < m is the forward copy of arc a, slot a + m the
    # backward copy with negated cost and capacity equal to the forward flow.
    rsrc = np.empty(2 * m, np.int32)
    rdst = np.empty(2 * m, np.int32)
    rcst = np.empty(2 * m, np.int64)
    for a in range(m):
        rsrc[a] = tails[a]
        rdst[a] = heads[a]
        rcst[a] = costs[a]
        rsrc[a + m] = heads[a]
        rdst[a + m] = tails[a]
        rcst[a + m] = -costs[a]

    indptr = np.zeros(n + 1, np.int64)
    for a in range(2 * m):
        indptr[rsrc[a] + 1] += 1
    for v in range(n):
        indptr[v + 1] += indptr[v]
    adj = np.empty(2 * m, np.int64)
    fill = indptr.copy()
    for a in range(2 * m):
        adj[fill[rsrc[a]]] = a
        fill[rsrc[a]] += 1

    excess = supplies.copy()
    flow = np.zeros(m, np.int64)
    psi = np.zeros(n, np.int64)
    dist = np.empty(n, np.int64)
    seen = np.empty(n, np.uint8)
    parc = np.empty(n, np.int64)
    cap = 4 * m + 2 * n + 16
    hkeys = np.empty(cap, np.int64)
    hnodes = np.empty(cap, np.int64)

    while True:
        has_excess = False
        for v in range(n):
            if excess[v] > 0:
                has_excess = True
                break
        if not has_excess:
            break

        for v in range(n):
            dist[v] = _INF
            seen[v] = 0
            parc[v] = -1
        hs = 0
        for v in range(n):
            if excess[v] > 0:
                dist[v] = 0
                hs = _heap_push(hkeys, hnodes, hs, 0, v)
        t = -1
        while hs > 0:
            key, u64, hs = _heap_pop(hkeys, hnodes, hs)
            u = int(u64)
            if seen[u] == 1 or key != dist[u]:
                continue
            seen[u] = 1
            if excess[u] < 0:
                t = u
                break
            for k in range(indptr[u], indptr[u + 1]):
                a = adj[k]
                if a >= m and flow[a - m] == 0:
                    continue
                v = rdst[a]
                if seen[v] == 1:
                    continue
                nd = dist[u] + rcst[a] + psi[u] - psi[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parc[v] = a
                    hs = _heap_push(hkeys, hnodes, hs, nd, v)
        if t < 0:
            return 1, np.int64(0), flow  # some excess cannot reach any deficit

        dt = dist[t]
        for v in range(n):
            if dist[v] < dt:
                psi[v] += dist[v]
            else:
                psi[v] += dt

        delta = -excess[t]
        v = t
        while parc[v] >= 0:
            a = parc[v]
            if a >= m and flow[a - m] < delta:
                delta = flow[a - m]
            v = rsrc[a]
        if excess[v] < delta:
            delta = excess[v]
        excess[v] -= delta
        excess[t] += delta
        v = t
        while parc[v] >= 0:
            a = parc[v]
            if a >= m:
                flow[a - m] -= delta
            else:
                flow[a] += delta
            v = rsrc[a]

    obj = np.int64(0)
    for a in range(m):
        obj += costs[a] * flow[a]
    return 0, obj, flow


def ssp_solve(net: FlowNetwork) -> OracleSolution:
    """Exact min-cost flow by successive shortest paths with potentials."""
    if int(net.costs.min() if net.arc_count else 0) < 0:
        raise GridotError("ssp oracle requires nonnegative costs")
    if int(net.supplies.sum()) != 0:
        raise UnbalancedTotalsError("supplies must sum to zero")
    code, obj, _ = _ssp(net.node_count, net.tails, net.heads, net.costs, net.supplies)
    if code != 0:
        raise InfeasibleError("no feasible flow for the given supplies")
    return OracleSolution(int(obj), "ssp")


def enumerate_tiny(mu: IntegerHistogram, nu: IntegerHistogram, cost: SeparableCost) -> OracleSolution:
    """Exhaustive minimum over all integer couplings of a tiny instance."""
    n = mu.shape.nbins
    if n > ENUM_MAX_BINS or mu.total > ENUM_MAX_TOTAL or nu.total > ENUM_MAX_TOTAL:
        raise TooLargeError(
            f"enumeration handles at most {ENUM_MAX_BINS} bins and total {ENUM_MAX_TOTAL}"
        )
    if mu.shape != nu.shape:
        raise GridotError("histograms must share a grid")
    if mu.total != nu.total:
        raise UnbalancedTotalsError(f"totals differ: {mu.total} vs {nu.total}")

    coords = [mu.shape.unravel(i) for i in range(n)]
    gc = [[ground_cost(cost, coords[x], coords[y]) for y in range(n)] for x in range(n)]
    row = [int(v) for v in mu.mass]
    remaining = [int(v) for v in nu.mass]
    best = [None]

    def place(x: int, acc: int) -> None:
        if best[0] is not None and acc >= best[0]:
            return
        if x == n:
            best[0] = acc
            return
        need = row[x]

        def split(y: int, left: int, cost_so_far: int) -> None:
            if best[0] is not None and cost_so_far >= best[0]:
                return
            if y == n - 1:
                if left <= remaining[y]:
                    remaining[y] -= left
                    place(x + 1, cost_so_far + left * gc[x][y])
                    remaining[y] += left
                return
            for take in range(min(left, remaining[y]) + 1):
                remaining[y] -= take
                split(y + 1, left - take, cost_so_far + take * gc[x][y])
                remaining[y] += take

        split(0, need, acc)

    place(0, 0)
    assert best[0] is not None  # balanced totals always admit a coupling
    return OracleSolution(best[0], "enumeration")
