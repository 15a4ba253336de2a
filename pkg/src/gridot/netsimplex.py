"""Primal network simplex for uncapacitated min-cost flow on integer data.

The basis is a spanning tree hung on an artificial root. Every node starts
connected to the root by an artificial big-M arc carrying its supply, which is
strongly feasible (zero-flow artificial arcs point at the root). Pricing scans
a wrapping block of arcs from the last stop and takes the most negative
reduced cost in the block. The leaving arc is the last blocking arc met when
walking the pivot cycle in its orientation starting at the apex, which keeps
the basis strongly feasible and the method finite despite degeneracy. All
arithmetic is 64-bit integer; callers guard the ranges.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import GridotError, OverflowGuardError
from .graphbuild import FlowNetwork

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"

# Reduced costs reach ~2M + 2n*cmax; keep them clear of int64.
DUAL_GUARD = 2**61


@njit(cache=True, nogil=True)
def _find_entering(tail, head, cost, pi, m, start, block_size):
    """Most negative reduced cost within the first non-clean block after start.

    Returns (arc, next_start); arc is -1 when every arc prices nonnegative.
    """
    best = -1
    best_rc = 0
    e = start
    cnt = block_size
    for _ in range(m):
        rc = cost[e] + pi[tail[e]] - pi[head[e]]
        if rc < best_rc:
            best_rc = rc
            best = e
        cnt -= 1
        if cnt == 0:
            if best >= 0:
                return best, (best + 1) % m
            cnt = block_size
        e += 1
        if e == m:
            e = 0
    if best >= 0:
        return best, (best + 1) % m
    return -1, start


@njit(cache=True, nogil=True)
def _init_basis(n, m, tail, head, cost, flow, supplies, M, pi, parent, pred, nxt, prv, last, size):
    root = n
    for v in range(n):
        a = m + v
        s = supplies[v]
        if s >= 0:
            tail[a] = v
            head[a] = root
            flow[a] = s
            pi[v] = -M
        else:
            tail[a] = root
            head[a] = v
            flow[a] = -s
            pi[v] = M
        cost[a] = M
        parent[v] = root
        pred[v] = a
        size[v] = 1
        last[v] = v
        nxt[v] = v + 1 if v + 1 < n else root
        prv[v] = v - 1 if v > 0 else root
    parent[root] = -1
    pred[root] = -1
    pi[root] = 0
    size[root] = n + 1
    last[root] = n - 1
    nxt[root] = 0
    prv[root] = n - 1


@njit(cache=True, nogil=True)
def _remove_edge(s, t, parent, pred, size, nxt, prv, last):
    size_t = size[t]
    prev_t = prv[t]
    last_t = last[t]
    next_last_t = nxt[last_t]
    parent[t] = -1
    pred[t] = -1
    nxt[prev_t] = next_last_t
    prv[next_last_t] = prev_t
    nxt[last_t] = t
    prv[t] = last_t
    w = s
    while w != -1:
        size[w] -= size_t
        if last[w] == last_t:
            last[w] = prev_t
        w = parent[w]


@njit(cache=True, nogil=True)
def _make_root(q, parent, pred, size, nxt, prv, last, buf):
    count = 0
    w = q
    while w != -1:
        buf[count] = w
        count += 1
        w = parent[w]
    for k in range(count - 1, 0, -1):
        p = buf[k]
        c = buf[k - 1]
        size_p = size[p]
        last_p = last[p]
        prev_c = prv[c]
        last_c = last[c]
        next_last_c = nxt[last_c]
        parent[p] = c
        parent[c] = -1
        pred[p] = pred[c]
        pred[c] = -1
        size[p] = size_p - size[c]
        size[c] = size_p
        nxt[prev_c] = next_last_c
        prv[next_last_c] = prev_c
        nxt[last_c] = c
        prv[c] = last_c
        if last_p == last_c:
            last[p] = prev_c
            last_p = prev_c
        prv[p] = last_c
        nxt[last_c] = p
        nxt[last_p] = c
        prv[c] = last_p
        last[c] = last_p


@njit(cache=True, nogil=True)
def _add_edge(a, p, q, parent, pred, size, nxt, prv, last):
    last_p = last[p]
    next_last_p = nxt[last_p]
    size_q = size[q]
    last_q = last[q]
    parent[q] = p
    pred[q] = a
    nxt[last_p] = q
    prv[q] = last_p
    prv[next_last_p] = last_q
    nxt[last_q] = next_last_p
    w = p
    while w != -1:
        size[w] += size_q
        if last[w] == last_p:
            last[w] = last_q
        w = parent[w]


@njit(cache=True, nogil=True)
def _run(n, m, tail, head, cost, flow, pi, parent, pred, nxt, prv, last, size, block_size, start):
    root = n
    pivots = 0
    buf = np.empty(n + 1, np.int32)
    while True:
        e, start = _find_entering(tail, head, cost, pi, m, start, block_size)
        if e < 0:
            break
        pivots += 1
        u = tail[e]
        v = head[e]
        rc_e = cost[e] + pi[u] - pi[v]

        # Apex of the pivot cycle: climb the smaller subtree until the walks meet.
        p = u
        q = v
        while p != q:
            if size[p] < size[q]:
                p = parent[p]
            elif size[p] > size[q]:
                q = parent[q]
            else:
                p = parent[p]
                q = parent[q]
        join = p

        # Leaving arc. The cycle is oriented apex->u, then e, then v->apex.
        # Scanning u->apex keeps the first minimum (closest to u = last from
        # the apex); scanning v->apex lets later ties win (closest to apex).
        # Together: last blocking arc along the cycle orientation.
        delta = np.int64(-1)
        out_node = -1
        out_side = 0
        w = u
        while w != join:
            a = pred[w]
            if tail[a] == w:
                f = flow[a]
                if delta < 0 or f < delta:
                    delta = f
                    out_node = w
                    out_side = 1
            w = parent[w]
        w = v
        while w != join:
            a = pred[w]
            if head[a] == w:
                f = flow[a]
                if delta < 0 or f <= delta:
                    delta = f
                    out_node = w
                    out_side = 2
            w = parent[w]
        if out_side == 0:
            return 2, pivots  # directed negative cycle: impossible with costs >= 0

        if delta > 0:
            flow[e] += delta
            w = u
            while w != join:
                a = pred[w]
                if tail[a] == w:
                    flow[a] -= delta
                else:
                    flow[a] += delta
                w = parent[w]
            w = v
            while w != join:
                a = pred[w]
                if head[a] == w:
                    flow[a] -= delta
                else:
                    flow[a] += delta
                w = parent[w]

        # The subtree cut off below the leaving arc contains u (side 1) or v
        # (side 2); rehang it from the other endpoint through the entering arc.
        if out_side == 1:
            new_root = u
            attach = v
            pot_delta = -rc_e
        else:
            new_root = v
            attach = u
            pot_delta = rc_e
        _remove_edge(parent[out_node], out_node, parent, pred, size, nxt, prv, last)
        _make_root(new_root, parent, pred, size, nxt, prv, last, buf)
        _add_edge(e, attach, new_root, parent, pred, size, nxt, prv, last)

        # Potentials are tree-defined; only one side of the new arc shifts.
        # Apply the shift to whichever side is smaller.
        sq = size[new_root]
        if 2 * sq <= n + 1:
            w = new_root
            stop = last[new_root]
            while True:
                pi[w] += pot_delta
                if w == stop:
                    break
                w = nxt[w]
        else:
            count = (n + 1) - sq
            skip_to = nxt[last[new_root]]
            w = root
            done = 0
            while done < count:
                pi[w] -= pot_delta
                done += 1
                w = nxt[w]
                if w == new_root:
                    w = skip_to
    return 0, pivots


@dataclass
class SolveStats:
    pivots: int
    runtime_s: float
    node_count: int
    arc_count: int
    block_size: int


@dataclass
class FlowSolution:
    """Result of a network simplex run.

    flows and potentials cover the real arcs and nodes; objective is None when
    the instance is infeasible.
    """

    status: str
    objective: int | None
    flows: np.ndarray
    potentials: np.ndarray
    stats: SolveStats


@dataclass
class SpanningTreeState:
    """Simplex basis: extended arc arrays plus the threaded spanning tree.

    Arc slots [0, arc_count) are the network's arcs; the following node_count
    slots are the artificial root arcs. The thread arrays (nxt, prv, last,
    size) index a depth-first traversal rooted at node id node_count.
    """

    node_count: int
    arc_count: int
    tail: np.ndarray
    head: np.ndarray
    cost: np.ndarray
    flow: np.ndarray
    potential: np.ndarray
    parent: np.ndarray
    pred: np.ndarray
    nxt: np.ndarray
    prv: np.ndarray
    last: np.ndarray
    size: np.ndarray
    block_start: int = 0

    @classmethod
    def initial(cls, net: FlowNetwork) -> "SpanningTreeState":
        n = net.node_count
        m = net.arc_count
        U = int(net.supplies[net.supplies > 0].sum())
        cmax = int(net.costs.max()) if m else 0
        if cmax * (max(U, n) + n) >= DUAL_GUARD:
            raise OverflowGuardError("cost/supply ranges too large for int64 duals")
        M = 1 + cmax * max(U, n)
        tail = np.empty(m + n, np.int32)
        head = np.empty(m + n, np.int32)
        cost = np.empty(m + n, np.int64)
        flow = np.zeros(m + n, np.int64)
        tail[:m] = net.tails
        head[:m] = net.heads
        cost[:m] = net.costs
        pi = np.empty(n + 1, np.int64)
        parent = np.empty(n + 1, np.int32)
        pred = np.empty(n + 1, np.int32)
        nxt = np.empty(n + 1, np.int32)
        prv = np.empty(n + 1, np.int32)
        last = np.empty(n + 1, np.int32)
        size = np.empty(n + 1, np.int32)
        _init_basis(n, m, tail, head, cost, flow, net.supplies, M, pi, parent, pred, nxt, prv, last, size)
        return cls(n, m, tail, head, cost, flow, pi, parent, pred, nxt, prv, last, size)

    def reduced_cost(self, arc: int) -> int:
        return int(self.cost[arc] + self.potential[self.tail[arc]] - self.potential[self.head[arc]])


def pivot_block_search(state: SpanningTreeState, block_size: int) -> int | None:
    """Entering-arc search over a wrapping block from the last stop.

    Returns the most negative arc in the first block that contains one, or
    None when no arc anywhere has negative reduced cost.
    """
    if block_size < 1:
        raise GridotError(f"block_size must be >= 1, got {block_size}")
    e, nxt_start = _find_entering(
        state.tail, state.head, state.cost, state.potential,
        state.arc_count, state.block_start, block_size,
    )
    if e < 0:
        return None
    state.block_start = int(nxt_start)
    return int(e)


def default_block_size(arc_count: int) -> int:
    return max(1, math.isqrt(max(arc_count - 1, 0)) + 1)


def solve(net: FlowNetwork, block_size: int | None = None) -> FlowSolution:
    """Solve to proven optimality and verify the optimality certificates.

    On optimal exit every arc's reduced cost is nonnegative and every arc with
    positive flow has reduced cost zero; both are rechecked here along with
    flow conservation. A network whose demands cannot be met comes back with
    status "infeasible" (leftover flow on artificial root arcs).
    """
    n = net.node_count
    m = net.arc_count
    if block_size is None:
        block_size = default_block_size(m)
    if block_size < 1:
        raise GridotError(f"block_size must be >= 1, got {block_size}")

    t0 = time.perf_counter()
    state = SpanningTreeState.initial(net)
    code, pivots = _run(
        n, m, state.tail, state.head, state.cost, state.flow, state.potential,
        state.parent, state.pred, state.nxt, state.prv, state.last, state.size,
        block_size, 0,
    )
    runtime = time.perf_counter() - t0
    if code == 2:
        raise GridotError("unbounded pivot cycle; arc costs must be nonnegative")

    flows = state.flow[:m].copy()
    potentials = state.potential[:n].copy()
    stats = SolveStats(int(pivots), runtime, n, m, block_size)

    if np.any(state.flow[m:] != 0):
        return FlowSolution(INFEASIBLE, None, flows, potentials, stats)

    nz = np.flatnonzero(flows)
    rc = net.costs + potentials[net.tails] - potentials[net.heads]
    if int(rc.min()) < 0:
        raise AssertionError("dual feasibility violated at termination")
    if np.any(rc[nz] != 0):
        raise AssertionError("complementary slackness violated at termination")
    balance = np.zeros(n, np.int64)
    np.add.at(balance, net.tails[nz], flows[nz])
    np.subtract.at(balance, net.heads[nz], flows[nz])
    if np.any(balance != net.supplies):
        raise AssertionError("flow conservation violated at termination")

    objective = sum(int(net.costs[a]) * int(flows[a]) for a in nz)
    flows.flags.writeable = False
    return FlowSolution(OPTIMAL, objective, flows, potentials, stats)
