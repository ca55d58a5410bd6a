"""Violation structures witnessing distance from monotone conjunctions.

A function outside the class always has a violation: either f(1^n) = 0, or
some 0-string's zero set is covered by zero sets of 1-strings. The weighted
bipartite form pairs 1-strings in the support against representative indices
of 0-strings; its minimum-weight vertex cover lower-bounds the distance to
the class, and a heavy-vertex pruning pass extracts the regular subgraph the
distance argument runs on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import (
    BlackBox,
    DimensionMismatch,
    FiniteDistribution,
    FunctionSpec,
    QueryTranscript,
    SizeCapError,
    TruthTable,
    ZeroSet,
)
from .tester import binary_search_representative

__all__ = [
    "ViolationGraph",
    "PruneReport",
    "hypergraph_has_violation",
    "build_violation_bigraph",
    "min_weight_vertex_cover",
    "prune_to_regular",
    "regularity_diagnostics",
]

_SWEEP_CAP = 20
_COVER_CAP = 10_000


@dataclass(frozen=True)
class ViolationGraph:
    """Weighted bipartite graph of 1-strings against representative indices.

    left holds (point, weight) with positive distribution weight and label 1;
    right holds (index, weight) where the weight sums the distribution mass
    of 0-strings sharing that representative. An edge joins a left point to
    every right index in its zero set. empty_strings lists the 0-support
    points whose representative search returned nil, with their weights; they
    are not part of the graph.
    """

    left: tuple
    right: tuple
    edges: tuple
    empty_strings: tuple = ()

    def __post_init__(self):
        for li, ri in self.edges:
            point = self.left[li][0]
            j = self.right[ri][0]
            if j not in point.zeros:
                raise ValueError("edge endpoints must satisfy the zero rule")
        for _, w in self.left + self.right:
            if w <= 0:
                raise ValueError("vertex weights must be positive")

    @classmethod
    def from_vertices(cls, left, right, empty_strings=()):
        """Build with the edge set implied by the zero rule."""
        edges = tuple(
            (li, ri)
            for li, (point, _) in enumerate(left)
            for ri, (j, _) in enumerate(right)
            if j in point.zeros
        )
        return cls(tuple(left), tuple(right), edges, tuple(empty_strings))

    def graph_weight(self) -> Fraction:
        """Total edge weight, each edge weighted by its left endpoint."""
        deg = [0] * len(self.left)
        for li, _ in self.edges:
            deg[li] += 1
        return sum((w * deg[i] for i, (_, w) in enumerate(self.left)), Fraction(0))


@dataclass(frozen=True)
class PruneReport:
    """Result of the heavy-vertex pruning pass."""

    G_star: ViolationGraph
    removed_S: tuple
    W: Fraction
    L_prime: tuple
    rounds: int
    exit_reason: str


def hypergraph_has_violation(f: FunctionSpec, return_witness: bool = False):
    """Whether the violation hypergraph of f has any hyperedge.

    Empty exactly when f is a monotone conjunction. A hyperedge on x exists
    iff ZERO(x) is inside the union U of zero sets of 1-strings: the covering
    family can always be taken to be all 1-strings, and the all-ones string
    forms a hyperedge by itself when f maps it to 0 (its empty zero set is
    inside any U). Checked exhaustively over the cube, so n is capped.
    """
    n = f.n
    if n > _SWEEP_CAP:
        raise SizeCapError(f"exhaustive sweep capped at n = {_SWEEP_CAP}")
    full = (1 << n) - 1
    if isinstance(f, TruthTable):
        values = [(f.bits >> k) & 1 for k in range(1 << n)]
    else:
        values = []
        for k in range(1 << n):
            zeros = frozenset(i + 1 for i in range(n) if not (k >> i) & 1)
            values.append(f.value_at(zeros))
    union = 0
    for k in range(1 << n):
        if values[k]:
            union |= full ^ k
    witness_x = None
    for k in range(1 << n):
        if not values[k] and (full ^ k) & ~union == 0:
            witness_x = k
            break
    if not return_witness:
        return witness_x is not None
    if witness_x is None:
        return False, None
    x = ZeroSet(n, frozenset(i + 1 for i in range(n) if not (witness_x >> i) & 1))
    covering = []
    need = full ^ witness_x
    for k in range(1 << n):
        if values[k] and (full ^ k) & need:
            covering.append(ZeroSet(n, frozenset(
                i + 1 for i in range(n) if not (k >> i) & 1)))
            need &= ~(full ^ k)
            if not need:
                break
    return True, (x, tuple(covering))


def build_violation_bigraph(f: FunctionSpec, dist: FiniteDistribution,
                            oracle: Optional[BlackBox] = None) -> ViolationGraph:
    """Violation bipartite graph of f restricted to the support of dist.

    Representatives come from the binary search run against oracle (a fresh
    uncounted black box when omitted). Restricting to positive-weight
    vertices preserves the minimum cover weight: an edge at a zero-weight
    vertex is coverable for free.
    """
    if dist.n != f.n:
        raise DimensionMismatch("function and distribution disagree on n")
    if oracle is None:
        oracle = BlackBox(f, QueryTranscript())
    left = []
    right_weights: dict[int, Fraction] = {}
    empties = []
    for point, w in dist.entries:
        if f.value_at(point.zeros) == 1:
            left.append((point, w))
        else:
            rep = binary_search_representative(oracle, point)
            if rep is None:
                empties.append((point, w))
            else:
                right_weights[rep] = right_weights.get(rep, Fraction(0)) + w
    right = sorted(right_weights.items())
    return ViolationGraph.from_vertices(left, right, empties)


def min_weight_vertex_cover(G: ViolationGraph):
    """Exact minimum-weight vertex cover of a bipartite graph.

    Weighted Koenig duality: the cover weight equals the maximum flow in the
    source -> left -> right -> sink network with vertex weights as capacities,
    computed in exact rationals. Returns (cover, weight) where cover holds
    ("L", position) and ("R", position) tags.
    """
    nl, nr = len(G.left), len(G.right)
    if nl + nr > _COVER_CAP:
        raise SizeCapError(f"vertex cover computation capped at {_COVER_CAP} vertices")
    if not G.edges:
        return frozenset(), Fraction(0)
    source, sink = 0, 1
    left_node = lambda i: 2 + i
    right_node = lambda j: 2 + nl + j
    total_nodes = 2 + nl + nr
    capacity: list[dict[int, Fraction]] = [dict() for _ in range(total_nodes)]
    infinite = sum((w for _, w in G.left), Fraction(1))

    def add_edge(u, v, cap):
        capacity[u][v] = capacity[u].get(v, Fraction(0)) + cap
        capacity[v].setdefault(u, Fraction(0))

    for i, (_, w) in enumerate(G.left):
        add_edge(source, left_node(i), w)
    for j, (_, w) in enumerate(G.right):
        add_edge(right_node(j), sink, w)
    for li, ri in G.edges:
        add_edge(left_node(li), right_node(ri), infinite)

    flow_value = Fraction(0)
    while True:
        parent = [-1] * total_nodes
        parent[source] = source
        queue = [source]
        while queue and parent[sink] == -1:
            u = queue.pop(0)
            for v, cap in capacity[u].items():
                if cap > 0 and parent[v] == -1:
                    parent[v] = u
                    queue.append(v)
        if parent[sink] == -1:
            break
        bottleneck = None
        v = sink
        while v != source:
            u = parent[v]
            cap = capacity[u][v]
            bottleneck = cap if bottleneck is None else min(bottleneck, cap)
            v = u
        v = sink
        while v != source:
            u = parent[v]
            capacity[u][v] -= bottleneck
            capacity[v][u] += bottleneck
            v = u
        flow_value += bottleneck

    reachable = [False] * total_nodes
    reachable[source] = True
    queue = [source]
    while queue:
        u = queue.pop(0)
        for v, cap in capacity[u].items():
            if cap > 0 and not reachable[v]:
                reachable[v] = True
                queue.append(v)
    cover = set()
    for i in range(nl):
        if not reachable[left_node(i)]:
            cover.add(("L", i))
    for j in range(nr):
        if reachable[right_node(j)]:
            cover.add(("R", j))
    return frozenset(cover), flow_value


class _MutableGraph:
    """Working copy for pruning: adjacency over original vertex positions."""

    def __init__(self, G: ViolationGraph):
        self.G = G
        self.left_alive = set(range(len(G.left)))
        self.right_alive = set(range(len(G.right)))
        self.adj_left = {i: set() for i in self.left_alive}
        self.adj_right = {j: set() for j in self.right_alive}
        for li, ri in G.edges:
            self.adj_left[li].add(ri)
            self.adj_right[ri].add(li)

    def weight(self) -> Fraction:
        return sum((self.G.left[i][1] * len(self.adj_left[i])
                    for i in self.left_alive), Fraction(0))

    def in_weight(self, j: int) -> Fraction:
        return sum((self.G.left[i][1] for i in self.adj_right[j]), Fraction(0))

    def remove_left(self, i: int):
        for j in self.adj_left[i]:
            self.adj_right[j].discard(i)
        del self.adj_left[i]
        self.left_alive.discard(i)

    def remove_right(self, j: int):
        for i in self.adj_right[j]:
            self.adj_left[i].discard(j)
        del self.adj_right[j]
        self.right_alive.discard(j)

    def drop_isolated(self):
        for i in [i for i in self.left_alive if not self.adj_left[i]]:
            self.remove_left(i)
        for j in [j for j in self.right_alive if not self.adj_right[j]]:
            self.remove_right(j)

    def heavy_left(self, d: int, wt: Fraction):
        return [i for i in self.left_alive if len(self.adj_left[i]) >= d * wt]

    def heavy_right(self, d: int, wt: Fraction):
        return [j for j in self.right_alive
                if self.in_weight(j) >= d * wt * self.G.right[j][1]]

    def snapshot(self) -> ViolationGraph:
        left_ids = sorted(self.left_alive)
        right_ids = sorted(self.right_alive)
        lmap = {i: k for k, i in enumerate(left_ids)}
        rmap = {j: k for k, j in enumerate(right_ids)}
        edges = tuple(sorted(
            (lmap[i], rmap[j]) for i in left_ids for j in self.adj_left[i]))
        return ViolationGraph(
            tuple(self.G.left[i] for i in left_ids),
            tuple(self.G.right[j] for j in right_ids),
            edges,
        )


def prune_to_regular(G: ViolationGraph, epsilon, d: int) -> PruneReport:
    """Heavy-vertex pruning: alternate left/right removals until the rest is
    cheap to cover or has no heavy vertex.

    A left vertex is heavy when its degree reaches d*wt(G); a right vertex
    when its incoming weight reaches d*wt(G)*wt(j). Each batch removes every
    vertex heavy against the current graph weight, then drops newly isolated
    vertices on the other side; the weight is recomputed after every batch
    including that cleanup. The cover tests use the exact minimum cover.
    """
    eps = Fraction(epsilon)
    if d < 1:
        raise ValueError("d must be at least 1")
    work = _MutableGraph(G)
    removed = []
    work.drop_isolated()
    rounds = 0
    exit_reason = None
    while True:
        rounds += 1
        wt = work.weight()
        for i in work.heavy_left(d, wt):
            removed.append(("left",) + G.left[i])
            work.remove_left(i)
        work.drop_isolated()
        _, cover_w = min_weight_vertex_cover(work.snapshot())
        if cover_w <= eps / 4:
            exit_reason = "cheap-cover-found"
            break
        wt = work.weight()
        for j in work.heavy_right(d, wt):
            removed.append(("right",) + G.right[j])
            work.remove_right(j)
        work.drop_isolated()
        _, cover_w = min_weight_vertex_cover(work.snapshot())
        wt = work.weight()
        if cover_w <= eps / 4:
            exit_reason = "cheap-cover-found"
            break
        if not work.heavy_left(d, wt) and not work.heavy_right(d, wt):
            exit_reason = "no-heavy-left"
            break
    star = work.snapshot()
    W = star.graph_weight()
    deg = [0] * len(star.left)
    for li, _ in star.edges:
        deg[li] += 1
    l_prime = tuple(star.left[i] for i in range(len(star.left))
                    if deg[i] >= W / 2)
    return PruneReport(star, tuple(removed), W, l_prime, rounds, exit_reason)


def regularity_diagnostics(report: PruneReport, epsilon, d: int) -> dict:
    """Informational regularity figures for a fully pruned graph.

    Reports the graph weight, the weight of the high-degree left part, and
    the minimum cover weight, with flags against the nominal thresholds. The
    flags describe asymptotic constants and are not guarantees at small n.
    """
    if report.exit_reason != "no-heavy-left":
        raise ValueError("diagnostics require a no-heavy-left exit")
    eps = Fraction(epsilon)
    wt_l_prime = sum((w for _, w in report.L_prime), Fraction(0))
    _, cover_w = min_weight_vertex_cover(report.G_star)
    return {
        "W": report.W,
        "wt_L_prime": wt_l_prime,
        "min_cover": cover_w,
        "flag_W": report.W >= eps / 4,
        "flag_L_prime": wt_l_prime >= Fraction(1, 2 * d),
        "flag_cover": cover_w >= 3 * eps / 8,
    }
