"""Closed-form gap and mixing bounds, plus exact bandwidth and linear-width."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CapExceededError, ParameterError
from .graph import Graph
from .models import ModelParams

MAX_BANDWIDTH_VERTICES = 10
MAX_LINEAR_WIDTH_EDGES = 8


@dataclass
class WidthResult:
    width: int
    witness: tuple[int, ...]   # vertex order (bandwidth) or edge order (linear-width)


@dataclass
class BoundReport:
    name: str
    inputs: dict
    value: float
    log_scale: bool = True
    terms: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, **self.inputs, **self.terms,
                "value": self.value, "log_scale": self.log_scale}


# --------------------------------------------------------------------------
# bandwidth
# --------------------------------------------------------------------------

def bandwidth_of(g: Graph, ordering) -> int:
    """Max stretch ``|f(u) - f(v)|`` over edges, where ``ordering[k]`` is the
    vertex placed at position ``k``."""
    pos = {v: k for k, v in enumerate(ordering)}
    if sorted(pos) != list(range(g.n_vertices)):
        raise ParameterError("ordering must be a permutation of the vertices")
    return max((abs(pos[u] - pos[v]) for u, v in g.edges), default=0)


def _bfs_order(g: Graph, adj: list[list[int]]) -> list[int]:
    order, seen = [], set()
    for start in sorted(range(g.n_vertices), key=lambda v: len(adj[v])):
        if start in seen:
            continue
        seen.add(start)
        queue = [start]
        while queue:
            v = queue.pop(0)
            order.append(v)
            for w in sorted(adj[v], key=lambda x: len(adj[x])):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    return order


def bandwidth_exact(g: Graph) -> WidthResult:
    """Minimum bandwidth by depth-first branch and bound over placements.

    Vertices are placed left to right.  A partial placement is cut when a new
    vertex sits too far from an already placed neighbour, or when some placed
    vertex has more unplaced neighbours than free slots within reach.
    """
    n = g.n_vertices
    if n > MAX_BANDWIDTH_VERTICES:
        raise CapExceededError("bandwidth vertices", n, MAX_BANDWIDTH_VERTICES)
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    if not g.edges:
        return WidthResult(0, tuple(range(n)))

    start = _bfs_order(g, adj)
    best_width = bandwidth_of(g, start)
    best_order = list(start)
    lower = max(math.ceil(len(a) / 2) for a in adj)

    pos = [-1] * n
    order: list[int] = []

    def feasible(k: int, limit: int) -> bool:
        # every placed vertex must fit its unplaced neighbours into k..pos+limit
        for u in order:
            pending = sum(1 for w in adj[u] if pos[w] < 0)
            if pending and pos[u] + limit - k + 1 < pending:
                return False
        return True

    def search(k: int) -> bool:
        nonlocal best_width, best_order
        if k == n:
            width = bandwidth_of(g, order)
            if width < best_width:
                best_width, best_order = width, list(order)
            return best_width <= lower
        limit = best_width - 1
        for v in range(n):
            if pos[v] >= 0:
                continue
            if any(pos[w] >= 0 and k - pos[w] > limit for w in adj[v]):
                continue
            pos[v] = k
            order.append(v)
            if feasible(k + 1, limit) and search(k + 1):
                return True
            order.pop()
            pos[v] = -1
            limit = best_width - 1
        return False

    if best_width > lower:
        search(0)
    return WidthResult(best_width, tuple(best_order))


# --------------------------------------------------------------------------
# linear-width
# --------------------------------------------------------------------------

def _boundary(g: Graph, prefix: int) -> int:
    inside, outside = set(), set()
    for i, (u, v) in enumerate(g.edges):
        (inside if prefix >> i & 1 else outside).update((u, v))
    return len(inside & outside)


def linear_width_of(g: Graph, edge_order) -> int:
    """Max over prefixes ``e_1..e_i`` (``i = 1..|E|``) of the number of vertices
    touching both the prefix and the remaining edges."""
    if sorted(edge_order) != list(range(g.n_edges)):
        raise ParameterError("edge order must be a permutation of the edge indices")
    width, prefix = 0, 0
    for e in edge_order:
        prefix |= 1 << e
        width = max(width, _boundary(g, prefix))
    return width


def linear_width_exact(g: Graph, max_edges: int = MAX_LINEAR_WIDTH_EDGES) -> WidthResult:
    """Exact linear-width.

    The boundary of a prefix depends only on its edge set, so the optimum is a
    bottleneck path through the subset lattice from the empty set to ``E``;
    dynamic programming over the ``2**|E|`` subsets finds it.
    """
    m = g.n_edges
    if m > max_edges:
        raise CapExceededError("linear-width edges", m, max_edges)
    full = (1 << m) - 1
    best = [0] * (full + 1)
    prev = [-1] * (full + 1)
    for s in range(1, full + 1):
        b = _boundary(g, s)
        choice, value = -1, math.inf
        for e in range(m):
            if s >> e & 1 and best[s & ~(1 << e)] < value:
                value, choice = best[s & ~(1 << e)], e
        best[s] = max(b, value)
        prev[s] = choice
    witness = []
    s = full
    while s:
        witness.append(prev[s])
        s &= ~(1 << prev[s])
    return WidthResult(best[full], tuple(reversed(witness)))


def torus_linear_width_bound(L: int, d: int) -> int:
    """``2 L^{d-1} + 1``"""
    if L < 2 or d < 1:
        raise ParameterError("need L >= 2 and d >= 1")
    return 2 * L ** (d - 1) + 1


# --------------------------------------------------------------------------
# gap and mixing bounds
# --------------------------------------------------------------------------

def width_gap_bound(n_edges: int, q: float, ell: int) -> float:
    """log of ``4 |E|^2 q^{ell+1}``, an upper bound on the single-bond
    relaxation time for graphs of linear-width at most ``ell``."""
    if n_edges < 1 or q < 1 or ell < 0:
        raise ParameterError("need |E| >= 1, q >= 1, ell >= 0")
    return math.log(4 * n_edges**2) + (ell + 1) * math.log(q)


def _require_tree(g: Graph) -> None:
    if not g.is_tree():
        raise ParameterError("graph is not a tree")


def tree_gap_exact(g: Graph, params: ModelParams) -> float:
    """Exact lazy single-bond gap on a tree: ``(1 - p(1 - 1/q)) / (2|E|)``."""
    _require_tree(g)
    if g.n_edges == 0:
        raise ParameterError("tree must have at least one edge")
    return (1 - params.p * (1 - 1 / params.q)) / (2 * g.n_edges)


def sw_tree_bound(g: Graph, params: ModelParams) -> float:
    """Upper bound ``2 |E| / (1 - p(1 - 1/q))`` on the Swendsen-Wang relaxation
    time on a tree."""
    _require_tree(g)
    return 2 * g.n_edges / (1 - params.p * (1 - 1 / params.q))


def mixing_comparison_factor(g: Graph, params: ModelParams) -> float:
    p, q = params.p, params.q
    return 3 + g.n_edges * math.log(1 / (p * (1 - p))) + g.n_vertices * math.log(q)


def k1(p: float) -> float:
    if not 0 < p < 1:
        raise ParameterError("p must lie in (0, 1)")
    return math.log(1 + math.log(1 / (p * (1 - p))))


def k2(q: float) -> float:
    if q < 1:
        raise ParameterError("q must be >= 1")
    return 4 + 3 * math.log(q) + math.log(1 + math.log(q))


def torus_upper_bound(params: ModelParams, L: int, d: int) -> BoundReport:
    """log of the single-bond mixing-time bound ``exp(k1(p) + k2(q) L^{d-1})``
    on the ``d``-dimensional torus of side ``L``."""
    if L < 2 or d < 2:
        raise ParameterError("need L >= 2 and d >= 2")
    params.int_q()
    a, b = k1(params.p), k2(params.q)
    return BoundReport(
        "torus_mixing_upper",
        {"p": params.p, "q": params.q, "L": L, "d": d},
        a + b * L ** (d - 1),
        log_scale=True,
        terms={"k1": a, "k2": b},
    )


def potts_transition_beta_leading(q: float, d: int) -> float:
    """Leading term ``log(q)/d`` of the Potts transition point; the
    ``O(q^{-1/d})`` correction is not included."""
    if q < 2 or d < 2:
        raise ParameterError("need q >= 2 and d >= 2")
    return math.log(q) / d
