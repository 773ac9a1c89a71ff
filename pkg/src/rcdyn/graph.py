"""Finite simple graphs, edge subsets and connectivity.

Edge order is fixed at construction; an edge subset is encoded as an integer
bit mask whose bit ``i`` is set iff edge ``i`` belongs to the subset.  This
encoding doubles as the state index of the random-cluster state space.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import CapExceededError, ParameterError

Edge = tuple[int, int]

MAX_ENUMERATION_VERTICES = 5


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ParameterError("graph needs at least one vertex")
        normalized = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ParameterError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ParameterError(f"edge ({u}, {v}) has an endpoint out of range")
            normalized.append((min(u, v), max(u, v)))
        if len(set(normalized)) != len(normalized):
            raise ParameterError("duplicate edge")
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def full_mask(self) -> int:
        return (1 << self.n_edges) - 1

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    @cached_property
    def endpoint_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        e = np.asarray(self.edges, dtype=np.int64)
        return e[:, 0], e[:, 1]

    def is_connected(self) -> bool:
        return components(self, self.full_mask)[0] == 1

    def is_tree(self) -> bool:
        return self.n_edges == self.n_vertices - 1 and self.is_connected()

    def to_json(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict) -> "Graph":
        try:
            return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed graph description: {exc}") from exc


@dataclass(frozen=True)
class EdgeSubset:
    """A subset of the edges of a graph with ``n_edges`` edges."""

    bits: int
    n_edges: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.n_edges:
            raise ParameterError(f"subset {self.bits:#b} has an edge index >= {self.n_edges}")

    @classmethod
    def from_indices(cls, g: Graph, indices: Iterable[int]) -> "EdgeSubset":
        bits = 0
        for i in indices:
            if not 0 <= i < g.n_edges:
                raise ParameterError(f"edge index {i} out of range")
            bits |= 1 << i
        return cls(bits, g.n_edges)

    @classmethod
    def empty(cls, g: Graph) -> "EdgeSubset":
        return cls(0, g.n_edges)

    @classmethod
    def full(cls, g: Graph) -> "EdgeSubset":
        return cls(g.full_mask, g.n_edges)

    def __contains__(self, e: int) -> bool:
        return bool(self.bits >> e & 1)

    def __iter__(self) -> Iterator[int]:
        return (i for i in range(self.n_edges) if self.bits >> i & 1)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __int__(self) -> int:
        return self.bits

    def issubset(self, other: "EdgeSubset") -> bool:
        return self.bits & ~int(other) == 0


def as_mask(a: "EdgeSubset | int") -> int:
    return a.bits if isinstance(a, EdgeSubset) else int(a)


# --------------------------------------------------------------------------
# constructions
# --------------------------------------------------------------------------

def make_torus(L: int, d: int) -> Graph:
    """Nearest-neighbour torus (Z/LZ)^d with vertices in row-major order.

    For ``L == 2`` both neighbours along an axis coincide and the pair is kept
    once, so the edge count is ``d * 2**(d-1)`` rather than ``d * L**d``.
    """
    if L < 2 or d < 1:
        raise ParameterError(f"torus needs L >= 2 and d >= 1, got L={L}, d={d}")
    n = L**d
    strides = [L ** (d - 1 - k) for k in range(d)]
    edges: list[Edge] = []
    seen: set[Edge] = set()
    for v in range(n):
        coords = [(v // s) % L for s in strides]
        for k in range(d):
            w = v + (((coords[k] + 1) % L) - coords[k]) * strides[k]
            pair = (min(v, w), max(v, w))
            if pair not in seen:
                seen.add(pair)
                edges.append(pair)
    return Graph(n, tuple(edges))


def make_path(n: int) -> Graph:
    if n < 1:
        raise ParameterError("path needs n >= 1")
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise ParameterError("cycle needs n >= 3")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def make_complete(n: int) -> Graph:
    if n < 1:
        raise ParameterError("complete graph needs n >= 1")
    return Graph(n, tuple(itertools.combinations(range(n), 2)))


def make_star(n: int) -> Graph:
    """Star with ``n`` leaves; vertex 0 is the centre."""
    if n < 1:
        raise ParameterError("star needs n >= 1")
    return Graph(n + 1, tuple((0, i) for i in range(1, n + 1)))


_BUILDERS = {
    "path": make_path,
    "cycle": make_cycle,
    "complete": make_complete,
    "star": make_star,
}


def parse_graph(source: str) -> Graph:
    """Resolve ``torus:L,d``, ``path:n``, ``cycle:n``, ``complete:n``,
    ``star:n`` or a path to a JSON graph file."""
    name, sep, arg = source.partition(":")
    if sep and (name in _BUILDERS or name == "torus"):
        try:
            nums = [int(x) for x in arg.split(",")]
        except ValueError:
            raise ParameterError(f"bad graph arguments in {source!r}")
        if name == "torus":
            if len(nums) != 2:
                raise ParameterError("torus takes two arguments: torus:L,d")
            return make_torus(*nums)
        if len(nums) != 1:
            raise ParameterError(f"{name} takes one argument")
        return _BUILDERS[name](nums[0])
    path = Path(source)
    if not path.exists():
        raise ParameterError(f"unknown graph source {source!r}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{source}: invalid JSON ({exc})") from exc
    return Graph.from_json(data)


# --------------------------------------------------------------------------
# connectivity
# --------------------------------------------------------------------------

def _find(parent: list[int], x: int) -> int:
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def components(g: Graph, a: EdgeSubset | int) -> tuple[int, list[int]]:
    """Number of components of (V, A) and a label per vertex.

    Labels are canonical: each vertex is labelled by the smallest vertex index
    in its component.  Isolated vertices count as components.
    """
    mask = as_mask(a)
    parent = list(range(g.n_vertices))
    for i, (u, v) in enumerate(g.edges):
        if mask >> i & 1:
            ru, rv = _find(parent, u), _find(parent, v)
            if ru != rv:
                # keep the smaller index as root so labels come out canonical
                if ru < rv:
                    parent[rv] = ru
                else:
                    parent[ru] = rv
    labels = [_find(parent, v) for v in range(g.n_vertices)]
    return len(set(labels)), labels


def connected_in(g: Graph, a: EdgeSubset | int, u: int, v: int) -> bool:
    if not (0 <= u < g.n_vertices and 0 <= v < g.n_vertices):
        raise ParameterError("vertex out of range")
    if u == v:
        return True
    labels = components(g, a)[1]
    return labels[u] == labels[v]


def enumerate_connected_graphs(max_vertices: int) -> Iterator[Graph]:
    """All labelled connected simple graphs on 2..max_vertices vertices.

    Order: by vertex count, then by edge mask over the lexicographically
    ordered vertex pairs.
    """
    if max_vertices > MAX_ENUMERATION_VERTICES:
        raise CapExceededError("graph enumeration vertices", max_vertices, MAX_ENUMERATION_VERTICES)
    for n in range(2, max_vertices + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1, 1 << len(pairs)):
            g = Graph(n, tuple(pr for i, pr in enumerate(pairs) if mask >> i & 1))
            if g.is_connected():
                yield g


def _rooted_code(adj: list[list[int]], v: int, parent: int) -> str:
    return "(" + "".join(sorted(_rooted_code(adj, w, v) for w in adj[v] if w != parent)) + ")"


def tree_canonical_form(g: Graph) -> str:
    """Isomorphism invariant of a tree: the smallest rooted encoding over all roots."""
    adj: list[list[int]] = [[] for _ in range(g.n_vertices)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    return min(_rooted_code(adj, r, -1) for r in range(g.n_vertices))


def enumerate_trees(max_edges: int) -> Iterator[Graph]:
    """One tree per isomorphism class with 1..max_edges edges.

    Candidates are recursive trees (vertex ``i`` hangs off some ``j < i``),
    which reach every isomorphism class.
    """
    for m in range(1, max_edges + 1):
        seen: set[str] = set()
        for parents in itertools.product(*(range(i) for i in range(1, m + 1))):
            g = Graph(m + 1, tuple((j, i + 1) for i, j in enumerate(parents)))
            key = tree_canonical_form(g)
            if key not in seen:
                seen.add(key)
                yield g


def graph_label(g: Graph) -> str:
    return f"n={g.n_vertices};" + ",".join(f"{u}-{v}" for u, v in g.edges)
