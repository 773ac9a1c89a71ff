"""Shared brute-force oracles and the acceptance summary hook.

The oracles below are deliberately naive: plain loops over subsets and
colourings, written without reference to the package internals.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from rcdyn.graph import Graph, make_complete, make_path


# ---------------------------------------------------------------- oracles

def bf_components(n: int, edges, mask: int) -> int:
    adj = {v: [] for v in range(n)}
    for i, (u, v) in enumerate(edges):
        if mask >> i & 1:
            adj[u].append(v)
            adj[v].append(u)
    seen, count = set(), 0
    for s in range(n):
        if s in seen:
            continue
        count += 1
        stack = [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
    return count


def bf_connected(n: int, edges, mask: int, u: int, v: int) -> bool:
    adj = {x: [] for x in range(n)}
    for i, (a, b) in enumerate(edges):
        if mask >> i & 1:
            adj[a].append(b)
            adj[b].append(a)
    seen, stack = {u}, [u]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return v in seen


def bf_rc(g: Graph, p: float, q: float) -> np.ndarray:
    m = g.n_edges
    w = np.array([(p / (1 - p)) ** bin(a).count("1") * q ** bf_components(g.n_vertices, g.edges, a)
                  for a in range(1 << m)])
    return w / w.sum()


def bf_colourings(n: int, q: int):
    """All colourings in index order (vertex 0 varies fastest), colours 1..q."""
    for digits in itertools.product(range(q), repeat=n):
        yield tuple(d + 1 for d in reversed(digits))


def bf_potts(g: Graph, p: float, q: int) -> np.ndarray:
    beta = -math.log(1 - p)
    w = np.array([math.exp(beta * sum(s[u] == s[v] for u, v in g.edges))
                  for s in bf_colourings(g.n_vertices, q)])
    return w / w.sum()


def bf_sw(g: Graph, p: float, q: int) -> np.ndarray:
    """Colour each component of A uniformly, keep each monochromatic edge
    with probability p; enumerate every colouring of the components."""
    m, n = g.n_edges, g.n_vertices
    P = np.zeros((1 << m, 1 << m))
    for a in range(1 << m):
        comp = {}
        for v in range(n):
            comp[v] = min(x for x in range(n) if bf_connected(n, g.edges, a, v, x))
        roots = sorted(set(comp.values()))
        for cols in itertools.product(range(q), repeat=len(roots)):
            colour = {r: c for r, c in zip(roots, cols)}
            mono = [colour[comp[u]] == colour[comp[v]] for u, v in g.edges]
            for b in range(1 << m):
                pr = 1.0
                for i in range(m):
                    kept = b >> i & 1
                    if mono[i]:
                        pr *= p if kept else 1 - p
                    elif kept:
                        pr = 0.0
                P[a, b] += pr / q ** len(roots)
    return P


def bf_sb(g: Graph, p: float, q: float, lazy: bool = True) -> np.ndarray:
    m, n = g.n_edges, g.n_vertices
    P = np.zeros((1 << m, 1 << m))
    for a in range(1 << m):
        for e, (u, v) in enumerate(g.edges):
            rest = a & ~(1 << e)
            r = p if bf_connected(n, g.edges, a, u, v) else p / q
            P[a, a | 1 << e] += r / m
            P[a, rest] += (1 - r) / m
    if lazy:
        P = 0.5 * (np.eye(1 << m) + P)
    return P


def bf_bandwidth(g: Graph) -> int:
    best = math.inf
    for perm in itertools.permutations(range(g.n_vertices)):
        pos = {v: k for k, v in enumerate(perm)}
        best = min(best, max((abs(pos[u] - pos[v]) for u, v in g.edges), default=0))
    return best


def bf_linear_width(g: Graph) -> int:
    best = math.inf
    for order in itertools.permutations(range(g.n_edges)):
        w = 0
        for i in range(1, len(order) + 1):
            pre = {x for e in order[:i] for x in g.edges[e]}
            suf = {x for e in order[i:] for x in g.edges[e]}
            w = max(w, len(pre & suf))
        best = min(best, w)
    return best


# ---------------------------------------------------------------- fixtures

@pytest.fixture
def k2() -> Graph:
    return make_path(2)


@pytest.fixture
def triangle() -> Graph:
    return make_complete(3)


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE_RESULTS: dict[int, list[bool]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for mark in report.keywords:
        if mark.startswith("criterion_"):
            n = int(mark.split("_")[1])
            ACCEPTANCE_RESULTS.setdefault(n, []).append(report.passed)


def pytest_configure(config):
    for n in range(1, 11):
        config.addinivalue_line("markers", f"criterion_{n}: acceptance criterion {n}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok = all(ACCEPTANCE_RESULTS[n])
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
