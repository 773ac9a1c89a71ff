"""Transition matrices and samplers for dynamics on the random-cluster model.

Four reversible chains on subsets of ``E``, all with the random-cluster
measure as stationary distribution:

* Swendsen-Wang (colour the clusters, then keep monochromatic edges),
* the lazy single-bond chain (and its non-lazy variant),
* heat-bath single-edge updates,
* Metropolis single-edge updates.

Samplers use numpy's counter-based Philox generator, so a 64-bit seed fixes
the trajectory on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ParameterError, check_cap, get_caps
from .graph import EdgeSubset, Graph, as_mask, components
from .models import ModelParams, rc_distribution, rc_log_weights, spin_tables, subset_tables

DYNAMICS = ("sw", "sb", "sb-nonlazy", "heatbath", "metropolis")


@dataclass
class StochasticMatrix:
    """Dense row-stochastic matrix with the distribution it should preserve."""

    matrix: np.ndarray
    stationary: np.ndarray
    lazy: bool = False
    name: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def row_sum_max_err(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1) - 1.0)))

    def reversibility_max_err(self) -> float:
        flow = self.stationary[:, None] * self.matrix
        return float(np.max(np.abs(flow - flow.T)))

    def stationarity_max_err(self) -> float:
        return float(np.max(np.abs(self.stationary @ self.matrix - self.stationary)))

    def summary(self) -> dict:
        return {
            "dim": self.dim,
            "lazy": self.lazy,
            "row_sum_max_err": self.row_sum_max_err(),
            "reversibility_max_err": self.reversibility_max_err(),
        }


def _finalize(P: np.ndarray) -> np.ndarray:
    # rounding can leave entries like -1e-17 on completed diagonals
    P[(P < 0) & (P > -1e-15)] = 0.0
    return P


def _check_matrix_cap(g: Graph) -> int:
    n = 1 << g.n_edges
    check_cap("transition matrix states", n, get_caps().matrix_states)
    return n


def _need_edges(g: Graph) -> None:
    if g.n_edges == 0:
        raise ParameterError("single-edge dynamics need a graph with at least one edge")


@lru_cache(maxsize=64)
def edge_connectivity_table(g: Graph) -> np.ndarray:
    """``conn[e, A]``: endpoints of edge ``e`` connected in ``(V, A)``."""
    n = 1 << g.n_edges
    us, vs = g.endpoint_arrays
    labels = np.array([components(g, a)[1] for a in range(n)], dtype=np.int64).reshape(n, g.n_vertices)
    conn = (labels[:, us] == labels[:, vs]).T.copy()
    conn.flags.writeable = False
    return conn


# --------------------------------------------------------------------------
# Swendsen-Wang
# --------------------------------------------------------------------------

def _log_superset_sums(log_g: np.ndarray, n_bits: int) -> np.ndarray:
    """``F[C] = log sum_{m superset of C} exp(log_g[m])``."""
    F = log_g.copy()
    for i in range(n_bits):
        view = F.reshape(-1, 2, 1 << i)
        view[:, 0, :] = np.logaddexp(view[:, 0, :], view[:, 1, :])
    return F


def sw_matrix(g: Graph, params: ModelParams) -> StochasticMatrix:
    """Swendsen-Wang kernel on subsets.

    ``P(A, B) = q^{-c(A)} (p/(1-p))^{|B|} sum_sigma (1-p)^{|E(sigma)|} 1(sigma in Omega(A u B))``.
    The colouring sum is grouped by monochromatic-edge mask and turned into a
    superset sum, so the entry only needs the mask ``A | B``.
    """
    q = params.int_q()
    n = _check_matrix_cap(g)
    _, mono, n_mono = spin_tables(g, q)
    sizes, counts = subset_tables(g)

    log_g = np.full(n, -np.inf)
    per_mask = np.bincount(mono, minlength=n)
    hit = per_mask > 0
    log_g[hit] = np.log(per_mask[hit]) + sizes[hit] * math.log1p(-params.p)
    F = _log_superset_sums(log_g, g.n_edges)

    idx = np.arange(n)
    log_P = (
        -counts[:, None] * math.log(q)
        + sizes[None, :] * params.log_odds
        + F[idx[:, None] | idx[None, :]]
    )
    P = _finalize(np.exp(log_P))
    return StochasticMatrix(P, rc_distribution(g, params), lazy=False, name="sw")


# --------------------------------------------------------------------------
# single-bond family
# --------------------------------------------------------------------------

def single_edge_matrix(g: Graph, params: ModelParams, e: int) -> StochasticMatrix:
    """Update of edge ``e`` alone: add with probability ``p`` if its endpoints
    are connected in ``(V, A)``, with ``p/q`` otherwise; remove otherwise.

    Connectivity is tested in ``A`` itself, so an edge already present always
    sees its endpoints connected.
    """
    if not 0 <= e < g.n_edges:
        raise ParameterError(f"edge index {e} out of range")
    n = _check_matrix_cap(g)
    conn = edge_connectivity_table(g)[e]
    idx = np.arange(n)
    bit = 1 << e
    p_add = np.where(conn, params.p, params.p / params.q)
    P = np.zeros((n, n))
    P[idx, idx | bit] = p_add
    P[idx, idx & ~bit] = 1.0 - p_add
    return StochasticMatrix(P, rc_distribution(g, params), lazy=False, name=f"P_e[{e}]")


def sb_matrix(g: Graph, params: ModelParams, lazy: bool = True) -> StochasticMatrix:
    """Single-bond chain ``I/2 + (1/2|E|) sum_e P_e``; with ``lazy=False``
    the chain ``(1/|E|) sum_e P_e``."""
    _need_edges(g)
    n = _check_matrix_cap(g)
    total = np.zeros((n, n))
    for e in range(g.n_edges):
        total += single_edge_matrix(g, params, e).matrix
    if lazy:
        P = 0.5 * np.eye(n) + total / (2 * g.n_edges)
    else:
        P = total / g.n_edges
    return StochasticMatrix(P, rc_distribution(g, params), lazy=lazy, name="sb" if lazy else "sb-nonlazy")


def _single_flip_matrix(g: Graph, log_rate) -> np.ndarray:
    """Lazy chain with ``P(A, A^e) = (1/2|E|) exp(log_rate(A, A^e, e))`` and the
    diagonal completing each row."""
    n = _check_matrix_cap(g)
    idx = np.arange(n)
    P = np.zeros((n, n))
    for e in range(g.n_edges):
        flipped = idx ^ (1 << e)
        P[idx, flipped] = np.exp(log_rate(idx, flipped, e)) / (2 * g.n_edges)
    P[idx, idx] = 1.0 - P.sum(axis=1)
    return _finalize(P)


def heatbath_matrix(g: Graph, params: ModelParams) -> StochasticMatrix:
    """Heat-bath chain: pick an edge w.p. 1/2 overall, resample it from mu
    conditioned on all other edges."""
    _need_edges(g)
    lw = rc_log_weights(g, params)

    def log_rate(A, B, e):
        bit = 1 << e
        return lw[B] - np.logaddexp(lw[A | bit], lw[A & ~bit])

    P = _single_flip_matrix(g, log_rate)
    return StochasticMatrix(P, rc_distribution(g, params), lazy=True, name="heatbath")


def metropolis_matrix(g: Graph, params: ModelParams) -> StochasticMatrix:
    _need_edges(g)
    lw = rc_log_weights(g, params)

    def log_rate(A, B, e):
        return np.minimum(0.0, lw[B] - lw[A])

    P = _single_flip_matrix(g, log_rate)
    return StochasticMatrix(P, rc_distribution(g, params), lazy=True, name="metropolis")


def dynamics_matrix(name: str, g: Graph, params: ModelParams) -> StochasticMatrix:
    if name == "sw":
        return sw_matrix(g, params)
    if name == "sb":
        return sb_matrix(g, params)
    if name == "sb-nonlazy":
        return sb_matrix(g, params, lazy=False)
    if name == "heatbath":
        return heatbath_matrix(g, params)
    if name == "metropolis":
        return metropolis_matrix(g, params)
    raise ParameterError(f"unknown dynamics {name!r}; choose from {', '.join(DYNAMICS)}")


# --------------------------------------------------------------------------
# samplers
# --------------------------------------------------------------------------

def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator; ``seed`` must fit in 64 unsigned bits."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(seed))


def _like(a, bits: int, n_edges: int):
    return EdgeSubset(int(bits), n_edges) if isinstance(a, EdgeSubset) else int(bits)


def _edge_weights(g: Graph) -> np.ndarray:
    return np.left_shift(np.int64(1), np.arange(g.n_edges, dtype=np.int64))


def sw_step_batch(g: Graph, params: ModelParams, a: EdgeSubset | int,
                  rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent Swendsen-Wang moves from the same state ``a``.

    Draws, in order: a ``(size, c(A))`` block of colours (components ordered by
    canonical label), then a ``(size, |E|)`` block of uniforms, one per edge in
    index order; an edge survives iff it is monochromatic and its uniform is
    below ``p``.
    """
    q = params.int_q()
    c, labels = components(g, a)
    roots = sorted(set(labels))
    comp_of = np.searchsorted(roots, labels)
    colours = rng.integers(q, size=(size, c))
    u = rng.random((size, g.n_edges))
    vc = colours[:, comp_of]
    us, vs = g.endpoint_arrays
    keep = (vc[:, us] == vc[:, vs]) & (u < params.p)
    return keep.astype(np.int64) @ _edge_weights(g)


def sw_step(g: Graph, params: ModelParams, a: EdgeSubset | int, rng: np.random.Generator):
    """One Swendsen-Wang move; returns the same kind (subset or mask) as ``a``."""
    return _like(a, sw_step_batch(g, params, a, rng, 1)[0], g.n_edges)


def sb_transition(g: Graph, params: ModelParams, a: EdgeSubset | int,
                  stay: bool, e: int, u: float):
    """Deterministic part of a single-bond move given its three random draws."""
    mask = as_mask(a)
    if stay:
        return _like(a, mask, g.n_edges)
    e1, e2 = g.edges[e]
    labels = components(g, mask)[1]
    p_add = params.p if labels[e1] == labels[e2] else params.p / params.q
    bit = 1 << e
    return _like(a, mask | bit if u < p_add else mask & ~bit, g.n_edges)


def sb_step(g: Graph, params: ModelParams, a: EdgeSubset | int,
            rng: np.random.Generator, lazy: bool = True):
    """One single-bond move.

    Draw order: laziness coin (lazy chain only), edge index, retention uniform.
    All draws are consumed even when the coin says stay.
    """
    _need_edges(g)
    stay = bool(rng.random() < 0.5) if lazy else False
    e = int(rng.integers(g.n_edges))
    u = float(rng.random())
    return sb_transition(g, params, a, stay, e, u)


def sb_step_batch(g: Graph, params: ModelParams, a: EdgeSubset | int,
                  rng: np.random.Generator, size: int, lazy: bool = True) -> np.ndarray:
    """``size`` independent single-bond moves from ``a``; block-drawn in the
    same order as :func:`sb_step`."""
    _need_edges(g)
    mask = as_mask(a)
    stay = rng.random(size) < 0.5 if lazy else np.zeros(size, dtype=bool)
    e = rng.integers(g.n_edges, size=size)
    u = rng.random(size)
    labels = np.asarray(components(g, mask)[1])
    us, vs = g.endpoint_arrays
    conn = labels[us] == labels[vs]
    p_add = np.where(conn[e], params.p, params.p / params.q)
    bits = np.left_shift(np.int64(1), e)
    moved = np.where(u < p_add, mask | bits, mask & ~bits)
    return np.where(stay, mask, moved)
