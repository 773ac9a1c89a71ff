"""Random-cluster, Potts and Edwards-Sokal (FKES) measures by enumeration.

State indexing used throughout the package:

* RC state ``A``: integer in ``[0, 2**|E|)``, bit ``i`` = edge ``i``.
* Potts state ``sigma``: integer in ``[0, q**|V|)`` written in base ``q``
  with vertex 0 as the least significant digit; digit ``k`` means colour
  ``k + 1``.
* Joint state ``(sigma, A)``: ``spin_index * 2**|E| + subset_index``.

Everything is evaluated in natural-log space and normalised with a
max-shifted sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ParameterError, check_cap, get_caps
from .graph import EdgeSubset, Graph, as_mask, components


@dataclass(frozen=True)
class ModelParams:
    """Edge probability ``p`` and cluster weight ``q``; ``beta = -log(1-p)``."""

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ParameterError(f"p must lie in (0, 1), got {self.p}")
        if not self.q >= 1:
            raise ParameterError(f"q must be >= 1, got {self.q}")

    @classmethod
    def from_beta(cls, beta: float, q: float) -> "ModelParams":
        return cls(-math.expm1(-beta), q)

    @property
    def beta(self) -> float:
        return -math.log1p(-self.p)

    @property
    def log_odds(self) -> float:
        """log(p / (1-p))"""
        return math.log(self.p) - math.log1p(-self.p)

    @property
    def is_integer_q(self) -> bool:
        return float(self.q).is_integer()

    def int_q(self) -> int:
        """``q`` as an int; colourings need an integer number of colours."""
        if not self.is_integer_q:
            raise ParameterError(f"q must be an integer here, got {self.q}")
        return int(self.q)


# --------------------------------------------------------------------------
# cached enumeration tables
# --------------------------------------------------------------------------

@lru_cache(maxsize=64)
def subset_tables(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """(|A|, c(A)) for every subset index, as int64 arrays."""
    n = 1 << g.n_edges
    check_cap("RC states", n, get_caps().rc_states)
    masks = np.arange(n, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    for i in range(g.n_edges):
        sizes += (masks >> i) & 1
    counts = np.fromiter((components(g, a)[0] for a in range(n)), dtype=np.int64, count=n)
    for arr in (sizes, counts):
        arr.flags.writeable = False
    return sizes, counts


@lru_cache(maxsize=64)
def spin_tables(g: Graph, q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(colours, monochromatic-edge mask, |E(sigma)|) for every spin index.

    ``colours`` has shape ``(q**|V|, |V|)`` and holds 0-based colours.
    """
    n = q**g.n_vertices
    check_cap("Potts states", n, get_caps().spin_states)
    idx = np.arange(n, dtype=np.int64)
    colours = np.empty((n, g.n_vertices), dtype=np.int64)
    for v in range(g.n_vertices):
        colours[:, v] = (idx // q**v) % q
    mono = np.zeros(n, dtype=np.int64)
    n_mono = np.zeros(n, dtype=np.int64)
    for i, (u, v) in enumerate(g.edges):
        same = colours[:, u] == colours[:, v]
        mono |= same.astype(np.int64) << i
        n_mono += same
    for arr in (colours, mono, n_mono):
        arr.flags.writeable = False
    return colours, mono, n_mono


def spin_index(sigma: Sequence[int], q: int) -> int:
    """Index of a colouring given with colours in ``1..q``."""
    idx = 0
    for v in reversed(range(len(sigma))):
        c = int(sigma[v])
        if not 1 <= c <= q:
            raise ParameterError(f"colour {c} at vertex {v} outside 1..{q}")
        idx = idx * q + (c - 1)
    return idx


def spin_config(index: int, n_vertices: int, q: int) -> tuple[int, ...]:
    """Inverse of :func:`spin_index` (colours in ``1..q``)."""
    return tuple((index // q**v) % q + 1 for v in range(n_vertices))


def joint_index(spin: int, subset: int, n_edges: int) -> int:
    return spin * (1 << n_edges) + subset


def split_joint_index(j: int, n_edges: int) -> tuple[int, int]:
    return j >> n_edges, j & ((1 << n_edges) - 1)


# --------------------------------------------------------------------------
# random-cluster measure
# --------------------------------------------------------------------------

def rc_log_weight(g: Graph, params: ModelParams, a: EdgeSubset | int) -> float:
    mask = as_mask(a)
    return mask.bit_count() * params.log_odds + components(g, mask)[0] * math.log(params.q)


def rc_log_weights(g: Graph, params: ModelParams) -> np.ndarray:
    """Unnormalised log weights of all ``2**|E|`` subsets."""
    sizes, counts = subset_tables(g)
    return sizes * params.log_odds + counts * math.log(params.q)


def rc_log_partition(g: Graph, params: ModelParams) -> float:
    return float(logsumexp(rc_log_weights(g, params)))


def rc_distribution(g: Graph, params: ModelParams) -> np.ndarray:
    lw = rc_log_weights(g, params)
    return np.exp(lw - logsumexp(lw))


def rc_prob(g: Graph, params: ModelParams, a: EdgeSubset | int) -> float:
    return math.exp(rc_log_weight(g, params, a) - rc_log_partition(g, params))


# --------------------------------------------------------------------------
# structural maps E(sigma) and Omega(A)
# --------------------------------------------------------------------------

def monochromatic_edges(g: Graph, sigma: Sequence[int]) -> EdgeSubset:
    if len(sigma) != g.n_vertices:
        raise ParameterError("colouring length does not match vertex count")
    bits = 0
    for i, (u, v) in enumerate(g.edges):
        if sigma[u] == sigma[v]:
            bits |= 1 << i
    return EdgeSubset(bits, g.n_edges)


def in_omega(g: Graph, sigma: Sequence[int], a: EdgeSubset | int) -> bool:
    """True iff ``sigma`` is constant on every edge of ``A``."""
    mask = as_mask(a)
    return all(sigma[u] == sigma[v] for i, (u, v) in enumerate(g.edges) if mask >> i & 1)


# --------------------------------------------------------------------------
# Potts measure
# --------------------------------------------------------------------------

def potts_log_weights(g: Graph, params: ModelParams) -> np.ndarray:
    """Unnormalised log weights ``beta * |E(sigma)|`` for all colourings."""
    _, _, n_mono = spin_tables(g, params.int_q())
    return params.beta * n_mono


def potts_log_probs(g: Graph, params: ModelParams) -> np.ndarray:
    """Normalised by the random-cluster partition function Z(G, p, q)."""
    return potts_log_weights(g, params) - rc_log_partition(g, params)


def potts_log_prob(g: Graph, params: ModelParams, sigma: Sequence[int]) -> float:
    q = params.int_q()
    n_mono = len(monochromatic_edges(g, sigma))
    spin_index(sigma, q)  # range check
    return params.beta * n_mono - rc_log_partition(g, params)


def potts_log_probs_at_beta(g: Graph, beta: float, q: int) -> np.ndarray:
    """Potts log-probabilities at an arbitrary ``beta >= 0`` (``beta = 0``
    included), normalised by direct summation."""
    if beta < 0:
        raise ParameterError("beta must be non-negative")
    _, _, n_mono = spin_tables(g, int(q))
    lw = beta * n_mono.astype(float)
    return lw - logsumexp(lw)


# --------------------------------------------------------------------------
# FKES joint measure
# --------------------------------------------------------------------------

def fkes_log_prob(g: Graph, params: ModelParams, sigma: Sequence[int], a: EdgeSubset | int) -> float:
    params.int_q()
    mask = as_mask(a)
    if not in_omega(g, sigma, mask):
        return -math.inf
    return mask.bit_count() * params.log_odds - rc_log_partition(g, params)


def fkes_log_probs(g: Graph, params: ModelParams) -> np.ndarray:
    """Log-probabilities over the joint space, indexed by :func:`joint_index`.

    Entries with ``A`` not inside ``E(sigma)`` are ``-inf``.
    """
    q = params.int_q()
    n_sub = 1 << g.n_edges
    check_cap("joint states", q**g.n_vertices * n_sub, get_caps().joint_states)
    _, mono, _ = spin_tables(g, q)
    sizes, _ = subset_tables(g)
    subsets = np.arange(n_sub, dtype=np.int64)
    support = (subsets[None, :] & ~mono[:, None]) == 0
    lw = np.where(support, sizes[None, :] * params.log_odds, -np.inf)
    return (lw - rc_log_partition(g, params)).ravel()


def fkes_distribution(g: Graph, params: ModelParams) -> np.ndarray:
    return np.exp(fkes_log_probs(g, params))
