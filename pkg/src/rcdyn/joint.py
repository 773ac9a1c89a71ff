"""Operators on the joint (colouring, subset) space and checks of their algebra.

``M`` lifts a subset ``B`` to a uniformly random compatible colouring,
``M*`` forgets the colouring, and ``T_e`` resamples edge ``e`` given the
colouring.  Both Swendsen-Wang and single-bond dynamics factor through these:
``P_SW = M (prod_e T_e) M*`` and ``P_e = M T_e M*``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .dynamics import sb_matrix, single_edge_matrix, sw_matrix
from .errors import check_cap, get_caps
from .graph import Graph
from .models import ModelParams, fkes_distribution, rc_distribution, spin_tables, subset_tables
from .spectral import jacobi_eigenvalues

ALGEBRA_TOL = 1e-12
SPECTRUM_TOL = 1e-10


@dataclass
class SparseKernel:
    """Kernel between two indexed state spaces, stored as CSR."""

    matrix: sp.csr_matrix
    rows: str = ""
    cols: str = ""

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)
        self.matrix.sum_duplicates()
        self.matrix.sort_indices()

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def __matmul__(self, other: "SparseKernel") -> "SparseKernel":
        return SparseKernel(self.matrix @ other.matrix, self.rows, other.cols)

    def triples(self) -> list[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def nnz_per_row(self) -> np.ndarray:
        return np.diff(self.matrix.indptr)

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class CheckResult:
    check: str
    max_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.max_violation <= self.tol)

    def to_json(self) -> dict:
        return {"check": self.check, "max_violation": self.max_violation, "pass": self.passed}


def _dims(g: Graph, q: int) -> tuple[int, int]:
    n_sub = 1 << g.n_edges
    n_joint = q**g.n_vertices * n_sub
    check_cap("joint states", n_joint, get_caps().joint_states)
    return n_sub, n_joint


def _support(g: Graph, q: int) -> np.ndarray:
    """Boolean ``(q**|V|, 2**|E|)`` array: ``A`` inside ``E(sigma)``."""
    _, mono, _ = spin_tables(g, q)
    subsets = np.arange(1 << g.n_edges, dtype=np.int64)
    return (subsets[None, :] & ~mono[:, None]) == 0


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------

def build_M(g: Graph, params: ModelParams) -> SparseKernel:
    """``M(B, (sigma, A)) = q^{-c(B)} 1(A = B) 1(sigma in Omega(B))``"""
    q = params.int_q()
    n_sub, n_joint = _dims(g, q)
    _, counts = subset_tables(g)
    spins, subs = np.nonzero(_support(g, q))
    vals = float(q) ** (-counts[subs].astype(float))
    mat = sp.csr_matrix((vals, (subs, spins * n_sub + subs)), shape=(n_sub, n_joint))
    return SparseKernel(mat, "rc", "joint")


def build_M_star(g: Graph, q: int) -> SparseKernel:
    """``M*((sigma, A), B) = 1(A = B)``: forget the colouring."""
    n_sub, n_joint = _dims(g, int(q))
    j = np.arange(n_joint)
    mat = sp.csr_matrix((np.ones(n_joint), (j, j & (n_sub - 1))), shape=(n_joint, n_sub))
    return SparseKernel(mat, "joint", "rc")


def build_T_e(g: Graph, params: ModelParams, e: int) -> SparseKernel:
    """Resample edge ``e`` keeping the colouring: present w.p. ``p`` if the
    colouring is constant on ``e``, absent otherwise."""
    q = params.int_q()
    n_sub, n_joint = _dims(g, q)
    _, mono, _ = spin_tables(g, q)
    j = np.arange(n_joint)
    spin, sub = j >> g.n_edges, j & (n_sub - 1)
    bit = 1 << e
    same = (mono[spin] >> e) & 1 == 1
    base = spin * n_sub
    rows = np.concatenate([j, j[same]])
    cols = np.concatenate([base + (sub & ~bit), (base + (sub | bit))[same]])
    vals = np.concatenate([np.where(same, 1.0 - params.p, 1.0), np.full(int(same.sum()), params.p)])
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n_joint, n_joint))
    return SparseKernel(mat, "joint", "joint")


def product_T(g: Graph, params: ModelParams, order=None) -> SparseKernel:
    """``prod_e T_e`` multiplied left to right in ``order`` (ascending edge
    index by default)."""
    order = range(g.n_edges) if order is None else order
    q = params.int_q()
    _, n_joint = _dims(g, q)
    K = SparseKernel(sp.identity(n_joint, format="csr"), "joint", "joint")
    for e in order:
        K = K @ build_T_e(g, params, e)
    return K


def product_T_closed_form(g: Graph, params: ModelParams) -> SparseKernel:
    """``1(sigma = tau) 1(B in E(sigma)) p^{|B|} (1-p)^{|E(sigma)| - |B|}``"""
    q = params.int_q()
    n_sub, n_joint = _dims(g, q)
    _, _, n_mono = spin_tables(g, q)
    sizes, _ = subset_tables(g)
    sup = _support(g, q)
    rows, cols, vals = [], [], []
    for s in range(q**g.n_vertices):
        bs = np.nonzero(sup[s])[0]
        w = params.p ** sizes[bs] * (1 - params.p) ** (n_mono[s] - sizes[bs])
        a = np.arange(n_sub)
        rows.append(np.repeat(s * n_sub + a, bs.size))
        cols.append(np.tile(s * n_sub + bs, n_sub))
        vals.append(np.tile(w, n_sub))
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_joint, n_joint)
    )
    return SparseKernel(mat, "joint", "joint")


def joint_identity(g: Graph, q: int) -> SparseKernel:
    _, n_joint = _dims(g, int(q))
    return SparseKernel(sp.identity(n_joint, format="csr"), "joint", "joint")


def rc_to_joint_projector(g: Graph, params: ModelParams) -> SparseKernel:
    """``S(B, (sigma, A)) = mu_bar(sigma, A)`` for every ``B``."""
    mubar = fkes_distribution(g, params)
    n_sub = 1 << g.n_edges
    return SparseKernel(sp.csr_matrix(np.tile(mubar, (n_sub, 1))), "rc", "joint")


def adjoint(K: SparseKernel, row_measure: np.ndarray, col_measure: np.ndarray) -> SparseKernel:
    """Adjoint of ``K: L2(col_measure) -> L2(row_measure)``:
    ``K*(y, x) = row_measure(x) K(x, y) / col_measure(y)``.

    Rows ``y`` with ``col_measure(y) = 0`` are left empty.
    """
    coo = K.matrix.tocoo()
    ok = col_measure[coo.col] > 0
    vals = row_measure[coo.row[ok]] * coo.data[ok] / col_measure[coo.col[ok]]
    mat = sp.csr_matrix((vals, (coo.col[ok], coo.row[ok])), shape=(K.shape[1], K.shape[0]))
    return SparseKernel(mat, K.cols, K.rows)


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

def _max_abs(X) -> float:
    X = X.matrix if isinstance(X, SparseKernel) else X
    if sp.issparse(X):
        X = X.tocsr()
        return float(np.max(np.abs(X.data))) if X.nnz else 0.0
    return float(np.max(np.abs(X))) if np.size(X) else 0.0


def detailed_balance_violation(K: SparseKernel, measure: np.ndarray) -> float:
    """max |m(x) K(x,y) - m(y) K(y,x)| over states with ``m > 0``."""
    keep = np.nonzero(measure > 0)[0]
    sub = K.matrix[keep][:, keep]
    flow = sp.diags(measure[keep]) @ sub
    return _max_abs(flow - flow.T)


def spectrum_distance_to_01(K: SparseKernel, measure: np.ndarray) -> float:
    """Largest distance from an eigenvalue of the measure-symmetrised ``K``
    (restricted to the support of ``measure``) to the set {0, 1}.

    Eigenvalues are computed blockwise over the connected pieces of the
    kernel's support graph.
    """
    keep = np.nonzero(measure > 0)[0]
    sub = K.matrix[keep][:, keep].tocsr()
    r = np.sqrt(measure[keep])
    S = (sp.diags(r) @ sub @ sp.diags(1.0 / r)).tocsr()
    S = 0.5 * (S + S.T)
    n_blocks, labels = connected_components(S, directed=False)
    worst = 0.0
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_blocks + 1))
    for b in range(n_blocks):
        idx = order[bounds[b]:bounds[b + 1]]
        eigs, _ = jacobi_eigenvalues(S[idx][:, idx].toarray())
        worst = max(worst, float(np.max(np.minimum(np.abs(eigs), np.abs(eigs - 1.0)))))
    return worst


def mm_star_exact_violation(g: Graph, params: ModelParams) -> float:
    """``|M M* - I|`` evaluated in exact rational arithmetic."""
    q = params.int_q()
    _, counts = subset_tables(g)
    sup = _support(g, q)
    n_sub = 1 << g.n_edges
    worst = Fraction(0)
    for b in range(n_sub):
        # row b of M has entries q^{-c(b)} at (sigma, b); M* sends (sigma, b) to b
        entry = sum((Fraction(1, q ** int(counts[b])) for _ in np.nonzero(sup[:, b])[0]), Fraction(0))
        worst = max(worst, abs(entry - 1))
    return float(worst)


def verify_lemma_properties(g: Graph, params: ModelParams) -> list[CheckResult]:
    """Self-adjointness, projection identities, idempotence, commutation and
    {0,1}-spectra of ``M*M`` and the ``T_e``."""
    q = params.int_q()
    mubar = fkes_distribution(g, params)
    M = build_M(g, params)
    Ms = build_M_star(g, q)
    MsM = Ms @ M
    Ts = [build_T_e(g, params, e) for e in range(g.n_edges)]
    n_sub = 1 << g.n_edges

    out = [
        CheckResult("M*M self-adjoint", detailed_balance_violation(MsM, mubar), ALGEBRA_TOL),
        CheckResult("T_e self-adjoint",
                    max((detailed_balance_violation(T, mubar) for T in Ts), default=0.0), ALGEBRA_TOL),
        CheckResult("M M* = I (exact)", mm_star_exact_violation(g, params), 0.0),
        CheckResult("M M* = I", _max_abs((M @ Ms).matrix - sp.identity(n_sub)), ALGEBRA_TOL),
        CheckResult("(M*M)^2 = M*M", _max_abs((MsM @ MsM).matrix - MsM.matrix), ALGEBRA_TOL),
        CheckResult("T_e^2 = T_e", max((_max_abs((T @ T).matrix - T.matrix) for T in Ts), default=0.0),
                    ALGEBRA_TOL),
        CheckResult("T_e T_f = T_f T_e",
                    max((_max_abs((Ta @ Tb).matrix - (Tb @ Ta).matrix)
                         for Ta, Tb in itertools.combinations(Ts, 2)), default=0.0),
                    ALGEBRA_TOL),
        CheckResult("spec(T_e) in {0,1}",
                    max((spectrum_distance_to_01(T, mubar) for T in Ts), default=0.0), SPECTRUM_TOL),
        CheckResult("spec(M*M) in {0,1}", spectrum_distance_to_01(MsM, mubar), SPECTRUM_TOL),
    ]
    return out


def verify_representation(g: Graph, params: ModelParams) -> list[CheckResult]:
    """Entrywise comparison of the dynamics matrices with their joint-space
    factorisations."""
    q = params.int_q()
    M = build_M(g, params)
    Ms = build_M_star(g, q)
    prod = product_T(g, params)
    sw_joint = (M @ prod @ Ms).toarray()
    sw = sw_matrix(g, params).matrix
    pe_err = 0.0
    lifted_sum = np.zeros_like(sw)
    for e in range(g.n_edges):
        lifted = (M @ build_T_e(g, params, e) @ Ms).toarray()
        lifted_sum += lifted
        pe_err = max(pe_err, _max_abs(single_edge_matrix(g, params, e).matrix - lifted))
    sb_joint = 0.5 * np.eye(sw.shape[0]) + lifted_sum / (2 * g.n_edges)
    return [
        CheckResult("P_SW = M (prod T_e) M*", _max_abs(sw - sw_joint), ALGEBRA_TOL),
        CheckResult("P_e = M T_e M*", pe_err, ALGEBRA_TOL),
        CheckResult("P_SB = I/2 + sum M T_e M* / 2|E|",
                    _max_abs(sb_matrix(g, params).matrix - sb_joint), ALGEBRA_TOL),
        CheckResult("prod T_e closed form",
                    _max_abs(prod.matrix - product_T_closed_form(g, params).matrix), ALGEBRA_TOL),
        CheckResult("prod T_e order invariance",
                    _max_abs(prod.matrix - product_T(g, params, reversed(range(g.n_edges))).matrix),
                    ALGEBRA_TOL),
    ]


def edge_agreement_identity_violation(g: Graph, q: int) -> float:
    """max over (A, e) of ``|q^{-c(A)} #{sigma in Omega(A): sigma(e1) = sigma(e2)}
    - (1/q + 1_e(A)(1 - 1/q))|`` where ``1_e(A)`` flags connected endpoints."""
    from .dynamics import edge_connectivity_table

    _, mono, _ = spin_tables(g, q)
    _, counts = subset_tables(g)
    sup = _support(g, q)
    conn = edge_connectivity_table(g)
    worst = 0.0
    for e in range(g.n_edges):
        same = ((mono >> e) & 1 == 1)[:, None] & sup
        lhs = same.sum(axis=0) / float(q) ** counts
        rhs = 1.0 / q + conn[e] * (1.0 - 1.0 / q)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
