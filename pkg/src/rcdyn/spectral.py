"""Spectral gaps and exact mixing times of reversible chains."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import StochasticMatrix
from .errors import ConvergenceError, NotReversibleError, ParameterError, check_cap, get_caps
from .graph import Graph
from .models import ModelParams

REVERSIBILITY_TOL = 1e-9
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
UNIT_EIGENVALUE_TOL = 1e-10


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray      # descending
    gap: float
    second_eigenvalue: float     # largest-modulus eigenvalue other than the leading 1
    multiplicity_of_one: int
    sweeps: int = 0

    @property
    def relaxation_time(self) -> float:
        return math.inf if self.gap <= 0 else 1.0 / self.gap


@dataclass
class MixingResult:
    tau: int | None              # None when cap_steps ran out
    l1_distances: np.ndarray     # max_x sum_y |P^t(x,y) - pi(y)| for t = 0, 1, ...
    lower: float
    upper: float
    timed_out: bool = False

    @property
    def within_sandwich(self) -> bool:
        return self.tau is not None and self.lower <= self.tau <= self.upper


# --------------------------------------------------------------------------
# reversibility and symmetrisation
# --------------------------------------------------------------------------

def check_reversible(P: StochasticMatrix) -> float:
    """max_{x,y} |pi(x) P(x,y) - pi(y) P(y,x)|"""
    return P.reversibility_max_err()


def stationary_projector(pi: np.ndarray) -> np.ndarray:
    """Rank-one kernel ``S(x, y) = pi(y)``."""
    pi = np.asarray(pi, dtype=float)
    return np.tile(pi, (pi.size, 1))


def symmetrize(P: StochasticMatrix) -> np.ndarray:
    """``sqrt(pi(x)/pi(y)) P(x,y)``: similar to ``P`` and symmetric when ``P`` is
    reversible."""
    pi = P.stationary
    if np.any(pi <= 0):
        raise ParameterError("stationary distribution must be strictly positive")
    r = np.sqrt(pi)
    return r[:, None] * P.matrix / r[None, :]


def _validate(P: StochasticMatrix, cap: int, what: str) -> None:
    check_cap(what, P.dim, cap)
    err = check_reversible(P)
    if err > REVERSIBILITY_TOL:
        raise NotReversibleError(f"{P.name or 'matrix'}: detailed balance violated by {err:.3e}")


# --------------------------------------------------------------------------
# Jacobi eigensolver
# --------------------------------------------------------------------------

def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: m-1 rounds of m/2 disjoint index pairs covering
    every pair exactly once (m even)."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        top = players[: m // 2]
        bottom = players[m // 2:][::-1]
        p = np.array([min(a, b) for a, b in zip(top, bottom)])
        q = np.array([max(a, b) for a, b in zip(top, bottom)])
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigenvalues(S: np.ndarray, tol: float = JACOBI_TOL,
                       max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, int]:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in round-robin order so
    that the n/2 rotations of one round act on disjoint index pairs and can
    be applied together as a single orthogonal similarity.  Iterates until the
    off-diagonal Frobenius norm drops below ``tol``.

    Returns
    -------
    eigenvalues : ndarray
        Unsorted diagonal of the converged matrix.
    sweeps : int
        Number of full sweeps performed.

    Raises
    ------
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach ``tol``.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ParameterError("matrix must be square")
    if n <= 1 or _off_norm(A) < tol:
        return np.diag(A).copy(), 0
    m = n + (n % 2)
    schedule = []
    for p, q in _round_robin(m):
        keep = q < n   # drop the pair holding the padding index
        schedule.append((p[keep], q[keep]))

    for sweep in range(1, max_sweeps + 1):
        for p, q in schedule:
            apq = A[p, q]
            active = np.abs(apq) > 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            with np.errstate(over="ignore"):
                # tiny apq overflows theta to inf, giving the correct limit t = 0
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            J = np.eye(n)
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            A[p, q] = 0.0
            A[q, p] = 0.0
        A = 0.5 * (A + A.T)
        if _off_norm(A) < tol:
            return np.diag(A).copy(), sweep
    raise ConvergenceError(
        f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {_off_norm(A):.3e})"
    )


# --------------------------------------------------------------------------
# gaps
# --------------------------------------------------------------------------

def spectrum_from_eigenvalues(eigs: np.ndarray, sweeps: int = 0) -> SpectrumResult:
    eigs = np.sort(np.asarray(eigs, dtype=float))[::-1]
    rest = eigs[1:]
    if rest.size:
        k = int(np.argmax(np.abs(rest)))
        second = float(rest[k])
        gap = 1.0 - abs(second)
    else:
        second, gap = 0.0, 1.0
    mult = int(np.sum(np.abs(eigs - 1.0) < UNIT_EIGENVALUE_TOL))
    return SpectrumResult(eigs, gap, second, mult, sweeps)


def spectral_gap(P: StochasticMatrix, require_ergodic: bool = False) -> SpectrumResult:
    """Absolute spectral gap ``1 - max{|xi| : xi eigenvalue, xi != 1}``.

    One copy of the leading eigenvalue is removed; further unit eigenvalues
    (a reducible chain, e.g. the identity) give gap 0.  With
    ``require_ergodic`` a repeated eigenvalue 1 raises instead.
    """
    _validate(P, get_caps().eigen_dim, "dense eigensolve")
    S = symmetrize(P)
    asym = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if asym > REVERSIBILITY_TOL:
        raise NotReversibleError(f"symmetrised matrix is not symmetric ({asym:.3e})")
    eigs, sweeps = jacobi_eigenvalues(0.5 * (S + S.T))
    result = spectrum_from_eigenvalues(eigs, sweeps)
    if require_ergodic and result.multiplicity_of_one != 1:
        raise ParameterError(
            f"{P.name or 'chain'} has eigenvalue 1 with multiplicity {result.multiplicity_of_one}"
        )
    return result


def gap_via_norm(P: StochasticMatrix) -> float:
    """``1 - ||P - S_pi||_pi`` evaluated with LAPACK on the symmetrised
    operator; an independent route to :func:`spectral_gap`."""
    _validate(P, get_caps().eigen_dim, "dense eigensolve")
    r = np.sqrt(P.stationary)
    K = symmetrize(P) - np.outer(r, r)
    K = 0.5 * (K + K.T)
    norm = float(np.max(np.abs(np.linalg.eigvalsh(K)))) if K.size else 0.0
    return 1.0 - norm


# --------------------------------------------------------------------------
# mixing time
# --------------------------------------------------------------------------

def sandwich_bounds(P: StochasticMatrix, gap: float | None = None) -> tuple[float, float]:
    """``(1/gap - 1, log(2e/pi_min)/gap)``"""
    if gap is None:
        gap = spectral_gap(P).gap
    pi_min = float(np.min(P.stationary))
    if pi_min <= 0:
        raise ParameterError("pi_min must be positive")
    if gap <= 0:
        return math.inf, math.inf
    return 1.0 / gap - 1.0, math.log(2 * math.e / pi_min) / gap


def exact_mixing_time(P: StochasticMatrix, cap_steps: int = 10**6,
                      gap: float | None = None) -> MixingResult:
    """First ``t`` with ``max_x sum_y |P^t(x,y) - pi(y)| <= 1/e``.

    The threshold is applied to the L1 distance (twice the total variation
    distance).  Running out of ``cap_steps`` returns ``tau=None`` with
    ``timed_out`` set.
    """
    check_cap("matrix powering", P.dim, get_caps().power_dim)
    lower, upper = sandwich_bounds(P, gap)
    threshold = 1.0 / math.e
    pi = P.stationary
    Pt = np.eye(P.dim)
    dists = []
    for t in range(cap_steps + 1):
        d = float(np.max(np.sum(np.abs(Pt - pi[None, :]), axis=1)))
        dists.append(d)
        if d <= threshold:
            return MixingResult(t, np.array(dists), lower, upper)
        Pt = Pt @ P.matrix
    return MixingResult(None, np.array(dists), lower, upper, timed_out=True)


def mu_min_lower_bound(g: Graph, params: ModelParams) -> float:
    """``(p(1-p))^{|E|} q^{-|V|}``, a lower bound on the smallest RC probability."""
    p, q = params.p, params.q
    return math.exp(g.n_edges * math.log(p * (1 - p)) - g.n_vertices * math.log(q))
