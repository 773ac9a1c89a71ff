import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcdyn.dynamics import DYNAMICS, StochasticMatrix, dynamics_matrix, sb_matrix, sw_matrix
from rcdyn.errors import CapExceededError, ConvergenceError, NotReversibleError, ParameterError, caps_override
from rcdyn.graph import enumerate_connected_graphs, make_complete, make_path
from rcdyn.models import ModelParams, rc_distribution
from rcdyn.spectral import (
    check_reversible, exact_mixing_time, gap_via_norm, jacobi_eigenvalues, mu_min_lower_bound,
    sandwich_bounds, spectral_gap, stationary_projector, symmetrize,
)

SMALL = list(enumerate_connected_graphs(4))
HALF = ModelParams(0.5, 2)


def _chain(P, pi):
    return StochasticMatrix(np.asarray(P, float), np.asarray(pi, float))


def test_check_reversible_examples(triangle):
    for name in DYNAMICS:
        assert check_reversible(dynamics_matrix(name, triangle, HALF)) < 1e-12
    P = dynamics_matrix("sb", triangle, HALF)
    bumped = P.matrix.copy()
    bumped[0, 1] += 1e-6
    bumped[0, 0] -= 1e-6
    err = check_reversible(_chain(bumped, P.stationary))
    assert err == pytest.approx(1e-6 * P.stationary[0], rel=1e-6)
    M = np.array([[0.5, 0.3, 0.2], [0.3, 0.4, 0.3], [0.2, 0.3, 0.5]])
    assert check_reversible(_chain(M, np.full(3, 1 / 3))) == 0.0


def test_gap_k2_examples(k2):
    sb = spectral_gap(sb_matrix(k2, HALF))
    np.testing.assert_allclose(sb.eigenvalues, [1.0, 0.625], atol=1e-14)
    assert sb.gap == pytest.approx(0.375, abs=1e-14)
    assert spectral_gap(sw_matrix(k2, HALF)).gap == pytest.approx(0.75, abs=1e-14)


def test_identity_and_projector():
    pi = np.array([0.2, 0.3, 0.5])
    assert spectral_gap(_chain(np.eye(3), pi)).gap == pytest.approx(0.0, abs=1e-14)
    assert gap_via_norm(_chain(np.eye(3), pi)) == pytest.approx(0.0, abs=1e-14)
    S = stationary_projector(pi)
    assert spectral_gap(_chain(S, pi)).gap == pytest.approx(1.0, abs=1e-14)
    assert gap_via_norm(_chain(S, pi)) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ParameterError):
        spectral_gap(_chain(np.eye(3), pi), require_ergodic=True)


def test_non_reversible_rejected():
    P = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    P = 0.5 * np.eye(3) + 0.5 * P
    with pytest.raises(NotReversibleError):
        spectral_gap(_chain(P, np.full(3, 1 / 3)))


def test_jacobi_against_lapack():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 16, 33):
        X = rng.normal(size=(n, n))
        S = X + X.T
        eig, _ = jacobi_eigenvalues(S)
        np.testing.assert_allclose(np.sort(eig), np.linalg.eigvalsh(S), atol=1e-11)


def test_jacobi_sweep_cap():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(12, 12))
    with pytest.raises(ConvergenceError):
        jacobi_eigenvalues(X + X.T, max_sweeps=1)


@pytest.mark.parametrize("g", SMALL[::2])
@pytest.mark.parametrize("name", DYNAMICS)
def test_gap_routes_agree(g, name):
    P = dynamics_matrix(name, g, ModelParams(0.3, 3))
    assert spectral_gap(P).gap == pytest.approx(gap_via_norm(P), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SMALL), st.floats(0.05, 0.95), st.sampled_from([2, 3]), st.sampled_from(DYNAMICS))
def test_spectrum_properties(g, p, q, name):
    P = dynamics_matrix(name, g, ModelParams(p, q))
    S = symmetrize(P)
    assert np.max(np.abs(S - S.T)) < 1e-12
    res = spectral_gap(P)
    assert np.sum(res.eigenvalues) == pytest.approx(np.trace(P.matrix), abs=1e-10)
    assert np.all(res.eigenvalues <= 1 + 1e-10) and np.all(res.eigenvalues >= -1 - 1e-10)
    assert res.multiplicity_of_one == 1
    if P.lazy:
        assert res.eigenvalues.min() >= -1e-10


def test_eigensolve_cap():
    with caps_override(eigen_dim=4):
        with pytest.raises(CapExceededError):
            spectral_gap(sb_matrix(make_complete(3), HALF))
    spectral_gap(sb_matrix(make_complete(3), HALF))


def test_mixing_projector_is_one_step():
    pi = np.array([0.25, 0.75])
    res = exact_mixing_time(_chain(stationary_projector(pi), pi))
    assert res.tau == 1
    assert res.l1_distances[1] == pytest.approx(0.0, abs=1e-15)


def test_mixing_k2_sandwich(k2):
    P = sb_matrix(k2, HALF)
    res = exact_mixing_time(P)
    assert 1 / 0.375 - 1 <= res.tau <= math.log(2 * math.e / (1 / 3)) / 0.375
    assert res.within_sandwich


def test_mixing_tau_matches_naive_powering(triangle):
    P = sw_matrix(triangle, ModelParams(0.7, 3))
    res = exact_mixing_time(P)
    pi = P.stationary
    t = 0
    while np.max(np.abs(np.linalg.matrix_power(P.matrix, t) - pi).sum(axis=1)) > 1 / math.e:
        t += 1
    assert res.tau == t


def test_mixing_timeout(triangle):
    P = _chain(np.eye(2), [0.5, 0.5])
    res = exact_mixing_time(P, cap_steps=5)
    assert res.tau is None and res.timed_out


def test_sandwich_bound_examples():
    pi = np.array([0.5, 0.5])
    lo, hi = sandwich_bounds(_chain(stationary_projector(pi), pi))
    assert lo == pytest.approx(0.0, abs=1e-14)
    n = 4
    u = np.full(n, 1 / n)
    P = 0.5 * np.eye(n) + 0.5 * stationary_projector(u)
    lo, hi = sandwich_bounds(_chain(P, u), gap=0.5)
    assert hi == pytest.approx(math.log(2 * math.e * n) / 0.5)


def test_mu_min_bound_examples(k2):
    assert mu_min_lower_bound(k2, HALF) == pytest.approx(0.0625)
    assert mu_min_lower_bound(k2, HALF) <= rc_distribution(k2, HALF).min()
    for g in SMALL:
        for p, q in [(0.1, 2), (0.5, 3), (0.9, 2)]:
            pr = ModelParams(p, q)
            assert mu_min_lower_bound(g, pr) <= rc_distribution(g, pr).min() * (1 + 1e-12)
    # doubling |E| multiplies the bound by (p(1-p))^|E|
    g1, g2 = make_path(3), make_path(5)
    ratio = mu_min_lower_bound(g2, HALF) / mu_min_lower_bound(g1, HALF)
    assert ratio == pytest.approx(0.25**2 * 2**-2)
