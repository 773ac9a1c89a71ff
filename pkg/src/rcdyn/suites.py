"""Verification suites over small graphs.

Each suite is a list of independent tasks; a task returns a list of records
(plain dicts with at least ``suite``, ``check``, ``max_violation`` and
``pass``).  The CLI streams records as JSON lines and the acceptance tests
assert on them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from functools import partial
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy import stats

from . import bounds, dynamics, joint, models, spectral
from .graph import (
    EdgeSubset,
    Graph,
    enumerate_connected_graphs,
    enumerate_trees,
    graph_label,
    make_complete,
    make_cycle,
    make_path,
    make_torus,
)
from .models import ModelParams

THEOREM_TOL = 1e-9
ENTRY_TOL = 1e-12
MARGINAL_TOL = 1e-12
CENSUS_PVALUE = 1e-3

SUITES = ("theorem", "lemma", "representation", "marginals", "sandwich",
          "tree", "width", "mixing", "bounds", "sampler")


@dataclass
class VerifyConfig:
    ps: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    qs: tuple[int, ...] = (2, 3)
    max_vertices: int | None = None
    fixture_ps: tuple[float, ...] = (0.2, 0.5, 0.8)
    tree_max_edges: int = 5
    census_samples: int = 100_000
    seed: int = 0

    @property
    def vertex_limit(self) -> int:
        if self.max_vertices is not None:
            return self.max_vertices
        return 4 if max(self.qs) <= 3 else 3


def record(suite: str, check: str, violation: float, tol: float, **extra) -> dict:
    return {"suite": suite, "check": check, **extra,
            "max_violation": float(violation), "pass": bool(violation <= tol)}


def suite_graphs(cfg: VerifyConfig) -> list[Graph]:
    return list(enumerate_connected_graphs(cfg.vertex_limit))


def fixture_graphs(cfg: VerifyConfig) -> list[Graph]:
    gs = [make_path(2), make_path(4), make_complete(3)]
    return [g for g in gs if g.n_vertices <= cfg.vertex_limit]


def _grid(graphs: Iterable[Graph], ps, qs) -> Iterator[tuple[Graph, ModelParams]]:
    for g in graphs:
        for q in qs:
            for p in ps:
                yield g, ModelParams(p, q)


def _where(g: Graph, params: ModelParams) -> dict:
    return {"graph": graph_label(g), "p": params.p, "q": params.q}


# --------------------------------------------------------------------------
# task bodies (module level so they pickle for process pools)
# --------------------------------------------------------------------------

def theorem_point(g: Graph, params: ModelParams) -> list[dict]:
    sw = spectral.spectral_gap(dynamics.sw_matrix(g, params)).gap
    out = []
    for lazy in (True, False):
        sb = spectral.spectral_gap(dynamics.sb_matrix(g, params, lazy=lazy)).gap
        out.append(record("theorem", "gap(SW) >= gap(SB)" if lazy else "gap(SW) >= gap(SB nonlazy)",
                          max(0.0, sb - sw), THEOREM_TOL, **_where(g, params), gap_sw=sw, gap_sb=sb))
    return out


def lemma_point(g: Graph, params: ModelParams) -> list[dict]:
    return [record("lemma", c.check, c.max_violation, c.tol, **_where(g, params))
            for c in joint.verify_lemma_properties(g, params)]


def representation_point(g: Graph, params: ModelParams) -> list[dict]:
    return [record("representation", c.check, c.max_violation, c.tol, **_where(g, params))
            for c in joint.verify_representation(g, params)]


def marginals_point(g: Graph, params: ModelParams) -> list[dict]:
    q = params.int_q()
    mubar = models.fkes_distribution(g, params).reshape(q**g.n_vertices, 1 << g.n_edges)
    pi = np.exp(models.potts_log_probs(g, params))
    mu = models.rc_distribution(g, params)
    return [
        record("marginals", "sum_A mubar = pi", np.max(np.abs(mubar.sum(axis=1) - pi)),
               MARGINAL_TOL, **_where(g, params)),
        record("marginals", "sum_sigma mubar = mu", np.max(np.abs(mubar.sum(axis=0) - mu)),
               MARGINAL_TOL, **_where(g, params)),
    ]


def _offdiag_excess(lower: np.ndarray, upper: np.ndarray) -> float:
    """max over x != y of (lower - upper)_+"""
    diff = lower - upper
    np.fill_diagonal(diff, -np.inf)
    return max(0.0, float(np.max(diff)))


def sandwich_point(g: Graph, params: ModelParams) -> list[dict]:
    sb = dynamics.sb_matrix(g, params)
    hb = dynamics.heatbath_matrix(g, params)
    mp = dynamics.metropolis_matrix(g, params)
    c = 1.0 / (1.0 - params.p * (1.0 - 1.0 / params.q))
    where = _where(g, params)
    gap_sb = spectral.spectral_gap(sb).gap
    gap_hb = spectral.spectral_gap(hb).gap
    gap_mp = spectral.spectral_gap(mp).gap
    return [
        record("sandwich", "P_SB <= P_HB", _offdiag_excess(sb.matrix, hb.matrix), ENTRY_TOL, **where),
        record("sandwich", "P_HB <= c P_SB", _offdiag_excess(hb.matrix, c * sb.matrix), ENTRY_TOL, **where),
        record("sandwich", "P_M <= 2q P_SB",
               _offdiag_excess(mp.matrix, 2 * params.q * sb.matrix), ENTRY_TOL, **where),
        record("sandwich", "gap(SB) <= gap(HB) <= c gap(SB)",
               max(0.0, gap_sb - gap_hb, gap_hb - c * gap_sb), THEOREM_TOL,
               **where, gap_sb=gap_sb, gap_hb=gap_hb),
        record("sandwich", "1/gap(SB) <= 2q/gap(M)",
               max(0.0, 1 / gap_sb - 2 * params.q / gap_mp), THEOREM_TOL,
               **where, gap_sb=gap_sb, gap_metropolis=gap_mp),
    ]


def tree_point(g: Graph, params: ModelParams) -> list[dict]:
    exact = bounds.tree_gap_exact(g, params)
    gap_sb = spectral.spectral_gap(dynamics.sb_matrix(g, params)).gap
    gap_sw = spectral.spectral_gap(dynamics.sw_matrix(g, params)).gap
    bound = bounds.sw_tree_bound(g, params)
    where = _where(g, params)
    return [
        record("tree", "gap(SB) = (1-p(1-1/q))/(2|E|)", abs(gap_sb - exact), 1e-10,
               **where, gap_sb=gap_sb, formula=exact),
        record("tree", "1/gap(SW) <= 2|E|/(1-p(1-1/q))", max(0.0, 1 / gap_sw - bound), THEOREM_TOL,
               **where, inv_gap_sw=1 / gap_sw, bound=bound),
    ]


def width_point(g: Graph) -> list[dict]:
    bw = bounds.bandwidth_exact(g)
    lw = bounds.linear_width_exact(g)
    return [
        record("width", "witnesses re-evaluate",
               abs(bounds.bandwidth_of(g, bw.witness) - bw.width)
               + abs(bounds.linear_width_of(g, lw.witness) - lw.width), 0,
               graph=graph_label(g)),
        record("width", "lw <= bw + 1", max(0, lw.width - bw.width - 1), 0,
               graph=graph_label(g), bandwidth=bw.width, linear_width=lw.width),
    ]


def width_fixed_checks() -> list[dict]:
    out = []
    for L in range(4, 9):
        out.append(record("width", f"bw(C_{L}) = 2", abs(bounds.bandwidth_exact(make_cycle(L)).width - 2), 0))
    out.append(record("width", "lw bound(3,2) = 7", abs(bounds.torus_linear_width_bound(3, 2) - 7), 0))
    bw = bounds.bandwidth_exact(make_torus(3, 2)).width
    out.append(record("width", "bw(torus(3,2)) <= 2L^{d-1}", max(0, bw - 6), 0, bandwidth=bw))
    return out


MIXING_DYNAMICS = ("sw", "sb", "sb-nonlazy", "heatbath", "metropolis")


def mixing_point(g: Graph, params: ModelParams) -> list[dict]:
    where = _where(g, params)
    out, taus = [], {}
    for name in MIXING_DYNAMICS:
        P = dynamics.dynamics_matrix(name, g, params)
        gap = spectral.spectral_gap(P).gap
        res = spectral.exact_mixing_time(P, gap=gap)
        taus[name] = res.tau
        if res.tau is None:
            viol = math.inf
        else:
            viol = max(0.0, res.lower - res.tau, res.tau - res.upper)
        out.append(record("mixing", f"tau({name}) in sandwich", viol, 0.0,
                          **where, tau=res.tau, lower=res.lower, upper=res.upper))
    factor = bounds.mixing_comparison_factor(g, params)
    ok_taus = taus["sw"] is not None and taus["sb"] is not None
    viol = max(0.0, taus["sw"] - factor * taus["sb"]) if ok_taus else math.inf
    out.append(record("mixing", "tau(SW) <= factor tau(SB)", viol, 0.0,
                      **where, tau_sw=taus["sw"], tau_sb=taus["sb"], factor=factor))
    return out


def bounds_point(g: Graph, params: ModelParams) -> list[dict]:
    lw = bounds.linear_width_exact(g).width
    log_bound = bounds.width_gap_bound(g.n_edges, params.q, lw)
    gap = spectral.spectral_gap(dynamics.sb_matrix(g, params)).gap
    mu_min = float(np.min(models.rc_distribution(g, params)))
    mu_bound = spectral.mu_min_lower_bound(g, params)
    where = _where(g, params)
    return [
        record("bounds", "log(1/gap(SB)) <= log(4|E|^2 q^(lw+1))",
               max(0.0, -math.log(gap) - log_bound), 0.0, **where, linear_width=lw),
        record("bounds", "mu_min bound <= mu_min", max(0.0, mu_bound - mu_min), 0.0, **where),
    ]


def bounds_fixed_checks() -> list[dict]:
    return [
        record("bounds", "k1(0.5) = 0.869742", abs(bounds.k1(0.5) - 0.869742), 1e-6, value=bounds.k1(0.5)),
        # 4 + 3 log 2 + log(1 + log 2) evaluated at high precision
        record("bounds", "k2(2) = 6.606031", abs(bounds.k2(2) - 6.6060305758), 1e-6, value=bounds.k2(2)),
    ]


# --------------------------------------------------------------------------
# sampler census
# --------------------------------------------------------------------------

def census_pvalue(samples: np.ndarray, row: np.ndarray) -> tuple[float, int]:
    """Chi-square p-value of sampled states against an exact matrix row, and
    the number of samples that landed on zero-probability states."""
    counts = np.bincount(samples, minlength=row.size)
    support = row > 0
    stray = int(counts[~support].sum())
    if support.sum() < 2:
        return 1.0, stray
    expected = row[support] / row[support].sum() * counts[support].sum()
    return float(stats.chisquare(counts[support], expected).pvalue), stray


def sampler_point(g: Graph, params: ModelParams, n_samples: int, seed: int) -> list[dict]:
    out = []
    samplers = {
        "sw": (dynamics.sw_matrix(g, params), dynamics.sw_step_batch),
        "sb": (dynamics.sb_matrix(g, params), dynamics.sb_step_batch),
    }
    for name, (P, batch) in samplers.items():
        for a in range(1 << g.n_edges):
            rng = dynamics.make_rng(seed)
            pv, stray = census_pvalue(batch(g, params, EdgeSubset(a, g.n_edges), rng, n_samples), P.matrix[a])
            viol = max(0.0, CENSUS_PVALUE - pv) + stray
            out.append(record("sampler", f"{name} census", viol, 0.0, **_where(g, params),
                              start=a, pvalue=pv, stray=stray))
    return out


# --------------------------------------------------------------------------
# task lists and runner
# --------------------------------------------------------------------------

Task = Callable[[], list[dict]]


def suite_tasks(name: str, cfg: VerifyConfig) -> list[Task]:
    if name == "theorem":
        return [partial(theorem_point, g, pr) for g, pr in _grid(suite_graphs(cfg), cfg.ps, cfg.qs)]
    if name == "lemma":
        return [partial(lemma_point, g, pr) for g, pr in _grid(fixture_graphs(cfg), cfg.fixture_ps, cfg.qs)]
    if name == "representation":
        return [partial(representation_point, g, pr)
                for g, pr in _grid(fixture_graphs(cfg), cfg.fixture_ps, cfg.qs)]
    if name == "marginals":
        gs = [g for g in (make_complete(3), make_path(4)) if g.n_vertices <= cfg.vertex_limit]
        return [partial(marginals_point, g, pr) for g, pr in _grid(gs, cfg.fixture_ps, cfg.qs)]
    if name == "sandwich":
        return [partial(sandwich_point, g, pr) for g, pr in _grid(suite_graphs(cfg), cfg.ps, cfg.qs)]
    if name == "tree":
        return [partial(tree_point, g, pr)
                for g, pr in _grid(enumerate_trees(cfg.tree_max_edges), cfg.fixture_ps, cfg.qs)]
    if name == "width":
        gs = [g for g in enumerate_connected_graphs(5) if g.n_edges <= bounds.MAX_LINEAR_WIDTH_EDGES]
        return [width_fixed_checks] + [partial(width_point, g) for g in gs]
    if name == "mixing":
        gs = [g for g in suite_graphs(cfg) if (1 << g.n_edges) <= 64]
        return [partial(mixing_point, g, pr) for g, pr in _grid(gs, cfg.ps, cfg.qs)]
    if name == "bounds":
        return [bounds_fixed_checks] + [partial(bounds_point, g, pr)
                                        for g, pr in _grid(suite_graphs(cfg), cfg.ps, cfg.qs)]
    if name == "sampler":
        gs = [make_path(2), make_complete(3)]
        return [partial(sampler_point, g, pr, cfg.census_samples, cfg.seed)
                for g, pr in _grid(gs, (0.5, 0.3), cfg.qs[:2])]
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")


def _call(task: Task) -> list[dict]:
    return task()


def run_tasks(tasks: list[Task], jobs: int = 1, ordered: bool = True) -> Iterator[dict]:
    """Run tasks, yielding records.  With ``jobs > 1`` tasks go to a process
    pool; ``ordered`` keeps task order, otherwise records stream as tasks
    finish."""
    if jobs <= 1:
        for t in tasks:
            yield from t()
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_call, t) for t in tasks]
        if ordered:
            for f in futures:
                yield from f.result()
        else:
            for f in as_completed(futures):
                yield from f.result()


def run_suite(name: str, cfg: VerifyConfig | None = None, jobs: int = 1, ordered: bool = True) -> list[dict]:
    return list(run_tasks(suite_tasks(name, cfg or VerifyConfig()), jobs, ordered))
