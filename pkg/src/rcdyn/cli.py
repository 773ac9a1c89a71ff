"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 cap exceeded,
4 verification failure, 1 any other runtime error.  Machine-readable output
goes to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds, dynamics, models, spectral, suites
from .errors import CapExceededError, ParameterError, caps_override
from .graph import EdgeSubset, Graph, components, graph_label, parse_graph
from .models import ModelParams

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CAP, EXIT_VERIFY = 0, 1, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    graph: Graph | None = None
    graph_source: str | None = None
    p: float | None = None
    q: float | None = None
    seed: int = 0
    fmt: str = "json"
    max_states: int | None = None
    p_grid: list[float] = field(default_factory=list)
    q_grid: list[float] = field(default_factory=list)

    def params(self) -> ModelParams:
        if self.p is None or self.q is None:
            raise ParameterError("--p and --q are required")
        return ModelParams(self.p, self.q)


def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=False) + "\n")


def _float_or_none(x: float):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def _config(args: argparse.Namespace) -> RunConfig:
    sources = [s for s in (getattr(args, "graph", None), getattr(args, "graph_file", None)) if s]
    if len(sources) > 1:
        raise ParameterError("give exactly one graph source")
    cfg = RunConfig(
        command=args.command,
        graph_source=sources[0] if sources else None,
        p=getattr(args, "p", None) if not isinstance(getattr(args, "p", None), list) else None,
        q=getattr(args, "q", None) if not isinstance(getattr(args, "q", None), list) else None,
        seed=getattr(args, "seed", 0) or 0,
        fmt=getattr(args, "format", "json"),
        max_states=getattr(args, "max_states", None),
    )
    if cfg.graph_source:
        cfg.graph = parse_graph(cfg.graph_source)
    if not 0 <= cfg.seed < 2**64:
        raise ParameterError("seed must be a 64-bit unsigned integer")
    return cfg


def _require_graph(cfg: RunConfig) -> Graph:
    if cfg.graph is None:
        raise ParameterError("a graph is required (--graph or --graph-file)")
    return cfg.graph


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def gap_report(g: Graph, params: ModelParams, name: str) -> dict:
    P = dynamics.dynamics_matrix(name, g, params)
    res = spectral.spectral_gap(P)
    return {
        "graph": graph_label(g),
        "p": params.p,
        "q": params.q,
        "dynamics": name,
        "gap": res.gap,
        "second_eigenvalue": res.second_eigenvalue,
        "dim": P.dim,
        "reversibility_max_err": P.reversibility_max_err(),
    }


def cmd_gap(args) -> int:
    cfg = _config(args)
    rep = gap_report(_require_graph(cfg), cfg.params(), args.dynamics)
    if cfg.fmt == "csv":
        w = csv.DictWriter(sys.stdout, fieldnames=list(rep), lineterminator="\n")
        w.writeheader()
        w.writerow(rep)
    else:
        _emit_json(rep)
    return EXIT_OK


def cmd_verify(args) -> int:
    _config(args)
    qs = tuple(int(q) for q in args.q) if args.q else (2, 3)
    for q in qs:
        if q < 1:
            raise ParameterError("q must be >= 1")
    vcfg = suites.VerifyConfig(qs=qs, max_vertices=args.max_vertices,
                               census_samples=args.samples, seed=args.seed or 0)
    if args.p:
        vcfg.ps = tuple(args.p)
        vcfg.fixture_ps = tuple(args.p)
    for p in vcfg.ps:
        ModelParams(p, 2)
    names = suites.SUITES if args.suite == "all" else tuple(args.suite.split(","))
    for n in names:
        if n not in suites.SUITES:
            raise ParameterError(f"unknown suite {n!r}; choose from all, {', '.join(suites.SUITES)}")
    n_checks, failed, worst = 0, 0, None
    for name in names:
        tasks = suites.suite_tasks(name, vcfg)
        for rec in suites.run_tasks(tasks, jobs=args.jobs, ordered=args.deterministic_order or args.jobs <= 1):
            n_checks += 1
            if not rec["pass"]:
                failed += 1
                if worst is None or rec["max_violation"] > worst["max_violation"]:
                    worst = rec
            _emit_json({k: _float_or_none(v) if isinstance(v, float) else v for k, v in rec.items()})
            sys.stdout.flush()
    _emit_json({"suite": "aggregate", "suites": list(names), "n_checks": n_checks,
                "n_failed": failed, "pass": failed == 0})
    if failed:
        print(f"verification failed: {failed} check(s); worst: {json.dumps(worst)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _config(args)
    g = _require_graph(cfg)
    params = cfg.params()
    if args.dynamics not in ("sw", "sb"):
        raise ParameterError("sampling supports dynamics 'sw' and 'sb'")
    if args.steps < 0 or args.chains < 1:
        raise ParameterError("--steps must be >= 0 and --chains >= 1")
    start = EdgeSubset(args.start, g.n_edges).bits
    step = dynamics.sw_step if args.dynamics == "sw" else dynamics.sb_step
    if args.dynamics == "sw":
        params.int_q()

    writer = csv.writer(sys.stdout, lineterminator="\n")
    if not args.census:
        rng = dynamics.make_rng(cfg.seed)
        writer.writerow(["step", "state_index", "size", "components"])
        a = start
        writer.writerow([0, a, a.bit_count(), components(g, a)[0]])
        for t in range(1, args.steps + 1):
            a = step(g, params, a, rng)
            writer.writerow([t, a, a.bit_count(), components(g, a)[0]])
        return EXIT_OK

    counts = np.zeros(1 << g.n_edges, dtype=np.int64)
    for k in range(args.chains):
        rng = dynamics.make_rng((cfg.seed + k) % 2**64)
        a = start
        for _ in range(args.steps):
            a = step(g, params, a, rng)
        counts[a] += 1
    writer.writerow(["state_index", "count", "frequency"])
    for s in np.nonzero(counts)[0]:
        writer.writerow([int(s), int(counts[s]), counts[s] / args.chains])
    return EXIT_OK


def _grid(values, rng_spec):
    out = list(values or [])
    if rng_spec:
        try:
            lo, hi, step = (float(x) for x in rng_spec.split(":"))
        except ValueError:
            raise ParameterError(f"range must be start:stop:step, got {rng_spec!r}")
        if step <= 0:
            raise ParameterError("range step must be positive")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        out += [round(lo + i * step, 12) for i in range(max(n, 0))]
    return out


def sweep_rows(g: Graph, ps, qs):
    for q in qs:
        for p in ps:
            params = ModelParams(p, q)
            sw = spectral.spectral_gap(dynamics.sw_matrix(g, params)).gap
            sb = spectral.spectral_gap(dynamics.sb_matrix(g, params)).gap
            yield {"p": p, "q": q, "gap_sw": sw, "gap_sb": sb, "ratio": sw / sb,
                   "factor_from_corollary_mix": bounds.mixing_comparison_factor(g, params)}


def cmd_sweep(args) -> int:
    cfg = _config(args)
    g = _require_graph(cfg)
    cfg.p_grid = ps = _grid(args.p, args.p_range)
    cfg.q_grid = qs = _grid(args.q, args.q_range)
    fields = ["p", "q", "gap_sw", "gap_sb", "ratio", "factor_from_corollary_mix"]
    w = csv.DictWriter(sys.stdout, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in sweep_rows(g, ps, qs):
        w.writerow(row)
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _config(args)
    if args.kind == "torus":
        rep = bounds.torus_upper_bound(cfg.params(), args.L, args.d)
        _emit_json({"k1": rep.terms["k1"], "k2": rep.terms["k2"], "log_bound": rep.value,
                    "p": cfg.p, "q": cfg.q, "L": args.L, "d": args.d})
    else:
        g = _require_graph(cfg)
        bw = bounds.bandwidth_exact(g)
        lw = bounds.linear_width_exact(g)
        _emit_json({"bandwidth": bw.width, "linear_width": lw.width,
                    "witnesses": {"bandwidth": list(bw.witness), "linear_width": list(lw.witness)}})
    return EXIT_OK


def cmd_graph(args) -> int:
    cfg = _config(args)
    g = _require_graph(cfg)
    if args.action == "generate":
        _emit_json(g.to_json())
    else:
        _emit_json({**g.to_json(), "n_edges": g.n_edges, "connected": g.is_connected(),
                    "tree": g.is_tree(), "degrees": g.degrees()})
    return EXIT_OK


def cmd_matrix(args) -> int:
    cfg = _config(args)
    P = dynamics.dynamics_matrix(args.dynamics, _require_graph(cfg), cfg.params())
    if cfg.fmt == "csv":
        np.savetxt(sys.stdout, P.matrix, delimiter=",", fmt="%.17g")
    else:
        _emit_json(P.summary())
    return EXIT_OK


def cmd_distribution(args) -> int:
    cfg = _config(args)
    g = _require_graph(cfg)
    params = cfg.params()
    if args.measure == "rc":
        vec = models.rc_distribution(g, params)
    elif args.measure == "potts":
        vec = np.exp(models.potts_log_probs(g, params))
    else:
        vec = models.fkes_distribution(g, params)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["state_index", "probability"])
    for i, v in enumerate(vec):
        w.writerow([i, repr(float(v))])
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_graph(p: argparse.ArgumentParser, required: bool = True) -> None:
    grp = p.add_mutually_exclusive_group(required=required)
    grp.add_argument("--graph", help="builtin (torus:L,d path:n cycle:n complete:n star:n) or JSON file")
    grp.add_argument("--graph-file", help="JSON graph file {\"n\": .., \"edges\": [[u,v], ..]}")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=float, required=True, help="edge probability in (0,1)")
    p.add_argument("--q", type=float, required=True, help="cluster weight / number of colours")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-states", type=int, default=None,
                   help="cap on matrix/joint state counts (also RCDYN_MAX_STATES)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gap", help="spectral gap of one dynamics")
    _add_graph(p)
    _add_model(p)
    p.add_argument("--dynamics", required=True, choices=dynamics.DYNAMICS)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_common(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", default="all", help="all, or comma-separated: " + ",".join(suites.SUITES))
    p.add_argument("--q", type=int, nargs="+", help="q values (default 2 3)")
    p.add_argument("--p", type=float, nargs="+", help="p values (default per suite)")
    p.add_argument("--max-vertices", type=int, default=None)
    p.add_argument("--samples", type=int, default=100_000, help="census size for the sampler suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--deterministic-order", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="trajectory trace or end-state census")
    _add_graph(p)
    _add_model(p)
    p.add_argument("--dynamics", choices=("sw", "sb"), default="sw")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=int, default=0, help="initial subset as edge bit mask")
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--census", action="store_true", help="emit end-state counts over --chains chains")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", help="gap table over a (p, q) grid")
    _add_graph(p)
    p.add_argument("--p", type=float, nargs="*", default=[])
    p.add_argument("--q", type=float, nargs="*", default=[])
    p.add_argument("--p-range", help="start:stop:step")
    p.add_argument("--q-range", help="start:stop:step")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="closed-form bounds and exact widths")
    bsub = p.add_subparsers(dest="kind", required=True)
    t = bsub.add_parser("torus")
    _add_model(t)
    t.add_argument("--L", type=int, required=True)
    t.add_argument("--d", type=int, required=True)
    t.set_defaults(func=cmd_bounds, command="bounds")
    w = bsub.add_parser("width")
    _add_graph(w)
    w.set_defaults(func=cmd_bounds, command="bounds")

    p = sub.add_parser("graph", help="inspect or generate a graph")
    p.add_argument("action", choices=("inspect", "generate"))
    _add_graph(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("matrix", help="export a transition matrix")
    _add_graph(p)
    _add_model(p)
    p.add_argument("--dynamics", required=True, choices=dynamics.DYNAMICS)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _add_common(p)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("distribution", help="export a measure as CSV")
    _add_graph(p)
    _add_model(p)
    p.add_argument("--measure", choices=("rc", "potts", "fkes"), default="rc")
    _add_common(p)
    p.set_defaults(func=cmd_distribution)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    max_states = getattr(args, "max_states", None)
    overrides = {} if max_states is None else {"matrix_states": max_states, "joint_states": max_states}
    try:
        if max_states is not None and max_states < 1:
            raise ParameterError("--max-states must be positive")
        with caps_override(**overrides):
            return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
