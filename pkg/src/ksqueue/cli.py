"""Command-line driver: ks, solve, simulate, figures, consistency.

Exit codes: 0 ok, 1 usage, 2 precision, 3 model/stability, 4 sampler gate.
"""

from __future__ import annotations

import argparse
import dataclasses
import functools
import logging
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_SWEEP, RunConfig, load_config
from .errors import (
    BranchError,
    ParameterError,
    PoleError,
    PrecisionLoss,
    SamplerGateError,
    StabilityError,
)
from .generator import QueueParams, classical_transient_oracle
from .mc import run_simulation
from .solver import (
    DEFAULT_N_MAX,
    consistency_report,
    laplace_symbol_transient,
    mean_curve,
    transient,
)
from .specfun import Exponential, KilbasSaigo, KSParams, MittagLeffler, ks_coefficients, ks_eval
from .svg import bar_chart, line_chart

EXIT_OK, EXIT_USAGE, EXIT_PRECISION, EXIT_MODEL, EXIT_GATE = 0, 1, 2, 3, 4

log = logging.getLogger("ksqueue")


def fmt(v) -> str:
    """Shortest round-trip repr of a float (always >= 15 significant digits of accuracy)."""
    return repr(float(v))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt(c) if isinstance(c, float) else str(c) for c in row) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value run configuration file")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--n-times", type=int)
    p.add_argument("--out-dir")


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {k: getattr(args, k) for k in ("lam", "mu", "alpha", "gamma", "t_max", "n_times", "out_dir")
            if getattr(args, k, None) is not None}
    for k in ("replications", "seed"):
        if getattr(args, k, None) is not None:
            over[k] = getattr(args, k)
    return dataclasses.replace(cfg, **over) if over else cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _x_grid(spec: str) -> np.ndarray:
    """'a:b:n' (inclusive linspace) or a comma-separated list."""
    if ":" in spec:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    return np.array([float(v) for v in spec.split(",") if v.strip()])


def cmd_ks(args) -> int:
    ks = KSParams(args.alpha, args.gamma)
    out = sys.stdout
    if args.coeffs is not None:
        c = ks_coefficients(ks, args.coeffs).values
        out.write("n,c_n\n")
        for n, v in enumerate(c):
            out.write(f"{n},{fmt(v)}\n")
        return EXIT_OK
    if args.x is not None:
        xs = np.array([args.x])
    elif args.x_grid is not None:
        xs = _x_grid(args.x_grid)
    else:
        raise ParameterError("give --x, --x-grid or --coeffs")
    values = [ks_eval(ks, float(x)) for x in xs]
    out.write("x,value\n")
    for x, v in zip(xs, values):
        out.write(f"{fmt(x)},{fmt(v)}\n")
    return EXIT_OK


def _solve_table(route: str, cfg: RunConfig, n_max: int, times, beta=None):
    if route == "spectral-ks":
        return transient(KilbasSaigo(cfg.ks), cfg.queue, n_max, times)
    if route == "spectral-ml":
        b = beta if beta is not None else cfg.ks.beta
        kind = Exponential() if b == 1.0 else MittagLeffler(b)
        return transient(kind, cfg.queue, n_max, times)
    if route == "laplace":
        return laplace_symbol_transient(cfg.queue, beta if beta is not None else cfg.ks.beta, n_max, times)
    if route == "classical":
        return classical_transient_oracle(cfg.queue, n_max, times)
    raise ParameterError(f"unknown route {route!r}")


def cmd_solve(args) -> int:
    cfg = _run_config(args)
    times = cfg.times()
    if args.include_zero:
        times[0] = 0.0
    table = _solve_table(args.route, cfg, args.n_max, times, args.beta)
    out = _out_dir(cfg)
    n = np.arange(table.probs.shape[1])
    write_csv(out / "transient.csv", ["t", "n", "p"],
              ((float(t), int(k), float(p)) for t, row in zip(table.times, table.probs) for k, p in zip(n, row)))
    write_csv(out / "sums.csv", ["t", "column_sum"], zip(map(float, table.times), map(float, table.column_sums)))
    print(f"{table.route}: wrote {out / 'transient.csv'} and {out / 'sums.csv'}")
    return EXIT_OK


def simulation_rows(res):
    p0 = [(float(t), float(m), float(s)) for t, m, s in zip(res.times, res.p0_mean, res.p0_se)]
    mean = [(float(t), float(m), float(s)) for t, m, s in zip(res.times, res.mean_mean, res.mean_se)]
    snap = [(int(n), float(p), float(s)) for n, (p, s) in enumerate(zip(res.snapshot_p, res.snapshot_se))]
    snap.append(("overflow", float(res.overflow_p), float(res.overflow_se)))
    moments = [(k, float(e), float(t)) for k, (e, t) in enumerate(zip(res.z_moments, res.z_targets), start=1)]
    return p0, snap, mean, moments


def cmd_simulate(args) -> int:
    cfg = _run_config(args)
    sim = cfg.sim_config(backend=args.backend)
    res = run_simulation(sim, workers=args.workers)
    out = _out_dir(cfg)
    p0, snap, mean, moments = simulation_rows(res)
    write_csv(out / "p0_curve.csv", ["t", "mean", "se"], p0)
    write_csv(out / "snapshot.csv", ["n", "p", "se"], snap)
    write_csv(out / "mean_curve.csv", ["t", "mean", "se"], mean)
    write_csv(out / "moments.csv", ["k", "empirical", "target"], moments)
    print(f"{res.backend.value}: R={sim.replications} seed={sim.seed} retries={res.diagnostics['retries']}; "
          f"wrote CSVs to {out}")
    return EXIT_OK


def _parse_pairs(spec: str | None):
    if not spec:
        return list(DEFAULT_SWEEP)
    pairs = []
    for item in spec.split(";"):
        a, g = item.split(",")
        pairs.append((float(a), float(g)))
    return pairs


def _label(a, g):
    return f"alpha={a:g} gamma={g:g}"


@functools.lru_cache(maxsize=32)
def _deterministic(route: str, lam: float, mu: float, alpha: float, gamma: float, n_max: int, times: tuple):
    q, ks = QueueParams(lam, mu), KSParams(alpha, gamma)
    if route == "SpectralKS":
        return transient(KilbasSaigo(ks), q, n_max, times)
    if route == "LaplaceSymbol":
        return laplace_symbol_transient(q, ks.beta, n_max, times)
    return classical_transient_oracle(q, n_max, times)


@functools.lru_cache(maxsize=8)
def _simulate(sim):
    return run_simulation(sim)


def figure_data(fig: str, cfg: RunConfig, pairs, routes, n_max: int = DEFAULT_N_MAX):
    """Columns (name -> values) plotted by one figure, plus its x column."""
    times = cfg.times()
    cols = {}
    q = cfg.queue
    if fig == "pn":
        x_name, x = "n", np.arange(cfg.n_max + 1)
        eval_times = (float(cfg.t_star),)
    else:
        x_name, x = "t", times
        eval_times = tuple(float(t) for t in times)
    for a, g in pairs:
        ks = KSParams(a, g)
        lab = _label(a, g)
        for route in routes:
            if route in ("SpectralKS", "LaplaceSymbol", "ClassicalOracle"):
                if route == "ClassicalOracle" and (a, g) != (1.0, 0.0):
                    continue
                tab = _deterministic(route, q.lam, q.mu, a, g, n_max, eval_times)
            elif route == "MC":
                res = _simulate(cfg.sim_config(ks=ks))
                if fig == "p0":
                    cols[f"MC {lab}"], cols[f"MC {lab} se"] = res.p0_mean, res.p0_se
                elif fig == "mean":
                    cols[f"MC {lab}"], cols[f"MC {lab} se"] = res.mean_mean, res.mean_se
                else:
                    cols[f"MC {lab}"], cols[f"MC {lab} se"] = res.snapshot_p, res.snapshot_se
                continue
            else:
                raise ParameterError(f"unknown route {route!r}")
            if fig == "p0":
                cols[f"{route} {lab}"] = tab.probs[:, 0]
            elif fig == "mean":
                cols[f"{route} {lab}"] = mean_curve(tab)
            else:
                cols[f"{route} {lab}"] = tab.probs[0, : cfg.n_max + 1]
    return x_name, x, cols


def cmd_figures(args) -> int:
    cfg = _run_config(args)
    if not cfg.queue.stable:
        raise StabilityError(f"reference lines need rho < 1, got {cfg.queue.rho}")
    routes = [r.strip() for r in args.routes.split(",") if r.strip()]
    if not routes:
        raise ParameterError("at least one route is required")
    pairs = _parse_pairs(args.pairs)
    x_name, x, cols = figure_data(args.figure, cfg, pairs, routes)
    out = _out_dir(cfg)
    rho = cfg.queue.rho
    plotted = [(k, v) for k, v in cols.items() if not k.endswith(" se")]
    dash = lambda name: "6 3" if name.startswith("MC") else None  # noqa: E731
    if args.figure == "p0":
        svg = line_chart([(k, x, v, dash(k)) for k, v in plotted], "Empty-system probability p0(t)",
                         "t", "p0(t)", reference=1.0 - rho, reference_label=f"1 - rho = {1 - rho:g}")
    elif args.figure == "mean":
        svg = line_chart([(k, x, v, dash(k)) for k, v in plotted], "Mean queue length E N(t)",
                         "t", "E N(t)", reference=rho / (1.0 - rho), reference_label=f"rho/(1-rho) = {rho / (1 - rho):g}")
    else:
        svg = bar_chart(list(x), plotted, f"Queue-length distribution at t* = {cfg.t_star:g}", "n", "p_n(t*)")
    name = f"fig_{args.figure}"
    (out / f"{name}.svg").write_text(svg, encoding="utf-8")
    write_csv(out / f"{name}.csv", [x_name] + list(cols), zip(*([list(map(float, x)) if x_name == "t" else list(map(int, x))]
                                                              + [list(map(float, v)) for v in cols.values()])))
    print(f"wrote {out / (name + '.svg')} and {out / (name + '.csv')}")
    return EXIT_OK


def cmd_consistency(args) -> int:
    cfg = _run_config(args)
    times = cfg.times()
    rep = consistency_report(cfg.queue, cfg.ks, args.n_max, times)
    text = rep.to_text()
    sys.stdout.write(text)
    out = _out_dir(cfg)
    (out / "consistency.txt").write_text(text, encoding="utf-8")
    pair_cols = {f"{a} vs {b}": v for (a, b), v in rep.distance_curves.items()}
    sum_cols = {f"{k} column_sum": v for k, v in rep.column_sums.items()}
    cols = {**pair_cols, **sum_cols}
    write_csv(out / "consistency.csv", ["t"] + list(cols),
              zip(map(float, times), *[list(map(float, v)) for v in cols.values()]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ksqueue", description="Stretched-fractional M/M/1 queue toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("ks", help="evaluate E_{a,m,l}(-x) or list series coefficients")
    k.add_argument("--alpha", type=float, required=True)
    k.add_argument("--gamma", type=float, default=0.0)
    g = k.add_mutually_exclusive_group()
    g.add_argument("--x", type=float)
    g.add_argument("--x-grid", help="start:stop:count or comma-separated values")
    g.add_argument("--coeffs", type=int, metavar="N", help="print c_0..c_N")
    k.set_defaults(func=cmd_ks)

    s = sub.add_parser("solve", help="deterministic transient probabilities")
    _add_run_options(s)
    s.add_argument("--route", choices=["spectral-ks", "spectral-ml", "laplace", "classical"], default="spectral-ks")
    s.add_argument("--beta", type=float, help="order for spectral-ml/laplace (default alpha+gamma)")
    s.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)
    s.add_argument("--include-zero", action="store_true", help="use t=0 instead of the 1e-6 floor")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="Monte Carlo via the random time change")
    _add_run_options(m)
    m.add_argument("--backend", choices=["DegenerateOne", "StableInverse", "BetaProduct", "InverseCDF"])
    m.add_argument("--replications", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--workers", type=int, default=1)
    m.set_defaults(func=cmd_simulate)

    f = sub.add_parser("figures", help="SVG + CSV for p0, pn or mean")
    f.add_argument("figure", choices=["p0", "pn", "mean"])
    _add_run_options(f)
    f.add_argument("--pairs", help="'alpha,gamma;alpha,gamma;...' (default: 1,0;0.8,0;0.8,0.2;0.6,0.2)")
    f.add_argument("--routes", default="SpectralKS,MC", help="comma list of SpectralKS, LaplaceSymbol, MC, ClassicalOracle")
    f.add_argument("--replications", type=int)
    f.add_argument("--seed", type=int)
    f.set_defaults(func=cmd_figures)

    c = sub.add_parser("consistency", help="cross-route audit report")
    _add_run_options(c)
    c.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)
    c.set_defaults(func=cmd_consistency)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PrecisionLoss as exc:
        print(f"precision: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except SamplerGateError as exc:
        print(f"sampler gate: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  k={d['k']} empirical={d['empirical']!r} target={d['target']!r} "
                  f"rel_error={d['rel_error']:.4g} tolerance={d['tolerance']:.4g}", file=sys.stderr)
        return EXIT_GATE
    except (StabilityError, BranchError, PoleError) as exc:
        print(f"model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except ParameterError as exc:
        print(f"usage: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
