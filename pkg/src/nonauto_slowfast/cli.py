"""Command-line front end.

    nonauto-slowfast simulate --preset fig2 --epsilon 0.2 --out out/
    nonauto-slowfast figure fig1 --out out/

Exit codes: 0 ok, 1 config error, 2 numerical blow-up, 3 non-convergence.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .io import environment, write_csv, write_json
from .layer import EmptyFiber, NoBoundedSolution, NotHyperbolic, pullback_fiber, riccati_pair
from .presets import PRESETS, apply_preset
from .ode import DEFAULT_ESCAPE_RADIUS
from .slowfast import solve_coupled
from .tipping import PastPairUnavailable, UndecidedBoundary, classify, critical_rate, surface_grid, transition_curve
from .tracking import NotACopyOfBase, _default_seeds, delta_k, eta_curve, tracking_error, transition_attractor

log = logging.getLogger("nonauto_slowfast")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_NONCONV = 0, 1, 2, 3


class BlowUp(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# helpers


def resolve_config(args) -> ScenarioConfig:
    user = None
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        user = yaml.safe_load(path.read_text()) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    preset = getattr(args, "preset", None)
    if preset:
        cfg = apply_preset(preset, user)
    elif user is not None:
        cfg = load_config(args.config)
    else:
        raise ConfigError("give --config PATH or --preset NAME")
    data = cfg.model_dump(mode="json")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output"] = {"dir": str(args.out)}
    return parse_config(data)


def epsilons(args, cfg: ScenarioConfig):
    return [args.epsilon] if args.epsilon is not None else list(cfg.epsilon_grid)


def workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("NONAUTO_SLOWFAST_WORKERS")
    return max(1, int(env)) if env else 1


def pmap(fn, items, n_workers):
    """Map in a process pool; results come back in input order."""
    items = list(items)
    if n_workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(n_workers, len(items))) as ex:
        return list(ex.map(fn, items))


def manifest(out: Path, command: str, cfg: ScenarioConfig, files, extra=None, args=None):
    data = {
        "command": command,
        "version": __version__,
        "config": cfg.model_dump(mode="json"),
        "seed": cfg.seed,
        "escape_radius": DEFAULT_ESCAPE_RADIUS,
        "metric_mode": cfg.metric.mode,
        "files": [str(Path(f).name) for f in files],
        "environment": environment(),
        "workers": workers(args) if args is not None else 1,
        "created_unix": time.time(),
    }
    if extra:
        data["results"] = extra
    write_json(out / f"manifest_{command}.json", data)


# ---------------------------------------------------------------------------
# workers (module-level so they pickle)


def _simulate_one(job):
    data, eps = job
    cfg = parse_config(data)
    sol = solve_coupled(cfg.build_scenario(), eps, cfg.build_integrator())
    return eps, sol.slow.times, sol.slow.states, sol.fast.times, sol.fast.states, sol.blew_up, sol.fast.escape_time


def _track_one(job):
    data, eps = job
    cfg = parse_config(data)
    t = cfg.tracking
    r = tracking_error(
        cfg.build_scenario(), eps, t.mode, t.T_start, cfg.build_integrator(), t.delta, t.per_decade, t.n_fiber_samples,
        cfg.build_seeds(), cfg.fiber.T_pull, cfg.fiber.tol, cfg.fiber.spinup, cfg.build_sampler(), cfg.metric.build(),
        t.hull_only,
    )
    return eps, r.taus, r.dists, r.sup_error, r.blew_up, r.x0_source


def _classify_one(job):
    data, eps = job
    cfg = parse_config(data)
    v = classify(cfg.build_transition(), eps, cfg=cfg.build_integrator())
    return eps, v.outcome, v.evidence


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args, cfg: ScenarioConfig) -> int:
    out = Path(cfg.output.dir)
    data = cfg.model_dump(mode="json")
    res = pmap(_simulate_one, [(data, e) for e in sorted(epsilons(args, cfg))], workers(args))
    slow_rows, fast_rows, blew = [], [], []
    for eps, ts, xs, taus, ys, b, esc in res:
        slow_rows += [(eps, t, *x) for t, x in zip(ts, xs)]
        fast_rows += [(eps, tau, *y, False) for tau, y in zip(taus, ys)]
        if b:
            fast_rows.append((eps, esc, *([float("nan")] * ys.shape[1]), True))
            blew.append(eps)
    n, m = res[0][2].shape[1], res[0][4].shape[1]
    f1 = write_csv(out / "slow.csv", ["epsilon", "t"] + [f"x_{i + 1}" for i in range(n)], slow_rows)
    f2 = write_csv(out / "fast.csv", ["epsilon", "tau"] + [f"y_{i + 1}" for i in range(m)] + ["blew_up"], fast_rows)
    manifest(out, "simulate", cfg, [f1, f2], {"blew_up": blew}, args)
    if blew:
        raise BlowUp(f"fast solution escaped for epsilon in {blew}")
    return EXIT_OK


def cmd_fiber(args, cfg: ScenarioConfig) -> int:
    out = Path(cfg.output.dir)
    sc = cfg.build_scenario()
    seeds = cfg.build_seeds() or _default_seeds(sc)
    fib = pullback_fiber(sc.layer, sc.theta, sc.x_init(), seeds, cfg.fiber.T_pull, cfg.fiber.tol, cfg.build_integrator())
    k, n = len(sc.theta), sc.n
    header = [f"theta_{i + 1}" for i in range(k)] + [f"x_{i + 1}" for i in range(n)] + ["y_1", "pullback_time", "converged"]
    rows = [(*sc.theta, *sc.x_init(), *p, fib.pullback_time, fib.converged) for p in fib.points]
    f = write_csv(out / "fiber.csv", header, rows)
    manifest(out, "fiber", cfg, [f], {"hausdorff_gap": fib.hausdorff_gap, "n_escaped": fib.n_escaped}, args)
    if not fib.converged:
        raise NonConvergence(f"fiber did not converge: gap {fib.hausdorff_gap:.3g} >= tol {cfg.fiber.tol}")
    return EXIT_OK


def cmd_track(args, cfg: ScenarioConfig) -> int:
    out = Path(cfg.output.dir)
    data = cfg.model_dump(mode="json")
    res = pmap(_track_one, [(data, e) for e in sorted(epsilons(args, cfg))], workers(args))
    rows, summary, blew = [], [], []
    for eps, taus, d, sup, b, src in res:
        rows += [(eps, t, v, cfg.tracking.mode) for t, v in zip(taus, d)]
        summary.append((eps, sup, cfg.tracking.mode, src))
        if b:
            blew.append(eps)
    f1 = write_csv(out / "tracking.csv", ["epsilon", "tau", "dist", "mode"], rows)
    f2 = write_csv(out / "tracking_summary.csv", ["epsilon", "sup_error", "mode", "x0_source"], summary)
    manifest(out, "track", cfg, [f1, f2], {"sup_errors": {str(e): s for e, s, _, _ in summary}}, args)
    if blew:
        raise BlowUp(f"fast solution escaped for epsilon in {blew}")
    return EXIT_OK


def cmd_deltak(args, cfg: ScenarioConfig) -> int:
    out = Path(cfg.output.dir)
    eps = sorted(epsilons(args, cfg), reverse=True)
    rep = delta_k(
        cfg.build_scenario(), eps, cfg.tracking.search_tol, cfg.build_integrator(), cfg.build_seeds(),
        cfg.fiber.T_pull, cfg.fiber.tol, cfg.build_sampler(), hull_only=cfg.tracking.hull_only,
    )
    f = write_csv(out / "delta_k.csv", ["epsilon", "delta_k"], list(zip(rep.epsilons, rep.deltas)))
    manifest(out, "deltak", cfg, [f], {"monotone_tail": rep.monotone_tail, "d0": list(rep.d0)}, args)
    return EXIT_OK


def cmd_tipscan(args, cfg: ScenarioConfig) -> int:
    out = Path(cfg.output.dir)
    data = cfg.model_dump(mode="json")
    grid = sorted(epsilons(args, cfg))
    res = pmap(_classify_one, [(data, e) for e in grid], workers(args))
    files = [write_csv(out / "tipping.csv", ["epsilon", "outcome", "evidence_value"], res)]
    extra = {"verdicts": {str(e): o for e, o, _ in res}}
    if args.bisect:
        tp = cfg.tipping
        cr = critical_rate(cfg.build_transition(), tp.eps_lo, tp.eps_hi, tp.bisect_tol, scan=grid, cfg=cfg.build_integrator())
        files.append(write_csv(out / "critical_rate.csv", ["epsilon", "outcome"], cr.verdicts))
        extra.update(found=cr.found, epsilon_c=cr.epsilon_c, bracket=list(cr.bracket))
    manifest(out, "tipscan", cfg, files, extra, args)
    return EXIT_OK


def _fig1(args, cfg, out):
    sc = cfg.build_scenario()
    window = (0.0, cfg.horizons.t0)
    pair = riccati_pair(sc.layer, sc.theta, sc.x_init(), window, cfg.build_integrator(), cfg.fiber.spinup)
    taus = pair.attractor.times
    rows = [(t, a, r) for t, a, r in zip(taus, pair.attractor.states[:, 0], pair.repeller.states[:, 0])]
    f1 = write_csv(out / "fig1_pair.csv", ["tau", "attractor", "repeller"], rows)
    f2 = write_csv(
        out / "fig1_exponents.csv",
        ["beta_attractor", "beta_repeller", "separated", "min_gap"],
        [(pair.beta_attractor, pair.beta_repeller, pair.separated, pair.min_gap)],
    )
    return [f1, f2], {"beta_attractor": pair.beta_attractor, "beta_repeller": pair.beta_repeller, "separated": pair.separated}


def _fig2_left(args, cfg, out):
    sc = cfg.build_scenario()
    icfg = cfg.build_integrator()
    rows = []
    for eps in sorted(epsilons(args, cfg)):
        tau_end = sc.t0 / eps
        taus = np.linspace(0.0, tau_end, 2001)
        eta = eta_curve(sc, eps, taus, icfg, cfg.fiber.spinup)
        a_eps = transition_attractor(sc, eps, 0.0, tau_end, icfg, cfg.fiber.spinup)
        sol = solve_coupled(sc, eps, icfg)
        y = sol.fast(taus)[:, 0] if not sol.blew_up else np.full(len(taus), np.nan)
        rows += [(eps, t, eps * t, e, a, yy) for t, e, a, yy in zip(taus, eta.states[:, 0], a_eps(taus)[:, 0], y)]
    f = write_csv(out / "fig2_left.csv", ["epsilon", "tau", "t", "eta", "a_eps", "y"], rows)
    return [f], {}


def _fig2_right(args, cfg, out):
    grid = [args.epsilon] if args.epsilon is not None else list(np.geomspace(0.02, 0.5, 13))
    data = cfg.model_dump(mode="json")
    data["tracking"]["mode"] = "proxy"
    res = pmap(_track_one, [(data, float(e)) for e in grid], workers(args))
    rows = [(eps, sup) for eps, _, _, sup, _, _ in res]
    f = write_csv(out / "fig2_right.csv", ["epsilon", "sup_error"], rows)
    return [f], {"sup_errors": {str(e): s for e, s in rows}}


def _fig3(args, cfg, out):
    ts = cfg.build_transition()
    eps = args.epsilon if args.epsilon is not None else cfg.epsilon_grid[0]
    icfg = cfg.build_integrator()
    v = classify(ts, eps, cfg=icfg, keep_trajectory=True)
    files = []
    if v.trajectory is not None:
        curve = transition_curve(ts, v, cfg=icfg)
        files.append(write_csv(out / "fig3_transition.csv", ["tau", "gamma", "y", "surface"], curve))
        lo, hi = curve[0, 0], curve[-1, 0]
        surf = surface_grid(ts, np.linspace(lo, hi, 400), np.linspace(-0.95, 0.95, 20), icfg)
        files.append(write_csv(out / "fig3_surface.csv", ["gamma", "tau", "attractor_value"], surf))
    files.append(write_csv(out / "fig3_verdict.csv", ["epsilon", "outcome", "evidence_value"], [(eps, v.outcome, v.evidence)]))
    if v.outcome == "tips":
        raise BlowUp(f"transition tipped at epsilon={eps}")
    return files, {"outcome": v.outcome, "evidence": v.evidence}


FIGURES = {"fig1": _fig1, "fig2-left": _fig2_left, "fig2-right": _fig2_right, "fig3": _fig3}


def cmd_figure(args, cfg: ScenarioConfig) -> int:
    out = Path(cfg.output.dir)
    files, extra = FIGURES[args.name](args, cfg, out)
    manifest(out, f"figure_{args.name}", cfg, files, extra, args)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fiber": cmd_fiber,
    "track": cmd_track,
    "deltak": cmd_deltak,
    "tipscan": cmd_tipscan,
    "figure": cmd_figure,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario YAML/JSON file")
    common.add_argument("--preset", help=f"built-in figure preset: {', '.join(sorted(PRESETS))}")
    common.add_argument("--epsilon", type=float, help="single epsilon instead of the config grid")
    common.add_argument("--workers", type=int, help="worker processes (env NONAUTO_SLOWFAST_WORKERS)")
    common.add_argument("--seed", type=int, default=None, help="sampler seed (default 42)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="nonauto-slowfast", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="coupled slow/fast trajectories")
    sub.add_parser("fiber", parents=[common], help="pullback fiber at (theta0, x0)")
    sub.add_parser("track", parents=[common], help="tracking error per epsilon")
    sub.add_parser("deltak", parents=[common], help="final-time inflation delta_k per epsilon")
    p = sub.add_parser("tipscan", parents=[common], help="tipping verdicts over the epsilon grid")
    p.add_argument("--bisect", action="store_true", help="also bisect the critical rate")
    p = sub.add_parser("figure", parents=[common], help="reproduce a figure as CSV")
    p.add_argument("name", choices=sorted(FIGURES))
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "figure" and not args.preset and not args.config:
        args.preset = "fig2" if args.name.startswith("fig2") else args.name
    try:
        cfg = resolve_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, cfg)
    except BlowUp as e:
        print(f"blow-up: {e}", file=sys.stderr)
        return EXIT_BLOWUP
    except (NonConvergence, EmptyFiber, NotACopyOfBase, UndecidedBoundary) as e:
        print(f"non-convergence: {e}", file=sys.stderr)
        return EXIT_NONCONV
    except (NoBoundedSolution, NotHyperbolic, PastPairUnavailable) as e:
        print(f"no hyperbolic pair: {e}", file=sys.stderr)
        return EXIT_NONCONV


if __name__ == "__main__":
    sys.exit(main())
