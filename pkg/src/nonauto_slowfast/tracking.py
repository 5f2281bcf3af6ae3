"""Distance from the fast motion to the moving layer attractor.

Targets, in decreasing order of cost: the inflated fiber ``A[delta]`` at
``(theta0 . tau, x0(eps tau))``, the bare pullback fiber, and the curve
``eta(tau) = a(theta0 . tau) + gamma(x0(eps tau))`` when the base attractor
is a copy of the base. The ``proxy`` mode compares the hyperbolic attractor
``a_eps`` of the transition equation to ``eta`` instead of a single solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .hull import HullMetricConfig, NeighborhoodSampler, shift
from .layer import (
    EmptyFiber,
    SeedBox,
    attractor_trajectory,
    point_to_set,
    pullback_fibers,
)
from .ode import IntegratorConfig, Trajectory, VectorField, integrate, integrate_ensemble
from .slowfast import SlowFastScenario, reduced_slow, solve_coupled

__all__ = [
    "TrackingReport",
    "DeltaKReport",
    "EquiAttractionTable",
    "NotACopyOfBase",
    "FiberCache",
    "eta_curve",
    "transition_attractor",
    "tracking_error",
    "sample_grid",
    "measured_T",
    "delta_k",
    "equi_attraction_probe",
]

MODES = ("eta", "proxy", "pullback", "inflated")


class NotACopyOfBase(RuntimeError):
    """Some sampled layer fiber is not a singleton."""


def sample_grid(t_a: float, t_b: float, per_decade: int = 2000) -> np.ndarray:
    """Evenly spaced samples, ``per_decade`` points per 10 units of fast time."""
    n = max(2, int(math.ceil((t_b - t_a) / 10.0 * per_decade)) + 1)
    return np.linspace(t_a, t_b, n)


@dataclass(frozen=True, eq=False)
class TrackingReport:
    epsilon: float
    T_start: float
    taus: np.ndarray
    dists: np.ndarray
    sup_error: float
    fiber_mode: str
    x0_source: str
    metric_mode: str = "torus-angle"
    delta: float = 0.0
    blew_up: bool = False
    escape_time: Optional[float] = None

    @property
    def tracks(self) -> bool:
        return not self.blew_up and math.isfinite(self.sup_error)


@dataclass(frozen=True)
class DeltaKReport:
    epsilons: tuple
    deltas: tuple
    monotone_tail: bool
    d0: tuple = ()
    search_tol: float = 1e-3
    metric_mode: str = "torus-angle"


# ---------------------------------------------------------------------------
# eta curve


def _base_attractor(sc: SlowFastScenario, t_a, t_b, cfg, spinup):
    base = sc.layer.base_layer()
    return attractor_trajectory(base, sc.theta, sc.x_init(), t_a, t_b, cfg, spinup)


def _check_singleton(layer, thetas, xs, seeds, T_pull, tol, cfg, against=None):
    fibs = pullback_fibers(layer, thetas, xs, seeds, T_pull, tol, cfg, check_convergence=False)
    for i, fb in enumerate(fibs):
        if fb.diameter > tol:
            raise NotACopyOfBase(f"fiber at theta={fb.theta}, x={fb.x} has diameter {fb.diameter:.3g} > {tol}")
        if against is not None and abs(float(fb.points[0, 0]) - float(against[i])) > tol:
            raise NotACopyOfBase(
                f"pullback fiber {fb.points[0, 0]:.6g} and attractor curve {against[i]:.6g} disagree at sample {i}"
            )
    return fibs


def eta_curve(
    sc: SlowFastScenario,
    eps: float,
    taus,
    cfg: IntegratorConfig = IntegratorConfig(),
    spinup: float = 50.0,
    seeds: Optional[SeedBox] = None,
    T_pull: float = 40.0,
    tol: float = 1e-3,
    n_checks: int = 5,
    x0_fn: Optional[Callable] = None,
) -> Trajectory:
    """``eta(tau)``: the singleton layer fiber at ``(theta0 . tau, x0(eps tau))``.

    Translated scalar layers use ``a(theta0 . tau) + gamma(x0(eps tau))`` with
    the base attractor ``a`` from one long pullback; singleton-ness is checked
    at ``n_checks`` sampled times. Other layers compute a fiber per grid point.
    """
    taus = np.asarray(taus, dtype=float)
    x0_fn = reduced_slow(sc) if x0_fn is None else x0_fn
    xs = np.asarray(x0_fn(eps * taus), dtype=float).reshape(len(taus), sc.n)
    k = sc.layer.k
    thetas = shift(sc.theta, taus, sc.layer.omega) if k else np.zeros((len(taus), 0))
    if sc.layer.translated and sc.m == 1:
        a = _base_attractor(sc, float(taus[0]), float(taus[-1]), cfg, spinup)
        a_vals = a(taus)[:, 0]
        if seeds is None:
            seeds = SeedBox.interval(float(a_vals.min()) - 0.5, float(a_vals.max()) + 2.5, 0.5)
        idx = np.unique(np.linspace(0, len(taus) - 1, n_checks).astype(int))
        _check_singleton(sc.layer.base_layer(), thetas[idx], xs[idx], seeds, T_pull, tol, cfg, a_vals[idx])
        vals = a_vals + np.asarray(sc.gamma(xs), dtype=float).reshape(len(taus))
        states = vals[:, None]
    else:
        if seeds is None:
            raise ValueError("general layers need an explicit seed box")
        fibs = _check_singleton(sc.layer, thetas, xs, seeds, T_pull, tol, cfg)
        states = np.vstack([fb.points[:1] for fb in fibs])
    derivs = np.gradient(states, taus, axis=0) if len(taus) > 1 else np.zeros_like(states)
    return Trajectory(taus.copy(), states, derivs, meta={"x0_source": getattr(x0_fn, "source", "custom")})


def transition_attractor(
    sc: SlowFastScenario,
    eps: float,
    t_a: float,
    t_b: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    spinup: float = 50.0,
    seed_offset: float = 10.0,
) -> Trajectory:
    """Hyperbolic attractor ``a_eps`` of ``y' = g(x0(eps tau), y, tau)`` on ``[t_a, t_b]``.

    Pulled back from ``t_a - spinup``. Closed-form slow solutions are
    extended to negative times; otherwise x is frozen at ``x0`` there.
    """
    f = sc.f
    x0 = sc.x_init()
    if getattr(f, "y_independent", False) and f.closed_form(x0, 0.0) is not None:
        xfun = lambda tau: f.closed_form(x0, eps * tau)  # noqa: E731
    else:
        x0_fn = reduced_slow(sc)
        xfun = lambda tau: x0_fn(max(eps * tau, 0.0))  # noqa: E731
    layer = sc.layer
    th = sc.theta
    scalar = layer.scalar_base is not None and sc.m == 1 and sc.n == 1
    if scalar:
        p = layer.forcing.scalar(th)
        gam = layer.gamma.scalar
        if getattr(f, "kind", "") == "constant":
            v, xv = f.value, float(x0[0])
            fn = lambda y, tau: p(tau) - (y - gam(xv + v * eps * tau)) ** 2  # noqa: E731
        else:
            fn = lambda y, tau: p(tau) - (y - gam(float(np.asarray(xfun(tau)).reshape(-1)[0]))) ** 2  # noqa: E731
    else:
        TH = th[None, :]

        def fn(y, tau):
            x = np.asarray(xfun(tau), dtype=float).reshape(1, sc.n)
            return layer.g(x, y[None, :], np.asarray([tau]), TH)[0]

    c = float(layer.center(xfun(t_a - spinup))[0]) if sc.m == 1 else 0.0
    tr = integrate(VectorField(fn, sc.m, scalar=scalar), np.full(sc.m, c + seed_offset), t_a - spinup, t_b, cfg)
    if tr.blew_up:
        raise EmptyFiber(f"transition attractor pullback escaped at tau={tr.escape_time}")
    return tr.restrict(t_a, t_b)


# ---------------------------------------------------------------------------
# fiber caching for the fiber modes and delta_k


class FiberCache:
    """Memoized pullback fibers keyed by (theta, x); batches new requests."""

    def __init__(self, layer, seeds: SeedBox, T_pull: float, tol: float, cfg: IntegratorConfig = IntegratorConfig()):
        self.layer, self.seeds, self.T_pull, self.tol, self.cfg = layer, seeds, T_pull, tol, cfg
        self._store = {}

    @staticmethod
    def _key(theta, x):
        return tuple(np.round(np.concatenate((theta, x)), 12))

    def get(self, thetas, xs):
        thetas = np.asarray(thetas, dtype=float).reshape(len(xs), self.layer.k)
        xs = np.asarray(xs, dtype=float).reshape(len(xs), self.layer.n)
        keys = [self._key(t, x) for t, x in zip(thetas, xs)]
        todo = [i for i, key in enumerate(keys) if key not in self._store]
        seen = {}
        for i in todo:
            seen.setdefault(keys[i], i)
        todo = list(seen.values())
        if todo:
            fibs = pullback_fibers(
                self.layer, thetas[todo], xs[todo], self.seeds, self.T_pull, self.tol, self.cfg,
                check_convergence=False, allow_empty=True,
            )
            for i, fb in zip(todo, fibs):
                self._store[keys[i]] = fb
        return [self._store[key] for key in keys]

    def inflated(self, theta, x, delta, sampler: NeighborhoodSampler, hull_only=False) -> np.ndarray:
        """Point cloud of ``A[delta]`` at (theta, x) as the union of cached fibers."""
        theta = np.asarray(theta, dtype=float).reshape(self.layer.k)
        x = np.asarray(x, dtype=float).reshape(self.layer.n)
        if delta <= 0:
            dh, dx = np.zeros((1, self.layer.k)), np.zeros((1, self.layer.n))
        else:
            dh, dx = sampler.offsets(delta, self.layer.k, 0 if hull_only else self.layer.n)
            if hull_only:
                dx = np.zeros((len(dh), self.layer.n))
        thetas = np.mod(theta + dh, 2 * np.pi)
        fibs = [f for f in self.get(thetas, x + dx) if f is not None]
        if not fibs:
            raise EmptyFiber(f"every neighborhood sample escaped (delta={delta})")
        return np.vstack([f.points for f in fibs])


# ---------------------------------------------------------------------------
# tracking error


def tracking_error(
    sc: SlowFastScenario,
    eps: float,
    fiber_mode: str = "eta",
    T_start: float = 0.0,
    cfg: IntegratorConfig = IntegratorConfig(),
    delta: float = 0.0,
    per_decade: int = 2000,
    n_fiber_samples: int = 41,
    seeds: Optional[SeedBox] = None,
    T_pull: float = 40.0,
    tol: float = 1e-3,
    spinup: float = 50.0,
    sampler: NeighborhoodSampler = NeighborhoodSampler(),
    metric: HullMetricConfig = HullMetricConfig(),
    hull_only: bool = False,
    tau_end: Optional[float] = None,
) -> TrackingReport:
    """Distances on ``[T_start, t0/eps]`` from the fast motion to the chosen target.

    ``eta`` and ``proxy`` sample ``per_decade`` points per 10 units of fast
    time; the fiber modes use ``n_fiber_samples`` evenly spaced times.
    """
    if fiber_mode not in MODES:
        raise ValueError(f"unknown fiber mode {fiber_mode!r}; expected one of {MODES}")
    if metric.mode != "torus-angle" and fiber_mode == "inflated":
        raise ValueError("inflated fibers are sampled in the torus-angle metric only")
    tau_end = sc.t0 / eps if tau_end is None else tau_end
    x0_fn = reduced_slow(sc)
    src = getattr(x0_fn, "source", "custom")
    if fiber_mode == "proxy":
        taus = sample_grid(T_start, tau_end, per_decade)
        a_eps = transition_attractor(sc, eps, T_start, tau_end, cfg, spinup)
        eta = eta_curve(sc, eps, taus, cfg, spinup, x0_fn=x0_fn, T_pull=T_pull, tol=tol)
        d = np.abs(a_eps(taus)[:, 0] - eta.states[:, 0])
        return TrackingReport(eps, T_start, taus, d, float(d.max()), "proxy", src, metric.mode)
    sol = solve_coupled(sc, eps, cfg, tau_end=tau_end)
    if sol.blew_up:
        return TrackingReport(
            eps, T_start, np.empty(0), np.empty(0), math.inf, fiber_mode, src, metric.mode, delta, True, sol.fast.escape_time
        )
    if fiber_mode == "eta":
        taus = sample_grid(T_start, tau_end, per_decade)
        eta = eta_curve(sc, eps, taus, cfg, spinup, x0_fn=x0_fn, T_pull=T_pull, tol=tol)
        d = np.sqrt(((sol.fast(taus) - eta.states) ** 2).sum(axis=1))
        return TrackingReport(eps, T_start, taus, d, float(d.max()), "eta", src, metric.mode)
    taus = np.linspace(T_start, tau_end, n_fiber_samples)
    xs = np.asarray(x0_fn(eps * taus), dtype=float).reshape(len(taus), sc.n)
    thetas = shift(sc.theta, taus, sc.layer.omega) if sc.layer.k else np.zeros((len(taus), 0))
    if seeds is None:
        seeds = _default_seeds(sc)
    cache = FiberCache(sc.layer, seeds, T_pull, tol, cfg)
    ys = sol.fast(taus)
    d = np.empty(len(taus))
    dl = delta if fiber_mode == "inflated" else 0.0
    for i in range(len(taus)):
        d[i] = point_to_set(ys[i], cache.inflated(thetas[i], xs[i], dl, sampler, hull_only))
    return TrackingReport(eps, T_start, taus, d, float(d.max()), fiber_mode, src, metric.mode, dl)


def _default_seeds(sc: SlowFastScenario) -> SeedBox:
    """Seeds above the repeller of the layer at the initial slow state
    (``[r_max + 0.1, r_max + 3]``) for translated scalar layers."""
    if sc.layer.translated and sc.m == 1:
        from .layer import repeller_trajectory

        rep = repeller_trajectory(sc.layer.base_layer(), sc.theta, sc.x_init(), 0.0, 100.0)
        r_max = float(rep.states.max())
        return SeedBox.interval(r_max + 0.1, r_max + 3.0, 0.25, relative=True)
    raise ValueError("give an explicit seed box for non-translated layers")


def measured_T(report: TrackingReport, delta: float) -> Optional[float]:
    """Smallest sample time after which every distance stays ``<= delta``."""
    if report.blew_up or len(report.dists) == 0:
        return None
    tail_max = np.maximum.accumulate(report.dists[::-1])[::-1]
    ok = np.flatnonzero(tail_max <= delta)
    return float(report.taus[ok[0]]) if len(ok) else None


# ---------------------------------------------------------------------------
# final-time inflation


def delta_k(
    sc: SlowFastScenario,
    epsilons: Sequence[float],
    search_tol: float = 1e-3,
    cfg: IntegratorConfig = IntegratorConfig(),
    seeds: Optional[SeedBox] = None,
    T_pull: float = 40.0,
    fiber_tol: float = 1e-3,
    sampler: NeighborhoodSampler = NeighborhoodSampler(),
    box_diameter: Optional[float] = None,
    hull_only: bool = False,
) -> DeltaKReport:
    """Smallest delta with ``dist(y_eps(t0/eps), A[delta]) <= delta`` per epsilon.

    The fiber is taken at ``(theta0 . t0/eps, x0(t0))``. Bisection runs on
    ``[0, d0]`` where ``d0`` is the distance to the bare fiber; the predicate
    holds at d0 since ``A[d0]`` contains the bare fiber. ``box_diameter``
    caps the upper bracket when given.
    """
    eps_list = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon sequence must be strictly decreasing")
    x0_fn = reduced_slow(sc)
    x_end = np.asarray(x0_fn(sc.t0), dtype=float).reshape(sc.n)
    seeds = _default_seeds(sc) if seeds is None else seeds
    cache = FiberCache(sc.layer, seeds, T_pull, fiber_tol, cfg)
    deltas, d0s = [], []
    for eps in eps_list:
        tau_end = sc.t0 / eps
        sol = solve_coupled(sc, eps, cfg)
        if sol.blew_up:
            raise EmptyFiber(f"fast solution escaped at tau={sol.fast.escape_time} for eps={eps}")
        y_end = sol.fast.states[-1]
        th_end = shift(sc.theta, tau_end, sc.layer.omega) if sc.layer.k else np.zeros(0)

        def dist(delta):
            return point_to_set(y_end, cache.inflated(th_end, x_end, delta, sampler, hull_only))

        d0 = dist(0.0)
        d0s.append(d0)
        hi = d0 if box_diameter is None else min(d0, box_diameter)
        lo = 0.0
        if hi <= search_tol:
            deltas.append(hi)
            continue
        while hi - lo > search_tol:
            mid = 0.5 * (lo + hi)
            if dist(mid) <= mid:
                hi = mid
            else:
                lo = mid
        deltas.append(hi)
    tail = deltas[len(deltas) // 2 :] if len(deltas) > 2 else deltas
    mono = all(b <= a + search_tol for a, b in zip(tail, tail[1:]))
    return DeltaKReport(tuple(eps_list), tuple(deltas), bool(mono), tuple(d0s), search_tol)


# ---------------------------------------------------------------------------
# equi-attraction


@dataclass(frozen=True, eq=False)
class EquiAttractionTable:
    xs: np.ndarray
    tols: np.ndarray
    T: np.ndarray  # (len(xs), len(tols)); nan where never reached

    def spread(self, j: int = 0) -> float:
        col = self.T[:, j]
        return float((np.nanmax(col) - np.nanmin(col)) / np.nanmax(col))

    def rows(self):
        for i, x in enumerate(self.xs):
            for j, tl in enumerate(self.tols):
                yield float(x[0]) if len(x) == 1 else tuple(x), float(tl), float(self.T[i, j])


def equi_attraction_probe(
    layer,
    x_grid,
    seeds: SeedBox,
    tols=(1e-3,),
    theta=None,
    horizon: float = 40.0,
    T_pull: float = 40.0,
    fiber_tol: float = 1e-4,
    cfg: IntegratorConfig = IntegratorConfig(),
    fiber_seeds: Optional[SeedBox] = None,
) -> EquiAttractionTable:
    """Attraction time ``T(x, tol)``: first time after which the whole seed
    cloud stays within ``tol`` of the (forward-transported) fiber.

    The fiber at (theta, x) is computed by pullback and its points are
    integrated forward alongside the seeds, so the target moves with the
    flow rather than being recomputed at each time.
    """
    xs = np.atleast_2d(np.asarray(x_grid, dtype=float)).reshape(-1, layer.n)
    theta = np.zeros(layer.k) if theta is None else np.asarray(theta, dtype=float).reshape(layer.k)
    tols = np.atleast_1d(np.asarray(tols, dtype=float))
    fseeds = seeds if fiber_seeds is None else fiber_seeds
    fibs = pullback_fibers(layer, np.repeat(theta[None], len(xs), 0), xs, fseeds, T_pull, fiber_tol, cfg)
    from .layer import _sample_seeds

    Y, F = _sample_seeds(layer, seeds, xs), [fb.points for fb in fibs]
    P = Y.shape[1]
    blocks, X, owner, is_fib = [], [], [], []
    for i in range(len(xs)):
        blocks += [Y[i], F[i]]
        X.append(np.repeat(xs[i][None], P + len(F[i]), 0))
        owner += [i] * (P + len(F[i]))
        is_fib += [False] * P + [True] * len(F[i])
    Y0, X = np.vstack(blocks), np.vstack(X)
    owner, is_fib = np.asarray(owner), np.asarray(is_fib)
    TH = np.repeat(theta[None], len(Y0), 0)
    res = integrate_ensemble(layer.ensemble_fn(), Y0, 0.0, horizon, cfg.step, args=(TH, X), save_every=1)
    times = res.saved_times[:, 0]
    S = res.saved_states
    T = np.full((len(xs), len(tols)), np.nan)
    for i in range(len(xs)):
        cloud = S[:, (owner == i) & ~is_fib, :]
        fib = S[:, (owner == i) & is_fib, :]
        d = np.sqrt(((cloud[:, :, None, :] - fib[:, None, :, :]) ** 2).sum(axis=3)).min(axis=2).max(axis=1)
        if res.escaped[owner == i].any():
            continue
        tail = np.maximum.accumulate(d[::-1])[::-1]
        for j, tl in enumerate(tols):
            ok = np.flatnonzero(tail < tl)
            if len(ok):
                T[i, j] = times[ok[0]]
    return EquiAttractionTable(xs, tols, T)
