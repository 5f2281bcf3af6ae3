"""Coupled slow-fast integration, the averaged slow equation and the
comparison bound for solutions of nearby vector fields.

The coupled system is always solved in fast time,

    x' = eps f(x, y),   y' = g(x, y, tau),

and the slow trajectory is reported as a rescaled view (t = eps tau).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .layer import LayerField, SeedBox, pullback_fiber
from .ode import (
    DEFAULT_ESCAPE_RADIUS,
    IntegratorConfig,
    Trajectory,
    VectorField,
    integrate,
)

__all__ = [
    "SlowFastScenario",
    "CoupledSolution",
    "ComparisonReport",
    "AveragingUnavailable",
    "PreconditionViolated",
    "solve_coupled",
    "solve_slow_time",
    "averaged_slow",
    "reduced_slow",
    "comparison_bound_check",
    "growth_constants",
    "gronwall_check",
]


class AveragingUnavailable(RuntimeError):
    """The frozen layer attractor is not a converged singleton at some x."""


class PreconditionViolated(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SlowFastScenario:
    f: Callable
    layer: LayerField
    x0: tuple = (0.0,)
    y0: tuple = (1.0,)
    t0: float = 20.0
    epsilons: tuple = (0.05, 0.2, 0.35, 0.5)
    theta0: Optional[tuple] = None
    name: str = "scenario"

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be > 0")
        if any(not (0 < e <= 1) for e in self.epsilons):
            raise ValueError("epsilon values must lie in (0, 1]")
        if len(np.atleast_1d(self.x0)) != self.layer.n or len(np.atleast_1d(self.y0)) != self.layer.m:
            raise ValueError("x0 / y0 dimensions do not match the layer field")

    @property
    def n(self):
        return self.layer.n

    @property
    def m(self):
        return self.layer.m

    @property
    def gamma(self):
        return self.layer.gamma

    @property
    def forcing(self):
        return self.layer.forcing

    @property
    def theta(self) -> np.ndarray:
        if self.theta0 is None:
            return np.zeros(self.layer.k)
        return np.asarray(self.theta0, dtype=float).reshape(self.layer.k)

    def x_init(self):
        return np.atleast_1d(np.asarray(self.x0, dtype=float))

    def y_init(self):
        return np.atleast_1d(np.asarray(self.y0, dtype=float))

    def with_(self, **kw) -> "SlowFastScenario":
        d = {k: getattr(self, k) for k in ("f", "layer", "x0", "y0", "t0", "epsilons", "theta0", "name")}
        d.update(kw)
        return SlowFastScenario(**d)


@dataclass(frozen=True, eq=False)
class CoupledSolution:
    epsilon: float
    slow: Trajectory
    fast: Trajectory
    joint: Trajectory
    consistent: bool

    @property
    def blew_up(self) -> bool:
        return self.joint.blew_up

    def x_at_fast(self, tau):
        n = self.slow.dim
        return self.joint(tau)[..., :n]


def coupled_field(sc: SlowFastScenario, eps: float) -> VectorField:
    """Fast-time vector field of the joint state ``(x, y)``."""
    n, m = sc.n, sc.m
    layer, f = sc.layer, sc.f
    th = sc.theta
    if layer.scalar_base is not None and n == 1 and m == 1 and layer.gamma is not None:
        p = layer.forcing.scalar(th)
        gam = layer.gamma.scalar
        f_scalar = getattr(f, "scalar_pair", None)

        def fn(z, tau):
            x, y = z[0], z[1]
            u = y - gam(x)
            return np.array((eps * (f_scalar(x, y) if f_scalar else float(np.asarray(f(z[:1], z[1:])).reshape(-1)[0])),
                             p(tau) - u * u))

        return VectorField(fn, 2)
    TH = th[None, :]

    def fn(z, tau):
        x, y = z[:n], z[n:]
        dx = eps * np.asarray(f(x, y), dtype=float).reshape(n)
        dy = layer.g(x[None, :], y[None, :], np.asarray([tau]), TH)[0]
        return np.concatenate((dx, dy))

    return VectorField(fn, n + m)


def solve_coupled(
    sc: SlowFastScenario,
    eps: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    tau_end: Optional[float] = None,
) -> CoupledSolution:
    """Integrate the fast-time form on ``[0, t0/eps]``."""
    if not eps > 0:
        raise ValueError("epsilon must be > 0")
    tau_end = sc.t0 / eps if tau_end is None else tau_end
    z0 = np.concatenate((sc.x_init(), sc.y_init()))
    joint = integrate(coupled_field(sc, eps), z0, 0.0, tau_end, cfg, escape_radius)
    n = sc.n
    meta = {"epsilon": eps}
    fast = Trajectory(joint.times, joint.states[:, n:], joint.derivs[:, n:], joint.blew_up, joint.escape_time, joint.method, meta)
    slow = Trajectory(
        joint.times * eps,
        joint.states[:, :n],
        joint.derivs[:, :n] / eps,
        joint.blew_up,
        None if joint.escape_time is None else joint.escape_time * eps,
        joint.method,
        meta,
    )
    # the slow view must agree with the joint solve at tau = t / eps
    probe = slow.times[:: max(1, len(slow.times) // 50)]
    consistent = bool(np.allclose(slow(probe), joint(probe / eps)[:, :n], rtol=0, atol=1e-9))
    return CoupledSolution(eps, slow, fast, joint, consistent)


def solve_slow_time(
    sc: SlowFastScenario,
    eps: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> Trajectory:
    """Slow-time form ``x_t = f``, ``eps y_t = g(x, y, t/eps)`` with step ``eps * cfg.step``."""
    n = sc.n
    inner = coupled_field(sc, eps)

    def fn(z, t):
        return inner(z, t / eps) / eps

    z0 = np.concatenate((sc.x_init(), sc.y_init()))
    return integrate(VectorField(fn, n + sc.m), z0, 0.0, sc.t0, cfg.with_step(cfg.step * eps), escape_radius)


# ---------------------------------------------------------------------------
# limit slow equation


def averaged_slow(
    sc: SlowFastScenario,
    t0: Optional[float] = None,
    avg_window: float = 50.0,
    cfg: IntegratorConfig = IntegratorConfig(),
    slow_step: float = 1e-2,
    refresh_dx: float = 0.05,
    seeds: Optional[SeedBox] = None,
    T_pull: float = 40.0,
    tol: float = 1e-3,
) -> Trajectory:
    """Limit slow equation ``x' = <f(x, .)>`` averaged over the frozen layer attractor.

    The attractor trajectory ``y*`` of the frozen-x layer equation is obtained
    from a converged singleton pullback fiber and integrated over
    ``avg_window``; it is recomputed whenever x has drifted by ``refresh_dx``.
    Fields that ignore y skip the layer entirely.
    """
    t0 = sc.t0 if t0 is None else t0
    f = sc.f
    n = sc.n
    slow_cfg = IntegratorConfig(step=slow_step)
    if getattr(f, "y_independent", False):
        dummy = np.zeros(sc.m)
        tr = integrate(VectorField(lambda x, t: np.asarray(f(x, dummy), dtype=float).reshape(n), n), sc.x_init(), 0.0, t0, slow_cfg)
        tr.meta["source"] = "closed-form" if f.closed_form(sc.x_init(), 0.0) is not None else "direct"
        return tr
    if seeds is None:
        c = float(sc.layer.center(sc.x_init())[0]) if sc.m == 1 else 0.0
        seeds = SeedBox.interval(c, c + 3.0, 0.25, relative=False)
    cache = {"x": None, "ys": None, "times": None, "base": None}
    translated = sc.layer.translated

    def frozen_attractor(layer, x, box):
        fib = pullback_fiber(layer, sc.theta, x, box, T_pull, tol, cfg)
        if not fib.converged or fib.diameter > tol:
            raise AveragingUnavailable(
                f"frozen layer fiber at x={x} is not a converged singleton (gap={fib.hausdorff_gap:.3g}, diam={fib.diameter:.3g})"
            )
        return integrate(layer.vector_field(sc.theta, x), fib.points[0], 0.0, avg_window, cfg)

    def refresh(x):
        if translated:
            # attractor of g0(y - gamma(x)) is the base attractor shifted by gamma(x)
            if cache["base"] is None:
                c0 = sc.layer.center(sc.x_init())
                box = SeedBox(tuple(np.subtract(seeds.lower, c0)), tuple(np.subtract(seeds.upper, c0)), seeds.spacing)
                cache["base"] = frozen_attractor(sc.layer.base_layer(), sc.x_init(), box)
            base = cache["base"]
            cache.update(x=np.array(x), ys=base.states + sc.layer.center(x), times=base.times)
            return
        y_star = frozen_attractor(sc.layer, x, seeds)
        cache.update(x=np.array(x), ys=y_star.states, times=y_star.times)

    def rhs(x, t):
        if cache["x"] is None or np.max(np.abs(x - cache["x"])) > refresh_dx:
            refresh(x.copy())
        vals = np.asarray(f(np.broadcast_to(x, (len(cache["ys"]), n)), cache["ys"]), dtype=float).reshape(len(cache["ys"]), n)
        return np.trapezoid(vals, cache["times"], axis=0) / avg_window

    tr = integrate(VectorField(rhs, n), sc.x_init(), 0.0, t0, slow_cfg)
    tr.meta["source"] = "averaged"
    return tr


def reduced_slow(sc: SlowFastScenario, **kw) -> Callable:
    """``t -> x0(t)`` for the limit slow equation: closed form when available,
    averaged numerical solution otherwise."""
    f = sc.f
    x0 = sc.x_init()
    if getattr(f, "y_independent", False) and f.closed_form(x0, 0.0) is not None:
        fn = lambda t: f.closed_form(x0, np.asarray(t, dtype=float))  # noqa: E731
        fn.source = "closed-form"
        return fn
    tr = averaged_slow(sc, **kw)

    def fn(t):
        t = np.asarray(t, dtype=float)
        return tr(np.clip(t, tr.t0, tr.t1))

    fn.source = "averaged"
    return fn


# ---------------------------------------------------------------------------
# comparison bound for nearby fields


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    y1: Trajectory
    y2: Trajectory
    sigma: float
    sigma_observed: float
    L: float
    lhs: np.ndarray
    rhs: np.ndarray
    max_ratio: float
    holds: bool


def comparison_bound_check(
    g1: VectorField,
    g2: VectorField,
    y0,
    interval,
    L: float,
    sigma: Optional[float] = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    slack: float = 1e-8,
) -> ComparisonReport:
    """Check ``|y1 - y2| <= sigma/L (e^{L|tau - tau0|} - 1)`` at every node.

    ``y1`` solves ``g1`` (Lipschitz with constant ``L`` on the region the
    solutions visit) and ``y2`` solves ``g2`` from the same ``y0``.
    ``sigma`` bounds ``|g1(y2(tau), tau) - g2(y2(tau), tau)|``; it is measured
    at the nodes when omitted, and checked against the nodes when given.
    The ratio is ``lhs / (rhs + slack)`` where ``slack`` absorbs integrator error.
    """
    if not L > 0:
        raise ValueError("Lipschitz constant must be > 0")
    tau0, tau1 = map(float, interval)
    y1 = integrate(g1, y0, tau0, tau1, cfg)
    y2 = integrate(g2, y0, tau0, tau1, cfg)
    if y1.blew_up or y2.blew_up:
        raise PreconditionViolated("a solution left the escape radius; no common interval")
    y1 = y1.resample(y2.times) if len(y1.times) != len(y2.times) else y1
    dev = np.array([np.linalg.norm(np.asarray(g1(y, t)) - np.asarray(g2(y, t))) for y, t in zip(y2.states, y2.times)])
    sig_obs = float(dev.max())
    if sigma is None:
        sigma = sig_obs
    elif sig_obs > sigma * (1 + 1e-12) + 1e-15:
        raise PreconditionViolated(f"|g1 - g2| along y2 reaches {sig_obs:.6g} > sigma = {sigma:.6g}")
    lhs = np.sqrt(((y1.states - y2.states) ** 2).sum(axis=1))
    rhs = sigma / L * np.expm1(L * np.abs(y2.times - tau0))
    ratio = lhs / (rhs + slack)
    mr = float(ratio.max())
    return ComparisonReport(y1, y2, float(sigma), sig_obs, float(L), lhs, rhs, mr, mr <= 1.0)


# ---------------------------------------------------------------------------
# linear growth bound on the slow field


def growth_constants(f: Callable, x_grid, y_grid):
    """Smallest ``(a, b)`` on a grid, with b fitted first, such that
    ``sup_y |f(x, y)| <= a + b|x|`` at every grid x."""
    xs = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if xs.shape[0] == 1 and xs.shape[1] > 1:
        xs = xs.T
    ys = np.atleast_2d(np.asarray(y_grid, dtype=float))
    if ys.shape[0] == 1 and ys.shape[1] > 1:
        ys = ys.T
    F = np.array([max(float(np.linalg.norm(np.asarray(f(x, y)))) for y in ys) for x in xs])
    r = np.sqrt((xs**2).sum(axis=1))
    i0 = int(np.argmin(r))
    mask = r > r[i0] + 1e-12
    b = float(max(0.0, np.max((F[mask] - F[i0]) / (r[mask] - r[i0])))) if mask.any() else 0.0
    a = float(np.max(F - b * r))
    return max(a, 0.0), b


def gronwall_check(slow: Trajectory, a: float, b: float, slack: float = 1e-9) -> bool:
    """``|x(t)| <= e^{bt}|x0| + a(e^{bt} - 1)/b`` at every node (``a t`` when b = 0)."""
    t = slow.times - slow.t0
    x0 = float(np.linalg.norm(slow.states[0]))
    growth = a * t if b == 0 else a * np.expm1(b * t) / b
    bound = np.exp(b * t) * x0 + growth
    return bool(np.all(np.sqrt((slow.states**2).sum(axis=1)) <= bound + slack))
