"""Layer equations ``y' = g(x, y, tau)`` with the slow variable frozen.

Fibers of the pullback attractor are approximated by point clouds: a seed
grid is pulled back from ``shift(theta, -T)`` and the endpoint cloud is
deduplicated. Everything is batched through ``integrate_ensemble``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .hull import NeighborhoodSampler, QuasiPeriodicForcing, shift, wrap
from .maps import ConstantGamma
from .ode import (
    DEFAULT_ESCAPE_RADIUS,
    IntegratorConfig,
    Trajectory,
    VectorField,
    integrate,
    integrate_ensemble,
    variational_integrate,
)

__all__ = [
    "LayerField",
    "riccati_layer",
    "SeedBox",
    "Fiber",
    "HyperbolicPair",
    "UUBCertificate",
    "EmptyFiber",
    "NoBoundedSolution",
    "NotHyperbolic",
    "pullback_fiber",
    "pullback_fibers",
    "inflated_fiber",
    "riccati_pair",
    "attractor_trajectory",
    "repeller_trajectory",
    "dichotomy_exponent",
    "uub_check",
    "hausdorff",
    "directed_hausdorff",
    "point_to_set",
    "dedup",
    "lipschitz_estimate",
]


class EmptyFiber(RuntimeError):
    """Every seed escaped: the seed box is not in the basin of the attractor."""


class NoBoundedSolution(RuntimeError):
    pass


class NotHyperbolic(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class LayerField:
    """Family ``g(x, y, tau, theta)`` of layer equations over the hull.

    ``g`` works on batches: ``x`` (N, n), ``y`` (N, m), ``tau`` (N,),
    ``theta`` (N, k) -> (N, m). When the field has the translated form
    ``g0(y - gamma(x), tau, theta)`` both ``base`` and ``gamma`` are set.
    """

    g: Callable
    n: int
    m: int
    forcing: QuasiPeriodicForcing
    jac: Optional[Callable] = None
    base: Optional[Callable] = None
    gamma: Optional[Callable] = None
    scalar_factory: Optional[Callable] = None
    name: str = "layer"

    @property
    def omega(self) -> np.ndarray:
        return self.forcing.frequencies

    @property
    def k(self) -> int:
        return self.forcing.dim

    @property
    def translated(self) -> bool:
        return self.base is not None and self.gamma is not None

    def center(self, x) -> np.ndarray:
        """``gamma(x)`` for translated fields, the origin otherwise."""
        if self.gamma is None:
            return np.zeros(self.m)
        return np.asarray(self.gamma(np.atleast_1d(np.asarray(x, dtype=float))), dtype=float).reshape(self.m)

    def __call__(self, x, y, tau, theta):
        return self.g(x, y, tau, theta)

    def vector_field(self, theta, x) -> VectorField:
        theta = wrap(np.atleast_1d(np.asarray(theta, dtype=float))) if self.k else np.zeros(0)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.scalar_factory is not None:
            return VectorField(self.scalar_factory(theta, x), self.m, scalar=True)
        X, TH = x[None, :], theta[None, :]

        def fn(y, tau):
            return self.g(X, y[None, :], np.asarray([tau]), TH)[0]

        return VectorField(fn, self.m)

    def ensemble_fn(self):
        g = self.g

        def fn(y, tau, theta, x):
            return g(x, y, tau, theta)

        return fn

    def jacobian_y(self, theta, x) -> Callable:
        """``(y, tau) -> dg/dy`` of shape (m, m); central differences if no analytic form."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float)) if self.k else np.zeros(0)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        X, TH = x[None, :], theta[None, :]
        if self.jac is not None:
            return lambda y, tau: self.jac(X, np.atleast_1d(y)[None, :], np.asarray([tau]), TH)[0]

        def fd(y, tau):
            y = np.atleast_1d(np.asarray(y, dtype=float))
            J = np.empty((self.m, self.m))
            for i in range(self.m):
                e = np.zeros(self.m)
                e[i] = 1e-6 * max(1.0, abs(y[i]))
                gp = self.g(X, (y + e)[None, :], np.asarray([tau]), TH)[0]
                gm = self.g(X, (y - e)[None, :], np.asarray([tau]), TH)[0]
                J[:, i] = (gp - gm) / (2 * e[i])
            return J

        return fd

    def base_layer(self) -> "LayerField":
        """The untranslated family ``g0`` (gamma identically zero)."""
        if not self.translated:
            raise ValueError("field is not in translated form")
        return self.with_gamma(ConstantGamma(0.0))

    def with_gamma(self, gamma) -> "LayerField":
        if self.base is None:
            raise ValueError("field is not in translated form")
        return _translated_layer(self.base, self.forcing, gamma, self.n, self.m, self.jac_base, self.name, self.scalar_base)

    jac_base: Optional[Callable] = field(default=None, repr=False)
    scalar_base: Optional[Callable] = field(default=None, repr=False)


def _translated_layer(base, forcing, gamma, n, m, jac_base=None, name="layer", scalar_base=None):
    def g(x, y, tau, theta):
        return base(y - gamma(x), tau, theta)

    jac = None
    if jac_base is not None:
        def jac(x, y, tau, theta):
            return jac_base(y - gamma(x), tau, theta)

    scalar_factory = None
    if scalar_base is not None and m == 1:
        def scalar_factory(theta, x):
            c = float(np.asarray(gamma(x[None, :])).reshape(-1)[0])
            return scalar_base(theta, c)

    return LayerField(
        g, n, m, forcing, jac=jac, base=base, gamma=gamma, scalar_factory=scalar_factory,
        name=name, jac_base=jac_base, scalar_base=scalar_base,
    )


def riccati_layer(forcing: QuasiPeriodicForcing, gamma=None, n: int = 1) -> LayerField:
    """``g(x, y, tau) = -(y - gamma(x))^2 + p_theta(tau)`` with scalar y."""
    gamma = gamma if gamma is not None else ConstantGamma(0.0)

    def base(u, tau, theta):
        return -(u * u) + forcing(theta, tau)[..., None]

    def jac_base(u, tau, theta):
        return (-2.0 * u)[..., None]

    def scalar_base(theta, c):
        p = forcing.scalar(theta)

        def fn(y, tau):
            u = y - c
            return p(tau) - u * u

        return fn

    return _translated_layer(base, forcing, gamma, n, 1, jac_base, "riccati", scalar_base)


# ---------------------------------------------------------------------------
# point-cloud geometry


def directed_hausdorff(a, b) -> float:
    """``sup_{p in a} dist(p, b)``, exact pairwise computation."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if len(a) == 0:
        return 0.0
    if len(b) == 0:
        return math.inf
    worst = 0.0
    for start in range(0, len(a), 512):
        chunk = a[start : start + 512]
        d2 = ((chunk[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        worst = max(worst, float(np.sqrt(d2.min(axis=1)).max()))
    return worst


def hausdorff(a, b) -> float:
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def point_to_set(y, cloud) -> float:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    cloud = np.atleast_2d(np.asarray(cloud, dtype=float))
    if len(cloud) == 0:
        return math.inf
    return float(np.sqrt(((cloud - y) ** 2).sum(axis=1)).min())


def dedup(points, radius: float) -> np.ndarray:
    """Greedy thinning in lexicographic order; every input point ends up
    within ``radius`` of a kept point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) == 0:
        return pts
    pts = pts[np.lexsort(pts.T[::-1])]
    if pts.shape[1] == 1:
        kept = [pts[0]]
        for p in pts[1:]:
            if p[0] - kept[-1][0] > radius:
                kept.append(p)
        return np.asarray(kept)
    kept = [pts[0]]
    K = pts[:1]
    for p in pts[1:]:
        if np.sqrt(((K - p) ** 2).sum(axis=1)).min() > radius:
            kept.append(p)
            K = np.asarray(kept)
    return np.asarray(kept)


# ---------------------------------------------------------------------------
# fibers


@dataclass(frozen=True)
class SeedBox:
    """Grid of seeds in ``[lower, upper]`` with the given spacing.

    With ``relative=True`` the box is translated by ``gamma(x)`` for each
    sampled slow parameter (translated fields only).
    """

    lower: tuple
    upper: tuple
    spacing: float
    relative: bool = False

    def __post_init__(self):
        lo, up = np.atleast_1d(self.lower), np.atleast_1d(self.upper)
        if lo.shape != up.shape or np.any(up < lo):
            raise ValueError("seed box needs lower <= upper componentwise")
        if not self.spacing > 0:
            raise ValueError("seed spacing must be > 0")

    @classmethod
    def interval(cls, lo: float, hi: float, spacing: float = 0.25, relative: bool = False) -> "SeedBox":
        return cls((float(lo),), (float(hi),), spacing, relative)

    def points(self) -> np.ndarray:
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        up = np.atleast_1d(np.asarray(self.upper, dtype=float))
        axes = [
            np.linspace(l, u, int(math.floor((u - l) / self.spacing + 1e-9)) + 1) if u > l else np.array([l])
            for l, u in zip(lo, up)
        ]
        return np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T

    def diameter(self) -> float:
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        up = np.atleast_1d(np.asarray(self.upper, dtype=float))
        return float(np.sqrt(((up - lo) ** 2).sum()))


@dataclass(frozen=True, eq=False)
class Fiber:
    points: np.ndarray
    pullback_time: float
    resolution: float
    converged: bool
    hausdorff_gap: float
    n_escaped: int = 0
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    delta: float = 0.0
    n_samples: int = 1
    raw: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def diameter(self) -> float:
        if len(self.points) < 2:
            return 0.0
        d2 = ((self.points[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
        return float(np.sqrt(d2.max()))

    def distance(self, y) -> float:
        return point_to_set(y, self.points)


def _sample_seeds(layer, seeds: SeedBox, xs):
    base = seeds.points()
    if seeds.relative:
        if layer.gamma is None:
            raise ValueError("relative seed boxes need a translated field")
        centers = np.asarray(layer.gamma(xs), dtype=float).reshape(len(xs), layer.m)
        return base[None, :, :] + centers[:, None, :]
    return np.broadcast_to(base, (len(xs),) + base.shape)


def _pull_back(layer, thetas, xs, seeds, T, step, escape_radius):
    """Endpoints (S, P, m) and escape mask (S, P) of the seeds pulled back by T."""
    S = len(thetas)
    Y0 = _sample_seeds(layer, seeds, xs)
    P = Y0.shape[1]
    start = shift(thetas, -T, layer.omega) if layer.k else thetas
    th = np.repeat(start, P, axis=0)
    X = np.repeat(xs, P, axis=0)
    res = integrate_ensemble(
        layer.ensemble_fn(),
        Y0.reshape(S * P, layer.m),
        0.0,
        T,
        step=step,
        escape_radius=escape_radius,
        args=(th, X),
    )
    return res.states.reshape(S, P, layer.m), res.escaped.reshape(S, P)


def _as_rows(a, width):
    a = np.asarray(a, dtype=float)
    if width == 0:
        return np.zeros((a.shape[0] if a.ndim == 2 else 1, 0))
    return np.atleast_2d(a).reshape(-1, width)


def pullback_fibers(
    layer: LayerField,
    thetas,
    xs,
    seeds: SeedBox,
    T_pull: float,
    tol: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    check_convergence: bool = True,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    allow_empty: bool = False,
):
    """Pullback fibers at many (theta, x) pairs in one batched integration."""
    if not T_pull > 0:
        raise ValueError("T_pull must be > 0")
    thetas, xs = _as_rows(thetas, layer.k), _as_rows(xs, layer.n)
    if len(thetas) != len(xs):
        S = max(len(thetas), len(xs))
        if min(len(thetas), len(xs)) != 1:
            raise ValueError("thetas and xs must have matching lengths or one row")
        thetas = np.repeat(thetas, S // len(thetas), axis=0)
        xs = np.repeat(xs, S // len(xs), axis=0)
    thetas = wrap(thetas) if layer.k else thetas
    ends, esc = _pull_back(layer, thetas, xs, seeds, T_pull, cfg.step, escape_radius)
    if check_convergence:
        ends_half, esc_half = _pull_back(layer, thetas, xs, seeds, T_pull / 2, cfg.step, escape_radius)
    out = []
    for i in range(len(thetas)):
        keep = ~esc[i]
        if not keep.any():
            if allow_empty:
                out.append(None)
                continue
            raise EmptyFiber(
                f"all {esc.shape[1]} seeds escaped at theta={thetas[i]}, x={xs[i]}; seed box not in the basin"
            )
        pts = dedup(ends[i][keep], tol / 2)
        if check_convergence:
            keep_h = ~esc_half[i]
            half = dedup(ends_half[i][keep_h], tol / 2) if keep_h.any() else np.empty((0, layer.m))
            gap = hausdorff(pts, half) if len(half) else math.inf
        else:
            gap = math.nan
        out.append(
            Fiber(
                pts,
                T_pull,
                seeds.spacing,
                bool(gap < tol) if check_convergence else False,
                gap,
                int((~keep).sum()),
                thetas[i].copy(),
                xs[i].copy(),
                raw=ends[i][keep],
            )
        )
    return out


def pullback_fiber(
    layer: LayerField,
    theta,
    x,
    seeds: SeedBox,
    T_pull: float,
    tol: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> Fiber:
    """Fiber of the pullback attractor at (theta, x).

    Each seed is integrated from phase ``shift(theta, -T_pull)`` over
    ``[0, T_pull]``; converged means the cloud agrees with the ``T_pull/2``
    estimate to within ``tol`` in Hausdorff distance.
    """
    theta, x = _as_rows(theta, layer.k)[:1], _as_rows(x, layer.n)[:1]
    return pullback_fibers(layer, theta, x, seeds, T_pull, tol, cfg, True, escape_radius)[0]


def inflated_fiber(
    layer: LayerField,
    theta,
    x,
    delta: float,
    seeds: SeedBox,
    T_pull: float,
    tol: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    sampler: NeighborhoodSampler = NeighborhoodSampler(),
    check_convergence: bool = True,
    hull_only: bool = False,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> Fiber:
    """Union of pullback fibers over a sampled delta-ball of (theta, x).

    ``hull_only`` inflates in the hull coordinate alone (the per-x variant).
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).reshape(layer.k)
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(layer.n)
    if delta == 0:
        fib = pullback_fibers(layer, theta[None], x[None], seeds, T_pull, tol, cfg, check_convergence, escape_radius)[0]
        return fib
    dh, dx = sampler.offsets(delta, layer.k, 0 if hull_only else layer.n)
    if hull_only:
        dx = np.zeros((len(dh), layer.n))
        _, first = np.unique(dh, axis=0, return_index=True)
        keep = np.sort(first)
        dh, dx = dh[keep], dx[keep]
    thetas = wrap(theta + dh) if layer.k else np.zeros((len(dh), 0))
    xs = x + dx
    fibers = pullback_fibers(
        layer, thetas, xs, seeds, T_pull, tol, cfg, check_convergence, escape_radius, allow_empty=True
    )
    got = [f for f in fibers if f is not None]
    if not got:
        raise EmptyFiber(f"every neighborhood sample escaped (delta={delta})")
    pts = dedup(np.vstack([f.points for f in got]), tol / 2)
    gap = max(f.hausdorff_gap for f in got) if check_convergence else math.nan
    return Fiber(
        pts,
        T_pull,
        seeds.spacing,
        bool(gap < tol) if check_convergence else False,
        gap,
        sum(f.n_escaped for f in got),
        theta.copy(),
        x.copy(),
        float(delta),
        len(got),
        np.vstack([f.raw for f in got]),
    )


def lipschitz_estimate(layer: LayerField, x_grid, y_box: SeedBox, tau_grid, theta=None) -> float:
    """Largest finite-difference slope ``|g(y1) - g(y2)| / |y1 - y2|`` over a grid."""
    theta = np.zeros(layer.k) if theta is None else np.asarray(theta, dtype=float)
    ys = y_box.points()
    best = 0.0
    for x in np.atleast_2d(np.asarray(x_grid, dtype=float)).reshape(-1, layer.n):
        for tau in np.atleast_1d(tau_grid):
            N = len(ys)
            vals = layer.g(np.repeat(x[None], N, 0), ys, np.full(N, tau), np.repeat(theta[None], N, 0))
            dv = np.sqrt(((vals[:, None, :] - vals[None, :, :]) ** 2).sum(axis=2))
            dy = np.sqrt(((ys[:, None, :] - ys[None, :, :]) ** 2).sum(axis=2))
            mask = dy > 0
            if mask.any():
                best = max(best, float((dv[mask] / dy[mask]).max()))
    return best


# ---------------------------------------------------------------------------
# hyperbolic solutions of scalar layers


@dataclass(frozen=True, eq=False)
class HyperbolicPair:
    attractor: Trajectory
    repeller: Trajectory
    beta_attractor: float
    beta_repeller: float
    separated: bool
    min_gap: float


def dichotomy_exponent(base: Trajectory, jac_y: Callable, window=None, cfg: IntegratorConfig = IntegratorConfig()) -> float:
    """Finite-time growth rate of the linearization along ``base``.

    For scalar equations this is the window average of ``jac_y`` along the
    solution (trapezoid rule on the stored nodes); otherwise the growth rate
    of a unit vector under the variational equation.
    """
    t_a, t_b = (base.t0, base.t1) if window is None else window
    if not t_b > t_a:
        raise ValueError("window must have positive length")
    seg = base.restrict(t_a, t_b)
    if seg.dim == 1:
        J = np.array([float(np.asarray(jac_y(s, t)).reshape(-1)[0]) for s, t in zip(seg.states, seg.times)])
        return float(np.trapezoid(J, seg.times) / (t_b - t_a))
    vf = VectorField(lambda y, t: np.zeros_like(y), seg.dim)
    z = variational_integrate(vf, seg, jac_y, np.ones(seg.dim) / math.sqrt(seg.dim), cfg)
    return float(math.log(np.linalg.norm(z.states[-1])) / (t_b - t_a))


def attractor_trajectory(
    layer: LayerField,
    theta,
    x,
    t_a: float,
    t_b: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    spinup: float = 50.0,
    seed_offset: float = 10.0,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> Trajectory:
    """Upper hyperbolic solution of a scalar layer on ``[t_a, t_b]``:
    pulled back from a high seed ``gamma(x) + seed_offset`` over ``spinup``."""
    if layer.m != 1:
        raise ValueError("attractor_trajectory needs a scalar fast variable")
    vf = layer.vector_field(theta, x)
    c = float(layer.center(x)[0])
    tr = integrate(vf, [c + seed_offset], t_a - spinup, t_b, cfg, escape_radius)
    if tr.blew_up:
        raise NoBoundedSolution(f"pullback from high seed escaped at tau={tr.escape_time}")
    return tr.restrict(t_a, t_b)


def repeller_trajectory(
    layer: LayerField,
    theta,
    x,
    t_a: float,
    t_b: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    spinup: float = 50.0,
    seed_offset: float = 10.0,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> Trajectory:
    """Lower hyperbolic solution, computed as the attractor of the reversed flow."""
    vf = layer.vector_field(theta, x)
    c = float(layer.center(x)[0])
    rev = VectorField(lambda z, s: -vf(z, -s), 1, scalar=vf.scalar)
    tr = integrate(rev, [c - seed_offset], -(t_b + spinup), -t_a, cfg, escape_radius)
    if tr.blew_up:
        raise NoBoundedSolution(f"backward pullback from low seed escaped at tau={-tr.escape_time}")
    return tr.reversed_time().restrict(t_a, t_b)


def riccati_pair(
    layer: LayerField,
    theta,
    x,
    window,
    cfg: IntegratorConfig = IntegratorConfig(),
    spinup: float = 50.0,
    seed_offset: float = 10.0,
    gap_threshold: float = 1e-3,
    beta_threshold: float = 1e-2,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> HyperbolicPair:
    """Attractor-repeller pair of a scalar layer on ``window``."""
    if layer.m != 1:
        raise ValueError("riccati_pair needs a scalar fast variable")
    t_a, t_b = map(float, window)
    errs = []
    try:
        att = attractor_trajectory(layer, theta, x, t_a, t_b, cfg, spinup, seed_offset, escape_radius)
    except NoBoundedSolution as e:
        att, errs = None, errs + [str(e)]
    try:
        rep = repeller_trajectory(layer, theta, x, t_a, t_b, cfg, spinup, seed_offset, escape_radius)
    except NoBoundedSolution as e:
        rep, errs = None, errs + [str(e)]
    if att is None or rep is None:
        raise NoBoundedSolution("; ".join(errs))
    rep = rep.resample(att.times)
    jac = layer.jacobian_y(theta, x)
    beta_a = dichotomy_exponent(att, jac, (t_a, t_b), cfg)
    beta_r = dichotomy_exponent(rep, jac, (t_a, t_b), cfg)
    if not (beta_a < -beta_threshold and beta_r > beta_threshold):
        raise NotHyperbolic(f"dichotomy exponents {beta_a:.4g}, {beta_r:.4g} within threshold {beta_threshold}")
    gap = float(np.min(att.states[:, 0] - rep.states[:, 0]))
    return HyperbolicPair(att, rep, beta_a, beta_r, gap > gap_threshold, gap)


# ---------------------------------------------------------------------------
# uniform ultimate boundedness


@dataclass(frozen=True, eq=False)
class UUBCertificate:
    c: float
    T: float
    d: Optional[float]
    x_set: np.ndarray
    horizon: float
    tau0_set: np.ndarray
    passed: bool
    max_after_T: float
    n_escaped: int


def uub_check(
    layer: LayerField,
    x_grid,
    tau0_grid,
    horizon: float,
    c_candidate: float,
    T_candidate: float,
    theta=None,
    d: Optional[float] = None,
    seeds: Optional[Callable] = None,
    n_seeds: int = 21,
    cfg: IntegratorConfig = IntegratorConfig(),
    sample_every: int = 10,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> UUBCertificate:
    """Empirical check of uniform ultimate boundedness.

    Seeds are ``seeds(x, tau0) -> (P, m)`` or, by default, a grid on the
    ball of radius ``d``. Passes iff no solution escapes and every sampled
    ``|y(tau0 + s)|`` with ``T <= s <= horizon`` is at most ``c``.
    """
    theta = np.zeros(layer.k) if theta is None else wrap(np.atleast_1d(np.asarray(theta, dtype=float)))
    xs = np.atleast_2d(np.asarray(x_grid, dtype=float)).reshape(-1, layer.n)
    tau0s = np.atleast_1d(np.asarray(tau0_grid, dtype=float))
    if len(xs) == 0 or len(tau0s) == 0:
        raise ValueError("x_grid and tau0_grid must be nonempty")
    if seeds is None:
        if d is None:
            raise ValueError("give a seed radius d or a seed function")
        axis = np.linspace(-d, d, n_seeds)
        ball = np.array(np.meshgrid(*([axis] * layer.m), indexing="ij")).reshape(layer.m, -1).T
        ball = ball[np.sqrt((ball**2).sum(axis=1)) <= d + 1e-12]
        seeds = lambda x, tau0: ball  # noqa: E731
    Y0, X, T0 = [], [], []
    for x in xs:
        for tau0 in tau0s:
            s = np.atleast_2d(np.asarray(seeds(x, tau0), dtype=float)).reshape(-1, layer.m)
            Y0.append(s)
            X.append(np.repeat(x[None], len(s), 0))
            T0.append(np.full(len(s), tau0))
    Y0, X, T0 = np.vstack(Y0), np.vstack(X), np.concatenate(T0)
    TH = np.repeat(theta[None], len(Y0), 0)
    res = integrate_ensemble(
        layer.ensemble_fn(), Y0, T0, T0 + horizon, cfg.step, escape_radius, args=(TH, X), save_every=sample_every
    )
    elapsed = res.saved_times - T0[None, :]
    norms = np.sqrt((res.saved_states**2).sum(axis=2))
    late = elapsed >= T_candidate - 1e-12
    max_after = float(norms[late].max()) if late.any() else 0.0
    n_esc = int(res.escaped.sum())
    passed = n_esc == 0 and max_after <= c_candidate
    return UUBCertificate(
        c_candidate, T_candidate, d, xs, horizon, tau0s, bool(passed), max_after, n_esc
    )
