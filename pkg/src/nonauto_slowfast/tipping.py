"""Rate-induced tipping for transitions ``y' = -(y - Gamma(eps tau))^2 + p(tau)``.

Gamma has finite limits at -+inf, so the transition connects a past and a
future Riccati equation. A run starts on the past attractor at a large
negative time and is classified at the end of the horizon.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hull import QuasiPeriodicForcing, canonical_forcing
from .layer import NoBoundedSolution, NotHyperbolic, attractor_trajectory, riccati_layer, riccati_pair
from .maps import ArctanGamma, ConstantGamma
from .ode import DEFAULT_ESCAPE_RADIUS, IntegratorConfig, Trajectory, VectorField, integrate

__all__ = [
    "TransitionScenario",
    "TippingVerdict",
    "CriticalRateResult",
    "PastPairUnavailable",
    "UndecidedBoundary",
    "classify",
    "critical_rate",
    "surface_grid",
    "transition_curve",
]

log = logging.getLogger(__name__)


class PastPairUnavailable(RuntimeError):
    pass


class UndecidedBoundary(RuntimeError):
    def __init__(self, msg, epsilons=()):
        super().__init__(msg)
        self.epsilons = tuple(epsilons)


@dataclass(frozen=True, eq=False)
class TransitionScenario:
    gamma: object = field(default_factory=ArctanGamma)
    forcing: QuasiPeriodicForcing = field(default_factory=canonical_forcing)
    theta0: Optional[tuple] = None
    band: float = 0.2
    final_fraction: float = 0.2
    gamma_tol: float = 1e-3
    spinup: float = 50.0
    pair_window: float = 100.0

    def __post_init__(self):
        lim = self.gamma.limits()
        if lim is None or not all(math.isfinite(v) for v in lim):
            raise ValueError("transition Gamma needs finite limits at -inf and +inf")
        if not (0 < self.final_fraction < 1):
            raise ValueError("final_fraction must lie in (0, 1)")
        if not self.band > 0 or not self.gamma_tol > 0:
            raise ValueError("band and gamma_tol must be > 0")

    @property
    def theta(self) -> np.ndarray:
        k = self.forcing.dim
        return np.zeros(k) if self.theta0 is None else np.asarray(self.theta0, dtype=float).reshape(k)

    @property
    def limits(self):
        return self.gamma.limits()

    def saturation(self) -> tuple:
        """(X_past, X_future): |Gamma(-X_past) - Gamma(-inf)| and
        |Gamma(X_future) - Gamma(+inf)| drop below ``gamma_tol``."""
        lo, hi = self.limits

        def find(sign, target):
            X = 1.0
            while abs(self.gamma.scalar(sign * X) - target) >= self.gamma_tol:
                X *= 2.0
                if X > 1e12:
                    raise ValueError("Gamma does not reach its limit within gamma_tol")
            a, b = X / 2, X
            for _ in range(80):
                mid = 0.5 * (a + b)
                if abs(self.gamma.scalar(sign * mid) - target) < self.gamma_tol:
                    b = mid
                else:
                    a = mid
            return b

        return find(-1.0, lo), find(1.0, hi)

    def window(self, eps: float):
        Xp, Xf = self.saturation()
        return -Xp / eps, Xf / eps

    def frozen_layer(self, gamma_value: float):
        return riccati_layer(self.forcing, ConstantGamma(float(gamma_value)))

    def transition_field(self, eps: float) -> VectorField:
        p = self.forcing.scalar(self.theta)
        gam = self.gamma.scalar
        return VectorField(lambda y, tau: p(tau) - (y - gam(eps * tau)) ** 2, 1, scalar=True)


@dataclass(frozen=True, eq=False)
class TippingVerdict:
    epsilon: float
    outcome: str  # tracks | tips | undecided
    evidence: float  # final-window max distance, or escape time for tips
    trajectory: Optional[Trajectory] = None
    final_window: tuple = ()
    final_dists: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CriticalRateResult:
    found: bool
    epsilon_c: Optional[float]
    bracket: tuple
    verdicts: tuple  # ((eps, outcome), ...) in evaluation order
    scanned: tuple = ()


def classify(
    ts: TransitionScenario,
    eps: float,
    y_init: Optional[float] = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    keep_trajectory: bool = False,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> TippingVerdict:
    """Run the transition from the past attractor and classify the outcome.

    tracks: within ``band`` of the future attractor on the final window;
    tips: the solution escaped (it crossed the future repeller);
    undecided: bounded but outside the band.
    """
    if not eps > 0:
        raise ValueError("epsilon must be > 0")
    t_a, t_b = ts.window(eps)
    g_past, g_fut = ts.limits
    th = ts.theta
    if y_init is None:
        try:
            pair = riccati_pair(ts.frozen_layer(g_past), th, [0.0], (t_a, t_a + ts.pair_window), cfg, ts.spinup)
        except (NoBoundedSolution, NotHyperbolic) as e:
            raise PastPairUnavailable(f"past equation has no attractor-repeller pair: {e}") from e
        # start on the attractor of the frozen equation at the actual starting value of Gamma
        y_init = float(pair.attractor.states[0, 0]) + (ts.gamma.scalar(eps * t_a) - g_past)
    tr = integrate(ts.transition_field(eps), [y_init], t_a, t_b, cfg, escape_radius)
    w_a = t_b - ts.final_fraction * (t_b - t_a)
    if tr.blew_up:
        return TippingVerdict(eps, "tips", float(tr.escape_time), tr if keep_trajectory else None, (w_a, t_b))
    fut = attractor_trajectory(ts.frozen_layer(g_fut), th, [0.0], w_a, t_b, cfg, ts.spinup)
    seg = tr.restrict(w_a, t_b)
    d = np.abs(seg.states[:, 0] - fut(seg.times)[:, 0])
    outcome = "tracks" if d.max() <= ts.band else "undecided"
    return TippingVerdict(eps, outcome, float(d.max()), tr if keep_trajectory else None, (w_a, t_b), d)


def critical_rate(
    ts: TransitionScenario,
    eps_lo: float,
    eps_hi: float,
    tol: float = 1e-3,
    scan: Optional[Sequence[float]] = None,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> CriticalRateResult:
    """Bisect the tracks/tips boundary between ``eps_lo`` and ``eps_hi``.

    Monotonicity in eps is not assumed: the first boundary found is reported
    and every verdict is logged. When ``eps_hi`` does not tip, the optional
    ``scan`` points are tried in increasing order for a tipping rate.
    """
    if eps_hi < eps_lo:
        raise ValueError("need eps_lo <= eps_hi")
    seen = []

    def verdict(e):
        v = classify(ts, e, cfg=cfg).outcome
        seen.append((float(e), v))
        log.info("eps=%.6g -> %s", e, v)
        return v

    v_lo = verdict(eps_lo)
    if v_lo != "tracks":
        raise ValueError(f"classify(eps_lo={eps_lo}) is {v_lo!r}, expected 'tracks'")
    if eps_hi == eps_lo:
        return CriticalRateResult(False, None, (eps_lo, eps_hi), tuple(seen), (eps_lo,))
    lo, hi = eps_lo, None
    v_hi = verdict(eps_hi)
    if v_hi == "tips":
        hi = eps_hi
    else:
        for e in sorted(float(s) for s in (scan or ()) if eps_lo < s < eps_hi):
            v = verdict(e)
            if v == "tips":
                hi = e
                break
            if v == "tracks":
                lo = e
        if hi is None:
            return CriticalRateResult(False, None, (eps_lo, eps_hi), tuple(seen), tuple(e for e, _ in seen))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = verdict(mid)
        if v == "tracks":
            lo = mid
        elif v == "tips":
            hi = mid
        else:
            raise UndecidedBoundary(f"undecided verdict at eps={mid:.6g} inside bracket [{lo:.6g}, {hi:.6g}]", (lo, mid, hi))
    return CriticalRateResult(True, 0.5 * (lo + hi), (lo, hi), tuple(seen), tuple(e for e, _ in seen))


def surface_grid(ts: TransitionScenario, taus, gammas, cfg: IntegratorConfig = IntegratorConfig()):
    """Rows ``(gamma, tau, a(theta0 . tau) + gamma)`` of the frozen attractor family."""
    taus = np.asarray(taus, dtype=float)
    a = attractor_trajectory(ts.frozen_layer(0.0), ts.theta, [0.0], float(taus[0]), float(taus[-1]), cfg, ts.spinup)
    av = a(taus)[:, 0]
    return np.array([(g, t, v + g) for g in np.asarray(gammas, dtype=float) for t, v in zip(taus, av)])


def transition_curve(ts: TransitionScenario, verdict: TippingVerdict, n: int = 2000, cfg: IntegratorConfig = IntegratorConfig()):
    """Rows ``(tau, Gamma(eps tau), y(tau), a(theta0 . tau) + Gamma(eps tau))``.

    The last column is the projection of the solution onto the frozen
    attractor surface.
    """
    tr = verdict.trajectory
    if tr is None:
        raise ValueError("classify with keep_trajectory=True to export the transition curve")
    taus = np.linspace(tr.t0, tr.t1, n)
    eps = verdict.epsilon
    a = attractor_trajectory(ts.frozen_layer(0.0), ts.theta, [0.0], tr.t0, tr.t1, cfg, ts.spinup)
    gam = np.array([ts.gamma.scalar(eps * t) for t in taus])
    return np.column_stack((taus, gam, tr(taus)[:, 0], a(taus)[:, 0] + gam))
