"""Quasi-periodic forcing and its hull, modelled as a torus with a linear flow."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "ForcingTerm",
    "QuasiPeriodicForcing",
    "HullMetricConfig",
    "NeighborhoodSampler",
    "canonical_forcing",
    "constant_forcing",
    "wrap",
    "shift",
    "forcing_at",
    "hull_distance",
]


@dataclass(frozen=True)
class ForcingTerm:
    amplitude: float
    frequency: float
    phase: float = 0.0
    kind: str = "sin"

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"term kind must be 'sin' or 'cos', got {self.kind!r}")


@dataclass(frozen=True)
class QuasiPeriodicForcing:
    """``p(tau) = offset + sum_j A_j trig_j(omega_j tau + phi_j)``.

    Terms sharing a frequency share a torus coordinate, so the torus
    dimension ``k`` is the number of distinct frequencies. Rational
    independence of those frequencies is the caller's responsibility.
    """

    terms: tuple = ()
    offset: float = 0.0
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)
    _coord: np.ndarray = field(init=False, repr=False, compare=False)
    _amp: np.ndarray = field(init=False, repr=False, compare=False)
    _phase: np.ndarray = field(init=False, repr=False, compare=False)
    _is_cos: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        freqs: list[float] = []
        coord = []
        for t in terms:
            if t.frequency not in freqs:
                freqs.append(t.frequency)
            coord.append(freqs.index(t.frequency))
        object.__setattr__(self, "frequencies", np.asarray(freqs, dtype=float))
        object.__setattr__(self, "_coord", np.asarray(coord, dtype=int))
        object.__setattr__(self, "_amp", np.asarray([t.amplitude for t in terms], dtype=float))
        # cos(u) = sin(u + pi/2)
        object.__setattr__(
            self,
            "_phase",
            np.asarray([t.phase + (math.pi / 2 if t.kind == "cos" else 0.0) for t in terms], dtype=float),
        )
        object.__setattr__(self, "_is_cos", np.asarray([t.kind == "cos" for t in terms]))

    @property
    def dim(self) -> int:
        return len(self.frequencies)

    def __call__(self, theta, tau):
        """Forcing of hull element ``theta`` at time ``tau``.

        ``theta`` has shape (..., k) and ``tau`` broadcasts against the
        leading shape.
        """
        theta = np.asarray(theta, dtype=float)
        tau = np.asarray(tau, dtype=float)
        lead = np.broadcast_shapes(theta.shape[:-1], tau.shape)
        if not self.terms:
            return np.full(lead, self.offset) if lead else self.offset
        # per-term argument: theta_c + omega_c tau + phi
        arg = theta[..., self._coord] + self.frequencies[self._coord] * tau[..., None] + self._phase
        return self.offset + np.sin(arg) @ self._amp

    def amplitude_bound(self) -> float:
        return float(np.sum(np.abs(self._amp)))

    def scalar(self, theta) -> "callable":
        """Pure-float evaluator ``tau -> p_theta(tau)`` for scalar hot loops."""
        theta = np.asarray(theta, dtype=float)
        items = [
            (float(a), float(self.frequencies[c]), float(theta[c] + ph))
            for a, c, ph in zip(self._amp, self._coord, self._phase)
        ]
        off = float(self.offset)
        sin = math.sin

        if len(items) == 2:
            (a1, w1, b1), (a2, w2, b2) = items
            return lambda tau: off + a1 * sin(w1 * tau + b1) + a2 * sin(w2 * tau + b2)
        return lambda tau: off + sum(a * sin(w * tau + b) for a, w, b in items)

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "terms": [
                {"amplitude": t.amplitude, "frequency": t.frequency, "phase": t.phase, "kind": t.kind}
                for t in self.terms
            ],
        }


def canonical_forcing() -> QuasiPeriodicForcing:
    """``-sin(tau/2) - sin(sqrt(5) tau) + 0.962``."""
    return QuasiPeriodicForcing(
        (ForcingTerm(-1.0, 0.5), ForcingTerm(-1.0, math.sqrt(5.0))),
        0.962,
    )


def constant_forcing(value: float) -> QuasiPeriodicForcing:
    return QuasiPeriodicForcing((), float(value))


def wrap(theta):
    """Reduce phases into ``[0, 2 pi)``."""
    out = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # np.mod can return exactly 2 pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


def shift(theta, s, omega):
    """Translation flow on the torus: ``theta + omega s (mod 2 pi)``."""
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    return wrap(theta + np.asarray(omega, dtype=float) * s[..., None])


def forcing_at(fp: QuasiPeriodicForcing, theta, tau):
    return fp(theta, tau)


def _angular_gap(a, b):
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), TWO_PI))
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class HullMetricConfig:
    """Metric on the hull.

    ``torus-angle``: max angular distance over coordinates divided by pi.
    ``compact-open``: ``sum_j w_j min(1, sup_{|tau|<=R_j} |p_1 - p_2|)``
    with the sup taken on a sampled grid.
    """

    mode: str = "torus-angle"
    radii: tuple = (10.0, 100.0, 1000.0)
    weights: tuple = (0.5, 0.25, 0.25)
    samples_per_unit: int = 8

    def __post_init__(self):
        if self.mode not in ("torus-angle", "compact-open"):
            raise ValueError(f"unknown metric mode {self.mode!r}")
        if len(self.radii) != len(self.weights):
            raise ValueError("radii and weights must have equal length")
        if any(w <= 0 for w in self.weights) or any(r <= 0 for r in self.radii):
            raise ValueError("metric weights and radii must be positive")


def hull_distance(theta1, theta2, cfg: HullMetricConfig = HullMetricConfig(), forcing=None) -> float:
    theta1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    theta2 = np.atleast_1d(np.asarray(theta2, dtype=float))
    if theta1.size == 0:
        return 0.0
    if cfg.mode == "torus-angle":
        return float(np.max(_angular_gap(theta1, theta2)) / math.pi)
    if forcing is None:
        raise ValueError("compact-open mode needs the forcing to compare induced functions")
    total = 0.0
    for R, w in zip(cfg.radii, cfg.weights):
        tau = np.linspace(-R, R, int(2 * R * cfg.samples_per_unit) + 1)
        sup = float(np.max(np.abs(forcing(theta1, tau) - forcing(theta2, tau))))
        total += w * min(1.0, sup)
    return total


@dataclass(frozen=True)
class NeighborhoodSampler:
    """Samples of the product ball ``{(theta', x') : d(theta', theta) <= r, |x' - x| <= r}``.

    Hull offsets use the torus-angle metric: ``n_boundary`` directions on the
    sup-norm unit sphere of R^k (the 3^k - 1 grid directions when that count
    matches, seeded random directions otherwise), scaled by ``pi r``. The
    slow-variable offsets are ``{-r, 0, +r}`` per coordinate.

    Radii are the multiples of ``quantum`` up to ``delta`` plus ``delta``
    itself, so the sample set for a smaller ``delta`` that is a multiple of
    ``quantum`` is contained in that of a larger one. Above
    ``max_levels * quantum`` the radii are ``max_levels + 1`` evenly spaced
    values instead (nesting is no longer exact there).
    """

    n_boundary: int = 8
    quantum: float = 0.025
    max_levels: int = 8
    seed: int = 42

    def radii(self, delta: float) -> np.ndarray:
        if delta <= 0:
            return np.zeros(1)
        if delta > self.max_levels * self.quantum * (1 + 1e-12):
            return np.linspace(0.0, delta, self.max_levels + 1)
        m = int(math.floor(delta / self.quantum + 1e-9))
        r = self.quantum * np.arange(m + 1)
        if delta - r[-1] > 1e-12:
            r = np.append(r, delta)
        return r

    def hull_directions(self, k: int) -> np.ndarray:
        if k == 0:
            return np.zeros((1, 0))
        grid = np.array(np.meshgrid(*([[-1.0, 0.0, 1.0]] * k), indexing="ij")).reshape(k, -1).T
        grid = grid[np.any(grid != 0, axis=1)]
        if len(grid) == self.n_boundary:
            dirs = grid
        else:
            rng = np.random.default_rng(self.seed)
            u = rng.uniform(-1, 1, size=(self.n_boundary, k))
            dirs = u / np.max(np.abs(u), axis=1, keepdims=True)
        return np.vstack([np.zeros((1, k)), dirs])

    def offsets(self, delta: float, k: int, n: int):
        """Return (hull angle offsets (S, k), slow offsets (S, n)), center first."""
        hdirs = self.hull_directions(k)
        xdirs = np.array(np.meshgrid(*([[-1.0, 0.0, 1.0]] * n), indexing="ij")).reshape(n, -1).T if n else np.zeros((1, 0))
        # center first
        order = np.argsort(np.any(xdirs != 0, axis=1), kind="stable")
        xdirs = xdirs[order]
        dh, dx = [np.zeros((1, k))], [np.zeros((1, n))]
        for r in self.radii(delta):
            if r == 0:
                continue
            H = np.repeat(hdirs, len(xdirs), axis=0) * (math.pi * r)
            X = np.tile(xdirs, (len(hdirs), 1)) * r
            keep = np.any(H != 0, axis=1) | np.any(X != 0, axis=1)
            dh.append(H[keep])
            dx.append(X[keep])
        return np.vstack(dh), np.vstack(dx)
