"""Explicit Runge-Kutta kernels for time-dependent vector fields.

Three entry points:

* ``integrate`` -- one trajectory, fixed-step RK4 or adaptive Dormand-Prince,
  with cubic Hermite dense output and escape-radius detection.
* ``integrate_ensemble`` -- many independent members advanced together with
  fixed-step RK4 (per-member start/end times, per-member escape).
* ``variational_integrate`` -- the linearized equation along a stored
  trajectory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "IntegratorConfig",
    "VectorField",
    "Trajectory",
    "EnsembleResult",
    "IntegrationError",
    "NonFiniteField",
    "StepLimitExceeded",
    "OutOfRange",
    "integrate",
    "integrate_ensemble",
    "evaluate",
    "variational_integrate",
    "DEFAULT_ESCAPE_RADIUS",
]

DEFAULT_ESCAPE_RADIUS = 1e6


class IntegrationError(RuntimeError):
    pass


class NonFiniteField(IntegrationError):
    """The vector field returned NaN/Inf at a finite state."""


class StepLimitExceeded(IntegrationError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    step: float = 1e-2
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}; expected 'rk4' or 'rk45'")
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def with_step(self, step: float) -> "IntegratorConfig":
        return replace(self, step=step)


@dataclass(frozen=True)
class VectorField:
    """Evaluator ``fn(y, tau) -> dy/dtau`` on R^dim."""

    fn: Callable[[np.ndarray, float], np.ndarray]
    dim: int
    scalar: bool = False  # fn also accepts and returns plain floats (dim == 1)

    def __call__(self, y, tau):
        return self.fn(y, tau)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    blew_up: bool = False
    escape_time: Optional[float] = None
    method: str = "rk4"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.ndim != 1 or len(self.times) != len(self.states):
            raise ValueError("times and states must have the same length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def __len__(self):
        return len(self.times)

    def __call__(self, tau):
        return evaluate(self, tau)

    def derivative(self, tau):
        return _hermite(self, tau, derivative=True)

    def reversed_time(self) -> "Trajectory":
        """Map ``z(s)`` to ``y(tau) = z(-tau)``."""
        esc = None if self.escape_time is None else -self.escape_time
        return Trajectory(
            -self.times[::-1].copy(),
            self.states[::-1].copy(),
            -self.derivs[::-1].copy(),
            self.blew_up,
            esc,
            self.method,
            dict(self.meta),
        )

    def resample(self, times) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        return Trajectory(
            times.copy(),
            evaluate(self, times),
            _hermite(self, times, derivative=True),
            self.blew_up,
            self.escape_time,
            self.method,
            dict(self.meta),
        )

    def restrict(self, t_a: float, t_b: float) -> "Trajectory":
        """Nodes inside ``[t_a, t_b]`` plus interpolated endpoints."""
        inside = (self.times > t_a) & (self.times < t_b)
        times = np.concatenate(([t_a], self.times[inside], [t_b]))
        return self.resample(times)


def _sqnorm(y):
    return float(np.dot(y, y))


def integrate(
    field: VectorField,
    y0,
    tau0: float,
    tau1: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> Trajectory:
    y0 = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    if not tau1 >= tau0:
        raise ValueError(f"need tau1 >= tau0, got [{tau0}, {tau1}]")
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    if cfg.method == "rk4":
        return _integrate_rk4(field, y0, float(tau0), float(tau1), cfg, escape_radius)
    return _integrate_rk45(field, y0, float(tau0), float(tau1), cfg, escape_radius)


def _rk4_grid(tau0, tau1, h):
    span = tau1 - tau0
    n = max(int(math.ceil(span / h - 1e-9)), 0)
    times = tau0 + h * np.arange(n + 1, dtype=float)
    if n:
        times[-1] = tau1
    return times


def _eval_checked(field, y, tau):
    k = np.asarray(field(y, tau), dtype=float)
    if not np.all(np.isfinite(k)):
        raise NonFiniteField(f"vector field returned non-finite value at tau={tau}")
    return k


def _integrate_rk4(field, y0, tau0, tau1, cfg, escape_radius):
    times = _rk4_grid(tau0, tau1, cfg.step)
    n = len(times) - 1
    if n > cfg.max_steps:
        raise StepLimitExceeded(f"{n} steps needed, max_steps={cfg.max_steps}")
    d = y0.size
    if field.scalar and d == 1:
        return _integrate_rk4_scalar(field.fn, float(y0[0]), times, cfg, escape_radius)
    states = np.empty((n + 1, d))
    derivs = np.empty((n + 1, d))
    r2 = escape_radius * escape_radius
    y = y0
    states[0] = y
    k1 = _eval_checked(field, y, tau0)
    derivs[0] = k1
    last = n
    escape_time = None
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            t = times[i]
            h = times[i + 1] - t
            hh = 0.5 * h
            k2 = field(y + hh * k1, t + hh)
            k3 = field(y + hh * k2, t + hh)
            k4 = field(y + h * k3, t + h)
            y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            s = _sqnorm(y_new)
            if not (s <= r2):
                last = i
                escape_time = float(times[i + 1])
                break
            y = y_new
            states[i + 1] = y
            k1 = _eval_checked(field, y, times[i + 1])
            derivs[i + 1] = k1
    blew = escape_time is not None
    return Trajectory(
        times[: last + 1].copy(),
        states[: last + 1],
        derivs[: last + 1],
        blew,
        escape_time,
        "rk4",
        {"step": cfg.step, "escape_radius": escape_radius},
    )


def _integrate_rk4_scalar(fn, y, times, cfg, escape_radius):
    """Same scheme as the array loop, on plain floats."""
    n = len(times) - 1
    tl = times.tolist()
    ys = [y]
    k1 = float(fn(y, tl[0]))
    ks = [k1]
    escape_time = None
    isfinite = math.isfinite
    if not isfinite(k1):
        raise NonFiniteField(f"vector field returned non-finite value at tau={tl[0]}")
    for i in range(n):
        t = tl[i]
        t1 = tl[i + 1]
        h = t1 - t
        hh = 0.5 * h
        try:
            k2 = fn(y + hh * k1, t + hh)
            k3 = fn(y + hh * k2, t + hh)
            k4 = fn(y + h * k3, t + h)
            y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except OverflowError:
            y_new = math.inf
        if not (y_new * y_new <= escape_radius * escape_radius):
            escape_time = float(t1)
            break
        y = y_new
        ys.append(y)
        k1 = fn(y, t1)
        if not isfinite(k1):
            raise NonFiniteField(f"vector field returned non-finite value at tau={t1}")
        ks.append(k1)
    m = len(ys)
    return Trajectory(
        times[:m].copy(),
        np.asarray(ys)[:, None],
        np.asarray(ks, dtype=float)[:, None],
        escape_time is not None,
        escape_time,
        "rk4",
        {"step": cfg.step, "escape_radius": escape_radius},
    )


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = _DP_B - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _integrate_rk45(field, y0, tau0, tau1, cfg, escape_radius):
    d = y0.size
    r2 = escape_radius * escape_radius
    times = [tau0]
    states = [y0.copy()]
    k1 = _eval_checked(field, y0, tau0)
    derivs = [k1]
    y, t = y0, tau0
    h = min(cfg.step, tau1 - tau0) if tau1 > tau0 else 0.0
    steps = 0
    escape_time = None
    K = np.empty((7, d))
    with np.errstate(over="ignore", invalid="ignore"):
        while t < tau1:
            if steps >= cfg.max_steps:
                raise StepLimitExceeded(f"max_steps={cfg.max_steps} hit at tau={t} before {tau1}")
            steps += 1
            h = min(h, tau1 - t)
            K[0] = k1
            for s in range(1, 7):
                ys = y + h * (np.asarray(_DP_A[s]) @ K[:s])
                K[s] = field(ys, t + _DP_C[s] * h)
            y_new = y + h * (_DP_B @ K)
            err_vec = h * (_DP_E @ K)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
            if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
                if h < 1e-12 * max(1.0, abs(t)):
                    escape_time = t
                    break
                h *= 0.2
                continue
            if err <= 1.0:
                t_new = tau1 if tau1 - (t + h) < 1e-12 * max(1.0, abs(tau1)) else t + h
                if not (_sqnorm(y_new) <= r2):
                    escape_time = t_new
                    break
                t, y = t_new, y_new
                k1 = _eval_checked(field, y, t)
                times.append(t)
                states.append(y.copy())
                derivs.append(k1)
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            else:
                fac = max(0.2, 0.9 * err ** -0.2)
            h *= fac
    return Trajectory(
        np.asarray(times),
        np.asarray(states),
        np.asarray(derivs),
        escape_time is not None,
        escape_time,
        "rk45",
        {"abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol, "escape_radius": escape_radius},
    )


def _hermite(traj: Trajectory, tau, derivative=False):
    t = traj.times
    tau_arr = np.asarray(tau, dtype=float)
    scalar = tau_arr.ndim == 0
    tau_arr = np.atleast_1d(tau_arr)
    slack = 1e-12 * max(1.0, abs(t[0]), abs(t[-1]))
    if np.any(tau_arr < t[0] - slack) or np.any(tau_arr > t[-1] + slack):
        raise OutOfRange(f"tau outside trajectory range [{t[0]}, {t[-1]}]")
    tau_arr = np.clip(tau_arr, t[0], t[-1])
    if len(t) == 1:
        out = np.repeat(traj.derivs if derivative else traj.states, len(tau_arr), axis=0)
        return out[0] if scalar else out
    i = np.clip(np.searchsorted(t, tau_arr, side="right") - 1, 0, len(t) - 2)
    h = (t[i + 1] - t[i])[:, None]
    s = ((tau_arr - t[i]) / h[:, 0])[:, None]
    y0, y1 = traj.states[i], traj.states[i + 1]
    m0, m1 = traj.derivs[i], traj.derivs[i + 1]
    if derivative:
        d00 = (6 * s * s - 6 * s) / h
        d10 = 3 * s * s - 4 * s + 1
        d01 = (-6 * s * s + 6 * s) / h
        d11 = 3 * s * s - 2 * s
        out = d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1
    else:
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        out = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
        # node exactness
        at_node = s[:, 0] == 0.0
        out[at_node] = y0[at_node]
        at_next = s[:, 0] == 1.0
        out[at_next] = y1[at_next]
    return out[0] if scalar else out


def evaluate(traj: Trajectory, tau):
    """State at ``tau`` by cubic Hermite interpolation (exact at stored nodes)."""
    return _hermite(traj, tau)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    times: np.ndarray
    states: np.ndarray
    escaped: np.ndarray
    escape_times: np.ndarray
    saved_times: Optional[np.ndarray] = None
    saved_states: Optional[np.ndarray] = None


def integrate_ensemble(
    fn: Callable[..., np.ndarray],
    y0,
    tau0,
    tau1,
    step: float = 1e-2,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    args: tuple = (),
    save_every: Optional[int] = None,
    max_steps: int = 50_000_000,
) -> EnsembleResult:
    """Fixed-step RK4 on N independent members.

    ``fn(y, tau, *args)`` takes ``y`` of shape (N, d), ``tau`` of shape (N,)
    and per-member parameter arrays ``args`` (leading dimension N). Member i
    follows the grid ``tau0[i] + j*step`` with a shortened final step landing
    on ``tau1[i]``, the same grid ``integrate`` uses. Escaped members are
    frozen at their last in-radius state.
    """
    y_all = np.array(y0, dtype=float)
    if y_all.ndim == 1:
        y_all = y_all[:, None]
    N = y_all.shape[0]
    tau0 = np.broadcast_to(np.asarray(tau0, dtype=float), (N,)).copy()
    tau1 = np.broadcast_to(np.asarray(tau1, dtype=float), (N,)).copy()
    if np.any(tau1 < tau0):
        raise ValueError("need tau1 >= tau0 for every member")
    args = tuple(np.asarray(a) for a in args)
    n_all = np.maximum(np.ceil((tau1 - tau0) / step - 1e-9), 0).astype(np.int64)
    n_max = int(n_all.max()) if N else 0
    if n_max > max_steps:
        raise StepLimitExceeded(f"{n_max} steps needed, max_steps={max_steps}")
    r2 = escape_radius * escape_radius
    escaped = np.zeros(N, dtype=bool)
    esc_t = np.full(N, np.nan)
    t_all = tau0.copy()
    saves_t, saves_y = [], []
    if save_every:
        saves_t.append(t_all.copy())
        saves_y.append(y_all.copy())

    live = np.flatnonzero(n_all > 0)
    y, t = y_all[live], t_all[live]
    a_live = tuple(a[live] for a in args)
    n, t0l, t1l = n_all[live], tau0[live], tau1[live]
    last_h = t1l - (t0l + (n - 1) * step)

    n_min = int(n.min()) if len(n) else 0

    def compact(keep):
        nonlocal live, y, t, a_live, n, t0l, t1l, last_h, n_min
        live, y, t = live[keep], y[keep], t[keep]
        a_live = tuple(a[keep] for a in a_live)
        n, t0l, t1l, last_h = n[keep], t0l[keep], t1l[keep], last_h[keep]
        n_min = int(n.min()) if len(n) else 0

    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(n_max):
            if len(live) == 0:
                break
            if j < n_min - 1:
                h = step
                hh = 0.5 * step
                t_mid = t + hh
                t_end = t0l + (j + 1) * step
            else:
                hv = np.where(j < n - 1, step, last_h)
                h = hv[:, None]
                hh = 0.5 * h
                t_mid = t + 0.5 * hv
                t_end = np.where(j + 1 >= n, t1l, t0l + (j + 1) * step)
            k1 = fn(y, t, *a_live)
            if not np.all(np.isfinite(k1)):
                bad = live[~np.all(np.isfinite(k1), axis=1)]
                raise NonFiniteField(f"vector field returned non-finite value for members {bad[:5]}")
            k2 = fn(y + hh * k1, t_mid, *a_live)
            k3 = fn(y + hh * k2, t_mid, *a_live)
            k4 = fn(y + h * k3, t_end, *a_live)
            y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            esc_now = ~((y_new * y_new).sum(axis=1) <= r2)
            if esc_now.any():
                idx = live[esc_now]
                escaped[idx] = True
                esc_t[idx] = t_end[esc_now]
                y_all[idx] = y[esc_now]
                t_all[idx] = t[esc_now]
                keep = ~esc_now
                y_new, t_end = y_new[keep], t_end[keep]
                compact(keep)
            y, t = y_new, t_end
            save_now = save_every and ((j + 1) % save_every == 0 or j + 1 == n_max)
            done = (j + 1 >= n) if j + 1 >= n_min else None
            if save_now or done is not None:
                y_all[live] = y
                t_all[live] = t
            if done is not None and done.any():
                compact(~done)
            if save_now:
                saves_t.append(t_all.copy())
                saves_y.append(y_all.copy())
    if len(live):
        y_all[live] = y
        t_all[live] = t
    return EnsembleResult(
        t_all,
        y_all,
        escaped,
        esc_t,
        np.asarray(saves_t) if save_every else None,
        np.asarray(saves_y) if save_every else None,
    )


def variational_integrate(
    field: VectorField,
    base: Trajectory,
    jac_y: Callable[[np.ndarray, float], np.ndarray],
    z0,
    cfg: IntegratorConfig = IntegratorConfig(),
    escape_radius: float = np.inf,
) -> Trajectory:
    """Solve ``z' = jac_y(base(tau), tau) z`` over the span of ``base``.

    ``field`` is the vector field that generated ``base``; it is only used
    for its dimension here.
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    if z0.size != field.dim:
        raise ValueError("z0 dimension does not match the field")

    def lin(z, tau):
        J = np.atleast_2d(np.asarray(jac_y(evaluate(base, tau), tau), dtype=float))
        return J @ z

    return integrate(VectorField(lin, field.dim), z0, base.t0, base.t1, cfg, escape_radius)
