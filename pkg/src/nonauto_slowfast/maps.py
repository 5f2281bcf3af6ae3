"""Coupling maps Gamma(x) and slow vector fields f(x, y).

Each map works on arrays (``x`` of shape (..., n)) and exposes ``scalar``
for the pure-float inner loops used by single-trajectory integration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConstantGamma",
    "LinearGamma",
    "QuasiPeriodicGamma",
    "ArctanGamma",
    "TableGamma",
    "fig2_gamma",
    "ConstantSlowField",
    "LinearSlowField",
    "FastVariableSlowField",
]


class _Gamma:
    kind = "abstract"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self._eval(x[..., :1])

    def scalar(self, x: float) -> float:
        return float(self._eval(np.asarray([x]))[0])

    def limits(self):
        """(Gamma(-inf), Gamma(+inf)) when finite, else None."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantGamma(_Gamma):
    value: float = 0.0
    kind = "constant"

    def _eval(self, x):
        return np.full_like(x, self.value)

    def scalar(self, x):
        return self.value

    def limits(self):
        return (self.value, self.value)

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class LinearGamma(_Gamma):
    slope: float = 1.0
    intercept: float = 0.0
    kind = "linear"

    def _eval(self, x):
        return self.slope * x + self.intercept

    def scalar(self, x):
        return self.slope * x + self.intercept

    def to_dict(self):
        return {"kind": "linear", "slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class QuasiPeriodicGamma(_Gamma):
    """``scale * sum_j a_j trig_j(w_j x)``; trig in {sin, cos}."""

    terms: tuple = ((1.0, math.sqrt(2.0), "sin"), (1.0, 0.2, "cos"))
    scale: float = 0.2
    kind = "quasiperiodic-sum"

    def _eval(self, x):
        out = np.zeros_like(x)
        for a, w, trig in self.terms:
            out = out + a * (np.sin(w * x) if trig == "sin" else np.cos(w * x))
        return self.scale * out

    def scalar(self, x):
        s = 0.0
        for a, w, trig in self.terms:
            s += a * (math.sin(w * x) if trig == "sin" else math.cos(w * x))
        return self.scale * s

    def to_dict(self):
        return {
            "kind": "quasiperiodic-sum",
            "scale": self.scale,
            "terms": [{"amplitude": a, "frequency": w, "kind": k} for a, w, k in self.terms],
        }


def fig2_gamma() -> QuasiPeriodicGamma:
    """``0.2 (sin(sqrt(2) x) + cos(x / 5))``."""
    return QuasiPeriodicGamma()


@dataclass(frozen=True)
class ArctanGamma(_Gamma):
    """``amplitude * (2/pi) arctan(x)``, limits ``-+amplitude``."""

    amplitude: float = 1.0
    kind = "arctan"

    def _eval(self, x):
        return self.amplitude * (2.0 / math.pi) * np.arctan(x)

    def scalar(self, x):
        return self.amplitude * (2.0 / math.pi) * math.atan(x)

    def limits(self):
        return (-self.amplitude, self.amplitude)

    def to_dict(self):
        return {"kind": "arctan", "amplitude": self.amplitude}


@dataclass(frozen=True)
class TableGamma(_Gamma):
    """Piecewise-linear interpolation of a table, constant beyond its ends."""

    xs: tuple = (0.0, 1.0)
    values: tuple = (0.0, 0.0)
    kind = "table"

    def __post_init__(self):
        if len(self.xs) != len(self.values) or len(self.xs) < 2:
            raise ValueError("gamma table needs >= 2 (x, value) pairs of equal length")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("gamma table x values must be strictly increasing")

    def _eval(self, x):
        return np.interp(x, self.xs, self.values)

    def limits(self):
        return (self.values[0], self.values[-1])

    def to_dict(self):
        return {"kind": "table", "x": list(self.xs), "values": list(self.values)}


class _SlowField:
    """``f(x, y)`` with ``x`` of shape (..., n), ``y`` of shape (..., m)."""

    y_independent = False

    def closed_form(self, x0, t):
        """Exact solution of ``x' = f(x)`` when f ignores y, else None."""
        return None


@dataclass(frozen=True)
class ConstantSlowField(_SlowField):
    value: float = 1.0
    y_independent = True
    kind = "constant"

    def __call__(self, x, y):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def scalar_pair(self, x, y):
        return self.value

    def closed_form(self, x0, t):
        return np.asarray(x0, dtype=float) + self.value * np.asarray(t, dtype=float)[..., None]

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class LinearSlowField(_SlowField):
    """``f(x, y) = rate * x + bias``."""

    rate: float = -1.0
    bias: float = 0.0
    y_independent = True
    kind = "linear"

    def __call__(self, x, y):
        return self.rate * np.asarray(x, dtype=float) + self.bias

    def scalar_pair(self, x, y):
        return self.rate * x + self.bias

    def closed_form(self, x0, t):
        x0 = np.asarray(x0, dtype=float)
        t = np.asarray(t, dtype=float)[..., None]
        if self.rate == 0:
            return x0 + self.bias * t
        e = np.exp(self.rate * t)
        return x0 * e + self.bias * (e - 1.0) / self.rate

    def to_dict(self):
        return {"kind": "linear", "rate": self.rate, "bias": self.bias}


@dataclass(frozen=True)
class FastVariableSlowField(_SlowField):
    """``f(x, y) = scale * y`` (n == m); the slow drift is driven by the fast state."""

    scale: float = 1.0
    kind = "fast-variable"

    def __call__(self, x, y):
        return self.scale * np.asarray(y, dtype=float)

    def scalar_pair(self, x, y):
        return self.scale * y

    def to_dict(self):
        return {"kind": "fast-variable", "scale": self.scale}
