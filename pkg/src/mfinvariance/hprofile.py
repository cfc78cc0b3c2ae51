"""Multifractional functions h : [0, inf) -> [a, b], with 1/2 < a <= b < 1."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import UnsupportedProfileError

KINDS = ("constant", "linear-clamped", "sinusoidal", "piecewise-linear")


def _as_times(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("profile time must be >= 0")
    return arr


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class HurstProfile:
    """A parametric multifractional function.

    Parameters per kind::

        constant          {"value": H}
        linear-clamped    {"start": h0, "slope": s}        h = clip(h0 + s t, a, b)
        sinusoidal        {"mean": m, "amplitude": A, "frequency": w=1, "phase": p=0}
        piecewise-linear  {"knots": [[t0, h0], [t1, h1], ...]}  (flat past the ends)

    ``a`` and ``b`` default to the exact range of the family and must contain it
    when given explicitly.
    """

    kind: str
    params: dict = field(default_factory=dict)
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        params = dict(self.params)
        if self.kind == "constant":
            lo = hi = float(params["value"])
        elif self.kind == "sinusoidal":
            params.setdefault("frequency", 1.0)
            params.setdefault("phase", 0.0)
            amp = abs(float(params["amplitude"]))
            lo, hi = float(params["mean"]) - amp, float(params["mean"]) + amp
        elif self.kind == "linear-clamped":
            if self.a is None or self.b is None:
                raise ValueError("linear-clamped profiles need explicit bounds a and b")
            lo, hi = self.a, self.b
        else:
            knots = np.asarray(params["knots"], dtype=float)
            if knots.ndim != 2 or knots.shape[1] != 2 or len(knots) < 2:
                raise ValueError("piecewise-linear knots must be a list of at least two [t, h] pairs")
            if np.any(np.diff(knots[:, 0]) <= 0) or knots[0, 0] < 0:
                raise ValueError("piecewise-linear knot times must be >= 0 and strictly increasing")
            params["knots"] = knots.tolist()
            lo, hi = float(knots[:, 1].min()), float(knots[:, 1].max())
        a = lo if self.a is None else float(self.a)
        b = hi if self.b is None else float(self.b)
        if not (0.5 < a <= b < 1.0):
            raise ValueError(f"profile bounds must satisfy 1/2 < a <= b < 1, got a={a}, b={b}")
        if lo < a - 1e-15 or hi > b + 1e-15:
            raise ValueError(f"profile range [{lo}, {hi}] is not contained in [a, b] = [{a}, {b}]")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        t = _as_times(t)
        p = self.params
        if self.kind == "constant":
            v = np.full(t.shape, float(p["value"]))
        elif self.kind == "sinusoidal":
            v = p["mean"] + p["amplitude"] * np.sin(p["frequency"] * t + p["phase"])
        elif self.kind == "linear-clamped":
            v = np.clip(p["start"] + p["slope"] * t, self.a, self.b)
        else:
            knots = np.asarray(p["knots"])
            v = np.interp(t, knots[:, 0], knots[:, 1])
        return _out(v)

    @property
    def regularity(self) -> str:
        return {"constant": "C2", "sinusoidal": "C2"}.get(self.kind, "continuous")

    @property
    def is_smooth(self) -> bool:
        return self.regularity == "C2"

    def derivative(self, t):
        """Exact h'(t). Not available for clamped profiles or at piecewise knots."""
        t = _as_times(t)
        p = self.params
        if self.kind == "constant":
            return _out(np.zeros(t.shape))
        if self.kind == "sinusoidal":
            w = p["frequency"]
            return _out(p["amplitude"] * w * np.cos(w * t + p["phase"]))
        if self.kind == "linear-clamped":
            raise UnsupportedProfileError("linear-clamped profiles are not C1 at the clamp corners")
        knots = np.asarray(p["knots"])
        kt = knots[:, 0]
        if np.any(np.isin(t, kt)):
            raise UnsupportedProfileError("piecewise-linear profile has no derivative at its knots")
        slopes = np.concatenate([[0.0], np.diff(knots[:, 1]) / np.diff(kt), [0.0]])
        return _out(slopes[np.searchsorted(kt, t)])

    def second_derivative_bound(self) -> float:
        """Bound on |h'''| used for the finite-difference check of ``derivative``."""
        if self.kind == "sinusoidal":
            return abs(self.params["amplitude"]) * abs(self.params["frequency"]) ** 3
        return 0.0

    def breakpoints(self) -> np.ndarray:
        """Times where h is not smooth (quadrature panels are split there)."""
        p = self.params
        if self.kind == "piecewise-linear":
            return np.asarray(p["knots"])[:, 0].copy()
        if self.kind == "linear-clamped" and p["slope"] != 0:
            pts = [(self.a - p["start"]) / p["slope"], (self.b - p["start"]) / p["slope"]]
            return np.array(sorted(x for x in pts if x > 0))
        return np.empty(0)

    def min_on(self, lo: float, hi: float, samples: int = 257) -> float:
        """Minimum of h over [lo, hi]; exact for the piecewise-linear families."""
        ts = np.linspace(lo, hi, samples)
        bp = self.breakpoints()
        ts = np.concatenate([ts, bp[(bp >= lo) & (bp <= hi)]])
        if self.kind == "sinusoidal":
            w, ph = self.params["frequency"], self.params["phase"]
            amp = self.params["amplitude"]
            # interior critical points of sin(w t + ph)
            base = (np.pi / 2 if amp < 0 else 3 * np.pi / 2) - ph
            period = 2 * np.pi / w
            k0 = math.floor((w * lo - base) / (2 * np.pi))
            crit = [(base + 2 * np.pi * k) / w for k in range(k0, k0 + int((hi - lo) / period) + 3)]
            ts = np.concatenate([ts, [c for c in crit if lo <= c <= hi]])
        return float(np.min(self.eval(ts)))

    # -- (de)serialisation --------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": dict(self.params), "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "HurstProfile":
        return cls(d["kind"], dict(d.get("params", {})), d.get("a"), d.get("b"))


def constant(H: float) -> HurstProfile:
    return HurstProfile("constant", {"value": H})


def sinusoidal(mean: float, amplitude: float, frequency: float = 1.0, phase: float = 0.0) -> HurstProfile:
    return HurstProfile(
        "sinusoidal", {"mean": mean, "amplitude": amplitude, "frequency": frequency, "phase": phase}
    )


def linear_clamped(start: float, slope: float, a: float, b: float) -> HurstProfile:
    return HurstProfile("linear-clamped", {"start": start, "slope": slope}, a, b)


def piecewise_linear(knots) -> HurstProfile:
    return HurstProfile("piecewise-linear", {"knots": [list(map(float, k)) for k in knots]})
