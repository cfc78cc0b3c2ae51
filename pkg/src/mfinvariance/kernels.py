"""Continuous-parameter covariance kernels.

Conventions used throughout the package: in a pair (H1, H2) attached to times
(t, s), ``R(H1, H2)`` is used when t >= s, i.e. the first argument of R always
belongs to the *later* time. For FARIMA this is the index carrying the larger
MA lag shift, which makes R asymmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .hprofile import HurstProfile
from .quadrature import rect_integral
from .specialfn import c_norm_sq, log_gamma

# Second-difference constant of the fractional white noise covariance:
# E[X_j(H1) X_k(H2)] = FWN_KAPPA * C(Hbar)^2/(C(H1)C(H2)) * (|n+1|^a + |n-1|^a - 2|n|^a).
FWN_KAPPA = 0.5

ASYMPT_KINDS = ("fwn", "farima", "constant", "user-table")


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def fwn_prefactor(h1, h2):
    """C((H1+H2)/2)^2 / (C(H1) C(H2)); equals 1 on the diagonal."""
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    return _out(c_norm_sq(0.5 * (h1 + h2)) / np.sqrt(c_norm_sq(h1) * c_norm_sq(h2)))


def r_fwn(h1, h2):
    """Asymptotic covariance of the fractional white noise field (resolved normalisation).

    The diagonal value is H(2H-1), matching the classical fGn tail
    H(2H-1) n^{2H-2} for a unit-variance fBm.
    """
    alpha = np.asarray(h1, dtype=float) + np.asarray(h2, dtype=float)
    return _out(FWN_KAPPA * alpha * (alpha - 1.0) * fwn_prefactor(h1, h2))


def r_fwn_unhalved(h1, h2):
    """``r_fwn`` with kappa = 1, i.e. without the 1/2 from the second difference; kept for comparison."""
    return _out(r_fwn(h1, h2) / FWN_KAPPA)


def r_farima(h1, h2):
    """sin(pi (H1 - 1/2)) Gamma(2 - H1 - H2) / pi; H1 belongs to the later index."""
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    return _out(np.sin(np.pi * (h1 - 0.5)) * np.exp(log_gamma(2.0 - h1 - h2)) / np.pi)


@dataclass(frozen=True)
class AsymptoticCovariance:
    """The function R of the long-lag limit (j-k)^{2-H1-H2} E[X_j(H1) X_k(H2)] -> R(H1, H2).

    ``kind="constant"`` uses ``value``; ``kind="user-table"`` interpolates
    bilinearly in ``table`` over the rectangular grid ``h1_grid x h2_grid``.
    """

    kind: str
    value: float | None = None
    h1_grid: tuple = ()
    h2_grid: tuple = ()
    table: tuple = ()
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ASYMPT_KINDS:
            raise ValueError(f"unknown asymptotic covariance kind {self.kind!r}")
        if self.kind == "constant":
            if self.value is None or not self.value > 0:
                raise ValueError("constant asymptotic covariance needs a positive value")
        if self.kind == "user-table":
            g1 = np.asarray(self.h1_grid, dtype=float)
            g2 = np.asarray(self.h2_grid, dtype=float)
            tab = np.asarray(self.table, dtype=float)
            if tab.shape != (len(g1), len(g2)):
                raise ValueError("user-table shape must be (len(h1_grid), len(h2_grid))")
            if np.any(tab <= 0):
                raise ValueError("user-table values must be positive")
            interp = RegularGridInterpolator((g1, g2), tab, method="linear")
            object.__setattr__(self, "_interp", interp)

    def __call__(self, h1, h2):
        if self.kind == "fwn":
            return r_fwn(h1, h2)
        if self.kind == "farima":
            return r_farima(h1, h2)
        h1, h2 = np.broadcast_arrays(np.asarray(h1, dtype=float), np.asarray(h2, dtype=float))
        if self.kind == "constant":
            return _out(np.full(h1.shape, float(self.value)))
        pts = np.stack([h1.ravel(), h2.ravel()], axis=1)
        return _out(self._interp(pts).reshape(h1.shape))

    @property
    def symmetric(self) -> bool:
        return self.kind in ("fwn", "constant")

    def sup(self, a: float, b: float, n: int = 50) -> float:
        g = np.linspace(a, b, n)
        return float(np.max(np.abs(self(g[:, None], g[None, :]))))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.value
        if self.kind == "user-table":
            d.update(h1_grid=list(self.h1_grid), h2_grid=list(self.h2_grid),
                     table=[list(r) for r in self.table])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AsymptoticCovariance":
        kind = d["kind"]
        if kind == "user-table":
            return cls(kind, h1_grid=tuple(d["h1_grid"]), h2_grid=tuple(d["h2_grid"]),
                       table=tuple(tuple(r) for r in d["table"]))
        return cls(kind, value=d.get("value"))


FWN = AsymptoticCovariance("fwn")
FARIMA = AsymptoticCovariance("farima")


def script_r(t, s, h1, h2, asympt):
    """R(H1, H2) if t >= s else R(H2, H1)."""
    t, s, h1, h2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, s, h1, h2)))
    later = t >= s
    return _out(asympt(np.where(later, h1, h2), np.where(later, h2, h1)))


def _rstar_parts(theta, sigma, profile, asympt):
    theta = np.maximum(theta, 0.0)
    sigma = np.maximum(sigma, 0.0)
    ht = np.asarray(profile.eval(theta))
    hs = np.asarray(profile.eval(sigma))
    later = theta >= sigma
    coef = asympt(np.where(later, ht, hs), np.where(later, hs, ht))
    return np.asarray(coef), ht + hs - 2.0


def script_r_star(theta, sigma, profile: HurstProfile, asympt):
    """R(theta, sigma; h(theta), h(sigma)) |theta - sigma|^{h(theta)+h(sigma)-2}.

    Raises ``ValueError`` on the diagonal theta == sigma.
    """
    theta = np.asarray(theta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(theta < 0) or np.any(sigma < 0):
        raise ValueError("times must be >= 0")
    if np.any(theta == sigma):
        raise ValueError("R* is singular on the diagonal theta == sigma")
    coef, expo = _rstar_parts(theta, sigma, profile, asympt)
    return _out(coef * np.abs(theta - sigma) ** expo)


def rstar_envelope(theta, sigma, profile: HurstProfile, asympt):
    """sup R * (|theta-sigma|^{2a-2} + |theta-sigma|^{2b-2})."""
    d = np.abs(np.asarray(theta, dtype=float) - np.asarray(sigma, dtype=float))
    c = asympt.sup(profile.a, profile.b)
    return _out(c * (d ** (2 * profile.a - 2) + d ** (2 * profile.b - 2)))


@dataclass(frozen=True)
class LimitKernel:
    """Covariance I(t, s) = int_0^t int_0^s R*(theta, sigma) of the limit process."""

    profile: HurstProfile
    asympt: AsymptoticCovariance
    rel_tol: float = 1e-8
    max_panels: int = 10_000
    inner_nodes: int = 32
    closed_form: bool = True

    def _kernel(self, theta, sigma):
        return _rstar_parts(theta, sigma, self.profile, self.asympt)

    def rect(self, theta0, theta1, sigma0, sigma1) -> float:
        """Integral of R* over [theta0, theta1] x [sigma0, sigma1].

        Constant profiles use the closed form (inclusion-exclusion on
        ``field_cov``) unless ``closed_form`` is off.
        """
        # R* is symmetric, so order the rectangle canonically for bitwise symmetry
        if (theta0, theta1) < (sigma0, sigma1):
            theta0, theta1, sigma0, sigma1 = sigma0, sigma1, theta0, theta1
        if self.closed_form and self.profile.kind == "constant":
            H = float(self.profile.params["value"])

            def F(t, s):
                return float(field_cov(H, H, t, s, self.asympt))

            return F(theta1, sigma1) - F(theta0, sigma1) - F(theta1, sigma0) + F(theta0, sigma0)
        return rect_integral(
            self._kernel, theta0, theta1, sigma0, sigma1, 2.0 * self.profile.a - 2.0,
            tbreaks=self.profile.breakpoints(), rel_tol=self.rel_tol,
            max_panels=self.max_panels, inner_nodes=self.inner_nodes,
        )

    def __call__(self, t, s) -> float:
        return self.cov(t, s)

    def cov(self, t, s) -> float:
        if t < 0 or s < 0:
            raise ValueError("times must be >= 0")
        return self.rect(0.0, t, 0.0, s)

    def gram(self, times) -> np.ndarray:
        times = [float(x) for x in times]
        n = len(times)
        out = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                out[i, j] = out[j, i] = self.cov(times[i], times[j])
        return out

    def increment_gram(self, edges) -> np.ndarray:
        """Covariance of the increments over consecutive cells [edges[i], edges[i+1]]."""
        e = [float(x) for x in edges]
        n = len(e) - 1
        out = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                out[i, j] = out[j, i] = self.rect(e[i], e[i + 1], e[j], e[j + 1])
        return out

    def increment_variance(self, s, t) -> float:
        lo, hi = min(s, t), max(s, t)
        return self.rect(lo, hi, lo, hi)


def limit_cov(kernel: LimitKernel, t: float, s: float) -> float:
    return kernel.cov(t, s)


def increment_variance_bound(profile: HurstProfile, asympt, s: float, t: float) -> float:
    """Upper bound sup R |t-s|^{2m} / (m (2m-1)), m = inf of h on [s, t], for |t-s| <= 1."""
    lo, hi = min(s, t), max(s, t)
    m = profile.min_on(lo, hi)
    c = asympt.sup(profile.a, profile.b)
    return c * (hi - lo) ** (2 * m) / (m * (2 * m - 1))


def fixed_h_rect(h1, h2, asympt, theta0, theta1, sigma0, sigma1, rel_tol=1e-10):
    """int int R(theta, sigma; H1, H2) |theta - sigma|^{H1+H2-2} by quadrature (frozen H)."""
    r12, r21 = float(asympt(h1, h2)), float(asympt(h2, h1))
    e = h1 + h2 - 2.0

    def kern(theta, sigma):
        return np.where(theta >= sigma, r12, r21), np.full(np.shape(theta), e)

    return rect_integral(kern, theta0, theta1, sigma0, sigma1, e, rel_tol=rel_tol)


def field_cov(h1, h2, t, s, asympt):
    """Covariance E[W(t, H1) W(s, H2)] of the limit field of the frozen-H partial sums."""
    h1, h2, t, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (h1, h2, t, s)))
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("times must be >= 0")
    alpha = h1 + h2
    r12 = np.asarray(asympt(h1, h2))
    r21 = np.asarray(asympt(h2, h1))
    cross = np.where(t >= s, r12, r21)
    num = r21 * s ** alpha + r12 * t ** alpha - cross * np.abs(t - s) ** alpha
    return _out(num / (alpha * (alpha - 1.0)))


def z_cov(j, k, h1, h2, asympt):
    """Covariance of Z_j(H1) = W(j, H1) - W(j-1, H1) and Z_k(H2), j, k >= 1.

    The one-variable terms of ``field_cov`` cancel in the double difference, so
    this is evaluated directly from the cross term as a function of j - k.
    """
    j, k, h1, h2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (j, k, h1, h2)))
    alpha = h1 + h2
    r12 = np.asarray(asympt(h1, h2))
    r21 = np.asarray(asympt(h2, h1))
    n = j - k

    def g(u):
        return np.where(u >= 0, r12, r21) * np.abs(u) ** alpha

    return _out((g(n + 1) + g(n - 1) - 2.0 * g(n)) / (alpha * (alpha - 1.0)))


def mbm_cov(profile: HurstProfile, t, s):
    """D(h(t), h(s)) (t^a + s^a - |t-s|^a), a = h(t) + h(s)."""
    from .specialfn import d_coef

    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    ht, hs = profile.eval(t), profile.eval(s)
    a = np.asarray(ht) + np.asarray(hs)
    return _out(d_coef(ht, hs) * (t ** a + s ** a - np.abs(t - s) ** a))


def tangent_cov(t, u, v, profile: HurstProfile, asympt, s=None):
    """Covariance of the tangent field at base points t (and s, if different).

    For a common base point this is an fBm of index h(t) with variance
    R(h, h) / (2h^2 - h) at lag 1; distinct base points are uncorrelated.
    """
    if s is not None and s != t:
        return 0.0 * np.asarray(u, dtype=float) * np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    h = float(profile.eval(t))
    c = float(asympt(h, h)) / (4 * h * h - 2 * h)
    return _out(c * (np.abs(u) ** (2 * h) + np.abs(v) ** (2 * h) - np.abs(u - v) ** (2 * h)))
