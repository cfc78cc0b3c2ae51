"""Exact covariances of the two discrete Gaussian fields X_n(H).

* ``fwn``: increments X_n(H) = W_H(n+1) - W_H(n) of unit-variance fBms
  driven by one common harmonizable Gaussian measure.
* ``farima``: X_n(H) = sum_l psi_l(H - 1/2) g_{n-l}, one common i.i.d.
  sequence g for every H.

In ``cov(j, k, H1, H2)`` the index j carries H1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError
from .kernels import FARIMA, FWN, AsymptoticCovariance, fwn_prefactor
from .specialfn import c_norm_sq, log_gamma, log_gamma_ratio

_SERIES_LAG = 8
_SERIES_TERMS = 12


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def second_difference_power(n, alpha):
    """|n+1|^a + |n-1|^a - 2|n|^a, without cancellation at large |n|.

    For |n| >= 8 the even binomial series 2 |n|^a sum_k C(a, 2k) n^{-2k}
    is summed instead of subtracting three nearly equal powers.
    """
    n, alpha = np.broadcast_arrays(np.abs(np.asarray(n, dtype=float)), np.asarray(alpha, dtype=float))
    out = np.empty(n.shape)
    near = n < _SERIES_LAG
    if np.any(near):
        nn, aa = n[near], alpha[near]
        out[near] = (nn + 1) ** aa + np.abs(nn - 1) ** aa - 2 * nn ** aa
    far = ~near
    if np.any(far):
        nn, aa = n[far], alpha[far]
        u2 = 1.0 / (nn * nn)
        coef = np.ones_like(aa)
        acc = np.zeros_like(aa)
        pw = np.ones_like(aa)
        for k in range(1, _SERIES_TERMS + 1):
            coef = coef * (aa - 2 * k + 2) * (aa - 2 * k + 1) / ((2 * k - 1) * (2 * k))
            pw = pw * u2
            acc = acc + coef * pw
        out[far] = 2.0 * nn ** aa * acc
    return out


def fwn_cov(j, k, h1, h2):
    """E[X_j(H1) X_k(H2)] for the fractional white noise field."""
    j, k, h1, h2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (j, k, h1, h2)))
    alpha = h1 + h2
    return _out(0.5 * np.asarray(fwn_prefactor(h1, h2)) * second_difference_power(j - k, alpha))


def _cos_power_tail(m, p):
    """int_1^inf cos(m x) x^{-p} dx for p > 1 (QUADPACK QAWF).

    QAWF's error estimate runs ~1e3 times above the true error (~1e-11 here),
    so only gross failures are rejected.
    """
    if m == 0:
        return 1.0 / (p - 1.0)
    val, err = integrate.quad(lambda x: x ** -p, 1.0, np.inf, weight="cos", wvar=abs(m),
                              limlst=200, limit=200)
    if not np.isfinite(val) or err > 1e-7:
        raise QuadratureError(f"oscillatory tail integral did not converge (m={m}, err={err:.2g})")
    return val


def fwn_spectral_oracle(j: int, k: int, h1: float, h2: float) -> float:
    """E[X_j(H1) X_k(H2)] from the harmonizable representation, by quadrature.

    The isometry gives (C(H1)C(H2))^{-1} int e^{-i n x} 2(1 - cos x) |x|^{-a-1} dx with
    n = j - k and a = H1 + H2. The real, even integrand is integrated on (0, 1]
    against the algebraic weight x^{1-a} and on [1, inf) as three Fourier integrals.
    """
    n = int(j) - int(k)
    if abs(n) > 64:
        raise ValueError("spectral oracle is restricted to |j - k| <= 64")
    alpha = h1 + h2

    def smooth(x):
        # 2 (1 - cos x) / x^2 = sinc(x / 2pi)^2, exact near 0
        return np.cos(n * x) * np.sinc(x / (2 * np.pi)) ** 2

    head, err = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(1.0 - alpha, 0.0),
                               epsabs=1e-14, epsrel=1e-13, limit=200)
    if err > 1e-10:
        raise QuadratureError(f"spectral oracle head integral error {err:.2g}")
    p = alpha + 1.0
    # cos(n x) 2 (1 - cos x) = 2 cos(n x) - cos((n+1) x) - cos((n-1) x)
    tail = 2.0 * _cos_power_tail(n, p) - _cos_power_tail(n + 1, p) - _cos_power_tail(n - 1, p)
    total = 2.0 * (head + tail)
    return float(total / math.sqrt(c_norm_sq(h1) * c_norm_sq(h2)))


def c_norm_sq_quadrature(H: float) -> float:
    """int |e^{-ix} - 1|^2 / |x|^{2H+1} dx by quadrature (oracle for ``c_norm_sq``)."""
    head, _ = integrate.quad(lambda x: np.sinc(x / (2 * np.pi)) ** 2, 0.0, 1.0,
                             weight="alg", wvar=(1.0 - 2 * H, 0.0), epsabs=1e-14, epsrel=1e-13)
    p = 2 * H + 1.0
    tail = 2.0 * _cos_power_tail(0, p) - 2.0 * _cos_power_tail(1, p)
    return float(2.0 * (head + tail))


def farima_psi(l, d):
    """MA coefficient Gamma(d + l) / (l! Gamma(d)) of the FARIMA(0, d, 0) filter."""
    l = np.asarray(l, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(l < 0):
        raise ValueError("lag must be >= 0")
    if np.any((d <= 0) | (d >= 0.5)):
        raise ValueError("memory parameter d must lie in (0, 1/2)")
    out = np.exp(np.asarray(log_gamma_ratio(l, d, 1.0)) - np.asarray(log_gamma(d)))
    return _out(np.where(l == 0, 1.0, out))


def farima_cov(j, k, h1, h2):
    """E[X_j(H1) X_k(H2)] = sum_l psi_{n+l}(d_later) psi_l(d_earlier), n = |j - k|.

    The series is summed in closed form with Gauss's 2F1(.; 1) theorem:
    sin(pi dL) / pi * Gamma(1 - dL - dE) * Gamma(n + dL) / Gamma(n + 1 - dE).
    """
    j, k, h1, h2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (j, k, h1, h2)))
    n = j - k
    later = n >= 0
    d_l = np.where(later, h1, h2) - 0.5
    d_e = np.where(later, h2, h1) - 0.5
    m = np.abs(n)
    log_ratio = np.asarray(log_gamma_ratio(m, d_l, 1.0 - d_e))
    pref = np.sin(np.pi * d_l) / np.pi * np.exp(np.asarray(log_gamma(1.0 - d_l - d_e)))
    return _out(pref * np.exp(log_ratio))


def farima_cov_series(j: int, k: int, h1: float, h2: float, terms: int = 100_000) -> float:
    """Direct summation of the MA(inf) covariance series (oracle for ``farima_cov``).

    psi is built by its recurrence psi_l = psi_{l-1} (d + l - 1) / l; the
    remainder beyond ``terms`` is the midpoint Euler-Maclaurin integral of the
    summand continued through scipy's gammaln.
    """
    n = int(j) - int(k)
    d_l, d_e = (h1 - 0.5, h2 - 0.5) if n >= 0 else (h2 - 0.5, h1 - 0.5)
    m = abs(n)
    length = m + terms
    ls = np.arange(1, length, dtype=float)
    psi_l = np.concatenate([[1.0], np.cumprod((d_l + ls - 1) / ls)])
    ls = np.arange(1, terms, dtype=float)
    psi_e = np.concatenate([[1.0], np.cumprod((d_e + ls - 1) / ls)])
    head = math.fsum(psi_l[m:m + terms] * psi_e)

    x0 = terms - 0.5
    log_norm = special.gammaln(d_l) + special.gammaln(d_e)
    p = d_l + d_e - 1.0

    def summand(y):
        # x = x0 e^y; Gamma(z + a) / Gamma(z + 1) = 1 / poch(z + a, 1 - a)
        x = x0 * np.exp(y)
        lf = -np.log(special.poch(m + x + d_l, 1.0 - d_l)) - np.log(special.poch(x + d_e, 1.0 - d_e))
        return np.exp(lf - log_norm + np.log(x))

    # beyond y_max the summand is x^p / (Gamma(dL) Gamma(dE)) to within 1e-30 relative
    y_max = 40.0 / abs(p)
    tail, _ = integrate.quad(summand, 0.0, y_max, epsabs=0.0, epsrel=1e-13, limit=400)
    tail += math.exp(p * (math.log(x0) + y_max) - log_norm) / -p
    return head + tail


def lemma1_target(d1, d2):
    """int_0^inf (1+u)^{d1-1} u^{d2-1} du = Gamma(d2) Gamma(1-d1-d2) / Gamma(1-d1)."""
    return _out(np.exp(np.asarray(log_gamma(d2)) + np.asarray(log_gamma(1 - d1 - d2))
                       - np.asarray(log_gamma(1 - d1))))


def r_farima_quadrature(h1: float, h2: float) -> float:
    """FARIMA R(H1, H2) as int_0^inf (1+u)^{dL-1} u^{dE-1} du / (Gamma(dL) Gamma(dE)), by quadrature."""
    d_l, d_e = h1 - 0.5, h2 - 0.5

    def f(u):
        return (1.0 + u) ** (d_l - 1.0)

    head, _ = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(d_e - 1.0, 0.0), epsabs=0.0, epsrel=1e-13)
    # u = 1/x maps [1, inf) to (0, 1] with integrand (1+x)^{dL-1} x^{-dL-dE}
    tail, _ = integrate.quad(lambda x: (1.0 + x) ** (d_l - 1.0), 0.0, 1.0, weight="alg",
                             wvar=(-d_l - d_e, 0.0), epsabs=0.0, epsrel=1e-13)
    return float((head + tail) / (special.gamma(d_l) * special.gamma(d_e)))


def lemma1_sum(n, d1, d2):
    """sum_{l >= 1} Gamma(d1 + n + l) / (n + l)! * Gamma(d2 + l) / l!, in closed form."""
    n = np.asarray(n, dtype=float)
    full = np.exp(np.asarray(log_gamma(d2)) + np.asarray(log_gamma(1 - d1 - d2))
                  - np.asarray(log_gamma(1 - d1)) + np.asarray(log_gamma_ratio(n, d1, 1 - d2)))
    first = np.exp(np.asarray(log_gamma_ratio(n, d1, 1.0)) + np.asarray(log_gamma(d2)))
    return _out(full - first)


def lemma1_residual(n, d1, d2):
    """|n^{1-d1-d2} * lemma1_sum - lemma1_target|."""
    if n < 1:
        raise ValueError("n must be >= 1")
    val = float(n) ** (1 - d1 - d2) * lemma1_sum(n, d1, d2)
    return _out(np.abs(val - lemma1_target(d1, d2)))


@dataclass(frozen=True)
class FieldModel:
    """A discrete Gaussian field {X_n(H)} given by its exact cross-covariance."""

    kind: str
    a: float = 0.5 + 1e-9
    b: float = 1.0 - 1e-9

    def __post_init__(self):
        if self.kind not in ("fwn", "farima"):
            raise ValueError(f"unknown field model {self.kind!r}")
        if not (0.5 < self.a <= self.b < 1.0):
            raise ValueError("hurst range must satisfy 1/2 < a <= b < 1")

    @property
    def asympt(self) -> AsymptoticCovariance:
        return FWN if self.kind == "fwn" else FARIMA

    def cov(self, j, k, h1, h2):
        return fwn_cov(j, k, h1, h2) if self.kind == "fwn" else farima_cov(j, k, h1, h2)

    def __call__(self, j, k, h1, h2):
        return self.cov(j, k, h1, h2)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


def assumption2_residual(model: FieldModel, n: int, grid: int = 21, k0: int = 1) -> float:
    """sup over a grid of [a, b]^2 of |n^{2-H1-H2} cov(n+k0, k0, H1, H2) - R(H1, H2)|."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = np.linspace(model.a, model.b, grid)
    h1, h2 = np.meshgrid(g, g, indexing="ij")
    scaled = float(n) ** (2 - h1 - h2) * model.cov(n + k0, k0, h1, h2)
    return float(np.max(np.abs(scaled - model.asympt(h1, h2))))


def assumption1_bound(model: FieldModel, max_lag: int = 16, grid: int = 11) -> float:
    """sup |cov(j, k, H1, H2)| over |j - k| <= max_lag and a grid of [a, b]^2."""
    g = np.linspace(model.a, model.b, grid)
    h1, h2, lag = np.meshgrid(g, g, np.arange(-max_lag, max_lag + 1), indexing="ij")
    return float(np.max(np.abs(model.cov(max_lag + lag, max_lag, h1, h2))))
