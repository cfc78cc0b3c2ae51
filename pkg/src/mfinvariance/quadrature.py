"""Integrals of weakly singular kernels c(theta, sigma) |theta - sigma|^e(theta, sigma)
over rectangles, with e > -1.

The rectangle is rewritten in (w, sigma) with w = theta - sigma. Each sign of w
is handled separately; the radial variable is substituted as
|w| = W v^m with m = 1 / (e_min + 1), which turns |w|^e_min dw into a constant
times dv. The outer v-integral is vectorised adaptive Gauss-Kronrod (7/15),
the inner sigma-integral is Gauss-Legendre split at the non-smooth points of h.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import QuadratureError

# Gauss-Kronrod 7-15 nodes/weights on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]

Kernel = Callable[[np.ndarray, np.ndarray], "tuple[np.ndarray, np.ndarray]"]


def adaptive_gk(f, a, b, breaks=(), rel_tol=1e-10, abs_tol=0.0, max_panels=10_000):
    """Globally adaptive Gauss-Kronrod for a vectorised integrand ``f``.

    Returns ``(value, error_estimate, n_panels)``. All panels that carry more
    than their share of the error budget are bisected in one batch, so the
    number of Python-level rounds stays logarithmic.
    """
    pts = np.unique(np.concatenate([[a, b], [x for x in breaks if a < x < b]]))
    lo, hi = pts[:-1], pts[1:]
    val = np.empty(0)
    err = np.empty(0)
    plo = np.empty(0)
    phi = np.empty(0)
    while True:
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = c[:, None] + h[:, None] * _XK[None, :]
        fx = f(x.ravel()).reshape(x.shape)
        k = (fx @ _WK) * h
        g = (fx @ _WG) * h
        plo = np.concatenate([plo, lo])
        phi = np.concatenate([phi, hi])
        val = np.concatenate([val, k])
        err = np.concatenate([err, np.abs(k - g)])
        total = val.sum()
        total_err = err.sum()
        target = max(abs_tol, rel_tol * abs(total))
        if not np.isfinite(total):
            raise QuadratureError("non-finite integrand value encountered")
        if total_err <= target:
            return float(total), float(total_err), len(val)
        split = err > target / len(val)
        if not np.any(split):
            split = err == err.max()
        if len(val) + int(split.sum()) > max_panels:
            raise QuadratureError(
                f"quadrature did not reach rel_tol={rel_tol:g} within {max_panels} panels "
                f"(estimate {total:.6g} +/- {total_err:.2g})"
            )
        mid = 0.5 * (plo[split] + phi[split])
        lo = np.concatenate([plo[split], mid])
        hi = np.concatenate([mid, phi[split]])
        keep = ~split
        plo, phi, val, err = plo[keep], phi[keep], val[keep], err[keep]


def _inner_integral(kernel: Kernel, w, s0, s1, t0, t1, tbreaks, nodes, weights):
    """int over sigma in [max(s0, t0-w), min(s1, t1-w)] of c |w|^e, for each w."""
    lo = np.maximum(s0, t0 - w)
    hi = np.minimum(s1, t1 - w)
    hi = np.maximum(hi, lo)
    cuts = [lo, hi]
    for b in tbreaks:
        cuts.append(np.full_like(w, b))
        cuts.append(b - w)
    cuts = np.sort(np.clip(np.stack(cuts, axis=1), lo[:, None], hi[:, None]), axis=1)
    a_, b_ = cuts[:, :-1], cuts[:, 1:]
    half = 0.5 * (b_ - a_)
    sig = 0.5 * (a_ + b_)[..., None] + half[..., None] * nodes
    theta = sig + w[:, None, None]
    coef, expo = kernel(theta, sig)
    absw = np.abs(w)[:, None, None]
    vals = coef * np.exp(expo * np.log(absw))
    return ((vals @ weights) * half).sum(axis=1)


def rect_integral(kernel: Kernel, theta0, theta1, sigma0, sigma1, e_min, *,
                  tbreaks=(), rel_tol=1e-8, abs_tol=0.0, max_panels=10_000, inner_nodes=32):
    """Integral of c(theta, sigma) |theta - sigma|^e over [theta0, theta1] x [sigma0, sigma1].

    ``kernel(theta, sigma)`` returns ``(c, e)`` arrays; ``e >= e_min > -1``
    must hold on the rectangle. ``tbreaks`` lists times where ``c`` or ``e``
    are not smooth.
    """
    if not e_min > -1.0:
        raise ValueError("kernel exponent lower bound must exceed -1 for integrability")
    if theta1 <= theta0 or sigma1 <= sigma0:
        return 0.0
    nodes, weights = np.polynomial.legendre.leggauss(inner_nodes)
    tbreaks = np.asarray([b for b in np.atleast_1d(tbreaks)
                          if min(theta0, sigma0) < b < max(theta1, sigma1)], dtype=float)
    wlo, whi = theta0 - sigma1, theta1 - sigma0
    wbreaks = sorted({theta0 - sigma0, theta1 - sigma1})
    m = 1.0 / (e_min + 1.0)

    def side(sign, rlo, rhi):
        # |w| = rhi * v^m, v in [(rlo/rhi)^(1/m), 1]
        rbreaks = [sign * x for x in wbreaks if rlo < sign * x < rhi]

        def integrand(v):
            r = rhi * v ** m
            jac = m * rhi * v ** (m - 1.0)
            val = _inner_integral(kernel, sign * r, sigma0, sigma1, theta0, theta1,
                                  tbreaks, nodes, weights)
            return np.where(r > 0, val * jac, 0.0)

        a = (rlo / rhi) ** (1.0 / m) if rlo > 0 else 0.0
        vb = [(x / rhi) ** (1.0 / m) for x in rbreaks]
        return adaptive_gk(integrand, a, 1.0, vb, rel_tol=rel_tol, abs_tol=abs_tol * 0.5,
                           max_panels=max_panels)

    total = 0.0
    if whi > 0:
        total += side(1.0, max(wlo, 0.0), whi)[0]
    if wlo < 0:
        total += side(-1.0, max(-whi, 0.0), -wlo)[0]
    return total
