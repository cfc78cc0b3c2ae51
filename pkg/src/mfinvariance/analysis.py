"""Verification engine: convergence reports, the Riemann-sum oracle, tangent,
Hölder and representation checks.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .errors import EstimationError, UnsupportedProfileError
from .fields import FieldModel
from .hprofile import HurstProfile
from .kernels import AsymptoticCovariance, LimitKernel, field_cov, tangent_cov
from .simulate import (GAUSSIAN_METHOD, RNG_NAME, CovMatrix, PartialSumSpec, ZField, factorize,
                       partial_sum_cov_exact, renormalize_cov, sample_paths)

REL_FLOOR = 1e-8
PASS, FAIL = "PASS", "FAIL"
TABLE_COLUMNS = ("N_or_eps", "max_abs_err", "max_rel_err")


def _g17(x) -> str:
    return format(float(x), ".17g")


@dataclass
class Criterion:
    name: str
    value: float
    tolerance: float
    verdict: str
    comparator: str = "<="
    note: str = ""


@dataclass
class Report:
    """Outcome of one check: scenario, error tables, slopes and verdicts."""

    scenario: dict
    parameters: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)
    audit: dict = field(default_factory=dict)

    def add(self, name, value, tolerance, ok=None, comparator="<=", note="") -> Criterion:
        """Record a verdict; by default PASS iff value <= tolerance."""
        value = float(value)
        if ok is None:
            ok = value <= tolerance if comparator == "<=" else value < tolerance
        c = Criterion(name, value, float(tolerance), PASS if ok else FAIL, comparator, note)
        self.criteria.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.verdict == PASS for c in self.criteria)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tables"] = {k: [list(map(float, r)) for r in v] for k, v in self.tables.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        crit = [Criterion(**c) for c in d.pop("criteria", [])]
        return cls(criteria=crit, **d)

    def table_csv(self, name: str) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(TABLE_COLUMNS)
        for row in self.tables[name]:
            w.writerow([_g17(x) for x in row])
        return buf.getvalue()


def scenario_of(profile: HurstProfile, asympt: AsymptoticCovariance, model: str | None = None) -> dict:
    return {"model": model, "profile": profile.to_dict(), "R": asympt.to_dict()}


def strictly_decreasing(seq) -> bool:
    return bool(np.all(np.diff(np.asarray(seq, dtype=float)) < 0))


def log2_slope(xs, ys) -> float:
    """Least-squares slope of log2(y) on log2(x)."""
    return float(np.polyfit(np.log2(np.asarray(xs, float)), np.log2(np.asarray(ys, float)), 1)[0])


def rel_error(approx, exact, floor: float = REL_FLOOR):
    approx, exact = np.asarray(approx), np.asarray(exact)
    return np.abs(approx - exact) / np.maximum(np.abs(exact), floor)


# -- Riemann-sum oracle ------------------------------------------------------


def _r_values(asympt: AsymptoticCovariance, h1, h2):
    """R(H1, H2) evaluated with scipy's gamma, independently of the package's own special functions."""
    if asympt.kind == "fwn":
        a = h1 + h2

        def csq(H):
            return np.pi / (H * special.gamma(2 * H) * np.sin(np.pi * H))

        return 0.5 * a * (a - 1) * csq(a / 2) / np.sqrt(csq(h1) * csq(h2))
    if asympt.kind == "farima":
        return _farima_r(h1 - 0.5, h2 - 0.5)
    return np.asarray(asympt(h1, h2), dtype=float)


def _farima_r(dl, de):
    # lim n^{1-dL-dE} sum_l psi_{n+l}(dL) psi_l(dE) = Gamma(1-dL-dE) / (Gamma(dL) Gamma(1-dL))
    return special.gamma(1 - dl - de) / (special.gamma(dl) * special.gamma(1 - dl))


def riemann_oracle_grid(profile: HurstProfile, asympt: AsymptoticCovariance, times, N: int,
                        M: int, band_correction: bool = True, chunk: int = 512) -> np.ndarray:
    """Riemann-sum approximation of the limit covariance on every pair of ``times``.

    The off-band sum (1/N^2) sum_{|j-k| > M} R*(j/N, k/N) is taken literally.
    The excluded band is worth about int R(h, h) 2 delta^{2h-1}/(2h-1) d theta
    with delta = (M + 1/2)/N, which is O((M/N)^{2h-1}) and so dominates the
    error at practical N; with ``band_correction`` it is added back.
    """
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    times = np.asarray(times, dtype=float)
    order = np.argsort(times)
    ts = times[order]
    counts = np.floor(ts * N + 1e-9).astype(np.int64)
    if np.any(np.diff(counts) <= 0):
        raise ValueError("times must be distinct on the 1/N grid")
    K = int(counts[-1])
    bounds = np.concatenate([[0], counts])
    nseg = len(ts)
    x = np.arange(1, K + 1) / N
    h = np.asarray(profile.eval(x), dtype=float)
    seg = np.searchsorted(bounds, np.arange(K), side="right") - 1
    blocks = np.zeros((nseg, nseg))
    # lower triangle j > k + M; R* is symmetric so the upper part is its transpose
    for lo in range(M + 1, K, chunk):
        hi = min(lo + chunk, K)
        kmax = hi - 1 - M
        j = np.arange(lo, hi)[:, None]
        k = np.arange(kmax)[None, :]
        hj, hk = h[lo:hi, None], h[None, :kmax]
        lag = (j - k) / N
        vals = _r_values(asympt, hj, hk) * np.exp((hj + hk - 2.0) * np.log(np.maximum(lag, 1e-300)))
        vals = np.where(j - k > M, vals, 0.0) / (N * N)
        cols = np.zeros((hi - lo, nseg))
        starts = bounds[:-1]
        live = starts < kmax
        cols[:, live] = np.add.reduceat(vals, starts[live], axis=1)
        np.add.at(blocks, seg[lo:hi], cols)
    blocks = blocks + blocks.T
    if band_correction:
        delta = (M + 0.5) / N
        nodes, weights = np.polynomial.legendre.leggauss(64)
        edges = np.concatenate([[0.0], counts / N])
        for p in range(nseg):
            a, b = edges[p], edges[p + 1]
            th = 0.5 * (a + b) + 0.5 * (b - a) * nodes
            hh = np.asarray(profile.eval(th), dtype=float)
            f = _r_values(asympt, hh, hh) * 2.0 * delta ** (2 * hh - 1) / (2 * hh - 1)
            blocks[p, p] += 0.5 * (b - a) * float(f @ weights)
    cov = np.cumsum(np.cumsum(blocks, axis=0), axis=1)
    cov = np.triu(cov) + np.triu(cov, 1).T
    inv = np.argsort(order)
    return cov[np.ix_(inv, inv)]


def riemann_oracle(profile, asympt, t: float, s: float, N: int, M: int, band_correction: bool = True) -> float:
    if t == s:
        return float(riemann_oracle_grid(profile, asympt, [t], N, M, band_correction)[0, 0])
    return float(riemann_oracle_grid(profile, asympt, [t, s], N, M, band_correction)[0, 1])


def oracle_report(profile, asympt, times, N=8192, M=4, tol=1e-3, rel_tol=1e-8, model=None,
                  max_panels: int = 10_000) -> Report:
    """Cross-check of the limit-covariance quadrature against the Riemann oracle on a grid."""
    kern = LimitKernel(profile, asympt, rel_tol=rel_tol, max_panels=max_panels)
    quad = kern.gram(times)
    orc = riemann_oracle_grid(profile, asympt, times, N, M)
    raw = riemann_oracle_grid(profile, asympt, times, N, M, band_correction=False)
    err = rel_error(orc, quad)
    rep = Report(scenario_of(profile, asympt, model), {"times": list(map(float, times)), "N": N, "M": M})
    rep.tables["oracle"] = [[N, float(np.max(np.abs(orc - quad))), float(np.max(err))]]
    rep.tables["oracle_uncorrected"] = [[N, float(np.max(np.abs(raw - quad))),
                                        float(np.max(rel_error(raw, quad)))]]
    rep.add("oracle_vs_quadrature_rel", float(np.max(err)), tol)
    rep.audit["limit_cov"] = quad.tolist()
    rep.audit["oracle"] = orc.tolist()
    return rep


# -- invariance principle ----------------------------------------------------


def invariance_report(model: FieldModel, profile: HurstProfile, N_sequence, time_grid,
                      tol: float = 0.05, rel_tol: float = 1e-8, threads: int = 1,
                      max_panels: int = 10_000) -> Report:
    """Relative error of the exact partial-sum covariance against the limit, along N."""
    Ns = [int(n) for n in N_sequence]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("N_sequence must be increasing")
    asympt = model.asympt
    limit = LimitKernel(profile, asympt, rel_tol=rel_tol, max_panels=max_panels).gram(time_grid)
    rows = []
    for N in Ns:
        cov = partial_sum_cov_exact(PartialSumSpec(model, profile, N, tuple(time_grid)), threads=threads)
        rows.append([N, float(np.max(np.abs(cov.matrix - limit))), float(np.max(rel_error(cov.matrix, limit)))])
    rep = Report(scenario_of(profile, asympt, model.kind),
                 {"N_sequence": Ns, "time_grid": list(map(float, time_grid))})
    rep.tables["invariance"] = rows
    rel = [r[2] for r in rows]
    if all(r > 0 for r in rel):
        rep.slopes["invariance_rel_err_vs_N"] = log2_slope(Ns, rel)
    # below ~1e-12 the error is roundoff (exact scenarios): treat as converged
    exact = max(rel) < 1e-12
    rep.add("invariance_decreasing", float(np.max(np.diff(rel), initial=-1.0)), 0.0,
            ok=exact or strictly_decreasing(rel), comparator="<",
            note="largest successive change of the max relative error")
    rep.add("invariance_final_rel_err", rel[-1], tol, comparator="<")
    rep.audit["limit_cov"] = limit.tolist()
    return rep


# -- tangent process ---------------------------------------------------------


def _signed_rect(kern: LimitKernel, t, dt, s, ds) -> float:
    """E[(S(t+dt) - S(t)) (S(s+ds) - S(s))] for signed dt, ds."""
    sign = math.copysign(1.0, dt) * math.copysign(1.0, ds)
    a0, a1 = sorted((t, t + dt))
    b0, b1 = sorted((s, s + ds))
    return sign * kern.rect(a0, a1, b0, b1)


def tangent_ratio(kern: LimitKernel, t, s, u, v, eps) -> float:
    h = kern.profile
    return _signed_rect(kern, t, eps * u, s, eps * v) / eps ** (h(t) + h(s))


def tangent_report(profile, asympt, base_points, lags, epsilon_sequence, distinct_pairs=(),
                   distinct_tol: float = 1e-2, exact_tol: float = 1e-7, rel_tol: float = 1e-10,
                   model=None, max_panels: int = 10_000) -> Report:
    """Normalized increment covariances against the tangent field along eps."""
    eps = [float(e) for e in epsilon_sequence]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon_sequence must be decreasing")
    kern = LimitKernel(profile, asympt, rel_tol=rel_tol, max_panels=max_panels)
    rep = Report(scenario_of(profile, asympt, model),
                 {"base_points": list(map(float, base_points)), "lags": [list(map(float, l)) for l in lags],
                  "eps": eps, "distinct_pairs": [list(map(float, p)) for p in distinct_pairs]})
    constant = profile.kind == "constant"
    for t in base_points:
        abs_errs, rel_errs = [], []
        for e in eps:
            a = r = 0.0
            for u, v in lags:
                target = float(tangent_cov(t, u, v, profile, asympt))
                val = tangent_ratio(kern, t, t, u, v, e)
                a = max(a, abs(val - target))
                r = max(r, abs(val - target) / max(abs(target), REL_FLOOR))
            abs_errs.append(a)
            rel_errs.append(r)
        name = f"tangent_t={t:g}"
        rep.tables[name] = [[e, a, r] for e, a, r in zip(eps, abs_errs, rel_errs)]
        if constant:
            rep.add(f"{name}_exact", max(rel_errs), exact_tol)
        else:
            ups = int(np.sum(np.diff(abs_errs) > 0))
            rep.add(f"{name}_decreasing", ups, 1, ok=ups <= 1,
                    note="number of increases along eps (one allowed for quadrature noise)")
            if all(x > 0 for x in abs_errs):
                rep.slopes[name] = log2_slope(eps, abs_errs)
    for t, s in distinct_pairs:
        vals = [abs(tangent_ratio(kern, t, s, 1.0, 1.0, e)) for e in eps]
        name = f"tangent_distinct_t={t:g}_s={s:g}"
        rep.tables[name] = [[e, v, v / REL_FLOOR] for e, v in zip(eps, vals)]
        rep.add(f"{name}_decreasing", int(np.sum(np.diff(vals) >= 0)), 0, ok=strictly_decreasing(vals))
        rep.add(f"{name}_final", vals[-1], distinct_tol, comparator="<")
        rep.slopes[name] = log2_slope(eps, vals)
    return rep


# -- Hölder exponent ---------------------------------------------------------


def dyadic_lags(cells: int, max_lag: int | None = None):
    top = cells // 2 if max_lag is None else max_lag
    lags, L = [], 1
    while L <= top:
        lags.append(L)
        L *= 2
    return lags


def holder_from_paths(paths: np.ndarray, dt: float, lags) -> tuple:
    """Slope / 2 of log mean squared increments against log lag; returns (estimate, moments)."""
    lags = [int(l) for l in lags if 0 < l < paths.shape[1]]
    if len(lags) < 4:
        raise EstimationError(f"need at least 4 usable lags, got {len(lags)}")
    moments = np.array([np.mean((paths[:, l:] - paths[:, :-l]) ** 2) for l in lags])
    if np.any(moments <= 0) or not np.all(np.isfinite(moments)):
        raise EstimationError("non-positive or non-finite increment moments")
    slope = np.polyfit(np.log(np.asarray(lags) * dt), np.log(moments), 1)[0]
    return float(slope / 2.0), moments


def fbm_increment_cov(H: float, cells: int, dt: float) -> np.ndarray:
    """Exact covariance of fBm increments over ``cells`` cells of width dt."""
    n = np.arange(cells)[:, None] - np.arange(cells)[None, :]
    n = np.abs(n).astype(float)
    return 0.5 * dt ** (2 * H) * ((n + 1) ** (2 * H) + np.abs(n - 1) ** (2 * H) - 2 * n ** (2 * H))


def holder_estimate(profile: HurstProfile | None, t0: float, window: float = 0.1, replicates: int = 1000,
                    seed: int = 0, asympt: AsymptoticCovariance | None = None, cells: int = 64,
                    increment_cov: np.ndarray | None = None, rel_tol: float = 1e-8,
                    threads: int = 1, max_panels: int = 10_000) -> tuple:
    """Local Hölder exponent at t0 from simulated paths of the limit process.

    Paths are sampled on ``cells`` cells of a window centred at t0 (from the
    exact increment covariance unless ``increment_cov`` is given). Returns
    ``(estimate, info)``.
    """
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    if window > 0.1 + 1e-12:
        raise ValueError("window must be <= 0.1 so that h varies little across it")
    lo = t0 - window / 2
    if lo < 0:
        raise ValueError("window must lie in t >= 0")
    dt = window / cells
    if increment_cov is None:
        edges = lo + dt * np.arange(cells + 1)
        increment_cov = LimitKernel(profile, asympt, rel_tol=rel_tol, max_panels=max_panels).increment_gram(edges)
    m = factorize(CovMatrix(increment_cov))
    inc = sample_paths(m, replicates, seed, threads=threads)
    paths = np.concatenate([np.zeros((replicates, 1)), np.cumsum(inc, axis=1)], axis=1)
    lags = dyadic_lags(cells)
    est, moments = holder_from_paths(paths, dt, lags)
    info = {"lags": lags, "moments": moments.tolist(), "dt": dt, "jitter": m.jitter,
            "rng": RNG_NAME, "gaussian": GAUSSIAN_METHOD, "seed": int(seed)}
    return est, info


# -- covariance of the integral representation ------------------------------


def representation_cov(profile: HurstProfile, asympt: AsymptoticCovariance, t: float, s: float,
                       dH: float = 1e-3, grid_step: float = 1.0 / 512) -> float:
    """Covariance of W(t, h(t)) - int_0^t h'(theta) dW/dH(theta, h(theta)) d theta.

    Built only from the limit-field covariance F = ``field_cov``: H-derivatives
    by central differences with step dH, theta-integrals by the midpoint rule.
    """
    if not profile.is_smooth:
        raise UnsupportedProfileError("the representation needs a twice differentiable profile")
    if asympt.kind not in ("fwn", "farima", "constant"):
        raise UnsupportedProfileError("the representation needs a smooth R (fwn, farima or constant)")

    def grid(T):
        n = max(1, int(round(T / grid_step)))
        x = (np.arange(n) + 0.5) * (T / n)
        return x, T / n

    def F(h1, h2, a, b):
        return np.asarray(field_cov(h1, h2, a, b, asympt), dtype=float)

    ht, hs = float(profile(t)), float(profile(s))
    xt, wt = grid(t)
    xs, ws = grid(s)
    gt, gs = np.asarray(profile(xt)), np.asarray(profile(xs))
    dt_, ds_ = np.asarray(profile.derivative(xt)), np.asarray(profile.derivative(xs))

    base = float(F(ht, hs, t, s))
    # d/dH2 F(t, h(t); sigma, H2) at H2 = h(sigma)
    d2 = (F(ht, gs + dH, t, xs) - F(ht, gs - dH, t, xs)) / (2 * dH)
    # d/dH1 F(theta, H1; s, h(s)) at H1 = h(theta)
    d1 = (F(gt + dH, hs, xt, s) - F(gt - dH, hs, xt, s)) / (2 * dH)
    H1, H2 = gt[:, None], gs[None, :]
    A, B = xt[:, None], xs[None, :]
    d12 = (F(H1 + dH, H2 + dH, A, B) - F(H1 + dH, H2 - dH, A, B)
           - F(H1 - dH, H2 + dH, A, B) + F(H1 - dH, H2 - dH, A, B)) / (4 * dH * dH)
    return (base - ws * float(ds_ @ d2) - wt * float(dt_ @ d1)
            + wt * ws * float(dt_ @ d12 @ ds_))


def representation_report(profile, asympt, t=1.0, s=1.0, dH=1e-3, grid_step=1 / 512, tol=1e-2,
                          refinements: int = 3, rel_tol=1e-10, model=None,
                          max_panels: int = 10_000) -> Report:
    """representation_cov against limit_cov, halving dH and the grid step together."""
    target = LimitKernel(profile, asympt, rel_tol=rel_tol, max_panels=max_panels).cov(t, s)
    rows = []
    for r in range(refinements):
        f = 2.0 ** -r
        val = representation_cov(profile, asympt, t, s, dH * f, grid_step * f)
        rows.append([grid_step * f, abs(val - target), abs(val - target) / max(abs(target), REL_FLOOR)])
    rep = Report(scenario_of(profile, asympt, model),
                 {"t": t, "s": s, "dH": dH, "grid_step": grid_step, "refinements": refinements})
    rep.tables["representation"] = rows
    rels = [r[2] for r in rows]
    rep.add("representation_rel_err", rels[0], tol, comparator="<")
    exact = max(rels) < 1e-9
    rep.add("representation_decreasing", int(np.sum(np.diff(rels) >= 0)), 0,
            ok=exact or strictly_decreasing(rels))
    if all(x > 0 for x in rels):
        rep.slopes["representation_rel_err_vs_step"] = log2_slope([r[0] for r in rows], rels)
    rep.audit["limit_cov"] = target
    return rep


# -- renormalization ---------------------------------------------------------


def renorm_report(model: FieldModel, hurst_pairs, fixed_N=(2, 4, 8), conv_N=(4, 16, 64),
                  fixed_tol: float = 1e-10, floor: float = 1e-12) -> Report:
    """T_N on the increment field Z (exact fixed point) and on the discrete field X (convergence).

    Entries checked are the diagonal and lag-1 covariances for every Hurst pair.
    Convergence errors that are already at roundoff (``floor``) count as
    non-increasing: a field equal in law to Z is left unchanged by T_N.
    """
    z = ZField(model.asympt)
    rep = Report({"model": model.kind, "profile": None, "R": model.asympt.to_dict()},
                 {"hurst_pairs": [list(map(float, p)) for p in hurst_pairs],
                  "fixed_N": list(fixed_N), "conv_N": list(conv_N)})
    fixed_err = 0.0
    for N in fixed_N:
        for h1, h2 in hurst_pairs:
            for lag in (0, 1):
                fixed_err = max(fixed_err, abs(renormalize_cov(z, N, 0, lag, h1, h2) - float(z.cov(0, lag, h1, h2))))
    rep.add("T_N_Z_equals_Z", fixed_err, fixed_tol)
    rows = []
    for N in conv_N:
        a = r = 0.0
        for h1, h2 in hurst_pairs:
            for lag in (0, 1):
                target = float(z.cov(0, lag, h1, h2))
                e = abs(renormalize_cov(model, N, 0, lag, h1, h2) - target)
                a, r = max(a, e), max(r, e / max(abs(target), REL_FLOOR))
        rows.append([N, a, r])
    rep.tables["renorm"] = rows
    errs = [row[1] for row in rows]
    ok = all(b < a or (a <= floor and b <= floor) for a, b in zip(errs, errs[1:]))
    rep.add("T_N_X_to_Z_decreasing", float(np.max(np.diff(errs), initial=-1.0)), 0.0, ok=ok,
            note=f"non-increasing down to a {floor:g} roundoff floor")
    return rep
