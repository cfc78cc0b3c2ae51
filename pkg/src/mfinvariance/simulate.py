"""Exact Gaussian laws of partial sums, factorization and path sampling.

Everything here is computed from covariances. Monte Carlo only enters through
``sample_paths``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPSDError, SizeLimitError
from .fields import FieldModel
from .hprofile import HurstProfile
from .kernels import AsymptoticCovariance, field_cov, z_cov

log = logging.getLogger(__name__)

MAX_TERMS = 100_000
_ROW_CHUNK = 256

JITTER_START = 1e-12
JITTER_ATTEMPTS = 3
RECON_TOL = 1e-9

RNG_NAME = "numpy.random.Philox (Philox4x64-10), key = (seed, replicate index)"
GAUSSIAN_METHOD = "numpy Generator.standard_normal (ziggurat)"


@dataclass
class CovMatrix:
    """Symmetric covariance matrix with an optional factor Sigma = L L^T.

    Only the upper triangle of the input is read; the lower one is mirrored,
    so the stored matrix is exactly symmetric.
    """

    matrix: np.ndarray
    factor: np.ndarray | None = None
    state: str = "none"  # none | cholesky | low-rank
    jitter: list = field(default_factory=list)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float, ndmin=2)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance matrix must be square")
        upper = np.triu(m)
        self.matrix = upper + np.triu(m, 1).T

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def reconstruction_error(self) -> float:
        if self.factor is None:
            raise ValueError("matrix is not factorized")
        return float(np.max(np.abs(self.factor @ self.factor.T - self.matrix), initial=0.0))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0]) if self.dim else 0.0


@dataclass(frozen=True)
class PartialSumSpec:
    """S(t) = sum_{n <= floor(N t)} X_n(h(n/N)) / N^{h(n/N)} at the given times."""

    model: FieldModel
    profile: HurstProfile
    N: int
    eval_times: tuple

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be an integer >= 1")
        t = np.asarray(self.eval_times, dtype=float)
        if t.ndim != 1 or len(t) == 0:
            raise ValueError("eval_times must be a non-empty list")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("eval_times must be nonnegative and strictly increasing")
        object.__setattr__(self, "eval_times", tuple(float(x) for x in t))

    @property
    def counts(self) -> np.ndarray:
        # small guard against t*N landing just below an integer
        return np.floor(np.asarray(self.eval_times) * self.N + 1e-9).astype(np.int64)


def _segment_block_sums(value_rows, counts, threads=1):
    """Sum a K x K matrix (given by row chunks) over the segments cut by ``counts``.

    ``value_rows(lo, hi)`` returns rows lo..hi-1 (0-based) of the full matrix.
    Chunks are reduced in a fixed order, so the result does not depend on
    the number of threads.
    """
    K = int(counts[-1])
    bounds = np.concatenate([[0], counts])
    seg_starts = bounds[:-1]
    nonempty = np.diff(bounds) > 0
    nseg = len(counts)
    chunks = [(lo, min(lo + _ROW_CHUNK, K)) for lo in range(0, K, _ROW_CHUNK)]

    def work(chunk):
        lo, hi = chunk
        rows = value_rows(lo, hi)
        cols = np.zeros((hi - lo, nseg))
        cols[:, nonempty] = np.add.reduceat(rows, seg_starts[nonempty], axis=1)
        seg_of_row = np.searchsorted(bounds, np.arange(lo, hi), side="right") - 1
        out = np.zeros((nseg, nseg))
        np.add.at(out, seg_of_row, cols)
        return out

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    total = np.zeros((nseg, nseg))
    for p in parts:
        total += p
    return total


def partial_sum_cov_exact(spec: PartialSumSpec, threads: int = 1) -> CovMatrix:
    """E[S(t_i) S(t_j)] by exact double summation of the field covariance."""
    counts = spec.counts
    K = int(counts[-1])
    if K > MAX_TERMS:
        raise SizeLimitError(f"floor(N * max t) = {K} exceeds the limit of {MAX_TERMS} terms")
    if K == 0:
        return CovMatrix(np.zeros((len(counts), len(counts))))
    n = np.arange(1, K + 1, dtype=float)
    h = np.asarray(spec.profile.eval(n / spec.N), dtype=float)
    scale = np.exp(-h * np.log(spec.N))

    def rows(lo, hi):
        c = spec.model.cov(n[lo:hi, None], n[None, :], h[lo:hi, None], h[None, :])
        return c * scale[lo:hi, None] * scale[None, :]

    blocks = _segment_block_sums(rows, counts, threads)
    cov = np.cumsum(np.cumsum(blocks, axis=0), axis=1)
    return CovMatrix(cov)


def _lag_counts(k1: int, k2: int):
    """Lags l = n - m and their multiplicities for 1 <= n <= k1, 1 <= m <= k2."""
    lags = np.arange(-(k2 - 1), k1, dtype=np.int64)
    cnt = np.minimum(k1, k2 + lags) - np.maximum(1, 1 + lags) + 1
    return lags, np.maximum(cnt, 0)


def field_grid_cov(points, asympt: AsymptoticCovariance | None = None,
                   model: FieldModel | None = None, N: int | None = None) -> CovMatrix:
    """Gram matrix of the field on a list of (t, H) points.

    With ``asympt`` this is the limit field; with ``model`` and ``N`` it is the
    frozen-H partial sum S^N(t, H) = N^{-H} sum_{n <= Nt} X_n(H).
    """
    pts = [(float(t), float(H)) for t, H in points]
    for t, H in pts:
        if t < 0 or not 0.5 < H < 1:
            raise ValueError(f"grid point {(t, H)} needs t >= 0 and H in (1/2, 1)")
    k = len(pts)
    out = np.zeros((k, k))
    if (asympt is None) == (model is None):
        raise ValueError("pass exactly one of asympt (limit field) or model (finite N)")
    for i in range(k):
        for j in range(i, k):
            (t, h1), (s, h2) = pts[i], pts[j]
            if asympt is not None:
                out[i, j] = field_cov(h1, h2, t, s, asympt)
                continue
            k1, k2 = int(np.floor(N * t + 1e-9)), int(np.floor(N * s + 1e-9))
            if k1 == 0 or k2 == 0:
                continue
            lags, cnt = _lag_counts(k1, k2)
            c = model.cov(lags, 0, h1, h2)
            out[i, j] = float(np.dot(cnt, c)) * float(N) ** (-h1 - h2)
    return CovMatrix(out)


def factorize(m: CovMatrix) -> CovMatrix:
    """Cholesky factor with bounded diagonal jitter, eigen fallback for singular PSD input.

    Jitter starts at 1e-12 trace/dim and grows tenfold for up to three
    attempts; every attempt is recorded in ``m.jitter``.
    """
    a = m.matrix
    n = m.dim
    scale = float(np.max(np.abs(a), initial=0.0))
    m.jitter = []
    if scale == 0.0:
        m.factor, m.state = np.zeros_like(a), "low-rank"
        return m
    base = max(float(np.trace(a)) / n, 0.0)
    eps = 0.0
    for attempt in range(JITTER_ATTEMPTS + 1):
        try:
            L = np.linalg.cholesky(a + eps * np.eye(n))
        except np.linalg.LinAlgError:
            L = None
        m.jitter.append({"attempt": attempt, "jitter": eps, "ok": L is not None})
        if L is not None and np.max(np.abs(L @ L.T - a)) <= RECON_TOL * scale:
            m.factor, m.state = L, "cholesky"
            return m
        eps = JITTER_START * base if attempt == 0 else eps * 10.0
    # singular but PSD up to roundoff (e.g. t = 0 rows): symmetric square root
    w, v = np.linalg.eigh(a)
    budget = JITTER_START * 10 ** (JITTER_ATTEMPTS - 1) * base
    if w[0] < -budget:
        raise NotPSDError(f"matrix is not positive semidefinite: min eigenvalue {w[0]:.3g} "
                          f"below the jitter budget -{budget:.3g}")
    L = v * np.sqrt(np.clip(w, 0.0, None))
    if np.max(np.abs(L @ L.T - a)) > RECON_TOL * scale:
        raise NotPSDError("factor reconstruction error exceeds 1e-9 relative")
    m.factor, m.state = L, "low-rank"
    m.jitter.append({"attempt": "eigen", "jitter": 0.0, "ok": True})
    return m


def replicate_generator(seed: int, replicate: int) -> np.random.Generator:
    """Independent counter-based stream for one replicate."""
    key = (int(seed) % 2**64) | (int(replicate) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_paths(m: CovMatrix, replicates: int, seed: int, threads: int = 1) -> np.ndarray:
    """Rows are centered Gaussian vectors with covariance ``m``.

    Row r depends only on (seed, r, dimension), not on scheduling.
    """
    if m.factor is None:
        raise ValueError("factorize the matrix before sampling")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    n = m.dim
    cols = m.factor.shape[1]

    def draw(r):
        return replicate_generator(seed, r).standard_normal(cols)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            z = np.array(list(pool.map(draw, range(replicates))))
    else:
        z = np.array([draw(r) for r in range(replicates)])
    return (z @ m.factor.T).reshape(replicates, n)


@dataclass(frozen=True)
class ZField:
    """Increments Z_n(H) = W(n, H) - W(n-1, H) of the limit field, as a covariance rule."""

    asympt: AsymptoticCovariance

    def cov(self, j, k, h1, h2):
        return z_cov(j, k, h1, h2, self.asympt)

    def __call__(self, j, k, h1, h2):
        return self.cov(j, k, h1, h2)


def renormalize_cov(model, N: int, j: int, k: int, h1: float, h2: float) -> float:
    """cov((T_N X)_j(H1), (T_N X)_k(H2)), (T_N X)_n(H) = N^{-H} sum_{i=nN+1}^{(n+1)N} X_i(H)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    a = np.arange(j * N + 1, (j + 1) * N + 1, dtype=float)
    b = np.arange(k * N + 1, (k + 1) * N + 1, dtype=float)
    c = model.cov(a[:, None], b[None, :], h1, h2)
    return float(np.sum(c) * float(N) ** (-h1 - h2))
