import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfinvariance.errors import NotPSDError, SizeLimitError
from mfinvariance.fields import FieldModel, farima_cov, fwn_cov
from mfinvariance.hprofile import constant, sinusoidal
from mfinvariance.kernels import FARIMA, FWN, AsymptoticCovariance, LimitKernel, z_cov
from mfinvariance.simulate import (CovMatrix, PartialSumSpec, ZField, factorize, field_grid_cov,
                                   partial_sum_cov_exact, renormalize_cov, replicate_generator, sample_paths)

SINE = sinusoidal(0.75, 0.15)


def fbm_block(N, H, ts):
    k = np.floor(np.asarray(ts) * N + 1e-9)
    a, b = k[:, None], k[None, :]
    return N ** (-2 * H) * 0.5 * (a ** (2 * H) + b ** (2 * H) - np.abs(a - b) ** (2 * H))


@pytest.mark.parametrize("N", [1, 7, 64, 256, 1024])
def test_constant_fwn_unit_variance(N):
    c = partial_sum_cov_exact(PartialSumSpec(FieldModel("fwn"), constant(0.75), N, (1.0,)))
    assert abs(c.matrix[0, 0] - 1.0) < 1e-12


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_constant_fwn_matches_fbm_block_sums(H):
    ts = (0.1, 0.37, 0.5, 1.0, 1.6)
    c = partial_sum_cov_exact(PartialSumSpec(FieldModel("fwn"), constant(H), 100, ts))
    np.testing.assert_allclose(c.matrix, fbm_block(100, H, ts), rtol=0, atol=1e-12)


def test_single_term():
    c = partial_sum_cov_exact(PartialSumSpec(FieldModel("farima"), SINE, 1, (1.0,)))
    h = SINE(1.0)
    assert c.matrix[0, 0] == pytest.approx(farima_cov(1, 1, h, h), rel=1e-15)


def test_partial_sum_direct_double_sum():
    spec = PartialSumSpec(FieldModel("farima"), SINE, 16, (0.5, 1.0))
    n = np.arange(1, 17)
    h = SINE(n / 16)
    full = farima_cov(n[:, None], n[None, :], h[:, None], h[None, :]) * 16.0 ** -(h[:, None] + h[None, :])
    ref = np.array([[full[:8, :8].sum(), full[:8].sum()], [full[:, :8].sum(), full.sum()]])
    np.testing.assert_allclose(partial_sum_cov_exact(spec).matrix, ref, rtol=1e-13)


def test_partial_sum_psd_and_symmetric():
    m = partial_sum_cov_exact(PartialSumSpec(FieldModel("farima"), SINE, 64, tuple(np.linspace(0.1, 2, 12))))
    assert np.array_equal(m.matrix, m.matrix.T)
    assert m.min_eigenvalue() >= -1e-12 * np.trace(m.matrix)


def test_partial_sum_thread_independent():
    spec = PartialSumSpec(FieldModel("fwn"), SINE, 1000, (0.3, 0.9, 1.0))
    a = partial_sum_cov_exact(spec, threads=1).matrix
    b = partial_sum_cov_exact(spec, threads=3).matrix
    assert a.tobytes() == b.tobytes()


def test_size_guard():
    with pytest.raises(SizeLimitError):
        partial_sum_cov_exact(PartialSumSpec(FieldModel("fwn"), SINE, 100_000, (1.5,)))


def test_partial_sum_spec_validation():
    with pytest.raises(ValueError):
        PartialSumSpec(FieldModel("fwn"), SINE, 0, (1.0,))
    with pytest.raises(ValueError):
        PartialSumSpec(FieldModel("fwn"), SINE, 4, (1.0, 0.5))
    with pytest.raises(ValueError):
        PartialSumSpec(FieldModel("fwn"), SINE, 4, (-1.0,))


@pytest.mark.parametrize("kind", ["fwn", "farima"])
def test_partial_sums_converge_to_limit(kind):
    ts = (0.5, 1.0)
    limit = LimitKernel(SINE, FieldModel(kind).asympt).gram(ts)
    errs = [np.max(np.abs(partial_sum_cov_exact(PartialSumSpec(FieldModel(kind), SINE, N, ts)).matrix - limit))
            for N in (64, 256, 1024)]
    assert errs[0] > errs[1] > errs[2]


def test_farima_convergence_frozen_anchor():
    # N = 1024, t = s = 1; regression anchor for the decay sequence
    v = partial_sum_cov_exact(PartialSumSpec(FieldModel("farima"), SINE, 1024, (1.0,))).matrix[0, 0]
    lim = LimitKernel(SINE, FARIMA)(1.0, 1.0)
    assert abs(v - lim) / lim < 2e-4


def test_field_grid_limit():
    R = AsymptoticCovariance("constant", value=0.375)
    g = field_grid_cov([(1.0, 0.75)], asympt=R)
    assert g.matrix[0, 0] == pytest.approx(1.0)
    g = field_grid_cov([(1.0, 0.75), (2.0, 0.75)], asympt=R)
    assert g.matrix[0, 1] == pytest.approx(0.5 * (1 + 2 ** 1.5 - 1))


def test_field_grid_limit_psd():
    pts = [(t, H) for t in (0.5, 1.0, 1.5) for H in (0.6, 0.75, 0.9)]
    g = field_grid_cov(pts[:9:4], asympt=FARIMA)
    assert g.min_eigenvalue() >= -1e-8 * np.trace(g.matrix)
    g = field_grid_cov(pts, asympt=FARIMA)
    assert g.min_eigenvalue() >= -1e-8 * np.trace(g.matrix)


def test_field_grid_finite_N_lag_sum():
    N, pts = 12, [(0.5, 0.6), (1.0, 0.8)]
    g = field_grid_cov(pts, model=FieldModel("farima"), N=N)
    n, m = np.arange(1, 7), np.arange(1, 13)
    ref = farima_cov(n[:, None], m[None, :], 0.6, 0.8).sum() * N ** (-1.4)
    assert g.matrix[0, 1] == pytest.approx(ref, rel=1e-13)


def test_field_grid_finite_N_converges():
    pts = [(1.0, 0.6), (0.5, 0.8), (1.0, 0.9)]
    lim = field_grid_cov(pts, asympt=FARIMA).matrix
    errs = [np.max(np.abs(field_grid_cov(pts, model=FieldModel("farima"), N=N).matrix - lim))
            for N in (64, 256, 1024, 4096)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_field_grid_fwn_exact_at_every_N():
    # frozen-H FWN partial sums are jointly self-similar: no discretisation error at all
    pts = [(1.0, 0.6), (0.5, 0.8), (1.0, 0.9)]
    lim = field_grid_cov(pts, asympt=FWN).matrix
    for N in (64, 1024):
        np.testing.assert_allclose(field_grid_cov(pts, model=FieldModel("fwn"), N=N).matrix, lim, rtol=0, atol=1e-12)


def test_factorize_closed_forms():
    m = factorize(CovMatrix(np.eye(3)))
    np.testing.assert_array_equal(m.factor, np.eye(3))
    m = factorize(CovMatrix([[1.0, 0.5], [0.5, 1.0]]))
    np.testing.assert_allclose(m.factor, [[1, 0], [0.5, np.sqrt(0.75)]], rtol=1e-15)
    assert m.state == "cholesky"


def test_factorize_round_trip_200():
    ts = tuple(np.arange(1, 201) / 200)
    m = factorize(partial_sum_cov_exact(PartialSumSpec(FieldModel("fwn"), SINE, 200, ts)))
    assert m.reconstruction_error() < 1e-9 * np.max(np.abs(m.matrix))
    assert len(m.jitter) <= 4


def test_factorize_singular_psd():
    v = np.array([1.0, 2.0, 3.0])
    m = factorize(CovMatrix(np.outer(v, v)))
    assert m.reconstruction_error() < 1e-9 * 9
    assert m.state in ("cholesky", "low-rank")


def test_factorize_rejects_indefinite():
    with pytest.raises(NotPSDError):
        factorize(CovMatrix([[1.0, 2.0], [2.0, 1.0]]))


def test_covmatrix_uses_upper_triangle():
    m = CovMatrix([[1.0, 0.3], [99.0, 2.0]])
    assert m.matrix[1, 0] == 0.3


def test_sample_variance_clt():
    m = factorize(CovMatrix([[1.0]]))
    x = sample_paths(m, 100_000, seed=11)
    assert 0.98 <= x.var() <= 1.02


def test_sample_zero_matrix():
    m = factorize(CovMatrix(np.zeros((3, 3))))
    assert np.all(sample_paths(m, 10, seed=1) == 0.0)


@given(st.integers(0, 2 ** 64 - 1))
@settings(max_examples=10)
def test_sample_reproducible(seed):
    m = factorize(CovMatrix([[2.0, 0.3], [0.3, 1.0]]))
    a = sample_paths(m, 20, seed)
    b = sample_paths(m, 20, seed, threads=4)
    assert a.tobytes() == b.tobytes()


def test_replicate_prefix_stable():
    # replicate r does not depend on how many replicates are drawn
    m = factorize(CovMatrix([[1.0, 0.2], [0.2, 1.0]]))
    assert np.array_equal(sample_paths(m, 5, 3)[:3], sample_paths(m, 3, 3))
    assert not np.array_equal(replicate_generator(3, 0).standard_normal(4),
                              replicate_generator(3, 1).standard_normal(4))


def test_sample_covariance_within_5se():
    ts = (0.25, 0.5, 1.0)
    m = factorize(partial_sum_cov_exact(PartialSumSpec(FieldModel("farima"), SINE, 64, ts)))
    n = 10_000
    x = sample_paths(m, n, seed=2024)
    emp = x.T @ x / n
    d = np.sqrt(np.diag(m.matrix))
    se = np.sqrt((m.matrix ** 2 + np.outer(d, d) ** 2) / n)
    assert np.all(np.abs(emp - m.matrix) <= 5 * se)


def test_renormalize_identity():
    for j, k in ((0, 0), (0, 1), (3, 1)):
        assert renormalize_cov(FieldModel("farima"), 1, j, k, 0.6, 0.8) == farima_cov(j + 1, k + 1, 0.6, 0.8)


@pytest.mark.parametrize("asy", [FWN, FARIMA])
@pytest.mark.parametrize("N", [2, 4, 8])
def test_z_fixed_point(asy, N):
    z = ZField(asy)
    for h1, h2 in ((0.7, 0.7), (0.6, 0.8), (0.8, 0.6)):
        for lag in (0, 1):
            assert abs(renormalize_cov(z, N, 0, lag, h1, h2) - z_cov(0, lag, h1, h2, asy)) < 1e-10


def test_fwn_is_its_own_fixed_point():
    # the FWN field equals Z in law for its own R, so T_N leaves it unchanged
    for N in (4, 16, 64):
        assert abs(renormalize_cov(FieldModel("fwn"), N, 0, 1, 0.6, 0.8) - fwn_cov(1, 0, 0.6, 0.8)) < 1e-12


def test_farima_renormalization_converges():
    z = ZField(FARIMA)
    errs = [abs(renormalize_cov(FieldModel("farima"), N, 0, 1, 0.7, 0.7) - z.cov(0, 1, 0.7, 0.7))
            for N in (4, 16, 64)]
    assert errs[0] > errs[1] > errs[2]
