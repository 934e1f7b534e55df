"""Pull-back algebra tests: singular values against a brute-force
generalized-eigenvalue oracle, frame invariance, flag monotonicity, and the
equivariant closed forms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmflow.errors import DegenerateGram, PoleEvaluation
from hmflow.pullback import (
    DifferentialSample,
    analyze_differential,
    analyze_equivariant,
    equivariant_lambdas,
)


def random_sample(rng, n, m, scale=1.0):
    def spd(k):
        A = rng.standard_normal((k, k))
        return A @ A.T + k * np.eye(k)

    dF = scale * rng.standard_normal((m, n))
    return DifferentialSample(dF=dF, g_gram=spd(n), h_gram=spd(m))


def oracle_lambdas(sample):
    """Singular values by brute force: sqrt of eigenvalues of
    g^{-1} dF^T h dF, descending, zero-padded."""
    g, h, dF = sample.g_gram, sample.h_gram, sample.dF
    n = g.shape[0]
    M = np.linalg.solve(g, dF.T @ h @ dF)
    ev = np.sort(np.real(np.linalg.eigvals(M)))[::-1]
    ev = np.clip(ev, 0.0, None)
    return np.sqrt(ev[:n])


dims = st.tuples(st.integers(1, 4), st.integers(1, 4))


@settings(max_examples=200, deadline=None)
@given(dims=dims, seed=st.integers(0, 2**31 - 1),
       scale=st.floats(0.01, 3.0))
def test_oracle_agreement(dims, seed, scale):
    n, m = dims
    rng = np.random.default_rng(seed)
    sample = random_sample(rng, n, m, scale)
    report = analyze_differential(sample)
    lam = np.asarray(report.lambdas)
    ora = oracle_lambdas(sample)
    # compare squared values: sqrt amplifies noise at near-zero eigenvalues
    tol = 1e-10 * (1.0 + float(np.max(ora) ** 2))
    assert np.max(np.abs(lam**2 - ora**2)) <= tol


@settings(max_examples=200, deadline=None)
@given(dims=dims, seed=st.integers(0, 2**31 - 1))
def test_flag_monotonicity(dims, seed):
    n, m = dims
    rng = np.random.default_rng(seed)
    report = analyze_differential(random_sample(rng, n, m, rng.uniform(0.1, 2.0)))
    if report.distance_nonincreasing:
        assert report.two_nonnegative
    if report.two_nonnegative:
        assert report.area_nonincreasing


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_frame_invariance(seed):
    """Orthonormal-frame samples are invariant under independent rotations of
    domain and target."""
    rng = np.random.default_rng(seed)
    n, m = 3, 3
    dF = rng.standard_normal((m, n))
    Q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Q2, _ = np.linalg.qr(rng.standard_normal((m, m)))
    a = analyze_differential(DifferentialSample.orthonormal(dF))
    b = analyze_differential(DifferentialSample.orthonormal(Q2 @ dF @ Q1))
    assert np.max(np.abs(np.asarray(a.lambdas) - np.asarray(b.lambdas))) <= 1e-10
    assert abs(a.two_nonneg_margin - b.two_nonneg_margin) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_alpha_eigs_two_ways(seed):
    """alpha_eigs agree with a direct eigendecomposition of g - F*h in a
    g-orthonormal frame."""
    rng = np.random.default_rng(seed)
    sample = random_sample(rng, 3, 4, 0.7)
    report = analyze_differential(sample)
    g, h, dF = sample.g_gram, sample.h_gram, sample.dF
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    pull = dF.T @ h @ dF
    alpha_on = Linv @ (g - pull) @ Linv.T
    direct = np.sort(np.linalg.eigvalsh(alpha_on))
    assert np.max(np.abs(np.asarray(report.alpha_eigs) - direct)) <= 1e-10


def test_report_invariants():
    dF = np.diag([1.2, 0.4])
    report = analyze_differential(DifferentialSample.orthonormal(dF))
    assert np.allclose(report.lambdas, [1.2, 0.4])
    assert np.allclose(report.alpha_eigs, [1 - 1.44, 1 - 0.16])
    assert abs(report.two_nonneg_margin - (2 - 1.44 - 0.16)) <= 1e-14
    assert not report.distance_nonincreasing
    assert report.two_nonnegative
    assert report.area_nonincreasing
    assert abs(report.energy_density - (1.44 + 0.16)) <= 1e-14


def test_degenerate_gram_rejected():
    with pytest.raises(DegenerateGram):
        DifferentialSample(dF=np.eye(2), g_gram=np.zeros((2, 2)),
                           h_gram=np.eye(2))


def test_equivariant_closed_form_vs_coordinate_frame():
    """The closed-form singular values match analyze_differential on the
    coordinate-frame Grams of a rotationally symmetric map."""
    rng = np.random.default_rng(3)
    n, rho_m, rho_n = 3, 1.3, 0.8
    for _ in range(50):
        r = rng.uniform(0.2, np.pi - 0.2)
        psi = rng.uniform(0.1, np.pi - 0.1)
        dpsi = rng.uniform(-2.0, 2.0)
        g = np.diag([rho_m**2] + [rho_m**2 * np.sin(r) ** 2] * (n - 1))
        h = np.diag([rho_n**2] + [rho_n**2 * np.sin(psi) ** 2] * (n - 1))
        dF = np.diag([dpsi] + [1.0] * (n - 1))
        report = analyze_differential(
            DifferentialSample(dF=dF, g_gram=g, h_gram=h)
        )
        lam_r, lam_t = equivariant_lambdas(
            np.array([psi]), np.array([dpsi]), np.array([r]), n, rho_n, rho_m
        )
        expected = np.sort(np.concatenate([[lam_r[0]], [lam_t[0]] * (n - 1)]))[::-1]
        assert np.max(np.abs(report.lambdas - expected)) <= 1e-12


def test_analyze_equivariant_examples():
    report = analyze_equivariant(psi=np.pi / 2, dpsi=1.0, r=np.pi / 2, n=2)
    assert np.allclose(report.lambdas, [1.0, 1.0])
    assert abs(report.two_nonneg_margin) <= 1e-14

    with pytest.raises(PoleEvaluation):
        analyze_equivariant(psi=0.0, dpsi=1.0, r=0.0, n=2)
