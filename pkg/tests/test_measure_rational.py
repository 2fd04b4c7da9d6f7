import numpy as np
import pytest
from hypothesis import given, strategies as st

from koopspec import dictionary as dc, dynamics as dy, galerkin as ga, quadrature as qd
from koopspec import measure_rational as mr
from koopspec.errors import ArgumentError, ResourceError

THETA = np.linspace(-np.pi, np.pi, 41)


def _identity_mats(n=6, M=40):
    rule = qd.gauss_legendre(M, (-1, 1))
    snap = dy.generate_snapshots(dy.identity(), rule.nodes, 2, rule.weights)
    d = dc.TensorDictionary.univariate(dc.Axis("legendre_transplanted", (-1, 1)), n)
    mats = ga.assemble(snap, d)
    a = np.zeros(n, dtype=complex)
    a[0] = 1.0 / np.sqrt(mats.G[0, 0].real)
    return mats, a


def _cmv(n):
    mats = ga.assemble_exact(dy.cmv(n_store=max(4 * n, 64)), n)
    a = np.zeros(n, dtype=complex)
    a[0] = 1.0
    return mats, a


def _cmv_sparse(n):
    mats = ga.assemble_exact(dy.cmv(n_store=n + 8), n, sparse=True)
    a = np.zeros(n, dtype=complex)
    a[0] = 1.0
    return mats, a


# -- coefficients -----------------------------------------------------------

def test_m1_coefficients():
    k = mr.kernel_coeffs(1, 0.3)
    np.testing.assert_allclose(k.c, [1.0])
    np.testing.assert_allclose(k.d, [1.0])


def test_table_m2():
    k = mr.kernel_coeffs(2, 0.1)
    np.testing.assert_allclose(k.d[0], (1 - 3j) / 2, atol=1e-12)
    np.testing.assert_allclose(k.c[0], (3 + 10j) / 6, atol=1e-12)
    np.testing.assert_allclose(k.d[1], np.conj(k.d[0]), atol=1e-12)
    np.testing.assert_allclose(k.c[1], np.conj(k.c[0]), atol=1e-12)


def test_table_m3():
    k = mr.kernel_coeffs(3, 0.1)
    np.testing.assert_allclose(k.d, [-2 - 1j, 5, -2 + 1j], atol=1e-12)
    np.testing.assert_allclose(k.c, [(-202 + 79j) / 80, 121 / 20, (-202 - 79j) / 80], atol=1e-12)


@pytest.mark.parametrize("m", range(1, 9))
@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_vandermonde_residual_and_symmetry(m, eps):
    k = mr.kernel_coeffs(m, eps)
    e1 = np.eye(m)[0]
    for x, u in ((k.nodes, k.d), (k.zeta, k.c)):
        V = np.vander(x, m, increasing=True).T
        assert np.linalg.norm(V @ u - e1) <= 1e-12 * max(1.0, np.linalg.norm(u)) * np.linalg.norm(V)
    np.testing.assert_allclose(k.d.sum(), 1, atol=1e-9)
    np.testing.assert_allclose(k.c.sum(), 1, atol=1e-9 * max(1, np.abs(k.c).max()))
    np.testing.assert_allclose(k.d[::-1], np.conj(k.d), atol=1e-9 * max(1, np.abs(k.d).max()))
    np.testing.assert_allclose(k.c[::-1], np.conj(k.c), atol=1e-9 * max(1, np.abs(k.c).max()))


@given(st.lists(st.complex_numbers(min_magnitude=0.1, max_magnitude=3), min_size=1, max_size=6,
                unique=True), st.integers(0, 5))
def test_vandermonde_solve_random(x, j):
    x = np.array(x)
    if len(x) > 1 and np.min(np.abs(x[:, None] - x[None, :]) + np.eye(len(x))) < 0.2:
        return
    b = np.zeros(len(x), dtype=complex)
    b[j % len(x)] = 1.0
    u = mr.vandermonde_solve(x, b)
    V = np.vander(x, len(x), increasing=True).T
    np.testing.assert_allclose(V @ u, b, atol=1e-8 * max(1.0, np.abs(u).max()))


def test_coefficient_errors():
    with pytest.raises(ResourceError):
        mr.kernel_coeffs(9, 0.1)
    with pytest.raises(ArgumentError):
        mr.kernel_coeffs(2, 0.1, nodes=[1 + 1j, 1 + 1j])
    with pytest.raises(ArgumentError):
        mr.kernel_coeffs(2, 0.1, nodes=[1 + 1j, -1 + 0j])
    with pytest.raises(ArgumentError):
        mr.kernel_coeffs(2, 0.0)
    with pytest.raises(ArgumentError):
        mr.kernel_coeffs(0, 0.1)


# -- kernel values ------------------------------------------------------------

@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_m1_is_poisson(eps):
    k = mr.kernel_coeffs(1, eps)
    np.testing.assert_allclose(mr.kernel_eval(k, THETA), mr.poisson_kernel(eps, THETA), rtol=0, atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 6])
@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_kernel_normalized(m, eps):
    k = mr.kernel_coeffs(m, eps)
    t = np.linspace(-np.pi, np.pi, 200001)
    assert abs(np.trapezoid(mr.kernel_eval(k, t), t) - 1) < 1e-8


def test_m6_profile_lobes():
    k = mr.kernel_coeffs(6, 1.0)
    t = np.linspace(0, np.pi, 20001)
    v = mr.kernel_eval(k, t)
    assert np.argmax(v) == 0
    assert np.sum(np.diff(np.sign(v)) != 0) >= 2  # alternating lobes away from the peak


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_kernel_moments(m, eps):
    k = mr.kernel_coeffs(m, eps)
    t = np.linspace(-np.pi, np.pi, 400001)
    K = mr.kernel_eval(k, -t, real=False)
    for n in range(1, m):
        mom = np.trapezoid(K * np.exp(1j * n * t), t)
        # the constant is not pinned down; 50 covers the worst case seen for m<=4
        assert abs(mom - 1) <= 50 * eps ** m * np.log(1 / eps) + 1e-9


@pytest.mark.parametrize("m", [2, 3, 4])
def test_kernel_decay(m):
    for eps in (0.5, 0.1, 0.02):
        k = mr.kernel_coeffs(m, eps)
        t = np.linspace(-np.pi, np.pi, 2001)
        ratio = np.abs(mr.kernel_eval(k, t, real=False)) * (eps + np.abs(t)) ** (m + 1) / eps ** m
        assert ratio.max() < 10


# -- measure evaluation ------------------------------------------------------

def test_identity_measure_equals_kernel():
    mats, a = _identity_mats()
    k = mr.kernel_coeffs(3, 0.2)
    est = mr.measure_eval(mats, a, k, [0.0, np.pi, 1.0])
    np.testing.assert_allclose(est.values, mr.kernel_eval(k, [0.0, np.pi, 1.0]), rtol=1e-10, atol=1e-10)


def test_cmv_m6_relative_error():
    mats, a = _cmv(800)
    k = mr.kernel_coeffs(6, 0.05)
    est = mr.measure_eval(mats, a, k, [0.2], method="direct")
    rho = dy.rogers_szego_density(0.2)
    assert abs(est.values[0] - rho) / rho <= 1e-4


def test_schur_matches_direct(rng):
    n = 12
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    G = X.conj().T @ X + n * np.eye(n)
    A = 0.3 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    mats = ga.GalerkinMatrices(G, A, G, False)
    a = rng.standard_normal(n) + 0j
    a /= np.sqrt(np.vdot(a, G @ a).real)
    k = mr.kernel_coeffs(4, 0.3)
    s = mr.measure_eval(mats, a, k, THETA, method="schur").values
    d = mr.measure_eval(mats, a, k, THETA, method="direct").values
    np.testing.assert_allclose(s, d, rtol=0, atol=1e-10 * max(1, np.abs(d).max()))


def test_measure_requires_normalization():
    mats, a = _cmv(20)
    with pytest.raises(ArgumentError):
        mr.measure_eval(mats, 2 * a, mr.kernel_coeffs(1, 0.1), [0.0])


def test_resolvent_norm_guard():
    mats, a = _cmv(60)
    for lam in (1.2, 1.5j, -2.0):
        h = np.linalg.solve(mats.A - lam * mats.G, mats.G @ a)
        assert np.linalg.norm(h) <= 1 / (abs(lam) - 1) + 1e-12


# -- certificates ------------------------------------------------------------

def test_certificate_identity_zero():
    mats, a = _identity_mats()
    c = mr.certificate(mats, a, 1.7)
    assert c.delta2 < 1e-13
    assert c.bound >= 0


def test_certificate_bounds_error():
    lam = 1.5
    mats, a = _cmv(10)
    ref_mats, ref_a = _cmv(40)
    inner = np.vdot(a, np.linalg.solve(mats.A - lam * mats.G, mats.G @ a))
    ref = np.vdot(ref_a, np.linalg.solve(ref_mats.A - lam * ref_mats.G, ref_a))
    c = mr.certificate(mats, a, lam)
    assert c.bound >= abs(inner - ref)


def test_delta2_decreases():
    d2 = [mr.certificate(*_cmv(n), 1.1).delta2 for n in (10, 20, 40, 80)]
    assert all(x >= y * (1 - 1e-8) for x, y in zip(d2, d2[1:]))
    assert d2[-1] < d2[0]


def test_certificate_errors():
    mats, a = _cmv(10)
    with pytest.raises(ArgumentError):
        mr.certificate(mats, a, 0.5)
    with pytest.raises(ArgumentError):
        mr.certificate(mats, a, 2.0, delta1=-1)


def test_certificate_without_factors_agrees():
    mats, a = _cmv(30)
    bare = ga.GalerkinMatrices(mats.G, mats.A, mats.L, True)
    c1 = mr.certificate(mats, a, 1.3)
    c2 = mr.certificate(bare, a, 1.3)
    assert abs(c1.delta2 - c2.delta2) < 1e-6


def test_adaptive_identity_stops_at_start():
    est = mr.adaptive_measure_eval(lambda n: _identity_mats(), mr.kernel_coeffs(2, 0.2), [0.0], tol=1e-8, n0=6)
    assert est.meta["N_K"] == 6 and est.meta["converged"]


def test_adaptive_cmv_eps_dependence():
    k1, k2 = mr.kernel_coeffs(1, 0.1), mr.kernel_coeffs(1, 0.03)
    e1 = mr.adaptive_measure_eval(_cmv_sparse, k1, [0.2], tol=1e-3, n0=8, n_max=8192)
    e2 = mr.adaptive_measure_eval(_cmv_sparse, k2, [0.2], tol=1e-3, n0=8, n_max=8192)
    assert e1.meta["converged"] and e2.meta["converged"]
    assert e2.meta["N_K"] > e1.meta["N_K"]
    ref = mr.measure_eval(*_cmv_sparse(4 * e1.meta["N_K"]), k1, [0.2]).values[0]
    assert abs(e1.values[0] - ref) <= 1e-3


def test_adaptive_cap_flag():
    est = mr.adaptive_measure_eval(_cmv_sparse, mr.kernel_coeffs(1, 0.01), [0.0], tol=1e-12, n0=8, n_max=16)
    assert est.meta["N_K"] == 16 and not est.meta["converged"]


# -- noise -------------------------------------------------------------------

def test_noise_zero_delta_matches_clean():
    mats, a = _cmv(200)
    k = mr.kernel_coeffs(2, 0.1)
    clean = mr.measure_eval(mats, a, k, [0.2]).values[0]
    rho = dy.rogers_szego_density(0.2)
    out = mr.noise_experiment(mats, a, [0.0], 2, 3, 0, 0.2, rho, eps=0.1)
    assert out[0]["mean"] == pytest.approx(abs(clean - rho), abs=1e-12)
    assert out[0]["sd"] == pytest.approx(0, abs=1e-12)


def test_noise_seed_reproducible():
    mats, a = _cmv(100)
    rho = dy.rogers_szego_density(0.2)
    r1 = mr.noise_experiment(mats, a, [1e-3, 1e-4], 1, 4, 7, 0.2, rho)
    r2 = mr.noise_experiment(mats, a, [1e-3, 1e-4], 1, 4, 7, 0.2, rho)
    assert r1 == r2
    assert r1[0]["eps"] == pytest.approx(1e-3 ** 0.5)
    with pytest.raises(ArgumentError):
        mr.noise_experiment(mats, a, [0.0], 1, 2, 0, 0.2, rho)
