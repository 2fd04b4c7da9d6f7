import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from koopspec import dynamics as dy, measure_filter as mf, quadrature as qd
from koopspec.errors import ArgumentError
from koopspec.observables import shift_g, tent_g

KINDS = ["hat", "cos", "four", "bump"]


def test_filter_examples():
    assert mf.filter_eval(mf.Filter("hat"), 0.25) == pytest.approx(0.75)
    assert mf.filter_eval(mf.Filter("four"), 0.5) == pytest.approx(0.5)
    assert mf.filter_eval(mf.Filter("bump"), 0.5) == pytest.approx(0.5, abs=1e-12)
    assert mf.Filter("bump").order == np.inf and mf.Filter("cos").order == 2


@pytest.mark.parametrize("kind", KINDS)
def test_filter_invariants(kind):
    f = mf.Filter(kind)
    assert f(0.0) == pytest.approx(1.0)
    assert f(1.0) == pytest.approx(0.0, abs=1e-15) and f(-1.0) == pytest.approx(0.0, abs=1e-15)
    x = np.linspace(0, 1, 101)
    np.testing.assert_allclose(f(x), f(-x))
    with pytest.raises(ArgumentError):
        f(1.5)


def test_unknown_filter():
    with pytest.raises(ArgumentError):
        mf.Filter("gauss")


def test_identity_autocorrelations_and_atom():
    rule = qd.gauss_legendre(30, (0, 1))
    traj = dy.generate_trajectories(dy.identity(), rule.nodes, 12, rule.weights)
    acs = mf.autocorr_quadrature(traj, lambda x: np.ones(len(x)), rule, 10)
    np.testing.assert_allclose(acs.a, 1 / (2 * np.pi), atol=1e-14)
    for kind in KINDS + ["none"]:
        for N in (1, 5, 10):
            sub = mf.AutocorrelationSeries(acs.a[:N + 1], "quadrature")
            assert mf.atom_estimate(sub, mf.Filter(kind)) == pytest.approx(1.0, abs=1e-12)


def test_autocorr_requires_length():
    traj = dy.generate_trajectories(dy.identity(), [[0.1]], 3)
    with pytest.raises(ArgumentError):
        mf.autocorr_quadrature(traj, lambda x: x[:, 0], None, 3)
    with pytest.raises(ArgumentError):
        mf.autocorr_ergodic(traj, lambda x: x[:, 0], 3)


def test_ergodic_constant_trajectory():
    traj = dy.generate_trajectories(dy.identity(), [[0.3]], 50)
    acs = mf.autocorr_ergodic(traj, lambda x: np.ones(len(x)), 10)
    np.testing.assert_allclose(acs.a, 1 / (2 * np.pi), atol=1e-14)


def test_ergodic_matches_direct_sum(rng):
    x = rng.random((200, 1))
    g = lambda s: np.exp(2j * np.pi * s[:, 0])  # noqa: E731
    acs = mf.autocorr_ergodic(x, g, 5)
    gx = g(x)
    for n in range(6):
        direct = np.sum(gx[: 200 - n] * np.conj(gx[n:])) / (200 - n) / (2 * np.pi)
        assert acs.a[n] == pytest.approx(direct, abs=1e-14)


def test_tent_a1_against_refined_oracle():
    rule = qd.dyadic(20)
    acs = mf.autocorr_quadrature_stream(dy.tent_map(), rule, tent_g, 1)
    F = lambda x: 2 * min(x, 1 - x)  # noqa: E731
    pts = [1 / 3, 0.39, 0.5, 0.61, 2 / 3, 0.78]
    f = lambda x: tent_g(np.array([x]))[0] * tent_g(np.array([F(x)]))[0]  # noqa: E731
    edges = [0.0] + sorted(pts) + [1.0]
    ref = sum(quad(f, a, b, limit=400)[0] for a, b in zip(edges, edges[1:])) / (2 * np.pi)
    assert acs.a[1].real == pytest.approx(ref, abs=1e-6)


def test_unstabilized_tent_stagnates():
    # binary rounding sends every orbit to the fixed point 0 after a few dozen steps
    traj = dy.generate_trajectories(dy.tent_map(), [[0.1234567]], 200_000)
    assert traj.states[0, 100, 0] == 0.0
    acs = mf.autocorr_ergodic(traj, tent_g, 5)
    g0 = tent_g(np.array([0.0]))[0]
    np.testing.assert_allclose(acs.a, g0 * g0 / (2 * np.pi), rtol=1e-2)


def test_stabilized_ergodic_converges():
    ref = mf.autocorr_quadrature_stream(dy.tent_map(), qd.dyadic(16, jitter_seed=0), tent_g, 10,
                                        noise_scale=1e-14, seed=0).a
    errs = []
    for M2 in (10**3, 10**4, 10**5):
        e = []
        for s in range(8):
            traj = dy.generate_trajectories(dy.tent_map(), [[0.1 + 0.1 * s]], M2, noise_scale=1e-14, seed=s)
            e.append(np.abs(mf.autocorr_ergodic(traj, tent_g, 10).a - ref).max())
        errs.append(np.sqrt(np.mean(np.square(e))))
    slope = np.polyfit(np.log([1e3, 1e4, 1e5]), np.log(errs), 1)[0]
    assert -0.8 < slope < -0.3


def test_nu_eval_N0_and_mass():
    acs = mf.AutocorrelationSeries(np.array([1 / (2 * np.pi)]), "test")
    est = mf.nu_eval(acs, mf.Filter("hat"), np.linspace(-3, 3, 7))
    np.testing.assert_allclose(est.values, 1 / (2 * np.pi))


@given(st.integers(1, 40), st.sampled_from(KINDS), st.integers(0, 2**31))
def test_nu_mass_and_reality(N, kind, seed):
    rng = np.random.default_rng(seed)
    a = (rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)) / (20 * np.pi)
    a[0] = 1 / (2 * np.pi)
    acs = mf.AutocorrelationSeries(a, "test")
    th = np.linspace(-np.pi, np.pi, 2 * N + 8, endpoint=False)
    est = mf.nu_eval(acs, mf.Filter(kind), th)
    # the periodic trapezoid rule is exact for trigonometric polynomials of this degree
    assert np.sum(est.values) * (2 * np.pi / th.size) == pytest.approx(1.0, abs=1e-12)
    assert est.imag_max < 1e-14


def _shift_acs(N):
    n = np.arange(1, N + 1)
    return mf.AutocorrelationSeries(np.concatenate([[1 / (2 * np.pi)], np.sin(n) / (2 * np.pi * n)]), "exact")


def test_shift_exact_autocorrelations_match_quadrature():
    rule = qd.QuadratureRule(np.arange(-200_000, 200_001, dtype=float), np.ones(400_001), "lattice")
    acs = mf.autocorr_quadrature_stream(dy.shift(), rule, shift_g, 5)
    np.testing.assert_allclose(acs.a.real, _shift_acs(5).a.real, atol=1e-5)


def test_shift_pointwise_orders():
    Ns = np.array([10, 20, 50, 100, 200, 500, 1000])
    err = {k: [] for k in KINDS}
    for N in Ns:
        acs = _shift_acs(int(N))
        for k in KINDS:
            err[k].append(abs(mf.nu_eval(acs, mf.Filter(k), [0.0]).values[0] - 0.5))
    slope = {k: -np.polyfit(np.log(Ns), np.log(err[k]), 1)[0] for k in ("hat", "cos", "four")}
    assert slope["hat"] == pytest.approx(1.0, abs=0.4)
    # cos and four converge at least at their nominal order at this flat point
    assert slope["cos"] >= 2 - 0.4 and slope["four"] >= 4 - 0.4
    assert err["bump"][-1] * 10 <= err["four"][-1]
    assert err["bump"][-1] < Ns[-1] ** -4.0


def test_shift_weak_convergence_fejer():
    # integrate nu_N against the Lipschitz test function |theta|; error ~ N^{-1} log N
    th = np.linspace(-np.pi, np.pi, 20001)
    rho = np.where(np.abs(th) < 1, 0.5, 0.0)
    exact = np.trapezoid(np.abs(th) * rho, th)
    Ns = np.array([10, 20, 50, 100, 200])
    errs = [abs(np.trapezoid(np.abs(th) * mf.nu_eval(_shift_acs(int(N)), mf.Filter("hat"), th).values, th) - exact)
            for N in Ns]
    slope = np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    assert -1.4 < slope < -0.6


def _bump_kernel(N, th):
    # a_n = 1/(2 pi) turns nu_eval into the induced kernel K_N itself
    acs = mf.AutocorrelationSeries(np.ones(N + 1) / (2 * np.pi), "kernel")
    return mf.nu_eval(acs, mf.Filter("bump"), th).values


def test_bump_kernel_normalization_moments_and_decay():
    consts = {2: [], 4: []}
    for N in (10, 100):
        th = np.linspace(-np.pi, np.pi, 64 * N + 1)
        K = _bump_kernel(N, th)
        assert np.trapezoid(K, th) == pytest.approx(1.0, abs=1e-10)
        # the first moment vanishes by symmetry, the second scales like N^-2
        assert abs(np.trapezoid(th * K, th)) < 1e-12
        assert np.trapezoid(th ** 2 * K, th) * N ** 2 < 50
        for m in consts:
            consts[m].append(np.max(np.abs(K) * (1 + N * np.abs(th)) ** (m + 1) / N))
    for m, (c10, c100) in consts.items():
        # decay |K_N(theta)| <= C N / (1 + N|theta|)^{m+1} with a constant independent of N
        assert c100 <= 2 * c10 and c10 <= 2 * c100


def test_kernel_zero():
    assert mf.kernel_zero(mf.Filter("none"), 3) == pytest.approx(7 / (2 * np.pi))
    assert mf.kernel_zero(mf.Filter("hat"), 2) == pytest.approx(2 / (2 * np.pi))
