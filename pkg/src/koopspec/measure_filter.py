"""Spectral measures from autocorrelations via filtered Fourier sums."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, NumericError

__all__ = [
    "Filter", "AutocorrelationSeries", "MeasureEstimate", "BUMP_C", "FILTERS",
    "filter_eval", "autocorr_quadrature", "autocorr_quadrature_stream", "autocorr_ergodic",
    "nu_eval", "atom_estimate", "kernel_zero",
]

BUMP_C = 0.109550455106347
FILTERS = {"hat": 1, "cos": 2, "four": 4, "bump": None, "none": 0}


@dataclass(frozen=True)
class Filter:
    kind: str

    def __post_init__(self):
        if self.kind not in FILTERS:
            raise ArgumentError(f"unknown filter {self.kind!r}; choose from {sorted(FILTERS)}")

    @property
    def order(self) -> float:
        m = FILTERS[self.kind]
        return float("inf") if m is None else m

    def __call__(self, x):
        return filter_eval(self, x)


def filter_eval(f: Filter, x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if np.any(ax > 1.0 + 1e-15):
        raise ArgumentError("filter argument outside [-1, 1]")
    ax = np.minimum(ax, 1.0)
    if f.kind == "hat":
        return 1.0 - ax
    if f.kind == "cos":
        return 0.5 * (1.0 - np.cos(np.pi * (1.0 - ax)))
    if f.kind == "four":
        return 1.0 - ax ** 4 * (-20.0 * ax ** 3 + 70.0 * ax ** 2 - 84.0 * ax + 35.0)
    if f.kind == "none":
        return np.ones_like(ax)
    # bump: exp(-2/(1-|x|) exp(-c/x^4)), with limits 1 at 0 and 0 at |x| = 1
    out = np.zeros_like(ax)
    inner = (ax > 0) & (ax < 1)
    xi = ax[inner]
    out[inner] = np.exp(-2.0 / (1.0 - xi) * np.exp(-BUMP_C / xi ** 4))
    out[ax == 0] = 1.0
    return out if out.ndim else float(out)


@dataclass
class AutocorrelationSeries:
    """One-sided a_n, n = 0..N; negative lags follow from a_{-n} = conj(a_n)."""

    a: np.ndarray
    method: str
    g: str = ""

    @property
    def N(self) -> int:
        return self.a.shape[0] - 1

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.a, dtype=complex).tobytes()).hexdigest()[:16]


@dataclass
class MeasureEstimate:
    theta: np.ndarray
    values: np.ndarray
    method: str
    eps: float | None = None
    N: int | None = None
    imag_max: float = 0.0
    meta: dict = field(default_factory=dict)


def autocorr_quadrature(traj, g, rule=None, N: int | None = None, g_desc: str = "") -> AutocorrelationSeries:
    """a_n = (1/2pi) sum_j w_j g(x_0^j) conj(g(x_n^j)) from an (M1, M2, d) trajectory set."""
    states = traj.states
    M2 = states.shape[1]
    N = M2 - 1 if N is None else N
    if N >= M2:
        raise ArgumentError(f"need M2 > N (M2={M2}, N={N})")
    w = traj.weights if rule is None else rule.weights
    g0 = np.asarray(g(states[:, 0, :]), dtype=complex)
    a = np.empty(N + 1, dtype=complex)
    for n in range(N + 1):
        a[n] = np.sum(w * g0 * np.conj(np.asarray(g(states[:, n, :]), dtype=complex)))
    return AutocorrelationSeries(a / (2 * np.pi), "quadrature", g_desc)


def autocorr_quadrature_stream(system, rule, g, N: int, noise_scale: float = 0.0,
                               seed: int | None = None, g_desc: str = "") -> AutocorrelationSeries:
    """Same as autocorr_quadrature but iterates the rule nodes without storing trajectories.

    With noise_scale > 0 each step is perturbed (see dynamics.perturbed_step).
    """
    from .dynamics import perturbed_step
    rng = np.random.default_rng(seed)
    x = rule.nodes.copy()
    g0 = np.asarray(g(x), dtype=complex)
    wg0 = rule.weights * g0
    a = np.empty(N + 1, dtype=complex)
    a[0] = np.sum(wg0 * np.conj(g0))
    for n in range(1, N + 1):
        x = perturbed_step(system, x, noise_scale, rng)
        a[n] = np.sum(wg0 * np.conj(np.asarray(g(x), dtype=complex)))
    return AutocorrelationSeries(a / (2 * np.pi), "quadrature", g_desc)


def autocorr_ergodic(traj, g, N: int, g_desc: str = "") -> AutocorrelationSeries:
    """a_n = (1/2pi) (M2-n)^{-1} sum_j g(x_j) conj(g(x_{j+n})) along one long trajectory."""
    states = traj.states if hasattr(traj, "states") else np.asarray(traj)
    if states.ndim == 3:
        if states.shape[0] != 1:
            raise ArgumentError("ergodic sampling uses a single trajectory (M1 = 1)")
        states = states[0]
    gx = np.asarray(g(states), dtype=complex).reshape(-1)
    M2 = gx.shape[0]
    if M2 <= N:
        raise ArgumentError(f"need M2 > N (M2={M2}, N={N})")
    # all lags at once through a zero-padded FFT correlation
    L = 1 << int(np.ceil(np.log2(2 * M2)))
    F = np.fft.fft(gx, L)
    corr = np.fft.ifft(np.conj(F) * F)[: N + 1]  # sum_j conj(g_j) g_{j+n}
    a = np.conj(corr) / (M2 - np.arange(N + 1))
    return AutocorrelationSeries(a / (2 * np.pi), "ergodic", g_desc)


def _weights(f: Filter, N: int) -> np.ndarray:
    if N == 0:
        return np.ones(1)
    return np.asarray(filter_eval(f, np.arange(N + 1) / N), dtype=float)


def nu_eval(acs: AutocorrelationSeries, f: Filter, theta) -> MeasureEstimate:
    """nu(theta) = sum_{|n| <= N} phi(n/N) a_n e^{i n theta}."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    N = acs.N
    phi = _weights(f, N)
    a = acs.a
    n = np.arange(1, N + 1)
    vals = np.empty(theta.shape, dtype=complex)
    for i, t in enumerate(theta):
        e = np.exp(1j * n * t)
        pos = np.sum(phi[1:] * a[1:] * e)
        neg = np.sum(phi[1:] * np.conj(a[1:]) * np.conj(e))
        vals[i] = phi[0] * a[0] + pos + neg
    return MeasureEstimate(theta, vals.real, "filter", None, N, float(np.max(np.abs(vals.imag))),
                           {"filter": f.kind, "a_digest": acs.digest()})


def kernel_zero(f: Filter, N: int) -> float:
    """K_N(0) = (1/2pi) sum_{|n| <= N} phi(n/N)."""
    phi = _weights(f, N)
    return float((phi[0] + 2.0 * np.sum(phi[1:])) / (2 * np.pi))


def atom_estimate(acs: AutocorrelationSeries, f: Filter, theta0: float = 0.0) -> float:
    """nu_N(theta0) / K_N(0), which converges to the mass of the atom at theta0."""
    k0 = kernel_zero(f, acs.N)
    if k0 == 0:
        raise NumericError("K_N(0) vanishes")
    return float(nu_eval(acs, f, [theta0]).values[0] / k0)
