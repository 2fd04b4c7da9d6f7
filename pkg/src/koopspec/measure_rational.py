"""Rational smoothing kernels and resolvent-based spectral measure evaluation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ArgumentError, NumericError, ResourceError
from .galerkin import GalerkinMatrices
from .measure_filter import MeasureEstimate

__all__ = [
    "RationalKernel", "Certificate", "ResolventEvaluator",
    "vandermonde_solve", "default_nodes", "kernel_coeffs", "kernel_eval", "poisson_kernel",
    "measure_eval", "certificate", "total_bound", "adaptive_measure_eval", "noise_experiment", "MAX_ORDER",
]

MAX_ORDER = 8
TWO_PI = 2.0 * np.pi


def vandermonde_solve(x, b) -> np.ndarray:
    """Solve sum_j x_j^k u_j = b_k (k = 0..n-1) by the Bjorck-Pereyra recurrences."""
    x = np.asarray(x, dtype=complex)
    u = np.array(b, dtype=complex)
    n = x.shape[0] - 1
    for k in range(n):
        for i in range(n, k, -1):
            u[i] -= x[k] * u[i - 1]
    for k in range(n - 1, -1, -1):
        for i in range(k + 1, n + 1):
            u[i] /= x[i] - x[i - k - 1]
        for i in range(k, n):
            u[i] -= u[i + 1]
    return u


def default_nodes(m: int) -> np.ndarray:
    """Equispaced nodes z_j = 1 + (2j/(m+1) - 1) i, j = 1..m."""
    j = np.arange(1, m + 1)
    return 1.0 + (2.0 * j / (m + 1) - 1.0) * 1j


@dataclass(frozen=True)
class RationalKernel:
    m: int
    eps: float
    nodes: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @property
    def zeta(self) -> np.ndarray:
        """zeta_j with 1 + eps zeta_j = 1/(1 + eps conj(z_j))."""
        return (1.0 / (1.0 + self.eps * np.conj(self.nodes)) - 1.0) / self.eps

    def shifts(self, theta: float) -> np.ndarray:
        """Resolvent points e^{i theta}(1 + eps z_j)."""
        return np.exp(1j * theta) * (1.0 + self.eps * self.nodes)


def kernel_coeffs(m: int, eps: float, nodes=None) -> RationalKernel:
    """Coefficients d (Vandermonde in z) and c (Vandermonde in zeta(eps)), both with RHS e_1."""
    if m < 1:
        raise ArgumentError("order m must be >= 1")
    if m > MAX_ORDER:
        raise ResourceError(f"order {m} exceeds cap {MAX_ORDER} (Vandermonde conditioning)")
    if not 0 < eps <= 1:
        raise ArgumentError("eps must lie in (0, 1]")
    z = default_nodes(m) if nodes is None else np.asarray(nodes, dtype=complex)
    if z.shape != (m,):
        raise ArgumentError("need exactly m nodes")
    if np.any(z.real <= 0):
        raise ArgumentError("nodes must have positive real part")
    if m > 1 and np.min(np.abs(z[:, None] - z[None, :]) + np.eye(m)) == 0:
        raise ArgumentError("nodes must be distinct")
    e1 = np.zeros(m, dtype=complex)
    e1[0] = 1.0
    d = vandermonde_solve(z, e1)
    zeta = (1.0 / (1.0 + eps * np.conj(z)) - 1.0) / eps
    c = vandermonde_solve(zeta, e1)
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(d))):
        raise NumericError("non-finite kernel coefficients")
    return RationalKernel(m, float(eps), z, c, d)


def kernel_eval(k: RationalKernel, theta, real: bool = True):
    """K_eps(theta); the real part is the kernel used for measures."""
    theta = np.asarray(theta, dtype=float)
    u = np.exp(-1j * theta)[..., None]
    inner = 1.0 / (1.0 + k.eps * np.conj(k.nodes))
    outer = 1.0 + k.eps * k.nodes
    val = u[..., 0] / TWO_PI * np.sum(k.c / (u - inner) - k.d / (u - outer), axis=-1)
    return val.real if real else val


def poisson_kernel(eps: float, theta):
    r = 1.0 + eps
    theta = np.asarray(theta, dtype=float)
    return (r * r - 1.0) / (TWO_PI * (1.0 + r * r - 2.0 * r * np.cos(theta)))


# ---------------------------------------------------------------------------
# resolvent evaluation

class ResolventEvaluator:
    """Generalized Schur form A = Q S Z*, G = Q T Z* with cached vectors for one g."""

    def __init__(self, mats: GalerkinMatrices, a: np.ndarray):
        m = mats.dense()
        A = np.asarray(m.A, dtype=complex)
        G = np.asarray(m.G, dtype=complex)
        S, T, Q, Z = scipy.linalg.qz(A, G, output="complex")
        nA = max(np.linalg.norm(A), 1.0)
        nG = max(np.linalg.norm(G), 1.0)
        if (np.linalg.norm(A - Q @ S @ Z.conj().T) > 1e-10 * nA
                or np.linalg.norm(G - Q @ T @ Z.conj().T) > 1e-10 * nG):
            raise NumericError("generalized Schur factorization is inaccurate")
        a = np.asarray(a, dtype=complex)
        Qa = Q.conj().T @ a
        self.S, self.T = S, T
        self.v1 = T @ (Z.conj().T @ a)
        self.v2 = T.conj().T @ Qa
        self.v3 = S.conj().T @ Qa

    def pair(self, lam: complex):
        """(conj(a* G R G a), a* A R G a) with R = (A - lam G)^{-1}."""
        M = self.S - lam * self.T
        if np.min(np.abs(np.diag(M))) == 0:
            raise NumericError(f"shift {lam} hits a generalized eigenvalue")
        I = scipy.linalg.solve_triangular(M, self.v1)
        return np.vdot(I, self.v2), np.vdot(self.v3, I)


class _DirectEvaluator:
    """Dense or sparse LU solves of (A - lam G) h = G a."""

    def __init__(self, mats: GalerkinMatrices, a: np.ndarray):
        self.A, self.G = mats.A, mats.G
        self.sparse = sp.issparse(self.A)
        self.a = np.asarray(a, dtype=complex)
        self.Ga = self.G @ self.a
        self.aA = (self.A.conj().T @ self.a).conj()  # a* A as a row
        self.aG = (self.G.conj().T @ self.a).conj()

    def solve(self, lam: complex) -> np.ndarray:
        M = self.A - lam * self.G
        if self.sparse:
            return spla.splu(sp.csc_matrix(M)).solve(self.Ga)
        try:
            return scipy.linalg.solve(M, self.Ga)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular resolvent at {lam}") from exc

    def pair(self, lam: complex):
        h = self.solve(lam)
        return np.conj(self.aG @ h), self.aA @ h


def _combine(k: RationalKernel, theta: float, evaluator) -> complex:
    lam = k.shifts(theta)
    total = 0.0 + 0.0j
    for j in range(k.m):
        t1, t2 = evaluator.pair(lam[j])
        total += k.c[j] * np.exp(-1j * theta) * (1.0 + k.eps * np.conj(k.nodes[j])) * t1 + k.d[j] * t2
    return -total / TWO_PI


def measure_eval(mats: GalerkinMatrices, a, k: RationalKernel, theta, method: str = "auto",
                 check_norm: bool = True) -> MeasureEstimate:
    """Smoothed measure [Re K_eps * nu_g](theta) from Galerkin matrices and the coefficients of g.

    method: "schur" (one QZ, triangular solves per shift), "direct" (dense or
    sparse LU per shift) or "auto" (sparse matrices -> direct, else schur).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    a = np.asarray(a, dtype=complex)
    if check_norm:
        nrm = np.vdot(a, mats.G @ a).real
        if abs(nrm - 1.0) > 1e-8:
            raise ArgumentError(f"g must be normalized (a*Ga = {nrm:.3e})")
    if method == "auto":
        method = "direct" if sp.issparse(mats.A) else "schur"
    if method == "schur":
        ev = ResolventEvaluator(mats, a)
    elif method == "direct":
        ev = _DirectEvaluator(mats, a)
    else:
        raise ArgumentError(f"unknown method {method!r}")
    vals = np.array([_combine(k, t, ev) for t in theta])
    return MeasureEstimate(theta, vals.real, "rational", k.eps, mats.size, float(np.max(np.abs(vals.imag))),
                           {"m": k.m, "solver": method})


@dataclass(frozen=True)
class Certificate:
    delta1: float
    delta2: float
    delta3: float
    lam: complex

    @property
    def bound(self) -> float:
        return (self.delta1 + self.delta2) / (abs(self.lam) - 1.0) + self.delta1 * self.delta3


def certificate(mats: GalerkinMatrices, a, lam: complex, delta1: float = 0.0) -> Certificate:
    """Error bound for <(K - lam)^{-1} g, g> computed in the dictionary subspace, |lam| > 1.

    delta2^2 = h*Gh res(lam,h)^2 - 2 Re(a*(A - lam G)h) + a*Ga and delta3^2 = h*Gh with
    h = (A - lam G)^{-1} G a. When square-root factors are stored, delta2 is evaluated
    as ||(B1 - lam B0) h - B0 a||, the same quantity without cancellation.
    """
    if abs(lam) <= 1:
        raise ArgumentError("certificate requires |lam| > 1")
    if delta1 < 0:
        raise ArgumentError("delta1 must be nonnegative")
    a = np.asarray(a, dtype=complex)
    h = _DirectEvaluator(mats, a).solve(lam)
    G, A, L = mats.G, mats.A, mats.L
    hGh = np.vdot(h, G @ h).real
    if mats.factors is not None:
        B0, B1 = mats.factors
        B0h = B0 @ h
        d2 = float(np.linalg.norm(B1 @ h - lam * B0h - B0 @ a))
    else:
        quad = (np.vdot(h, L @ h) - lam * np.vdot(h, A.conj().T @ h)
                - np.conj(lam) * np.vdot(h, A @ h)).real + abs(lam) ** 2 * hGh
        cross = np.vdot(a, A @ h - lam * (G @ h)).real
        d2sq = quad - 2.0 * cross + np.vdot(a, G @ a).real
        d2 = float(np.sqrt(max(d2sq, 0.0)))
    return Certificate(float(delta1), d2, float(np.sqrt(max(hGh, 0.0))), complex(lam))


def total_bound(mats, a, k: RationalKernel, theta: float, delta1: float = 0.0) -> float:
    """Certificate bound on the smoothed measure at theta, summed over the m shifts."""
    # error of <R g, K* g> is |lam| times the error of <R g, g>, since K R = I + lam R
    lam = k.shifts(theta)
    tot = 0.0
    for j in range(k.m):
        b = certificate(mats, a, lam[j], delta1).bound
        tot += (abs(k.c[j]) + abs(k.d[j])) * abs(lam[j]) * b
    return tot / TWO_PI


def adaptive_measure_eval(assemble_cb: Callable[[int], tuple], k: RationalKernel, theta, tol: float,
                          n0: int = 16, n_max: int = 4096, delta1: float = 0.0,
                          method: str = "auto") -> MeasureEstimate:
    """Double N_K until the summed certificate bound is <= tol at every theta (or n_max is hit).

    ``assemble_cb(n)`` returns ``(mats, a)`` for a dictionary of size n.
    """
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = n0
    history = []
    while True:
        mats, a = assemble_cb(n)
        bounds = np.array([total_bound(mats, a, k, t, delta1) for t in theta])
        history.append((n, float(bounds.max())))
        if bounds.max() <= tol or n >= n_max:
            break
        n = min(2 * n, n_max)
    est = measure_eval(mats, a, k, theta, method)
    est.meta.update({"N_K": n, "converged": bool(bounds.max() <= tol), "bound": bounds.tolist(),
                     "history": history})
    return est


def _perturb(A, delta: float, rng: np.random.Generator, pattern: str, band: int):
    if pattern == "dense":
        Ad = A.toarray() if sp.issparse(A) else np.array(A)
        return Ad + delta * rng.standard_normal(Ad.shape)
    if pattern == "band":
        n = A.shape[0]
        offsets = list(range(-band, band + 1))
        diags = [delta * rng.standard_normal(n - abs(o)) for o in offsets]
        E = sp.diags(diags, offsets, shape=A.shape, format="csr")
        return sp.csr_matrix(A) + E if sp.issparse(A) else np.asarray(A) + E.toarray()
    raise ArgumentError(f"unknown perturbation pattern {pattern!r}")


def noise_experiment(mats: GalerkinMatrices, a, deltas, m: int, trials: int, seed: int,
                     theta: float, reference: float, pattern: str = "dense", band: int = 2,
                     mats_for=None, eps_scale: float = 1.0, eps: float | None = None) -> list[dict]:
    """Perturb A by i.i.d. N(0, delta^2) entries, set eps = eps_scale * delta^{1/(m+1)}, average |error|.

    ``pattern="band"`` restricts the perturbation to diagonals |i - j| <= band.
    ``mats_for(eps)`` may supply a different (e.g. larger) truncation per eps.
    A fixed ``eps`` overrides the coupling (required when a delta is zero).
    """
    if eps_scale <= 0:
        raise ArgumentError("eps_scale must be positive")
    fixed = eps
    out = []
    children = np.random.SeedSequence(seed).spawn(len(list(deltas)))
    for delta, ss in zip(deltas, children):
        if delta < 0:
            raise ArgumentError("delta must be nonnegative")
        if fixed is not None:
            eps = fixed
        elif delta > 0:
            eps = min(eps_scale * delta ** (1.0 / (m + 1)), 1.0)
        else:
            raise ArgumentError("delta = 0 needs an explicit eps")
        k = kernel_coeffs(m, eps)
        base, av = (mats, a) if mats_for is None else mats_for(eps)
        errs = []
        for ts in ss.spawn(trials):
            rng = np.random.default_rng(ts)
            A = _perturb(base.A, delta, rng, pattern, band)
            G = base.G if sp.issparse(A) or not sp.issparse(base.G) else base.G.toarray()
            pm = GalerkinMatrices(G, A, base.L, False)
            est = measure_eval(pm, av, k, [theta], method="direct", check_norm=False)
            errs.append(abs(est.values[0] - reference))
        errs = np.array(errs)
        out.append({"delta": float(delta), "m": m, "eps": eps, "mean": float(errs.mean()),
                    "sd": float(errs.std(ddof=1)) if trials > 1 else 0.0, "trials": trials})
    return out
