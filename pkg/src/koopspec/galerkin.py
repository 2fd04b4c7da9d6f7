"""Galerkin matrices, EDMD eigenpairs, residuals and pseudospectra (ResDMD)."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .dictionary import whiten
from .errors import ArgumentError, NumericError

__all__ = [
    "GalerkinMatrices", "Eigenpair", "PseudospectrumResult",
    "assemble", "assemble_exact", "edmd_eigs", "residual", "cleanup", "tau",
    "pseudospectrum", "adjoint_tau", "full_pseudospectrum", "koopman_modes", "rect_grid",
]

CHUNK = 8192


def _dense(X):
    return X.toarray() if sp.issparse(X) else np.asarray(X)


@dataclass
class GalerkinMatrices:
    """G ~ Psi0* W Psi0, A ~ Psi0* W Psi1, L ~ Psi1* W Psi1.

    ``factors`` optionally holds (B0, B1) with G = B0*B0, A = B0*B1, L = B1*B1;
    when present, residuals are evaluated as norms of (B1 - lam B0) g, which
    avoids the cancellation of the expanded quadratic form.
    """

    G: np.ndarray
    A: np.ndarray
    L: np.ndarray
    exact: bool = False
    factors: tuple | None = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.G.shape[0]

    def dense(self) -> "GalerkinMatrices":
        if not any(sp.issparse(X) for X in (self.G, self.A, self.L)):
            return self
        f = None if self.factors is None else tuple(_dense(B) for B in self.factors)
        return GalerkinMatrices(_dense(self.G), _dense(self.A), _dense(self.L), self.exact, f, self.meta)

    def section(self, n: int) -> "GalerkinMatrices":
        """Matrices of the first n dictionary elements."""
        f = None
        if self.factors is not None:
            f = tuple(B[:, :n] for B in self.factors)
        return GalerkinMatrices(self.G[:n, :n], self.A[:n, :n], self.L[:n, :n], self.exact, f, self.meta)

    def whitener(self) -> np.ndarray:
        if "_R" not in self.meta:
            self.meta["_R"] = whiten(_dense(self.G))
        return self.meta["_R"]


@dataclass
class Eigenpair:
    lam: complex
    g: np.ndarray
    res: float = float("nan")


@dataclass
class PseudospectrumResult:
    grid: np.ndarray
    tau: np.ndarray
    eps: float
    accepted: np.ndarray
    vectors: np.ndarray | None = None

    @property
    def accepted_points(self) -> np.ndarray:
        return self.grid[self.accepted]


def _products(P0, P1, w, lo, hi):
    a = P0[lo:hi]
    b = P1[lo:hi]
    aw = a.conj().T * w[lo:hi]
    return aw @ a, aw @ b, (b.conj().T * w[lo:hi]) @ b


def assemble(snap, dictionary, threads: int = 1, keep_factors: bool = True,
             chunk: int = CHUNK) -> GalerkinMatrices:
    """Weighted products of the feature matrices, summed over fixed row chunks in order."""
    P0 = dictionary.eval(snap.x0)
    P1 = dictionary.eval(snap.x1)
    if P0.shape != P1.shape:
        raise ArgumentError("feature matrices differ in shape")
    w = snap.weights
    bounds = [(lo, min(lo + chunk, P0.shape[0])) for lo in range(0, P0.shape[0], chunk)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda b: _products(P0, P1, w, *b), bounds))
    else:
        parts = [_products(P0, P1, w, *b) for b in bounds]
    # fixed pairwise reduction tree: result is independent of the thread count
    while len(parts) > 1:
        nxt = [tuple(x + y for x, y in zip(parts[i], parts[i + 1])) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    G, A, L = parts[0]
    G = 0.5 * (G + G.conj().T)
    L = 0.5 * (L + L.conj().T)
    factors = None
    if keep_factors:
        sw = np.sqrt(w)[:, None]
        R = scipy.linalg.qr(np.hstack([sw * P0, sw * P1]), mode="r")[0]
        n = P0.shape[1]
        factors = (R[:, :n], R[:, n:])
    return GalerkinMatrices(G, A, L, False, factors,
                            {"M1": snap.size, "N_K": P0.shape[1], "source": snap.source})


def assemble_exact(system, n: int, sparse: bool = False) -> GalerkinMatrices:
    """Exact matrices for a sequence-space operator with the canonical dictionary e_1..e_n.

    A is the n x n section of the operator and L the section of U*U, computed from
    the taller (n + bandwidth) x n block so that every entry is exact.
    """
    rows = n + system.bandwidth
    B1 = system.truncation(n, rows=rows).astype(complex)
    B0 = sp.eye(rows, n, dtype=complex, format="csr")
    G = sp.identity(n, dtype=complex, format="csr")
    A = sp.csr_matrix(B1[:n, :])
    L = sp.csr_matrix(B1.conj().T @ B1)
    mats = GalerkinMatrices(G, A, L, True, (B0, B1), {"N_K": n, "system": system.name})
    return mats if sparse else mats.dense()


def edmd_eigs(mats: GalerkinMatrices) -> list[Eigenpair]:
    """Eigenpairs of the pencil (A, G), computed in the whitened basis; g*Gg = 1."""
    m = mats.dense()
    R = m.whitener()
    K = R.conj().T @ m.A @ R
    try:
        lam, V = scipy.linalg.eig(K)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    V = V / np.linalg.norm(V, axis=0)
    Gv = R @ V
    return [Eigenpair(complex(lam[i]), Gv[:, i]) for i in range(lam.shape[0])]


def residual(lam: complex, g: np.ndarray, mats: GalerkinMatrices) -> float:
    """res(lam, g) = sqrt(g*(L - lam A* - conj(lam) A + |lam|^2 G) g / g*Gg)."""
    g = np.asarray(g, dtype=complex)
    if mats.factors is not None:
        B0, B1 = mats.factors
        den = np.linalg.norm(B0 @ g)
        if den == 0:
            raise NumericError("g has zero norm")
        return float(np.linalg.norm(B1 @ g - lam * (B0 @ g)) / den)
    G, A, L = mats.G, mats.A, mats.L
    gG = np.vdot(g, G @ g).real
    if gG <= 0:
        raise NumericError("g*Gg is not positive")
    Ag = np.vdot(g, A @ g)
    num = np.vdot(g, L @ g).real - 2.0 * (lam * np.conj(Ag)).real + abs(lam) ** 2 * gG
    q = num / gG
    if q < -1e-12 * max(1.0, abs(lam) ** 2):
        raise NumericError(f"negative squared residual {q:.3e}")
    return float(np.sqrt(max(q, 0.0)))


def cleanup(eigs: list[Eigenpair], mats: GalerkinMatrices, eps: float) -> list[Eigenpair]:
    """Fill residuals and keep exactly the pairs with res <= eps."""
    out = []
    for e in eigs:
        e.res = residual(e.lam, e.g, mats)
        if e.res <= eps:
            out.append(e)
    return out


class _TauSolver:
    """Precomputed whitened quantities for repeated tau evaluations."""

    def __init__(self, mats: GalerkinMatrices):
        m = mats.dense()
        self.R = m.whitener()
        R = self.R
        if m.factors is not None:
            B0, B1 = m.factors
            self.C0 = B0 @ R
            self.C1 = B1 @ R
            self.hermitian = False
        else:
            self.Lt = R.conj().T @ m.L @ R
            self.At = R.conj().T @ m.A @ R
            self.hermitian = True

    def __call__(self, lam: complex, want_vec: bool = True):
        if self.hermitian:
            H = self.Lt - lam * self.At.conj().T - np.conj(lam) * self.At \
                + abs(lam) ** 2 * np.eye(self.At.shape[0])
            H = 0.5 * (H + H.conj().T)
            if want_vec:
                w, V = scipy.linalg.eigh(H, subset_by_index=[0, 0])
                return float(np.sqrt(max(w[0], 0.0))), self.R @ V[:, 0]
            w = scipy.linalg.eigh(H, eigvals_only=True, subset_by_index=[0, 0])
            return float(np.sqrt(max(w[0], 0.0))), None
        M = self.C1 - lam * self.C0
        if want_vec:
            _, s, Vh = np.linalg.svd(M, full_matrices=False)
            return float(s[-1]), self.R @ Vh[-1].conj()
        s = np.linalg.svd(M, compute_uv=False)
        return float(s[-1]), None


def tau(lam: complex, mats: GalerkinMatrices):
    """Minimal residual over the dictionary span and its minimizer."""
    return _TauSolver(mats)(lam)


def rect_grid(re=(-1.5, 1.5), im=(-1.5, 1.5), n_re: int = 60, n_im: int | None = None) -> np.ndarray:
    n_im = n_re if n_im is None else n_im
    X, Y = np.meshgrid(np.linspace(re[0], re[1], n_re), np.linspace(im[0], im[1], n_im))
    return (X + 1j * Y).ravel()


def pseudospectrum(mats: GalerkinMatrices, grid, eps: float, keep_vectors: bool = False,
                   threads: int = 1) -> PseudospectrumResult:
    """tau on every grid point; accepted = {z : tau(z) < eps}."""
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    grid = np.asarray(grid, dtype=complex).ravel()
    if grid.size == 0:
        raise ArgumentError("empty grid")
    solver = _TauSolver(mats)
    f = lambda z: solver(z, keep_vectors)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(f, grid))
    else:
        res = [f(z) for z in grid]
    t = np.array([r[0] for r in res])
    vecs = np.column_stack([r[1] for r in res]) if keep_vectors else None
    return PseudospectrumResult(grid, t, eps, t < eps, vecs)


def adjoint_tau(lam: complex, mats: GalerkinMatrices, N2: int) -> float:
    """upsilon(lam): minimum over g in the first N2 coordinates of the adjoint residual form."""
    m = mats.dense()
    if not 1 <= N2 <= m.size:
        raise ArgumentError("need 1 <= N2 <= N_K")
    R = m.whitener()
    Ginv = R @ R.conj().T
    A, G = m.A, m.G
    Lmat = A @ Ginv @ A.conj().T - lam * A.conj().T - np.conj(lam) * A + abs(lam) ** 2 * G
    Ls = Lmat[:N2, :N2]
    R2 = whiten(G[:N2, :N2])
    H = R2.conj().T @ Ls @ R2
    H = 0.5 * (H + H.conj().T)
    w = scipy.linalg.eigh(H, eigvals_only=True, subset_by_index=[0, 0])
    return float(np.sqrt(max(w[0], 0.0)))


def full_pseudospectrum(mats: GalerkinMatrices, grid, eps: float, N2: int) -> np.ndarray:
    """Boolean mask: tau(z) < eps or upsilon(z) + 1/N2 <= eps."""
    ps = pseudospectrum(mats, grid, eps)
    ups = np.array([adjoint_tau(z, mats, N2) for z in ps.grid])
    return ps.accepted | (ups + 1.0 / N2 <= eps)


def koopman_modes(eigvecs: np.ndarray, snap, dictionary):
    """Least-squares modes B with X0 ~ Phi B in the weighted norm, Phi = Psi0 V.

    Returns (B, residual) where residual = ||sqrt(W)(Phi B - X0)||_F.
    """
    V = np.asarray(eigvecs)
    Phi = dictionary.eval(snap.x0) @ V
    sw = np.sqrt(snap.weights)[:, None]
    X = snap.x0.astype(complex)
    B, _, rank, _ = np.linalg.lstsq(sw * Phi, sw * X, rcond=None)
    if rank < V.shape[1]:
        raise NumericError(f"eigenfunction samples are rank deficient ({rank} < {V.shape[1]})")
    res = float(np.linalg.norm(sw * (Phi @ B) - sw * X))
    return B, res
