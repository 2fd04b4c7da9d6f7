"""Kernel EDMD to learn a compact dictionary, then ResDMD on a second snapshot set."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .dictionary import FunctionDictionary, StackedDictionary
from .errors import ArgumentError, NumericError
from . import galerkin

__all__ = [
    "GaussianKernel", "PolynomialKernel", "LearnedDictionary", "OverfittingWarning",
    "gamma_heuristic", "learn_dictionary", "eval_learned", "kernel_resdmd",
    "save_learned", "load_learned",
]


class OverfittingWarning(UserWarning):
    """The second snapshot set shares points with the training set."""


@dataclass(frozen=True)
class GaussianKernel:
    gamma: float
    kind: str = "gaussian_rbf"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ArgumentError("gamma must be positive")

    def __call__(self, X, Y) -> np.ndarray:
        return np.exp(-self.gamma * cdist(np.atleast_2d(X), np.atleast_2d(Y), "sqeuclidean"))


@dataclass(frozen=True)
class PolynomialKernel:
    """(c + x.y)^degree; with degree 1 it has the explicit feature map [sqrt(c), x]."""

    degree: int = 1
    c: float = 1.0
    kind: str = "polynomial"

    def __call__(self, X, Y) -> np.ndarray:
        return (self.c + np.atleast_2d(X) @ np.atleast_2d(Y).T) ** self.degree


def gamma_heuristic(snap) -> float:
    """1 / (mean l2-norm of the mean-centred x0 rows)^2."""
    X = np.asarray(snap.x0 if hasattr(snap, "x0") else snap, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ArgumentError("no snapshots")
    r = np.mean(np.linalg.norm(X - X.mean(axis=0), axis=1))
    if r == 0:
        raise ArgumentError("all snapshots coincide")
    return float(1.0 / r ** 2)


@dataclass
class LearnedDictionary:
    anchors: np.ndarray
    comb: np.ndarray
    kernel: object
    eigenvalues: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.comb.shape[1]

    def eval(self, points) -> np.ndarray:
        return eval_learned(self, points)

    def describe(self) -> dict:
        return {"type": "learned", "kernel": self.kernel.kind, "size": self.size,
                "anchors": int(self.anchors.shape[0]), **{k: v for k, v in self.meta.items()
                                                          if isinstance(v, (int, float, str))}}


def learn_dictionary(snap1, kernel, n_keep: int, eta: float = 1e-12,
                     rank_rtol: float = 1e-10) -> LearnedDictionary:
    """Dominant kernel-EDMD eigenfunctions of snap1, orthonormalized in the weighted data norm.

    The Gram matrix sqrt(W) S(x0, x0) sqrt(W) is regularized by eta * ||.|| I and
    truncated to its numerical rank (eigenvalues above rank_rtol * max).
    """
    X0, X1, w = snap1.x0, snap1.x1, snap1.weights
    M = X0.shape[0]
    if not 1 <= n_keep <= M:
        raise ArgumentError(f"need 1 <= n_keep <= M1' = {M}")
    if eta < 0:
        raise ArgumentError("eta must be nonnegative")
    sw = np.sqrt(w)
    G0 = sw[:, None] * kernel(X0, X0) * sw[None, :]
    G1 = sw[:, None] * kernel(X1, X0) * sw[None, :]
    G0 = 0.5 * (G0 + G0.T)
    G0r = G0 + eta * np.linalg.norm(G0, 2) * np.eye(M)
    s2, U = np.linalg.eigh(G0r)
    keep = s2 > rank_rtol * s2[-1]
    U, s = U[:, keep], np.sqrt(s2[keep])
    if n_keep > s.shape[0]:
        warnings.warn(f"requested {n_keep} functions but the Gram matrix has numerical rank "
                      f"{s.shape[0]}; shrinking", RuntimeWarning, stacklevel=2)
        n_keep = s.shape[0]
    Kt = (U / s).T @ G1 @ (U / s)
    try:
        lam, V = scipy.linalg.eig(Kt)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"kernel EDMD eigensolver failed: {exc}") from exc
    order = np.lexsort((np.angle(lam), -np.abs(lam)))[:n_keep]
    Vs = V[:, order]
    # values of the selected functions on the (weighted) training data, then QR
    B = G0 @ ((U / s) @ Vs)
    Q, R = np.linalg.qr(B)
    if np.min(np.abs(np.diag(R))) <= 1e-14 * np.max(np.abs(np.diag(R))):
        raise NumericError("selected eigenfunctions are linearly dependent on the data")
    C = (U / s) @ scipy.linalg.solve_triangular(R.T, Vs.T, lower=True).T
    comb = sw[:, None] * C
    return LearnedDictionary(np.array(X0), comb, kernel, lam[order],
                             {"eta": eta, "rank": int(s.shape[0]), "n_keep": n_keep, "M1": M})


def eval_learned(d: LearnedDictionary, points) -> np.ndarray:
    """Row j: [S(x_j, anchor_k)]_k times the combination matrix."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if d.anchors.shape[1] == 1 else X[None, :]
    if X.shape[1] != d.anchors.shape[1]:
        raise ArgumentError(f"points have {X.shape[1]} coordinates, anchors have {d.anchors.shape[1]}")
    return d.kernel(X, d.anchors) @ d.comb


def _overlap(a: np.ndarray, b: np.ndarray) -> bool:
    seen = {row.tobytes() for row in np.ascontiguousarray(a, dtype=float)}
    return any(row.tobytes() in seen for row in np.ascontiguousarray(b, dtype=float))


_CONSTANT = FunctionDictionary((lambda x: np.ones(x.shape[0]),), ("const",))


def kernel_resdmd(snap1, snap2, kernel, n_keep: int, eta: float = 1e-12, request: str = "eigs",
                  append_constant: bool = False, **kw) -> dict:
    """Learn a dictionary on snap1, assemble on snap2 and run the requested computation.

    request: "matrices", "eigs" (all EDMD pairs with residuals), "cleanup" (needs eps),
    "pseudospectrum" (needs grid, eps) or "measure" (needs g coefficients a, kernel_r, theta).
    """
    if _overlap(snap1.x0, snap2.x0):
        warnings.warn("snap2 shares points with snap1: residuals may be overfitted to zero",
                      OverfittingWarning, stacklevel=2)
    learned = learn_dictionary(snap1, kernel, n_keep, eta)
    dic = StackedDictionary((learned, _CONSTANT)) if append_constant else learned
    mats = galerkin.assemble(snap2, dic)
    out = {"dictionary": dic, "learned": learned, "mats": mats}
    if request == "matrices":
        return out
    if request in ("eigs", "cleanup"):
        eigs = galerkin.edmd_eigs(mats)
        for e in eigs:
            e.res = galerkin.residual(e.lam, e.g, mats)
        out["eigs"] = eigs if request == "eigs" else [e for e in eigs if e.res <= kw["eps"]]
    elif request == "pseudospectrum":
        out["pseudospectrum"] = galerkin.pseudospectrum(mats, kw["grid"], kw["eps"])
    elif request == "measure":
        from .measure_rational import measure_eval
        out["measure"] = measure_eval(mats, kw["a"], kw["kernel_r"], kw["theta"])
    else:
        raise ArgumentError(f"unknown request {request!r}")
    return out


def _kernel_spec(kernel) -> dict:
    if isinstance(kernel, GaussianKernel):
        return {"kind": kernel.kind, "gamma": kernel.gamma}
    if isinstance(kernel, PolynomialKernel):
        return {"kind": kernel.kind, "degree": kernel.degree, "c": kernel.c}
    raise ArgumentError(f"cannot serialize kernel {kernel!r}")


def save_learned(prefix, d: LearnedDictionary, sources=()) -> None:
    """prefix.anchors.bin, prefix.comb.bin (re/im pairs) and a prefix.json descriptor."""
    from . import io
    io.write_binary(f"{prefix}.anchors.bin", d.anchors)
    io.write_binary(f"{prefix}.comb.bin", d.comb)
    io.write_json(f"{prefix}.json", {
        "kernel": _kernel_spec(d.kernel), "eta": d.meta.get("eta"), "N_K": d.size,
        "rank": d.meta.get("rank"), "eigenvalues": [[z.real, z.imag] for z in d.eigenvalues],
        "anchors_sha": io.digest(d.anchors), "comb_sha": io.digest(d.comb),
        "source_sha": [io.digest(*s) for s in sources]})


def load_learned(prefix) -> LearnedDictionary:
    import json
    from pathlib import Path
    from . import io
    info = json.loads(Path(f"{prefix}.json").read_text())
    spec = dict(info["kernel"])
    kind = spec.pop("kind")
    kernel = GaussianKernel(**spec) if kind == "gaussian_rbf" else PolynomialKernel(**spec)
    anchors = io.read_binary(f"{prefix}.anchors.bin")
    comb = io.read_binary(f"{prefix}.comb.bin", complex_pairs=True)
    lam = np.array([complex(*z) for z in info["eigenvalues"]])
    return LearnedDictionary(anchors, comb, kernel, lam, {"eta": info["eta"], "rank": info["rank"],
                                                          "n_keep": info["N_K"]})
