"""Observable dictionaries and the feature matrix Psi(x)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, NumericError, ResourceError

__all__ = [
    "Axis", "TensorDictionary", "FunctionDictionary", "CanonicalDictionary", "StackedDictionary",
    "hyperbolic_cross", "eval_matrix", "project", "projection_residual", "whiten", "MAX_DICT",
]

MAX_DICT = 20_000
AXIS_KINDS = ("fourier_periodic", "hermite_function", "hermite_polynomial", "legendre_transplanted")


@dataclass(frozen=True)
class Axis:
    """One coordinate's basis family.

    fourier_periodic: e^{2 pi i k x/(b-a)} / sqrt(b-a) on [a, b] (k in Z)
    hermite_function: orthonormal Hermite functions h_k(x/s)/sqrt(s) on R
    hermite_polynomial: normalized probabilists' Hermite polynomials in x/s, orthonormal for N(0, s^2)
    legendre_transplanted: sqrt((2k+1)/(b-a)) P_k(2(x-a)/(b-a) - 1) on [a, b]
    """

    kind: str
    interval: tuple = (-np.pi, np.pi)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in AXIS_KINDS:
            raise ArgumentError(f"unknown axis kind {self.kind!r}")

    @property
    def signed(self) -> bool:
        return self.kind == "fourier_periodic"

    def eval(self, x: np.ndarray, kmax: int) -> np.ndarray:
        """Values for indices 0..kmax (or -kmax..kmax for Fourier), shape (M, n_idx)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "fourier_periodic":
            a, b = self.interval
            k = np.arange(-kmax, kmax + 1)
            return np.exp(2j * np.pi * np.outer(x, k) / (b - a)) / np.sqrt(b - a)
        out = np.empty((x.shape[0], kmax + 1))
        if self.kind == "hermite_function":
            t = x / self.scale
            out[:, 0] = np.pi ** -0.25 * np.exp(-0.5 * t * t) / np.sqrt(self.scale)
            if kmax >= 1:
                out[:, 1] = np.sqrt(2.0) * t * out[:, 0]
            for k in range(1, kmax):
                out[:, k + 1] = np.sqrt(2.0 / (k + 1)) * t * out[:, k] - np.sqrt(k / (k + 1)) * out[:, k - 1]
        elif self.kind == "hermite_polynomial":
            t = x / self.scale
            out[:, 0] = 1.0
            if kmax >= 1:
                out[:, 1] = t
            for k in range(1, kmax):
                out[:, k + 1] = (t * out[:, k] - np.sqrt(k) * out[:, k - 1]) / np.sqrt(k + 1)
        else:
            a, b = self.interval
            t = 2.0 * (x - a) / (b - a) - 1.0
            out[:, 0] = 1.0
            if kmax >= 1:
                out[:, 1] = t
            for k in range(1, kmax):
                out[:, k + 1] = ((2 * k + 1) * t * out[:, k] - k * out[:, k - 1]) / (k + 1)
            out *= np.sqrt((2 * np.arange(kmax + 1) + 1) / (b - a))
        return out

    def describe(self) -> dict:
        return {"kind": self.kind, "interval": list(self.interval), "scale": self.scale}


def hyperbolic_cross(d: int, order: int, kinds: Sequence[str] | None = None,
                     cap: int = MAX_DICT) -> np.ndarray:
    """Multi-indices k with prod(1 + |k_i|) <= order, in lexicographic order.

    Fourier axes take signed indices; polynomial/function axes take k_i >= 0.
    """
    if d < 1 or order < 1:
        raise ArgumentError("need d >= 1 and order >= 1")
    kinds = list(kinds) if kinds is not None else ["fourier_periodic"] * d
    if len(kinds) != d:
        raise ArgumentError("one axis kind per dimension")
    out: list[tuple] = []

    def rec(prefix: tuple, budget: int):
        i = len(prefix)
        if i == d:
            out.append(prefix)
            if len(out) > cap:
                raise ResourceError(f"hyperbolic cross exceeds cap {cap}")
            return
        kmax = budget - 1
        rng = range(-kmax, kmax + 1) if kinds[i] == "fourier_periodic" else range(0, kmax + 1)
        for k in rng:
            rec(prefix + (k,), budget // (1 + abs(k)))

    rec((), order)
    return np.array(sorted(out), dtype=int).reshape(-1, d)


class _Base:
    size: int

    def eval(self, points) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _check_finite(P: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(P)
    if np.any(bad):
        j = int(np.argwhere(bad.any(axis=0))[0, 0])
        raise NumericError(f"non-finite dictionary value in column {j}")
    return P


@dataclass(frozen=True, eq=False)
class TensorDictionary(_Base):
    """Products of one-dimensional bases indexed by multi-indices."""

    axes: tuple
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.ndim == 1:
            idx = idx[:, None]
        if idx.shape[1] != len(self.axes):
            raise ArgumentError("index width does not match the number of axes")
        for i, ax in enumerate(self.axes):
            if not ax.signed and np.any(idx[:, i] < 0):
                raise ArgumentError(f"negative index on non-Fourier axis {i}")
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "indices", idx)

    @classmethod
    def hyperbolic(cls, axes: Sequence[Axis], order: int, cap: int = MAX_DICT) -> "TensorDictionary":
        idx = hyperbolic_cross(len(axes), order, [a.kind for a in axes], cap)
        return cls(tuple(axes), idx)

    @classmethod
    def univariate(cls, axis: Axis, n: int) -> "TensorDictionary":
        """First n functions of a single axis (Fourier: indices ordered -k..k, n odd)."""
        if axis.signed:
            if n % 2 == 0:
                raise ArgumentError("Fourier univariate dictionaries need odd n")
            k = np.arange(-(n // 2), n // 2 + 1)
        else:
            k = np.arange(n)
        return cls((axis,), k[:, None])

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    @property
    def dim(self) -> int:
        return len(self.axes)

    def eval(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None] if self.dim == 1 else x[None, :]
        if x.shape[1] != self.dim:
            raise ArgumentError(f"points have {x.shape[1]} coordinates, dictionary expects {self.dim}")
        P = np.ones((x.shape[0], self.size), dtype=complex)
        for i, ax in enumerate(self.axes):
            k = self.indices[:, i]
            kmax = int(np.abs(k).max())
            vals = ax.eval(x[:, i], kmax)
            col = k + kmax if ax.signed else k
            P *= vals[:, col]
        return _check_finite(P)

    def describe(self) -> dict:
        return {"type": "tensor", "axes": [a.describe() for a in self.axes],
                "indices": self.indices.tolist(), "size": self.size}


@dataclass(frozen=True, eq=False)
class FunctionDictionary(_Base):
    """Dictionary of arbitrary vectorized callables f(points (M, d)) -> (M,)."""

    funcs: tuple
    names: tuple = ()

    @property
    def size(self) -> int:
        return len(self.funcs)

    def eval(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        P = np.column_stack([np.broadcast_to(np.asarray(f(x), dtype=complex), (x.shape[0],))
                             for f in self.funcs])
        return _check_finite(P)

    def describe(self) -> dict:
        return {"type": "functions", "names": list(self.names) or [f"f{i}" for i in range(self.size)]}


@dataclass(frozen=True, eq=False)
class CanonicalDictionary(_Base):
    """Indicator functions psi_j(k) = [k == offset + j] on an integer index set.

    For sequence-space systems the Galerkin matrices are assembled exactly from
    the stored operator (see galerkin.assemble_exact).
    """

    n: int
    offset: int = 0

    @property
    def size(self) -> int:
        return self.n

    def eval(self, points) -> np.ndarray:
        k = np.rint(np.asarray(points, dtype=float).reshape(-1)).astype(np.int64) - self.offset
        P = np.zeros((k.shape[0], self.n), dtype=complex)
        ok = (k >= 0) & (k < self.n)
        P[np.nonzero(ok)[0], k[ok]] = 1.0
        return P

    def describe(self) -> dict:
        return {"type": "canonical_sequence", "n": self.n, "offset": self.offset}


@dataclass(frozen=True, eq=False)
class StackedDictionary(_Base):
    """Column-wise concatenation of dictionaries."""

    parts: tuple

    @property
    def size(self) -> int:
        return sum(p.size for p in self.parts)

    def eval(self, points) -> np.ndarray:
        return np.hstack([p.eval(points) for p in self.parts])

    def describe(self) -> dict:
        return {"type": "stacked", "parts": [p.describe() for p in self.parts]}


def eval_matrix(dictionary, points) -> np.ndarray:
    """Row j is Psi(x_j)."""
    return dictionary.eval(points)


def whiten(G: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Return R (N x r) with R* G R = I_r, dropping eigen-directions below rtol * lambda_max."""
    G = 0.5 * (G + G.conj().T)
    lam, V = np.linalg.eigh(G)
    if lam[-1] <= 0:
        raise NumericError("Gram matrix is not positive")
    keep = lam > rtol * lam[-1]
    return V[:, keep] / np.sqrt(lam[keep])


def project(dictionary, g: Callable, rule, rtol: float = 1e-12) -> np.ndarray:
    """Coefficients a = (Psi0* W Psi0)^{-1} Psi0* W g(x) (least squares in the quadrature norm)."""
    P = dictionary.eval(rule.nodes)
    gx = np.asarray(g(rule.nodes), dtype=complex).reshape(-1)
    Pw = P.conj().T * rule.weights
    G = Pw @ P
    R = whiten(G, rtol)
    return R @ (R.conj().T @ (Pw @ gx))


def projection_residual(dictionary, g: Callable, a, rule) -> float:
    """||g - Psi a|| in the quadrature norm (a computable estimate of the projection error)."""
    r = np.asarray(g(rule.nodes), dtype=complex).reshape(-1) - dictionary.eval(rule.nodes) @ np.asarray(a)
    return float(np.sqrt(np.sum(rule.weights * np.abs(r) ** 2)))
