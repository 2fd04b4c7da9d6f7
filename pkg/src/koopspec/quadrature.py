"""Quadrature rules used as initial conditions for snapshot data."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ArgumentError, ResourceError

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "trapezoid",
    "riemann",
    "monte_carlo",
    "tensor_product",
    "dyadic",
    "MAX_NODES",
]

MAX_NODES = 5_000_000


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (M x d) and weights (M,) approximating an integral against a measure."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        w = np.asarray(self.weights, dtype=float)
        if nodes.shape[0] != w.shape[0]:
            raise ArgumentError("nodes and weights have different lengths")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ArgumentError("weights must be finite and nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def integrate(self, f) -> complex | float:
        """Apply the rule to a vectorized callable f(nodes) -> (M,)."""
        vals = np.asarray(f(self.nodes))
        return np.sum(self.weights * vals)


def _check_interval(interval) -> tuple[float, float]:
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ArgumentError(f"empty interval [{a}, {b}]")
    return a, b


def _legendre_and_derivative(M: int, x: np.ndarray):
    p0, p1 = np.ones_like(x), x.copy()
    for k in range(1, M):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    dp = M * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(M: int, interval=(-1.0, 1.0)) -> QuadratureRule:
    """M-point Gauss-Legendre rule on [a, b].

    Nodes are eigenvalues of the symmetric tridiagonal Jacobi matrix, polished by
    one Newton step; weights are 2 / ((1 - x^2) P_M'(x)^2).
    """
    if M < 1:
        raise ArgumentError("M must be >= 1")
    a, b = _check_interval(interval)
    if M == 1:
        x, w = np.zeros(1), np.array([2.0])
    else:
        k = np.arange(1, M)
        beta = k / np.sqrt(4.0 * k * k - 1.0)
        x = scipy.linalg.eigh_tridiagonal(np.zeros(M), beta, eigvals_only=True)
        p, dp = _legendre_and_derivative(M, x)
        x = x - p / dp
        _, dp = _legendre_and_derivative(M, x)
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        # symmetrize to remove the O(eps) asymmetry of the eigensolver
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
    half = 0.5 * (b - a)
    return QuadratureRule(a + half * (x + 1.0), half * w, "gauss_legendre",
                          meta={"interval": [a, b]})


def trapezoid(M: int, interval=(-1.0, 1.0), periodic: bool = False) -> QuadratureRule:
    """Equispaced trapezoid rule; the periodic variant drops the duplicated endpoint."""
    a, b = _check_interval(interval)
    if periodic:
        if M < 1:
            raise ArgumentError("M must be >= 1")
        h = (b - a) / M
        x = a + h * np.arange(M)
        return QuadratureRule(x, np.full(M, h), "trapezoid_periodic",
                              meta={"interval": [a, b]})
    if M < 2:
        raise ArgumentError("non-periodic trapezoid needs M >= 2")
    h = (b - a) / (M - 1)
    w = np.full(M, h)
    w[0] = w[-1] = 0.5 * h
    return QuadratureRule(np.linspace(a, b, M), w, "trapezoid_truncated",
                          meta={"interval": [a, b]})


def riemann(M: int, interval=(-1.0, 1.0)) -> QuadratureRule:
    """Same nodes as the non-periodic trapezoid rule but with all weights (b-a)/(M-1)."""
    if M < 2:
        raise ArgumentError("riemann rule needs M >= 2")
    a, b = _check_interval(interval)
    return QuadratureRule(np.linspace(a, b, M), np.full(M, (b - a) / (M - 1)), "riemann",
                          meta={"interval": [a, b]})


def dyadic(k: int, interval=(0.0, 1.0), jitter_seed: int | None = None) -> QuadratureRule:
    """Equally weighted grid with 2**k points (left endpoints of the dyadic cells).

    With ``jitter_seed`` one uniform random node is drawn inside each cell
    instead (stratified sampling). Lattice nodes are degenerate for maps with
    dyadic structure: the tent map sends all 2**k left endpoints to 0 after k steps.
    """
    a, b = _check_interval(interval)
    M = 2 ** int(k)
    if M > MAX_NODES:
        raise ResourceError(f"dyadic grid with {M} nodes exceeds cap {MAX_NODES}")
    h = (b - a) / M
    offset = np.zeros(M) if jitter_seed is None else np.random.default_rng(jitter_seed).random(M)
    return QuadratureRule(a + h * (np.arange(M) + offset), np.full(M, h), "dyadic",
                          seed=jitter_seed, meta={"interval": [a, b], "k": int(k),
                                                  "jitter": jitter_seed is not None})


def monte_carlo(M: int, domain, seed: int | None = 0) -> QuadratureRule:
    """I.i.d. random nodes.

    ``domain`` is either a sequence of (a, b) intervals (Lebesgue measure on the
    box, weights |box|/M) or a dict ``{"gaussian": d, "scale": s, "mean": m}``
    (the Gaussian probability measure, weights 1/M).
    """
    if M < 1:
        raise ArgumentError("M must be >= 1")
    if M > MAX_NODES:
        raise ResourceError(f"{M} nodes exceeds cap {MAX_NODES}")
    rng = np.random.default_rng(seed)
    if isinstance(domain, dict):
        if "gaussian" not in domain:
            raise ArgumentError("dict domains must declare 'gaussian': dim")
        d = int(domain["gaussian"])
        scale = np.broadcast_to(np.asarray(domain.get("scale", 1.0), float), (d,))
        mean = np.broadcast_to(np.asarray(domain.get("mean", 0.0), float), (d,))
        x = mean + scale * rng.standard_normal((M, d))
        return QuadratureRule(x, np.full(M, 1.0 / M), "monte_carlo", seed=seed,
                              meta={"domain": "gaussian", "scale": scale.tolist(),
                                    "mean": mean.tolist()})
    box = np.asarray(domain, dtype=float)
    if box.ndim == 1:
        box = box[None, :]
    if box.shape[1] != 2 or not np.all(np.isfinite(box)):
        raise ArgumentError("unbounded Lebesgue domain: give a truncated box or a Gaussian domain")
    if np.any(box[:, 1] <= box[:, 0]):
        raise ArgumentError("empty box")
    lo, hi = box[:, 0], box[:, 1]
    x = lo + (hi - lo) * rng.random((M, box.shape[0]))
    vol = float(np.prod(hi - lo))
    return QuadratureRule(x, np.full(M, vol / M), "monte_carlo", seed=seed,
                          meta={"domain": box.tolist()})


def tensor_product(rules: Sequence[QuadratureRule], max_nodes: int = MAX_NODES) -> QuadratureRule:
    """Cartesian product of one-dimensional (or lower-dimensional) rules."""
    rules = list(rules)
    if not 1 <= len(rules) <= 4:
        raise ArgumentError("tensor products are limited to 1..4 factors")
    total = int(np.prod([r.size for r in rules]))
    if total > max_nodes:
        raise ResourceError(f"tensor product has {total} nodes, cap is {max_nodes}")
    nodes, weights = rules[0].nodes, rules[0].weights
    for r in rules[1:]:
        nodes = np.hstack([np.repeat(nodes, r.size, axis=0), np.tile(r.nodes, (nodes.shape[0], 1))])
        weights = np.outer(weights, r.weights).ravel()
    return QuadratureRule(nodes, weights, "tensor_product",
                          meta={"factors": [r.kind for r in rules]})
