"""Benchmark dynamical systems and snapshot generation.

Maps act on batches of states (M x d arrays). ODE systems are sampled with a
fixed-step RK4 integrator so that the resulting map is deterministic.
Sequence-space systems (the CMV matrix) act on coefficient vectors by
multiplication with a stored banded matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError, DomainError

__all__ = [
    "DynamicalSystem", "MapSystem", "ODESystem", "SequenceSystem",
    "TrajectorySet", "SnapshotSet",
    "tent_map", "gauss_map", "pendulum", "double_pendulum", "lorenz",
    "shift", "identity", "cmv", "cmv_alpha", "rogers_szego_density",
    "pendulum_energy", "double_pendulum_energy",
    "step", "perturbed_step", "generate_trajectories", "generate_snapshots",
    "SYSTEMS", "make_system",
]

TWO_PI = 2.0 * np.pi


def _wrap(x):
    return (x + np.pi) % TWO_PI - np.pi


class DynamicalSystem:
    """Common interface: ``step`` maps a batch of states to their images."""

    measure_preserving = False
    periodic = ()

    def domain(self) -> list:
        raise NotImplementedError

    def check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, self.dim) if self.dim > 1 or x.size != 1 else x.reshape(1, 1)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ArgumentError(f"{self.name}: expected states with {self.dim} coordinates, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError(f"{self.name}: non-finite state")
        return x

    def fold(self, x: np.ndarray) -> np.ndarray:
        if any(self.periodic):
            x = x.copy()
            mask = np.array(self.periodic)
            x[:, mask] = _wrap(x[:, mask])
        return x

    def _apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def step(self, x) -> np.ndarray:
        """Apply F to a single state (d,) or a batch (M, d)."""
        single = np.ndim(x) <= 1
        out = self.fold(self._apply(self.check(x)))
        return out[0] if single else out

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, "measure_preserving": self.measure_preserving}


@dataclass(frozen=True, eq=False)
class MapSystem(DynamicalSystem):
    """A discrete map F given as a vectorized callable on (M, d) arrays."""

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    bounds: tuple
    measure_preserving: bool = False
    periodic: tuple = ()
    clamp: bool = False
    params: dict = field(default_factory=dict)

    def domain(self):
        return list(self.bounds)

    def check(self, x):
        x = DynamicalSystem.check(self, x)
        for i, (lo, hi) in enumerate(self.bounds):
            if self.periodic and self.periodic[i]:
                continue
            if np.any(x[:, i] < lo) or np.any(x[:, i] > hi):
                raise DomainError(f"{self.name}: state outside [{lo}, {hi}] in coordinate {i}")
        return x

    def _apply(self, x):
        return self.fn(x)

    def fold(self, x):
        x = DynamicalSystem.fold(self, x)
        if self.clamp:
            lo = np.array([b[0] for b in self.bounds])
            hi = np.array([b[1] for b in self.bounds])
            x = np.clip(x, lo, hi)
        return x

    def describe(self):
        return {**DynamicalSystem.describe(self), **self.params}


def rk4(rhs, x: np.ndarray, dt: float, n_sub: int) -> np.ndarray:
    h = dt / n_sub
    for _ in range(n_sub):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


@dataclass(frozen=True, eq=False)
class ODESystem(DynamicalSystem):
    """Time-dt flow map of an autonomous ODE, integrated by RK4 with n_sub substeps."""

    name: str
    dim: int
    rhs: Callable[[np.ndarray], np.ndarray]
    dt: float
    n_sub: int = 100
    periodic: tuple = ()
    measure_preserving: bool = False
    bounds: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ArgumentError("dt must be positive")
        if self.n_sub < 1:
            raise ArgumentError("n_sub must be >= 1")

    def domain(self):
        return list(self.bounds)

    def _apply(self, x):
        return rk4(self.rhs, x, self.dt, self.n_sub)

    def describe(self):
        return {**DynamicalSystem.describe(self), "dt": self.dt, "n_sub": self.n_sub, **self.params}


class SequenceSystem(DynamicalSystem):
    """Operator on l^2(N) given by a banded matrix; states are coefficient vectors.

    The matrix is stored as an ``n_store x n_store`` truncation built from a
    larger section so that every stored entry is exact.
    """

    def __init__(self, name: str, builder: Callable[[int], sp.spmatrix], bandwidth: int,
                 n_store: int = 512, params: dict | None = None):
        self.name = name
        self.bandwidth = bandwidth
        self._builder = builder
        self.n_store = int(n_store)
        self.dim = self.n_store
        self.measure_preserving = True
        self.params = params or {}
        self._U = self.truncation(self.n_store)

    def domain(self):
        return [("sequence", self.n_store)]

    def truncation(self, n: int, rows: int | None = None) -> sp.csr_matrix:
        """Exact ``rows x n`` upper-left section of the infinite matrix (rows defaults to n)."""
        rows = n if rows is None else rows
        big = self._builder(max(n, rows) + 2 * self.bandwidth + 2)
        return sp.csr_matrix(big[:rows, :n])

    def check(self, x):
        x = np.asarray(x)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] > self.n_store:
            raise DomainError(f"{self.name}: state longer than stored truncation ({self.n_store})")
        if x.shape[1] < self.n_store:
            x = np.hstack([x, np.zeros((x.shape[0], self.n_store - x.shape[1]), dtype=x.dtype)])
        return x

    def _apply(self, x):
        return (self._U @ x.T).T

    def describe(self):
        return {"name": self.name, "n_store": self.n_store, "bandwidth": self.bandwidth, **self.params}


# ---------------------------------------------------------------------------
# concrete systems

def tent_map() -> MapSystem:
    return MapSystem("tent", 1, lambda x: 2.0 * np.minimum(x, 1.0 - x), ((0.0, 1.0),),
                     measure_preserving=True, clamp=True)


def gauss_map(alpha: float = 2.0, beta: float | None = None) -> MapSystem:
    if beta is None:
        beta = -1.0 - np.exp(-alpha)
    fn = lambda x: np.exp(-alpha * x * x) + beta  # noqa: E731
    # the map sends [-1, 0] into itself for the default parameters; allow rounding slack
    return MapSystem("gauss", 1, fn, ((-1.0 - 1e-12, 1e-12),), params={"alpha": alpha, "beta": beta})


def identity(dim: int = 1, bounds=None) -> MapSystem:
    bounds = tuple(bounds) if bounds is not None else tuple((-np.inf, np.inf) for _ in range(dim))
    return MapSystem("identity", dim, lambda x: x.copy(), bounds, measure_preserving=True)


def shift() -> MapSystem:
    """The shift x -> x + 1 on the integers (unitary Koopman operator on l^2(Z))."""
    return MapSystem("shift", 1, lambda x: x + 1.0, ((-np.inf, np.inf),), measure_preserving=True)


def _pendulum_rhs(x):
    return np.column_stack([x[:, 1], -np.sin(x[:, 0])])


def pendulum(dt: float, n_sub: int = 100) -> ODESystem:
    return ODESystem("pendulum", 2, _pendulum_rhs, dt, n_sub, periodic=(True, False),
                     measure_preserving=True, bounds=((-np.pi, np.pi), (-np.inf, np.inf)))


def pendulum_energy(x) -> np.ndarray:
    x = np.atleast_2d(x)
    return 0.5 * x[:, 1] ** 2 - np.cos(x[:, 0])


def _dp_velocities(x):
    t1, t2, p1, p2 = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
    c = np.cos(t1 - t2)
    den = 16.0 - 9.0 * c * c
    return (2.0 * p1 - 3.0 * c * p2) / den, (8.0 * p2 - 3.0 * c * p1) / den


def _double_pendulum_rhs(x):
    t1, t2 = x[:, 0], x[:, 1]
    d1, d2 = _dp_velocities(x)
    s = np.sin(t1 - t2)
    dp1 = -3.0 * (d1 * d2 * s + np.sin(t1))
    dp2 = -3.0 * (-d1 * d2 * s + np.sin(t2) / 3.0)
    return np.column_stack([d1, d2, dp1, dp2])


def double_pendulum(dt: float = 1.0, n_sub: int = 100) -> ODESystem:
    """Double pendulum with M l^2 = 6 and g / l = 1/3; state (theta1, theta2, p1, p2)."""
    inf = np.inf
    return ODESystem("double_pendulum", 4, _double_pendulum_rhs, dt, n_sub,
                     periodic=(True, True, False, False), measure_preserving=True,
                     bounds=((-np.pi, np.pi), (-np.pi, np.pi), (-inf, inf), (-inf, inf)))


def double_pendulum_energy(x) -> np.ndarray:
    x = np.atleast_2d(x)
    d1, d2 = _dp_velocities(x)
    c = np.cos(x[:, 0] - x[:, 1])
    return 4.0 * d1 * d1 + d2 * d2 + 3.0 * d1 * d2 * c - 3.0 * np.cos(x[:, 0]) - np.cos(x[:, 1])


def lorenz(dt: float = 0.05, sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0,
           n_sub: int = 100) -> ODESystem:
    def rhs(x):
        X, Y, Z = x[:, 0], x[:, 1], x[:, 2]
        return np.column_stack([sigma * (Y - X), X * (rho - Z) - Y, X * Y - beta * Z])
    inf = np.inf
    return ODESystem("lorenz", 3, rhs, dt, n_sub, bounds=((-inf, inf),) * 3,
                     params={"sigma": sigma, "rho": rho, "beta": beta})


def cmv_alpha(n: int, q: float = 0.95) -> np.ndarray:
    """Verblunsky coefficients alpha_j = (-1)^j q^((j+1)/2) of the Rogers-Szego polynomials."""
    j = np.arange(n)
    return (-1.0) ** j * q ** ((j + 1) / 2.0)


def _cmv_builder(q: float):
    def build(n: int) -> sp.csr_matrix:
        # U = L M with L = Theta_0 + Theta_2 + ..., M = 1 + Theta_1 + Theta_3 + ... (direct sums)
        alpha = cmv_alpha(n, q).astype(complex)
        rho = np.sqrt(1.0 - np.abs(alpha) ** 2)
        Lm = sp.lil_matrix((n, n), dtype=complex)
        Mm = sp.lil_matrix((n, n), dtype=complex)
        Mm[0, 0] = 1.0
        for j in range(n):
            T = Lm if j % 2 == 0 else Mm
            if j + 1 < n:
                T[j, j], T[j, j + 1] = np.conj(alpha[j]), rho[j]
                T[j + 1, j], T[j + 1, j + 1] = rho[j], -alpha[j]
            elif T[j, j] == 0:
                T[j, j] = 1.0
        return sp.csr_matrix(Lm.tocsr() @ Mm.tocsr())
    return build


def cmv(q: float = 0.95, n_store: int = 512) -> SequenceSystem:
    """Pentadiagonal CMV matrix for the Rogers-Szego polynomials (canonical observable e_1)."""
    return SequenceSystem("cmv", _cmv_builder(q), bandwidth=2, n_store=n_store, params={"q": q})


def rogers_szego_density(theta, q: float = 0.95, terms: int = 8) -> np.ndarray:
    """Density of the spectral measure of e_1 for the CMV system (wrapped Gaussian)."""
    theta = np.asarray(theta, dtype=float)
    s2 = np.log(1.0 / q)
    m = np.arange(-terms, terms + 1)
    t = theta[..., None] - TWO_PI * m
    return np.sum(np.exp(-t * t / (2.0 * s2)), axis=-1) / np.sqrt(TWO_PI * s2)


SYSTEMS: dict[str, dict] = {
    "tent": {"factory": tent_map, "params": {}},
    "gauss": {"factory": gauss_map, "params": {"alpha": 2.0, "beta": "-1-exp(-alpha)"}},
    "pendulum": {"factory": pendulum, "params": {"dt": "required", "n_sub": 100}},
    "double_pendulum": {"factory": double_pendulum, "params": {"dt": 1.0, "n_sub": 100}},
    "lorenz": {"factory": lorenz, "params": {"dt": 0.05, "sigma": 10.0, "rho": 28.0,
                                             "beta": 8.0 / 3.0, "n_sub": 100}},
    "shift": {"factory": shift, "params": {}},
    "cmv": {"factory": cmv, "params": {"q": 0.95, "n_store": 512}},
    "identity": {"factory": identity, "params": {"dim": 1}},
}


def make_system(name: str, **params) -> DynamicalSystem:
    if name not in SYSTEMS:
        raise ArgumentError(f"unknown system {name!r}; known: {', '.join(sorted(SYSTEMS))}")
    try:
        return SYSTEMS[name]["factory"](**params)
    except TypeError as exc:
        raise ArgumentError(f"bad parameters for {name}: {exc}") from exc


# ---------------------------------------------------------------------------
# stepping and data generation

def step(system: DynamicalSystem, x):
    return system.step(x)


def perturbed_step(system: DynamicalSystem, x, noise_scale: float, rng: np.random.Generator):
    """F(x) plus a uniform perturbation in [-noise_scale, noise_scale], folded back into the domain."""
    if noise_scale < 0:
        raise ArgumentError("noise_scale must be nonnegative")
    y = system.step(x)
    if noise_scale == 0:
        return y
    y = y + rng.uniform(-noise_scale, noise_scale, size=np.shape(y))
    single = np.ndim(y) <= 1
    y = system.fold(np.atleast_2d(y).reshape(-1, system.dim))
    return y[0] if single else y


@dataclass
class SnapshotSet:
    """Paired states x1_j = F(x0_j) with quadrature weights."""

    x0: np.ndarray
    x1: np.ndarray
    weights: np.ndarray
    source: str = "external"

    def __post_init__(self):
        self.x0 = np.asarray(self.x0)
        self.x1 = np.asarray(self.x1)
        if self.x0.ndim == 1:
            self.x0, self.x1 = self.x0[:, None], self.x1[:, None]
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.x0.shape != self.x1.shape:
            raise ArgumentError("x0 and x1 shapes differ")
        if self.weights.shape[0] != self.x0.shape[0]:
            raise ArgumentError("one weight per snapshot is required")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ArgumentError("weights must be finite and nonnegative")

    @property
    def size(self) -> int:
        return self.x0.shape[0]

    @property
    def dim(self) -> int:
        return self.x0.shape[1]

    def subset(self, idx) -> "SnapshotSet":
        return SnapshotSet(self.x0[idx], self.x1[idx], self.weights[idx], self.source)


@dataclass
class TrajectorySet:
    """States of M1 trajectories over M2 time steps, shape (M1, M2, d)."""

    states: np.ndarray
    weights: np.ndarray | None = None
    source: str = "generated"

    def __post_init__(self):
        self.states = np.asarray(self.states)
        if self.states.ndim == 2:
            self.states = self.states[:, :, None]
        if self.states.ndim != 3:
            raise ArgumentError("trajectory array must have shape (M1, M2, d)")
        M1 = self.states.shape[0]
        self.weights = np.full(M1, 1.0 / M1) if self.weights is None else np.asarray(self.weights, float)

    @property
    def M1(self) -> int:
        return self.states.shape[0]

    @property
    def M2(self) -> int:
        return self.states.shape[1]

    def to_snapshots(self) -> SnapshotSet:
        """Every consecutive pair within each trajectory becomes one snapshot (trajectory-major order)."""
        M1, M2, d = self.states.shape
        x0 = self.states[:, :-1, :].reshape(M1 * (M2 - 1), d)
        x1 = self.states[:, 1:, :].reshape(M1 * (M2 - 1), d)
        w = np.repeat(self.weights, M2 - 1)
        return SnapshotSet(x0, x1, w, self.source)

    @classmethod
    def from_snapshots(cls, snap: SnapshotSet, M1: int) -> "TrajectorySet":
        """Inverse of ``to_snapshots`` for data produced by it."""
        n = snap.size // M1
        if n * M1 != snap.size:
            raise ArgumentError("snapshot count is not a multiple of M1")
        x0 = snap.x0.reshape(M1, n, snap.dim)
        last = snap.x1.reshape(M1, n, snap.dim)[:, -1:, :]
        if not np.array_equal(x0[:, 1:, :], snap.x1.reshape(M1, n, snap.dim)[:, :-1, :]):
            raise ArgumentError("snapshots are not consecutive trajectory pairs")
        return cls(np.concatenate([x0, last], axis=1), snap.weights.reshape(M1, n)[:, 0], snap.source)


def generate_trajectories(system: DynamicalSystem, initials, M2: int, weights=None,
                          noise_scale: float = 0.0, seed: int | None = None) -> TrajectorySet:
    """Iterate F from each initial state; column n holds x_n (so x_0 is the initial state)."""
    if M2 < 2:
        raise ArgumentError("M2 must be >= 2")
    x = np.asarray(initials)
    if x.size == 0:
        raise ArgumentError("no initial conditions")
    x = system.check(x if x.ndim == 2 else x.reshape(-1, system.dim))
    rng = np.random.default_rng(seed)
    x0 = x
    out = None
    for n in range(1, M2):
        x = perturbed_step(system, x, noise_scale, rng) if noise_scale > 0 else system.step(x)
        if out is None:  # sequence operators may be complex even for real initial states
            out = np.empty((x0.shape[0], M2, x0.shape[1]), dtype=np.result_type(x0, x))
            out[:, 0] = x0
        out[:, n] = x
    return TrajectorySet(out, weights, source=system.name)


def generate_snapshots(system: DynamicalSystem, initials, M2: int = 2, weights=None,
                       noise_scale: float = 0.0, seed: int | None = None) -> SnapshotSet:
    """Snapshot pairs from trajectories of length M2 (M2=2 gives one pair per initial state)."""
    traj = generate_trajectories(system, initials, M2, weights, noise_scale, seed)
    return traj.to_snapshots()
