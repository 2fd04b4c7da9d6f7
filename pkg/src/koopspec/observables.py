"""Named test observables, each normalized to unit norm in the relevant L^2 space."""
from __future__ import annotations

import numpy as np

from .errors import ArgumentError

# normalization constants (tent: adaptive quadrature; the others in closed form)
TENT_C = 1.0350305258136825
PENDULUM_C = 1.0 / np.sqrt(6.0 * np.pi ** 1.5)
SHIFT_C = 1.0 / np.sqrt(np.pi)
_DP_FOURIER_C = 1.0 / (2.0 * np.pi * np.sqrt(np.pi))
_DP_HERMITE_C = 1.0 / (2.0 * np.pi * np.sqrt(np.pi / 2.0))


def _col(x, i):
    x = np.asarray(x, dtype=float)
    return x[:, i] if x.ndim == 2 else x


def tent_g(x):
    """C (|x - 1/3| + sin(20x) + [x > 0.78]) on [0, 1]."""
    t = _col(x, 0)
    return TENT_C * (np.abs(t - 1.0 / 3.0) + np.sin(20.0 * t) + (t > 0.78))


def shift_g(k):
    """C sin(k)/k on the integers, with value C at k = 0."""
    k = _col(k, 0)
    out = np.full(k.shape, SHIFT_C)
    nz = k != 0
    out[nz] = SHIFT_C * np.sin(k[nz]) / k[nz]
    return out


def pendulum_g(x):
    x = np.atleast_2d(x)
    return PENDULUM_C * (1.0 + 1j * np.sin(x[:, 0])) * (1.0 - np.sqrt(2.0) * x[:, 1]) * np.exp(-0.5 * x[:, 1] ** 2)


def _dp_envelope(x):
    return np.exp(-0.5 * (x[:, 2] ** 2 + x[:, 3] ** 2))


def dp_fourier1(x):
    x = np.atleast_2d(x)
    return _DP_FOURIER_C * np.exp(1j * x[:, 0]) * _dp_envelope(x)


def dp_fourier2(x):
    x = np.atleast_2d(x)
    return _DP_FOURIER_C * np.exp(1j * x[:, 1]) * _dp_envelope(x)


def dp_hermite3(x):
    x = np.atleast_2d(x)
    return _DP_HERMITE_C * x[:, 2] * _dp_envelope(x)


def dp_hermite4(x):
    x = np.atleast_2d(x)
    return _DP_HERMITE_C * x[:, 3] * _dp_envelope(x)


def first_coordinate(x):
    return _col(x, 0).astype(float)


OBSERVABLES = {
    "tent_g": tent_g,
    "shift_sinc": shift_g,
    "pendulum_g": pendulum_g,
    "dp_fourier1": dp_fourier1,
    "dp_fourier2": dp_fourier2,
    "dp_hermite3": dp_hermite3,
    "dp_hermite4": dp_hermite4,
    "x1": first_coordinate,
}


def get_observable(name: str):
    try:
        return OBSERVABLES[name]
    except KeyError:
        raise ArgumentError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLES)}") from None
