"""Smoothing kernels and the roughness functional."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e
from scipy.integrate import simpson

from .errors import InvalidArgument

__all__ = ["Kernel", "gaussian_kernel", "roughness", "TRUNCATION"]

# k(x) < 8e-23 beyond this many bandwidths
TRUNCATION = 10.0

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Kernel:
    """A symmetric probability density used as smoothing kernel.

    Attributes
    ----------
    name : str
    eval : callable
        ``x -> k(x)``, vectorized.
    deriv : callable
        ``(x, r) -> k^{(r)}(x)``; ``r = 0`` gives ``k`` itself.
    mu0_sq : float
        ``int k(x)^2 dx``.
    mu2 : float
        Second moment ``int x^2 k(x) dx``.
    at_zero : float
        ``k(0)``.
    deriv_sq_mass : callable
        ``r -> int (k^{(r)}(x))^2 dx``.
    support : float
        Half-width beyond which the kernel is treated as zero.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray, int], np.ndarray]
    mu0_sq: float
    mu2: float
    at_zero: float
    deriv_sq_mass: Callable[[int], float]
    support: float = TRUNCATION

    def __call__(self, x):
        return self.eval(x)


def _gauss(x):
    x = np.asarray(x, dtype=np.float64)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def _gauss_deriv(x, r: int = 0):
    if r < 0:
        raise InvalidArgument(f"derivative order must be >= 0, got {r}")
    x = np.asarray(x, dtype=np.float64)
    if r == 0:
        return _gauss(x)
    coef = np.zeros(r + 1)
    coef[r] = 1.0
    return (-1.0) ** r * hermite_e.hermeval(x, coef) * _gauss(x)


def _gauss_deriv_sq_mass(r: int) -> float:
    # int (He_r(x) phi(x))^2 dx = (2r)! / (2^(2r+1) r! sqrt(pi))
    if r < 0:
        raise InvalidArgument(f"derivative order must be >= 0, got {r}")
    return math.factorial(2 * r) / (2.0 ** (2 * r + 1) * math.factorial(r) * math.sqrt(math.pi))


def gaussian_kernel() -> Kernel:
    """The standard normal density as kernel, with Hermite-form derivatives."""
    return Kernel(
        name="gaussian",
        eval=_gauss,
        deriv=_gauss_deriv,
        mu0_sq=_gauss_deriv_sq_mass(0),
        mu2=1.0,
        at_zero=_INV_SQRT_2PI,
        deriv_sq_mass=_gauss_deriv_sq_mass,
    )


def roughness(values, a: float, b: float) -> float:
    """``int_a^b psi(x)^2 dx`` by composite Simpson on an equispaced grid.

    ``values`` holds ``psi`` at ``np.linspace(a, b, len(values))``; at
    least 129 nodes are required.
    """
    if not a < b:
        raise InvalidArgument(f"need a < b, got a={a}, b={b}")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 129:
        raise InvalidArgument(f"roughness needs a 1-D grid with >= 129 nodes, got shape {values.shape}")
    dx = (b - a) / (values.size - 1)
    return float(simpson(values * values, dx=dx))
