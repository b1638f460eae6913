"""Plug-in bandwidth selection.

The bandwidth minimizing the asymptotic MISE depends on the roughness
``R(f'')`` of the unknown density. It is estimated by a KDE of ``f''``,
whose own bandwidth depends on ``R(f'''')``, and so on; the recursion is
started at order ``r0 + 2`` from a normal density with the sample mean and
standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DegenerateSample, InvalidArgument
from .kde import kde_derivative
from .kernel import Kernel, gaussian_kernel, roughness

__all__ = [
    "PluginResult",
    "normal_reference_R",
    "stage_bandwidth",
    "plugin_chain",
    "mc_optimal_h",
    "amise_at_optimum",
    "QUADRATURE_NODES",
]

QUADRATURE_NODES = 1025


@dataclass(frozen=True)
class PluginResult:
    """Outcome of the plug-in recursion.

    ``chain`` lists ``(r, h_r, R_hat(f^{(r)}))`` for every stage, last stage first
    estimated being ``r = 2``.
    """

    Rf2_hat: float
    B_hat: float
    h_star: float
    n: int
    chain: list = field(default_factory=list)


def normal_reference_R(r: int, mu_hat: float, sigma_hat: float, a: float, b: float) -> float:
    """``int_a^b (phi_{mu,sigma}^{(r)}(x))^2 dx`` for the ``N(mu, sigma^2)`` density."""
    if not sigma_hat > 0:
        raise InvalidArgument(f"sigma_hat must be positive, got {sigma_hat}")
    if not 1 <= r <= 6:
        raise InvalidArgument(f"r must lie in 1..6, got {r}")
    if not a < b:
        raise InvalidArgument(f"need a < b, got a={a}, b={b}")
    kern = gaussian_kernel()
    # phi_{mu,sigma}^{(r)}(x) = sigma^{-(r+1)} phi^{(r)}((x - mu)/sigma); integrate in z
    za, zb = (a - mu_hat) / sigma_hat, (b - mu_hat) / sigma_hat
    za, zb = max(za, -40.0), min(zb, 40.0)
    if za >= zb:
        return 0.0
    val, _ = integrate.quad(lambda z: float(kern.deriv(z, r)) ** 2, za, zb,
                            epsabs=1e-15, epsrel=1e-12, limit=200)
    return val / sigma_hat ** (2 * r + 1)


def stage_bandwidth(r: int, R_next: float, n: int, kernel: Kernel | None = None) -> float:
    """Asymptotically optimal bandwidth for the KDE of ``f^{(r)}``.

    ``R_next`` is the roughness ``R(f^{(r+2)})``. For ``r = 0`` this is the
    AMISE-optimal bandwidth of the density estimator itself.
    """
    kernel = kernel or gaussian_kernel()
    if not R_next > 0:
        raise InvalidArgument(f"R_next must be positive, got {R_next}")
    if n < 1:
        raise InvalidArgument(f"need n >= 1, got {n}")
    num = (2 * r + 1) * kernel.deriv_sq_mass(r)
    den = kernel.mu2**2 * R_next * n
    return (num / den) ** (1.0 / (2 * r + 5))


def mc_optimal_h(B: float, n: int, kernel: Kernel | None = None) -> float:
    """``(Q/n)^{1/5}`` with ``Q = mu0(k^2) / (mu2(k)^2 R(f''))`` and ``R(f'') = 4B/mu2(k)^2``."""
    kernel = kernel or gaussian_kernel()
    if not B > 0:
        raise InvalidArgument(f"B must be positive, got {B}")
    rf2 = 4.0 * B / kernel.mu2**2
    Q = kernel.mu0_sq / (kernel.mu2**2 * rf2)
    return (Q / n) ** 0.2


def amise_at_optimum(Q: float, n: int, kernel: Kernel | None = None) -> float:
    """Asymptotic MISE of the MC KDE at the optimal bandwidth ``(Q/n)^{1/5}``."""
    kernel = kernel or gaussian_kernel()
    return 1.25 * Q**-0.2 * kernel.mu0_sq * n**-0.8


def plugin_chain(sample, a: float, b: float, r0: int = 2, kernel: Kernel | None = None,
                 nodes: int = QUADRATURE_NODES) -> PluginResult:
    """Estimate ``R(f'')``, ``B = mu2(k)^2 R(f'')/4`` and the MC-optimal bandwidth.

    Parameters
    ----------
    sample : array_like
        Observations (any order), at least 100 of them.
    a, b : float
        Interval over which roughness integrals are taken.
    r0 : int
        Even starting order; ``R(f^{(r0+2)})`` comes from the normal reference.
    nodes : int
        Simpson nodes for each roughness integral.
    """
    kernel = kernel or gaussian_kernel()
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    n = x.size
    if n < 100:
        raise InvalidArgument(f"plug-in selection needs n >= 100, got {n}")
    if r0 < 2 or r0 % 2:
        raise InvalidArgument(f"r0 must be an even integer >= 2, got {r0}")
    if not a < b:
        raise InvalidArgument(f"need a < b, got a={a}, b={b}")
    mu_hat = float(np.mean(x))
    sigma_hat = float(np.std(x, ddof=1))
    if not sigma_hat > 0:
        raise DegenerateSample("sample has zero standard deviation")

    grid = np.linspace(a, b, nodes)
    R_next = normal_reference_R(r0 + 2, mu_hat, sigma_hat, a, b)
    chain = []
    for r in range(r0, 1, -2):
        h_r = stage_bandwidth(r, R_next, n, kernel)
        R_next = roughness(kde_derivative(x, h_r, r, grid, kernel), a, b)
        if not R_next > 0:
            raise DegenerateSample(f"estimated roughness of order {r} is not positive")
        chain.append((r, h_r, R_next))
    rf2 = R_next
    B_hat = kernel.mu2**2 * rf2 / 4.0
    return PluginResult(rf2, B_hat, mc_optimal_h(B_hat, n, kernel), n, chain)
