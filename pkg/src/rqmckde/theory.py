"""Closed-form asymptotic rates and bounds for the integrated variance and MISE."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidArgument
from .kernel import Kernel, gaussian_kernel

__all__ = [
    "BoundMethod",
    "BoundReport",
    "mc_aiv",
    "strat_iv_bound",
    "strat_mise_bound",
    "nus_iv_bound",
    "kh_rates",
]


class BoundMethod(str, enum.Enum):
    MC_AIV = "mc_aiv"
    NUS_IV_BOUND = "nus_iv_bound"
    STRAT_IV_BOUND = "strat_iv_bound"
    STRAT_MISE_BOUND = "strat_mise_bound"
    KH_RATE = "kh_rate"


@dataclass(frozen=True)
class BoundReport:
    method: BoundMethod
    value: Optional[float] = None
    rates: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)


def mc_aiv(n: int, h: float, p0: float = 1.0, kernel: Kernel | None = None,
           Rf: Optional[float] = None) -> BoundReport:
    """Integrated variance of the MC KDE over ``[a, b]``.

    Leading term ``p0 mu0(k^2)/(n h)`` where ``p0 = P(a <= X <= b)``; when
    ``Rf = int_a^b f^2`` is given, ``Rf/n`` is subtracted.
    """
    kernel = kernel or gaussian_kernel()
    if n < 1 or not h > 0 or not 0 < p0 <= 1:
        raise InvalidArgument(f"need n >= 1, h > 0, p0 in (0, 1]; got n={n}, h={h}, p0={p0}")
    value = p0 * kernel.mu0_sq / (n * h)
    if Rf is not None:
        value -= Rf / n
    return BoundReport(BoundMethod.MC_AIV, value, {"beta": 1.0, "delta": 1.0},
                       {"n": n, "h": h, "p0": p0, "mu0_sq": kernel.mu0_sq, "Rf": Rf})


def _perfect_power_root(n: int, s: int) -> Optional[int]:
    q = int(round(n ** (1.0 / s)))
    for c in (q - 1, q, q + 1):
        if c >= 1 and c**s == n:
            return c
    return None


def strat_iv_bound(n: int, h: float, s: int, a: float, b: float,
                   kernel: Kernel | None = None) -> BoundReport:
    """Upper bound ``(b - a) s k(0)^2 h^{-2} n^{-(s+1)/s}`` on the IV under stratification.

    ``n`` must equal ``q**s`` for an integer ``q``.
    """
    kernel = kernel or gaussian_kernel()
    if not h > 0 or s < 1 or not a < b:
        raise InvalidArgument(f"need h > 0, s >= 1, a < b; got h={h}, s={s}, [{a}, {b}]")
    q = _perfect_power_root(int(n), s)
    if q is None:
        raise InvalidArgument(f"n={n} is not a perfect {s}-th power")
    k0 = kernel.at_zero
    value = (b - a) * s * k0**2 * h**-2 * n ** (-(s + 1) / s)
    return BoundReport(BoundMethod.STRAT_IV_BOUND, value, {"beta": (s + 1) / s, "delta": 2.0},
                       {"n": n, "h": h, "s": s, "a": a, "b": b, "k0": k0, "q": q})


def strat_mise_bound(n: Optional[int], s: int, a: float, b: float, Rf2: float,
                     kernel: Kernel | None = None) -> BoundReport:
    """MISE bound under stratification with ``h = kappa n^{-(s+1)/(6s)}``.

    Returns ``kappa``, ``K`` and ``nu`` in ``rates``; the bound is ``K n^{-nu}``
    (its value is filled in when ``n`` is given).
    """
    kernel = kernel or gaussian_kernel()
    if not Rf2 > 0:
        raise InvalidArgument(f"Rf2 must be positive, got {Rf2}")
    if s < 1 or not a < b:
        raise InvalidArgument(f"need s >= 1 and a < b; got s={s}, [{a}, {b}]")
    k0sq = kernel.at_zero**2
    mu2sq = kernel.mu2**2
    kappa = ((b - a) * s * k0sq / (mu2sq * Rf2 / 2.0)) ** (1.0 / 6.0)
    K = (b - a) * s * k0sq * kappa**-2 + mu2sq * Rf2 * kappa**4 / 4.0
    nu = (2.0 / 3.0) * (s + 1) / s
    gamma = (s + 1) / (6.0 * s)
    value = None if n is None else K * n**-nu
    h_opt = None if n is None else kappa * n**-gamma
    return BoundReport(BoundMethod.STRAT_MISE_BOUND, value,
                       {"kappa": kappa, "K": K, "nu": nu, "gamma": gamma, "h_opt": h_opt},
                       {"n": n, "s": s, "a": a, "b": b, "Rf2": Rf2, "k0": kernel.at_zero})


def nus_iv_bound(n: int, h: float, s: int, t: Optional[int] = None,
                 kernel: Kernel | None = None) -> BoundReport:
    """Leading term ``2^t 3^s mu0(k^2)/(n h)`` of the IV bound under nested uniform scrambling.

    ``t`` is the quality parameter of the digital net; when omitted it is
    taken as 0 with a warning.
    """
    kernel = kernel or gaussian_kernel()
    if t is None:
        warnings.warn("net quality parameter t unknown; using t = 0", stacklevel=2)
        t = 0
    if t < 0 or n < 1 or not h > 0 or s < 1:
        raise InvalidArgument(f"need t >= 0, n >= 1, h > 0, s >= 1; got t={t}, n={n}, h={h}, s={s}")
    value = 2.0**t * 3.0**s * kernel.mu0_sq / (n * h)
    return BoundReport(BoundMethod.NUS_IV_BOUND, value, {"beta": 1.0, "delta": 1.0, "mise_nu": 0.8},
                       {"n": n, "h": h, "s": s, "t": t, "mu0_sq": kernel.mu0_sq})


def kh_rates(s: int) -> BoundReport:
    """Rates from the Koksma-Hlawka route: IV ``O(n^{-2} h^{-2s})``, MISE ``O(n^{-4/(2+s)})``."""
    if s < 1:
        raise InvalidArgument(f"need s >= 1, got {s}")
    return BoundReport(BoundMethod.KH_RATE, None,
                       {"beta": 2.0, "delta": 2.0 * s, "mise_nu": 4.0 / (2 + s), "h_gamma": 1.0 / (2 + s)},
                       {"s": s})
