"""Simulation models ``X = g(U)`` with ``U`` uniform on the unit cube.

Three models are provided: a normalized weighted sum of standard normals
(whose density is exactly standard normal), the displacement of a
cantilever beam, and a weighted sum of correlated lognormals that
represents an Asian-option payoff under geometric Brownian motion.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, InvalidArgument

__all__ = [
    "Model",
    "GbmSpec",
    "PathConstruction",
    "inv_normal_cdf",
    "clamp_events",
    "reset_clamp_events",
    "sum_of_normals",
    "geometric_weights",
    "exact_normal_Rf2",
    "cantilever",
    "lognormal_sum",
    "path_factor",
    "get_model",
]

CLAMP_Z = 8.2

# Acklam's rational approximation, relative error < 1.15e-9 before refinement
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425

_clamp_lock = threading.Lock()
_clamp_count = 0


def clamp_events() -> int:
    """Number of inputs equal to 0 or 1 that ``inv_normal_cdf`` has clamped."""
    return _clamp_count


def reset_clamp_events() -> None:
    global _clamp_count
    with _clamp_lock:
        _clamp_count = 0


def _tail(q):
    c = _C
    d = _D
    num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
    den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
    return num / den


def inv_normal_cdf(u):
    """Standard normal quantile ``Phi^{-1}(u)``.

    A rational approximation followed by one Halley step gives
    ``|Phi(z) - u| < 1e-9``. Inputs exactly 0 or 1 map to ``-/+ 8.2`` and
    are counted (see ``clamp_events``); inputs outside ``[0, 1]`` raise
    ``DomainError``.
    """
    global _clamp_count
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=np.float64)
    if np.any(~((u >= 0.0) & (u <= 1.0))):
        raise DomainError("inv_normal_cdf needs arguments in [0, 1]")
    z = np.empty_like(u)
    lo = u < _P_LOW
    hi = u > 1.0 - _P_LOW
    mid = ~(lo | hi)

    q = u[mid] - 0.5
    r = q * q
    a, b = _A, _B
    z[mid] = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
              (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z[lo] = _tail(np.sqrt(-2.0 * np.log(u[lo])))
        z[hi] = -_tail(np.sqrt(-2.0 * np.log1p(-u[hi])))

    edge = (u == 0.0) | (u == 1.0)
    inner = ~edge
    zi = z[inner]
    # one Halley step on Phi(z) - u
    ui = u[inner]
    # in the upper half use the complement so 1 - u stays exact
    err = np.where(zi < 0.0, special.ndtr(zi) - ui, (1.0 - ui) - special.ndtr(-zi))
    t = err * math.sqrt(2.0 * math.pi) * np.exp(0.5 * zi * zi)
    z[inner] = zi - t / (1.0 + 0.5 * zi * t)

    n_edge = int(np.count_nonzero(edge))
    if n_edge:
        z[edge] = np.where(u[edge] == 0.0, -CLAMP_Z, CLAMP_Z)
        with _clamp_lock:
            _clamp_count += n_edge
    return float(z) if scalar else z


@dataclass(frozen=True)
class Model:
    """A map ``g: [0,1)^s -> R`` with the interval over which its density is estimated.

    ``g`` takes an ``(n, s)`` array and returns ``n`` values. ``directions``
    gives, per coordinate, +1 if ``g`` is nondecreasing and -1 if it is
    nonincreasing in that coordinate (``None`` when ``g`` is not monotone).
    """

    name: str
    s: int
    g: Callable[[np.ndarray], np.ndarray]
    interval: tuple
    exact_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_Rf2: Optional[float] = None
    directions: Optional[tuple] = None
    params: dict = field(default_factory=dict)

    @property
    def monotone(self) -> bool:
        return self.directions is not None

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.ndim != 2 or u.shape[1] != self.s:
            raise InvalidArgument(f"model {self.name} expects points of shape (n, {self.s}), got {u.shape}")
        return self.g(u)

    def with_interval(self, a: float, b: float) -> "Model":
        if not a < b:
            raise InvalidArgument(f"need a < b, got [{a}, {b}]")
        rf2 = self.exact_Rf2
        if self.name == "normal-sum" and a == -b:
            rf2 = exact_normal_Rf2(b)
        elif self.name == "normal-sum":
            rf2 = None
        return Model(self.name, self.s, self.g, (float(a), float(b)), self.exact_density, rf2,
                     self.directions, dict(self.params))


def _std_normal_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def geometric_weights(s: int) -> np.ndarray:
    """Weights ``a_j = 2^{-j}``, j = 1..s."""
    return 2.0 ** -np.arange(1, s + 1, dtype=np.float64)


def exact_normal_Rf2(b: float) -> float:
    """``int_{-b}^{b} (phi''(x))^2 dx`` for the standard normal density ``phi``."""
    if not b > 0:
        raise InvalidArgument(f"need b > 0, got {b}")
    if math.isinf(b):
        return 3.0 / (8.0 * math.sqrt(math.pi))
    inc, _ = integrate.quad(lambda x: math.exp(-x * x), 0.0, b, epsabs=1e-14, epsrel=1e-14)
    return (-b * (2.0 * b * b - 1.0) * math.exp(-b * b) + 3.0 * inc) / (4.0 * math.pi)


def sum_of_normals(s: int, weights: Optional[Sequence[float]] = None,
                   interval: tuple = (-2.0, 2.0)) -> Model:
    """``X = sum_j a_j Z_j / sigma`` with ``Z_j = Phi^{-1}(U_j)`` and ``sigma^2 = sum_j a_j^2``.

    ``X`` is exactly standard normal for every ``s`` and every weight vector.
    Default weights are all ones.
    """
    if s < 1:
        raise InvalidArgument(f"dimension must be >= 1, got {s}")
    a = np.ones(s) if weights is None else np.asarray(weights, dtype=np.float64)
    if a.shape != (s,):
        raise InvalidArgument(f"expected {s} weights, got shape {a.shape}")
    norm = math.sqrt(float(np.dot(a, a)))
    if norm == 0.0:
        raise InvalidArgument("weights must not all be zero")
    coef = a / norm

    def g(u):
        return inv_normal_cdf(u) @ coef

    lo, hi = interval
    rf2 = exact_normal_Rf2(hi) if lo == -hi else None
    dirs = tuple(1 if c >= 0 else -1 for c in coef)
    return Model("normal-sum", s, g, (float(lo), float(hi)), _std_normal_pdf, rf2, dirs,
                 {"weights": a.tolist()})


def cantilever(L: float = 100.0, w: float = 4.0, t: float = 2.0, D0: float = 2.2535,
               E: tuple = (2.9e7, 1.45e6), X: tuple = (500.0, 100.0), Y: tuple = (1000.0, 100.0),
               interval: tuple = (0.407, 1.515)) -> Model:
    """Relative displacement ``D/D0 - 1`` of a cantilever beam.

    ``D = 4 L^3 / (E w t) * sqrt(Y^2/t^4 + X^2/w^4)`` with independent normal
    Young's modulus ``E`` and loads ``X`` (horizontal) and ``Y`` (vertical),
    each given as ``(mean, sd)``. Coordinates of ``u`` feed ``E, X, Y`` in order.
    """
    const = 4.0 * L**3 / (w * t)

    def g(u):
        z = inv_normal_cdf(u)
        e = E[0] + E[1] * z[:, 0]
        x = X[0] + X[1] * z[:, 1]
        y = Y[0] + Y[1] * z[:, 2]
        d = const / e * np.sqrt(y * y / t**4 + x * x / w**4)
        return d / D0 - 1.0

    # decreasing in E; increasing in X and Y while the loads stay positive
    return Model("cantilever", 3, g, tuple(map(float, interval)), None, None, (-1, 1, 1),
                 {"L": L, "w": w, "t": t, "D0": D0, "E": list(E), "X": list(X), "Y": list(Y)})


class PathConstruction(str, enum.Enum):
    PCA = "pca"
    BB = "bb"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class GbmSpec:
    """Asian-option setup: geometric Brownian motion observed at ``t_j = j/s``.

    ``weighting="equal"`` uses ``w_j = s0/s`` (arithmetic average price);
    ``weighting="decreasing"`` uses ``w_j = s0 (s - j + 1)/s``. Explicit
    ``weights`` override both.
    """

    s: int = 12
    s0: float = 100.0
    K: float = 101.0
    sigma: float = 0.12136
    mu: float = 0.1
    weights: Optional[tuple] = None
    weighting: str = "equal"
    path_construction: PathConstruction = PathConstruction.PCA

    def __post_init__(self):
        object.__setattr__(self, "path_construction", PathConstruction(self.path_construction))
        if self.s < 1:
            raise InvalidArgument(f"need s >= 1, got {self.s}")
        if not self.sigma > 0:
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")
        if self.weighting not in ("equal", "decreasing"):
            raise InvalidArgument(f"unknown weighting {self.weighting!r}")
        w = self.resolved_weights()
        if w.shape != (self.s,) or np.any(w <= 0):
            raise InvalidArgument("weights must be s positive numbers")

    def resolved_weights(self) -> np.ndarray:
        if self.weights is not None:
            return np.asarray(self.weights, dtype=np.float64)
        j = np.arange(1, self.s + 1, dtype=np.float64)
        if self.weighting == "equal":
            return np.full(self.s, self.s0 / self.s)
        return self.s0 * (self.s - j + 1) / self.s

    @property
    def times(self) -> np.ndarray:
        return np.arange(1, self.s + 1, dtype=np.float64) / self.s

    @property
    def mean(self) -> np.ndarray:
        return (self.mu - 0.5 * self.sigma**2) * self.times

    @property
    def covariance(self) -> np.ndarray:
        t = self.times
        return self.sigma**2 * np.minimum.outer(t, t)


def _bridge_factor(t: np.ndarray) -> np.ndarray:
    """Rows express ``B(t_j)`` in the Brownian-bridge ordering of the normals."""
    s = t.size
    rows = np.zeros((s, s))
    known = np.zeros(s, dtype=bool)
    rows[s - 1, 0] = math.sqrt(t[-1])
    known[s - 1] = True
    col = 1
    # bisect index ranges breadth-first; left end -1 stands for B(0) = 0
    queue = [(-1, s - 1)]
    while queue:
        nxt = []
        for left, right in queue:
            if right - left < 2:
                continue
            mid = (left + right) // 2
            tl = 0.0 if left < 0 else t[left]
            tr, tm = t[right], t[mid]
            wl = (tr - tm) / (tr - tl)
            wr = (tm - tl) / (tr - tl)
            base = rows[right] * wr
            if left >= 0:
                base = base + rows[left] * wl
            rows[mid] = base
            rows[mid, col] = math.sqrt((tm - tl) * (tr - tm) / (tr - tl))
            known[mid] = True
            col += 1
            nxt += [(left, mid), (mid, right)]
        queue = nxt
    assert known.all() and col == s
    return rows


def path_factor(spec: GbmSpec) -> np.ndarray:
    """Matrix ``A`` with ``A A^T`` equal to the log-price covariance."""
    cov = spec.covariance
    kind = spec.path_construction
    if kind is PathConstruction.PCA:
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        if vals[-1] < -1e-12 * vals[0]:
            raise RuntimeError("covariance matrix is not positive semidefinite")
        return vecs * np.sqrt(np.clip(vals, 0.0, None))
    if kind is PathConstruction.SEQUENTIAL:
        return np.linalg.cholesky(cov)
    return spec.sigma * _bridge_factor(spec.times)


def lognormal_sum(spec: GbmSpec = GbmSpec(), interval: tuple = (0.0, 27.13)) -> Model:
    """Payoff variable ``sum_j w_j exp(Y_j) - K`` for a multinormal log-price path ``Y``.

    ``Y = m + A z`` with ``m_j = (mu - sigma^2/2) t_j`` and ``z`` obtained by
    inversion of the uniforms. Values below zero are kept.
    """
    A = path_factor(spec)
    m = spec.mean
    w = spec.resolved_weights()
    K = spec.K

    def g(u):
        y = inv_normal_cdf(u) @ A.T + m
        return np.exp(y) @ w - K

    params = {"s": spec.s, "s0": spec.s0, "K": K, "sigma": spec.sigma, "mu": spec.mu,
              "weighting": spec.weighting, "path_construction": spec.path_construction.value}
    return Model("option", spec.s, g, tuple(map(float, interval)), None, None, None, params)


def get_model(name: str, s: Optional[int] = None, weights=None, **kwargs) -> Model:
    """Build a model by name: ``normal-sum``, ``cantilever`` or ``option``."""
    key = name.strip().lower()
    if key in ("normal-sum", "normal", "sum-of-normals"):
        s = 1 if s is None else s
        if isinstance(weights, str):
            if weights == "geometric":
                weights = geometric_weights(s)
            elif weights in ("equal", "ones"):
                weights = None
            else:
                raise InvalidArgument(f"unknown weights {weights!r}")
        return sum_of_normals(s, weights, **kwargs)
    if key == "cantilever":
        if s not in (None, 3):
            raise InvalidArgument("cantilever model has s = 3")
        return cantilever(**kwargs)
    if key in ("option", "lognormal-sum", "asian"):
        gbm_keys = {f for f in GbmSpec.__dataclass_fields__}
        gkw = {k: v for k, v in kwargs.items() if k in gbm_keys}
        rest = {k: v for k, v in kwargs.items() if k not in gbm_keys}
        if s is not None:
            gkw["s"] = s
        if weights is not None and not isinstance(weights, str):
            gkw["weights"] = tuple(weights)
        elif isinstance(weights, str):
            gkw["weighting"] = weights
        return lognormal_sum(GbmSpec(**gkw), **rest)
    raise InvalidArgument(f"unknown model {name!r}")
