"""Kernel density estimators and their derivatives on sorted samples.

Each evaluation point only visits the sample points within ``TRUNCATION``
bandwidths of it, located by binary search in the sorted sample. Sums run
in sample-index order for every evaluation point, so the result does not
depend on how the evaluation points are partitioned across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import InvalidArgument
from .kernel import TRUNCATION, Kernel, gaussian_kernel

__all__ = [
    "DensityEstimate",
    "kde_evaluate",
    "kde_derivative",
    "kde_evaluate_bandwidths",
    "estimate_density",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class DensityEstimate:
    eval_points: np.ndarray
    values: np.ndarray
    h: float
    n: int


@numba.njit(cache=True, parallel=True)
def _gauss_sum(sample, xs, h, trunc):
    out = np.empty(xs.size)
    inv_h = 1.0 / h
    for e in numba.prange(xs.size):
        x = xs[e]
        lo = np.searchsorted(sample, x - trunc * h, side="left")
        hi = np.searchsorted(sample, x + trunc * h, side="right")
        acc = 0.0
        for i in range(lo, hi):
            z = (x - sample[i]) * inv_h
            acc += math.exp(-0.5 * z * z)
        out[e] = acc
    return out


@numba.njit(cache=True, parallel=True)
def _gauss_deriv_sum(sample, xs, h, r, trunc):
    out = np.empty(xs.size)
    inv_h = 1.0 / h
    sign = -1.0 if r % 2 else 1.0
    for e in numba.prange(xs.size):
        x = xs[e]
        lo = np.searchsorted(sample, x - trunc * h, side="left")
        hi = np.searchsorted(sample, x + trunc * h, side="right")
        acc = 0.0
        for i in range(lo, hi):
            z = (x - sample[i]) * inv_h
            # probabilists' Hermite recurrence He_{k+1} = z He_k - k He_{k-1}
            hm, hk = 1.0, z
            if r == 0:
                hk = 1.0
            for k in range(1, r):
                hm, hk = hk, z * hk - k * hm
            acc += hk * math.exp(-0.5 * z * z)
        out[e] = sign * acc
    return out


@numba.njit(cache=True, parallel=True)
def _gauss_sum_halving(sample, xs, hs, trunc):
    # hs ascending with hs[j]^2 == 2 * hs[j-1]^2; exp(-z^2/2) at bandwidth h/sqrt2
    # is the square of its value at h, so one exp serves all bandwidths.
    nh = hs.size
    out = np.zeros((nh, xs.size))
    hmax = hs[nh - 1]
    inv_h2 = 1.0 / (hmax * hmax)
    for e in numba.prange(xs.size):
        x = xs[e]
        lo = np.searchsorted(sample, x - trunc * hmax, side="left")
        hi = np.searchsorted(sample, x + trunc * hmax, side="right")
        for i in range(lo, hi):
            d = x - sample[i]
            ad = abs(d)
            v = math.exp(-0.5 * d * d * inv_h2)
            for j in range(nh - 1, -1, -1):
                if ad > trunc * hs[j]:
                    break
                out[j, e] += v
                v = v * v
    return out


def _check_sample(sample, h):
    sample = np.ascontiguousarray(sample, dtype=np.float64)
    if sample.ndim != 1 or sample.size < 1:
        raise InvalidArgument("sample must be a non-empty 1-D array")
    if not h > 0:
        raise InvalidArgument(f"bandwidth must be positive, got {h}")
    if sample.size > 1 and np.any(np.diff(sample) < 0):
        raise InvalidArgument("sample must be sorted ascending")
    return sample


def kde_evaluate(sample, h: float, xs, kernel: Kernel | None = None) -> np.ndarray:
    """Kernel density estimate ``(1/nh) sum_i k((x - X_i)/h)`` at each ``x`` in ``xs``.

    Parameters
    ----------
    sample : array_like
        Observations, sorted ascending.
    h : float
        Bandwidth, > 0.
    xs : array_like
        Evaluation points.
    kernel : Kernel, optional
        Defaults to the Gaussian kernel.
    """
    return kde_derivative(sample, h, 0, xs, kernel)


def kde_derivative(sample, h: float, r: int, xs, kernel: Kernel | None = None) -> np.ndarray:
    """Estimate of the ``r``-th density derivative, ``(1/(n h^{r+1})) sum_i k^{(r)}((x - X_i)/h)``."""
    kernel = kernel or gaussian_kernel()
    sample = _check_sample(sample, h)
    if r < 0:
        raise InvalidArgument(f"derivative order must be >= 0, got {r}")
    xs_arr = np.asarray(xs, dtype=np.float64)
    flat = np.ascontiguousarray(xs_arr.ravel())
    n = sample.size
    scale = 1.0 / (n * h ** (r + 1))
    if kernel.name == "gaussian":
        if r == 0:
            sums = _gauss_sum(sample, flat, float(h), kernel.support)
        else:
            sums = _gauss_deriv_sum(sample, flat, float(h), int(r), kernel.support)
        vals = sums * (_INV_SQRT_2PI * scale)
    else:
        vals = np.empty(flat.size)
        lo = np.searchsorted(sample, flat - kernel.support * h, side="left")
        hi = np.searchsorted(sample, flat + kernel.support * h, side="right")
        for e, x in enumerate(flat):
            vals[e] = np.sum(kernel.deriv((x - sample[lo[e] : hi[e]]) / h, r)) * scale
    return vals.reshape(xs_arr.shape)


def kde_evaluate_bandwidths(sample, hs, xs, kernel: Kernel | None = None) -> np.ndarray:
    """KDE at several bandwidths on one sorted sample; returns shape ``(len(hs), len(xs))``.

    When consecutive bandwidths differ by a factor ``sqrt(2)`` (the usual
    experiment grid) a single exponential per sample/point pair is shared
    across all bandwidths.
    """
    kernel = kernel or gaussian_kernel()
    hs = np.asarray(hs, dtype=np.float64)
    sample = _check_sample(sample, float(np.min(hs)) if hs.size else 0.0)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    order = np.argsort(hs)
    hs_sorted = hs[order]
    ratios = hs_sorted[1:] ** 2 / hs_sorted[:-1] ** 2
    if kernel.name == "gaussian" and hs.size > 1 and np.allclose(ratios, 2.0, rtol=1e-12, atol=0):
        sums = _gauss_sum_halving(sample, xs, hs_sorted, kernel.support)
        vals = sums * (_INV_SQRT_2PI / (sample.size * hs_sorted))[:, None]
        out = np.empty_like(vals)
        out[order] = vals
        return out
    return np.stack([kde_evaluate(sample, h, xs, kernel) for h in hs])


def estimate_density(sample, h: float, a: float, b: float, m: int = 512,
                     kernel: Kernel | None = None) -> DensityEstimate:
    """KDE of an unsorted sample on ``m`` equispaced cell midpoints of ``[a, b]``."""
    xs = a + (b - a) * (np.arange(m) + 0.5) / m
    srt = np.sort(np.asarray(sample, dtype=np.float64))
    return DensityEstimate(xs, kde_evaluate(srt, h, xs, kernel), float(h), srt.size)
