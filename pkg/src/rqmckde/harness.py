"""Empirical IV / ISB / MISE study of a KDE driven by a given point set.

The workflow mirrors a two-stage regression experiment:

1. ``estimate_surface`` estimates the integrated variance (and, when the
   exact density is known, the MISE and ISB) on a grid of sample sizes
   ``n`` and bandwidths ``h``.
2. ``fit_iv_model`` regresses ``log2 IV`` on ``log2 n`` and ``log2 h``,
   i.e. fits ``IV ~ C n^-beta h^-delta``.
3. ``derive_optimal`` combines the fit with the bias constant ``B`` of
   ``ISB ~ B h^4`` to get the MISE-optimal ``h = kappa n^-gamma`` and the
   implied MISE rate ``K n^-nu``.
4. ``second_stage`` checks the model out of sample with fresh replicates
   at the recommended bandwidths.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bandwidth import PluginResult, plugin_chain
from .errors import InvalidArgument
from .kde import kde_evaluate, kde_evaluate_bandwidths
from .kernel import Kernel, gaussian_kernel
from .models import Model
from .pointsets import SamplerKind, SamplerSpec, derive_seed, generate, stratified_q

__all__ = [
    "ALPHA",
    "PRESETS",
    "ExperimentGrid",
    "IvSurface",
    "IvFit",
    "MiseReport",
    "SecondStage",
    "ExperimentResult",
    "grid_from_preset",
    "evaluation_points",
    "estimate_surface",
    "fit_iv",
    "fit_iv_model",
    "derive_optimal",
    "second_stage",
    "estimate_B",
    "pilot_ell0",
    "run_experiment",
    "write_surface_csv",
    "write_fit_json",
    "format_summary",
]

log = logging.getLogger(__name__)

ALPHA = 4.0

PRESETS = {
    "desk": {"log2n": (10, 15), "n_r": 50, "n_e": 1024},
    "paper": {"log2n": (14, 19), "n_r": 100, "n_e": 1024},
}

# stream tags for derive_seed
_EVAL_STREAM = 0
_SURFACE_STREAM = 1
_SECOND_STREAM = 2
_PILOT_STREAM = 3
_PLUGIN_STREAM = 4


@dataclass(frozen=True)
class ExperimentGrid:
    """The ``(n, h)`` design with ``h_j = 2^(-ell0 + j/2)``, ``j = 0..n_h-1``.

    ``ell0=None`` means the anchor is chosen by a pilot run.
    """

    n_values: tuple
    ell0: Optional[float]
    n_r: int = 100
    n_e: int = 1024
    interval: Optional[tuple] = None
    seed: int = 0
    n_h: int = 6

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.ell0 is not None and abs(2 * self.ell0 - round(2 * self.ell0)) > 1e-12:
            raise InvalidArgument(f"2*ell0 must be an integer, got ell0={self.ell0}")
        if self.n_r < 2:
            raise InvalidArgument(f"need n_r >= 2 replicates, got {self.n_r}")
        if self.n_e < 1 or self.n_h < 1 or not self.n_values:
            raise InvalidArgument("grid needs n_e >= 1, n_h >= 1 and at least one n")

    @property
    def h_values(self) -> np.ndarray:
        if self.ell0 is None:
            raise InvalidArgument("grid ell0 not set; run pilot_ell0 first")
        return 2.0 ** (-self.ell0 + np.arange(self.n_h) / 2.0)

    def with_ell0(self, ell0: float) -> "ExperimentGrid":
        return ExperimentGrid(self.n_values, ell0, self.n_r, self.n_e, self.interval, self.seed, self.n_h)


def grid_from_preset(preset: str, ell0: Optional[float] = None, seed: int = 0, interval=None, **overrides) -> ExperimentGrid:
    """Grid for the ``desk`` or ``paper`` preset; keyword overrides win."""
    try:
        p = dict(PRESETS[preset])
    except KeyError:
        raise InvalidArgument(f"unknown preset {preset!r}") from None
    lo, hi = overrides.pop("log2n", p["log2n"])
    n_r = overrides.pop("n_r", p["n_r"])
    n_e = overrides.pop("n_e", p["n_e"])
    if overrides:
        raise InvalidArgument(f"unexpected grid options {sorted(overrides)}")
    return ExperimentGrid(tuple(2**k for k in range(lo, hi + 1)), ell0, n_r, n_e, interval, seed)


@dataclass
class IvSurface:
    """Per-cell estimates; arrays are indexed ``[n_index, h_index]``."""

    model: str
    sampler: str
    s: int
    n_values: np.ndarray
    h_values: np.ndarray
    iv: np.ndarray
    iv_se: np.ndarray
    reps: int
    mise: Optional[np.ndarray] = None
    isb: Optional[np.ndarray] = None

    @property
    def isb_clamped(self) -> Optional[np.ndarray]:
        return None if self.isb is None else np.maximum(self.isb, 0.0)

    def rows(self):
        for i, n in enumerate(self.n_values):
            for j, h in enumerate(self.h_values):
                yield {
                    "sampler": self.sampler,
                    "s": self.s,
                    "log2n": math.log2(n),
                    "log2h": math.log2(h),
                    "iv": float(self.iv[i, j]),
                    "mise": "" if self.mise is None else float(self.mise[i, j]),
                    "isb": "" if self.isb is None else float(self.isb[i, j]),
                    "reps": self.reps,
                }


@dataclass(frozen=True)
class IvFit:
    C: float
    beta: float
    delta: float
    R2: float
    B: Optional[float] = None
    alpha: float = ALPHA


@dataclass(frozen=True)
class MiseReport:
    kappa_star: float
    gamma_star: float
    K_star: float
    nu_star: float
    ell_star: float
    K_tilde: Optional[float] = None
    nu_tilde: Optional[float] = None
    e19: Optional[float] = None
    e19_label: str = "e19"


@dataclass
class SecondStage:
    """Out-of-sample check at ``h = kappa n^-gamma``.

    ``basis`` is ``"mise"`` when the exact density is known, ``"iv+aisb"``
    when the MISE is estimated as ``IV + B h^4`` and ``"iv"`` otherwise.
    """

    n_values: np.ndarray
    h_values: np.ndarray
    iv: np.ndarray
    mise: np.ndarray
    K_tilde: float
    nu_tilde: float
    R2: float
    e_last: float
    e_label: str
    e19: float
    e19_extrapolated: bool
    basis: str


@dataclass
class ExperimentResult:
    model: str
    sampler: str
    s: int
    grid: ExperimentGrid
    B: float
    surface: IvSurface
    fit: IvFit
    report: MiseReport
    second: Optional[SecondStage] = None
    plugin: Optional[PluginResult] = None


def evaluation_points(a: float, b: float, n_e: int, seed: int) -> np.ndarray:
    """One uniform point in each of ``n_e`` equal cells of ``[a, b]``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed & (2**64 - 1)))
    v = rng.random(n_e)
    return a + (b - a) * (np.arange(n_e) + v) / n_e


def _replicate_sample(model: Model, spec: SamplerSpec, n: int, seed: int) -> np.ndarray:
    ps = generate(spec.with_seed(seed), n)
    return np.sort(model(ps.points))


def _actual_n(spec: SamplerSpec, n: int) -> int:
    if spec.kind is SamplerKind.STRATIFIED:
        return stratified_q(spec.s, n) ** spec.s
    return n


def _variance_with_jackknife(vals: np.ndarray, width: float):
    """IV estimate and its jackknife standard error from replicate values.

    ``vals`` has shape ``(n_r, ..., n_e)``; the leading axis is replicates.
    """
    n_r = vals.shape[0]
    # centre on the first replicate: exact zeros for constant values, less cancellation
    vals = vals - vals[0]
    var = np.var(vals, axis=0, ddof=1)
    iv = width * var.mean(axis=-1)
    if n_r < 3:
        return iv, np.full_like(iv, np.nan)
    s1 = vals.sum(axis=0)
    s2 = (vals * vals).sum(axis=0)
    loo1 = s1[None] - vals
    loo2 = s2[None] - vals * vals
    loo_var = (loo2 - loo1 * loo1 / (n_r - 1)) / (n_r - 2)
    loo_iv = width * loo_var.mean(axis=-1)
    se = np.sqrt((n_r - 1) / n_r * ((loo_iv - loo_iv.mean(axis=0)) ** 2).sum(axis=0))
    return iv, se


def estimate_surface(model: Model, spec: SamplerSpec, grid: ExperimentGrid,
                     kernel: Kernel | None = None) -> IvSurface:
    """Estimate IV (and MISE, ISB when the density is known) on every grid cell.

    For each ``n`` and each of ``n_r`` replicates, one sorted sample feeds
    the KDE at all bandwidths. IV is ``(b - a)`` times the average over the
    stratified evaluation points of the unbiased replicate variance.
    ``ISB = MISE - IV``.
    """
    kernel = kernel or gaussian_kernel()
    if spec.s != model.s:
        raise InvalidArgument(f"sampler dimension {spec.s} != model dimension {model.s}")
    a, b = grid.interval or model.interval
    width = b - a
    xs = evaluation_points(a, b, grid.n_e, derive_seed(grid.seed, _EVAL_STREAM))
    hs = grid.h_values
    f_true = model.exact_density(xs) if model.exact_density is not None else None

    n_n = len(grid.n_values)
    iv = np.empty((n_n, hs.size))
    se = np.empty_like(iv)
    mise = np.empty_like(iv) if f_true is not None else None
    actual = []
    for i, n in enumerate(grid.n_values):
        vals = np.empty((grid.n_r, hs.size, xs.size))
        for r in range(grid.n_r):
            x = _replicate_sample(model, spec, n, derive_seed(grid.seed, _SURFACE_STREAM, i, r))
            vals[r] = kde_evaluate_bandwidths(x, hs, xs, kernel)
        actual.append(_actual_n(spec, n))
        iv[i], se[i] = _variance_with_jackknife(vals, width)
        if f_true is not None:
            mise[i] = width * ((vals - f_true) ** 2).mean(axis=(0, 2))
        log.debug("surface %s/%s n=%d iv=%s", model.name, spec.kind.value, n, iv[i])
    return IvSurface(
        model=model.name,
        sampler=spec.kind.value,
        s=spec.s,
        n_values=np.array(actual),
        h_values=hs,
        iv=iv,
        iv_se=se,
        reps=grid.n_r,
        mise=mise,
        isb=None if mise is None else mise - iv,
    )


def fit_iv(n, h, iv, B: Optional[float] = None) -> IvFit:
    """Least-squares fit of ``log2 iv = log2 C - beta log2 n - delta log2 h``."""
    n = np.asarray(n, dtype=np.float64).ravel()
    h = np.asarray(h, dtype=np.float64).ravel()
    iv = np.asarray(iv, dtype=np.float64).ravel()
    keep = iv > 0
    if np.count_nonzero(keep) < 6:
        raise InvalidArgument("need at least 6 cells with positive IV")
    ln, lh, ly = np.log2(n[keep]), np.log2(h[keep]), np.log2(iv[keep])
    if np.ptp(ln) == 0 or np.ptp(lh) == 0:
        raise InvalidArgument("singular design: n or h takes a single value")
    X = np.column_stack([np.ones_like(ln), -ln, -lh])
    if np.linalg.matrix_rank(X) < 3:
        raise InvalidArgument("singular design: log n and log h are collinear")
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return IvFit(float(2.0 ** coef[0]), float(coef[1]), float(coef[2]), min(max(r2, 0.0), 1.0), B)


def fit_iv_model(surface: IvSurface, B: Optional[float] = None) -> IvFit:
    """``fit_iv`` over all cells of a surface."""
    nn, hh = np.meshgrid(surface.n_values, surface.h_values, indexing="ij")
    return fit_iv(nn, hh, surface.iv, B)


def derive_optimal(fit: IvFit, B: Optional[float] = None, n_ref: int = 2**19) -> MiseReport:
    """MISE-optimal ``h = kappa n^-gamma`` and rate ``K n^-nu`` implied by a fit.

    ``ell_star`` is ``-log2`` of the optimal bandwidth at ``n_ref``.
    """
    B = fit.B if B is None else B
    if B is None or not B > 0:
        raise InvalidArgument(f"bias constant B must be positive, got {B}")
    a = fit.alpha
    C, beta, delta = fit.C, fit.beta, fit.delta
    kappa = (C * delta / (B * a)) ** (1.0 / (a + delta))
    gamma = beta / (a + delta)
    K = C * kappa**-delta + B * kappa**a
    nu = a * beta / (a + delta)
    ell = -math.log2(kappa) + math.log2(n_ref) * gamma
    return MiseReport(kappa, gamma, K, nu, ell)


def _label_for(n: int) -> str:
    k = math.log2(n)
    return f"e{int(k)}" if k == int(k) else f"e{k:.2f}"


def second_stage(model: Model, spec: SamplerSpec, kappa_star: float, gamma_star: float,
                 n_values: Sequence[int], n_r: int, seed: int, n_e: int = 1024,
                 B: Optional[float] = None, kernel: Kernel | None = None) -> SecondStage:
    """Fresh replicates at ``h = kappa n^-gamma``; regress ``log2 MISE`` on ``log2 n``."""
    kernel = kernel or gaussian_kernel()
    if n_r < 2:
        raise InvalidArgument(f"need n_r >= 2 replicates, got {n_r}")
    a, b = model.interval
    width = b - a
    xs = evaluation_points(a, b, n_e, derive_seed(seed, _SECOND_STREAM, _EVAL_STREAM))
    f_true = model.exact_density(xs) if model.exact_density is not None else None
    ns, hs, ivs, mises = [], [], [], []
    for i, n in enumerate(n_values):
        n_act = _actual_n(spec, n)
        h = kappa_star * n_act**-gamma_star
        vals = np.empty((n_r, xs.size))
        for r in range(n_r):
            x = _replicate_sample(model, spec, n, derive_seed(seed, _SECOND_STREAM, i, r))
            vals[r] = kde_evaluate(x, h, xs, kernel)
        iv = width * np.var(vals - vals[0], axis=0, ddof=1).mean()
        if f_true is not None:
            mise = width * ((vals - f_true) ** 2).mean()
            basis = "mise"
        elif B is not None:
            mise = iv + B * h**4
            basis = "iv+aisb"
        else:
            mise = iv
            basis = "iv"
        ns.append(n_act)
        hs.append(h)
        ivs.append(iv)
        mises.append(mise)
    ns, hs, ivs, mises = map(np.asarray, (ns, hs, ivs, mises))
    ln, ly = np.log2(ns), np.log2(mises)
    if np.ptp(ln) > 0:
        slope, icpt = np.polyfit(ln, ly, 1)
        resid = ly - (icpt + slope * ln)
        ss = float(np.sum((ly - ly.mean()) ** 2))
        r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    else:
        slope, icpt, r2 = float("nan"), float(ly[0]), float("nan")
    K_t, nu_t = 2.0**icpt, -slope
    e_last = -float(ly[-1])
    label = _label_for(ns[-1])
    if ns[-1] == 2**19:
        e19, extrap = e_last, False
    else:
        e19, extrap = -icpt + 19.0 * nu_t, True
    return SecondStage(ns, hs, ivs, mises, float(K_t), float(nu_t), float(r2), e_last, label,
                       float(e19), extrap, basis)


def estimate_B(model: Model, n: int = 2**16, kind: SamplerKind | str = SamplerKind.SOBOL_LMS,
               seed: int = 0, kernel: Kernel | None = None) -> PluginResult:
    """Plug-in estimate of the bias constant from one RQMC sample of size ``n``."""
    spec = SamplerSpec(SamplerKind.parse(kind), model.s, derive_seed(seed, _PLUGIN_STREAM))
    x = model(generate(spec, n).points)
    a, b = model.interval
    return plugin_chain(x, a, b, kernel=kernel)


def _round_half(x: float) -> float:
    return math.floor(2.0 * x + 0.5) / 2.0


def pilot_ell0(model: Model, spec: SamplerSpec, n_ref: int, B: float, override: Optional[float] = None,
               n_r: int = 8, n_e: int = 128, seed: int = 0, kernel: Kernel | None = None) -> float:
    """Choose ``ell0`` so the bandwidth grid brackets the optimum at ``n_ref``.

    A short pilot run at ``n_ref`` estimates the IV on a broad bandwidth
    ladder; a local fit ``IV ~ c h^-delta`` near the minimum of
    ``IV + B h^4`` gives the optimal bandwidth ``h*``; ``-log2 h*`` is
    rounded down to a multiple of 1/2 and ``ell0`` is that plus one, so the
    optimum sits in the upper part of the grid. ``override`` short-circuits
    the pilot.
    """
    if override is not None:
        return float(override)
    kernel = kernel or gaussian_kernel()
    a, b = model.interval
    width = b - a
    # start two octaves above the MC-optimal bandwidth and descend
    Q = kernel.mu0_sq / (kernel.mu2**2 * 4.0 * B / kernel.mu2**2)
    ell_mc = -math.log2((Q / _actual_n(spec, n_ref)) ** 0.2)
    ells = np.arange(_round_half(ell_mc) - 1.5, _round_half(ell_mc) + 9.0, 0.5)
    hs = 2.0**-ells
    xs = evaluation_points(a, b, n_e, derive_seed(seed, _PILOT_STREAM, _EVAL_STREAM))
    vals = np.empty((n_r, hs.size, n_e))
    for r in range(n_r):
        x = _replicate_sample(model, spec, n_ref, derive_seed(seed, _PILOT_STREAM, r))
        vals[r] = kde_evaluate_bandwidths(x, hs, xs, kernel)
    iv = width * np.var(vals, axis=0, ddof=1).mean(axis=-1)
    mise = iv + B * hs**4
    j = int(np.argmin(mise))
    near = (np.abs(ells - ells[j]) <= 1.5) & (iv > 0)
    if np.count_nonzero(near) >= 3:
        slope, icpt = np.polyfit(np.log2(hs[near]), np.log2(iv[near]), 1)
        delta, c = -slope, 2.0**icpt
        if delta > 0:
            h_star = (c * delta / (ALPHA * B)) ** (1.0 / (ALPHA + delta))
        else:
            h_star = hs[j]
    else:
        h_star = hs[j]
    ell0 = math.floor(-2.0 * math.log2(h_star)) / 2.0 + 1.0
    log.info("pilot %s/%s: h*=%.4g -> ell0=%.1f", model.name, spec.kind.value, h_star, ell0)
    return ell0


def run_experiment(model: Model, spec: SamplerSpec, grid: ExperimentGrid, B: Optional[float] = None,
                   ell0: Optional[float] = None, do_second_stage: bool = True,
                   kernel: Kernel | None = None) -> ExperimentResult:
    """Full pipeline: B estimate, pilot ``ell0``, surface, fit, optimum, second stage.

    An explicit ``ell0`` wins over ``grid.ell0``; when neither is set the
    pilot run picks it. ``B`` defaults to the plug-in estimate.
    """
    kernel = kernel or gaussian_kernel()
    plugin = None
    if B is None:
        plugin = estimate_B(model, seed=grid.seed, kernel=kernel)
        B = plugin.B_hat
    if ell0 is None and grid.ell0 is None:
        ell0 = pilot_ell0(model, spec, max(grid.n_values), B, seed=grid.seed, kernel=kernel)
    if ell0 is not None:
        grid = grid.with_ell0(ell0)
    surface = estimate_surface(model, spec, grid, kernel)
    fit = fit_iv_model(surface, B)
    report = derive_optimal(fit)
    second = None
    if do_second_stage:
        second = second_stage(model, spec, report.kappa_star, report.gamma_star, grid.n_values,
                              grid.n_r, grid.seed, grid.n_e, B, kernel)
        report = MiseReport(report.kappa_star, report.gamma_star, report.K_star, report.nu_star,
                            report.ell_star, second.K_tilde, second.nu_tilde, second.e19,
                            "e19 (extrapolated)" if second.e19_extrapolated else "e19")
    return ExperimentResult(model.name, spec.kind.value, spec.s, grid, B, surface, fit, report,
                            second, plugin)


SURFACE_COLUMNS = ("sampler", "s", "log2n", "log2h", "iv", "mise", "isb", "reps")


def write_surface_csv(surface: IvSurface, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SURFACE_COLUMNS)
        w.writeheader()
        for row in surface.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def fit_record(result: ExperimentResult) -> dict:
    f, r = result.fit, result.report
    rec = {
        "model": result.model,
        "sampler": result.sampler,
        "s": result.s,
        "ell0": result.grid.ell0,
        "C": f.C,
        "beta": f.beta,
        "delta": f.delta,
        "R2": f.R2,
        "B": result.B,
        "kappa_star": r.kappa_star,
        "gamma_star": r.gamma_star,
        "K_star": r.K_star,
        "nu_star": r.nu_star,
        "ell_star": r.ell_star,
        "K_tilde": r.K_tilde,
        "nu_tilde": r.nu_tilde,
        "e19": r.e19,
        "e19_label": r.e19_label,
    }
    if result.second is not None:
        rec["second_stage_basis"] = result.second.basis
        rec[result.second.e_label] = result.second.e_last
    return rec


def write_fit_json(result: ExperimentResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(fit_record(result), fh, indent=2, sort_keys=False)
        fh.write("\n")


def format_summary(results: Sequence[ExperimentResult]) -> str:
    """Plain-text table with one column per result, rows as in the usual parameter tables."""
    rows = [
        ("", lambda r: r.sampler.upper()),
        ("s", lambda r: str(r.s)),
        ("ell0", lambda r: f"{r.grid.ell0:.1f}"),
        ("C", lambda r: f"{r.fit.C:.3g}"),
        ("beta", lambda r: f"{r.fit.beta:.3f}"),
        ("delta", lambda r: f"{r.fit.delta:.3f}"),
        ("R2", lambda r: f"{r.fit.R2:.3f}"),
        ("B", lambda r: f"{r.B:.4g}"),
        ("kappa*", lambda r: f"{r.report.kappa_star:.3f}"),
        ("gamma*", lambda r: f"{r.report.gamma_star:.3f}"),
        ("ell*", lambda r: f"{r.report.ell_star:.3f}"),
        ("K*", lambda r: f"{r.report.K_star:.3g}"),
        ("nu*", lambda r: f"{r.report.nu_star:.3f}"),
        ("nu~", lambda r: "-" if r.report.nu_tilde is None else f"{r.report.nu_tilde:.3f}"),
        ("e19", lambda r: "-" if r.report.e19 is None else
            f"{r.report.e19:.2f}" + ("*" if r.second and r.second.e19_extrapolated else "")),
    ]
    table = [[name] + [fn(r) for r in results] for name, fn in rows]
    widths = [max(len(row[c]) for row in table) for c in range(len(table[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    if any(r.second and r.second.e19_extrapolated for r in results):
        lines.append("* extrapolated from the second-stage fit")
    return "\n".join(lines)
