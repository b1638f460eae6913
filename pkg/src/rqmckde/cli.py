"""Command-line entry point: ``rqmckde run | bounds | density``.

Exit status is 0 when every requested artifact was written, 1 on a
configuration or runtime error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


from . import harness, theory
from .bandwidth import mc_optimal_h
from .errors import InvalidArgument
from .kde import estimate_density
from .models import get_model
from .pointsets import SamplerKind, SamplerSpec, derive_seed, generate

log = logging.getLogger("rqmckde")

DENSITY_POINTS = 512


@dataclass
class RunConfig:
    """Everything a ``run`` or ``density`` invocation needs; serializes to flat JSON."""

    model: str = "normal-sum"
    s: Optional[int] = None
    weights: Optional[object] = None
    samplers: list = field(default_factory=lambda: ["mc"])
    preset: str = "desk"
    ell0: object = "auto"
    n_min: Optional[int] = None
    n_max: Optional[int] = None
    n_r: Optional[int] = None
    n_e: Optional[int] = None
    interval: Optional[list] = None
    seed: int = 12345
    out: str = "out"
    threads: Optional[int] = None
    B: Optional[float] = None
    n: Optional[int] = None
    h: Optional[float] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise InvalidArgument(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: line 1: top level must be an object")
        try:
            return cls.from_dict(data)
        except (InvalidArgument, TypeError) as exc:
            raise ConfigError(f"{source}: {exc}") from None

    def validate(self) -> None:
        self.samplers = [SamplerKind.parse(k).value for k in self.samplers]
        if self.preset not in harness.PRESETS:
            raise InvalidArgument(f"unknown preset {self.preset!r}")
        if not (self.ell0 == "auto" or isinstance(self.ell0, (int, float))):
            raise InvalidArgument(f"ell0 must be a number or 'auto', got {self.ell0!r}")

    def grid(self) -> harness.ExperimentGrid:
        p = harness.PRESETS[self.preset]
        lo = p["log2n"][0] if self.n_min is None else self.n_min
        hi = p["log2n"][1] if self.n_max is None else self.n_max
        if lo > hi:
            raise InvalidArgument(f"n-min ({lo}) exceeds n-max ({hi})")
        ell0 = None if self.ell0 == "auto" else float(self.ell0)
        return harness.grid_from_preset(
            self.preset, ell0, seed=self.seed, log2n=(lo, hi),
            n_r=p["n_r"] if self.n_r is None else self.n_r,
            n_e=p["n_e"] if self.n_e is None else self.n_e,
        )

    def build_model(self):
        kw = {}
        if self.interval is not None:
            kw["interval"] = tuple(self.interval)
        return get_model(self.model, self.s, self.weights, **kw)


class ConfigError(Exception):
    pass


def _parse_ell0(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ell0 must be a number or 'auto', got {text!r}") from None


def _parse_weights(text):
    if text in ("equal", "ones", "geometric", "decreasing"):
        return text
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad weights {text!r}") from None


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration; flags override it")
    p.add_argument("--model", help="normal-sum | cantilever | option")
    p.add_argument("--s", type=int, help="input dimension")
    p.add_argument("--weights", type=_parse_weights,
                   help="comma list, or equal | geometric (normal-sum) | equal | decreasing (option)")
    p.add_argument("--sampler", action="append", help="mc | strat | lms | nus (repeatable)")
    p.add_argument("--preset", choices=sorted(harness.PRESETS))
    p.add_argument("--ell0", type=_parse_ell0, help="grid anchor or 'auto'")
    p.add_argument("--n-min", type=int, dest="n_min", help="log2 of smallest n")
    p.add_argument("--n-max", type=int, dest="n_max", help="log2 of largest n")
    p.add_argument("--nr", type=int, dest="n_r", help="replicates per cell")
    p.add_argument("--ne", type=int, dest="n_e", help="evaluation points")
    p.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--B", type=float, dest="B", help="bias constant (skips the plug-in estimate)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rqmckde", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="fit IV/MISE models and write surface CSV + fit JSON")
    _add_run_flags(run)

    dens = sub.add_parser("density", help="write a density curve CSV")
    _add_run_flags(dens)
    dens.add_argument("--n", type=int, dest="n", help="sample size (default: preset maximum)")
    dens.add_argument("--h", type=float, dest="h", help="bandwidth (default: plug-in)")

    bounds = sub.add_parser("bounds", help="evaluate the asymptotic bounds")
    bounds.add_argument("kind", choices=["mc", "strat", "nus", "kh"])
    bounds.add_argument("--n", type=int)
    bounds.add_argument("--h", type=float)
    bounds.add_argument("--s", type=int, default=1)
    bounds.add_argument("--t", type=int, default=None)
    bounds.add_argument("--p0", type=float, default=1.0)
    bounds.add_argument("--interval", type=float, nargs=2, default=(-2.0, 2.0), metavar=("A", "B"))
    bounds.add_argument("--rf2", type=float)
    return parser


def _config_from_args(args, parser) -> RunConfig:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = RunConfig.loads(text, str(args.config))
    else:
        cfg = RunConfig()
    for name in ("model", "s", "weights", "preset", "ell0", "n_min", "n_max", "n_r", "n_e",
                 "seed", "threads", "out", "B"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if args.interval is not None:
        cfg.interval = list(args.interval)
    if args.sampler:
        cfg.samplers = [k for item in args.sampler for k in item.split(",") if k]
    for name in ("n", "h"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    try:
        cfg.validate()
    except InvalidArgument as exc:
        parser.error(str(exc))
    return cfg


def _set_threads(n: Optional[int]) -> None:
    if n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def _stem(cfg: RunConfig, model, kind: str) -> str:
    return f"{model.name}_s{model.s}_{kind}"


def cmd_run(cfg: RunConfig) -> int:
    _set_threads(cfg.threads)
    model = cfg.build_model()
    grid = cfg.grid()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run-config.json").write_text(cfg.dumps())
    B = cfg.B
    if B is None:
        B = harness.estimate_B(model, seed=cfg.seed).B_hat
    results = []
    for kind in cfg.samplers:
        spec = SamplerSpec(kind, model.s, cfg.seed)
        res = harness.run_experiment(model, spec, grid, B=B)
        stem = _stem(cfg, model, kind)
        harness.write_surface_csv(res.surface, out / f"surface_{stem}.csv")
        harness.write_fit_json(res, out / f"fit_{stem}.json")
        results.append(res)
    print(harness.format_summary(results))
    return 0


def cmd_density(cfg: RunConfig) -> int:
    _set_threads(cfg.threads)
    model = cfg.build_model()
    kind = cfg.samplers[0]
    n = cfg.n if cfg.n is not None else 2 ** (cfg.n_max if cfg.n_max is not None
                                              else harness.PRESETS[cfg.preset]["log2n"][1])
    h = cfg.h
    if h is None:
        B = cfg.B if cfg.B is not None else harness.estimate_B(model, seed=cfg.seed).B_hat
        h = mc_optimal_h(B, n)
    spec = SamplerSpec(kind, model.s, derive_seed(cfg.seed, 7))
    x = model(generate(spec, n).points)
    a, b = model.interval
    est = estimate_density(x, h, a, b, DENSITY_POINTS)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"density_{_stem(cfg, model, kind)}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "density"])
        for xv, fv in zip(est.eval_points, est.values):
            w.writerow([repr(float(xv)), repr(float(fv))])
    print(f"wrote {path} (n={est.n}, h={h:.6g})")
    return 0


def cmd_bounds(args) -> int:
    a, b = args.interval
    if args.kind in ("mc", "nus") and (args.n is None or args.h is None):
        raise InvalidArgument(f"{args.kind} bounds need --n and --h")
    rows = []
    if args.kind == "mc":
        r = theory.mc_aiv(args.n, args.h, args.p0)
        rows = [("AIV (leading)", r.value)]
    elif args.kind == "strat":
        if args.rf2 is None:
            raise InvalidArgument("strat bounds need --rf2")
        r = theory.strat_mise_bound(args.n, args.s, a, b, args.rf2)
        rows = [("kappa", r.rates["kappa"]), ("K", r.rates["K"]), ("nu", r.rates["nu"]),
                ("gamma", r.rates["gamma"])]
        if args.n is not None:
            rows.append(("MISE bound", r.value))
        if args.n is not None and args.h is not None:
            rows.append(("IV bound", theory.strat_iv_bound(args.n, args.h, args.s, a, b).value))
    elif args.kind == "nus":
        r = theory.nus_iv_bound(args.n, args.h, args.s, args.t)
        rows = [("IV bound (leading)", r.value)]
    else:
        r = theory.kh_rates(args.s)
        rows = [("IV beta", r.rates["beta"]), ("IV delta", r.rates["delta"]),
                ("MISE exponent", r.rates["mise_nu"]), ("h exponent", r.rates["h_gamma"])]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k.ljust(width)}  {v:.6g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "bounds":
            return cmd_bounds(args)
        cfg = _config_from_args(args, parser)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_density(cfg)
    except ConfigError as exc:
        print(f"rqmckde: config error: {exc}", file=sys.stderr)
        return 1
    except (InvalidArgument, ValueError) as exc:
        print(f"rqmckde: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
