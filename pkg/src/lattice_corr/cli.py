"""Command-line front end.

    lattice-corr run --config cfg.json --out data.csv [--preset nn] [--seed 7] [--format json]
    lattice-corr compare --a exact.csv --b airy.csv [--out diff.csv]

A config is one JSON object::

    {
      "model": {"preset": "nn"}            # or {"kappa": [1.0, 0.25]}
      "beta": 1.0,
      "mode": "exact",                     # exact | finiteN | airy | pearcey | mc
      "grid": {"j": [80, 120], "t": [100.0]},   # j: inclusive [lo, hi]; or "j_values": [...]
      "observables": [[1, 1]],
      "N": null,                           # finiteN / mc lattice size
      "mc": {"replicas": 10000, "seed": 0, "dt": 0.02, "chi": 0.0, "gamma": 0.0},
      "output": {"format": "csv"}
    }

Exit status: 0 on success, 2 on invalid configuration, 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import airy_parametrix_block, pearcey_parametrix_block
from .circulant import PRESETS, CouplingVector, localized_square_root
from .correlations import correlation_field
from .dataset import CorrelationDataset, aligned, loglog_slope
from .dispersion import airy_constants, degenerate_point_at, find_degenerate_points
from .dynamics import ChainModel, EnsembleSpec, NonlinearModel, mc_correlations
from .errors import GridMismatch, InvalidCoupling, LatticeCorrError

__all__ = ["ConfigError", "MCConfig", "ExperimentConfig", "run", "compare", "main"]

MODES = ("exact", "finiteN", "airy", "pearcey", "mc")
FORMATS = ("csv", "json")
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class MCConfig:
    replicas: int = 10_000
    seed: int = 0
    dt: float = 0.02
    chi: float = 0.0
    gamma: float = 0.0
    block_size: int = 64


@dataclass
class ExperimentConfig:
    kappa: list[float]
    preset: str | None = None
    beta: float = 1.0
    mode: str = "exact"
    j_values: list[int] = field(default_factory=lambda: [0])
    t_values: list[float] = field(default_factory=lambda: [1.0])
    observables: list[list[int]] = field(default_factory=lambda: [[1, 1]])
    N: int | None = None
    kstar: float | None = None
    mc: MCConfig = field(default_factory=MCConfig)
    format: str = "csv"

    @property
    def coupling(self) -> CouplingVector:
        return CouplingVector(tuple(self.kappa))

    def to_dict(self) -> dict:
        model = {"kappa": list(self.kappa)}
        if self.preset is not None:
            model["preset"] = self.preset
        return {
            "model": model,
            "beta": self.beta,
            "mode": self.mode,
            "grid": {"j_values": list(self.j_values), "t": list(self.t_values)},
            "observables": [list(o) for o in self.observables],
            "N": self.N,
            "kstar": self.kstar,
            "mc": asdict(self.mc),
            "output": {"format": self.format},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {"model", "beta", "mode", "grid", "observables", "N", "kstar", "mc", "output"}
        extra = sorted(set(d) - known)
        if extra:
            raise ConfigError(extra[0], "unknown field")

        model = d.get("model", {"preset": "nn"})
        if not isinstance(model, dict):
            raise ConfigError("model", "must be an object with 'preset' or 'kappa'")
        preset = model.get("preset")
        if preset is not None and preset not in PRESETS:
            raise ConfigError("model.preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        if "kappa" in model:
            kappa = _float_list(model["kappa"], "model.kappa")
            if preset is not None and tuple(kappa) != PRESETS[preset]:
                raise ConfigError("model.kappa", f"does not match preset {preset!r}")
        elif preset is not None:
            kappa = list(PRESETS[preset])
        else:
            raise ConfigError("model", "needs 'preset' or 'kappa'")
        try:
            CouplingVector(tuple(kappa))
        except InvalidCoupling as exc:
            raise ConfigError("model.kappa", str(exc)) from None

        beta = _positive(d.get("beta", 1.0), "beta")
        mode = d.get("mode", "exact")
        if mode not in MODES:
            raise ConfigError("mode", f"must be one of {list(MODES)}, got {mode!r}")

        grid = d.get("grid", {})
        if not isinstance(grid, dict):
            raise ConfigError("grid", "must be an object")
        if "j_values" in grid:
            j_values = _int_list(grid["j_values"], "grid.j_values")
        elif "j" in grid:
            bounds = _int_list(grid["j"], "grid.j")
            if len(bounds) != 2 or bounds[0] > bounds[1]:
                raise ConfigError("grid.j", "must be an inclusive range [lo, hi] with lo <= hi")
            j_values = list(range(bounds[0], bounds[1] + 1))
        else:
            j_values = [0]
        t_values = _float_list(grid.get("t", [1.0]), "grid.t")
        if any(t < 0 for t in t_values):
            raise ConfigError("grid.t", "times must be >= 0")
        if not j_values or not t_values:
            raise ConfigError("grid", "empty grid")

        obs = d.get("observables", [[1, 1]])
        if not isinstance(obs, list) or not obs:
            raise ConfigError("observables", "must be a non-empty list of [alpha, alphaprime]")
        observables = []
        for i, o in enumerate(obs):
            o = _int_list(o, f"observables[{i}]")
            if len(o) != 2 or not all(a in (1, 2, 3) for a in o):
                raise ConfigError(f"observables[{i}]", "must be [alpha, alphaprime] with entries in {1, 2, 3}")
            observables.append(o)

        N = d.get("N")
        if N is not None:
            if not isinstance(N, int) or isinstance(N, bool) or N % 2 == 0 or N <= 2 * len(kappa):
                raise ConfigError("N", f"must be an odd integer > 2m = {2 * len(kappa)}")
        kstar = d.get("kstar")
        if kstar is not None:
            kstar = _float(kstar, "kstar")
            if not 0 < kstar <= 0.5:
                raise ConfigError("kstar", "must lie in (0, 1/2]")

        mc_in = d.get("mc", {})
        if not isinstance(mc_in, dict):
            raise ConfigError("mc", "must be an object")
        extra = sorted(set(mc_in) - set(MCConfig.__dataclass_fields__))
        if extra:
            raise ConfigError(f"mc.{extra[0]}", "unknown field")
        mc = MCConfig(
            replicas=_int(mc_in.get("replicas", 10_000), "mc.replicas"),
            seed=_int(mc_in.get("seed", 0), "mc.seed"),
            dt=_positive(mc_in.get("dt", 0.02), "mc.dt"),
            chi=_float(mc_in.get("chi", 0.0), "mc.chi"),
            gamma=_float(mc_in.get("gamma", 0.0), "mc.gamma"),
            block_size=_int(mc_in.get("block_size", 64), "mc.block_size"),
        )
        if mc.replicas < 1:
            raise ConfigError("mc.replicas", "must be >= 1")
        if not 0 <= mc.seed < 2**64:
            raise ConfigError("mc.seed", "must be an unsigned 64-bit integer")
        if mc.gamma < 0:
            raise ConfigError("mc.gamma", "must be >= 0")
        if mc.block_size < 1:
            raise ConfigError("mc.block_size", "must be >= 1")

        out = d.get("output", {})
        fmt = out.get("format", "csv") if isinstance(out, dict) else None
        if fmt not in FORMATS:
            raise ConfigError("output.format", f"must be one of {list(FORMATS)}")
        return cls(list(kappa), preset, beta, mode, j_values, t_values, observables, N, kstar, mc, fmt)


def _float(x, name) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
        raise ConfigError(name, f"expected a finite number, got {x!r}")
    return float(x)


def _positive(x, name) -> float:
    x = _float(x, name)
    if x <= 0:
        raise ConfigError(name, f"must be > 0, got {x}")
    return x


def _int(x, name) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(name, f"expected an integer, got {x!r}")
    return x


def _float_list(x, name) -> list[float]:
    if not isinstance(x, list):
        raise ConfigError(name, "expected a list")
    return [_float(v, f"{name}[{i}]") for i, v in enumerate(x)]


def _int_list(x, name) -> list[int]:
    if not isinstance(x, list):
        raise ConfigError(name, "expected a list")
    return [_int(v, f"{name}[{i}]") for i, v in enumerate(x)]


# pipelines -------------------------------------------------------------------------

def _pearcey_point(cfg: ExperimentConfig, c: CouplingVector):
    if cfg.kstar is not None:
        return degenerate_point_at(cfg.kstar, c)
    pts = find_degenerate_points(c)
    if not pts:
        raise ConfigError("model", "coupling has no degenerate stationary point; pearcey mode does not apply")
    return pts[0]


def run(cfg: ExperimentConfig) -> CorrelationDataset:
    """Evaluate the configured experiment and return the dataset (with metadata)."""
    c = cfg.coupling
    sq = localized_square_root(c)
    meta = {"config": cfg.to_dict(), "version": __version__, "seed": cfg.mc.seed}
    ds = CorrelationDataset(meta=meta)
    js = np.asarray(cfg.j_values, dtype=int)
    if cfg.mode in ("exact", "finiteN"):
        for a, b in cfg.observables:
            ds.extend(correlation_field(a, b, cfg.j_values, cfg.t_values, c, sq, cfg.beta, method=cfg.mode, N=cfg.N))
        ac = airy_constants(c)
        meta["v0"], meta["lambda0"] = ac.v0, ac.lambda0
    elif cfg.mode in ("airy", "pearcey"):
        if cfg.mode == "airy":
            ac = airy_constants(c)
            meta["v0"], meta["lambda0"] = ac.v0, ac.lambda0

            def block(t):
                return airy_parametrix_block(js, t, c, cfg.beta)
        else:
            point = _pearcey_point(cfg, c)
            meta.update(kstar=point.kstar, vstar=point.vstar, lambdastar=point.lambdastar, sign=point.sign)

            def block(t):
                return pearcey_parametrix_block(js, t, point, c, sq, cfg.beta)
        tag = f"parametrix:{cfg.mode}"
        for a, b in cfg.observables:
            for t in cfg.t_values:
                vals = np.zeros(js.size) if (a == 3) != (b == 3) else block(t)[(a, b)]
                for jj, v in zip(js, vals):
                    ds.add(a, b, int(jj), t, float(v), 0.0, tag)
    else:
        N = cfg.N or 257
        for t in cfg.t_values:
            n = t / cfg.mc.dt
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError("grid.t", f"snapshot {t} is not a multiple of mc.dt = {cfg.mc.dt}")
        spec = EnsembleSpec(
            replicas=cfg.mc.replicas, seed=cfg.mc.seed, N=N, beta=cfg.beta, dt=cfg.mc.dt,
            t_snapshots=tuple(cfg.t_values), observables=tuple(tuple(o) for o in cfg.observables),
            j_values=tuple(cfg.j_values), block_size=cfg.mc.block_size,
        )
        model = NonlinearModel(ChainModel(c, cfg.beta), cfg.mc.chi, cfg.mc.gamma)
        try:
            mc = mc_correlations(spec, model)
        except ValueError as exc:
            if isinstance(exc, LatticeCorrError):
                raise
            raise ConfigError("mc", str(exc)) from None
        meta.update(mc.meta)
        ds.extend(mc)
    return ds


def compare(a: CorrelationDataset, b: CorrelationDataset) -> tuple[dict, CorrelationDataset]:
    """Entrywise differences ``a - b``, max norms and log-log slope fits.

    The report holds, per observable, the max |difference| overall and per time,
    and the slope of ``log max_j |diff|`` against ``log t`` over ``t > 0``
    (``null`` when fewer than two positive times have nonzero error).
    """
    pairs = aligned(a, b)
    diff = CorrelationDataset(meta={"a": a.meta, "b": b.meta})
    per = {}
    for ra, rb in pairs:
        d = ra.value - rb.value
        diff.add(ra.alpha, ra.alphaprime, ra.j, ra.t, d, float(np.hypot(ra.stderr, rb.stderr)), "diff")
        slot = per.setdefault(f"{ra.alpha}{ra.alphaprime}", {})
        slot[ra.t] = max(slot.get(ra.t, 0.0), abs(d))
    report = {"entries": len(pairs), "max_abs_diff": 0.0, "observables": {}}
    for key in sorted(per):
        by_t = per[key]
        ts = sorted(by_t)
        pos = [t for t in ts if t > 0 and by_t[t] > 0]
        slope = loglog_slope(pos, [by_t[t] for t in pos]) if len(pos) >= 2 else None
        report["observables"][key] = {
            "max_abs_diff": max(by_t.values()),
            "max_abs_diff_by_t": [[t, by_t[t]] for t in ts],
            "loglog_slope": slope,
        }
        report["max_abs_diff"] = max(report["max_abs_diff"], max(by_t.values()))
    return report, diff


# entry point -----------------------------------------------------------------------

def _load_config(path: str | None, preset: str | None, seed: int | None, fmt: str | None) -> ExperimentConfig:
    raw: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"line {exc.lineno}", exc.msg) from None
        if isinstance(raw, dict) and isinstance(raw.get("meta"), dict) and "rows" in raw:
            # a JSON dataset written by ``run``
            raw = raw["meta"]
        if isinstance(raw, dict) and "config" in raw and "model" not in raw:
            # metadata block of an earlier dataset
            raw = raw["config"]
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    raw = dict(raw)
    if preset is not None:
        raw["model"] = {"preset": preset}
    if seed is not None:
        raw["mc"] = dict(raw.get("mc", {}), seed=seed)
    if fmt is not None:
        raw["output"] = dict(raw.get("output", {}), format=fmt)
    return ExperimentConfig.from_dict(raw)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattice-corr", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="evaluate a configured experiment")
    r.add_argument("--config", help="JSON config file")
    r.add_argument("--out", required=True, help="output dataset path ('-' for stdout)")
    r.add_argument("--preset", choices=sorted(PRESETS))
    r.add_argument("--seed", type=int, help="override mc.seed")
    r.add_argument("--format", choices=FORMATS)
    c = sub.add_parser("compare", help="compare two datasets on a common grid")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--out", help="write entrywise differences here")
    c.add_argument("--format", choices=FORMATS, default="csv")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config(args.config, args.preset, args.seed, args.format)
            text = run(cfg).dumps(cfg.format)
            if args.out == "-":
                sys.stdout.write(text)
            else:
                with open(args.out, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            return 0
        a = CorrelationDataset.read(args.a)
        b = CorrelationDataset.read(args.b)
        report, diff = compare(a, b)
        if args.out:
            diff.write(args.out, args.format)
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return 0
    except ConfigError as exc:
        print(f"lattice-corr: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridMismatch as exc:
        print(f"lattice-corr: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        if isinstance(exc, LatticeCorrError):
            print(f"lattice-corr: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"lattice-corr: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LatticeCorrError as exc:
        print(f"lattice-corr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
