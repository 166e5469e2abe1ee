"""Command-line front end.

    jcsqueeze optimize    --config run.json [--out DIR] [--seed S] [--threads N]
    jcsqueeze replay      --config run.json --pulses pulses.json|pulse_table.txt [--out DIR]
    jcsqueeze wigner      --config run.json [--pulses ...] [--out DIR]
    jcsqueeze compare     --config run.json [--out DIR] [--seed S] [--threads N]
    jcsqueeze circuit-map --config circuit.json [--out DIR]

Exit codes: 0 success, 2 validation error, 3 non-converged search,
4 numeric invariant violation.  Progress goes to stderr; summaries to stdout.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field
import datetime as _dt
import json
import logging
import math
from pathlib import Path
import platform
import sys
import time

import numpy as np

from . import __version__, kernel
from .analysis import reduction_percent, wigner
from .circuitqed import ELEMENTARY_CHARGE, HBAR, CircuitParams, map_to_system
from .dynamics import Propagation, TimeGrid, min_fluctuation
from .errors import (
    ConfigError, CutoffTooSmall, InvalidArgument, InvalidGrid, InvalidState,
    JCSqueezeError, NumericInvariantViolation, RegimeError, UnsupportedConfiguration,
)
from .optimize import STRATEGIES, CostModel, SearchConfig, run_strategy
from .pulse import PulseTrain, calibrate_pi_amplitude
from .quantum import SystemParams, build_space, coherent_excited_state, partial_trace_qubit

EXIT_OK, EXIT_VALIDATION, EXIT_NOT_CONVERGED, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("jcsqueeze")


# -- configuration --------------------------------------------------------------------

@dataclass(frozen=True)
class StrategySpec:
    strategy: str
    n_pulses: int


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    g_sigma: float
    n_pulses: int = 15
    strategy: str = "IDS"
    n_max: int = 80
    omega_over_g: float = 100.0
    omega0_amp: float | None = None  # None means pi-calibrated
    search: SearchConfig = field(default_factory=SearchConfig)
    output_dir: str = "out"
    dt_step: float = 0.001
    sample_stride: int = 1
    strategies: tuple = ()
    times: tuple = ()

    @property
    def window(self):
        return self.search.window

    @property
    def amplitude(self) -> float:
        return self.omega0_amp if self.omega0_amp is not None else calibrate_pi_amplitude(self.g_sigma)

    def params(self) -> SystemParams:
        w = self.omega_over_g
        return SystemParams(w, w, w, self.n_max)

    def grid(self) -> TimeGrid:
        return TimeGrid(self.window[0], self.window[1], self.dt_step, self.sample_stride)

    def template(self) -> PulseTrain:
        return PulseTrain((), self.g_sigma, self.amplitude, self.omega_over_g, self.window)

    def cost_model(self, template: PulseTrain | None = None) -> CostModel:
        state0 = coherent_excited_state(self.alpha, build_space(self.n_max))
        return CostModel(state0, self.params(), template or self.template(), self.grid())

    def echo(self) -> dict:
        return {
            "alpha": self.alpha,
            "g_sigma": self.g_sigma,
            "n_pulses": self.n_pulses,
            "strategy": self.strategy,
            "n_max": self.n_max,
            "omega_over_g": self.omega_over_g,
            "omega0_amp_mode": "pi_calibrated" if self.omega0_amp is None else {"explicit": self.omega0_amp},
            "omega0_amp": self.amplitude,
            "search": self.search.to_dict(),
            "output_dir": self.output_dir,
            "grid": {"dt_step": self.dt_step, "sample_stride": self.sample_stride},
            "strategies": [{"strategy": s.strategy, "n_pulses": s.n_pulses} for s in self.strategies],
            "times": list(self.times),
        }


_KNOWN_KEYS = {"alpha", "alpha_squared", "g_sigma", "n_pulses", "strategy", "n_max", "omega_over_g",
               "omega0_amp_mode", "search", "output_dir", "grid", "strategies", "times"}


def _number(doc, key, kind=float, default=None, required=False):
    if key not in doc:
        if required:
            raise ConfigError(key, "is required")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"must be a number, got {v!r}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(key, f"must be an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(key, f"must be finite, got {v!r}")
    return float(v)


def parse_config(doc: dict, seed: int | None = None, threads: int | None = None,
                 output_dir: str | None = None) -> RunConfig:
    """Validate a run configuration document; raises ConfigError naming the field."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    if "alpha" in doc and "alpha_squared" in doc:
        raise ConfigError("alpha", "give either alpha or alpha_squared, not both")
    if "alpha_squared" in doc:
        a2 = _number(doc, "alpha_squared")
        if a2 < 0:
            raise ConfigError("alpha_squared", "must be >= 0")
        alpha = math.sqrt(a2)
    else:
        alpha = _number(doc, "alpha", required=True)
        if alpha < 0:
            raise ConfigError("alpha", "must be >= 0 (real coherent amplitude)")
    g_sigma = _number(doc, "g_sigma", required=True)
    if not g_sigma > 0:
        raise ConfigError("g_sigma", "must be > 0")
    n_pulses = _number(doc, "n_pulses", int, 15)
    if n_pulses < 1:
        raise ConfigError("n_pulses", "must be >= 1")
    strategy = doc.get("strategy", "IDS")
    if strategy not in STRATEGIES:
        raise ConfigError("strategy", f"must be one of {list(STRATEGIES)}, got {strategy!r}")
    n_max = _number(doc, "n_max", int, 80)
    if n_max < 1:
        raise ConfigError("n_max", "must be >= 1")
    omega = _number(doc, "omega_over_g", float, 100.0)
    if not omega > 0:
        raise ConfigError("omega_over_g", "must be > 0")
    mode = doc.get("omega0_amp_mode", "pi_calibrated")
    if mode == "pi_calibrated":
        amp = None
    elif isinstance(mode, dict) and set(mode) == {"explicit"}:
        amp = _number(mode, "explicit")
        if not amp > 0:
            raise ConfigError("omega0_amp_mode.explicit", "must be > 0")
    else:
        raise ConfigError("omega0_amp_mode", "must be \"pi_calibrated\" or {\"explicit\": value}")
    search_doc = dict(doc.get("search", {}))
    if not isinstance(search_doc, dict):
        raise ConfigError("search", "must be an object")
    if seed is not None:
        search_doc["rng_seed"] = seed
    if threads is not None:
        search_doc["threads"] = threads
    allowed = set(SearchConfig.__dataclass_fields__)
    for k in search_doc:
        if k not in allowed:
            raise ConfigError(f"search.{k}", "unknown field")
    try:
        search = SearchConfig(**search_doc)
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise ConfigError("search", str(exc)) from None
    grid_doc = doc.get("grid", {})
    if not isinstance(grid_doc, dict):
        raise ConfigError("grid", "must be an object")
    dt = _number(grid_doc, "dt_step", float, 0.001)
    stride = _number(grid_doc, "sample_stride", int, 1)
    try:
        TimeGrid(search.window[0], search.window[1], dt, stride).check_resolution(omega)
    except InvalidGrid as exc:
        raise ConfigError("grid", str(exc)) from None
    specs = []
    for i, item in enumerate(doc.get("strategies", [])):
        if isinstance(item, str):
            item = {"strategy": item}
        if not isinstance(item, dict) or item.get("strategy") not in STRATEGIES:
            raise ConfigError(f"strategies[{i}]", f"must name one of {list(STRATEGIES)}")
        n = _number(item, "n_pulses", int, n_pulses)
        if n < 1:
            raise ConfigError(f"strategies[{i}].n_pulses", "must be >= 1")
        specs.append(StrategySpec(item["strategy"], n))
    times = doc.get("times", [])
    if not isinstance(times, list) or not all(isinstance(t, (int, float)) for t in times):
        raise ConfigError("times", "must be a list of numbers")
    lo, hi = search.window
    for t in times:
        if not lo <= t <= hi:
            raise ConfigError("times", f"{t} lies outside the window [{lo}, {hi}]")
    cfg = RunConfig(alpha, g_sigma, n_pulses, strategy, n_max, omega, amp, search,
                    output_dir or doc.get("output_dir", "out"), dt, stride, tuple(specs),
                    tuple(float(t) for t in times))
    try:
        coherent_excited_state(alpha, build_space(n_max))
    except CutoffTooSmall as exc:
        raise ConfigError("n_max", str(exc)) from None
    return cfg


def load_config(path, **overrides) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path} is not valid JSON: {exc}") from None
    return parse_config(doc, **overrides)


# -- pulse tables ---------------------------------------------------------------------------

def format_pulse_table(train: PulseTrain, var_min: float, t_of_min: float, label: str = "") -> str:
    """Fixed-width table of sorted centers with a reduction footer."""
    lines = [
        f"# pulse table {label}".rstrip(),
        f"# g_sigma={train.sigma!r} omega0_amp={train.omega0_amp!r} omega_p={train.omegap!r} "
        f"window={train.window[0]!r},{train.window[1]!r}",
        f"{'k':>4} {'t_k':>18}",
    ]
    for k, t in enumerate(train.sorted_centers, 1):
        lines.append(f"{k:>4d} {t:>18.12f}")
    lines.append(f"{'R%':>4} {reduction_percent(var_min):>18.6f}")
    lines.append(f"# var_min={var_min!r} t_of_min={t_of_min!r}")
    return "\n".join(lines) + "\n"


def parse_pulse_table(text: str) -> PulseTrain:
    meta, centers = {}, []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            for tok in s[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            continue
        parts = s.split()
        if parts[0].isdigit() and len(parts) == 2:
            centers.append(float(parts[1]))
    if "g_sigma" not in meta:
        raise InvalidArgument("pulse table has no '# g_sigma=...' header")
    window = tuple(float(x) for x in meta.get("window", "0.0,10.0").split(","))
    return PulseTrain(tuple(centers), float(meta["g_sigma"]), float(meta["omega0_amp"]),
                      float(meta.get("omega_p", 100.0)), window)


def load_pulses(path, cfg: RunConfig) -> PulseTrain:
    """Read a pulse JSON document or a pulse table; missing fields come from ``cfg``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--pulses", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return parse_pulse_table(text)
    if isinstance(doc, list):
        doc = {"centers": doc}
    if not isinstance(doc, dict) or "centers" not in doc:
        raise ConfigError("--pulses", "pulse JSON must contain 'centers'")
    doc.setdefault("g_sigma", cfg.g_sigma)
    if doc.get("omega0_amp") is None:
        doc["omega0_amp"] = cfg.omega0_amp if doc["g_sigma"] == cfg.g_sigma else None
    doc.setdefault("omega_p", cfg.omega_over_g)
    doc.setdefault("window", list(cfg.window))
    return PulseTrain.from_dict(doc)


# -- artifacts ----------------------------------------------------------------------------

def _manifest(command: str, cfg_echo: dict, seed, extra=None) -> dict:
    m = {
        "command": command,
        "version": __version__,
        "kernel_backend": kernel.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg_echo,
        "rng_seed": seed,
        "constants": {"hbar": HBAR, "e": ELEMENTARY_CHARGE, "shot_noise": 0.25},
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        m.update(extra)
    return m


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _progress(msg: str) -> None:
    log.info(msg)


# -- commands --------------------------------------------------------------------------------

def cmd_optimize(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    base = cfg.cost_model()
    log.info("optimize: %s N=%d alpha^2=%.6g g_sigma=%g n_max=%d backend=%s", cfg.strategy,
             cfg.n_pulses, cfg.alpha ** 2, cfg.g_sigma, cfg.n_max, kernel.BACKEND)
    t0 = time.perf_counter()
    result = run_strategy(cfg.strategy, base, cfg.n_pulses, cfg.search, _progress)
    wall = time.perf_counter() - t0
    result.config = dict(result.config, run=cfg.echo())
    result.to_json(out / "result.json")
    train = cfg.template().with_centers(result.times)
    trace = base.prop.trace(result.times)
    trace.to_csv(out / "trace.csv")
    (out / "pulse_table.txt").write_text(
        format_pulse_table(train, result.var_min, result.t_of_min, result.strategy_tag))
    _write_json(out / "manifest.json", _manifest("optimize", cfg.echo(), cfg.search.rng_seed,
                                                 {"wall_time_s": wall, "converged": result.converged}))
    print(json.dumps({"strategy": result.strategy_tag, "var_min": result.var_min,
                      "t_of_min": result.t_of_min, "reduction_percent": result.reduction_percent,
                      "converged": result.converged, "output_dir": str(out)}))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_replay(cfg: RunConfig, pulses_path) -> int:
    if pulses_path is None:
        raise ConfigError("--pulses", "replay needs a pulse file")
    train = load_pulses(pulses_path, cfg)
    out = _out_dir(cfg)
    state0 = coherent_excited_state(cfg.alpha, build_space(cfg.n_max))
    grid = TimeGrid(train.window[0], train.window[1], cfg.dt_step, cfg.sample_stride)
    trace = Propagation(state0, cfg.params(), train, grid).trace(train.centers)
    t_min, v = min_fluctuation(trace)
    trace.to_csv(out / "trace.csv")
    report = {"var_min": v, "t_of_min": t_min, "reduction_percent": reduction_percent(v),
              "n_pulses": len(train), "pulses": train.to_dict()}
    _write_json(out / "replay.json", report)
    (out / "pulse_table.txt").write_text(format_pulse_table(train, v, t_min, "replay"))
    _write_json(out / "manifest.json", _manifest("replay", cfg.echo(), None,
                                                 {"pulses": train.to_dict()}))
    print(json.dumps({k: report[k] for k in ("var_min", "t_of_min", "reduction_percent", "n_pulses")}))
    return EXIT_OK


def cmd_wigner(cfg: RunConfig, pulses_path) -> int:
    train = load_pulses(pulses_path, cfg) if pulses_path else cfg.template()
    times = cfg.times or (0.0,)
    out = _out_dir(cfg)
    state0 = coherent_excited_state(cfg.alpha, build_space(cfg.n_max))
    grid = TimeGrid(train.window[0], train.window[1], cfg.dt_step, cfg.sample_stride)
    prop = Propagation(state0, cfg.params(), train, grid)
    step = grid.dt_step * grid.sample_stride
    idx = []
    for t in times:
        i = round((t - grid.t_start) / step)
        if abs(grid.t_start + i * step - t) > 1e-9 or not 0 <= i < grid.n_samples:
            raise ConfigError("times", f"{t} is not on the sample grid (spacing {step})")
        idx.append(i)
    var = prop.variance_trace(train.centers)
    summary = []
    for t, i, state in zip(times, idx, prop.states_at(train.centers, idx)):
        g = wigner(partial_trace_qubit(state), time=t)
        name = f"wigner_gt{t:.3f}.csv"
        g.to_csv(out / name)
        row = {"gt": t, "file": name, "integral": g.integral(),
               "marginal_var_x": g.marginal_variance_x(), "var_x": float(var[i]),
               "reduction_percent": reduction_percent(float(var[i])),
               "coverage_warning": g.coverage_warning}
        summary.append(row)
        log.info("wigner gt=%.3f integral=%.6f var_x=%.6f", t, row["integral"], row["var_x"])
    _write_json(out / "wigner_summary.json", summary)
    _write_json(out / "manifest.json", _manifest("wigner", cfg.echo(), None, {"pulses": train.to_dict()}))
    print(json.dumps(summary))
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    if len(cfg.strategies) < 2:
        raise ConfigError("strategies", "compare needs at least two strategies")
    out = _out_dir(cfg)
    rows, all_converged = [], True
    for spec in cfg.strategies:
        base = cfg.cost_model()
        t0 = time.perf_counter()
        res = run_strategy(spec.strategy, base, spec.n_pulses, cfg.search, _progress)
        wall = time.perf_counter() - t0
        all_converged = all_converged and res.converged
        tag = res.strategy_tag
        res.config = dict(res.config, run=cfg.echo())
        res.to_json(out / f"result_{tag}.json")
        base.prop.trace(res.times).to_csv(out / f"trace_{tag}.csv")
        rows.append((tag, spec.n_pulses, res.distinct_pulses(2 * cfg.g_sigma), res.var_min,
                     res.reduction_percent, wall))
    lines = ["strategy,n_pulses,n_distinct_pulses,var_min,reduction_percent,wall_time"]
    lines += [f"{a},{b},{c},{d!r},{e!r},{f:.3f}" for a, b, c, d, e, f in rows]
    (out / "compare.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "manifest.json", _manifest("compare", cfg.echo(), cfg.search.rng_seed))
    print("\n".join(lines))
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


def cmd_circuit_map(config_path, out_dir=None) -> int:
    try:
        doc = json.loads(Path(config_path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {config_path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"not valid JSON: {exc}") from None
    cp = CircuitParams.from_dict(doc)
    mapping = map_to_system(cp, float(doc.get("window_gt", 10.0)), doc.get("T1"), doc.get("T2"))
    report = mapping.report()
    width = max(len(k) for k in report)
    for k, v in report.items():
        val = f"{v:.6g}" if isinstance(v, float) else str(v)
        print(f"{k:<{width}}  {val}")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "circuit_report.json", report)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jcsqueeze", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress on stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("optimize", "replay", "wigner", "compare", "circuit-map"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--config", required=True, help="JSON configuration file")
        s.add_argument("--out", help="output directory (overrides output_dir)")
        if name in ("optimize", "compare", "replay", "wigner"):
            s.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
            s.add_argument("--threads", type=int, help="worker threads for cost evaluation")
        if name in ("replay", "wigner"):
            s.add_argument("--pulses", help="pulse JSON document or pulse_table.txt")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        if args.command == "circuit-map":
            return cmd_circuit_map(args.config, args.out)
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        cfg = load_config(args.config, seed=args.seed, threads=args.threads, output_dir=args.out)
        if args.command == "optimize":
            return cmd_optimize(cfg)
        if args.command == "replay":
            return cmd_replay(cfg, args.pulses)
        if args.command == "wigner":
            return cmd_wigner(cfg, args.pulses)
        return cmd_compare(cfg)
    except (ConfigError, InvalidArgument, InvalidGrid, InvalidState, RegimeError,
            UnsupportedConfiguration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericInvariantViolation, CutoffTooSmall) as exc:
        print(f"numeric invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except JCSqueezeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
