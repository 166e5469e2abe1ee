"""Pulse-time search strategies.

The cost of a set of pulse centers is the minimum sampled Var(X) over the
window.  Four drivers build pulse trains one pulse at a time:

* ``fss``: greedy forward placement, each new pulse no earlier than the last;
* ``ids``: random seeding of each new pulse, then cyclic re-optimisation of
  every center by a coarse-then-fine grid scan until the cost settles;
* ``gb_ids``: same sweeps with a bounded finite-difference descent per center;
* ``gf_ids``: same sweeps with a bracketing golden-section line search.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import json
import math
from pathlib import Path
import threading

import numpy as np

from .analysis import reduction_percent
from .dynamics import Propagation, ScanCache, TimeGrid
from .errors import InvalidArgument
from .pulse import PulseTrain
from .quantum import StateVector, SystemParams, build_space, coherent_excited_state

STRATEGIES = ("FSS", "IDS", "GB_IDS", "GF_IDS")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...
_ROUND = 12  # decimals kept on grid points so 0.01 * k prints cleanly


@dataclass(frozen=True)
class SearchConfig:
    window: tuple = (0.0, 10.0)
    coarse_step: float = 0.01
    fine_step: float = 0.001
    sweep_tolerance: float = 1e-5
    max_sweeps: int = 50
    rng_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        lo, hi = self.window
        if not lo < hi:
            raise InvalidArgument(f"window must satisfy start < end, got {self.window}")
        if not 0 < self.fine_step < self.coarse_step < hi - lo:
            raise InvalidArgument("need 0 < fine_step < coarse_step < window length, got "
                                  f"fine={self.fine_step}, coarse={self.coarse_step}")
        if not self.sweep_tolerance > 0:
            raise InvalidArgument(f"sweep_tolerance must be > 0, got {self.sweep_tolerance}")
        if int(self.max_sweeps) != self.max_sweeps or self.max_sweeps < 1:
            raise InvalidArgument(f"max_sweeps must be a positive integer, got {self.max_sweeps}")
        if int(self.rng_seed) != self.rng_seed or not 0 <= self.rng_seed < 2 ** 64:
            raise InvalidArgument(f"rng_seed must be an unsigned 64-bit integer, got {self.rng_seed}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise InvalidArgument(f"threads must be >= 1, got {self.threads}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


# -- cost -------------------------------------------------------------------------

class CostModel:
    """The fixed part of the cost: initial state, system, pulse shape, grid.

    ``template`` supplies sigma, amplitude, carrier and window; its centers are
    ignored.
    """

    def __init__(self, state0: StateVector, params: SystemParams, template: PulseTrain,
                 grid: TimeGrid | None = None, ckpt_every: int = 50):
        grid = grid or TimeGrid(template.window[0], template.window[1])
        self.prop = Propagation(state0, params, template, grid)
        self.ckpt_every = ckpt_every
        self.evaluations = 0
        self._lock = threading.Lock()

    def count(self):
        with self._lock:
            self.evaluations += 1

    @classmethod
    def for_coherent(cls, alpha, g_sigma, n_max=80, omega_over_g=100.0, omega0_amp=None,
                     window=(0.0, 10.0), dt_step=0.001, sample_stride=1):
        """|e>|alpha> on resonance with a pi-calibrated (default) Gaussian template."""
        params = SystemParams(omega_over_g, omega_over_g, omega_over_g, n_max)
        state0 = coherent_excited_state(alpha, build_space(n_max))
        template = PulseTrain((), g_sigma, omega0_amp, omega_over_g, window)
        return cls(state0, params, template, TimeGrid(window[0], window[1], dt_step, sample_stride))

    @property
    def window(self):
        return self.prop.template.window

    @property
    def template(self) -> PulseTrain:
        return self.prop.template

    def min_variance(self, times) -> tuple[float, float]:
        self.count()
        return self.prop.min_variance(list(times))

    def scanner(self, fixed) -> "_Scanner":
        return _Scanner(self, ScanCache(self.prop, list(fixed), self.ckpt_every))


class _Scanner:
    """1-D cost over one moving center with the others held fixed."""

    def __init__(self, model: CostModel, cache: ScanCache):
        self.model = model
        self.cache = cache

    def __call__(self, tau: float) -> float:
        return self.evaluate(tau)[1]

    def evaluate(self, tau: float) -> tuple[float, float]:
        self.model.count()
        return self.cache.evaluate(tau)


def cost(times, base: CostModel) -> float:
    """Minimum sampled Var(X) for pulses centered at ``times``."""
    lo, hi = base.window
    bad = [t for t in times if not lo <= t <= hi]
    if bad:
        raise InvalidArgument(f"pulse times {bad} fall outside the window [{lo}, {hi}]")
    return base.min_variance(times)[1]


# -- one-dimensional searches -------------------------------------------------------

def _grid(a: float, b: float, step: float) -> list[float]:
    n = int(math.floor((b - a) / step + 1e-9))
    pts = [round(a + k * step, _ROUND) for k in range(n + 1)]
    if pts[-1] < b - 1e-12:
        pts.append(round(b, _ROUND))
    return pts


class _Memo:
    """Memoised, optionally parallel evaluation; results reduced in input order."""

    def __init__(self, f, threads=1):
        self.f = f
        self.threads = threads
        self.values: dict[float, float] = {}

    def many(self, xs):
        todo = [x for x in dict.fromkeys(xs) if x not in self.values]
        if self.threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                for x, v in zip(todo, pool.map(self.f, todo)):
                    self.values[x] = v
        else:
            for x in todo:
                self.values[x] = self.f(x)
        return [self.values[x] for x in xs]

    def __call__(self, x):
        return self.many([x])[0]

    def best(self):
        """(t, f) with the smallest f, ties to the smallest t."""
        t, v = min(self.values.items(), key=lambda kv: (kv[1], kv[0]))
        return t, v


def grid_minimize_1d(f, lo, hi, coarse, fine, include=None, threads=1, refine=True):
    """Coarse scan of [lo, hi], then a fine rescan around the best coarse point.

    ``include`` is added to the coarse candidates (it is how a sweep keeps the
    current center available).  Returns ``(t_star, f_star)``, ties broken
    toward smaller t.
    """
    if not lo < hi:
        raise InvalidArgument(f"need lo < hi, got [{lo}, {hi}]")
    if not 0 < fine <= coarse:
        raise InvalidArgument(f"need 0 < fine <= coarse, got fine={fine}, coarse={coarse}")
    memo = _Memo(f, threads)
    grid = _grid(lo, hi, coarse)
    cands = list(grid)
    if include is not None:
        if not lo <= include <= hi:
            raise InvalidArgument(f"include={include} outside [{lo}, {hi}]")
        if include not in cands:
            cands.append(float(include))
    vals = memo.many(cands)
    t0, _ = min(zip(cands, vals), key=lambda tv: (tv[1], tv[0]))
    if refine:
        if t0 in grid:
            k = grid.index(t0)
            a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        else:
            a, b = max(lo, t0 - coarse), min(hi, t0 + coarse)
        memo.many(_grid(a, b, fine))
    return memo.best()


def bounded_descent(f, x0, lo, hi, probe, max_step=1.0, init_step=0.05, tol=1e-4, max_iter=200):
    """Finite-difference gradient descent on [lo, hi] with backtracking.

    The derivative is a central difference with spacing ``probe`` (one-sided at
    the bounds).  Each iteration tries a step along -sign(f') of adaptive length,
    halving until the Armijo condition holds; successful steps double the
    length up to ``max_step``.  Returns the start point unless it was improved.
    """
    memo = _Memo(f)
    x, fx = float(x0), memo(float(x0))
    step = init_step
    for _ in range(max_iter):
        xm, xp = max(lo, x - probe), min(hi, x + probe)
        if xp == xm:
            break
        grad = (memo(xp) - memo(xm)) / (xp - xm)
        if grad == 0.0 or (x <= lo and grad > 0) or (x >= hi and grad < 0):
            break
        direction = -math.copysign(1.0, grad)
        accepted = False
        while step >= tol:
            xn = min(hi, max(lo, x + direction * step))
            if abs(xn - x) < tol:
                break
            fn = memo(xn)
            if fn <= fx - 1e-4 * abs(grad) * abs(xn - x):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        x, fx = xn, fn
        step = min(2.0 * step, max_step)
    if fx < memo.values[float(x0)]:
        return x, fx
    return float(x0), memo.values[float(x0)]


def golden_line_search(f, x0, lo, hi, tol, init_radius=0.05, max_expand=60):
    """Derivative-free bounded minimisation seeded at ``x0``.

    A symmetric bracket around ``x0`` grows by the golden ratio while the cost
    is flat on both sides, up to the window bounds.  Once one side is lower the
    search walks downhill with golden-ratio growth until the cost rises, then
    contracts the bracket by golden-section search to width ``tol``.
    Returns the start point unless it was improved.
    """
    memo = _Memo(f)
    x0 = float(x0)
    f0 = memo(x0)
    # grow a symmetric bracket until one side is strictly lower (walk downhill),
    # both sides are strictly higher (bracketed), or it spans the window
    r = init_radius
    while True:
        left, right = max(lo, x0 - r), min(hi, x0 + r)
        fl, fr = memo(left), memo(right)
        if fl < f0 or fr < f0 or (fl > f0 and fr > f0) or (left == lo and right == hi):
            break
        r /= GOLDEN
    if fl < f0 or fr < f0:
        # walk downhill with golden growth until the cost rises or a bound is hit;
        # the minimum then lies between the point before last and the last probe
        sign = -1.0 if fl <= fr else 1.0
        prev, cur = x0, (left if sign < 0 else right)
        fcur = min(fl, fr)
        end = cur
        for _ in range(max_expand):
            r /= GOLDEN
            nxt = min(hi, max(lo, cur + sign * r))
            end = nxt
            if nxt == cur:
                break
            fn = memo(nxt)
            if fn > fcur:
                break
            prev, cur, fcur = cur, nxt, fn
        a, b = min(prev, end), max(prev, end)
    else:
        a, b = left, right
    # golden-section contraction
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = memo(c), memo(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = memo(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = memo(d)
    t, v = memo.best()
    if v < f0:
        return t, v
    return x0, f0


# -- results ------------------------------------------------------------------------

def distinct_count(times, radius: float) -> int:
    """Number of centers left after merging those closer than ``radius``."""
    ts = sorted(times)
    if not ts:
        return 0
    n, last = 1, ts[0]
    for t in ts[1:]:
        if t - last >= radius:
            n += 1
            last = t
    return n


@dataclass
class OptimizationResult:
    strategy_tag: str
    times: list
    var_min: float
    t_of_min: float
    per_pulse_history: list = field(default_factory=list)
    sweep_log: list = field(default_factory=list)
    converged: bool = True
    rng_seed: int | None = None
    config: dict = field(default_factory=dict)
    evaluations: int = 0

    @property
    def times_sorted(self) -> list:
        return sorted(self.times)

    @property
    def reduction_percent(self) -> float:
        return reduction_percent(self.var_min)

    def distinct_pulses(self, radius: float) -> int:
        return distinct_count(self.times, radius)

    def to_dict(self) -> dict:
        return {
            "strategy_tag": self.strategy_tag,
            "times": list(self.times),
            "times_sorted": self.times_sorted,
            "var_min": self.var_min,
            "t_of_min": self.t_of_min,
            "reduction_percent": self.reduction_percent,
            "per_pulse_history": [list(x) for x in self.per_pulse_history],
            "sweep_log": [list(x) for x in self.sweep_log],
            "converged": self.converged,
            "rng_seed": self.rng_seed,
            "evaluations": self.evaluations,
            "config": self.config,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizationResult":
        return cls(d["strategy_tag"], list(d["times"]), d["var_min"], d["t_of_min"],
                   [tuple(x) for x in d.get("per_pulse_history", [])],
                   [tuple(x) for x in d.get("sweep_log", [])],
                   d.get("converged", True), d.get("rng_seed"), d.get("config", {}),
                   d.get("evaluations", 0))


def _config_echo(base: CostModel, cfg: SearchConfig, n: int) -> dict:
    p, tr, g = base.prop.params, base.template, base.prop.grid
    return {
        "n_pulses": n,
        "search": cfg.to_dict(),
        "system": {"omega_over_g": p.omega_over_g, "omega0_over_g": p.omega0_over_g,
                   "omegap_over_g": p.omegap_over_g, "n_max": p.n_max},
        "pulse": {"g_sigma": tr.sigma, "omega0_amp": tr.omega0_amp, "omega_p": tr.omegap,
                  "window": list(tr.window)},
        "grid": {"dt_step": g.dt_step, "sample_stride": g.sample_stride},
    }


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgument(f"number of pulses must be >= 1, got {n}")


def _log(progress, msg):
    if progress is not None:
        progress(msg)


# -- strategies -------------------------------------------------------------------------

def fss(base: CostModel, n: int, cfg: SearchConfig, progress=None) -> OptimizationResult:
    """Forward sequential placement on the coarse grid over [t_(k-1), t_end]."""
    _check_n(n)
    lo, hi = cfg.window
    times: list[float] = []
    history = []
    start_evals = base.evaluations
    for k in range(1, n + 1):
        scan = base.scanner(times)
        start = times[-1] if times else lo
        if start < hi:
            tk, var = grid_minimize_1d(scan, start, hi, cfg.coarse_step, cfg.fine_step,
                                       threads=cfg.threads, refine=False)
        else:
            tk, var = hi, scan(hi)
        times.append(tk)
        history.append((k, var))
        _log(progress, f"FSS pulse {k}/{n}: t={tk:.3f} var_min={var:.8f}")
    t_min, var = base.min_variance(times)
    return OptimizationResult("FSS", times, var, t_min, history, [], True, None,
                              _config_echo(base, cfg, n), base.evaluations - start_evals)


def _iterative(tag, base: CostModel, n: int, cfg: SearchConfig, local, progress=None):
    _check_n(n)
    lo, hi = cfg.window
    rng = np.random.default_rng(cfg.rng_seed)
    times: list[float] = []
    history, sweeps = [], []
    converged = True
    start_evals = base.evaluations
    for k in range(1, n + 1):
        times.append(float(rng.uniform(lo, hi)))
        x_aux = 10.0
        stage_ok = False
        for s in range(1, cfg.max_sweeps + 1):
            c = None
            for j in range(k):
                others = times[:j] + times[j + 1:]
                times[j], c = local(base.scanner(others), times[j])
            sweeps.append((k, s, c))
            _log(progress, f"{tag} pulses={k}/{n} sweep={s} var_min={c:.8f}")
            delta = abs(x_aux - c)
            x_aux = c
            if delta <= cfg.sweep_tolerance:
                stage_ok = True
                break
        converged = converged and stage_ok
        history.append((k, x_aux))
    times = [round(t, _ROUND) for t in times]
    t_min, var = base.min_variance(times)
    return OptimizationResult(tag, times, var, t_min, history, sweeps, converged, cfg.rng_seed,
                              _config_echo(base, cfg, n), base.evaluations - start_evals)


def ids(base: CostModel, n: int, cfg: SearchConfig, progress=None) -> OptimizationResult:
    lo, hi = cfg.window

    def local(scan, current):
        return grid_minimize_1d(scan, lo, hi, cfg.coarse_step, cfg.fine_step,
                                include=current, threads=cfg.threads)
    return _iterative("IDS", base, n, cfg, local, progress)


def gb_ids(base: CostModel, n: int, cfg: SearchConfig, progress=None) -> OptimizationResult:
    lo, hi = cfg.window

    def local(scan, current):
        return bounded_descent(scan, current, lo, hi, probe=cfg.fine_step)
    return _iterative("GB_IDS", base, n, cfg, local, progress)


def gf_ids(base: CostModel, n: int, cfg: SearchConfig, progress=None) -> OptimizationResult:
    lo, hi = cfg.window

    def local(scan, current):
        return golden_line_search(scan, current, lo, hi, tol=cfg.fine_step)
    return _iterative("GF_IDS", base, n, cfg, local, progress)


RUNNERS = {"FSS": fss, "IDS": ids, "GB_IDS": gb_ids, "GF_IDS": gf_ids}


def run_strategy(tag: str, base: CostModel, n: int, cfg: SearchConfig, progress=None):
    try:
        runner = RUNNERS[tag]
    except KeyError:
        raise InvalidArgument(f"unknown strategy {tag!r}; expected one of {STRATEGIES}") from None
    return runner(base, n, cfg, progress)
