"""Reporting quantities: reduction percentage, Wigner functions, branch states."""
from __future__ import annotations

from dataclasses import dataclass
import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, InvalidState
from .quantum import SHOT_NOISE, coherent_amplitudes, interaction_components

WIGNER_CONVENTION = (
    "W(x,p) = (1/pi) Tr[rho D(b) P D(-b)], b = (x + i p)/sqrt(2), P = (-1)^(a^dag a); "
    "axes x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)); integral W dx dp = 1"
)
DEFAULT_HALF_WIDTH = 8.0
DEFAULT_POINTS = 201


def reduction_percent(var_x: float) -> float:
    """Percentage of shot noise removed: (0.25 - var) / 0.25 * 100."""
    if var_x < 0:
        raise InvalidArgument(f"variance must be >= 0, got {var_x}")
    return (SHOT_NOISE - var_x) / SHOT_NOISE * 100.0


def variance_from_reduction(percent: float) -> float:
    return SHOT_NOISE * (1.0 - percent / 100.0)


# -- Wigner functions -------------------------------------------------------------------

@dataclass(frozen=True)
class WignerGrid:
    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # shape (len(p_axis), len(x_axis))
    convention_tag: str = WIGNER_CONVENTION
    coverage_warning: bool = False
    time: float | None = None

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.x_axis, axis=1), self.p_axis))

    def x_marginal(self) -> np.ndarray:
        return np.trapezoid(self.values, self.p_axis, axis=0)

    def marginal_variance_x(self) -> float:
        """Variance of the x marginal, converted to X = (a + a^dag)/2 units.

        x = sqrt(2) X, so Var(X) = Var(x) / 2.
        """
        m = self.x_marginal()
        norm = np.trapezoid(m, self.x_axis)
        mean = np.trapezoid(self.x_axis * m, self.x_axis) / norm
        var = np.trapezoid((self.x_axis - mean) ** 2 * m, self.x_axis) / norm
        return float(var / 2.0)

    def header(self) -> dict:
        return {
            "convention_tag": self.convention_tag,
            "x_range": [float(self.x_axis[0]), float(self.x_axis[-1]), int(self.x_axis.size)],
            "p_range": [float(self.p_axis[0]), float(self.p_axis[-1]), int(self.p_axis.size)],
            "integral": self.integral(),
            "coverage_warning": self.coverage_warning,
            "gt": self.time,
        }

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "p", "w"])
        for i, p in enumerate(self.p_axis):
            for j, x in enumerate(self.x_axis):
                w.writerow([repr(float(x)), repr(float(p)), repr(float(self.values[i, j]))])
        text = buf.getvalue()
        if path is not None:
            path = Path(path)
            path.write_text(text)
            path.with_suffix(".json").write_text(json.dumps(self.header(), indent=2) + "\n")
        return text

    @classmethod
    def from_csv(cls, path) -> "WignerGrid":
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        xs = np.unique(data[:, 0])
        ps = np.unique(data[:, 1])
        vals = data[:, 2].reshape(ps.size, xs.size)
        meta = {}
        side = path.with_suffix(".json")
        if side.exists():
            meta = json.loads(side.read_text())
        return cls(xs, ps, vals, meta.get("convention_tag", WIGNER_CONVENTION),
                   meta.get("coverage_warning", False), meta.get("gt"))


def _check_density(rho):
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidState(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > 1e-10:
        raise InvalidState("density matrix is not hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise InvalidState(f"density matrix trace {tr:.10g} != 1")
    return rho


def phase_space_moments(rho) -> tuple[float, float, float, float]:
    """(mean x, sd x, mean p, sd p) on the sqrt(2) axes."""
    rho = np.asarray(rho, dtype=np.complex128)
    m = rho.shape[0]
    a = np.diag(np.sqrt(np.arange(1, m)), k=1)
    x = (a + a.T) / math.sqrt(2)
    p = (a - a.T) / (1j * math.sqrt(2))
    out = []
    for op in (x, p):
        mu = np.trace(rho @ op).real
        var = np.trace(rho @ op @ op).real - mu * mu
        out += [mu, math.sqrt(max(var, 0.0))]
    return tuple(out)


def default_axes(rho, half_width=DEFAULT_HALF_WIDTH, points=DEFAULT_POINTS, spread=6.0):
    """201 points over [-8, 8] per axis, widened to cover mean +/- 6 sd when needed."""
    mx, sx, mp, sp = phase_space_moments(rho)
    hx = max(half_width, abs(mx) + spread * sx)
    hp = max(half_width, abs(mp) + spread * sp)
    return np.linspace(-hx, hx, points), np.linspace(-hp, hp, points)


def wigner(rho, x_axis=None, p_axis=None, time=None) -> WignerGrid:
    """Wigner function of a field density matrix on a rectangular grid.

    Uses the Laguerre recurrence for the Fock-basis Wigner functions of
    |m><n|, built up row by row so only O(n_levels) grids are alive.
    """
    rho = _check_density(rho)
    if x_axis is None or p_axis is None:
        dx, dp = default_axes(rho)
        x_axis = dx if x_axis is None else x_axis
        p_axis = dp if p_axis is None else p_axis
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    X, P = np.meshgrid(x_axis, p_axis)
    A = (X + 1j * P) / math.sqrt(2.0)
    m = rho.shape[0]
    # w[n] holds 2x the Wigner function of |k><n| for the current row k
    w = [None] * m
    w[0] = np.exp(-2.0 * np.abs(A) ** 2) / math.pi
    W = rho[0, 0].real * w[0].real
    for n in range(1, m):
        w[n] = 2.0 * A * w[n - 1] / math.sqrt(n)
        W += 2.0 * np.real(rho[0, n] * w[n])
    for k in range(1, m):
        prev = w[k]
        w[k] = (2.0 * np.conj(A) * prev - math.sqrt(k) * w[k - 1]) / math.sqrt(k)
        W += np.real(rho[k, k] * w[k])
        for n in range(k + 1, m):
            nxt = (2.0 * A * w[n - 1] - math.sqrt(k) * prev) / math.sqrt(n)
            prev = w[n]
            w[n] = nxt
            W += 2.0 * np.real(rho[k, n] * w[n])
    mx, sx, mp, sp = phase_space_moments(rho)
    covered = (x_axis[0] <= mx - 6 * sx and x_axis[-1] >= mx + 6 * sx
               and p_axis[0] <= mp - 6 * sp and p_axis[-1] >= mp + 6 * sp)
    return WignerGrid(x_axis, p_axis, W, WIGNER_CONVENTION, not covered, time)


# -- large-n branch states ----------------------------------------------------------------

@dataclass(frozen=True)
class BranchStates:
    """Counter-rotating field branches of the resonant JC evolution from |e>|alpha>.

    Interaction-picture amplitudes over Fock levels 0..n_max.
    """

    psi_plus: np.ndarray
    psi_minus: np.ndarray
    phi_plus: np.ndarray
    phi_minus: np.ndarray

    @property
    def excited(self) -> np.ndarray:
        return 0.5 * (self.psi_plus + self.psi_minus)

    @property
    def ground(self) -> np.ndarray:
        return 0.5 * (self.phi_plus + self.phi_minus)


def approximate_branch_states(alpha: float, t: float, n_max: int = 80) -> BranchStates:
    """Third-order phase expansion of the two JC branches.

    psi_(+/-) = sum c_n exp(+/- i t s_e(n)) |n> with s_e the expansion of
    sqrt(n + 1) about nbar, and phi_(+/-) = -/+ sum c_(n-1) exp(+/- i t s_g(n)) |n>
    with s_g the expansion of sqrt(n) about nbar, so that the half sums
    approximate the exact excited and ground components.
    """
    if isinstance(alpha, complex) and alpha.imag != 0:
        raise InvalidArgument("alpha must be real")
    alpha = float(np.real(alpha))
    nbar = alpha * alpha
    if nbar < 6 - 1e-9:
        raise InvalidArgument(f"expansion needs |alpha|^2 >= 6, got {nbar:.4g}")
    n_levels = n_max + 1
    c = coherent_amplitudes(alpha, n_levels).real
    c = c / np.linalg.norm(c)
    n = np.arange(n_levels, dtype=float)
    # expansion of sqrt(n + 1) = sqrt((nbar + 1) + (n - nbar))
    xe = n - nbar
    re = nbar + 1.0
    se = math.sqrt(re) + xe / (2 * re ** 0.5) - xe ** 2 / (8 * re ** 1.5) + xe ** 3 / (16 * re ** 2.5)
    # expansion of sqrt(n) = sqrt(nbar + (n - nbar))
    sg = math.sqrt(nbar) + xe / (2 * nbar ** 0.5) - xe ** 2 / (8 * nbar ** 1.5) + xe ** 3 / (16 * nbar ** 2.5)
    c_shift = np.zeros(n_levels)
    c_shift[1:] = c[:-1]
    psi_p = c * np.exp(1j * t * se)
    psi_m = c * np.exp(-1j * t * se)
    phi_p = -c_shift * np.exp(1j * t * sg)
    phi_m = c_shift * np.exp(-1j * t * sg)
    return BranchStates(psi_p, psi_m, phi_p, phi_m)


def branch_overlap(alpha: float, t: float, n_max: int = 80) -> float:
    """|<Psi_e|recon>|^2 / ||Psi_e||^2 with recon = (psi_+ + psi_-)/2.

    Both sides are normalised to unit length before the overlap is taken.
    """
    b = approximate_branch_states(alpha, t, n_max)
    c = coherent_amplitudes(float(alpha), n_max + 1)
    c = c / np.linalg.norm(c)
    exact_e, _ = interaction_components(c, t)
    recon = b.excited
    ne, nr = np.linalg.norm(exact_e), np.linalg.norm(recon)
    if ne == 0 or nr == 0:
        return 0.0
    return float(abs(np.vdot(exact_e, recon)) ** 2 / (ne * nr) ** 2)
