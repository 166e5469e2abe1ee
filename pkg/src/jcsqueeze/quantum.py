"""Hilbert space, operators, states and closed-form results for the
Jaynes-Cummings system.

Units: hbar = g = 1, so times are ``g t`` and frequencies are ratios to g.
Basis ordering is qubit (x) field with the qubit basis ``(e, g)``: flat index
``q * (n_max + 1) + n`` where ``q = 0`` is the excited state.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import CutoffTooSmall, InvalidArgument, InvalidState, UnsupportedConfiguration

EXCITED, GROUND = 0, 1

PREP_TAIL_LIMIT = 1e-8
RUN_TAIL_LIMIT = 1e-6
NORM_LIMIT = 1e-6
SHOT_NOISE = 0.25


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless model parameters; all frequencies in units of g."""

    omega_over_g: float = 100.0
    omega0_over_g: float = 100.0
    omegap_over_g: float = 100.0
    n_max: int = 80

    def __post_init__(self):
        if not self.omega_over_g > 0:
            raise InvalidArgument(f"omega_over_g must be > 0, got {self.omega_over_g}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise InvalidArgument(f"n_max must be an integer >= 1, got {self.n_max}")

    @property
    def detuning(self) -> float:
        """Qubit minus field frequency, in units of g."""
        return self.omega0_over_g - self.omega_over_g

    @property
    def resonant(self) -> bool:
        return self.omega0_over_g == self.omega_over_g


@dataclass(frozen=True)
class HilbertSpace:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise InvalidArgument(f"n_max must be an integer >= 1, got {self.n_max}")

    @property
    def n_levels(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * self.n_levels

    def index(self, qubit: int, n: int) -> int:
        if qubit not in (EXCITED, GROUND) or not 0 <= n <= self.n_max:
            raise InvalidArgument(f"no basis state (qubit={qubit}, n={n}) in this space")
        return qubit * self.n_levels + n

    def label(self, idx: int) -> tuple[int, int]:
        if not 0 <= idx < self.dim:
            raise InvalidArgument(f"index {idx} outside [0, {self.dim})")
        return divmod(idx, self.n_levels)


def build_space(n_max: int) -> HilbertSpace:
    return HilbertSpace(n_max)


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    space: HilbertSpace

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.space.dim,):
            raise InvalidArgument(f"expected {self.space.dim} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def excited(self) -> np.ndarray:
        return self.amplitudes[: self.space.n_levels]

    @property
    def ground(self) -> np.ndarray:
        return self.amplitudes[self.space.n_levels:]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def excited_population(self) -> float:
        return float(np.vdot(self.excited, self.excited).real)

    def photon_distribution(self) -> np.ndarray:
        return np.abs(self.excited) ** 2 + np.abs(self.ground) ** 2

    def tail_weight(self) -> float:
        """Population held by the top 10% of Fock levels."""
        p = self.photon_distribution()
        return float(p[-tail_levels(self.space.n_levels):].sum())

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2


def tail_levels(n_levels: int) -> int:
    return max(1, math.ceil(0.1 * n_levels))


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgument(f"operator must be square, got shape {m.shape}")
        if self.hermitian and np.max(np.abs(m - m.conj().T), initial=0.0) >= 1e-12:
            raise InvalidArgument("operator flagged hermitian but M != M^dagger")
        object.__setattr__(self, "matrix", _frozen(m))

    def expect(self, state: StateVector) -> complex:
        return complex(np.vdot(state.amplitudes, self.matrix @ state.amplitudes))

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.matrix @ other.matrix)
        return self.matrix @ other


# -- field and qubit building blocks ------------------------------------------

def _field_annihilation(n_levels):
    return np.diag(np.sqrt(np.arange(1, n_levels)), k=1).astype(np.complex128)


_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)  # |e><g|


def annihilation(space: HilbertSpace) -> OperatorMatrix:
    return OperatorMatrix(np.kron(np.eye(2), _field_annihilation(space.n_levels)))


def number_operator(space: HilbertSpace) -> OperatorMatrix:
    n = np.arange(space.n_levels, dtype=float)
    return OperatorMatrix(np.diag(np.concatenate([n, n])), hermitian=True)


def sigma_z(space: HilbertSpace) -> OperatorMatrix:
    return OperatorMatrix(np.kron(_SIGMA_Z, np.eye(space.n_levels)), hermitian=True)


def sigma_plus(space: HilbertSpace) -> OperatorMatrix:
    return OperatorMatrix(np.kron(_SIGMA_PLUS, np.eye(space.n_levels)))


def excitation_number(space: HilbertSpace) -> OperatorMatrix:
    """a^dagger a + sigma_+ sigma_-."""
    n = np.arange(space.n_levels, dtype=float)
    return OperatorMatrix(np.diag(np.concatenate([n + 1, n])), hermitian=True)


def quadrature_operator(space: HilbertSpace) -> OperatorMatrix:
    """X = (a + a^dagger) / 2."""
    a = annihilation(space).matrix
    return OperatorMatrix((a + a.conj().T) / 2, hermitian=True)


def jc_hamiltonian(params: SystemParams, space: HilbertSpace) -> OperatorMatrix:
    """H / (hbar g) = w a^dag a + (w0/2) sz + (s- a^dag + s+ a)."""
    a = annihilation(space).matrix
    sp = sigma_plus(space).matrix
    coupling = sp.conj().T @ a.conj().T + sp @ a
    h = (params.omega_over_g * number_operator(space).matrix
         + 0.5 * params.omega0_over_g * sigma_z(space).matrix
         + coupling)
    return OperatorMatrix(h, hermitian=True)


def drive_operator(space: HilbertSpace) -> OperatorMatrix:
    """sigma_x (x) identity on the field."""
    return OperatorMatrix(np.kron(_SIGMA_X, np.eye(space.n_levels)), hermitian=True)


# -- states ---------------------------------------------------------------------

def coherent_amplitudes(alpha: complex, n_levels: int) -> np.ndarray:
    """Unnormalised-by-truncation coherent amplitudes c_n, n < n_levels."""
    n = np.arange(n_levels)
    r = abs(alpha)
    if r == 0:
        c = np.zeros(n_levels, dtype=np.complex128)
        c[0] = 1.0
        return c
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def required_n_max(mean_photons: float, tail: float = PREP_TAIL_LIMIT) -> int:
    """Smallest n_max whose Poisson tail beyond it is below ``tail``."""
    if mean_photons <= 0:
        return 1
    return max(1, int(poisson.isf(tail, mean_photons)))


def coherent_excited_state(alpha: complex, space: HilbertSpace) -> StateVector:
    """|e>|alpha>, renormalised after truncation.

    Raises CutoffTooSmall when the Poisson weight beyond n_max exceeds 1e-8.
    """
    nbar = abs(alpha) ** 2
    tail = float(poisson.sf(space.n_max, nbar)) if nbar > 0 else 0.0
    if tail >= PREP_TAIL_LIMIT:
        need = required_n_max(nbar)
        raise CutoffTooSmall(
            f"Poisson tail beyond n_max={space.n_max} is {tail:.3e} for |alpha|^2={nbar:.4g}; "
            f"use n_max >= {need}", required_n_max=need)
    c = coherent_amplitudes(alpha, space.n_levels)
    c = c / np.linalg.norm(c)
    amps = np.zeros(space.dim, dtype=np.complex128)
    amps[: space.n_levels] = c
    return StateVector(amps, space)


def basis_state(space: HilbertSpace, qubit: int, n: int) -> StateVector:
    amps = np.zeros(space.dim, dtype=np.complex128)
    amps[space.index(qubit, n)] = 1.0
    return StateVector(amps, space)


def check_normalized(state: StateVector, tol: float = NORM_LIMIT) -> None:
    if abs(state.norm - 1.0) > tol:
        raise InvalidState(f"state norm {state.norm:.12g} deviates from 1 by more than {tol:g}")


def quadrature_variance(state: StateVector) -> float:
    """<X^2> - <X>^2 for X = (a + a^dagger)/2, evaluated on the full state."""
    check_normalized(state)
    x = quadrature_operator(state.space).matrix
    psi = state.amplitudes
    x_psi = x @ psi
    mean = np.vdot(psi, x_psi).real
    second = np.vdot(x_psi, x_psi).real
    return max(second - mean * mean, 0.0)


def interaction_components(c: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Field components (Psi_e, Psi_g) at time t for |e> (sum_n c_n |n>), no drive,
    in the interaction picture: ``c_n cos(t sqrt(n+1))`` and ``-i c_(n-1) sin(t sqrt(n))``.
    """
    c = np.asarray(c, dtype=np.complex128)
    n = np.arange(c.size)
    psi_e = c * np.cos(t * np.sqrt(n + 1.0))
    psi_g = np.zeros_like(psi_e)
    psi_g[1:] = -1j * c[:-1] * np.sin(t * np.sqrt(n[1:]))
    return psi_e, psi_g


def analytic_jc_evolution(alpha: complex, t: float, params: SystemParams,
                          space: HilbertSpace) -> StateVector:
    """Closed-form drive-free evolution of |e>|alpha> on resonance, lab frame.

    Interaction-picture amplitudes ``c_n cos(t sqrt(n+1))`` on |e,n> and
    ``-i c_{n-1} sin(t sqrt(n))`` on |g,n>, then the free phases
    ``exp(-i (w n +/- w0/2) t)``.
    """
    if not params.resonant:
        raise UnsupportedConfiguration("closed-form evolution needs omega0_over_g == omega_over_g")
    c = coherent_excited_state(alpha, space).excited
    psi_e, psi_g = interaction_components(c, t)
    n = np.arange(space.n_levels)
    w, w0 = params.omega_over_g, params.omega0_over_g
    psi_e = psi_e * np.exp(-1j * (w * n + 0.5 * w0) * t)
    psi_g = psi_g * np.exp(-1j * (w * n - 0.5 * w0) * t)
    return StateVector(np.concatenate([psi_e, psi_g]), space)


def partial_trace_qubit(state: StateVector) -> np.ndarray:
    """Reduced field density matrix Tr_qubit |psi><psi|."""
    check_normalized(state)
    e, g = state.excited, state.ground
    return np.outer(e, e.conj()) + np.outer(g, g.conj())


def rotate_to_frame(state: StateVector, t: float, omega: float) -> np.ndarray:
    """Lab-frame amplitudes -> frame rotating at ``omega`` for field and qubit.

    Returns a (2, n_levels) array with rows (excited, ground).
    """
    n = np.arange(state.space.n_levels)
    psi = np.empty((2, state.space.n_levels), dtype=np.complex128)
    psi[0] = state.excited * np.exp(1j * omega * (n + 0.5) * t)
    psi[1] = state.ground * np.exp(1j * omega * (n - 0.5) * t)
    return psi


def rotate_to_lab(psi: np.ndarray, t: float, omega: float, space: HilbertSpace) -> StateVector:
    n = np.arange(space.n_levels)
    e = psi[0] * np.exp(-1j * omega * (n + 0.5) * t)
    g = psi[1] * np.exp(-1j * omega * (n - 0.5) * t)
    return StateVector(np.concatenate([e, g]), space)
