"""Fluxonium and SQUID-transmon Hamiltonians.

The fluxonium is diagonalized in the ladder basis of its LC oscillator,
with the phase measured from the total offset ``phi_off = phi_trap +
phi_ext``::

    H = sqrt(8 E_C E_L) (a^dag a + 1/2) - E_J cos(theta + phi_off)
    theta = phi_zpf (a + a^dag),   phi_zpf = (2 E_C / E_L)**(1/4)

The SQUID transmon uses the integer charge basis. All energies are E/h in
GHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, optimize

from .constants import TWO_PI
from .errors import ConvergenceError, InvalidParameterError

_PHASE_TOL = 1e-12


@dataclass(frozen=True)
class FluxoniumParams:
    """Circuit energies of a fluxonium, E/h in GHz.

    ``e_j = 0`` is allowed and gives a pure harmonic oscillator.
    """

    e_j: float
    e_c: float
    e_l: float

    def __post_init__(self):
        if not (self.e_c > 0 and self.e_l > 0 and self.e_j >= 0):
            raise InvalidParameterError(
                f"need e_c > 0, e_l > 0, e_j >= 0; got {self}"
            )

    @property
    def plasma_frequency(self) -> float:
        return math.sqrt(8.0 * self.e_c * self.e_l)

    @property
    def phi_zpf(self) -> float:
        return (2.0 * self.e_c / self.e_l) ** 0.25

    @property
    def n_zpf(self) -> float:
        return (self.e_l / (32.0 * self.e_c)) ** 0.25


@dataclass(frozen=True)
class FluxConfig:
    """Phase bias of a fluxonium.

    ``phi_trap`` is the offset produced by trapped fluxoids and must lie in
    [0, 2pi). ``n_trapped`` is optional provenance; when given it has to be
    consistent with ``phi_trap``.
    """

    phi_ext: float = 0.0
    phi_trap: float = 0.0
    n_trapped: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.phi_trap < TWO_PI):
            raise InvalidParameterError(f"phi_trap={self.phi_trap} outside [0, 2pi)")
        if self.n_trapped is not None:
            expected = (self.n_trapped * math.pi) % TWO_PI
            if abs(self.phi_trap - expected) >= _PHASE_TOL:
                raise InvalidParameterError(
                    f"phi_trap={self.phi_trap} inconsistent with n_trapped={self.n_trapped}"
                )

    @classmethod
    def trapped(cls, n: int, phi_ext: float = 0.0) -> "FluxConfig":
        return cls(phi_ext=phi_ext, phi_trap=(n * math.pi) % TWO_PI, n_trapped=n)

    @classmethod
    def from_offset(cls, phi_off: float) -> "FluxConfig":
        """Config with no trapped phase and ``phi_ext = phi_off``."""
        return cls(phi_ext=phi_off)

    @property
    def phi_offset(self) -> float:
        return self.phi_trap + self.phi_ext


@dataclass(frozen=True)
class TransmonParams:
    """SQUID-transmon energies (GHz) and offset charge."""

    e_j1: float
    e_j2: float
    e_c: float
    n_g: float = 0.0

    def __post_init__(self):
        if not (self.e_j1 >= self.e_j2 >= 0 and self.e_c > 0):
            raise InvalidParameterError(f"need e_j1 >= e_j2 >= 0 and e_c > 0; got {self}")


@dataclass(frozen=True)
class SolverConfig:
    """Truncation settings.

    Every spectrum is checked against a basis enlarged by 20 oscillator
    states (fluxonium) or 10 charge states (transmon). If
    the lowest ``n_levels`` energies move by more than ``tol`` GHz the basis is
    grown until it converges or ``max_basis_dim`` / ``max_charge_cutoff`` is
    exceeded.
    """

    basis_dim: int = 120
    charge_cutoff: int = 40
    n_levels: int = 6
    tol: float = 1e-9
    check_convergence: bool = True
    max_basis_dim: int = 400
    max_charge_cutoff: int = 200

    def __post_init__(self):
        if self.n_levels < 2:
            raise InvalidParameterError("n_levels must be >= 2")
        if self.basis_dim < 3 * self.n_levels:
            raise InvalidParameterError("basis_dim must be >= 3 * n_levels")
        if self.charge_cutoff < 10:
            raise InvalidParameterError("charge_cutoff must be >= 10")


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True)
class EnergySpectrum:
    """Lowest eigenpairs of a Hamiltonian.

    ``frequencies`` are eigenvalues E/h in GHz in ascending order and the
    columns of ``eigenvectors`` are the matching basis coefficients.
    """

    frequencies: np.ndarray
    eigenvectors: np.ndarray
    basis: str = "oscillator"
    phi_zpf: float | None = field(default=None, repr=False)

    def transition(self, i: int, j: int) -> float:
        _check_pair(i, j, len(self.frequencies))
        return float(self.frequencies[j] - self.frequencies[i])


def _check_pair(i: int, j: int, n: int) -> None:
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"level indices ({i}, {j}) out of range for {n} levels")


# ---------------------------------------------------------------- fluxonium


@lru_cache(maxsize=64)
def _phase_functions(phi_zpf: float, dim: int):
    """cos(theta) and sin(theta) via the eigenbasis of the truncated theta."""
    off = phi_zpf * np.sqrt(np.arange(1, dim, dtype=float))
    lam, vecs = linalg.eigh_tridiagonal(np.zeros(dim), off)
    cos_t = (vecs * np.cos(lam)) @ vecs.T
    sin_t = (vecs * np.sin(lam)) @ vecs.T
    for m in (cos_t, sin_t):
        m.flags.writeable = False
    return cos_t, sin_t


def _theta_matrix(phi_zpf: float, dim: int) -> np.ndarray:
    off = phi_zpf * np.sqrt(np.arange(1, dim, dtype=float))
    return np.diag(off, 1) + np.diag(off, -1)


def _ladder_difference(dim: int) -> np.ndarray:
    """Real antisymmetric matrix of (a^dag - a)."""
    off = np.sqrt(np.arange(1, dim, dtype=float))
    return np.diag(off, -1) - np.diag(off, 1)


def _fluxonium_hamiltonian(params: FluxoniumParams, phi_off: float, dim: int) -> np.ndarray:
    cos_t, sin_t = _phase_functions(params.phi_zpf, dim)
    h = -params.e_j * (math.cos(phi_off) * cos_t - math.sin(phi_off) * sin_t)
    h[np.diag_indices(dim)] += params.plasma_frequency * (np.arange(dim) + 0.5)
    return h


def _lowest(h: np.ndarray, n: int, vectors: bool = True):
    if vectors:
        return linalg.eigh(h, subset_by_index=[0, n - 1])
    return linalg.eigh(h, subset_by_index=[0, n - 1], eigvals_only=True), None


def _fluxonium_converged(params, phi_off, solver, vectors=True):
    dim = solver.basis_dim
    evals, vecs = _lowest(_fluxonium_hamiltonian(params, phi_off, dim), solver.n_levels, vectors)
    if not solver.check_convergence:
        return evals, vecs, dim
    while True:
        bigger = dim + 20
        evals2, vecs2 = _lowest(
            _fluxonium_hamiltonian(params, phi_off, bigger), solver.n_levels, vectors
        )
        if np.max(np.abs(evals2 - evals)) < solver.tol:
            return evals, vecs, dim
        if bigger >= solver.max_basis_dim:
            raise ConvergenceError(
                f"fluxonium spectrum not converged at basis_dim={bigger} "
                f"(change {np.max(np.abs(evals2 - evals)):.3g} GHz)"
            )
        dim, evals, vecs = bigger, evals2, vecs2


def fluxonium_spectrum(
    params: FluxoniumParams, flux: FluxConfig, solver: SolverConfig = DEFAULT_SOLVER
) -> EnergySpectrum:
    """Lowest ``solver.n_levels`` eigenpairs of the trapped-flux fluxonium."""
    evals, vecs, _ = _fluxonium_converged(params, flux.phi_offset, solver)
    return EnergySpectrum(evals, vecs, basis="oscillator", phi_zpf=params.phi_zpf)


def fluxonium_levels(
    params: FluxoniumParams, phi_offsets, solver: SolverConfig = DEFAULT_SOLVER
) -> np.ndarray:
    """Eigenvalues (GHz) at each total phase offset, shape ``(len, n_levels)``."""
    phi_offsets = np.atleast_1d(np.asarray(phi_offsets, dtype=float))
    out = np.empty((phi_offsets.size, solver.n_levels))
    for k, phi in enumerate(phi_offsets):
        out[k] = _fluxonium_converged(params, phi, solver, vectors=False)[0]
    return out


def transition_frequency(
    params: FluxoniumParams,
    flux: FluxConfig,
    i: int = 0,
    j: int = 1,
    solver: SolverConfig = DEFAULT_SOLVER,
) -> float:
    if not 0 <= i < j:
        raise IndexError(f"need 0 <= i < j, got ({i}, {j})")
    return fluxonium_spectrum(params, flux, solver).transition(i, j)


def _charge_element(spec: EnergySpectrum, params: FluxoniumParams, i: int, j: int) -> float:
    _check_pair(i, j, len(spec.frequencies))
    vecs = spec.eigenvectors
    d = _ladder_difference(vecs.shape[0])
    return float(params.n_zpf * abs(vecs[:, i] @ d @ vecs[:, j]))


def _dispersion(spec: EnergySpectrum, params: FluxoniumParams) -> float:
    if spec.transition(0, 1) < 1e-9:
        raise ConvergenceError("levels 0 and 1 are degenerate; dispersion ill-defined")
    vecs = spec.eigenvectors
    theta = _theta_matrix(params.phi_zpf, vecs.shape[0])
    t0 = vecs[:, 0] @ theta @ vecs[:, 0]
    t1 = vecs[:, 1] @ theta @ vecs[:, 1]
    return float(params.e_l * (t0 - t1))


def charge_matrix_element(
    params: FluxoniumParams,
    flux: FluxConfig,
    i: int = 0,
    j: int = 1,
    solver: SolverConfig = DEFAULT_SOLVER,
) -> float:
    """|<i|n|j>| between fluxonium eigenstates."""
    if i == j:
        raise IndexError("charge matrix element requires i != j")
    return _charge_element(fluxonium_spectrum(params, flux, solver), params, i, j)


def flux_dispersion(
    params: FluxoniumParams, flux: FluxConfig, solver: SolverConfig = DEFAULT_SOLVER
) -> float:
    """df01/dphi_ext in GHz/rad from the Hellmann-Feynman theorem.

    Multiply by 2pi for GHz per flux quantum.
    """
    return _dispersion(fluxonium_spectrum(params, flux, solver), params)


def qubit_point(
    params: FluxoniumParams, flux: FluxConfig, solver: SolverConfig = DEFAULT_SOLVER
) -> tuple[float, float, float]:
    """f01 (GHz), |<0|n|1>| and df01/dphi_ext (GHz/rad) from one diagonalization."""
    spec = fluxonium_spectrum(params, flux, solver)
    return spec.transition(0, 1), _charge_element(spec, params, 0, 1), _dispersion(spec, params)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f, a: float, b: float, tol: float) -> float:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def find_sweet_spot(
    params: FluxoniumParams,
    phi_trap: float,
    window: tuple[float, float],
    solver: SolverConfig = DEFAULT_SOLVER,
    tol: float = 1e-8,
) -> float:
    """External phase minimizing f01 inside ``window``.

    Golden-section search on f01 locates the minimum; because f01 is flat
    there, the last digits come from a bracketed root of the
    Hellmann-Feynman dispersion.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi or hi - lo > TWO_PI + 1e-12:
        raise InvalidParameterError(f"window {window} must be increasing and at most 2pi long")
    light = SolverConfig(basis_dim=solver.basis_dim, n_levels=2, check_convergence=False)

    def f01(phi_ext):
        levels = fluxonium_levels(params, [phi_trap + phi_ext], light)[0]
        return levels[1] - levels[0]

    x = _golden_section(f01, lo, hi, 1e-5)
    edge = 1e-4 * (hi - lo)
    if x - lo < edge or hi - x < edge:
        raise ConvergenceError(f"no interior f01 minimum in window {window}")

    def slope(phi_ext):
        return flux_dispersion(params, FluxConfig(phi_ext=phi_ext, phi_trap=phi_trap), solver)

    a, b = x - 1e-4, x + 1e-4
    sa, sb = slope(a), slope(b)
    if sa < 0 < sb:
        x = optimize.brentq(slope, a, b, xtol=min(tol, 1e-12), rtol=4 * np.finfo(float).eps)
    elif not (sa == 0 or sb == 0):
        raise ConvergenceError("dispersion does not change sign around the f01 minimum")
    return float(x)


# ---------------------------------------------------------------- transmon


def _transmon_hamiltonian(tp: TransmonParams, phi_ext: float, cutoff: int) -> np.ndarray:
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    h = np.diag(4.0 * tp.e_c * (n - tp.n_g) ** 2).astype(complex)
    # <n+1|H|n> from cos(phi) and cos(phi - phi_ext)
    hop = -0.5 * tp.e_j1 - 0.5 * tp.e_j2 * np.exp(-1j * phi_ext)
    idx = np.arange(2 * cutoff)
    h[idx + 1, idx] = hop
    h[idx, idx + 1] = np.conj(hop)
    return h


def transmon_spectrum(
    tparams: TransmonParams, phi_ext: float, solver: SolverConfig = DEFAULT_SOLVER
) -> EnergySpectrum:
    """Lowest eigenpairs of the SQUID transmon in the charge basis."""
    cutoff = solver.charge_cutoff
    n_levels = solver.n_levels
    evals, vecs = _lowest(_transmon_hamiltonian(tparams, phi_ext, cutoff), n_levels)
    while solver.check_convergence:
        bigger = cutoff + 10
        evals2, vecs2 = _lowest(_transmon_hamiltonian(tparams, phi_ext, bigger), n_levels)
        if np.max(np.abs(evals2 - evals)) < solver.tol:
            break
        if bigger >= solver.max_charge_cutoff:
            raise ConvergenceError(f"transmon spectrum not converged at cutoff {bigger}")
        cutoff, evals, vecs = bigger, evals2, vecs2
    return EnergySpectrum(evals, vecs, basis="charge")


def effective_josephson_energy(tparams: TransmonParams, phi_ext):
    ej2 = tparams.e_j1**2 + tparams.e_j2**2 + 2 * tparams.e_j1 * tparams.e_j2 * np.cos(phi_ext)
    return np.sqrt(np.maximum(ej2, 0.0))


def transmon_freq_approx(tparams: TransmonParams, phi_ext):
    """Asymptotic transmon f01 = sqrt(8 E_C E_J(phi_ext)) - E_C in GHz.

    Valid for E_C << |E_J1 - E_J2|; that precondition is not checked. For a
    symmetric SQUID at phi_ext = pi the effective E_J vanishes and the
    formula returns -E_C, which is meaningless physically but returned as-is.
    Accepts scalar or array ``phi_ext``.
    """
    out = np.sqrt(8.0 * tparams.e_c * effective_josephson_energy(tparams, phi_ext)) - tparams.e_c
    return float(out) if np.ndim(out) == 0 else out
