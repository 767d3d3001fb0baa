"""Brute-force real-space solver for the fluxonium, used to cross-check the
oscillator-basis diagonalization.

The Hamiltonian is discretized on a uniform phase grid centred on the total
offset, with the kinetic term from an 8th-order central-difference stencil
and hard walls at the grid ends. It shares no code with ``qubit``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from .errors import ConvergenceError
from .qubit import EnergySpectrum, FluxConfig, FluxoniumParams

# central-difference weights, offsets 0..4
_D2 = np.array([-205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_D1 = np.array([0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])

HALF_SPAN = 8 * math.pi


@dataclass(frozen=True)
class GridSpectrum(EnergySpectrum):
    grid: np.ndarray | None = None

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])


def _solve(params: FluxoniumParams, phi_off: float, n_levels: int, points: int) -> GridSpectrum:
    phi = phi_off + np.linspace(-HALF_SPAN, HALF_SPAN, points)
    h = phi[1] - phi[0]
    potential = -params.e_j * np.cos(phi) + 0.5 * params.e_l * (phi - phi_off) ** 2
    kinetic = -4.0 * params.e_c / h**2
    offsets = list(range(-4, 5))
    diagonals = [np.full(points - abs(k), kinetic * _D2[abs(k)]) for k in offsets]
    diagonals[4] = diagonals[4] + potential
    ham = sparse.diags(diagonals, offsets, format="csc")
    # shift-invert below the potential minimum returns the lowest levels
    evals, vecs = sparse_linalg.eigsh(ham, k=n_levels, sigma=potential.min() - 1.0, which="LM", tol=0)
    order = np.argsort(evals)
    evals, vecs = evals[order], vecs[:, order]
    return GridSpectrum(evals, vecs, basis="phase_grid", grid=phi)


def phase_grid_oracle(
    params: FluxoniumParams,
    flux: FluxConfig,
    n_levels: int = 6,
    points: int = 2048,
    tol: float = 1e-6,
) -> GridSpectrum:
    """Lowest ``n_levels`` eigenpairs on a phase grid spanning offset +/- 8 pi.

    The grid is refined once (spacing halved) and the result is rejected if
    any level moves by ``tol`` GHz or more.
    """
    if points < 2048:
        raise ValueError("phase grid needs at least 2048 points")
    coarse = _solve(params, flux.phi_offset, n_levels, points)
    fine = _solve(params, flux.phi_offset, n_levels, 2 * points - 1)
    change = np.max(np.abs(fine.frequencies - coarse.frequencies))
    if change > tol:
        raise ConvergenceError(f"phase grid too coarse: levels moved {change:.3g} GHz on refinement")
    return coarse


def _derivative(psi: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(psi)
    n = len(psi)
    for k in range(1, 5):
        out[: n - k] += _D1[k] * psi[k:]
        out[k:] -= _D1[k] * psi[: n - k]
    return out / h


def grid_charge_matrix_element(spec: GridSpectrum, i: int, j: int) -> float:
    """|<i|n|j>| with n = -i d/dphi, for a grid spectrum."""
    psi_i = spec.eigenvectors[:, i]
    psi_j = spec.eigenvectors[:, j]
    return float(abs(psi_i @ _derivative(psi_j, spec.spacing)))


def grid_phase_expectation(spec: GridSpectrum, k: int) -> float:
    """<k|phi|k> on the grid (absolute phase, not relative to the offset)."""
    psi = spec.eigenvectors[:, k]
    return float(np.sum(psi**2 * spec.grid))
