"""Coherence-rate models for a dielectric-loss- and 1/f-flux-noise-limited
fluxonium.

Rates are in 1/us and times in us at every public boundary. Flux-noise
amplitudes are in units of Phi0 (the value of sqrt(S_Phi) at 1 Hz, with
S_Phi(f) = A**2 * 1 Hz / f), and flux dispersions d(omega01)/d(Phi_ext) are
angular, in rad/s per Phi0; see ``constants.angular_dispersion``. The
infrared cutoff ``omega_l`` is in rad/s, so the Ramsey logarithm compares
rates in 1/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import GHZ, H, K_B, TWO_PI, angular_dispersion
from .errors import ConvergenceError, InvalidParameterError
from .qubit import (
    DEFAULT_SOLVER,
    FluxConfig,
    FluxoniumParams,
    SolverConfig,
    charge_matrix_element,
    qubit_point,
    transition_frequency,
)

_SQRT_LN2 = math.sqrt(math.log(2.0))


@dataclass(frozen=True)
class NoiseModel:
    """Noise parameters for T1, echo and Ramsey models.

    ``gamma_misc_*`` are flux-independent dephasing rates in 1/us; a value
    quoted as Gamma/2pi = x kHz enters as ``constants.rate_from_khz_over_2pi(x)``.
    """

    tan_delta_c: float
    a_phi_echo: float
    a_phi_ramsey: float
    gamma_misc_echo: float
    gamma_misc_ramsey: float
    temperature: float = 0.05
    omega_l: float = TWO_PI * 1.0

    def __post_init__(self):
        values = (self.tan_delta_c, self.a_phi_echo, self.a_phi_ramsey,
                  self.gamma_misc_echo, self.gamma_misc_ramsey)
        if any(v < 0 for v in values):
            raise InvalidParameterError(f"noise parameters must be nonnegative: {self}")
        if not (self.temperature > 0 and self.omega_l > 0):
            raise InvalidParameterError("temperature and omega_l must be positive")


@dataclass(frozen=True)
class RatePair:
    """Exponential and Gaussian decay rates of an echo envelope, 1/us."""

    gamma_exp: float
    gamma_gauss: float

    def __post_init__(self):
        if self.gamma_exp < 0 or self.gamma_gauss < 0:
            raise InvalidParameterError("decay rates must be nonnegative")


def gamma1_from_matrix_element(
    e_c: float, n01: float, f01: float, tan_delta_c: float, temperature: float
) -> float:
    """Dielectric relaxation rate (1/us) from E_C (GHz), |<0|n|1>|, f01 (GHz).

    ``temperature = 0`` takes the zero-temperature limit coth -> 1.
    """
    if not f01 > 0:
        raise InvalidParameterError(f"f01 must be positive, got {f01}")
    if temperature > 0:
        thermal = 1.0 / math.tanh(H * f01 * GHZ / (2.0 * K_B * temperature))
    else:
        thermal = 1.0
    rate = 16.0 * TWO_PI * e_c * GHZ * tan_delta_c * n01**2 * thermal
    return rate * 1e-6


def gamma1_dielectric(
    params: FluxoniumParams,
    flux: FluxConfig,
    noise: NoiseModel,
    solver: SolverConfig = DEFAULT_SOLVER,
) -> float:
    f01 = transition_frequency(params, flux, 0, 1, solver)
    n01 = charge_matrix_element(params, flux, 0, 1, solver)
    return gamma1_from_matrix_element(params.e_c, n01, f01, noise.tan_delta_c, noise.temperature)


def t2e_from_rates(rates: RatePair) -> float:
    """1/e time (us) of exp(-g_exp t - (g_gauss t)**2).

    Evaluated in the rationalized form 2 / (g_exp + sqrt(g_exp**2 + 4 g_gauss**2)),
    which equals the textbook expression and tends smoothly to 1/g_exp and
    1/g_gauss in the pure limits.
    """
    ge, gg = rates.gamma_exp, rates.gamma_gauss
    if ge == 0 and gg == 0:
        raise InvalidParameterError("both decay rates are zero; T2e is infinite")
    if gg < 1e-12 * ge:
        return 1.0 / ge
    m = max(ge, gg)  # rescale so the squares cannot underflow
    a, b = ge / m, gg / m
    return 2.0 / (m * (a + math.sqrt(a * a + 4.0 * b * b)))


def gamma2_echo_model(a_phi: float, dispersion: float, gamma1: float, gamma_misc: float) -> float:
    """Echo dephasing rate (1/us) under 1/f flux noise."""
    flux_term = a_phi * abs(dispersion) * _SQRT_LN2 * 1e-6
    return flux_term + 0.5 * gamma1 + gamma_misc


def gamma2_ramsey_model(
    a_phi: float,
    dispersion: float,
    gamma1: float,
    gamma_misc: float,
    omega_l: float = TWO_PI,
    rtol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Ramsey dephasing rate (1/us), solved self-consistently.

    The rate appears inside sqrt(ln(Gamma / omega_l)); the fixed point is found
    by iteration from a seed with ln(1e6), damped if it starts to oscillate.
    """
    base = 0.5 * gamma1 + gamma_misc
    slope = a_phi * abs(dispersion)  # 1/s
    if slope == 0:
        return base
    if omega_l <= 0:
        raise InvalidParameterError("omega_l must be positive")

    def rhs(gamma_us):
        ratio = gamma_us * 1e6 / omega_l
        if ratio <= 1.0:
            raise ConvergenceError(
                f"Ramsey rate {gamma_us:.3g}/us is below the cutoff omega_l; model invalid"
            )
        return slope * math.sqrt(math.log(ratio)) * 1e-6 + base

    gamma = slope * math.sqrt(math.log(1e6)) * 1e-6 + base
    damping = 1.0
    prev_step = 0.0
    for _ in range(max_iter):
        step = rhs(gamma) - gamma
        if prev_step * step < 0:
            damping = 0.5
        new = gamma + damping * step
        if abs(new - gamma) < rtol * abs(new):
            return rhs(new)
        gamma, prev_step = new, step
    raise ConvergenceError(f"Ramsey fixed point did not converge in {max_iter} iterations")


def ramsey_residual(gamma2r, a_phi, dispersion, gamma1, gamma_misc, omega_l=TWO_PI) -> float:
    """Relative mismatch of ``gamma2r`` in the self-consistent Ramsey equation."""
    ratio = gamma2r * 1e6 / omega_l
    rhs = a_phi * abs(dispersion) * math.sqrt(math.log(ratio)) * 1e-6 + 0.5 * gamma1 + gamma_misc
    return abs(rhs - gamma2r) / gamma2r


def effective_temperature(p_excited: float, f01: float) -> float:
    """Temperature (K) giving a two-level Boltzmann excited population ``p_excited``.

    ``f01`` in GHz. Only 0 < p < 0.5 corresponds to a positive temperature.
    """
    if not 0 < p_excited < 0.5:
        raise InvalidParameterError(f"p_excited must lie in (0, 0.5), got {p_excited}")
    return H * f01 * GHZ / (K_B * math.log((1.0 - p_excited) / p_excited))


def coherence_budget(
    params: FluxoniumParams,
    phi_trap: float,
    delta_phi,
    noise: NoiseModel,
    solver: SolverConfig = DEFAULT_SOLVER,
) -> dict[str, np.ndarray]:
    """Model rates versus detuning from the sweet spot.

    ``delta_phi`` are offsets of the total phase from pi; ``phi_ext`` is set
    to ``pi - phi_trap + delta_phi``. Returns arrays for f01 (GHz), dispersion
    (rad/s per Phi0), gamma1, gamma2e, gamma2r (1/us) and the matching times (us).
    """
    delta_phi = np.atleast_1d(np.asarray(delta_phi, dtype=float))
    cols = {k: np.empty(delta_phi.size) for k in
            ("f01", "dispersion", "gamma1", "gamma2e", "gamma2r")}
    for k, d in enumerate(delta_phi):
        flux = FluxConfig(phi_ext=math.pi - phi_trap + d, phi_trap=phi_trap)
        f01, n01, slope = qubit_point(params, flux, solver)
        disp = angular_dispersion(slope)
        g1 = gamma1_from_matrix_element(params.e_c, n01, f01, noise.tan_delta_c, noise.temperature)
        cols["f01"][k] = f01
        cols["dispersion"][k] = disp
        cols["gamma1"][k] = g1
        cols["gamma2e"][k] = gamma2_echo_model(noise.a_phi_echo, disp, g1, noise.gamma_misc_echo)
        cols["gamma2r"][k] = gamma2_ramsey_model(
            noise.a_phi_ramsey, disp, g1, noise.gamma_misc_ramsey, noise.omega_l
        )
    cols["t1"] = 1.0 / cols["gamma1"]
    cols["t2e"] = 1.0 / cols["gamma2e"]
    cols["t2r"] = 1.0 / cols["gamma2r"]
    return cols
