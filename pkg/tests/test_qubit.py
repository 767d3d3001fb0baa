import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxtrapping.errors import ConvergenceError, InvalidParameterError
from fluxtrapping.oracle import grid_charge_matrix_element, phase_grid_oracle
from fluxtrapping.qubit import (
    FluxConfig,
    FluxoniumParams,
    SolverConfig,
    TransmonParams,
    charge_matrix_element,
    find_sweet_spot,
    flux_dispersion,
    fluxonium_levels,
    fluxonium_spectrum,
    transition_frequency,
    transmon_freq_approx,
    transmon_spectrum,
)

import oracles

DEVICE1 = FluxoniumParams(3.54, 1.32, 0.81)
DEVICE2 = FluxoniumParams(3.52, 1.31, 0.66)
HARMONIC = FluxoniumParams(0.0, 1.32, 0.81)

# f01, f02 (GHz) and |<0|n|1>| from the 4096-point phase-grid oracle
GRID_VALUES = {
    ("device1", math.pi): (0.8533953979405302, 4.5144746069333905, 0.17393942920462924),
    ("device1", 0.0): (5.508272602124648, 9.289353261281406, 0.5072836600276717),
    ("device1", math.pi + 0.4): (1.5927812327009732, 4.8364179881046, 0.1850244767125772),
    ("device2", math.pi): (0.6853177205935461, 4.339544982216291, 0.14974849015919828),
    ("device2", 0.0): (5.2681514743778886, 8.496697088511308, 0.496272229163485),
    ("device2", math.pi + 0.4): (1.365144077090866, 4.627149334370085, 0.15763919210141414),
}


@pytest.mark.parametrize("key", sorted(GRID_VALUES, key=str))
def test_frozen_grid_values(key):
    params = DEVICE1 if key[0] == "device1" else DEVICE2
    flux = FluxConfig.from_offset(key[1])
    f01, f02, n01 = GRID_VALUES[key]
    assert transition_frequency(params, flux) == pytest.approx(f01, abs=1e-8)
    assert transition_frequency(params, flux, 0, 2) == pytest.approx(f02, abs=1e-8)
    assert charge_matrix_element(params, flux) == pytest.approx(n01, abs=1e-8)


def test_harmonic_example():
    f01 = transition_frequency(HARMONIC, FluxConfig(phi_ext=1.234))
    assert f01 == pytest.approx(math.sqrt(8 * 1.32 * 0.81), abs=1e-9)
    assert transition_frequency(HARMONIC, FluxConfig(), 0, 2) == pytest.approx(2 * f01, abs=1e-9)


def test_harmonic_charge_elements():
    params = FluxoniumParams(0.0, 1.0, 1.0)
    assert charge_matrix_element(params, FluxConfig()) == pytest.approx((1 / 32) ** 0.25, abs=1e-12)
    assert charge_matrix_element(params, FluxConfig(), 0, 2) == pytest.approx(0.0, abs=1e-12)


def test_harmonic_dispersion_is_zero():
    for phi in (0.0, 0.7, 2.0):
        assert abs(flux_dispersion(HARMONIC, FluxConfig(phi_ext=phi))) < 1e-9


def test_parity_about_trapped_pi():
    plus = fluxonium_spectrum(DEVICE1, FluxConfig(phi_ext=0.3, phi_trap=math.pi)).frequencies
    minus = fluxonium_spectrum(DEVICE1, FluxConfig(phi_ext=-0.3, phi_trap=math.pi)).frequencies
    np.testing.assert_allclose(plus, minus, atol=1e-9, rtol=0)


def test_levels_strictly_increasing():
    levels = fluxonium_spectrum(DEVICE1, FluxConfig.from_offset(math.pi)).frequencies
    assert np.all(np.diff(levels) > 0)


def test_sweet_spot_is_frequency_minimum():
    f = lambda off: transition_frequency(DEVICE1, FluxConfig.from_offset(off))
    assert f(math.pi) < f(math.pi + 0.5) and f(math.pi) < f(math.pi - 0.5)


def test_f12_telescopes():
    spec = fluxonium_spectrum(DEVICE1, FluxConfig.from_offset(2.2))
    assert spec.transition(1, 2) == pytest.approx(spec.transition(0, 2) - spec.transition(0, 1), abs=1e-12)


def test_dispersion_vanishes_at_sweet_spot():
    assert abs(flux_dispersion(DEVICE1, FluxConfig.from_offset(math.pi))) < 1e-8


def test_dispersion_matches_finite_difference():
    f = lambda phi: transition_frequency(DEVICE1, FluxConfig(phi_ext=phi))
    x = math.pi + 0.4
    assert flux_dispersion(DEVICE1, FluxConfig(phi_ext=x)) == pytest.approx(
        oracles.central_difference(f, x), abs=1e-6
    )


def test_sweet_spot_examples():
    assert find_sweet_spot(DEVICE1, 0.0, (math.pi - 1, math.pi + 1)) == pytest.approx(math.pi, abs=1e-6)
    assert find_sweet_spot(DEVICE1, math.pi, (-1, 1)) == pytest.approx(0.0, abs=1e-6)
    assert find_sweet_spot(DEVICE1, math.pi + 0.00459, (-1, 1)) == pytest.approx(-0.00459, abs=1e-5)


def test_sweet_spot_needs_interior_minimum():
    with pytest.raises(ConvergenceError):
        find_sweet_spot(DEVICE1, 0.0, (0.5, 2.0))
    with pytest.raises(InvalidParameterError):
        find_sweet_spot(DEVICE1, 0.0, (2.0, 1.0))


def test_parameter_validation():
    with pytest.raises(InvalidParameterError):
        FluxoniumParams(1.0, 0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        FluxoniumParams(-1.0, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        FluxConfig(phi_trap=2 * math.pi)
    with pytest.raises(InvalidParameterError):
        FluxConfig(phi_trap=0.0, n_trapped=1)
    assert FluxConfig.trapped(3).phi_trap == math.pi
    with pytest.raises(InvalidParameterError):
        SolverConfig(n_levels=1)
    with pytest.raises(IndexError):
        transition_frequency(DEVICE1, FluxConfig(), 1, 1)
    with pytest.raises(IndexError):
        charge_matrix_element(DEVICE1, FluxConfig(), 0, 0)


def test_truncation_failure_is_reported():
    # deep-well regime needs more states than the capped basis provides
    params = FluxoniumParams(40.0, 0.05, 0.01)
    with pytest.raises(ConvergenceError):
        fluxonium_spectrum(params, FluxConfig(), SolverConfig(basis_dim=30, n_levels=4, max_basis_dim=60))


def test_eigenvectors_orthonormal():
    spec = fluxonium_spectrum(DEVICE1, FluxConfig.from_offset(1.0))
    v = spec.eigenvectors
    assert np.max(np.abs(v.T @ v - np.eye(v.shape[1]))) < 1e-10
    grid = phase_grid_oracle(DEVICE1, FluxConfig.from_offset(1.0), n_levels=4)
    g = grid.eigenvectors
    assert np.max(np.abs(g.T @ g - np.eye(4))) < 1e-10


def test_grid_charge_element_matches():
    flux = FluxConfig.from_offset(math.pi)
    grid = phase_grid_oracle(DEVICE1, flux, n_levels=3)
    assert grid_charge_matrix_element(grid, 0, 1) == pytest.approx(charge_matrix_element(DEVICE1, flux), abs=1e-6)


def test_grid_requires_resolution():
    with pytest.raises(ValueError):
        phase_grid_oracle(DEVICE1, FluxConfig(), points=1000)


# ---------------------------------------------------------------- transmon

TRANSMON = TransmonParams(39.0, 3.3, 0.35)


def test_transmon_exact_vs_mathieu():
    assert transmon_spectrum(TRANSMON, 0.0).transition(0, 1) == pytest.approx(
        oracles.mathieu_transmon_f01(42.3, 0.35), abs=1e-9
    )


def test_transmon_formula_values():
    expected = math.sqrt(8 * 0.35 * 42.3) - 0.35
    assert transmon_freq_approx(TRANSMON, 0.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(10.534, abs=1e-3)
    exact = transmon_spectrum(TRANSMON, 0.0).transition(0, 1)
    assert abs(exact - expected) / expected < 0.01
    sym = TransmonParams(10.0, 10.0, 0.3)
    assert transmon_freq_approx(sym, math.pi) == pytest.approx(-0.3, abs=1e-6)
    phis = np.array([0.2, 1.1])
    np.testing.assert_allclose(
        transmon_freq_approx(TRANSMON, phis), transmon_freq_approx(TRANSMON, phis + 2 * math.pi), rtol=0, atol=1e-12
    )


def test_transmon_periodicity_and_conjugation():
    a = transmon_spectrum(TRANSMON, 0.7).frequencies
    b = transmon_spectrum(TRANSMON, 0.7 + 2 * math.pi).frequencies
    np.testing.assert_allclose(a, b, atol=1e-10, rtol=0)
    c = transmon_spectrum(TransmonParams(39.0, 3.3, 0.35, n_g=0.2), 0.7).frequencies
    d = transmon_spectrum(TransmonParams(39.0, 3.3, 0.35, n_g=-0.2), -0.7).frequencies
    np.testing.assert_allclose(c, d, atol=1e-10, rtol=0)


def test_transmon_validation():
    with pytest.raises(InvalidParameterError):
        TransmonParams(3.3, 39.0, 0.35)


# ---------------------------------------------------------------- properties

energies = st.tuples(
    st.floats(0.5, 6.0), st.floats(0.5, 2.0), st.floats(0.3, 1.5)
).map(lambda t: FluxoniumParams(*t))
offsets = st.floats(-10.0, 10.0)


@settings(max_examples=25, deadline=None)
@given(energies, offsets)
def test_periodic_in_total_offset(params, phi):
    levels = fluxonium_levels(params, [phi, phi + 2 * math.pi], SolverConfig(n_levels=4))
    np.testing.assert_allclose(levels[0], levels[1], atol=1e-9, rtol=0)


@settings(max_examples=25, deadline=None)
@given(energies, offsets)
def test_parity_in_total_offset(params, phi):
    levels = fluxonium_levels(params, [phi, -phi], SolverConfig(n_levels=4))
    np.testing.assert_allclose(levels[0], levels[1], atol=1e-9, rtol=0)


@settings(max_examples=10, deadline=None)
@given(energies, st.floats(0.0, 2 * math.pi))
def test_matches_phase_grid(params, phi):
    flux = FluxConfig.from_offset(phi)
    spec = fluxonium_spectrum(params, flux, SolverConfig(n_levels=4))
    grid = phase_grid_oracle(params, flux, n_levels=4)
    np.testing.assert_allclose(np.diff(spec.frequencies), np.diff(grid.frequencies), atol=1e-6, rtol=0)


@settings(max_examples=15, deadline=None)
@given(energies, st.floats(0.2, 2.9))
def test_dispersion_matches_finite_difference_property(params, phi):
    f = lambda x: transition_frequency(params, FluxConfig(phi_ext=x))
    assert flux_dispersion(params, FluxConfig(phi_ext=phi)) == pytest.approx(
        oracles.central_difference(f, phi), abs=1e-6
    )


@settings(max_examples=25, deadline=None)
@given(st.floats(20.0, 60.0), st.floats(0.0, 10.0), st.floats(0.15, 0.4), st.floats(-3.0, 3.0))
def test_transmon_formula_accurate_when_phase_regime(e_j1, e_j2, e_c, phi):
    tp = TransmonParams(e_j1, min(e_j2, e_j1), e_c)
    from fluxtrapping.qubit import effective_josephson_energy

    if effective_josephson_energy(tp, phi) / e_c <= 50:
        return
    exact = transmon_spectrum(tp, phi).transition(0, 1)
    assert abs(transmon_freq_approx(tp, phi) - exact) / exact < 0.01
