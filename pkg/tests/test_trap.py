import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from fluxtrapping import trap
from fluxtrapping.constants import PHI0
from fluxtrapping.errors import InvalidParameterError, ProtocolError

import oracles

RING = trap.RingParams(l_kinetic=0.7e-9, l_geometric=0.3e-9)
CALIB = trap.CoilCalibration(540e-9)


@pytest.mark.parametrize("x, n", [(0.0, 0), (500 / 540, 1), (0.5, 0), (-0.5, 0), (1.5, 1), (-1.5, -1), (2.5, 2)])
def test_select_trapped_n(x, n):
    assert trap.select_trapped_n(x) == n


def test_tie_flag():
    assert trap.trap(0.5).tie and trap.is_tie(-2.5)
    assert not trap.trap(0.51).tie


def test_ring_state_examples():
    assert trap.ring_state(0, 0.0, RING) == (0.0, 0.0)
    assert trap.ring_state(1, 1.0, RING) == (0.0, 0.0)
    i_s, e = trap.ring_state(1, 0.5, RING)
    # SI arithmetic: 0.5 Phi0 / 1 nH and 0.5 L I^2
    assert i_s == pytest.approx(0.5 * 2.067833848e-15 / 1e-9, rel=1e-12)
    assert i_s == pytest.approx(1.0339e-6, rel=1e-4)
    assert e == pytest.approx(0.5 * 1e-9 * i_s**2, rel=1e-12)
    assert e == pytest.approx(5.345e-22, rel=1e-3)


def test_trap_phase():
    assert trap.trap_phase(0) == 0.0
    assert trap.trap_phase(1) == math.pi
    assert trap.trap_phase(2) == 0.0
    assert trap.trap_phase(-1) == math.pi


def test_current_to_prebias():
    assert trap.current_to_prebias(540e-9, CALIB) == 1.0
    assert trap.current_to_prebias(0.0, CALIB) == 0.0
    assert trap.current_to_prebias(270e-9, CALIB) == 0.5
    with pytest.raises(InvalidParameterError):
        trap.CoilCalibration(0.0)


def test_ring_validation():
    with pytest.raises(InvalidParameterError):
        trap.RingParams(-1e-9, 1e-9)


def test_protocol_examples(fixtures_dir):
    warm = trap.ProtocolTimeline.from_samples(
        [(0, 0.05, 0.0), (1, 2.0, 500e-9), (2, 0.6, 500e-9), (3, 0.05, 500e-9), (4, 0.05, 0.0)], t_c=1.2
    )
    res = trap.simulate_protocol(warm, calib=CALIB)
    assert (res.n, res.phi_trap) == (1, math.pi)

    cold = trap.ProtocolTimeline.from_samples([(0, 0.05, 0.0), (1, 0.05, 540e-9)], t_c=1.2)
    with pytest.raises(ProtocolError):
        trap.simulate_protocol(cold, calib=CALIB)

    rewarm = trap.ProtocolTimeline.from_samples(
        [(0, 2.0, 0.0), (1, 0.5, 0.0), (2, 1.6, 540e-9), (3, 0.5, 540e-9), (4, 0.05, 0.0)], t_c=1.2
    )
    assert trap.simulate_protocol(rewarm, calib=CALIB).n == 1


def test_protocol_ending_warm_is_rejected():
    hot = trap.ProtocolTimeline.from_samples([(0, 0.1, 0.0), (1, 2.0, 0.0)], t_c=1.2)
    with pytest.raises(ProtocolError):
        trap.trapping_current(hot)


def test_flux_offset_shifts_prebias():
    tl = trap.ProtocolTimeline.from_samples([(0, 2.0, 500e-9), (1, 0.1, 500e-9)], t_c=1.2)
    assert trap.simulate_protocol(tl, calib=CALIB, flux_offset=0.7).n == 2


def test_timeline_validation():
    with pytest.raises(InvalidParameterError):
        trap.ProtocolTimeline.from_samples([(0, 1.0, 0.0), (0, 2.0, 0.0)], t_c=1.0)
    with pytest.raises(InvalidParameterError):
        trap.ProtocolTimeline.from_samples([(0, 1.0, 0.0)], t_c=1.0)


@pytest.mark.parametrize("phi, d", [(0.0, 0.0), (math.pi, 0.0), (2 * math.pi - 0.01, -0.01)])
def test_deviation_examples(phi, d):
    assert trap.deviation(phi) == pytest.approx(d, abs=1e-12)


def test_deviation_of_reported_bias():
    assert trap.deviation(math.pi * (1 + 0.00146)) == pytest.approx(0.00459, abs=5e-6)


def test_deviation_stats_examples():
    single = trap.deviation_stats([(500e-9, math.pi)])
    assert (single.mean_deviation, single.std_deviation) == (0.0, 0.0)
    a = 0.003
    pair = trap.deviation_stats([(0.0, a), (0.0, -a)])
    assert pair.mean_deviation == 0.0 and pair.std_deviation == pytest.approx(a, rel=1e-15)
    with pytest.raises(InvalidParameterError):
        trap.deviation_stats([])


def test_summary_format():
    stats = trap.deviation_stats([(0.0, math.pi - 0.1e-3 * 2 * math.pi + 0.9e-3 * 2 * math.pi),
                                  (0.0, math.pi - 0.1e-3 * 2 * math.pi - 0.9e-3 * 2 * math.pi)])
    assert stats.summary() == "(-0.1 +/- 0.9)e-3"


# ---------------------------------------------------------------- properties

prebias = st.floats(-20.0, 20.0, allow_nan=False)


@given(prebias)
def test_nearest_integer_away_from_ties(x):
    assume(abs(x - math.floor(x) - 0.5) > 1e-12)
    assert trap.select_trapped_n(x) == round(x)


@given(prebias, st.floats(0.1e-9, 10e-9), st.floats(0.1e-9, 10e-9))
def test_fluxoid_quantization(x, lk, lg):
    ring = trap.RingParams(lk, lg)
    n = trap.select_trapped_n(x, ring)
    i_s, _ = trap.ring_state(n, x, ring)
    assert x * PHI0 + i_s * ring.total == pytest.approx(n * PHI0, rel=1e-12, abs=1e-12 * PHI0)


@given(prebias)
def test_energy_minimality(x):
    n = trap.select_trapped_n(x, RING)
    e = trap.ring_energy(n, x, RING)
    for m in range(n - 3, n + 4):
        assert e <= trap.ring_energy(m, x, RING)
    assert n in oracles.brute_force_n(x, range(n - 3, n + 4))


@given(st.integers(-1000, 1000))
def test_trap_phase_two_valued(n):
    assert trap.trap_phase(n) in (0.0, math.pi)
    assert trap.trap_phase(n + 2) == trap.trap_phase(n)


@given(st.floats(-10.0, 10.0), st.integers(-5, 5))
def test_deviation_periodic(phi, k):
    a = trap.deviation(phi)
    b = trap.deviation(phi + 2 * math.pi * k)
    assert -math.pi / 2 < a <= math.pi / 2
    # wrap at the pi/2 boundary can flip sign of an exactly-half value; compare modulo pi
    assert min(abs(a - b), math.pi - abs(a - b)) < 1e-12


@settings(max_examples=50)
@given(st.floats(-3e-6, 3e-6), st.lists(st.floats(-1e-5, 1e-5), min_size=1, max_size=5))
def test_post_cooldown_changes_do_not_alter_state(current, later):
    base = trap.ProtocolTimeline.from_samples([(0, 2.0, current), (1, 0.2, current)], t_c=1.2)
    extra = [(2 + k, 0.05, c) for k, c in enumerate(later)]
    assert trap.simulate_protocol(base.extended(extra), calib=CALIB) == trap.simulate_protocol(base, calib=CALIB)
