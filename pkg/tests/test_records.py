import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxtrapping import fitting, trap
from fluxtrapping.errors import DataError
from fluxtrapping.records import (
    PlotSeries,
    load_device,
    load_table,
    parse_angle,
    resolve_device,
    save_device,
    save_table,
    write_plot_series,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_device1_round_trip_bit_identical(tmp_path):
    rec = resolve_device("device1")
    assert (rec.fluxonium.e_j, rec.fluxonium.e_c, rec.fluxonium.e_l) == (3.54, 1.32, 0.81)
    assert (rec.resonator_freq, rec.dispersive_shift, rec.resonator_linewidth) == (7.988, 0.4, 10.8)
    save_device(rec, tmp_path / "a.json")
    again = load_device(tmp_path / "a.json")
    save_device(again, tmp_path / "b.json")
    assert again == rec
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_device2_is_distinct():
    d2 = resolve_device("device2")
    assert d2.fluxonium.e_l == 0.66 and d2.resonator_freq == 7.405
    assert d2 != resolve_device("device1")


def test_empty_device_names_first_missing_field(tmp_path):
    (tmp_path / "empty.json").write_text("")
    with pytest.raises(DataError, match="name"):
        load_device(tmp_path / "empty.json")
    (tmp_path / "partial.json").write_text(json.dumps({"name": "x", "fluxonium": {"e_j": "3 GHz"}}))
    with pytest.raises(DataError, match="fluxonium.e_c"):
        load_device(tmp_path / "partial.json")


def test_device_unit_normalization_and_mismatch(tmp_path):
    doc = {"name": "x", "fluxonium": {"e_j": "3540 MHz", "e_c": "1.32 GHz", "e_l": "810 MHz"},
           "resonator_freq": "7.988 GHz", "dispersive_shift": "400 kHz", "resonator_linewidth": "10.8 MHz",
           "ring": {"l_kinetic": "0.7 nH", "l_geometric": "300 pH"}}
    (tmp_path / "d.json").write_text(json.dumps(doc))
    rec = load_device(tmp_path / "d.json")
    assert rec.fluxonium.e_j == pytest.approx(3.54, rel=1e-15)
    assert rec.dispersive_shift == pytest.approx(0.4, rel=1e-15)
    assert rec.ring.total == pytest.approx(1e-9, rel=1e-15)
    doc["resonator_freq"] = "7.988 nH"
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(DataError, match="unit mismatch"):
        load_device(tmp_path / "bad.json")
    (tmp_path / "junk.json").write_text("{not json")
    with pytest.raises(DataError, match="malformed"):
        load_device(tmp_path / "junk.json")
    doc["resonator_freq"] = "-1 GHz"
    (tmp_path / "neg.json").write_text(json.dumps(doc))
    with pytest.raises(DataError, match="positive"):
        load_device(tmp_path / "neg.json")


def test_decay_table_fifty_rows(fixtures_dir):
    trace = load_table(fixtures_dir / "decay_t1.csv", "decay")
    assert isinstance(trace, fitting.DecayTrace) and len(trace) == 50


def test_unit_mismatch_in_header(tmp_path):
    (tmp_path / "s.csv").write_text("control_A,transition,freq_MHz\n0,1,850\n")
    with pytest.raises(DataError, match="unit mismatch"):
        load_table(tmp_path / "s.csv", "spectroscopy")


def test_header_mismatch_and_bad_cell(tmp_path):
    (tmp_path / "h.csv").write_text("time_us,p_e\n0,1\n")
    with pytest.raises(DataError, match="header"):
        load_table(tmp_path / "h.csv", "decay")
    (tmp_path / "c.csv").write_text("t_us,p_e\n0,1\n1,abc\n")
    with pytest.raises(DataError, match=r"c.csv:3: non-numeric cell 'abc' in column 'p_e'"):
        load_table(tmp_path / "c.csv", "decay")


def test_timeline_fixture_in_nanoamps(fixtures_dir):
    tl = load_table(fixtures_dir / "timeline.csv", "timeline", t_c=1.2)
    assert isinstance(tl, trap.ProtocolTimeline) and tl.t_c == 1.2
    assert tl.coil_currents[5] == pytest.approx(500e-9, rel=1e-15)
    assert trap.simulate_protocol(tl).n == 1
    with pytest.raises(DataError):
        load_table(fixtures_dir / "timeline.csv", "timeline")


def test_whitespace_and_tab_delimiters(tmp_path):
    (tmp_path / "w.txt").write_text("# comment\nt_us   p_e\n0  0.9\n1  0.8\n")
    (tmp_path / "t.tsv").write_text("t_us\tp_e\n0\t0.9\n1\t0.8\n")
    a = load_table(tmp_path / "w.txt", "decay")
    b = load_table(tmp_path / "t.tsv", "decay")
    assert np.array_equal(a.p_e, b.p_e)


def test_spectroscopy_aliases(tmp_path):
    (tmp_path / "p.csv").write_text("phase_rad,transition,freq_GHz\n0.1,1,0.9\n0.2,2,4.5\n")
    data = load_table(tmp_path / "p.csv", "spectroscopy")
    assert data.control_unit == "rad" and list(data.transition) == [1, 2]
    (tmp_path / "c.csv").write_text("current_uA,transition,freq_GHz,sigma_GHz\n2.35,1,0.9,0.001\n")
    data = load_table(tmp_path / "c.csv", "spectroscopy")
    assert data.control[0] == pytest.approx(2.35e-6, rel=1e-15) and data.sigma[0] == 0.001


def test_plot_series_requires_units(tmp_path):
    with pytest.raises(DataError, match="no unit"):
        PlotSeries("x", {"a": np.zeros(2)}, {"a": ""})
    with pytest.raises(DataError, match="length"):
        PlotSeries("x", {"a": np.zeros(2), "b": np.zeros(3)}, {"a": "s", "b": "s"})
    series = PlotSeries("label", {"t": np.arange(3.0)}, {"t": "us"})
    write_plot_series(series, tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[:2] == ["# label", "t_us"]


@pytest.mark.parametrize("text, value", [("pi", math.pi), ("-pi", -math.pi), ("pi/2", math.pi / 2),
                                         ("0.5pi", math.pi / 2), ("2*pi/3", 2 * math.pi / 3), ("0.25", 0.25)])
def test_parse_angle(text, value):
    assert parse_angle(text) == value


def test_parse_angle_rejects_garbage():
    with pytest.raises(DataError):
        parse_angle("half")


# ---------------------------------------------------------------- lossless round trips


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(finite, st.sampled_from([1, 2]), st.floats(1e-3, 1e3)), min_size=1, max_size=20))
def test_spectroscopy_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    c, tr, f = map(np.array, zip(*rows))
    data = fitting.SpectroscopyDataset(c, f, tr)
    save_table(path, "spectroscopy", data)
    back = load_table(path, "spectroscopy")
    assert np.array_equal(back.control, data.control) and np.array_equal(back.frequency, data.frequency)
    assert np.array_equal(back.transition, data.transition)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite, finite), min_size=1, max_size=20))
def test_coherence_and_deviation_round_trip(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("rt")
    points = [fitting.CoherencePoint(*r) for r in rows]
    save_table(d / "n.csv", "coherence", points)
    assert load_table(d / "n.csv", "coherence") == points
    dev = [(r[0], r[1]) for r in rows]
    save_table(d / "d.csv", "deviation", dev)
    assert load_table(d / "d.csv", "deviation") == dev


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=2, max_size=30, unique=True), st.integers(0, 2**32 - 1))
def test_decay_and_timeline_round_trip(tmp_path_factory, times, seed):
    d = tmp_path_factory.mktemp("rt")
    t = np.sort(np.array(times))
    p = np.random.default_rng(seed).uniform(-0.1, 1.1, t.size)
    save_table(d / "d.csv", "decay", fitting.DecayTrace(t, p))
    back = load_table(d / "d.csv", "decay")
    assert np.array_equal(back.t, t) and np.array_equal(back.p_e, p)
    tl = trap.ProtocolTimeline(t, p, p * 1e-6, 1.2)
    save_table(d / "t.csv", "timeline", tl)
    back = load_table(d / "t.csv", "timeline", t_c=1.2)
    assert np.array_equal(back.coil_currents, tl.coil_currents)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e4))
def test_device_round_trip(tmp_path_factory, ej, ec, el, wr):
    from fluxtrapping.qubit import FluxoniumParams
    from fluxtrapping.records import DeviceRecord

    rec = DeviceRecord("x", FluxoniumParams(ej, ec, el), wr, 0.4, 10.8,
                       trap.RingParams(ec * 1e-9, el * 1e-9), trap.CoilCalibration(wr * 1e-9))
    path = tmp_path_factory.mktemp("dev") / "x.json"
    save_device(rec, path)
    assert load_device(path) == rec
