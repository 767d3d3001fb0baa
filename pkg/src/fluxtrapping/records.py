"""File formats: device records, delimited data tables, plot tables and
result documents.

Tables are plain text with one header row of ``name_unit`` tokens
(dimensionless columns carry the bare name), separated by commas, tabs or
whitespace. Lines starting with ``#`` are comments. Device records and
result documents are JSON; every device quantity is a string with an
explicit unit, e.g. ``"3.54 GHz"``.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError
from .fitting import CoherencePoint, DecayTrace, SpectroscopyDataset
from .qubit import FluxoniumParams
from .trap import CoilCalibration, ProtocolTimeline, RingParams

FREQUENCY = {"Hz": 1e-9, "kHz": 1e-6, "MHz": 1e-3, "GHz": 1.0}
INDUCTANCE = {"H": 1.0, "mH": 1e-3, "uH": 1e-6, "nH": 1e-9, "pH": 1e-12}
CURRENT = {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9}


# ------------------------------------------------------------ device records


@dataclass(frozen=True)
class DeviceRecord:
    name: str
    fluxonium: FluxoniumParams
    resonator_freq: float  # GHz
    dispersive_shift: float  # MHz
    resonator_linewidth: float  # MHz
    ring: RingParams | None = None
    calibration: CoilCalibration | None = None


# field path -> (unit table, canonical unit)
_DEVICE_FIELDS = [
    (("fluxonium", "e_j"), FREQUENCY, "GHz"),
    (("fluxonium", "e_c"), FREQUENCY, "GHz"),
    (("fluxonium", "e_l"), FREQUENCY, "GHz"),
    (("resonator_freq",), FREQUENCY, "GHz"),
    (("dispersive_shift",), FREQUENCY, "MHz"),
    (("resonator_linewidth",), FREQUENCY, "MHz"),
]
_RING_FIELDS = [(("ring", "l_kinetic"), INDUCTANCE, "H"), (("ring", "l_geometric"), INDUCTANCE, "H")]
_CALIB_FIELDS = [(("calibration", "current_per_flux_quantum"), CURRENT, "A")]

_QUANTITY = re.compile(r"^\s*(\S+)\s+(\S+)\s*$")


def parse_quantity(text, table: dict, canonical: str, where: str = "") -> float:
    """Parse ``"<number> <unit>"`` and convert to ``canonical`` units."""
    if not isinstance(text, str):
        raise DataError(f"{where}: expected '<value> <unit>' string, got {text!r}")
    m = _QUANTITY.match(text)
    if not m:
        raise DataError(f"{where}: expected '<value> <unit>', got {text!r}")
    number, unit = m.groups()
    if unit not in table:
        raise DataError(f"{where}: unit mismatch, {unit!r} is not one of {sorted(table)}")
    try:
        value = float(number)
    except ValueError:
        raise DataError(f"{where}: {number!r} is not a number") from None
    if unit == canonical:
        return value
    return value * table[unit] / table[canonical]


def format_quantity(value: float, unit: str) -> str:
    return f"{float(value)!r} {unit}"


def _lookup(doc, path):
    node = doc
    for key in path:
        if not isinstance(node, dict) or key not in node:
            raise DataError(f"missing field {'.'.join(path)!r}")
        node = node[key]
    return node


def _read_fields(doc, fields):
    out = {}
    for path, table, canonical in fields:
        where = ".".join(path)
        value = parse_quantity(_lookup(doc, path), table, canonical, where)
        if not (math.isfinite(value) and value > 0):
            raise DataError(f"{where}: must be positive, got {value}")
        out[path[-1]] = value
    return out


def device_from_dict(doc) -> DeviceRecord:
    if not isinstance(doc, dict):
        raise DataError("device record must be a JSON object")
    if "name" not in doc:
        raise DataError("missing field 'name'")
    values = _read_fields(doc, _DEVICE_FIELDS)
    ring = calib = None
    if "ring" in doc:
        ring = RingParams(**_read_fields(doc, _RING_FIELDS))
    if "calibration" in doc:
        calib = CoilCalibration(**_read_fields(doc, _CALIB_FIELDS))
    return DeviceRecord(
        name=str(doc["name"]),
        fluxonium=FluxoniumParams(values["e_j"], values["e_c"], values["e_l"]),
        resonator_freq=values["resonator_freq"],
        dispersive_shift=values["dispersive_shift"],
        resonator_linewidth=values["resonator_linewidth"],
        ring=ring,
        calibration=calib,
    )


def device_to_dict(rec: DeviceRecord) -> dict:
    doc = {
        "name": rec.name,
        "fluxonium": {
            "e_j": format_quantity(rec.fluxonium.e_j, "GHz"),
            "e_c": format_quantity(rec.fluxonium.e_c, "GHz"),
            "e_l": format_quantity(rec.fluxonium.e_l, "GHz"),
        },
        "resonator_freq": format_quantity(rec.resonator_freq, "GHz"),
        "dispersive_shift": format_quantity(rec.dispersive_shift, "MHz"),
        "resonator_linewidth": format_quantity(rec.resonator_linewidth, "MHz"),
    }
    if rec.ring is not None:
        doc["ring"] = {
            "l_kinetic": format_quantity(rec.ring.l_kinetic, "H"),
            "l_geometric": format_quantity(rec.ring.l_geometric, "H"),
        }
    if rec.calibration is not None:
        doc["calibration"] = {
            "current_per_flux_quantum": format_quantity(rec.calibration.current_per_flux_quantum, "A"),
        }
    return doc


def load_device(path) -> DeviceRecord:
    """Read a device record; an empty file reports its first missing field."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return device_from_dict({})
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed device record ({exc})") from None
    return device_from_dict(doc)


def save_device(rec: DeviceRecord, path) -> None:
    Path(path).write_text(json.dumps(device_to_dict(rec), indent=2) + "\n", encoding="utf-8")


BUILTIN_DEVICES = ("device1", "device2")


def resolve_device(name_or_path) -> DeviceRecord:
    """Load a device file, or one of the bundled records ``device1``/``device2``."""
    if str(name_or_path) in BUILTIN_DEVICES and not Path(name_or_path).exists():
        ref = resources.files("fluxtrapping") / "data" / f"{name_or_path}.json"
        return device_from_dict(json.loads(ref.read_text(encoding="utf-8")))
    return load_device(name_or_path)


# ------------------------------------------------------------ tables


@dataclass(frozen=True)
class Column:
    base: str
    units: dict  # header unit token -> factor to the canonical unit; {} for dimensionless
    optional: bool = False
    aliases: tuple = ()


def _units(table, canonical, allowed=None):
    allowed = allowed or table
    return {u: table[u] / table[canonical] for u in allowed}


SCHEMAS = {
    "spectroscopy": [
        Column("control", {**_units(CURRENT, "A"), "rad": 1.0}, aliases=("current", "phase")),
        Column("transition", {}),
        Column("freq", {"GHz": 1.0}),
        Column("sigma", {"GHz": 1.0}, optional=True),
    ],
    "transmon": [
        Column("current", _units(CURRENT, "A")),
        Column("freq", {"GHz": 1.0}),
        Column("sigma", {"GHz": 1.0}, optional=True),
    ],
    "decay": [Column("t", {"us": 1.0}), Column("p_e", {})],
    "timeline": [Column("t", {"s": 1.0}), Column("temp", {"K": 1.0}), Column("coil", _units(CURRENT, "A"))],
    "deviation": [Column("i_prebias", _units(CURRENT, "A")), Column("phi_trap", {"rad": 1.0})],
    "coherence": [
        Column("delta_phi", {"rad": 1.0}),
        Column("t1", {"us": 1.0}),
        Column("t2e", {"us": 1.0}),
        Column("t2r", {"us": 1.0}),
    ],
}

# canonical header tokens used when writing
_CANONICAL = {
    "spectroscopy": ("control_A", "transition", "freq_GHz", "sigma_GHz"),
    "transmon": ("current_A", "freq_GHz", "sigma_GHz"),
    "decay": ("t_us", "p_e"),
    "timeline": ("t_s", "temp_K", "coil_A"),
    "deviation": ("i_prebias_A", "phi_trap_rad"),
    "coherence": ("delta_phi_rad", "t1_us", "t2e_us", "t2r_us"),
}


def _split(line: str, delimiter):
    if delimiter is None:
        return line.split()
    return [c.strip() for c in line.split(delimiter)]


def _match(token: str, col: Column):
    """(scale factor, unit) if ``token`` names ``col``; None if it is another column."""
    if not col.units:
        return (1.0, "") if token == col.base else None
    base = next((b for b in (col.base, *col.aliases) if token.startswith(b + "_")), None)
    if base is None:
        return None
    unit = token[len(base) + 1:]
    if unit not in col.units:
        raise DataError(
            f"unit mismatch in column {token!r}: expected one of "
            f"{[col.base + '_' + u for u in col.units]}"
        )
    return col.units[unit], unit


def read_table(path, schema: str) -> tuple[dict, dict]:
    """Parse a table into canonical-unit columns.

    Returns ``(columns, units)`` where ``units`` maps each column base name
    to the unit token found in the header.
    """
    if schema not in SCHEMAS:
        raise DataError(f"unknown table schema {schema!r}; choose from {sorted(SCHEMAS)}")
    lines = [(k + 1, ln) for k, ln in enumerate(Path(path).read_text(encoding="utf-8").splitlines())
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty table")
    header_line = lines[0][1]
    delimiter = "," if "," in header_line else ("\t" if "\t" in header_line else None)
    header = _split(header_line, delimiter)
    cols = SCHEMAS[schema]
    if len(header) != len(set(header)):
        raise DataError(f"{path}: duplicate header tokens {header}")

    positions, factors, units = {}, {}, {}
    for col in cols:
        for idx, token in enumerate(header):
            found = _match(token, col)
            if found is not None:
                positions[col.base] = idx
                factors[col.base], units[col.base] = found
                break
        else:
            if not col.optional:
                expected = [col.base + ("_" + next(iter(col.units)) if col.units else "") for col in cols]
                raise DataError(f"{path}: header {header} does not match schema {schema} {expected}")
    extra = set(range(len(header))) - set(positions.values())
    if extra:
        raise DataError(f"{path}: unexpected columns {[header[i] for i in sorted(extra)]}")

    data = {base: [] for base in positions}
    for lineno, line in lines[1:]:
        cells = _split(line, delimiter)
        if len(cells) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} cells, found {len(cells)}")
        for base, idx in positions.items():
            try:
                data[base].append(float(cells[idx]))
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: non-numeric cell {cells[idx]!r} in column {header[idx]!r}"
                ) from None
    columns = {}
    for base, values in data.items():
        arr = np.asarray(values, dtype=float)
        columns[base] = arr if factors[base] == 1.0 else arr * factors[base]
    return columns, units


def load_table(path, schema: str, t_c: float | None = None):
    """Load a data table as the dataset type matching ``schema``.

    ``spectroscopy``/``transmon`` -> SpectroscopyDataset, ``decay`` ->
    DecayTrace, ``timeline`` -> ProtocolTimeline (needs ``t_c`` in K),
    ``deviation`` -> list of (i_prebias, phi_trap), ``coherence`` -> list of
    CoherencePoint. Row order is preserved.
    """
    cols, units = read_table(path, schema)
    if schema == "spectroscopy":
        unit = "rad" if units["control"] == "rad" else "A"
        return SpectroscopyDataset(
            cols["control"], cols["freq"], cols["transition"].astype(int), cols.get("sigma"), unit
        )
    if schema == "transmon":
        return SpectroscopyDataset(cols["current"], cols["freq"], None, cols.get("sigma"), "A")
    if schema == "decay":
        return DecayTrace(cols["t"], cols["p_e"])
    if schema == "timeline":
        if t_c is None:
            raise DataError("timeline tables need a transition temperature t_c")
        return ProtocolTimeline(cols["t"], cols["temp"], cols["coil"], t_c)
    if schema == "deviation":
        return list(zip(cols["i_prebias"].tolist(), cols["phi_trap"].tolist()))
    return [CoherencePoint(*row) for row in zip(
        cols["delta_phi"].tolist(), cols["t1"].tolist(), cols["t2e"].tolist(), cols["t2r"].tolist()
    )]


def _dataset_columns(schema, dataset):
    if schema == "spectroscopy":
        if dataset.control_unit == "rad":
            header = ["control_rad", "transition", "freq_GHz"]
        else:
            header = ["control_A", "transition", "freq_GHz"]
        cols = [dataset.control, dataset.transition, dataset.frequency]
        if dataset.sigma is not None:
            header.append("sigma_GHz")
            cols.append(dataset.sigma)
        return header, cols
    if schema == "transmon":
        header = ["current_A", "freq_GHz"]
        cols = [dataset.control, dataset.frequency]
        if dataset.sigma is not None:
            header.append("sigma_GHz")
            cols.append(dataset.sigma)
        return header, cols
    if schema == "decay":
        return list(_CANONICAL["decay"]), [dataset.t, dataset.p_e]
    if schema == "timeline":
        return list(_CANONICAL["timeline"]), [dataset.times, dataset.temperatures, dataset.coil_currents]
    rows = [
        (p.delta_phi, p.t1, p.t2e, p.t2r) if isinstance(p, CoherencePoint) else tuple(p)
        for p in dataset
    ]
    arr = np.asarray(rows, dtype=float)
    return list(_CANONICAL[schema]), [arr[:, k] for k in range(arr.shape[1])]


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_columns(path, header, columns, comment: str | None = None) -> None:
    lines = [] if comment is None else [f"# {comment}"]
    lines.append(",".join(header))
    for row in zip(*columns):
        lines.append(",".join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_table(path, schema: str, dataset) -> None:
    """Write ``dataset`` in canonical units; inverse of ``load_table``."""
    if schema not in SCHEMAS:
        raise DataError(f"unknown table schema {schema!r}")
    header, cols = _dataset_columns(schema, dataset)
    write_columns(path, header, cols)


# ------------------------------------------------------------ plot tables


@dataclass(frozen=True)
class PlotSeries:
    label: str
    columns: dict  # name -> 1-D array
    units: dict  # name -> unit string

    def __post_init__(self):
        lengths = {len(np.atleast_1d(v)) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DataError(f"plot series {self.label!r}: columns differ in length")
        for name in self.columns:
            if not self.units.get(name):
                raise DataError(f"plot series {self.label!r}: column {name!r} has no unit")

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0


def write_plot_series(series: PlotSeries, path) -> None:
    header = [f"{name}_{series.units[name]}" for name in series.columns]
    write_columns(path, header, [np.asarray(v) for v in series.columns.values()], comment=series.label)


# ------------------------------------------------------------ result documents


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def result_document(command: str, result: dict, inputs=(), seed=None, options=None) -> dict:
    return {
        "command": command,
        "provenance": {
            "tool": "fluxtrapping",
            "version": __version__,
            "seed": seed,
            "inputs": {str(p): file_digest(p) for p in inputs},
            "options": _jsonable(options or {}),
        },
        "result": _jsonable(result),
    }


def dump_result(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


# ------------------------------------------------------------ angles

_ANGLE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+(?:[eE][+-]?\d+)?))?\s*$")


def parse_angle(text: str) -> float:
    """Parse an angle in rad; accepts plain numbers and ``pi`` forms such as
    ``pi``, ``-pi/2``, ``0.5pi`` or ``2*pi/3``."""
    s = str(text).strip()
    try:
        return float(s)
    except ValueError:
        pass
    m = _ANGLE.match(s.lower())
    if not m:
        raise DataError(f"cannot parse angle {text!r}")
    sign, coef, denom = m.groups()
    value = (float(coef) if coef else 1.0) * math.pi
    if denom:
        d = float(denom)
        if d == 0:
            raise DataError(f"division by zero in angle {text!r}")
        value /= d
    return -value if sign == "-" else value
