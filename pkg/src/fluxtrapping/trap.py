"""Fluxoid trapping in the outer superconducting ring.

When the ring goes superconducting with a prebias flux applied, it keeps the
fluxoid number ``n`` that minimizes the ring's inductive energy::

    E_ring(n) = (n Phi0 - Phi_prebias)**2 / (2 (L_k + L_g))

and the trapped fluxoids shift the qubit's phase bias by ``n pi (mod 2 pi)``.
Once below T_c, ``n`` is frozen; later coil changes do not affect it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_CURRENT_PER_PHI0, PHI0, TWO_PI
from .errors import InvalidParameterError, ProtocolError


@dataclass(frozen=True)
class RingParams:
    """Total kinetic and geometric inductance of the ring, in henry."""

    l_kinetic: float
    l_geometric: float

    def __post_init__(self):
        if self.l_kinetic < 0 or self.l_geometric < 0 or self.total <= 0:
            raise InvalidParameterError(f"ring inductances must be >= 0 with positive sum: {self}")

    @property
    def total(self) -> float:
        return self.l_kinetic + self.l_geometric


@dataclass(frozen=True)
class CoilCalibration:
    """Coil current (A) that threads one flux quantum through the ring."""

    current_per_flux_quantum: float = DEFAULT_CURRENT_PER_PHI0

    def __post_init__(self):
        if not self.current_per_flux_quantum > 0:
            raise InvalidParameterError("current_per_flux_quantum must be positive")


@dataclass(frozen=True)
class TrapResult:
    """Outcome of a trapping event.

    ``i_s`` (A) and ``e_ring`` (J) are ``None`` when no ring inductance was
    supplied. ``tie`` marks an exactly half-integer prebias, where the
    physical outcome is random and the deterministic tie rule was applied.
    """

    n: int
    phi_trap: float
    prebias: float
    i_s: float | None = None
    e_ring: float | None = None
    tie: bool = False


@dataclass(frozen=True)
class ProtocolTimeline:
    """Sampled cooldown: time (s), sample temperature (K), coil current (A)."""

    times: np.ndarray
    temperatures: np.ndarray
    coil_currents: np.ndarray
    t_c: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        temp = np.asarray(self.temperatures, dtype=float)
        cur = np.asarray(self.coil_currents, dtype=float)
        if not (t.shape == temp.shape == cur.shape) or t.ndim != 1 or t.size < 2:
            raise InvalidParameterError("timeline columns must be 1-D, equal length, >= 2 samples")
        if np.any(np.diff(t) <= 0):
            raise InvalidParameterError("timeline times must be strictly increasing")
        if not self.t_c > 0:
            raise InvalidParameterError("t_c must be positive")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "temperatures", temp)
        object.__setattr__(self, "coil_currents", cur)

    @classmethod
    def from_samples(cls, samples, t_c: float) -> "ProtocolTimeline":
        arr = np.asarray(samples, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], t_c)

    def extended(self, samples) -> "ProtocolTimeline":
        """Copy with extra ``(time, temperature, current)`` samples appended."""
        arr = np.asarray(samples, dtype=float).reshape(-1, 3)
        return ProtocolTimeline(
            np.concatenate([self.times, arr[:, 0]]),
            np.concatenate([self.temperatures, arr[:, 1]]),
            np.concatenate([self.coil_currents, arr[:, 2]]),
            self.t_c,
        )


@dataclass(frozen=True)
class TrapStats:
    """Deviation statistics; ``per_point`` rows are (i_prebias, phi_trap, delta)."""

    mean_deviation: float
    std_deviation: float
    per_point: tuple

    def summary(self) -> str:
        """Mean and spread of delta/2pi in units of 1e-3, e.g. ``(-0.1 +/- 0.9)e-3``."""
        m = self.mean_deviation / TWO_PI * 1e3
        s = self.std_deviation / TWO_PI * 1e3
        return f"({m:.1f} +/- {s:.1f})e-3"


def _tie_key(n: int):
    return (abs(n), n)


def select_trapped_n(phi_prebias: float, ring: RingParams | None = None) -> int:
    """Fluxoid number minimizing the ring energy for a prebias in units of Phi0.

    Only the two integers bracketing ``phi_prebias`` can be optimal. The ring
    inductance scales both energies equally, so comparing ``(n - x)**2`` is
    exact; at half-integers the smaller ``|n|`` wins, then the negative one.
    """
    x = float(phi_prebias)
    if not math.isfinite(x):
        raise InvalidParameterError("prebias flux must be finite")
    lo, hi = math.floor(x), math.ceil(x)
    d_lo, d_hi = (lo - x) ** 2, (hi - x) ** 2
    if d_lo < d_hi:
        return lo
    if d_hi < d_lo:
        return hi
    return min(lo, hi, key=_tie_key)


def is_tie(phi_prebias: float) -> bool:
    x = float(phi_prebias)
    return x - math.floor(x) == 0.5


def ring_energy(n: int, phi_prebias: float, ring: RingParams) -> float:
    """Inductive energy (J) of the ring holding ``n`` fluxoids."""
    return (n * PHI0 - phi_prebias * PHI0) ** 2 / (2.0 * ring.total)


def ring_state(n: int, phi_prebias: float, ring: RingParams) -> tuple[float, float]:
    """Supercurrent (A) and stored energy (J) for ``n`` fluxoids."""
    i_s = (n - phi_prebias) * PHI0 / ring.total
    return i_s, 0.5 * ring.total * i_s**2


def trap_phase(n: int) -> float:
    """Phase offset n*pi reduced to [0, 2pi); exactly 0 or pi."""
    return math.pi if int(n) % 2 else 0.0


def current_to_prebias(i_prebias: float, calib: CoilCalibration = CoilCalibration()) -> float:
    """Coil current (A) to prebias flux in units of Phi0."""
    return i_prebias / calib.current_per_flux_quantum


def trap(phi_prebias: float, ring: RingParams | None = None) -> TrapResult:
    n = select_trapped_n(phi_prebias, ring)
    i_s = e_ring = None
    if ring is not None:
        i_s, e_ring = ring_state(n, phi_prebias, ring)
    return TrapResult(
        n=n, phi_trap=trap_phase(n), prebias=float(phi_prebias), i_s=i_s, e_ring=e_ring,
        tie=is_tie(phi_prebias),
    )


def trapping_current(timeline: ProtocolTimeline) -> tuple[float, float]:
    """Time and interpolated coil current at the last downward T_c crossing."""
    temp = timeline.temperatures
    if temp[-1] >= timeline.t_c:
        raise ProtocolError("timeline ends at or above T_c; the ring is not superconducting")
    above = temp >= timeline.t_c
    crossings = np.flatnonzero(above[:-1] & ~above[1:])
    if crossings.size == 0:
        raise ProtocolError("no downward crossing of T_c; flux cannot be trapped")
    k = crossings[-1]
    t0, t1 = timeline.times[k], timeline.times[k + 1]
    frac = (temp[k] - timeline.t_c) / (temp[k] - temp[k + 1])
    t_cross = t0 + frac * (t1 - t0)
    i0, i1 = timeline.coil_currents[k], timeline.coil_currents[k + 1]
    return float(t_cross), float(i0 + frac * (i1 - i0))


def simulate_protocol(
    timeline: ProtocolTimeline,
    ring: RingParams | None = None,
    calib: CoilCalibration = CoilCalibration(),
    flux_offset: float = 0.0,
) -> TrapResult:
    """Predict the trapped state after a cooldown.

    The fluxoid number is fixed by the coil current at the last downward
    crossing of T_c; everything after it is ignored. ``flux_offset`` (Phi0)
    adds a stray or miscalibrated background flux to the coil prebias.
    """
    _, current = trapping_current(timeline)
    return trap(current_to_prebias(current, calib) + flux_offset, ring)


def deviation(phi_trap: float) -> float:
    """Signed distance (rad) from ``phi_trap`` to the nearer ideal bias, 0 or pi.

    The result lies in (-pi/2, pi/2].
    """
    if not math.isfinite(phi_trap):
        raise InvalidParameterError("phi_trap must be finite")
    d = math.remainder(phi_trap, math.pi)  # exact; lies in [-pi/2, pi/2]
    return -d if d == -math.pi / 2 else d


def deviation_stats(points) -> TrapStats:
    """Mean and population standard deviation of the bias deviations.

    ``points`` is a sequence of ``(i_prebias, phi_trap)`` pairs.
    """
    rows = [(float(i), float(phi), deviation(float(phi))) for i, phi in points]
    if not rows:
        raise InvalidParameterError("deviation_stats needs at least one point")
    deltas = np.array([r[2] for r in rows])
    return TrapStats(float(deltas.mean()), float(deltas.std()), tuple(rows))
