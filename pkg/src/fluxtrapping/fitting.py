"""Parameter extraction from spectroscopy, decay traces and coherence data.

All nonlinear fits go through ``lm.levenberg_marquardt``. Each returns a
``FitResult`` whose covariance is the Jacobian estimate at the optimum
scaled by the residual variance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .coherence import (
    RatePair,
    gamma1_from_matrix_element,
    gamma2_echo_model,
    gamma2_ramsey_model,
    t2e_from_rates,
)
from .constants import TWO_PI, angular_dispersion
from .errors import ConvergenceError, DataError, UnidentifiableError
from .lm import condition_number, levenberg_marquardt
from .qubit import (
    DEFAULT_SOLVER,
    FluxConfig,
    FluxoniumParams,
    SolverConfig,
    TransmonParams,
    fluxonium_levels,
    qubit_point,
    transmon_freq_approx,
)

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class SpectroscopyDataset:
    """Measured transition frequencies versus a control.

    ``control`` is a bias current in A (``control_unit="A"``) or an external
    phase in rad (``"rad"``). ``transition`` holds 1 for f01 and 2 for f02.
    """

    control: np.ndarray
    frequency: np.ndarray
    transition: np.ndarray | None = None
    sigma: np.ndarray | None = None
    control_unit: str = "A"

    def __post_init__(self):
        c = np.asarray(self.control, dtype=float)
        f = np.asarray(self.frequency, dtype=float)
        tr = np.ones(c.size, dtype=int) if self.transition is None else np.asarray(self.transition, dtype=int)
        if not (c.shape == f.shape == tr.shape) or c.ndim != 1:
            raise DataError("spectroscopy columns must be 1-D and of equal length")
        if np.any(f <= 0) or not np.all(np.isfinite(f)):
            raise DataError("frequencies must be positive and finite")
        if not np.all(np.isin(tr, (1, 2))):
            raise DataError("transition index must be 1 or 2")
        if self.control_unit not in ("A", "rad"):
            raise DataError(f"unknown control unit {self.control_unit!r}")
        object.__setattr__(self, "control", c)
        object.__setattr__(self, "frequency", f)
        object.__setattr__(self, "transition", tr)
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != c.shape or np.any(s <= 0):
                raise DataError("sigma must be positive and match the data length")
            object.__setattr__(self, "sigma", s)

    def __len__(self):
        return self.control.size

    def weights(self) -> np.ndarray:
        return np.ones(len(self)) if self.sigma is None else 1.0 / self.sigma


@dataclass(frozen=True)
class DecayTrace:
    """Excited-state population ``p_e`` sampled at times ``t`` (us)."""

    t: np.ndarray
    p_e: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.p_e, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise DataError("decay trace columns must be 1-D and of equal length")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise DataError("decay times must be nonnegative and strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p_e", p)

    def __len__(self):
        return self.t.size

    @property
    def out_of_range(self) -> bool:
        """True if any sample lies outside [0, 1] (allowed, but worth flagging)."""
        return bool(np.any((self.p_e < 0) | (self.p_e > 1)))


@dataclass
class FitResult:
    parameters: dict
    covariance: np.ndarray
    residual_rms: float
    converged: bool
    n_iterations: int
    derived: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    cost_history: list = field(default_factory=list, repr=False)

    def __getitem__(self, name):
        if name in self.parameters:
            return self.parameters[name]
        return self.derived[name]

    def stderr(self) -> dict:
        err = np.sqrt(np.clip(np.diag(self.covariance), 0, None))
        return dict(zip(self.parameters, err.tolist()))

    def to_dict(self) -> dict:
        return {
            "parameters": {k: float(v) for k, v in self.parameters.items()},
            "stderr": self.stderr(),
            "derived": {k: float(v) for k, v in self.derived.items()},
            "covariance": np.asarray(self.covariance).tolist(),
            "residual_rms": float(self.residual_rms),
            "converged": bool(self.converged),
            "n_iterations": int(self.n_iterations),
            "flags": list(self.flags),
        }


def _result(names, lm, weights=None, derived=None, flags=None, values=None) -> FitResult:
    x = lm.x if values is None else values
    resid = lm.residuals if weights is None else lm.residuals / weights
    return FitResult(
        parameters=dict(zip(names, (float(v) for v in x))),
        covariance=lm.covariance(),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        converged=lm.converged,
        n_iterations=lm.n_iterations,
        derived=derived or {},
        flags=flags or [],
        cost_history=lm.history,
    )


def _require_condition(lm, scale, what):
    cond = condition_number(lm.jacobian, scale)
    if cond > MAX_CONDITION:
        raise UnidentifiableError(f"{what}: Jacobian condition number {cond:.3g} exceeds 1e12")
    return cond


def _dominant_angular_frequency(x, y, w_min, w_max, n=20000):
    """Angular frequency of the strongest periodogram peak of ``y(x)``."""
    w = np.linspace(w_min, w_max, n)
    power = signal.lombscargle(x, y - y.mean(), w)
    k = int(np.argmax(power))
    return float(w[k]), float(power[k]), power


# ------------------------------------------------------------ fluxonium


FLUXONIUM_NAMES = ("e_j", "e_c", "e_l", "current_period", "current_offset")


def _fluxonium_model(data: SpectroscopyDataset, phi_trap, solver):
    controls, inverse = np.unique(data.control, return_inverse=True)
    rows = np.arange(len(data))

    def model(x):
        params = FluxoniumParams(x[0], x[1], x[2])
        if data.control_unit == "A":
            phi_ext = TWO_PI * (controls - x[4]) / x[3]
        else:
            phi_ext = controls
        levels = fluxonium_levels(params, phi_trap + phi_ext, solver)
        return levels[inverse, data.transition] - levels[inverse, 0]

    return model, rows


def fit_fluxonium_spectroscopy(
    data: SpectroscopyDataset,
    init: dict,
    solver: SolverConfig = DEFAULT_SOLVER,
    phi_trap: float = 0.0,
    n_starts: int = 5,
    jitter: float = 0.2,
    seed: int = 0,
) -> FitResult:
    """Fit E_J, E_C, E_L (GHz) and the current-to-phase map to f01/f02 data.

    The bias current maps to phase as ``phi_ext = 2pi (I - I0) / I_period``.
    ``init`` holds guesses for ``e_j, e_c, e_l`` and, for current control,
    ``current_period`` and ``current_offset``. The first start is ``init``
    itself; the remaining ``n_starts - 1`` scale each guess by a uniform
    factor in [1 - jitter, 1 + jitter] (the offset moves by up to
    ``jitter / 10`` of the period). The lowest-cost optimum wins; the offset
    is reported in [0, period).
    """
    by_current = data.control_unit == "A"
    names = FLUXONIUM_NAMES if by_current else FLUXONIUM_NAMES[:3]
    if len(data) < len(names) + 1:
        raise DataError(f"{len(data)} points cannot determine {len(names)} parameters")
    flags = []
    x0 = np.array([float(init[k]) for k in names])
    if by_current:
        span = np.ptp(data.control) / x0[3]
        if span < 0.3:
            flags.append(f"ill-conditioned: data span {span:.2f} of a flux period (< 0.3)")
    fast = SolverConfig(
        basis_dim=solver.basis_dim, charge_cutoff=solver.charge_cutoff, n_levels=3,
        check_convergence=False,
    )
    model, _ = _fluxonium_model(data, phi_trap, fast)
    w = data.weights()

    def residual(x):
        return (model(x) - data.frequency) * w

    scale = np.abs(x0).copy()
    if by_current:
        scale[4] = 0.1 * x0[3]
    scale[scale == 0] = 1.0
    lower = np.array([0.0, 1e-6, 1e-6, 1e-12 * x0[3], -np.inf][: len(names)]) if by_current \
        else np.array([0.0, 1e-6, 1e-6])

    rng = np.random.default_rng(seed)
    starts = [x0]
    for _ in range(max(n_starts, 1) - 1):
        u = rng.uniform(-jitter, jitter, size=len(names))
        xs = x0 * (1.0 + u)
        if by_current:
            xs[4] = x0[4] + u[4] * 0.1 * x0[3]
        starts.append(xs)

    best = None
    failures = []
    for k, xs in enumerate(starts):
        try:
            lm = levenberg_marquardt(residual, xs, x_scale=scale, lower=lower, max_iter=300)
        except (ConvergenceError, ValueError) as exc:
            failures.append(f"start {k}: {exc}")
            continue
        logger.debug("start %d: cost %.3g after %d iterations", k, lm.cost, lm.n_iterations)
        if lm.converged and (best is None or lm.cost < best.cost):
            best = lm
    if best is None:
        raise ConvergenceError("spectroscopy fit failed from every start: " + "; ".join(failures))
    _require_condition(best, scale, "spectroscopy fit")

    values = best.x.copy()
    if by_current:
        values[4] = values[4] % values[3]
    # confirm the truncation used inside the loop against the converged solver
    check, _ = _fluxonium_model(data, phi_trap, SolverConfig(
        basis_dim=solver.basis_dim, charge_cutoff=solver.charge_cutoff, n_levels=3,
        tol=solver.tol, check_convergence=True, max_basis_dim=solver.max_basis_dim,
    ))
    drift = np.max(np.abs(check(best.x) - model(best.x)))
    if drift > 1e-6:
        flags.append(f"basis truncation moves the fitted model by {drift:.2g} GHz")
    return _result(names, best, weights=w, flags=flags, values=values)


# ------------------------------------------------------------ sweet spot


def fit_parabola_sweet_spot(controls, frequencies) -> FitResult:
    """Fit f = a (x - x0)**2 + c by linear least squares.

    Returns ``vertex_control`` (x0), ``curvature`` (a) and
    ``vertex_frequency`` (c).
    """
    x = np.asarray(controls, dtype=float)
    f = np.asarray(frequencies, dtype=float)
    if x.shape != f.shape or np.unique(x).size < 3:
        raise DataError("parabola fit needs at least 3 distinct controls")
    center = x.mean()
    span = np.ptp(x)
    u = (x - center) / span
    design = np.column_stack([u**2, u, np.ones_like(u)])
    coef, *_ = np.linalg.lstsq(design, f, rcond=None)
    a_u, b_u, c_u = coef
    if a_u <= 0:
        raise DataError("parabola opens downward; data are not centred on a sweet spot")
    resid = f - design @ coef
    dof = max(x.size - 3, 1)
    cov_u = np.linalg.inv(design.T @ design) * float(resid @ resid) / dof

    u0 = -b_u / (2 * a_u)
    vertex = center + span * u0
    curvature = a_u / span**2
    f0 = c_u - b_u**2 / (4 * a_u)
    # d(vertex, curvature, f0)/d(a_u, b_u, c_u)
    jac = np.array([
        [span * b_u / (2 * a_u**2), -span / (2 * a_u), 0.0],
        [1.0 / span**2, 0.0, 0.0],
        [b_u**2 / (4 * a_u**2), -b_u / (2 * a_u), 1.0],
    ])
    return FitResult(
        parameters={"vertex_control": float(vertex), "curvature": float(curvature),
                    "vertex_frequency": float(f0)},
        covariance=jac @ cov_u @ jac.T,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        converged=True,
        n_iterations=1,
    )


def phase_bias_from_sweet_spot(vertex_current: float, current_period: float, n_trapped: int = 1) -> float:
    """Trapped phase (rad) implied by the bias current of the sweet spot.

    With an odd fluxoid number the ideal sweet spot sits at zero bias current;
    a vertex at ``I_v`` means the trapped phase exceeds pi by
    ``2pi I_v / I_period`` (the bias line's coupling sign is taken so that a
    positive sweet-spot current corresponds to phi_trap above its ideal value).
    """
    ideal = math.pi if n_trapped % 2 else 0.0
    return (ideal + TWO_PI * vertex_current / current_period) % TWO_PI


# ------------------------------------------------------------ transmon


TRANSMON_NAMES = ("current_period", "current_offset", "e_j1", "e_j2", "e_c")


def transmon_model(x, current):
    period, offset, ej1, ej2, ec = x
    tp = TransmonParams(max(ej1, ej2), min(ej1, ej2), ec)
    return transmon_freq_approx(tp, TWO_PI * (np.asarray(current) - offset) / period)


def fit_transmon_period(
    current,
    frequency,
    sigma=None,
    e_c_guesses=(0.2, 0.35, 0.5),
) -> FitResult:
    """Fit the asymptotic SQUID-transmon frequency versus coil current.

    The period is seeded from the dominant peak of a Lomb-Scargle periodogram
    restricted to periods shorter than the current span; the offset from the
    phase of the best-fitting sinusoid. Each E_C guess seeds one start.
    """
    i = np.asarray(current, dtype=float)
    f = np.asarray(frequency, dtype=float)
    if i.shape != f.shape or i.size < 6:
        raise DataError("transmon fit needs at least 6 (current, frequency) points")
    w = np.ones_like(f) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
    span = np.ptp(i)
    if np.ptp(f) < 1e-9 * max(np.max(np.abs(f)), 1.0):
        raise UnidentifiableError("frequency does not modulate with current; period unidentifiable")

    n_unique = np.unique(i).size
    w_max = math.pi * n_unique / span
    omega, _, _ = _dominant_angular_frequency(i, f, TWO_PI / span, w_max)
    period0 = TWO_PI / omega
    design = np.column_stack([np.cos(omega * i), np.sin(omega * i), np.ones_like(i)])
    (ca, sb, _), *_ = np.linalg.lstsq(design, f, rcond=None)
    offset0 = (math.atan2(sb, ca) / omega) % period0
    f_max, f_min = np.max(f), np.min(f)

    # energies are fitted as logarithms: the data mostly fix E_C * E_J, and
    # the resulting curved valley is nearly straight in log space
    def unpack(z):
        return np.concatenate([z[:2], np.exp(z[2:])])

    def residual(z):
        return (transmon_model(unpack(z), i) - f) * w

    scale = np.array([period0, 0.1 * period0, 1.0, 1.0, 1.0])
    best = None
    for ec in e_c_guesses:
        ej_sum = (f_max + ec) ** 2 / (8 * ec)
        ej_diff = (max(f_min, 0.0) + ec) ** 2 / (8 * ec)
        ej1 = 0.5 * (ej_sum + ej_diff)
        ej2 = max(0.5 * (ej_sum - ej_diff), 1e-6 * ej1)
        z0 = np.array([period0, offset0, math.log(ej1), math.log(ej2), math.log(ec)])
        try:
            lm = levenberg_marquardt(residual, z0, x_scale=scale, max_iter=1000)
        except ConvergenceError:
            continue
        if lm.converged and (best is None or lm.cost < best.cost):
            best = lm
    if best is None:
        raise ConvergenceError("transmon period fit did not converge")
    _require_condition(best, scale, "transmon period fit")
    period, offset, ej1, ej2, ec = unpack(best.x)
    if span < period:
        raise DataError(f"current span {span:.3g} A is shorter than one fitted period {period:.3g} A")
    values = np.array([period, offset % period, max(ej1, ej2), min(ej1, ej2), ec])
    res = _result(TRANSMON_NAMES, best, weights=w, values=values)
    chain = np.diag([1.0, 1.0, ej1, ej2, ec])
    if ej2 > ej1:
        chain[[2, 3]] = chain[[3, 2]]
    res.covariance = chain @ res.covariance @ chain.T
    return res


# ------------------------------------------------------------ decay traces


def exp_decay(t, a, gamma, b):
    return a * np.exp(-gamma * t) + b


def exp_gauss_decay(t, a, gamma_exp, gamma_gauss, b):
    return a * np.exp(-gamma_exp * t - (gamma_gauss * t) ** 2) + b


def ramsey_decay(t, a, gamma_exp, gamma_gauss, delta_omega, varphi, b):
    envelope = np.exp(-gamma_exp * t - (gamma_gauss * t) ** 2)
    return a * envelope * np.cos(delta_omega * t + varphi) + b


def _flags(trace):
    return ["p_e outside [0, 1] in some samples"] if trace.out_of_range else []


def fit_exp_decay(trace: DecayTrace) -> FitResult:
    """Fit p_e = A exp(-gamma t) + B; ``derived['t1'] = 1/gamma`` (us)."""
    if len(trace) < 5:
        raise DataError("exponential fit needs at least 5 samples")
    t, p = trace.t, trace.p_e
    n_edge = max(2, len(trace) // 10)
    b0 = float(np.mean(p[-n_edge:]))
    a0 = float(np.mean(p[:n_edge]) - b0)
    if a0 <= 0:
        raise DataError("nonpositive initial amplitude; trace does not decay")
    excess = p - b0
    use = excess > 0.05 * a0
    if use.sum() >= 2:
        slope, _ = np.polyfit(t[use], np.log(excess[use]), 1)
        g0 = max(-slope, 1e-6 / max(t[-1], 1e-12))
    else:
        g0 = 3.0 / t[-1]

    def residual(x):
        return exp_decay(t, *x) - p

    lm = levenberg_marquardt(
        residual, [a0, g0, b0], x_scale=[abs(a0), g0, max(abs(b0), 0.1)],
        lower=[-np.inf, 0.0, -np.inf],
    )
    if not lm.converged:
        raise ConvergenceError("exponential decay fit did not converge")
    res = _result(("A", "gamma", "B"), lm, flags=_flags(trace))
    res.derived["t1"] = 1.0 / res.parameters["gamma"]
    return res


def fit_exp_gauss_decay(trace: DecayTrace) -> FitResult:
    """Fit p_e = A exp(-g_exp t - (g_gauss t)**2) + B with nonnegative rates.

    ``derived['t2e']`` is the 1/e time of the envelope (us).
    """
    if len(trace) < 6:
        raise DataError("exponential-Gaussian fit needs at least 6 samples")
    t, p = trace.t, trace.p_e
    base = fit_exp_decay(trace)
    a0, g0, b0 = base.parameters["A"], base.parameters["gamma"], base.parameters["B"]

    def residual(x):
        return exp_gauss_decay(t, *x) - p

    scale = [abs(a0), g0, g0, max(abs(b0), 0.1)]
    lower = [-np.inf, 0.0, 0.0, -np.inf]
    best = None
    for ge, gg in ((g0, 0.0), (0.5 * g0, 0.5 * g0), (0.0, g0), (0.2 * g0, 0.8 * g0)):
        lm = levenberg_marquardt(residual, [a0, ge, gg, b0], x_scale=scale, lower=lower, max_iter=500)
        if lm.converged and (best is None or lm.cost < best.cost):
            best = lm
    if best is None:
        raise ConvergenceError("exponential-Gaussian decay fit did not converge")
    res = _result(("A", "gamma_exp", "gamma_gauss", "B"), best, flags=_flags(trace))
    res.derived["t2e"] = t2e_from_rates(RatePair(res["gamma_exp"], res["gamma_gauss"]))
    return res


RAMSEY_NAMES = ("A", "gamma_exp", "gamma_gauss", "delta_omega", "varphi", "B")


def fit_ramsey_decay(trace: DecayTrace, delta_omega: float | None = None) -> FitResult:
    """Fit a Ramsey fringe A env(t) cos(dw t + phi) + B.

    ``delta_omega`` (rad/us) is seeded from the periodogram of the trace
    unless given, in which case it is held fixed. ``varphi`` is reported in
    [0, 2pi) with ``A >= 0``. ``derived['t2r']`` is the 1/e time of the
    envelope.
    """
    if len(trace) < 10:
        raise DataError("Ramsey fit needs at least 10 samples")
    t, p = trace.t, trace.p_e
    span = t[-1] - t[0]
    fixed = delta_omega is not None
    if fixed:
        w0 = float(delta_omega)
    else:
        w_nyq = math.pi / np.min(np.diff(t))
        w0, _, _ = _dominant_angular_frequency(t, p, 0.5 * TWO_PI / span, w_nyq)
        if w0 * span < TWO_PI:
            raise UnidentifiableError("less than one oscillation in the record; fix delta_omega")

    b0 = float(np.mean(p[-max(3, len(p) // 5):]))
    g0 = 3.0 / span
    env = np.exp(-g0 * t)
    design = np.column_stack([env * np.cos(w0 * t), -env * np.sin(w0 * t)])
    (ac, as_), *_ = np.linalg.lstsq(design, p - b0, rcond=None)
    a0 = math.hypot(ac, as_)
    phi0 = math.atan2(as_, ac)

    if fixed:
        def residual(x):
            return ramsey_decay(t, x[0], x[1], x[2], w0, x[3], x[4]) - p
    else:
        def residual(x):
            return ramsey_decay(t, *x) - p

    best = None
    for ge, gg in ((g0, 0.0), (0.5 * g0, 0.5 * g0), (0.0, g0)):
        x0 = [a0, ge, gg, w0, phi0, b0]
        scale = [max(a0, 1e-3), g0, g0, max(w0, 1e-6), 1.0, max(abs(b0), 0.1)]
        lower = [0.0, 0.0, 0.0, 0.0, -np.inf, -np.inf]
        if fixed:
            del x0[3], scale[3], lower[3]
        lm = levenberg_marquardt(residual, x0, x_scale=scale, lower=lower, max_iter=500)
        if lm.converged and (best is None or lm.cost < best.cost):
            best = lm
    if best is None:
        raise ConvergenceError("Ramsey decay fit did not converge")
    values = list(best.x)
    if fixed:
        values.insert(3, w0)
    values[4] = values[4] % TWO_PI
    names = RAMSEY_NAMES if not fixed else tuple(n for n in RAMSEY_NAMES if n != "delta_omega")
    res = _result(names, best, flags=_flags(trace))
    res.parameters = dict(zip(RAMSEY_NAMES, (float(v) for v in values)))
    if fixed:
        cov = np.zeros((6, 6))
        keep = [0, 1, 2, 4, 5]
        cov[np.ix_(keep, keep)] = res.covariance
        res.covariance = cov
    res.derived["t2r"] = t2e_from_rates(RatePair(res["gamma_exp"], res["gamma_gauss"]))
    return res


# ------------------------------------------------------------ noise parameters


NOISE_NAMES = ("tan_delta_c", "a_phi_e", "gamma_misc_e", "a_phi_r", "gamma_misc_r")


@dataclass(frozen=True)
class CoherencePoint:
    """Coherence times (us) measured at ``delta_phi`` (rad) from the sweet spot."""

    delta_phi: float
    t1: float
    t2e: float
    t2r: float


def qubit_response(params, phi_trap, delta_phi, solver=DEFAULT_SOLVER):
    """f01 (GHz), |n01| and angular dispersion (rad/s per Phi0) per detuning."""
    out = np.empty((len(delta_phi), 3))
    for k, d in enumerate(delta_phi):
        flux = FluxConfig(phi_ext=math.pi - phi_trap + d, phi_trap=phi_trap)
        f01, n01, slope = qubit_point(params, flux, solver)
        out[k] = f01, n01, angular_dispersion(slope)
    return out


def _stage(name, residual, x0, scale, names):
    try:
        lm = levenberg_marquardt(residual, x0, x_scale=scale, lower=np.zeros(len(x0)), max_iter=500)
    except ConvergenceError as exc:
        raise ConvergenceError(f"stage {name}: {exc}") from exc
    if not lm.converged:
        raise ConvergenceError(f"stage {name}: did not converge")
    _require_condition(lm, scale, f"stage {name}")
    return lm


def fit_noise_parameters(
    points,
    params: FluxoniumParams,
    phi_trap: float = math.pi,
    solver: SolverConfig = DEFAULT_SOLVER,
    temperature: float = 0.05,
    omega_l: float = TWO_PI,
) -> FitResult:
    """Three-stage fit of coherence times versus flux detuning.

    1. tan delta_C from T1 (dielectric loss).
    2. Echo flux-noise amplitude and flux-independent rate from T2e, using
       the stage-1 model for Gamma_1.
    3. The same for Ramsey from T2r via the self-consistent rate equation.

    ``points`` are ``CoherencePoint`` or ``(delta_phi, t1, t2e, t2r)`` tuples.
    Each stage minimizes relative residuals of the measured times. Rates are
    in 1/us; ``derived`` also quotes the misc rates as Gamma/2pi in kHz.
    """
    pts = np.array([[p.delta_phi, p.t1, p.t2e, p.t2r] if isinstance(p, CoherencePoint) else list(p)
                    for p in points], dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DataError("noise fit needs at least 3 coherence points")
    delta, t1, t2e, t2r = pts.T
    if np.any(pts[:, 1:] <= 0):
        raise DataError("coherence times must be positive")
    response = qubit_response(params, phi_trap, delta, solver)
    f01, n01, disp = response.T
    disp = np.abs(disp)
    if np.max(t2e) / np.min(t2e) < 3.0 or np.max(disp) == 0:
        raise UnidentifiableError(
            "T2e varies by less than a factor 3; flux-noise amplitude unidentifiable"
        )

    unit_g1 = np.array([gamma1_from_matrix_element(params.e_c, n, f, 1.0, temperature)
                        for n, f in zip(n01, f01)])

    # stage 1
    tan0 = float(np.mean((1.0 / t1) / unit_g1))
    lm1 = _stage("T1", lambda x: (1.0 / (x[0] * unit_g1)) / t1 - 1.0, [tan0], [tan0], ["tan_delta_c"])
    gamma1 = lm1.x[0] * unit_g1

    # stage 2
    flux_e = disp * math.sqrt(math.log(2.0)) * 1e-6
    design = np.column_stack([flux_e, np.ones_like(flux_e)])
    (a0, m0), *_ = np.linalg.lstsq(design, 1.0 / t2e - 0.5 * gamma1, rcond=None)
    a0, m0 = max(a0, 1e-9), max(m0, 1e-6)

    def echo_resid(x):
        rates = np.array([gamma2_echo_model(x[0], d, g, x[1]) for d, g in zip(disp, gamma1)])
        return (1.0 / rates) / t2e - 1.0

    lm2 = _stage("T2e", echo_resid, [a0, m0], [a0, m0], ["a_phi_e", "gamma_misc_e"])

    # stage 3, seeded by the implicit equation evaluated at the measured rates
    g2r = 1.0 / t2r
    logs = np.log(np.maximum(g2r * 1e6 / omega_l, 1.0 + 1e-12))
    design = np.column_stack([disp * np.sqrt(logs) * 1e-6, np.ones_like(disp)])
    (a0, m0), *_ = np.linalg.lstsq(design, g2r - 0.5 * gamma1, rcond=None)
    a0, m0 = max(a0, 1e-9), max(m0, 1e-6)

    def ramsey_resid(x):
        rates = np.array([gamma2_ramsey_model(x[0], d, g, x[1], omega_l) for d, g in zip(disp, gamma1)])
        return (1.0 / rates) / t2r - 1.0

    lm3 = _stage("T2r", ramsey_resid, [a0, m0], [a0, m0], ["a_phi_r", "gamma_misc_r"])

    values = np.concatenate([lm1.x, lm2.x, lm3.x])
    cov = np.zeros((5, 5))
    cov[:1, :1] = lm1.covariance()
    cov[1:3, 1:3] = lm2.covariance()
    cov[3:, 3:] = lm3.covariance()
    resid = np.concatenate([lm1.residuals, lm2.residuals, lm3.residuals])
    return FitResult(
        parameters=dict(zip(NOISE_NAMES, values.tolist())),
        covariance=cov,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        converged=True,
        n_iterations=lm1.n_iterations + lm2.n_iterations + lm3.n_iterations,
        derived={
            "gamma_misc_e_over_2pi_khz": values[2] / TWO_PI * 1e3,
            "gamma_misc_r_over_2pi_khz": values[4] / TWO_PI * 1e3,
        },
    )
