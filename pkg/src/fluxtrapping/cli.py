"""Batch command-line front end.

Every subcommand writes a JSON result document (to ``--output`` or stdout)
and, where it produces curves, an optional plot table (``--table``).
Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import coherence, fitting, qubit, trap
from .constants import rate_from_khz_over_2pi
from .errors import ConvergenceError, DataError, FluxTrapError, InvalidParameterError, ProtocolError
from .records import (
    PlotSeries,
    dump_result,
    load_table,
    parse_angle,
    resolve_device,
    result_document,
    write_plot_series,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _angle(text):
    try:
        return parse_angle(text)
    except DataError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _params(args):
    """Circuit parameters from --device, overridden by explicit energies."""
    base = resolve_device(args.device).fluxonium if args.device else None
    e_j = args.e_j if args.e_j is not None else (base.e_j if base else None)
    e_c = args.e_c if args.e_c is not None else (base.e_c if base else None)
    e_l = args.e_l if args.e_l is not None else (base.e_l if base else None)
    if None in (e_j, e_c, e_l):
        raise _UsageError("give --device or all of --e-j, --e-c, --e-l")
    return qubit.FluxoniumParams(e_j, e_c, e_l)


def _device_args(p):
    p.add_argument("--device", help="device record path, or device1/device2")
    p.add_argument("--e-j", type=float, help="E_J/h in GHz")
    p.add_argument("--e-c", type=float, help="E_C/h in GHz")
    p.add_argument("--e-l", type=float, help="E_L/h in GHz")


def _emit(args, doc):
    text = dump_result(doc)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(args, series):
    if args.table:
        write_plot_series(series, args.table)


# ------------------------------------------------------------ subcommands


def cmd_spectrum(args):
    params = _params(args)
    phases = np.linspace(args.phi_from, args.phi_to, args.steps)
    solver = qubit.SolverConfig(n_levels=max(3, args.levels))
    levels = qubit.fluxonium_levels(params, args.phi_trap + phases, solver)
    f01 = levels[:, 1] - levels[:, 0]
    f02 = levels[:, 2] - levels[:, 0]
    k = int(np.argmin(f01))
    _table(args, PlotSeries(
        "fluxonium transitions vs external phase",
        {"phi_ext": phases, "f01": f01, "f02": f02},
        {"phi_ext": "rad", "f01": "GHz", "f02": "GHz"},
    ))
    return {
        "rows": int(phases.size),
        "f01_min": float(f01[k]),
        "phi_ext_at_f01_min": float(phases[k]),
        "f01_max": float(f01.max()),
        "f02_min": float(f02.min()),
    }, []


def cmd_sweet_spot(args):
    inputs = []
    if args.data:
        data = load_table(args.data, "spectroscopy")
        mask = data.transition == 1
        fit = fitting.fit_parabola_sweet_spot(data.control[mask], data.frequency[mask])
        result = fit.to_dict()
        if args.period is not None:
            phi = fitting.phase_bias_from_sweet_spot(fit["vertex_control"], args.period, args.n_trapped)
            sd = fit.stderr()["vertex_control"] * 2 * math.pi / args.period
            result["phi_trap"] = phi
            result["phi_trap_over_2pi"] = phi / (2 * math.pi)
            result["phi_trap_over_2pi_stderr"] = sd / (2 * math.pi)
        return result, [args.data]
    params = _params(args)
    lo, hi = args.window if args.window else (-math.pi / 2 + math.pi - args.phi_trap,
                                               math.pi / 2 + math.pi - args.phi_trap)
    x = qubit.find_sweet_spot(params, args.phi_trap, (lo, hi))
    flux = qubit.FluxConfig(phi_ext=x, phi_trap=args.phi_trap)
    return {
        "phi_ext": x,
        "phi_total": x + args.phi_trap,
        "f01": qubit.transition_frequency(params, flux),
        "dispersion": qubit.flux_dispersion(params, flux),
    }, inputs


def _trap_dict(res: trap.TrapResult):
    return {
        "n": res.n, "phi_trap": res.phi_trap, "prebias_phi0": res.prebias, "tie": res.tie,
        "i_s": res.i_s, "e_ring": res.e_ring,
    }


def cmd_trap(args):
    calib = trap.CoilCalibration(args.calib)
    ring = None
    if (args.l_kinetic is None) != (args.l_geometric is None):
        raise _UsageError("--l-kinetic and --l-geometric go together")
    if args.l_kinetic is not None:
        ring = trap.RingParams(args.l_kinetic, args.l_geometric)
    inputs = []
    if args.deviations:
        stats = trap.deviation_stats(load_table(args.deviations, "deviation"))
        return {
            "mean_deviation": stats.mean_deviation,
            "std_deviation": stats.std_deviation,
            "summary_over_2pi": stats.summary(),
            "per_point": [list(r) for r in stats.per_point],
        }, [args.deviations]
    if args.timeline:
        if args.t_c is None:
            raise _UsageError("--timeline needs --t-c")
        timeline = load_table(args.timeline, "timeline", t_c=args.t_c)
        t_cross, current = trap.trapping_current(timeline)
        res = trap.simulate_protocol(timeline, ring, calib, args.flux_offset)
        out = _trap_dict(res)
        out.update(t_cross=t_cross, trapping_current=current)
        return out, [args.timeline]
    if args.prebias_current is not None:
        phi = trap.current_to_prebias(args.prebias_current, calib)
    elif args.prebias_flux is not None:
        phi = args.prebias_flux
    else:
        raise _UsageError("give one of --prebias-current, --prebias-flux, --timeline, --deviations")
    return _trap_dict(trap.trap(phi + args.flux_offset, ring)), inputs


def cmd_calibrate(args):
    data = load_table(args.data, "transmon")
    fit = fitting.fit_transmon_period(data.control, data.frequency, data.sigma)
    return fit.to_dict(), [args.data]


def cmd_fit_spectro(args):
    data = load_table(args.data, "spectroscopy")
    params = _params(args)
    init = {"e_j": params.e_j, "e_c": params.e_c, "e_l": params.e_l}
    if data.control_unit == "A":
        if args.period is None:
            raise _UsageError("current-controlled data need a --period guess (A)")
        init.update(current_period=args.period, current_offset=args.offset)
    fit = fitting.fit_fluxonium_spectroscopy(
        data, init, phi_trap=args.phi_trap, n_starts=args.starts, seed=args.seed
    )
    return fit.to_dict(), [args.data]


def cmd_fit_decay(args):
    trace = load_table(args.data, "decay")
    if args.model == "exp":
        fit = fitting.fit_exp_decay(trace)
        model = fitting.exp_decay(trace.t, *fit.parameters.values())
    elif args.model == "gauss":
        fit = fitting.fit_exp_gauss_decay(trace)
        model = fitting.exp_gauss_decay(trace.t, *fit.parameters.values())
    else:
        fit = fitting.fit_ramsey_decay(trace, args.delta_omega)
        model = fitting.ramsey_decay(trace.t, *fit.parameters.values())
    _table(args, PlotSeries(
        f"{args.model} decay fit",
        {"t": trace.t, "p_e": trace.p_e, "model": model},
        {"t": "us", "p_e": "1", "model": "1"},
    ))
    return fit.to_dict(), [args.data]


def cmd_fit_noise(args):
    points = load_table(args.data, "coherence")
    params = _params(args)
    fit = fitting.fit_noise_parameters(
        points, params, args.phi_trap, temperature=args.temperature, omega_l=args.omega_l
    )
    return fit.to_dict(), [args.data]


def cmd_coherence_budget(args):
    params = _params(args)
    noise = coherence.NoiseModel(
        tan_delta_c=args.tan_delta,
        a_phi_echo=args.a_phi_echo,
        a_phi_ramsey=args.a_phi_ramsey,
        gamma_misc_echo=rate_from_khz_over_2pi(args.misc_echo_khz),
        gamma_misc_ramsey=rate_from_khz_over_2pi(args.misc_ramsey_khz),
        temperature=args.temperature,
        omega_l=args.omega_l,
    )
    delta = np.linspace(args.phi_from, args.phi_to, args.steps)
    cols = coherence.coherence_budget(params, args.phi_trap, delta, noise)
    _table(args, PlotSeries(
        "coherence budget vs detuning",
        {"delta_phi": delta, "t1": cols["t1"], "t2e": cols["t2e"], "t2r": cols["t2r"]},
        {"delta_phi": "rad", "t1": "us", "t2e": "us", "t2r": "us"},
    ))
    return {"delta_phi": delta, **cols}, []


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fluxtrap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def command(name, func, help_text, device=False, table=False):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("-o", "--output", help="result document path (default: stdout)")
        if table:
            p.add_argument("--table", help="write plot data to this table")
        if device:
            _device_args(p)
        return p

    p = command("spectrum", cmd_spectrum, "sweep f01 and f02 versus external phase", True, True)
    p.add_argument("--phi-trap", type=_angle, default=0.0)
    p.add_argument("--from", dest="phi_from", type=_angle, default=-math.pi)
    p.add_argument("--to", dest="phi_to", type=_angle, default=math.pi)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--levels", type=int, default=3)

    p = command("sweet-spot", cmd_sweet_spot, "locate the f01 minimum, from the model or from data", True)
    p.add_argument("--phi-trap", type=_angle, default=0.0)
    p.add_argument("--window", type=_angle, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--data", help="spectroscopy table for a parabolic vertex fit")
    p.add_argument("--period", type=float, help="current period (A) to convert the vertex to phi_trap")
    p.add_argument("--n-trapped", type=int, default=1)

    p = command("trap", cmd_trap, "predict the trapped fluxoid number and phase")
    p.add_argument("--prebias-current", type=float, help="coil current (A) at the transition")
    p.add_argument("--prebias-flux", type=float, help="prebias flux in units of Phi0")
    p.add_argument("--timeline", help="cooldown timeline table")
    p.add_argument("--t-c", type=float, help="ring transition temperature (K)")
    p.add_argument("--deviations", help="deviation table; report bias statistics")
    p.add_argument("--calib", type=float, default=trap.CoilCalibration().current_per_flux_quantum,
                   help="coil current per flux quantum (A)")
    p.add_argument("--flux-offset", type=float, default=0.0, help="background flux (Phi0)")
    p.add_argument("--l-kinetic", type=float, help="ring kinetic inductance (H)")
    p.add_argument("--l-geometric", type=float, help="ring geometric inductance (H)")

    p = command("calibrate", cmd_calibrate, "fit the coil current period from transmon spectroscopy")
    p.add_argument("--data", required=True)

    p = command("fit-spectro", cmd_fit_spectro, "fit circuit energies to fluxonium spectroscopy", True)
    p.add_argument("--data", required=True)
    p.add_argument("--phi-trap", type=_angle, default=0.0)
    p.add_argument("--period", type=float, help="initial current period guess (A)")
    p.add_argument("--offset", type=float, default=0.0, help="initial current offset guess (A)")
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)

    p = command("fit-decay", cmd_fit_decay, "fit a T1, echo or Ramsey decay trace", table=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=("exp", "gauss", "ramsey"), required=True)
    p.add_argument("--delta-omega", type=float, help="Ramsey detuning guess (rad/us)")

    p = command("fit-noise", cmd_fit_noise, "fit noise parameters to coherence versus detuning", True)
    p.add_argument("--data", required=True)
    p.add_argument("--phi-trap", type=_angle, default=math.pi)
    p.add_argument("--temperature", type=float, default=0.05, help="bath temperature (K)")
    p.add_argument("--omega-l", type=float, default=2 * math.pi, help="infrared cutoff (rad/s)")

    p = command("coherence-budget", cmd_coherence_budget, "model T1, T2e, T2r versus detuning", True, True)
    p.add_argument("--phi-trap", type=_angle, default=math.pi)
    p.add_argument("--from", dest="phi_from", type=_angle, default=-0.02 * 2 * math.pi)
    p.add_argument("--to", dest="phi_to", type=_angle, default=0.02 * 2 * math.pi)
    p.add_argument("--steps", type=int, default=41)
    p.add_argument("--tan-delta", type=float, required=True)
    p.add_argument("--a-phi-echo", type=float, required=True, help="echo flux-noise amplitude (Phi0)")
    p.add_argument("--a-phi-ramsey", type=float, required=True, help="Ramsey flux-noise amplitude (Phi0)")
    p.add_argument("--misc-echo-khz", type=float, default=0.0, help="Gamma_misc/2pi for echo (kHz)")
    p.add_argument("--misc-ramsey-khz", type=float, default=0.0, help="Gamma_misc/2pi for Ramsey (kHz)")
    p.add_argument("--temperature", type=float, default=0.05)
    p.add_argument("--omega-l", type=float, default=2 * math.pi)
    return parser


def _origin(exc) -> str:
    for frame in reversed(traceback.extract_tb(exc.__traceback__)):
        path = Path(frame.filename)
        if path.parent.name == "fluxtrapping":
            return path.stem
    return "cli"


def _options(args) -> dict:
    skip = {"func", "output", "table", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        result, inputs = args.func(args)
        seed = getattr(args, "seed", None)
        _emit(args, result_document(args.command, result, inputs, seed, _options(args)))
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ConvergenceError as exc:
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, InvalidParameterError, ProtocolError, FluxTrapError, OSError, ValueError) as exc:
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
