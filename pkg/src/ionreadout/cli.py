"""Command-line front end.

Every subcommand maps onto one module-level operation; quantities in
flag names carry explicit units.  Exit codes: 0 success, 1 validation
error (bad flags, bad config, bad input file), 2 runtime or numerical
error.  All randomness flows from explicit integer seeds; the default
seed for every subcommand that simulates is 12345.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as _io
from .optics import (
    APSurface,
    CalibrationInputs,
    DetectorScene,
    collection_fraction,
    expected_rate,
    obscured_fraction,
    rate_vs_position,
    sde_calibrate,
)
from .photon_sim import (
    EmitterStreamConfig,
    RateParams,
    ReadoutConfig,
    apply_herald_dataset,
    simulate_dataset,
    simulate_timetag_streams,
)
from .readout import (
    adaptive_classify_batch,
    calibrate_rates,
    error_stats,
    optimize_threshold,
    threshold_classify,
)
from .rfcircuit import (
    BiasCountCurve,
    NanowireNetwork,
    decompose_currents,
    fit_pickup,
    max_induced,
    pickup_from_solution,
    predict_counts,
    solve_network,
)
from .scenario import ConfigError, parse_duration_sweep, run_scenario
from .timing import find_dip, g2_estimate

DEFAULT_SEED = 12345


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message: str):  # noqa: D102
        raise ConfigError(f"{self.prog}: {message}")


def _ns(text: str) -> float:
    """Parse a delay flag; a trailing 'ns' unit is accepted ('1ns' -> 1)."""
    text = text.strip()
    if text.endswith("ns"):
        text = text[: -2].strip()
    return float(text)


def _rate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma-b-per-ms", type=float, default=162.50,
                   help="bright-state count rate (1/ms, default 162.50)")
    p.add_argument("--gamma-d-per-ms", type=float, default=5.095,
                   help="dark-state count rate (1/ms, default 5.095)")
    p.add_argument("--gamma-dp-per-ms", type=float, default=0.020,
                   help="bright-to-dark pumping rate (1/ms, default 0.020)")
    p.add_argument("--gamma-rp-per-ms", type=float, default=0.0120,
                   help="dark-to-bright repumping rate (1/ms, default 0.0120)")


def _rates_from(args) -> RateParams:
    return RateParams(
        gamma_b=args.gamma_b_per_ms,
        gamma_d=args.gamma_d_per_ms,
        gamma_dp=args.gamma_dp_per_ms,
        gamma_rp=args.gamma_rp_per_ms,
    )


def _print_kv(pairs) -> None:
    for key, val in pairs:
        if isinstance(val, float):
            print(f"{key} = {val:.8g}")
        else:
            print(f"{key} = {val}")


# ---------------------------------------------------------------- simulate

def _cmd_simulate(args) -> int:
    cfg = ReadoutConfig(
        bin_width_us=args.bin_width_us,
        n_bins=args.n_bins,
        herald_duration_us=args.herald_duration_us,
        herald_bright_min=args.herald_bright_min,
    )
    trajs = simulate_dataset(
        _rates_from(args), cfg, args.trials_per_state, args.seed, mode=args.mode
    )
    pairs = [("trials_per_state", args.trials_per_state), ("seed", args.seed)]
    if args.herald:
        trajs, tally = apply_herald_dataset(trajs, cfg)
        pairs += [(f"herald_{outcome.name.lower()}", n) for outcome, n in tally.items()]
    _io.write_trajectories_csv(args.out, trajs)
    pairs.append(("trials_written", len(trajs)))
    pairs.append(("out", args.out))
    _print_kv(pairs)
    return 0


# ---------------------------------------------------------------- classify

def _stats_row(name: str, stats) -> str:
    return (
        f"{name:<10} {stats.eps_bright:>12.6g} {stats.eps_dark:>12.6g} "
        f"{stats.mean_error:>12.6g} {stats.fidelity:>12.8g} "
        f"{stats.mean_duration_us:>15.6g}"
    )


def _cmd_classify(args) -> int:
    if not (args.threshold or args.bayes):
        raise ConfigError("choose --threshold, --bayes, or both")
    if args.out and args.threshold and args.bayes:
        raise ConfigError("--out works with a single method; drop it to compare both")
    trajs = _io.read_trajectories_csv(args.infile, bin_width_us=args.bin_width_us)
    truths = [t.prepared for t in trajs]
    rows = []

    if args.threshold:
        if args.threshold_counts is None:
            thr, stats = optimize_threshold(trajs, args.duration_us)
        else:
            thr = args.threshold_counts
            decisions = [threshold_classify(t, thr, args.duration_us) for t in trajs]
            stats = error_stats(truths, decisions,
                                np.full(len(trajs), args.duration_us))
        decisions = [threshold_classify(t, thr, args.duration_us) for t in trajs]
        rows.append(("threshold", stats))
        print(f"threshold_counts = {thr}")
        if args.out and not args.bayes:
            _io.write_results_csv(
                args.out,
                ((i, truths[i], decisions[i], args.duration_us, "")
                 for i in range(len(trajs))),
            )

    if args.bayes:
        res = adaptive_classify_batch(trajs, _rates_from(args),
                                      args.bin_width_us, [args.level])[0]
        decisions_b = np.where(res.decisions, "bright", "dark")
        stats_b = error_stats(truths, decisions_b, res.bins_consumed * args.bin_width_us)
        rows.append((f"bayes@{args.level:g}", stats_b))
        if args.out and not args.threshold:
            _io.write_results_csv(
                args.out,
                ((i, truths[i], decisions_b[i],
                  res.bins_consumed[i] * args.bin_width_us, res.confidence[i])
                 for i in range(len(trajs))),
            )

    print(f"{'method':<10} {'eps_bright':>12} {'eps_dark':>12} "
          f"{'mean_error':>12} {'fidelity':>12} {'mean_dur_us':>15}")
    for name, stats in rows:
        print(_stats_row(name, stats))
    return 0


# ---------------------------------------------------------------- calibrate

def _cmd_calibrate(args) -> int:
    trajs = _io.read_trajectories_csv(args.infile, bin_width_us=args.bin_width_us)
    cal = calibrate_rates(trajs)
    _print_kv(
        (field, getattr(cal, field))
        for field in ("gamma_b", "gamma_b_err", "gamma_d", "gamma_d_err",
                      "gamma_dp", "gamma_dp_err", "gamma_rp", "gamma_rp_err")
    )
    return 0


# ---------------------------------------------------------------- rfmodel

def _cmd_rfmodel(args) -> int:
    net = NanowireNetwork(
        k_segments=args.k_segments,
        l_wire_total=args.l_wire_uh * 1e-6,
        c_ground=args.c_ground_ff * 1e-15,
        c_drive=args.c_drive_ff * 1e-15,
        c_lead=args.c_lead_ff * 1e-15,
        l_lead=args.l_lead_nh * 1e-9,
        r_lead=args.r_lead_ohm,
        z_term_left=args.z_term_left_ohm,
        z_term_right=args.z_term_right_ohm,
        omega_rf=2 * np.pi * args.freq_mhz * 1e6,
        v_rf=args.v_rf_v,
    )
    if args.fit:
        if not (args.rf_on and args.rf_off and args.delta_im_ua is not None):
            raise ConfigError("--fit needs --rf-on, --rf-off and --delta-im-ua")
        fit = fit_pickup(
            _io.read_bias_curve_csv(args.rf_on),
            _io.read_bias_curve_csv(args.rf_off),
            args.delta_im_ua,
            k_segments=args.k_segments,
            omega_rf=net.omega_rf,
        )
        _print_kv([
            ("i0_ua", fit.model.i0_ua), ("i0_err_ua", fit.i0_err_ua),
            ("i1_ua", fit.model.i1_ua), ("i1_err_ua", fit.i1_err_ua),
            ("max_induced_ua", max_induced(fit.model)),
            ("residual_norm", fit.residual_norm),
        ])
        return 0

    sol = solve_network(net)
    model = pickup_from_solution(sol)
    dec = decompose_currents(sol)
    _print_kv([
        ("i0_ua", model.i0_ua),
        ("i1_ua", model.i1_ua),
        ("max_induced_ua", max_induced(model)),
        ("linear_r_squared", dec.r_squared),
        ("solver_residual", sol.residual),
    ])
    if args.rf_off:
        curve = _io.read_bias_curve_csv(args.rf_off)
        if args.bias_ua is not None:
            print(f"predicted_counts = {predict_counts(model, curve, args.bias_ua):.8g}")
        if args.out:
            on = BiasCountCurve(
                curve.bias_ua.copy(),
                np.array([predict_counts(model, curve, b) for b in curve.bias_ua]),
            )
            _io.write_bias_curve_csv(args.out, on)
            print(f"out = {args.out}")
    elif args.bias_ua is not None or args.out:
        raise ConfigError("--bias-ua/--out need --rf-off to supply the drive-off curve")
    return 0


# ---------------------------------------------------------------- optics

def _cmd_optics(args) -> int:
    if args.scene not in ("paper", "custom"):
        raise ConfigError(f"unknown scene preset {args.scene!r}; use paper or custom")
    scene = DetectorScene(
        detector_w_um=args.detector_w_um,
        detector_h_um=args.detector_h_um,
        recess_um=args.recess_um,
        ion_height_um=args.ion_height_um,
        lateral_um=args.lateral_um,
        quant_axis_deg=args.quant_axis_deg,
        nanowire_axis_deg=args.nanowire_axis_deg,
        grid_pitch_um=args.grid_pitch_um,
        opening_margin_um=args.opening_margin_um,
    )
    n_ap_flags = sum(x is not None for x in (args.ap_constant, args.ap_file)) + args.ap_synthetic
    if n_ap_flags > 1:
        raise ConfigError("choose one of --ap-constant, --ap-file, --ap-synthetic")
    if args.ap_constant is not None:
        ap = APSurface.constant(args.ap_constant)
    elif args.ap_file:
        ap = _io.read_ap_surface_csv(args.ap_file)
    else:
        ap = APSurface.synthetic_placeholder()

    cal = CalibrationInputs(internal_efficiency=args.internal_efficiency)
    pairs = [
        ("collection_fraction", collection_fraction(scene)),
        ("obscured_fraction", obscured_fraction(scene)),
        ("expected_rate_s", expected_rate(scene, ap, cal)),
    ]
    if args.measured_rate_s is not None:
        pairs.append(("sde", sde_calibrate(args.measured_rate_s, scene, cal)))
    _print_kv(pairs)

    if args.sweep_lateral:
        if not args.out:
            raise ConfigError("--sweep-lateral needs --out for the CSV")
        offsets = parse_duration_sweep(args.sweep_lateral)
        sweep = rate_vs_position(scene, ap, offsets, cal)
        _io.write_position_sweep_csv(args.out, sweep)
        print(f"out = {args.out}")
    elif args.out:
        raise ConfigError("--out needs --sweep-lateral")
    return 0


# ---------------------------------------------------------------- g2

def _cmd_g2(args) -> int:
    if args.infile and args.simulate:
        raise ConfigError("--in and --simulate conflict; pick one tag source")
    if args.infile:
        streams = _io.read_timetags_csv(args.infile)
        if len(streams) != 2:
            raise ConfigError(f"need exactly 2 channels, found {len(streams)}")
        a, b = streams
    elif args.simulate:
        cfg = EmitterStreamConfig(
            emission_rate_s=args.emission_rate_s,
            dead_time_s=args.dead_time_ns * 1e-9,
            route_prob_a=args.route_prob_a,
            route_prob_b=args.route_prob_b,
            background_rate_a_s=args.background_rate_a_s,
            background_rate_b_s=args.background_rate_b_s,
            delay_offset_b_s=args.offset_b_ns * 1e-9,
            duration_s=args.duration_s,
        )
        a, b = simulate_timetag_streams(cfg, args.seed)
    else:
        raise ConfigError("supply --in tags.csv or --simulate")

    exclude = None
    if args.exclude_ns:
        lo, hi = (float(p) for p in args.exclude_ns.split(":"))
        exclude = (lo, hi)
    est = g2_estimate(a, b, bin_width_ns=int(args.bin_width_ns),
                      max_delay_ns=args.max_delay_ns, exclude_ns=exclude)
    dip = find_dip(est)
    _print_kv([
        ("n_tags_a", a.t_ns.size), ("n_tags_b", b.t_ns.size),
        ("dip_delay_ns", dip.delay_ns), ("dip_g2", dip.g2_min),
    ])
    if args.out:
        _io.write_g2_csv(args.out, est)
        print(f"out = {args.out}")
    return 0


# ---------------------------------------------------------------- heating

def _cmd_heating(args) -> int:
    from .heating import HeatingPoint, field_noise_ratio, kick_heating_rate, scale_heating

    did_something = False
    if args.rate_quanta_s is not None:
        if args.freq_mhz is None or args.distance_um is None:
            raise ConfigError("a source point needs --rate-quanta-s, --freq-mhz, --distance-um")
        src = HeatingPoint(args.rate_quanta_s, args.freq_mhz, args.distance_um)
        if args.target_freq_mhz is not None:
            print(f"scaled_rate_quanta_s = "
                  f"{scale_heating(src, args.target_freq_mhz, args.alpha):.8g}")
            did_something = True
        if args.rate2_quanta_s is not None:
            if args.freq2_mhz is None or args.distance2_um is None:
                raise ConfigError(
                    "a comparison point needs --rate2-quanta-s, --freq2-mhz, --distance2-um"
                )
            other = HeatingPoint(args.rate2_quanta_s, args.freq2_mhz, args.distance2_um)
            print(f"field_noise_ratio = {field_noise_ratio(src, other, args.alpha):.8g}")
            did_something = True
    if args.quanta_per_count is not None:
        if args.count_rate_s is None:
            raise ConfigError("--quanta-per-count needs --count-rate-s")
        print(f"kick_heating_quanta_s = "
              f"{kick_heating_rate(args.quanta_per_count, args.count_rate_s):.8g}")
        did_something = True
    if not did_something:
        raise ConfigError("nothing to compute; see ionreadout heating --help")
    return 0


# ---------------------------------------------------------------- run

def _cmd_run(args) -> int:
    summary = run_scenario(args.config)
    _print_kv(summary.items())
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ionreadout",
                     description="Trapped-ion fluorescence readout toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a labeled trajectory dataset")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trials-per-state", type=int, default=1000)
    p.add_argument("--n-bins", type=int, default=500)
    p.add_argument("--bin-width-us", type=float, default=1.0)
    p.add_argument("--mode", choices=("exact", "bin-boundary"), default="exact")
    p.add_argument("--herald", action="store_true",
                   help="apply the herald filter before writing")
    p.add_argument("--herald-duration-us", type=float, default=50.0)
    p.add_argument("--herald-bright-min", type=int, default=8)
    _rate_flags(p)
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("classify", help="state discrimination on a trajectory CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--bin-width-us", type=float, default=1.0)
    p.add_argument("--threshold", action="store_true",
                   help="fixed-duration counting threshold method")
    p.add_argument("--threshold-counts", type=int, default=None,
                   help="fixed threshold; omitted = optimize on this dataset")
    p.add_argument("--duration-us", type=float, default=125.0)
    p.add_argument("--bayes", action="store_true",
                   help="adaptive Bayesian method")
    p.add_argument("--level", type=float, default=0.9999,
                   help="posterior stopping level for --bayes")
    _rate_flags(p)
    p.add_argument("--out", default=None, help="per-trial results CSV")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("calibrate", help="recover emitter rates from a dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--bin-width-us", type=float, default=1.0)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("rfmodel", help="induced-current model of the biased wire")
    p.add_argument("--k-segments", type=int, default=40)
    p.add_argument("--l-wire-uh", type=float, default=2.2)
    p.add_argument("--c-ground-ff", type=float, default=10.5)
    p.add_argument("--c-drive-ff", type=float, default=0.04635)
    p.add_argument("--c-lead-ff", type=float, default=3.587)
    p.add_argument("--l-lead-nh", type=float, default=5.0)
    p.add_argument("--r-lead-ohm", type=float, default=5.0)
    p.add_argument("--z-term-left-ohm", type=float, default=0.0)
    p.add_argument("--z-term-right-ohm", type=float, default=50.0)
    p.add_argument("--freq-mhz", type=float, default=67.03)
    p.add_argument("--v-rf-v", type=float, default=8.8)
    p.add_argument("--rf-off", default=None, help="drive-off bias curve CSV")
    p.add_argument("--bias-ua", type=float, default=None,
                   help="predict drive-on counts at this dc bias")
    p.add_argument("--out", default=None, help="write predicted drive-on curve CSV")
    p.add_argument("--fit", action="store_true",
                   help="fit pickup amplitudes to measured curves")
    p.add_argument("--rf-on", default=None, help="drive-on bias curve CSV (for --fit)")
    p.add_argument("--delta-im-ua", type=float, default=None,
                   help="observed shift of the response edge (for --fit)")
    p.set_defaults(func=_cmd_rfmodel)

    p = sub.add_parser("optics", help="collection geometry and efficiency")
    p.add_argument("--scene", default="paper",
                   help="preset: paper (default geometry) or custom")
    p.add_argument("--detector-w-um", type=float, default=22.0)
    p.add_argument("--detector-h-um", type=float, default=20.0)
    p.add_argument("--recess-um", type=float, default=6.0)
    p.add_argument("--ion-height-um", type=float, default=29.0)
    p.add_argument("--lateral-um", type=float, default=0.0)
    p.add_argument("--quant-axis-deg", type=float, default=45.0)
    p.add_argument("--nanowire-axis-deg", type=float, default=0.0)
    p.add_argument("--grid-pitch-um", type=float, default=1.0)
    p.add_argument("--opening-margin-um", type=float, default=30.0)
    p.add_argument("--ap-constant", type=float, default=None,
                   help="angle-independent absorption probability")
    p.add_argument("--ap-file", default=None, help="AP surface CSV")
    p.add_argument("--ap-synthetic", action="store_true",
                   help="smooth synthetic AP surface (default)")
    p.add_argument("--internal-efficiency", type=float, default=1.0)
    p.add_argument("--measured-rate-s", type=float, default=None,
                   help="saturated count rate; prints the implied SDE")
    p.add_argument("--sweep-lateral", default=None, metavar="LO:HI:STEP",
                   help="emitter offset sweep in um, e.g. 0:160:8")
    p.add_argument("--out", default=None, help="position sweep CSV")
    p.set_defaults(func=_cmd_optics)

    p = sub.add_parser("g2", help="intensity correlation of two tag channels")
    p.add_argument("--in", dest="infile", default=None, help="time-tag CSV")
    p.add_argument("--simulate", action="store_true",
                   help="simulate the two channels instead of reading a file")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--emission-rate-s", type=float, default=5.42e5)
    p.add_argument("--dead-time-ns", type=float, default=1.0)
    p.add_argument("--route-prob-a", type=float, default=0.5)
    p.add_argument("--route-prob-b", type=float, default=0.5)
    p.add_argument("--background-rate-a-s", type=float, default=0.0)
    p.add_argument("--background-rate-b-s", type=float, default=0.0)
    p.add_argument("--offset-b-ns", type=float, default=0.0)
    p.add_argument("--duration-s", type=float, default=1.0)
    p.add_argument("--bin", "--bin-width-ns", dest="bin_width_ns", type=_ns,
                   default=1, help="histogram bin width, e.g. 1ns")
    p.add_argument("--max-delay-ns", type=int, default=500)
    p.add_argument("--exclude-ns", default=None, metavar="LO:HI",
                   help="mask delays in [LO, HI] ns")
    p.add_argument("--out", default=None, help="histogram CSV")
    p.set_defaults(func=_cmd_g2)

    p = sub.add_parser("heating", help="motional heating scalings")
    p.add_argument("--rate-quanta-s", type=float, default=None)
    p.add_argument("--freq-mhz", type=float, default=None)
    p.add_argument("--distance-um", type=float, default=None)
    p.add_argument("--target-freq-mhz", type=float, default=None)
    p.add_argument("--alpha", type=float, default=1.7,
                   help="spectral exponent of the field noise (default 1.7)")
    p.add_argument("--rate2-quanta-s", type=float, default=None)
    p.add_argument("--freq2-mhz", type=float, default=None)
    p.add_argument("--distance2-um", type=float, default=None)
    p.add_argument("--quanta-per-count", type=float, default=None)
    p.add_argument("--count-rate-s", type=float, default=None)
    p.set_defaults(func=_cmd_heating)

    p = sub.add_parser("run", help="execute a scenario config end to end")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # numerical / runtime failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
