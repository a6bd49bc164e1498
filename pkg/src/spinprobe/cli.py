"""Command-line drivers: ``spinprobe <subcommand> --config run.json --out results/``.

Exit codes: 0 success, 2 configuration or input-file error, 3 numerical failure.
"""
import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .collisions import endoergic_fraction
from .config import load_config
from .constants import K_B, MILLIGAUSS, NANOKELVIN
from .cross_sections import ALL_CHANNELS
from .dynamics import (
    build_rate_matrix,
    evolve_trace,
    population_map,
    propagate_many,
    ssa_simulate,
    steady_state,
)
from .estimation import estimate, load_measurement, systematic_field_shift
from .exceptions import (
    ConfigError,
    EstimationError,
    MissingChannelError,
    NumericalError,
    QuadratureError,
    RangeError,
    TableFormatError,
)
from .observables import energy_variance, entropy, entropy_vs_collisions, sensitivity_trace
from .states import MF_LABELS, SpinDistribution
from .trap import density_overlap, three_body_rate, thermalization_rate

log = logging.getLogger("spinprobe")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

POP_COLUMNS = [f"p_m{label}" for label in MF_LABELS]
TRACE_COLUMNS = ["t_s", *POP_COLUMNS, "entropy_kB", "n_endo", "n_exo", "sigmaE_over_kB_nK"]
SENSITIVITY_COLUMNS = ["t_s", "sqrtF_mean", "sqrtF_left", "sqrtF_right", "steady_sqrtF"]
SSA_COLUMNS = ["t_s", *POP_COLUMNS, "mean_endo", "mean_exo", "sem_endo", "sem_exo", "tv_vs_expm"]

# implied elastic rate as a multiple of the spin-exchange exit rate
ELASTIC_TO_SE = 10.0
FIELD_SYSTEMATIC = 2.0 * MILLIGAUSS


def fmt(x):
    """Round-trip decimal form of a float (17 significant digits)."""
    return format(float(x) + 0.0, ".17g")  # folds -0 into 0


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("wrote %s", path)


def write_csv(path, columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    write_atomic(path, buf.getvalue())


def write_json(path, payload):
    write_atomic(path, json.dumps(_jsonable(payload), indent=2, allow_nan=False) + "\n")


def _populations(p):
    return {f"m{label}": float(v) for label, v in zip(MF_LABELS, np.asarray(p))}


def _sigma_E_nK(p, B):
    return energy_variance(p, B)[1] / K_B / NANOKELVIN


def _steady_or_none(Q):
    if Q.max_rate == 0:
        return None
    return steady_state(Q)


def _seed(args, cfg):
    if args.seed is not None:
        return args.seed
    return cfg.seed if cfg is not None and cfg.seed is not None else 0


def _require_config(args):
    if args.config is None:
        raise ConfigError("--config", f"required for '{args.command}'")
    return load_config(args.config)


def _rate_summary(Q, bath, probe):
    idx = 3 - probe.initial_mF
    exit_rate = float(Q.exit_rates[idx])
    gamma_el = ELASTIC_TO_SE * exit_rate
    return {
        "channels_per_s": {str(ch): Q.rate(ch) for ch in ALL_CHANNELS},
        "initial_exit_rate_per_s": exit_rate,
        "implied_elastic_rate_per_s": gamma_el,
        "implied_thermalization_rate_per_s": thermalization_rate(gamma_el, bath.n_rb, probe.n_cs),
    }


def cmd_simulate(args):
    cfg = _require_config(args)
    provider = cfg.provider()
    Q = build_rate_matrix(provider, cfg.bath, cfg.probe, cfg.field)
    p0 = SpinDistribution.delta(cfg.probe.initial_mF)
    trace = evolve_trace(Q, p0, cfg.times)
    curve = entropy_vs_collisions(trace)
    rows = []
    for k, t in enumerate(trace.times):
        p = trace.populations[k]
        rows.append([t, *p, curve.entropy[k], trace.n_endo[k], trace.n_exo[k], _sigma_E_nK(p, cfg.field)])
    out = Path(args.out)
    write_csv(out / "trace.csv", TRACE_COLUMNS, rows)

    steady = _steady_or_none(Q)
    loss = three_body_rate(cfg.l3, density_overlap(cfg.bath, cfg.probe).n2_mean)
    k = curve.peak_index
    summary = {
        "field_mG": cfg.field / MILLIGAUSS,
        "temperature_nK": cfg.temperature / NANOKELVIN,
        "endoergic_fraction": endoergic_fraction(cfg.field, cfg.temperature),
        "steady_state": None
        if steady is None
        else {
            "populations": _populations(steady),
            "entropy_kB": entropy(steady),
            "sigmaE_over_kB_nK": _sigma_E_nK(steady, cfg.field),
        },
        "entropy_peak": {
            "t_s": curve.peak_time,
            "entropy_kB": curve.peak_entropy,
            "n_spin": curve.peak_n_spin,
            "n_endo": trace.n_endo[k],
            "n_exo": trace.n_exo[k],
        },
        "three_body": {"gamma_3body_Hz": loss.rate, "lifetime_s": loss.lifetime},
        "rates": _rate_summary(Q, cfg.bath, cfg.probe),
    }
    write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_steady_state(args):
    cfg = _require_config(args)
    Q = build_rate_matrix(cfg.provider(), cfg.bath, cfg.probe, cfg.field)
    p, cond = steady_state(Q, return_condition=True)
    payload = {
        "field_mG": cfg.field / MILLIGAUSS,
        "temperature_nK": cfg.temperature / NANOKELVIN,
        "populations": _populations(p),
        "entropy_kB": entropy(p),
        "sigmaE_over_kB_nK": _sigma_E_nK(p, cfg.field),
        "condition_number": cond,
    }
    write_json(Path(args.out) / "steady_state.json", payload)
    return EXIT_OK


def _parse_time(text):
    if text == "steady":
        return None
    try:
        t = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("time must be a number of seconds or 'steady'") from None
    if not t >= 0:
        raise argparse.ArgumentTypeError("time must be >= 0")
    return t


def cmd_estimate(args):
    cfg = _require_config(args)
    data = load_measurement(args.data)
    provider = cfg.provider()
    unit = NANOKELVIN if args.mode == "temperature" else MILLIGAUSS
    lo, hi = args.range
    theta_range = (lo * unit, hi * unit)
    scale = "log" if args.mode == "temperature" else "linear"
    model = population_map(
        provider, cfg.bath, cfg.probe, args.time, vary=args.mode, field=cfg.field, temperature=cfg.temperature
    )
    res = estimate(data, model, theta_range, scale=scale, convention=args.convention)
    payload = {
        "mode": args.mode,
        "unit": "nK" if args.mode == "temperature" else "mG",
        "interaction_time_s": args.time,
        "theta_hat": res.theta_hat / unit,
        "err_minus": res.err_minus / unit,
        "err_plus": res.err_plus / unit,
        "lower_error": res.lower_error / unit,
        "upper_error": res.upper_error / unit,
        "clamped_low": res.clamped_low,
        "clamped_high": res.clamped_high,
        "chi2_min": res.chi2_min,
        "delta_chi2": res.delta_chi2,
        "chi2_curve": [[theta / unit, c] for theta, c in res.chi2_curve],
    }
    if args.mode == "temperature":

        def model2(T, B):
            return population_map(provider, cfg.bath, cfg.probe, args.time, field=B)(T)

        shift = systematic_field_shift(
            data, model2, theta_range, cfg.field, dB=FIELD_SYSTEMATIC, scale=scale, convention=args.convention
        )
        payload["field_systematic_mG"] = FIELD_SYSTEMATIC / MILLIGAUSS
        payload["systematic_shift"] = shift / unit
    write_json(Path(args.out) / "estimate.json", payload)
    return EXIT_OK


def cmd_sensitivity(args):
    cfg = _require_config(args)
    theta0 = cfg.temperature if args.mode == "temperature" else cfg.field
    delta = args.delta * theta0
    grid = np.array([delta / 4.0, delta / 2.0, delta])
    tr = sensitivity_trace(
        cfg.provider(), cfg.bath, cfg.probe, cfg.field, cfg.temperature, args.mode, cfg.times, delta_grid=grid
    )
    rows = [[t, s, l, r, tr.steady.sqrtF] for t, s, l, r in zip(tr.times, tr.sqrtF, tr.left, tr.right)]
    out = Path(args.out)
    write_csv(out / "sensitivity.csv", SENSITIVITY_COLUMNS, rows)
    unit = NANOKELVIN if args.mode == "temperature" else MILLIGAUSS
    write_json(
        out / "sensitivity_summary.json",
        {
            "mode": args.mode,
            "sqrtF_unit": "1/nK" if args.mode == "temperature" else "1/mG",
            "delta_grid": (grid / unit).tolist(),
            "peak_sqrtF": float(tr.sqrtF.max()) * unit,
            "peak_time_s": tr.peak_time,
            "steady_sqrtF": tr.steady.sqrtF * unit,
            "peak_to_steady": tr.peak_to_steady,
            "entropy_peak_time_s": tr.entropy_peak_time,
        },
    )
    return EXIT_OK


def cmd_endo_fraction(args):
    cfg = load_config(args.config) if args.config is not None else None
    fields = args.field if args.field else ([cfg.field / MILLIGAUSS] if cfg else None)
    temps = args.temperature if args.temperature else ([cfg.temperature / NANOKELVIN] if cfg else None)
    if fields is None or temps is None:
        raise ConfigError("--field/--temperature", "give values or a --config")
    rows = []
    for b in fields:
        for t in temps:
            if b < 0 or t < 0:
                raise ConfigError("--field/--temperature", "values must be >= 0")
            rows.append([b, t, endoergic_fraction(b * MILLIGAUSS, t * NANOKELVIN)])
    write_csv(Path(args.out) / "endo_fraction.csv", ["B_mG", "T_nK", "p_endo"], rows)
    return EXIT_OK


def cmd_ssa(args):
    cfg = _require_config(args)
    Q = build_rate_matrix(cfg.provider(), cfg.bath, cfg.probe, cfg.field)
    p0 = SpinDistribution.delta(cfg.probe.initial_mF)
    checkpoints = np.linspace(0.0, cfg.t_max, args.checkpoints + 1)[1:]
    seed = _seed(args, cfg)
    res = ssa_simulate(Q, p0, checkpoints, args.n_traj, seed=seed, n_jobs=args.jobs)
    ref = propagate_many(Q, p0, checkpoints)
    tv = 0.5 * np.abs(res.distributions - ref).sum(axis=1)
    rows = [
        [t, *res.distributions[k], res.mean_endo[k], res.mean_exo[k], res.sem_endo[k], res.sem_exo[k], tv[k]]
        for k, t in enumerate(checkpoints)
    ]
    out = Path(args.out)
    write_csv(out / "ssa.csv", SSA_COLUMNS, rows)
    write_json(
        out / "ssa_summary.json",
        {"n_trajectories": args.n_traj, "seed": seed, "max_tv_vs_expm": float(tv.max())},
    )
    return EXIT_OK


def _range(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("range looks like LO,HI")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("range bounds must be numbers") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("range needs LO < HI")
    return lo, hi


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _seed_arg(text):
    n = int(text)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def _global_flags(parser, suppress=False):
    # subcommands repeat the global flags; SUPPRESS keeps them from
    # overwriting values given before the subcommand name
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--config", default=default(None), help="run configuration (JSON)")
    parser.add_argument("--out", default=default("."), help="output directory (default: current)")
    parser.add_argument("--seed", type=_seed_arg, default=default(None), help="random seed; overrides the config")
    parser.add_argument("-v", "--verbose", action="count", default=default(0))
    return parser


def build_parser():
    common = _global_flags(argparse.ArgumentParser(add_help=False), suppress=True)
    parser = _global_flags(
        argparse.ArgumentParser(prog="spinprobe", description="Spin-exchange probe thermometry and magnetometry.")
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="time trace and summary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("steady-state", parents=[common], help="stationary populations")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("estimate", parents=[common], help="chi-square fit of measured populations")
    p.add_argument("--data", required=True, help="CSV with columns mF,p_exp,sigma_exp")
    p.add_argument("--mode", choices=("temperature", "field"), default="temperature")
    p.add_argument("--range", type=_range, required=True, help="scan range LO,HI in nK or mG")
    p.add_argument("--time", type=_parse_time, required=True, help="interaction time in s, or 'steady'")
    p.add_argument("--convention", choices=("reduced", "unreduced"), default="reduced")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sensitivity", parents=[common], help="time-resolved Fisher sensitivity")
    p.add_argument("--mode", choices=("temperature", "field"), default="temperature")
    p.add_argument("--delta", type=float, default=0.02, help="largest offset relative to the working point")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("endo-fraction", parents=[common], help="fraction of collisions above threshold")
    p.add_argument("--field", type=float, nargs="+", help="fields in mG")
    p.add_argument("--temperature", type=float, nargs="+", help="temperatures in nK")
    p.set_defaults(func=cmd_endo_fraction)

    p = sub.add_parser("ssa", parents=[common], help="stochastic trajectories checked against the rate model")
    p.add_argument("--n-traj", type=_positive_int, default=10000)
    p.add_argument("--checkpoints", type=_positive_int, default=5)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_ssa)
    return parser


INPUT_ERRORS = (ConfigError, TableFormatError, MissingChannelError, RangeError, OSError)
NUMERICAL_ERRORS = (NumericalError, QuadratureError, EstimationError, np.linalg.LinAlgError)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"spinprobe: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERICAL_ERRORS as exc:
        print(f"spinprobe: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"spinprobe: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
