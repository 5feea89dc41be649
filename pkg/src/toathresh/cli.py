"""Command-line entry point: MSE curves, threshold sweeps and pulse design.

SNR is given in dB, frequencies in GHz and times in ns (ps in outputs).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .lower_bounds import alb_b, alb_z
from .mc_oracle import McConfig, monte_carlo_curve
from .mse_models import (MseCurve, crlb, db_to_linear, ecrlb, max_mse, mse_ana,
                         mse_num)
from .pulse_design import (DesignConstraints, design_fixed_bandwidth,
                           design_free_bandwidth, exhaustive_search_reference)
from .pulse_model import build_acr, equal_split_count, load_preset, local_maxima
from .special_math import DomainError
from .thresholds import (gamma_sweep_model, lambda_sweep_model, numeric_thresholds_for,
                         sweep_to_csv, thresholds_analytic)


def _range(text: str) -> np.ndarray:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise argparse.ArgumentTypeError(f"bad range {text!r}, expected lo:hi:step")
        lo, hi, step = parts
        return lo + step * np.arange(int(math.floor((hi - lo) / step + 1e-9)) + 1)
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None


def _band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad band {text!r}, expected f_l:f_h in GHz") from None
    return lo, hi


def _point_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence((seed, i)).generate_state(1)[0])


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_curves(args) -> int:
    pulse, setup = load_preset(args.preset)
    a = build_acr(pulse)
    n = args.intervals
    if n is None and not a.oscillating:
        n = equal_split_count(a, setup)
    iv = local_maxima(a, setup, n_intervals=n or 8)
    snr_db = args.snr_db
    rho = db_to_linear(snr_db)

    curves = [
        MseCurve(rho, [crlb(a, r) for r in rho], "crlb"),
        MseCurve(rho, [ecrlb(a, r) for r in rho], "ecrlb"),
        MseCurve(rho, np.full(rho.size, max_mse(setup)), "e_U"),
        MseCurve(rho, [mse_num(a, setup, iv, r, seed=_point_seed(args.seed, i))
                       for i, r in enumerate(rho)], "e_num"),
        MseCurve(rho, [mse_ana(a, r) for r in rho], "e_ana"),
        MseCurve(rho, [alb_z(a, setup, r, 1) for r in rho], "z1"),
        MseCurve(rho, [alb_b(a, setup, r, 1) for r in rho], "b1"),
    ]
    if args.mc_trials:
        curves.append(monte_carlo_curve(a, setup, snr_db,
                                        McConfig(trials=args.mc_trials, seed=args.seed)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["snr_db", "sqrt_mse_ps", "label"])
    for cv in curves:
        for x_db, m in zip(snr_db, cv.mse):
            w.writerow([f"{x_db:.2f}", f"{math.sqrt(m) * 1e12:.6e}", cv.label])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_thresholds(args) -> int:
    rows = []
    for i, v in enumerate(args.values):
        if args.sweep == "gamma":
            a, setup = gamma_sweep_model(float(v))
        else:
            a, setup = lambda_sweep_model(float(v), f_c=args.fc * 1e9)
        seed = _point_seed(args.seed, i)
        rows.append((args.sweep, float(v),
                     numeric_thresholds_for(a, setup, args.snr_db, seed=seed)))
        if args.z1:
            rows.append((args.sweep, float(v),
                         numeric_thresholds_for(a, setup, args.snr_db, curve="z1")))
        rows.append((args.sweep, float(v), thresholds_analytic(a, form=args.form)))
    _emit(sweep_to_csv(rows), args.out)
    return 0


def _design_one(rho0_db: float, args) -> dict:
    f_l, f_h = args.band
    b = None if args.bandwidth is None else args.bandwidth * 1e9
    c = DesignConstraints(f_l * 1e9, f_h * 1e9, 10.0 ** (rho0_db / 10.0), fixed_b=b,
                          delta_db=args.delta_db)
    sol = design_fixed_bandwidth(c, form=args.form) if b else design_free_bandwidth(c, form=args.form)
    sol.check(c)
    out = {"rho0_db": rho0_db, **sol.to_dict()}
    if args.exhaustive:
        ref = exhaustive_search_reference(c, seed=args.seed)
        out["exhaustive"] = {"B1_GHz": ref.B1 / 1e9, "fc1_GHz": ref.f_c1 / 1e9,
                             "lambda1": ref.lambda1, "e1_ps2": ref.e1 * 1e24,
                             "skipped_points": ref.n_skipped}
    return out


def cmd_design(args) -> int:
    if args.rho0_sweep is not None:
        result = [_design_one(float(r), args) for r in args.rho0_sweep]
    else:
        result = _design_one(args.rho0_db, args)
    _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toathresh", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="seed for every stochastic step")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="MSE curves of a pulse preset as CSV")
    p.add_argument("--preset", default="baseband",
                   help="baseband, passband, fcc or a JSON config file")
    p.add_argument("--snr-db", type=_range, default=_range("-20:60:0.25"),
                   help="SNR grid lo:hi:step in dB (default -20:60:0.25)")
    p.add_argument("--intervals", type=int, default=None,
                   help="equal intervals for non-oscillating pulses")
    p.add_argument("--mc-trials", type=int, default=0,
                   help="add a Monte Carlo curve with this many trials")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("thresholds", help="threshold sweep over gamma or lambda as CSV")
    p.add_argument("--sweep", choices=("gamma", "lambda"), required=True)
    p.add_argument("--values", type=_range, required=True,
                   help="sweep values, lo:hi:step or a comma list")
    p.add_argument("--snr-db", type=_range, default=_range("-10:50:1"),
                   help="coarse SNR grid for the numeric thresholds")
    p.add_argument("--fc", type=float, default=6.85, help="carrier for lambda sweeps (GHz)")
    p.add_argument("--z1", action="store_true", help="also report thresholds of z1")
    p.add_argument("--form", choices=("derived", "printed"), default="derived",
                   help="closed-form threshold constant")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("design", help="optimal bandwidth and carrier as JSON")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rho0-db", type=float)
    g.add_argument("--rho0-sweep", type=_range, help="lo:hi:step in dB")
    p.add_argument("--band", type=_band, default=(3.1, 10.6), help="f_l:f_h in GHz")
    p.add_argument("--bandwidth", type=float, default=None, help="fixed bandwidth (GHz)")
    p.add_argument("--delta-db", type=float, default=1.0,
                   help="half-width of the begin-ambiguity regime")
    p.add_argument("--exhaustive", action="store_true",
                   help="add the grid-search reference (slow)")
    p.add_argument("--form", choices=("derived", "printed"), default="derived")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_design)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError, KeyError) as exc:
        print(f"toathresh: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
