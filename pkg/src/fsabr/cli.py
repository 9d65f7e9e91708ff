"""Command line surface: density grids, smiles and validation reports.

Subcommands
-----------
density   write (x, y, p) rows of the small-time joint density over a grid
smile     write (k, sigma, diag, method[, std_err]) rows for one expiry;
          method is 'asymptotic' (H <= 1/2), 'ldp' (any H) or 'mc'
validate  run the module self-check suites and emit a JSON report

The params file is flat key=value text with keys x0, y0, nu, rho, hurst and
optional seed; unknown keys are rejected.  Exit codes: 0 success, 2
malformed configuration, 3 domain error (1 for validate when checks fail).
All outputs are deterministic given (config, seed, flags) and independent
of --workers.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .density import approx_joint_density
from .ldp import fsabr_smile_ldp, minimize_rate
from .mc import mc_terminal
from .params import ModelParams
from .smile import (
    UnsupportedHurstError,
    bs_implied_vol,
    bs_price,
    implied_vol_fsabr,
    implied_vol_fsabr_atm,
)
from .validate import run_suites

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

_PARAM_KEYS = ("x0", "y0", "nu", "rho", "hurst")


class ConfigError(Exception):
    """Malformed params file or option value."""


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def load_params(path: str):
    """Parse the key=value params file; returns (ModelParams, seed)."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read params file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _PARAM_KEYS + ("seed",):
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = val
    missing = [k for k in _PARAM_KEYS if k not in values]
    if missing:
        raise ConfigError(f"{path}: missing keys {missing}")
    try:
        seed = int(values.pop("seed", "0"))
        numeric = {k: float(v) for k, v in values.items()}
        params = ModelParams(**numeric)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return params, seed


def _parse_grid_spec(spec: str):
    parts = spec.split(":")
    if len(parts) != 6:
        raise ConfigError(f"--grid-spec must be nx:ny:xlo:xhi:ylo:yhi, got {spec!r}")
    try:
        nx, ny = int(parts[0]), int(parts[1])
        xlo, xhi, ylo, yhi = map(float, parts[2:])
    except ValueError as exc:
        raise ConfigError(f"bad --grid-spec {spec!r}: {exc}") from exc
    if nx < 1 or ny < 1 or xhi <= xlo or yhi <= ylo:
        raise ConfigError(f"bad --grid-spec {spec!r}: empty grid")
    return nx, ny, xlo, xhi, ylo, yhi


def _parse_k_range(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--k-range must be lo:hi:step, got {spec!r}")
    try:
        lo, hi, step = map(float, parts)
    except ValueError as exc:
        raise ConfigError(f"bad --k-range {spec!r}: {exc}") from exc
    if step <= 0.0 or hi < lo:
        raise ConfigError(f"bad --k-range {spec!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _write_lines(out_path, lines):
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _map_ordered(fn, items, n_workers):
    if n_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def cmd_density(args) -> int:
    params, _ = load_params(args.params_file)
    if args.t <= 0.0:
        raise ValueError("--t must be positive")
    nx, ny, xlo, xhi, ylo, yhi = _parse_grid_spec(args.grid_spec)
    if ylo <= 0.0:
        raise ValueError("volatility grid must be positive (ylo > 0)")
    xs = np.linspace(xlo, xhi, nx)
    ys = np.linspace(ylo, yhi, ny)

    # one row per x keeps the evaluation shape fixed, so output is
    # bit-identical for any worker count
    def row(x):
        dens = approx_joint_density(params, args.t, float(x), ys)
        return [f"{_fmt(float(x))},{_fmt(float(y))},{_fmt(float(d))}"
                for y, d in zip(ys, np.atleast_1d(dens))]

    chunks = _map_ordered(row, list(xs), args.workers)
    lines = ["x,y,p"]
    for chunk in chunks:
        lines.extend(chunk)
    _write_lines(args.out, lines)
    return EXIT_OK


def _smile_asymptotic(params, t, ks):
    if params.hurst > 0.5:
        raise UnsupportedHurstError(
            "method 'asymptotic' requires hurst <= 0.5 (the boundary-minimum "
            "expansion does not hold above 1/2); use --method ldp"
        )
    rows = []
    for k in ks:
        if abs(k - params.x0) < 1e-12:
            sigma = implied_vol_fsabr_atm(t, params)
            rows.append((k, sigma, 0.0))
        else:
            pt = implied_vol_fsabr(float(k), t, params)
            rows.append((k, pt.implied_vol, pt.eta_star))
    return [f"{_fmt(k)},{_fmt(s)},{_fmt(d)},asymptotic" for k, s, d in rows]


def _smile_ldp(params, t, ks, n_steps, n_workers):
    def solve(k):
        kk = float(k)
        if abs(kk - params.x0) < 1e-12:
            kk = params.x0 + 1e-3  # numeric ATM limit
        sol = minimize_rate(kk, t, params, n_steps)
        sigma = abs(kk - params.x0) / math.sqrt(2.0 * t * sol.energy)
        return float(k), sigma, sol.energy

    rows = _map_ordered(solve, list(ks), n_workers)
    return [f"{_fmt(k)},{_fmt(s)},{_fmt(e)},ldp" for k, s, e in rows]


def _smile_mc(params, t, ks, n_paths, n_steps, seed, n_workers):
    xt, _ = mc_terminal(params, t, n_steps, n_paths, seed, n_workers)
    st = np.exp(xt)
    spot = math.exp(params.x0)
    rows = []
    for k in ks:
        strike = math.exp(float(k))
        is_call = k >= params.x0  # price the out-of-money side
        payoff = np.maximum(st - strike, 0.0) if is_call else np.maximum(strike - st, 0.0)
        price = float(np.mean(payoff))
        se_price = float(np.std(payoff, ddof=1) / math.sqrt(n_paths))
        sigma = bs_implied_vol(price, spot, strike, t, is_call)
        # delta-method standard error via the Black-Scholes vega
        eps = 1e-5
        vega = (bs_price(spot, strike, t, sigma + eps, is_call)
                - bs_price(spot, strike, t, sigma - eps, is_call)) / (2.0 * eps)
        se_sigma = se_price / vega if vega > 0.0 else float("inf")
        rows.append((float(k), sigma, se_sigma))
    return [f"{_fmt(k)},{_fmt(s)},nan,mc,{_fmt(se)}" for k, s, se in rows]


def cmd_smile(args) -> int:
    params, file_seed = load_params(args.params_file)
    seed = args.seed if args.seed is not None else file_seed
    if args.t <= 0.0:
        raise ValueError("--t must be positive")
    ks = _parse_k_range(args.k_range)
    if args.method == "asymptotic":
        body = _smile_asymptotic(params, args.t, ks)
        header = "k,sigma,diag,method"
    elif args.method == "ldp":
        body = _smile_ldp(params, args.t, ks, args.steps or 128, args.workers)
        header = "k,sigma,diag,method"
    else:
        body = _smile_mc(params, args.t, ks, args.paths, args.steps or 256, seed,
                         args.workers)
        header = "k,sigma,diag,method,std_err"
    _write_lines(args.out, [header] + body)
    return EXIT_OK


def cmd_validate(args) -> int:
    params, file_seed = load_params(args.params_file)
    seed = args.seed if args.seed is not None else file_seed
    checks = run_suites(args.suite, seed=seed)
    text = json.dumps(checks, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsabr",
        description="Fractional SABR small-time density and smile toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="joint density grid as CSV (x,y,p)")
    d.add_argument("params_file")
    d.add_argument("--t", type=float, required=True, help="expiry")
    d.add_argument("--grid-spec", required=True, help="nx:ny:xlo:xhi:ylo:yhi")
    d.add_argument("--out", default=None, help="output CSV path (default stdout)")
    d.add_argument("--workers", type=int, default=1)
    d.set_defaults(func=cmd_density)

    s = sub.add_parser("smile", help="implied vol smile as CSV (k,sigma,diag,method)")
    s.add_argument("params_file")
    s.add_argument("--t", type=float, required=True, help="expiry")
    s.add_argument("--k-range", required=True, help="lo:hi:step log strikes")
    s.add_argument("--method", choices=("asymptotic", "ldp", "mc"), default="asymptotic")
    s.add_argument("--paths", type=int, default=50_000, help="MC paths")
    s.add_argument("--steps", type=int, default=None,
                   help="time steps (default 128 ldp / 256 mc)")
    s.add_argument("--seed", type=int, default=None, help="overrides the file seed")
    s.add_argument("--out", default=None)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_smile)

    v = sub.add_parser("validate", help="run self-check suites, emit JSON")
    v.add_argument("params_file")
    v.add_argument("--suite", choices=("kernel", "density", "smile", "ldp", "laplace", "all"),
                   default="all")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
