"""``rdpf`` command line: sweep, solve, diagnose, oracle.

Exit codes: 0 when everything converged, 2 when some point did not
(output is still written), 1 on configuration or I/O errors.
"""

import argparse
import json
import logging
import math
import sys

import numpy as np

from .diagnostics import spectral_report
from .nam import NewtonConfig, solve_nam
from .oracle import brute_force_lagrangian
from .ram import RamConfig, solve_ram
from .report import ConvergenceError
from .sweep import ConfigError, SweepConfig, run_sweep, write_output

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2

# CLI flag -> SweepConfig field
_OVERRIDES = {
    "source": "source", "distortion": "distortion", "scheme": "scheme",
    "divergence": "divergence", "eps": "eps", "delta": "delta", "out": "output_path",
    "format": "format", "units": "units", "sd_grid": "sD_grid", "sp_grid": "sP_grid",
    "sp_guard": "sp_guard", "max_iters": "max_iters",
}


def _common(sub):
    sub.add_argument("--config", help="JSON config file; flags override its fields")
    sub.add_argument("--source", help="comma-separated source distribution, e.g. 0.85,0.15")
    sub.add_argument("--distortion", help="'hamming' or a JSON matrix")
    sub.add_argument("--divergence", help="kl | js | tv | chi2 | alpha:<a> | arctan_tv:<n>")
    sub.add_argument("--scheme", choices=("nam", "ram"))
    sub.add_argument("--eps", type=float)
    sub.add_argument("--delta", type=float)
    sub.add_argument("--max-iters", type=int)
    sub.add_argument("--sp-guard", choices=("off", "warn", "reject"))
    sub.add_argument("--units", choices=("nats", "bits"))
    sub.add_argument("-v", "--verbose", action="store_true")


def _point(sub):
    sub.add_argument("--sd", type=float, required=True, help="distortion multiplier s_D")
    sub.add_argument("--sp", type=float, required=True, help="perception multiplier s_P")


def build_parser():
    ap = argparse.ArgumentParser(prog="rdpf", description=__doc__.splitlines()[0])
    subs = ap.add_subparsers(dest="command", required=True)

    sw = subs.add_parser("sweep", help="sweep an (s_D, s_P) grid and emit CSV/JSON")
    _common(sw)
    sw.add_argument("--sd-grid", help="a:b:n, log:a:b:n or a comma list")
    sw.add_argument("--sp-grid", help="a:b:n, log:a:b:n or a comma list")
    sw.add_argument("--out", help="output file ('-' for stdout)")
    sw.add_argument("--format", choices=("csv", "json"))

    so = subs.add_parser("solve", help="solve one multiplier pair, print the report as JSON")
    _common(so)
    _point(so)
    so.add_argument("--history", action="store_true", help="include per-iteration history")

    di = subs.add_parser("diagnose", help="spectral audit of the scheme at one point")
    _common(di)
    _point(di)

    orc = subs.add_parser("oracle", help="brute-force cross-check at one point (|X| <= 3)")
    _common(orc)
    _point(orc)
    orc.add_argument("--grid-n", type=int, default=64)
    orc.add_argument("--refine", type=int, default=5)
    return ap


def _parse_value(key, text):
    if key == "source":
        return [float(t) for t in text.split(",")]
    if key == "distortion" and text != "hamming":
        return json.loads(text)
    return text


def load_config(args):
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    for flag, key in _OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is not None:
            data[key] = _parse_value(flag, val) if isinstance(val, str) else val
    return SweepConfig.from_dict(data)


def _dump(obj):
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return clean(v.item())
        return v
    sys.stdout.write(json.dumps(clean(obj), indent=1) + "\n")


def _solve(cfg, s, record=False):
    spec = cfg.spec()
    d = cfg.distortion_matrix()
    if cfg.scheme == "nam":
        ncfg = NewtonConfig(delta=cfg.delta, max_outer_iters=cfg.max_iters)
        return solve_nam(cfg.source, s, d, spec, eps=cfg.eps, cfg=ncfg, record=record)
    rcfg = RamConfig(eps=cfg.eps, max_iters=cfg.max_iters, sp_guard=cfg.sp_guard)
    return solve_ram(cfg.source, s, d, spec, cfg=rcfg, record=record)


def cmd_sweep(cfg, args):
    rows = run_sweep(cfg)
    write_output(rows, cfg)
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NOT_CONVERGED


def cmd_solve(cfg, args):
    try:
        rep = _solve(cfg, (args.sd, args.sp), record=args.history)
    except ConvergenceError as exc:
        if exc.report is None:
            logging.error("%s", exc)
            return EXIT_NOT_CONVERGED
        rep = exc.report
    out = rep.to_dict(history=args.history)
    if cfg.units == "bits":
        for k in ("R", "R_L", "R_U"):
            out[k] /= math.log(2)
    _dump(out)
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def cmd_diagnose(cfg, args):
    try:
        rep = spectral_report(cfg.source, (args.sd, args.sp), cfg.distortion_matrix(),
                              cfg.spec(), scheme=cfg.scheme)
    except ConvergenceError as exc:
        logging.error("%s", exc)
        return EXIT_NOT_CONVERGED
    _dump(rep.to_dict())
    return EXIT_OK


def cmd_oracle(cfg, args):
    s = (args.sd, args.sp)
    orc = brute_force_lagrangian(cfg.source, s, cfg.distortion_matrix(), cfg.spec(),
                                 grid_n=args.grid_n, refine_levels=args.refine)
    out = {"oracle": {"lagrangian": orc.lagrangian_value, "D": orc.D_at_min,
                      "P": orc.P_at_min, "Q": orc.argmin_Q.tolist()}}
    code = EXIT_OK
    try:
        rep = _solve(cfg, s)
        out["solver"] = {"scheme": cfg.scheme, "lagrangian": rep.lagrangian,
                         "converged": rep.converged}
        out["difference"] = rep.lagrangian - orc.lagrangian_value
        if not rep.converged:
            code = EXIT_NOT_CONVERGED
    except ConvergenceError as exc:
        out["solver"] = {"scheme": cfg.scheme, "error": str(exc)}
        code = EXIT_NOT_CONVERGED
    _dump(out)
    return code


COMMANDS = {"sweep": cmd_sweep, "solve": cmd_solve, "diagnose": cmd_diagnose,
            "oracle": cmd_oracle}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ValueError, OSError) as exc:
        # ConfigError and JSON decode errors are ValueErrors too
        print(f"rdpf: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FloatingPointError as exc:
        print(f"rdpf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
