"""Grid sweeps over the multiplier pair and their plot-ready output.

Each ``s_D`` value is one chain: its ``s_P`` points run in increasing
order, each warm-started from the previous converged marginal unless that
marginal has a near-empty coordinate.  Chains are
independent and may run in a process pool (``RDPF_THREADS`` caps it); the
output order is always ``s_D``-major regardless of completion order.
"""

import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .divergences import SupportError, parse_divergence
from .nam import NewtonConfig, solve_nam
from .prob import distortion_matrix, distribution, hamming
from .ram import RamConfig, solve_ram
from .report import ConvergenceError

log = logging.getLogger(__name__)

CSV_FIELDS = ("s_D", "s_P", "D", "P", "R", "R_L", "R_U", "iterations", "converged", "region")
LN2 = math.log(2.0)
# warm starts from marginals with a near-empty coordinate can certify a
# degenerate corner in one step (the gap vanishes when c underflows there)
WARM_START_MIN = 1e-6


class ConfigError(ValueError):
    pass


def parse_grid(spec):
    """``a:b:n`` (linear), ``log:a:b:n`` (geometric), a comma list or a sequence."""
    if isinstance(spec, str):
        parts = spec.split(":")
        try:
            if parts[0] == "log" and len(parts) == 4:
                a, b, n = float(parts[1]), float(parts[2]), int(parts[3])
                if a <= 0 or b <= 0:
                    raise ConfigError(f"log grid needs positive ends: {spec!r}")
                grid = np.geomspace(a, b, n)
            elif len(parts) == 3:
                grid = np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
            else:
                grid = np.array([float(t) for t in spec.split(",")])
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse grid {spec!r}") from exc
    else:
        grid = np.atleast_1d(np.asarray(spec, dtype=float))
    _check_grid(grid)
    return grid


def _check_grid(grid):
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigError("grids must be non-empty 1-D")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise ConfigError("grid entries must be finite and >= 0")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("grids must be strictly increasing")


@dataclass
class SweepConfig:
    source: np.ndarray
    distortion: object = "hamming"
    divergence: str = "kl"
    scheme: str = "nam"
    sD_grid: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    sP_grid: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    eps: float = 1e-8
    delta: float = 1e-12
    output_path: str = "-"
    format: str = "csv"
    units: str = "nats"
    sp_guard: str = "warn"
    max_iters: int = 100_000
    region_tol: float = 1e-8
    rate_floor: float = 1e-9

    def __post_init__(self):
        try:
            self.source = np.asarray(distribution(self.source))
        except ValueError as exc:
            raise ConfigError(f"source: {exc}") from exc
        self.sD_grid = parse_grid(self.sD_grid)
        self.sP_grid = parse_grid(self.sP_grid)
        if self.scheme not in ("nam", "ram"):
            raise ConfigError(f"scheme must be nam or ram, got {self.scheme!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.units not in ("nats", "bits"):
            raise ConfigError(f"units must be nats or bits, got {self.units!r}")
        if not (self.eps > 0 and self.delta > 0):
            raise ConfigError("eps and delta must be positive")
        try:
            spec = self.spec()
        except ValueError as exc:
            raise ConfigError(f"divergence: {exc}") from exc
        if self.scheme == "nam" and not spec.smooth:
            raise ConfigError(f"divergence {self.divergence!r} is not twice differentiable; "
                              "NAM cannot use it, run with --scheme ram")
        d = self.distortion_matrix()
        if d.shape[0] != self.source.size:
            raise ConfigError(f"distortion {d.shape} does not match source size {self.source.size}")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        if "source" not in data:
            raise ConfigError("config needs a 'source' distribution")
        return cls(**data)

    def spec(self):
        return parse_divergence(self.divergence)

    def distortion_matrix(self):
        if isinstance(self.distortion, str):
            if self.distortion != "hamming":
                raise ConfigError(f"unknown builtin distortion {self.distortion!r}")
            return hamming(self.source.size)
        try:
            return np.asarray(distortion_matrix(self.distortion))
        except ValueError as exc:
            raise ConfigError(f"distortion: {exc}") from exc


@dataclass
class SweepRow:
    s_D: float
    s_P: float
    D: float
    P: float
    R: float
    R_L: float
    R_U: float
    iterations: int
    converged: bool
    region: Optional[str]


def classify_region(s_D, s_P, rate, tol=1e-8, rate_floor=1e-9):
    """Return ``(region, flagged)``; ``flagged`` marks a point that fits no case cleanly."""
    if rate <= rate_floor:
        return "II", False
    if s_D > tol and s_P > tol:
        return "III", False
    if s_P <= tol:
        return "I", False
    return "I", True


def _solve_point(cfg, spec, d, s, q0):
    if cfg.scheme == "nam":
        ncfg = NewtonConfig(delta=cfg.delta, max_outer_iters=cfg.max_iters)
        try:
            return solve_nam(cfg.source, s, d, spec, eps=cfg.eps, cfg=ncfg, q0=q0)
        except ConvergenceError as exc:
            return exc.report
    rcfg = RamConfig(eps=cfg.eps, max_iters=cfg.max_iters, sp_guard=cfg.sp_guard)
    return solve_ram(cfg.source, s, d, spec, cfg=rcfg, q0=q0)


def _attempt(cfg, spec, d, s, q0):
    try:
        return _solve_point(cfg, spec, d, s, q0)
    except (FloatingPointError, SupportError, ConvergenceError) as exc:
        log.warning("s=%s failed: %s", s, exc)
        return None


def _run_chain(cfg, s_D):
    spec = cfg.spec()
    d = cfg.distortion_matrix()
    rows = []
    q0 = None
    for s_P in cfg.sP_grid:
        s = (float(s_D), float(s_P))
        rep = _attempt(cfg, spec, d, s, q0)
        if (rep is None or not rep.converged) and q0 is not None:
            # a near-degenerate warm start can trap the inner Newton; retry cold
            rep = _attempt(cfg, spec, d, s, None)
        if rep is None or not rep.converged:
            nan = math.nan
            rows.append(SweepRow(s[0], s[1],
                                 rep.D_s if rep else nan, rep.P_s if rep else nan,
                                 nan, nan, nan, rep.outer_iters if rep else 0, False, None))
            q0 = None
            continue
        region, flagged = classify_region(s[0], s[1], rep.rate, cfg.region_tol, cfg.rate_floor)
        if flagged:
            log.warning("s=%s does not fit a region cleanly; labelled I", s)
        rows.append(SweepRow(s[0], s[1], rep.D_s, rep.P_s, rep.rate, rep.lower_bound,
                             rep.upper_bound, rep.outer_iters, True, region))
        q0 = rep.final_marginal if rep.final_marginal.min() > WARM_START_MIN else None
    return rows


def _workers(n_chains):
    env = os.environ.get("RDPF_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_chains))


def run_sweep(cfg):
    """One row per grid point, ``s_D``-major."""
    workers = _workers(cfg.sD_grid.size)
    if workers == 1:
        chains = [_run_chain(cfg, s_D) for s_D in cfg.sD_grid]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chains = list(pool.map(_run_chain, [cfg] * cfg.sD_grid.size, cfg.sD_grid))
    return [row for chain in chains for row in chain]


def _scaled(rows, units):
    if units == "nats":
        return rows
    return [replace(r, R=r.R / LN2, R_L=r.R_L / LN2, R_U=r.R_U / LN2) for r in rows]


def _fmt(x):
    return format(x, ".17g")


def format_rows(rows, fmt="csv", units="nats"):
    rows = _scaled(rows, units)
    if fmt == "json":
        out = []
        for r in rows:
            obj = {}
            for k in CSV_FIELDS:
                v = getattr(r, k)
                if isinstance(v, float) and not math.isfinite(v):
                    v = None
                obj[k] = v
            out.append(obj)
        return json.dumps(out, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(r.s_D), _fmt(r.s_P), _fmt(r.D), _fmt(r.P), _fmt(r.R), _fmt(r.R_L),
                    _fmt(r.R_U), r.iterations, "true" if r.converged else "false",
                    r.region or ""])
    return buf.getvalue()


def write_output(rows, cfg):
    """Write rows to ``cfg.output_path`` (``-`` is stdout); returns the text written."""
    if not rows:
        raise ValueError("nothing to write")
    text = format_rows(rows, cfg.format, cfg.units)
    if cfg.output_path == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path_or_text):
    """Parse a sweep CSV back into rows (accepts a path or the text itself)."""
    if "\n" in path_or_text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="")
    with fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"unexpected header {rd.fieldnames}")
        return [SweepRow(
            float(r["s_D"]), float(r["s_P"]), float(r["D"]), float(r["P"]), float(r["R"]),
            float(r["R_L"]), float(r["R_U"]), int(r["iterations"]),
            r["converged"] == "true", r["region"] or None) for r in rd]

