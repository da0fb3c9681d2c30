"""Rate-distortion-perception functions of discrete memoryless sources.

Two alternating-minimization solvers (Newton-based NAM and relaxed RAM)
with certified rate bounds, a library of f-divergences, spectral
convergence diagnostics and an independent brute-force oracle.
"""

from .bounds import BoundsPair, bounds, gap_omega
from .diagnostics import (SpectralReport, distortion_full_rank, fit_convergence_rate,
                          fixed_point_jacobian_oam, fixed_point_jacobian_ram, spectral_report)
from .divergences import (FDivergenceSpec, SupportError, eval_divergence, make_arctan_tv,
                          make_builtin, make_l1, parse_divergence)
from .kernel import BACKEND, LagrangePair
from .nam import NewtonConfig, solve_nam
from .prob import DimensionError, binary_entropy, hamming, mutual_information
from .ram import RamConfig, SpGuard, solve_ram, sp_max_estimate
from .report import ConvergenceError, SolveReport
from .sweep import ConfigError, SweepConfig, SweepRow, run_sweep, write_output

__version__ = "0.1.0"
