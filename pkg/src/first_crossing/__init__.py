"""First-crossing times and areas of one-dimensional jump-diffusions.

Closed forms, Monte Carlo estimation and finite-difference solvers for the
time ``tau`` a process started at ``x`` needs to reach a level ``S`` and the
area ``int_0^tau X(t) dt`` swept until then.
"""

from .closed_forms import (
    GammaLaw,
    LaplaceCurve,
    MomentPair,
    MomentUndefined,
    bm_area_mean,
    bm_area_moments,
    bm_area_second,
    bm_fpt_lt,
    bm_fpt_moments,
    bm_min_cdf,
    driftless_barrier_area_lt,
    ou_mean_fpt,
    ou_min_cdf,
    poisson_area_moments,
    poisson_fpt_law,
)
from .estimators import (
    MomentEstimate,
    empirical_lt,
    estimate_crossing_stats,
    histogram,
    min_law_check,
)
from .pdde import (
    BVPSolution,
    Grid1D,
    SolverError,
    grid_refine_study,
    solve_lt_bvp,
    solve_min_bvp,
    solve_moment_bvp,
    solve_pdde_levy,
)
from .process import Barrier, ProcessSpec, apply_generator, make_preset, parse_preset
from .simulate import MCConfig, SampleSet, simulate_path, simulate_paths

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
