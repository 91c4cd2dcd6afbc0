"""Upward unit jumps: the Poisson process and Brownian motion with Poisson jumps.

Jumps can overshoot the barrier, so the equations for the transforms and
moments hold on the whole half-line at and above S.  The solver couples each
node to the node one unit to the right.

Run with ``python3 demos/04_jumps.py``.
"""

# %% Setup
import numpy as np
from scipy import stats

from first_crossing import closed_forms as cf
from first_crossing import estimators as est
from first_crossing.pdde import Grid1D, solve_pdde_levy
from first_crossing.process import Barrier, finite_crossing_check, make_preset
from first_crossing.simulate import MCConfig, simulate_paths

# %% Poisson process: exact simulation and the Gamma law
barrier, theta = Barrier(4.0, 1.0), 2.0
law = cf.poisson_fpt_law(barrier, theta)
s = simulate_paths(make_preset("POISSON", theta=theta), barrier, MCConfig(n_paths=20_000, seed=5))
ks = est.ks_statistic(s.tau, lambda t: stats.gamma.cdf(t, law.shape, scale=1 / law.rate))
print(f"Gamma({law.shape}, {law.rate:g}); KS {ks:.4f} vs band {est.ks_band(len(s)):.4f}")
m = cf.poisson_area_moments(barrier, theta)
print(f"area mean {s.area.mean():.4f} (exact {m.first})  variance {s.area.var(ddof=1):.4f} "
      f"(exact {m.variance})")

# %% Brownian motion with drift and jumps
beta, theta = 0.5, 1.0
spec = make_preset("LEVY", beta=beta, theta=theta)
b = Barrier(2.0, 1.0)
print("finite crossing:", finite_crossing_check(spec, b).value)
grid = Grid1D.from_spacing(b.level - 30.0, b.level, 1e-2)
mean_fpt = solve_pdde_levy(beta, theta, 0.0, "mean-fpt", grid).at(b.start)
mc = est.estimate_crossing_stats(spec, b, MCConfig(n_paths=10_000, seed=6, bridge_correction=True))
print(f"mean crossing time: PDDE {mean_fpt:.5f}  MC {mc.tau_first.value:.4f} +- {mc.tau_first.stderr:.4f}")
for lam in (0.5, 1.0, 2.0):
    lt = solve_pdde_levy(beta, theta, lam, "fpt-lt", grid).at(b.start)
    emp = est.empirical_lt(mc.samples.field("tau"), "tau", [lam]).values[0]
    print(f"E exp(-{lam:g} tau): PDDE {lt:.5f}  MC {emp:.5f}")
