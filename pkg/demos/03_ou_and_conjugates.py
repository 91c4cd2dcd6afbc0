"""Ornstein-Uhlenbeck crossing times and diffusions conjugated to Brownian motion.

Run with ``python3 demos/03_ou_and_conjugates.py``.
"""

# %% Setup
import numpy as np

from first_crossing import closed_forms as cf
from first_crossing import estimators as est
from first_crossing.pdde import Grid1D, default_x_min, solve_min_bvp, solve_moment_bvp
from first_crossing.process import Barrier, conjugation_map, make_preset
from first_crossing.simulate import MCConfig, simulate_paths

# %% OU mean crossing time: series, finite differences, simulation
mu, sigma = 1.0, 1.0
ou = make_preset("OU", mu=mu, sigma=sigma)
barrier = Barrier(1.0, 0.0)
series = cf.ou_mean_fpt(barrier, mu, sigma)
grid = Grid1D.from_spacing(default_x_min(ou, barrier.level), barrier.level, 1e-3)
bvp = solve_moment_bvp(ou, 1.0, 1, grid).at(barrier.start)
mc = est.estimate_crossing_stats(ou, barrier, MCConfig(n_paths=10_000, seed=3,
                                                       bridge_correction=True)).tau_first
print(f"series {series:.8f}   BVP {bvp:.8f}   MC {mc.value:.4f} +- {mc.stderr:.4f}")

# %% OU minimum before crossing
for z in (-0.5, -1.0, -1.5):
    w = solve_min_bvp(ou, z, 1.0, Grid1D.from_spacing(z, 1.0, 1e-3)).at(0.0)
    print(f"P(min <= {z:+.1f}) quadrature {cf.ou_min_cdf(z, barrier, mu, sigma):.8f}  BVP {w:.8f}")

# %% A decaying boundary through the time change
t = np.linspace(0.25, 3.0, 6)
dens = cf.ou_moving_boundary_fpt_density(t, 0.0, 1.0, mu, sigma)
print("density of the first hit of exp(-t):", np.round(dens, 5))

# %% CIR with quarter drift: median crossing time from the conjugated walk
cir = make_preset("CIR_QUARTER")
u = conjugation_map("CIR_QUARTER")
b = Barrier(2.0, 1.0)
s = simulate_paths(cir, b, MCConfig(dt=1e-3, n_paths=4000, t_max=2000.0, seed=4,
                                    bridge_correction=True))
d = u.forward(b.level) - u.forward(b.start)
print(f"CIR median tau {np.median(s.tau):.4f}  vs  {d * d / 0.6745 ** 2:.4f}")
