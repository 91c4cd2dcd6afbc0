"""Shape of the first-crossing area law as the drift grows.

The area can be negative because the path may wander far below zero before
it reaches the barrier.  This makes the empirical Laplace transform grow
without bound for large lambda, while a Gamma law with the same two moments
stays below one.

Run with ``python3 demos/02_area_law.py``.
"""

# %% Setup
import numpy as np

from first_crossing import closed_forms as cf
from first_crossing import estimators as est
from first_crossing.process import Barrier, make_preset
from first_crossing.simulate import MCConfig, simulate_paths
from first_crossing.special import gamma_lt

barrier = Barrier(2.0, 1.0)
n_paths = 20_000

# %% Histograms on a common binning
samples = {mu: simulate_paths(make_preset("BM_DRIFT", mu=mu), barrier,
                              MCConfig(dt=1e-3, n_paths=n_paths, seed=2))
           for mu in (1.0, 1.2, 1.5, 2.0, 3.0)}
pooled = np.concatenate([s.field("area") for s in samples.values()])
lo, hi = np.quantile(pooled, [0.001, 0.999])
for mu, s in samples.items():
    h = est.histogram(s, "area", bins=60, range=(lo, hi))
    area = s.field("area")
    print(f"mu={mu:<4g} peak {h.peak():.3f}  mean {area.mean():+.3f}  "
          f"min {area.min():+.2f}  P(A<0) {np.mean(area < 0):.3f}")

# %% Laplace transform against the moment-matched Gamma law
mu = 1.5
area = samples[mu].field("area")
moments = cf.bm_area_moments(barrier, mu)
lams = np.array([0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0])
emp = est.empirical_lt(area, "area", lams).values
gam = gamma_lt(moments.first, moments.variance, lams)
print("lambda   empirical        gamma")
for lam, e, g in zip(lams, emp, gam):
    print(f"{lam:6.2f}   {e:12.6g}   {g:.6f}")
