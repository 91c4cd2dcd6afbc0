import math

import numpy as np
import pytest
from scipy import stats

from first_crossing import closed_forms as cf
from first_crossing.estimators import estimate_mean, ks_band, ks_statistic
from first_crossing.process import Barrier, ProcessSpec, conjugation_map, make_preset
from first_crossing.simulate import MCConfig, default_t_max, simulate_path, simulate_paths


def test_config_validation():
    with pytest.raises(ValueError):
        MCConfig(dt=0.0)
    with pytest.raises(ValueError):
        MCConfig(n_paths=0)
    with pytest.raises(ValueError):
        MCConfig(dt=1.0, t_max=50.0)
    with pytest.raises(ValueError):
        MCConfig(seed=-1)


def test_start_outside_state_interval():
    with pytest.raises(ValueError):
        simulate_paths(make_preset("WF_CONJ"), Barrier(0.9, -0.1), MCConfig(n_paths=2))


def test_default_t_max():
    assert default_t_max(make_preset("BM_DRIFT", mu=1.0), Barrier(2.0, 1.0)) == 50.0
    assert default_t_max(make_preset("POISSON", theta=2.0), Barrier(4.0, 1.0)) == 75.0
    assert default_t_max(make_preset("BM_DRIFT", mu=0.0), Barrier(2.0, 1.0)) == 50.0


def test_poisson_crossing_time_is_exact():
    spec, b = make_preset("POISSON", theta=2.0), Barrier(4.0, 1.0)
    n = 20_000
    coarse = simulate_paths(spec, b, MCConfig(dt=0.05, n_paths=n, seed=3))
    fine = simulate_paths(spec, b, MCConfig(dt=1e-3, n_paths=n, seed=3))
    assert not coarse.censored.any()
    # the step size only cuts the clock, it never moves the jump times
    assert np.allclose(coarse.tau, fine.tau, rtol=1e-12, atol=1e-12)
    ks = ks_statistic(coarse.tau, lambda t: stats.gamma.cdf(t, 3, scale=0.5))
    assert ks <= ks_band(n)
    # area is piecewise constant * holding time: x + j on each visit
    assert np.all(coarse.area >= coarse.tau * 1.0 - 1e-12)
    assert np.all(coarse.minimum == 1.0)


def test_poisson_non_integer_distance():
    spec, b = make_preset("POISSON", theta=1.0), Barrier(2.5, 1.0)
    s = simulate_paths(spec, b, MCConfig(dt=0.01, n_paths=5000, seed=1))
    assert ks_statistic(s.tau, lambda t: stats.gamma.cdf(t, 2, scale=1.0)) <= ks_band(5000)


def test_wf_area_bounded_by_tau():
    spec, b = make_preset("WF_CONJ"), Barrier(0.9, 0.3)
    s = simulate_paths(spec, b, MCConfig(dt=1e-3, n_paths=2000, seed=5))
    assert np.all(s.area >= 0.0)
    assert np.all(s.area <= s.tau + 1e-12)
    assert np.all((s.minimum >= 0.0) & (s.minimum <= 0.3))


def test_sample_invariants(bm_samples):
    s = bm_samples
    assert np.all(s.minimum <= s.start)
    assert np.all(s.tau[s.censored] == s.t_max)
    assert np.all(s.tau > 0)
    one = s[0]
    assert (one.tau, one.area) == (s.tau[0], s.area[0])


def test_bm_mean_crossing_time(bm_samples):
    est = estimate_mean(bm_samples.field("tau"))
    assert abs(est.z_score(1.0)) < 3
    est = estimate_mean(bm_samples.field("area"))
    assert abs(est.z_score(1.0)) < 3


def test_constant_drift_path_is_deterministic():
    b0 = 0.5
    spec = ProcessSpec(lambda x: b0, lambda x: 0.0)
    cfg = MCConfig(dt=1e-3, n_paths=3, seed=0)
    s = simulate_paths(spec, Barrier(1.0, 0.2), cfg)
    tau = 0.8 / b0
    assert np.allclose(s.tau, tau, atol=1e-12)
    assert np.allclose(s.area, 0.2 * tau + b0 * tau ** 2 / 2, atol=cfg.dt ** 2)
    assert np.all(s.minimum == 0.2)


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_change_samples(workers):
    spec, b = make_preset("LEVY", beta=0.5, theta=1.0), Barrier(2.0, 1.0)
    cfg = MCConfig(dt=1e-3, n_paths=257, seed=99)
    one = simulate_paths(spec, b, cfg, workers=1)
    many = simulate_paths(spec, b, cfg, workers=workers)
    for name in ("tau", "area", "minimum", "censored"):
        assert np.array_equal(getattr(one, name), getattr(many, name))


def test_single_path_matches_batch():
    spec, b = make_preset("OU", mu=1.0, sigma=1.0), Barrier(1.0, 0.0)
    cfg = MCConfig(dt=1e-3, n_paths=20, seed=7)
    batch = simulate_paths(spec, b, cfg)
    for i in (0, 13, 19):
        one = simulate_path(spec, b, cfg, i)
        assert one.tau == batch.tau[i] and one.area == batch.area[i]


def test_seeds_give_different_paths():
    spec, b = make_preset("BM_DRIFT", mu=1.0), Barrier(2.0, 1.0)
    a = simulate_paths(spec, b, MCConfig(n_paths=50, seed=1))
    c = simulate_paths(spec, b, MCConfig(n_paths=50, seed=2))
    assert not np.array_equal(a.tau, c.tau)


def test_censoring_at_horizon():
    spec, b = make_preset("BM_DRIFT", mu=-1.0), Barrier(2.0, 1.0)
    s = simulate_paths(spec, b, MCConfig(dt=1e-2, n_paths=500, t_max=5.0, seed=4))
    # P(ever crossing) = exp(-2) for drift -1 over distance 1
    assert 0.75 < s.censored_fraction < 0.95
    assert np.all(s.tau[s.censored] == 5.0)


def test_bridge_correction_reduces_bias():
    spec, b = make_preset("BM_DRIFT", mu=1.0), Barrier(2.0, 1.0)
    plain = simulate_paths(spec, b, MCConfig(dt=1e-2, n_paths=20_000, seed=8))
    bridged = simulate_paths(spec, b, MCConfig(dt=1e-2, n_paths=20_000, seed=8, bridge_correction=True))
    assert abs(plain.tau.mean() - 1.0) > abs(bridged.tau.mean() - 1.0)
    assert abs(estimate_mean(bridged.tau).z_score(1.0)) < 3


def test_cir_median_matches_conjugated_brownian_motion():
    spec, b = make_preset("CIR_QUARTER"), Barrier(2.0, 1.0)
    u = conjugation_map("CIR_QUARTER")
    s = simulate_paths(spec, b, MCConfig(dt=1e-3, n_paths=4000, t_max=2000.0, seed=21,
                                         bridge_correction=True))
    d = u.forward(2.0) - u.forward(1.0)
    ref = d * d / 0.6745 ** 2
    assert abs(np.median(s.tau) / ref - 1) < 0.05


def test_ou_mean_crossing_time():
    spec, b = make_preset("OU", mu=1.0, sigma=1.0), Barrier(1.0, 0.0)
    s = simulate_paths(spec, b, MCConfig(dt=1e-3, n_paths=5000, seed=2, bridge_correction=True))
    ref = cf.ou_mean_fpt(b, 1.0, 1.0)
    assert abs(estimate_mean(s.field("tau")).z_score(ref)) < 3
