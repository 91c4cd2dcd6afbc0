"""Monte Carlo estimators built on :mod:`first_crossing.simulate`.

Reductions walk the samples in path order in fixed chunks of
``CHUNK`` so the aggregate is a deterministic function of the samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf
from .closed_forms import LaplaceCurve
from .process import Barrier, ProcessSpec
from .simulate import MCConfig, SampleSet, simulate_paths
from .special import gamma_lt

log = logging.getLogger(__name__)

CHUNK = 4096
UNRELIABLE_CENSORING = 0.5


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    n_effective: int
    censored_fraction: float

    def z_score(self, reference: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.value == reference else math.inf
        return (self.value - reference) / self.stderr


def _chunked_sum(values: np.ndarray) -> float:
    partials = [values[i:i + CHUNK].sum() for i in range(0, values.size, CHUNK)]
    total = 0.0
    for p in partials:
        total += float(p)
    return total


def estimate_mean(values: np.ndarray, censored_fraction: float = 0.0) -> MomentEstimate:
    """Sample mean with standard error ``std(ddof=1) / sqrt(n)``."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        return MomentEstimate(math.nan, math.nan, 0, censored_fraction)
    mean = _chunked_sum(values) / n
    if n == 1:
        return MomentEstimate(mean, 0.0, 1, censored_fraction)
    var = _chunked_sum((values - mean) ** 2) / (n - 1)
    return MomentEstimate(mean, math.sqrt(var / n), n, censored_fraction)


def estimate_variance(values: np.ndarray, censored_fraction: float = 0.0) -> MomentEstimate:
    """Unbiased sample variance; stderr ``sqrt((m4 - s^4) / n)`` from the fourth central moment."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        return MomentEstimate(math.nan, math.nan, n, censored_fraction)
    mean = _chunked_sum(values) / n
    dev2 = (values - mean) ** 2
    var = _chunked_sum(dev2) / (n - 1)
    m4 = _chunked_sum(dev2 * dev2) / n
    return MomentEstimate(var, math.sqrt(max(m4 - var * var, 0.0) / n), n, censored_fraction)


@dataclass(frozen=True)
class CrossingStats:
    tau_first: MomentEstimate
    tau_second: MomentEstimate
    area_first: MomentEstimate
    area_second: MomentEstimate
    tau_variance: MomentEstimate
    area_variance: MomentEstimate
    min_samples: np.ndarray
    censored_fraction: float
    reliable: bool
    samples: SampleSet


def estimate_crossing_stats(spec: ProcessSpec, barrier: Barrier, cfg: MCConfig,
                            workers: int = 1, samples: SampleSet | None = None) -> CrossingStats:
    """First two moments of the crossing time and area.

    Censored paths are dropped from the moments but reported through
    ``censored_fraction``; above one half the result is flagged unreliable.
    """
    if samples is None:
        samples = simulate_paths(spec, barrier, cfg, workers=workers)
    cfrac = samples.censored_fraction
    tau = samples.field("tau")
    area = samples.field("area")
    reliable = cfrac <= UNRELIABLE_CENSORING
    if not reliable:
        log.warning("%.1f%% of paths censored at t_max=%g; estimates unreliable",
                    100 * cfrac, cfg.t_max)
    return CrossingStats(
        estimate_mean(tau, cfrac), estimate_mean(tau * tau, cfrac),
        estimate_mean(area, cfrac), estimate_mean(area * area, cfrac),
        estimate_variance(tau, cfrac), estimate_variance(area, cfrac),
        samples.minimum, cfrac, reliable, samples,
    )


def empirical_lt(samples, field: str, lambdas, accept_bias: bool = False) -> LaplaceCurve:
    """Sample mean of ``exp(-lam * value)`` on a grid of ``lam``.

    Censored samples are refused unless ``accept_bias`` is set.  Values can
    exceed one when the field takes negative values.
    """
    if isinstance(samples, SampleSet):
        if samples.censored.any() and not accept_bias:
            raise ValueError("censored samples present; filter them or pass accept_bias=True")
        values = samples.field(field, include_censored=accept_bias)
    else:
        values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample set")
    lambdas = np.asarray(lambdas, dtype=float)
    with np.errstate(over="ignore"):
        curve = np.array([_chunked_sum(np.exp(-lam * values)) / values.size for lam in lambdas])
    return LaplaceCurve(lambdas, curve, "empirical")


def gamma_matched_lt(values, lambdas) -> LaplaceCurve:
    """Transform of the Gamma law sharing the samples' mean and variance."""
    est = estimate_mean(values)
    var = float(np.var(values, ddof=1))
    return LaplaceCurve(np.asarray(lambdas, dtype=float), gamma_lt(est.value, var, lambdas),
                        "gamma-fit")


@dataclass(frozen=True)
class HistogramTable:
    edges: np.ndarray
    density: np.ndarray
    centroids: np.ndarray
    censored_fraction: float

    @property
    def widths(self):
        return np.diff(self.edges)

    def mass(self) -> float:
        return float(np.sum(self.density * self.widths))

    def mean(self) -> float:
        """Mean of the binned samples (bin centroids weighted by mass)."""
        w = self.density * self.widths
        return float(np.sum(self.centroids * w) / np.sum(w))

    def peak(self) -> float:
        return float(self.density.max())


def histogram(samples, field: str, bins: int = 50, range=None) -> HistogramTable:
    """Density histogram of an uncensored sample field.

    Densities are normalised by the total path count, so they integrate to
    ``1 - censored_fraction`` (less any mass outside ``range``).
    """
    if isinstance(samples, SampleSet):
        values = samples.field(field)
        total = len(samples)
        cfrac = samples.censored_fraction
    else:
        values = np.asarray(samples, dtype=float)
        total = values.size
        cfrac = 0.0
    if total < 2:
        raise ValueError("need at least two samples")
    lo, hi = (values.min(), values.max()) if range is None else range
    if not hi > lo:
        raise ValueError(f"degenerate histogram range ({lo}, {hi})")
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    sums, _ = np.histogram(values, bins=edges, weights=values)
    with np.errstate(invalid="ignore"):
        centroids = np.where(counts > 0, sums / np.maximum(counts, 1), 0.5 * (edges[1:] + edges[:-1]))
    density = counts / (total * np.diff(edges))
    return HistogramTable(edges, density, centroids, cfrac)


def ks_statistic(values, cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``values`` and ``cdf``."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def ks_band(n: int, level: float = 0.95) -> float:
    """Asymptotic Kolmogorov critical value (1.36 / sqrt(n) at 95%)."""
    from scipy.special import kolmogi
    return float(kolmogi(1 - level) / math.sqrt(n))


def minimum_cdf(spec: ProcessSpec, barrier: Barrier):
    """Vectorised closed-form CDF of the pre-crossing minimum for the preset."""
    if spec.preset_tag == "BM_DRIFT":
        mu = spec.params["mu"]
        return lambda z: cf.bm_min_cdf(z, barrier, mu)
    if spec.preset_tag == "OU":
        mu, sigma = spec.params["mu"], spec.params["sigma"]

        def ou(z):
            z = np.asarray(z, dtype=float)
            lo = float(min(z.min(), barrier.start))
            if lo >= barrier.start:
                return np.ones_like(z)
            grid = np.linspace(lo, barrier.start, 4001)
            vals = np.array([cf.ou_min_cdf(g, barrier, mu, sigma) for g in grid])
            return np.where(z >= barrier.start, 1.0, np.interp(z, grid, vals))

        return ou
    raise ValueError(f"no closed-form minimum law for {spec.describe()}")


def min_law_check(samples: SampleSet, spec: ProcessSpec, barrier: Barrier) -> float:
    """KS distance between simulated pre-crossing minima and the closed-form law.

    Censored paths enter with their running minimum, which can only
    overstate the true minimum.
    """
    cdf = minimum_cdf(spec, barrier)
    return ks_statistic(samples.minimum, cdf)
