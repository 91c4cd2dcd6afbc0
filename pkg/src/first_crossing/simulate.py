"""Euler-Maruyama simulation of jump-diffusion paths up to the first crossing.

Each path runs on its own counter-based stream ``(seed, path_index)``, so a
batch can be split across any number of worker threads and still produce
bit-identical samples.

Within a time step the continuous increment ``b dt + sigma sqrt(dt) Z`` is
spread linearly over the step; jumps fire at their exact exponential clock
times, cutting the step into pieces.  The crossing time is interpolated
linearly inside the piece where the path first reaches S, and the area is
integrated with the trapezoid rule up to that time.  Pure-jump processes are
therefore simulated without discretisation error.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .process import Barrier, ProcessSpec
from .rng import new_stream, next_exponential, next_normal, next_uniform


@dataclass(frozen=True)
class MCConfig:
    dt: float = 1e-3
    n_paths: int = 10_000
    t_max: float = 50.0
    seed: int = 0
    bridge_correction: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.n_paths >= 1:
            raise ValueError("n_paths must be at least 1")
        if not self.t_max >= 100 * self.dt:
            raise ValueError("t_max must be at least 100 dt")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class CrossingSample:
    tau: float
    area: float
    minimum: float
    censored: bool


@dataclass(frozen=True)
class SampleSet:
    """Outcomes of a batch of paths, indexed by path number."""

    tau: np.ndarray
    area: np.ndarray
    minimum: np.ndarray
    censored: np.ndarray
    start: float
    t_max: float

    def __len__(self):
        return self.tau.size

    def __getitem__(self, i) -> CrossingSample:
        return CrossingSample(float(self.tau[i]), float(self.area[i]),
                              float(self.minimum[i]), bool(self.censored[i]))

    @property
    def censored_fraction(self) -> float:
        return float(np.count_nonzero(self.censored)) / max(len(self), 1)

    def field(self, name: str, include_censored: bool = False) -> np.ndarray:
        if name not in ("tau", "area", "minimum"):
            raise ValueError(f"unknown sample field {name!r}")
        values = getattr(self, name)
        return values if include_censored else values[~self.censored]


def default_t_max(spec: ProcessSpec, barrier: Barrier) -> float:
    """50 closed-form mean crossing times when known, else 50 time units."""
    from . import closed_forms as cf

    try:
        if spec.preset_tag == "BM_DRIFT":
            return 50 * cf.bm_fpt_moments(barrier, spec.params["mu"]).first
        if spec.preset_tag == "POISSON":
            return 50 * cf.poisson_fpt_law(barrier, spec.params["theta"]).moments.first
        if spec.preset_tag == "OU":
            return 50 * cf.ou_mean_fpt(barrier, spec.params["mu"], spec.params["sigma"])
    except (ArithmeticError, ValueError):
        pass
    return 50.0


@njit(nogil=True, cache=False)
def _run_paths(drift, diffusion, p, rates, amps, x0, S, dt, t_max, seed, first, count,
               bridge, lo, hi, tau_out, area_out, min_out, cens_out):
    n_jump = rates.size
    clocks = np.empty(n_jump)
    for j in range(count):
        state, buf = new_stream(seed, first + j)
        for s in range(n_jump):
            clocks[s] = next_exponential(state, buf) / rates[s] if rates[s] > 0 else np.inf
        x = x0
        area = 0.0
        xmin = x0
        tau = t_max
        crossed = False
        k = 0
        while True:
            t = k * dt
            if t >= t_max:
                break
            h = min(dt, t_max - t)
            t_end = t + h
            sig = diffusion(x, p)
            incr = drift(x, p) * h
            if sig != 0.0:
                incr += sig * math.sqrt(h) * next_normal(state, buf)
            rate = incr / h
            tc = t
            xc = x
            # jumps inside (t, t_end]
            while True:
                s_next = -1
                t_next = t_end
                for s in range(n_jump):
                    if clocks[s] <= t_next:
                        t_next = clocks[s]
                        s_next = s
                if s_next < 0:
                    break
                x_pre = xc + rate * (t_next - tc)
                if x_pre >= S:
                    tau = tc + (S - xc) / rate
                    area += 0.5 * (xc + S) * (tau - tc)
                    crossed = True
                    break
                area += 0.5 * (xc + x_pre) * (t_next - tc)
                xmin = min(xmin, x_pre)
                xc = min(max(x_pre + amps[s_next], lo), hi)
                tc = t_next
                clocks[s_next] += next_exponential(state, buf) / rates[s_next]
                if xc >= S:
                    tau = tc
                    crossed = True
                    break
                xmin = min(xmin, xc)
            if crossed:
                break
            x_end = xc + rate * (t_end - tc)
            if x_end >= S:
                tau = tc + (S - xc) / (x_end - xc) * (t_end - tc)
                area += 0.5 * (xc + S) * (tau - tc)
                crossed = True
                break
            area += 0.5 * (xc + x_end) * (t_end - tc)
            x_end = min(max(x_end, lo), hi)
            if bridge and sig > 0.0 and tc == t:
                p_hit = math.exp(-2.0 * (S - xc) * (S - x_end) / (sig * sig * h))
                if next_uniform(state, buf) < p_hit:
                    # timed at mid-step; undo the second half of the trapezoid
                    area -= 0.5 * (xc + x_end) * h
                    tau = t + 0.5 * h
                    area += 0.5 * (xc + S) * 0.5 * h
                    crossed = True
                    break
            xmin = min(xmin, x_end)
            x = x_end
            k += 1
        tau_out[j] = tau
        area_out[j] = area
        min_out[j] = xmin
        cens_out[j] = not crossed


def _call_kernel(spec, barrier, cfg, first, count):
    drift, diffusion, params = spec.simulation_kernels()
    rates = np.array([r for r, _ in spec.jumps], dtype=np.float64)
    amps = np.array([a for _, a in spec.jumps], dtype=np.float64)
    lo, hi = spec.state_interval
    out = (np.empty(count), np.empty(count), np.empty(count), np.empty(count, dtype=np.bool_))
    _run_paths(drift, diffusion, np.asarray(params, dtype=np.float64), rates, amps,
               float(barrier.start), float(barrier.level), float(cfg.dt), float(cfg.t_max),
               np.uint64(cfg.seed), np.int64(first), np.int64(count),
               bool(cfg.bridge_correction), float(lo), float(hi), *out)
    return out


def _check_start(spec, barrier):
    if not spec.contains(barrier.start):
        raise ValueError(f"start {barrier.start} outside the state interval")


def simulate_path(spec: ProcessSpec, barrier: Barrier, cfg: MCConfig,
                  path_index: int) -> CrossingSample:
    """Simulate path ``path_index`` of the batch described by ``cfg``."""
    _check_start(spec, barrier)
    tau, area, xmin, cens = _call_kernel(spec, barrier, cfg, path_index, 1)
    return CrossingSample(float(tau[0]), float(area[0]), float(xmin[0]), bool(cens[0]))


def simulate_paths(spec: ProcessSpec, barrier: Barrier, cfg: MCConfig,
                   workers: int = 1) -> SampleSet:
    """Simulate paths ``0 .. n_paths-1``; the result does not depend on ``workers``."""
    _check_start(spec, barrier)
    n = cfg.n_paths
    # compile outside the pool
    _call_kernel(spec, barrier, cfg, 0, 0)
    workers = max(1, min(int(workers), n))
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)
    tau, area, xmin = np.empty(n), np.empty(n), np.empty(n)
    cens = np.empty(n, dtype=np.bool_)

    def run(w):
        a, b = bounds[w], bounds[w + 1]
        res = _call_kernel(spec, barrier, cfg, int(a), int(b - a))
        tau[a:b], area[a:b], xmin[a:b], cens[a:b] = res

    if workers == 1:
        run(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(workers)))
    return SampleSet(tau, area, xmin, cens, float(barrier.start), float(cfg.t_max))
