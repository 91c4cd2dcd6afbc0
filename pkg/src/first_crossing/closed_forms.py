"""Explicit laws and moments for the worked-example processes.

Functions take a :class:`~first_crossing.process.Barrier` (level S, start x)
plus the preset parameters.  Where a moment does not exist the functions
raise :class:`MomentUndefined` rather than return a number.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .process import Barrier
from .special import airy_ai, phi1, psi1

INTEGER_TOL = 1e-9
QUAD_RTOL = 1e-10
QUAD_ATOL = 1e-14


class MomentUndefined(ArithmeticError):
    """The requested moment is infinite or does not exist."""


@dataclass(frozen=True)
class MomentPair:
    first: float
    second: float | None = None
    variance: float | None = None

    def __post_init__(self):
        if self.second is not None and self.variance is None:
            object.__setattr__(self, "variance", self.second - self.first ** 2)
        if self.second is not None and self.second < self.first ** 2 - 1e-12:
            raise ValueError("second moment below squared mean")


@dataclass(frozen=True)
class LaplaceCurve:
    lambdas: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if np.any(np.diff(lam) < 0) or np.any(lam < 0):
            raise ValueError("lambda grid must be sorted and non-negative")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class GammaLaw:
    shape: int
    rate: float
    moments: MomentPair


def _quad(fn, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(fn, a, b, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL,
                                      limit=200, **kw)
        except integrate.IntegrationWarning as exc:
            raise ArithmeticError(f"quadrature failed on [{a}, {b}]: {exc}") from exc
    return value


def _positive_drift(mu, what):
    if not mu > 0:
        raise MomentUndefined(f"{what} requires mu > 0 (infinite or undefined for mu={mu})")


# Brownian motion with drift


def bm_fpt_density(t, barrier: Barrier, mu: float):
    """Inverse-Gaussian density of the first crossing time."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("density is defined for t > 0")
    d = barrier.distance
    out = d / (math.sqrt(2 * math.pi) * t ** 1.5) * np.exp(-(d - mu * t) ** 2 / (2 * t))
    return float(out) if out.ndim == 0 else out


def bm_fpt_lt(lam, barrier: Barrier, mu: float):
    """``E exp(-lam tau) = exp[(mu - sqrt(mu^2 + 2 lam))(S - x)]``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be >= 0")
    # mu - sqrt(mu^2 + 2 lam) rewritten to avoid cancellation for large mu
    root = np.sqrt(mu * mu + 2 * lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        expo = np.where(mu > 0, -2 * lam / (mu + root), mu - root)
    out = np.exp(expo * barrier.distance)
    return float(out) if out.ndim == 0 else out


def bm_fpt_moments(barrier: Barrier, mu: float) -> MomentPair:
    _positive_drift(mu, "moments of the crossing time")
    d = barrier.distance
    return MomentPair(d / mu, d / mu ** 3 + d * d / mu ** 2)


def bm_area_mean(barrier: Barrier, mu: float) -> float:
    """Mean first-crossing area ``(S-x)/(2 mu) (S + x - 1/mu)``."""
    _positive_drift(mu, "the mean area")
    S, x = barrier.level, barrier.start
    return (S - x) / (2 * mu) * (S + x - 1 / mu)


def area_second_coefficients(S: float, mu: float) -> tuple[float, float, float, float]:
    """Coefficients of the quartic particular solution of the second-moment ODE.

    The quadratic coefficient is ``(5 + 2 mu S - 2 mu^2 S^2) / (4 mu^4)``.
    """
    c = (5 + 2 * mu * S - 2 * mu * mu * S * S) / (4 * mu ** 4)
    return 1 / (4 * mu * mu), -5 / (6 * mu ** 3), c, -c / mu


def bm_area_second(barrier: Barrier, mu: float) -> float:
    """Second moment of the first-crossing area.

    Polynomial solution of ``T'' / 2 + mu T' = -2 x T_1`` with ``T(S) = 0``.
    Raises :class:`MomentUndefined` if the value would be negative or below
    the squared mean.
    """
    _positive_drift(mu, "the second area moment")
    S, x = barrier.level, barrier.start
    a, b, c, d = area_second_coefficients(S, mu)
    value = a * (x ** 4 - S ** 4) + b * (x ** 3 - S ** 3) + c * (x * x - S * S) + d * (x - S)
    mean = bm_area_mean(barrier, mu)
    if value < 0 or value < mean * mean - 1e-12 * max(1.0, abs(value)):
        raise MomentUndefined(f"second area moment does not exist (formula gives {value:g})")
    return value


def bm_area_moments(barrier: Barrier, mu: float) -> MomentPair:
    return MomentPair(bm_area_mean(barrier, mu), bm_area_second(barrier, mu))


def driftless_barrier_area_lt(lam, barrier: Barrier):
    """Laplace transform of ``int_0^tau (S - X) dt`` for driftless BM.

    ``3^(2/3) Gamma(2/3) Ai(2^(1/3) lam^(1/3) (S - x))``; it solves
    ``M''/2 = lam (S - x) M`` with ``M(S) = 1`` and ``M(-inf) = 0``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be >= 0")
    norm = 3 ** (2 / 3) * math.gamma(2 / 3)
    arg = 2 ** (1 / 3) * np.cbrt(lam) * barrier.distance
    out = np.array([norm * airy_ai(a) for a in np.ravel(arg)]).reshape(arg.shape)
    return float(out) if out.ndim == 0 else out


# The Airy expression is the one quoted alongside the area transform of the
# driftless walk; exposed under that name as well.
bm_area_lt_driftless = driftless_barrier_area_lt


def bm_min_cdf(z, barrier: Barrier, mu: float):
    """``P(min before crossing <= z)``; equals 1 for ``z >= x``."""
    z = np.asarray(z, dtype=float)
    S, x = barrier.level, barrier.start
    zc = np.minimum(z, x)
    if mu == 0:
        out = (S - x) / (S - zc)
    else:
        # ratio of expm1 terms, scaled by exp(2 mu S) for stability
        k = 2 * mu
        num = -np.expm1(-k * (x - S))
        with np.errstate(over="ignore"):
            den = -np.expm1(-k * (zc - S))
            out = np.where(np.isinf(den), 0.0, num / den)
    out = np.where(z >= x, 1.0, out)
    return float(out) if out.ndim == 0 else out


def bm_min_pdf(z, barrier: Barrier, mu: float):
    z = np.asarray(z, dtype=float)
    S, x = barrier.level, barrier.start
    if mu == 0:
        out = (S - x) / (S - z) ** 2
    else:
        k = 2 * mu
        num = -np.expm1(-k * (x - S))
        with np.errstate(over="ignore", invalid="ignore"):
            den = -np.expm1(-k * (z - S))
            # k e^{-k(z-S)} num / den^2, written as k num / (den * (1 - e^{k(z-S)}))
            out = k * num / (den * -np.expm1(k * (z - S)))
            out = np.where(np.isfinite(out), out, 0.0)
    out = np.where(z <= x, out, 0.0)
    return float(out) if out.ndim == 0 else out


# Poisson process


def jumps_needed(barrier: Barrier) -> int:
    """Unit jumps needed to reach the barrier: S-x if integral, else floor(S-x)+1."""
    d = barrier.distance
    nearest = round(d)
    if abs(d - nearest) < INTEGER_TOL and nearest >= 1:
        return int(nearest)
    return int(math.floor(d)) + 1


def poisson_fpt_law(barrier: Barrier, theta: float) -> GammaLaw:
    if not theta > 0:
        raise ValueError("theta must be > 0")
    k = jumps_needed(barrier)
    return GammaLaw(k, theta, MomentPair(k / theta, (k * k + k) / theta ** 2))


def poisson_fpt_lt(lam, barrier: Barrier, theta: float):
    lam = np.asarray(lam, dtype=float)
    out = (theta / (theta + lam)) ** jumps_needed(barrier)
    return float(out) if out.ndim == 0 else out


def poisson_area_lt(lam, barrier: Barrier, theta: float):
    """``prod_j theta / (theta + lam (x + j))`` over the levels visited."""
    if not theta > 0:
        raise ValueError("theta must be > 0")
    lam = np.asarray(lam, dtype=float)
    levels = barrier.start + np.arange(jumps_needed(barrier))
    out = np.prod(theta / (theta + np.multiply.outer(lam, levels)), axis=-1)
    return float(out) if out.ndim == 0 else out


def poisson_area_moments(barrier: Barrier, theta: float) -> MomentPair:
    if not theta > 0:
        raise ValueError("theta must be > 0")
    x = barrier.start
    k = jumps_needed(barrier)
    d = barrier.distance
    if abs(d - round(d)) < INTEGER_TOL:
        mean = k / (2 * theta) * (2 * x + k - 1)
        second = k / (12 * theta ** 2) * (
            12 * x * x * (k + 1) + 12 * x * (k * k - 1) + 3 * k ** 3 - 2 * k * k - 3 * k + 2)
    else:
        f = k - 1
        mean = k / (2 * theta) * (2 * x + f)
        second = k / (12 * theta ** 2) * (
            12 * x * (f + 2) * (x + f) + f * (3 * f * f + 7 * f + 2))
    return MomentPair(mean, second)


# Ornstein-Uhlenbeck


def ou_mean_fpt(barrier: Barrier, mu: float, sigma: float) -> float:
    if not (mu > 0 and sigma > 0):
        raise ValueError("mu and sigma must be > 0")
    scale = math.sqrt(mu) / sigma
    s, x = barrier.level * scale, barrier.start * scale
    return (math.sqrt(math.pi) * (phi1(s).value - phi1(x).value)
            + psi1(s).value - psi1(x).value) / mu


def _gauss_tail_integral(a, b, k, shift):
    """``int_a^b exp(k t^2 - shift) dt`` by quadrature."""
    if a >= b:
        return 0.0
    return _quad(lambda t: math.exp(k * t * t - shift), a, b)


def ou_min_cdf(z: float, barrier: Barrier, mu: float, sigma: float) -> float:
    """``int_x^S e^{k t^2} dt / int_z^S e^{k t^2} dt`` with ``k = mu / sigma^2``."""
    if not (mu > 0 and sigma > 0):
        raise ValueError("mu and sigma must be > 0")
    S, x = barrier.level, barrier.start
    if z >= x:
        return 1.0
    k = mu / sigma ** 2
    shift = k * max(z * z, S * S, x * x)
    upper = _gauss_tail_integral(x, S, k, shift)
    if upper == 0.0:
        return 0.0
    lower = _quad_pieces(z, x, k, shift)
    return upper / (upper + lower)


def _quad_pieces(z, x, k, shift):
    # split at 0 where the integrand has its minimum
    if z < 0 < x:
        return _gauss_tail_integral(z, 0.0, k, shift) + _gauss_tail_integral(0.0, x, k, shift)
    return _gauss_tail_integral(z, x, k, shift)


def ou_min_pdf(z: float, barrier: Barrier, mu: float, sigma: float) -> float:
    if not (mu > 0 and sigma > 0):
        raise ValueError("mu and sigma must be > 0")
    S, x = barrier.level, barrier.start
    if z > x:
        return 0.0
    k = mu / sigma ** 2
    shift = k * max(z * z, S * S, x * x)
    upper = _gauss_tail_integral(x, S, k, shift)
    total = upper + _quad_pieces(z, x, k, shift)
    return math.exp(k * z * z - shift) * upper / total ** 2


def ou_time_change(t, mu: float, sigma: float):
    """``rho(t) = sigma^2 (e^{2 mu t} - 1) / (2 mu)``."""
    t = np.asarray(t, dtype=float)
    out = sigma ** 2 * np.expm1(2 * mu * t) / (2 * mu)
    return float(out) if out.ndim == 0 else out


def ou_time_change_rate(t, mu: float, sigma: float):
    t = np.asarray(t, dtype=float)
    out = sigma ** 2 * np.exp(2 * mu * t)
    return float(out) if out.ndim == 0 else out


def ou_moving_boundary_fpt_density(t, x: float, alpha: float, mu: float, sigma: float):
    """Density of the first hit of ``alpha e^{-mu t}`` by the OU process from x."""
    if not alpha > x:
        raise ValueError("boundary level alpha must exceed the start x")
    t = np.asarray(t, dtype=float)
    d = alpha - x
    # log of f_B(rho) rho' to stay finite when rho overflows
    u = 2 * mu * np.maximum(t, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log(expm1(u)) = u + log1p(-exp(-u))
        log_rho = np.log(sigma ** 2 / (2 * mu)) + u + np.log1p(-np.exp(-u))
        log_f = (math.log(d / math.sqrt(2 * math.pi)) - 1.5 * log_rho
                 - d * d / 2 * np.exp(-log_rho) + 2 * math.log(sigma) + 2 * mu * t)
    out = np.where(t > 0, np.exp(np.where(t > 0, log_f, 0.0)), 0.0)
    return float(out) if out.ndim == 0 else out


# Reflection and random starts


def reflected_bm_moments(y: float, mu: float) -> tuple[float, float]:
    """Mean passage time and mean area below zero of ``y + B_t - mu t``."""
    _positive_drift(mu, "passage moments below zero")
    return y / mu, y * y / (2 * mu) + y / (2 * mu * mu)


def area_via_reflection(barrier: Barrier, mu: float) -> float:
    """Mean crossing area from ``A_S(x) = S tau~(S-x) - A~(S-x)``."""
    mean_tau, mean_area = reflected_bm_moments(barrier.distance, mu)
    return barrier.level * mean_tau - mean_area


@dataclass(frozen=True)
class RandomStartMoments:
    mean_tau: float
    second_tau: float
    mean_area: float


def random_start_moments(density: Callable[[float], float], level: float, mu: float,
                         lower: float = -math.inf, points=None) -> RandomStartMoments:
    """Moments for BM with drift started from a random point with the given density.

    ``density`` must integrate to one over ``(lower, level)``.
    """
    _positive_drift(mu, "random-start moments")
    S = level
    kw = {} if points is None or math.isinf(lower) else {"points": points}

    def expect(fn):
        return _quad(lambda s: fn(s) * density(s), lower, S, **kw)

    mass = expect(lambda s: 1.0)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"starting density integrates to {mass}, not 1")
    m1 = expect(lambda s: S - s)
    m2 = expect(lambda s: (S - s) ** 2)
    area = expect(lambda s: (S - s) * (S + s - 1 / mu)) / (2 * mu)
    return RandomStartMoments(m1 / mu, m1 / mu ** 3 + m2 / mu ** 2, area)

