"""Special-function kernels used by the closed forms."""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass

import numpy as np

AIRY_SWITCH = 6.0
SERIES_RTOL = 1e-14
SERIES_CAP = 500
SERIES_ZMAX = 10.0

# Ai(0) and -Ai'(0)
_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
_AIP0 = 1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))


class SeriesCapError(ArithmeticError):
    """A power series did not meet its stopping rule within the term cap."""


@dataclass(frozen=True)
class SeriesEval:
    value: float
    terms_used: int
    truncation_bound: float


# Ai(0) and -Ai'(0) to 40 digits for the extended-precision power series
_AI0_DEC = "0.355028053887817239260063186004183176398"
_AIP0_DEC = "0.2588194037928067984051835601892039634791"


def _airy_maclaurin(z):
    # Ai = Ai(0) f - |Ai'(0)| g with f = sum z^{3k} / (2.3)(5.6)..., g likewise.
    # Both sums grow like exp(2/3 z^1.5) while Ai decays, so the difference is
    # formed in 40-digit decimal arithmetic to keep full relative accuracy.
    with decimal.localcontext() as ctx:
        ctx.prec = 40
        zd = decimal.Decimal(z)
        z3 = zd * zd * zd
        f_term, g_term = decimal.Decimal(1), zd
        f_sum, g_sum = f_term, g_term
        tiny = decimal.Decimal(10) ** -45
        for k in range(1, SERIES_CAP):
            f_term = f_term * z3 / ((3 * k - 1) * (3 * k))
            g_term = g_term * z3 / ((3 * k) * (3 * k + 1))
            f_sum += f_term
            g_sum += g_term
            if max(f_term, g_term) < tiny * f_sum:
                break
        return float(decimal.Decimal(_AI0_DEC) * f_sum - decimal.Decimal(_AIP0_DEC) * g_sum)


def _airy_asymptotic(z):
    zeta = 2.0 / 3.0 * z ** 1.5
    total, u = 1.0, 1.0
    prev = math.inf
    for k in range(1, 60):
        # u_k = (6k-5)(6k-3)(6k-1) / ((2k-1) 216 k) u_{k-1}
        u *= (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        term = u / zeta ** k
        if term > prev:
            break
        total += (-1) ** k * term
        prev = term
        if term < 1e-17:
            break
    return math.exp(-zeta) / (2.0 * math.sqrt(math.pi) * z ** 0.25) * total


def airy_ai(z: float) -> float:
    """Airy function Ai on [0, inf).

    Power series below ``AIRY_SWITCH``, the large-argument expansion above.
    """
    z = float(z)
    if z < 0 or math.isnan(z):
        raise ValueError(f"airy_ai is implemented for z >= 0, got {z}")
    if math.isinf(z):
        return 0.0
    if z <= AIRY_SWITCH:
        return _airy_maclaurin(z)
    return _airy_asymptotic(z)


def airy_ai_prime0() -> float:
    return -_AIP0


def _sum_series(term_fn, z):
    if abs(z) > SERIES_ZMAX:
        raise ValueError(f"series evaluated for |z| <= {SERIES_ZMAX}, got {z}")
    partial = 0.0
    for k in range(SERIES_CAP):
        term = term_fn(k)
        partial += term
        nxt = term_fn(k + 1)
        if abs(nxt) < SERIES_RTOL * max(1.0, abs(partial)):
            return SeriesEval(partial, k + 1, abs(nxt))
    raise SeriesCapError(f"series at z={z} did not converge in {SERIES_CAP} terms")


def phi1(z: float) -> SeriesEval:
    """``int_0^z exp(t^2) dt`` summed as ``sum z^(2k+1) / ((2k+1) k!)``."""
    z = float(z)
    if z == 0:
        return SeriesEval(0.0, 1, 0.0)
    logz = math.log(abs(z))
    sign = math.copysign(1.0, z)

    def term(k):
        return sign * math.exp((2 * k + 1) * logz - math.lgamma(k + 1)) / (2 * k + 1)

    return _sum_series(term, z)


def psi1(z: float) -> SeriesEval:
    """``2 int_0^z e^{u^2} int_0^u e^{-v^2} dv du`` as ``sum 2^k z^(2k+2) / ((k+1)(2k+1)!!)``."""
    z = float(z)
    if z == 0:
        return SeriesEval(0.0, 1, 0.0)
    logz = math.log(abs(z))

    def term(k):
        # (2k+1)!! = (2k+1)! / (2^k k!)
        log_dfact = math.lgamma(2 * k + 2) - k * math.log(2.0) - math.lgamma(k + 1)
        return math.exp(k * math.log(2.0) + (2 * k + 2) * logz - log_dfact) / (k + 1)

    return _sum_series(term, z)


def normal_cdf(x):
    """Standard Gaussian distribution function via erfc (no cancellation in the tails)."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / math.sqrt(2.0))
    from scipy.special import ndtr
    return ndtr(np.asarray(x, dtype=float))


def gamma_lt(mean: float, variance: float, lam):
    """Laplace transform of the Gamma law with the given mean and variance."""
    if not (mean > 0 and variance > 0):
        raise ValueError("gamma_lt needs positive mean and variance")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("gamma_lt is defined for lambda >= 0")
    out = (1.0 + lam * variance / mean) ** (-mean * mean / variance)
    return float(out) if out.ndim == 0 else out
