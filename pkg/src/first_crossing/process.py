"""Jump-diffusion processes, presets and analytic helpers.

A process solves ``dX = b(X) dt + sigma(X) dB + sum_i eps_i dN_i`` where the
``N_i`` are independent Poisson processes with rates ``theta_i``.  Jumps are
restricted to finitely many fixed amplitudes.

Drift and diffusion are stored twice: as plain Python callables (used by the
generator, the scale functions and the BVP solvers) and as numba kernels of
the form ``k(x, params)`` (used by the path simulator).
"""

from __future__ import annotations

import enum
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit
from scipy import integrate

Coefficient = Callable[[float], float]

PRESET_TAGS = ("BM_DRIFT", "OU", "CIR_QUARTER", "WF_CONJ", "POISSON", "LEVY")


@dataclass(frozen=True)
class ProcessSpec:
    """Coefficients of a one-dimensional jump-diffusion.

    Parameters
    ----------
    drift, diffusion : callable
        ``b(x)`` and ``sigma(x)``; ``sigma`` must be non-negative on the
        state interval.
    jumps : tuple of (rate, amplitude)
        Independent Poisson jump streams.
    state_interval : (float, float)
        Open interval ``(alpha, beta)``; infinite ends allowed.
    preset_tag, params
        Identify a preset so closed forms can be dispatched.
    kernels
        Optional ``(drift_kernel, diffusion_kernel, param_array)`` numba
        triple for simulation.  Built lazily from the callables otherwise.
    """

    drift: Coefficient
    diffusion: Coefficient
    jumps: tuple[tuple[float, float], ...] = ()
    state_interval: tuple[float, float] = (-math.inf, math.inf)
    preset_tag: str | None = None
    params: dict = field(default_factory=dict)
    kernels: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        jumps = tuple((float(r), float(a)) for r, a in self.jumps)
        object.__setattr__(self, "jumps", jumps)
        for rate, _ in jumps:
            if not (rate >= 0 and math.isfinite(rate)):
                raise ValueError(f"jump rate must be finite and >= 0, got {rate}")
        lo, hi = self.state_interval
        if not lo < hi:
            raise ValueError("state interval must satisfy alpha < beta")
        if self.preset_tag == "WF_CONJ" and (lo, hi) != (0.0, 1.0):
            raise ValueError("WF_CONJ lives on [0, 1]")

    @property
    def total_jump_rate(self) -> float:
        return sum(r for r, _ in self.jumps)

    @property
    def has_jumps(self) -> bool:
        return self.total_jump_rate > 0

    def contains(self, x: float) -> bool:
        lo, hi = self.state_interval
        return lo <= x <= hi

    def simulation_kernels(self):
        if self.kernels is not None:
            return self.kernels
        return (_jit_coefficient(self.drift), _jit_coefficient(self.diffusion),
                np.zeros(1))

    def describe(self) -> str:
        if self.preset_tag is None:
            return "custom"
        if not self.params:
            return self.preset_tag
        inner = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.preset_tag}{{{inner}}}"


@dataclass(frozen=True)
class Barrier:
    """Constant barrier ``level`` and a start strictly below it."""

    level: float
    start: float

    def __post_init__(self):
        if not self.start < self.level:
            raise ValueError(f"start {self.start} must lie strictly below S={self.level}")

    @property
    def distance(self) -> float:
        return self.level - self.start


@dataclass(frozen=True)
class ConjugationMap:
    """Increasing map ``u`` with ``u(0) = 0`` turning the process into BM."""

    forward: Callable
    inverse: Callable
    derivative: Callable
    second_derivative: Callable


def _jit_coefficient(fn):
    try:
        inner = njit(fn)

        @njit
        def kernel(x, p):
            return inner(x)

        kernel(0.5, np.zeros(1))
    except Exception as exc:  # numba raises a zoo of typing errors
        raise TypeError(
            "custom coefficients must be numba-compilable scalar functions "
            "to be simulated; pass ProcessSpec.kernels explicitly otherwise"
        ) from exc
    return kernel


# numba kernels for presets: k(x, p) with p the parameter array


@njit(cache=True)
def _const_drift(x, p):
    return p[0]


@njit(cache=True)
def _unit(x, p):
    return 1.0


@njit(cache=True)
def _zero(x, p):
    return 0.0


@njit(cache=True)
def _ou_drift(x, p):
    return -p[0] * x


@njit(cache=True)
def _ou_diffusion(x, p):
    return p[1]


@njit(cache=True)
def _cir_drift(x, p):
    return 0.25


@njit(cache=True)
def _cir_diffusion(x, p):
    return math.sqrt(max(x, 0.0))


@njit(cache=True)
def _wf_drift(x, p):
    return 0.25 - 0.5 * x


@njit(cache=True)
def _wf_diffusion(x, p):
    return math.sqrt(max(x * (1.0 - x), 0.0))


def _require_positive(tag, **values):
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{tag}: parameter {name} must be > 0, got {value}")


def make_preset(tag: str, **params) -> ProcessSpec:
    """Build one of the worked-example processes.

    ``BM_DRIFT(mu)``: ``dX = mu dt + dB``.
    ``OU(mu, sigma)``: ``dX = -mu X dt + sigma dB``.
    ``CIR_QUARTER``: ``dX = dt/4 + sqrt(X v 0) dB``.
    ``WF_CONJ``: ``dX = (1/4 - X/2) dt + sqrt(X(1-X) v 0) dB`` on [0, 1].
    ``POISSON(theta)``: unit upward jumps at rate theta.
    ``LEVY(beta, theta)``: ``dX = beta dt + dB + dN`` with N of rate theta.
    """
    tag = tag.upper()
    p = {k: float(v) for k, v in params.items()}

    def expect(*names):
        extra = set(p) - set(names)
        missing = set(names) - set(p)
        if extra or missing:
            raise ValueError(f"{tag} takes parameters {names}, got {tuple(p)}")

    if tag == "BM_DRIFT":
        expect("mu")
        mu = p["mu"]
        return ProcessSpec(lambda x: mu, lambda x: 1.0, preset_tag=tag, params=p,
                           kernels=(_const_drift, _unit, np.array([mu])))
    if tag == "OU":
        expect("mu", "sigma")
        mu, sigma = p["mu"], p["sigma"]
        _require_positive(tag, mu=mu, sigma=sigma)
        return ProcessSpec(lambda x: -mu * x, lambda x: sigma, preset_tag=tag, params=p,
                           kernels=(_ou_drift, _ou_diffusion, np.array([mu, sigma])))
    if tag == "CIR_QUARTER":
        expect()
        return ProcessSpec(lambda x: 0.25, lambda x: math.sqrt(max(x, 0.0)),
                           state_interval=(0.0, math.inf), preset_tag=tag, params=p,
                           kernels=(_cir_drift, _cir_diffusion, np.zeros(1)))
    if tag == "WF_CONJ":
        expect()
        return ProcessSpec(lambda x: 0.25 - 0.5 * x,
                           lambda x: math.sqrt(max(x * (1.0 - x), 0.0)),
                           state_interval=(0.0, 1.0), preset_tag=tag, params=p,
                           kernels=(_wf_drift, _wf_diffusion, np.zeros(1)))
    if tag == "POISSON":
        expect("theta")
        _require_positive(tag, theta=p["theta"])
        return ProcessSpec(lambda x: 0.0, lambda x: 0.0, jumps=((p["theta"], 1.0),),
                           preset_tag=tag, params=p,
                           kernels=(_zero, _zero, np.zeros(1)))
    if tag == "LEVY":
        expect("beta", "theta")
        beta = p["beta"]
        _require_positive(tag, theta=p["theta"])
        return ProcessSpec(lambda x: beta, lambda x: 1.0, jumps=((p["theta"], 1.0),),
                           preset_tag=tag, params=p,
                           kernels=(_const_drift, _unit, np.array([beta])))
    raise ValueError(f"unknown preset tag {tag!r}; known: {', '.join(PRESET_TAGS)}")


_SHORT_NAMES = {"bm": "BM_DRIFT", "ou": "OU", "cir4": "CIR_QUARTER", "wf": "WF_CONJ",
                "poisson": "POISSON", "levy": "LEVY"}


def parse_preset(text: str) -> ProcessSpec:
    """Parse command-line preset strings such as ``ou:mu=1.0,sigma=1.0``."""
    m = re.fullmatch(r"\s*([A-Za-z0-9_]+)\s*(?::(.*))?", text)
    if m is None:
        raise ValueError(f"cannot parse preset {text!r}")
    name, rest = m.group(1), m.group(2)
    tag = _SHORT_NAMES.get(name.lower(), name.upper())
    params = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"preset parameter {item!r} is not key=value")
            params[key.strip()] = float(value)
    return make_preset(tag, **params)


def preset_string(spec: ProcessSpec) -> str:
    """Inverse of :func:`parse_preset` for preset specs."""
    short = {v: k for k, v in _SHORT_NAMES.items()}[spec.preset_tag]
    if not spec.params:
        return short
    return short + ":" + ",".join(f"{k}={v!r}" for k, v in spec.params.items())


def _derivatives(f, x, h):
    f0 = f(x)
    fp, fm = f(x + h), f(x - h)
    fp2, fm2 = f(x + 2 * h), f(x - 2 * h)
    d1 = (fm2 - 8 * fm + 8 * fp - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm - 30 * f0 + 16 * fp - fp2) / (12 * h * h)
    return d1, d2


def apply_generator(spec: ProcessSpec, f, x: float, fprime=None, fsecond=None,
                    h: float | None = None) -> float:
    """Evaluate ``Lf(x) = sigma^2 f''/2 + b f' + sum_i theta_i [f(x+eps_i) - f(x)]``.

    Missing derivatives are taken from fourth-order central differences with
    step ``h`` (default ``1e-3 * max(1, |x|)``).
    """
    if not spec.contains(x):
        raise ValueError(f"x={x} outside the state interval {spec.state_interval}")
    if fprime is None or fsecond is None:
        step = h if h is not None else 1e-3 * max(1.0, abs(x))
        d1, d2 = _derivatives(f, x, step)
        fprime_x = d1 if fprime is None else fprime(x)
        fsecond_x = d2 if fsecond is None else fsecond(x)
    else:
        fprime_x, fsecond_x = fprime(x), fsecond(x)
    sigma = spec.diffusion(x)
    value = 0.5 * sigma * sigma * fsecond_x + spec.drift(x) * fprime_x
    if spec.jumps:
        fx = f(x)
        value += sum(rate * (f(x + amp) - fx) for rate, amp in spec.jumps)
    return value


def conjugation_map(tag: str, **params) -> ConjugationMap:
    """Map ``u`` with ``u(X_t) - u(x0)`` a standard BM."""
    tag = tag.upper()
    if tag == "CIR_QUARTER":
        return ConjugationMap(
            forward=lambda x: 2.0 * np.sqrt(x),
            inverse=lambda y: 0.25 * np.asarray(y) ** 2,
            derivative=lambda x: 1.0 / np.sqrt(x),
            second_derivative=lambda x: -0.5 * np.asarray(x) ** -1.5,
        )
    if tag == "WF_CONJ":
        return ConjugationMap(
            forward=lambda x: 2.0 * np.arcsin(np.sqrt(x)),
            inverse=lambda y: np.sin(0.5 * np.asarray(y)) ** 2,
            derivative=lambda x: 1.0 / np.sqrt(x * (1.0 - x)),
            second_derivative=lambda x: (2 * np.asarray(x) - 1) / (2 * (x * (1.0 - x)) ** 1.5),
        )
    if tag == "BM_DRIFT" and params.get("mu", 0.0) == 0.0:
        return ConjugationMap(
            forward=lambda x: x,
            inverse=lambda y: y,
            derivative=lambda x: np.ones_like(np.asarray(x, dtype=float)),
            second_derivative=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        )
    raise ValueError(f"no known conjugation to BM for {tag} {params or ''}".rstrip())


def _quad(fn, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(fn, a, b, epsabs=1e-14, epsrel=1e-10, limit=200)
        except integrate.IntegrationWarning as exc:
            raise ArithmeticError(f"quadrature on [{a}, {b}] did not converge: {exc}") from exc
    return value


def _check_diffusion(spec, a, b):
    for s in np.linspace(min(a, b), max(a, b), 65):
        if not spec.diffusion(s) > 0:
            raise ValueError(f"diffusion vanishes at {s:g} on the integration path")


def eval_scale_functions(spec: ProcessSpec, c: float, x: float) -> tuple[float, float]:
    """Scale density ``phi`` and the function ``xi`` based at ``c``, evaluated at ``x``.

    ``phi(x) = exp(-int_c^x 2b/sigma^2)``,
    ``xi(x) = phi(x) int_c^x 2 / (sigma^2 phi)``.
    """
    if spec.has_jumps:
        raise ValueError("scale functions are defined for diffusions without jumps")
    _check_diffusion(spec, c, x)

    def log_phi(y):
        if y == c:
            return 0.0
        return -_quad(lambda s: 2 * spec.drift(s) / spec.diffusion(s) ** 2, c, y)

    lp = log_phi(x)
    if x == c:
        return 1.0, 0.0
    inner = _quad(lambda s: 2.0 / (spec.diffusion(s) ** 2 * math.exp(log_phi(s))), c, x)
    return math.exp(lp), math.exp(lp) * inner


def is_attainable(spec: ProcessSpec, level: float, c: float | None = None,
                  deltas=(1e-2, 1e-3, 1e-4)) -> bool:
    """Integrability of ``xi`` in a left neighbourhood of ``level``.

    The tail integrals ``int_{S-delta}^S |xi|`` must all converge and shrink
    as ``delta`` does.
    """
    base = level - 2 * max(deltas) if c is None else c
    tails = []
    for d in deltas:
        try:
            tails.append(_quad(lambda s: abs(eval_scale_functions(spec, base, s)[1]),
                               level - d, level))
        except (ArithmeticError, ValueError, OverflowError):
            return False
    tails = np.array(tails)
    return bool(np.all(np.isfinite(tails)) and np.all(np.diff(tails) < 0))


class Certificate(str, enum.Enum):
    HOLDS = "holds"
    UNKNOWN = "unknown"


def mean_slope(spec: ProcessSpec) -> float | None:
    """Slope of ``E X(t)`` when it is affine in t, else None."""
    if spec.preset_tag == "BM_DRIFT":
        drift = spec.params["mu"]
    elif spec.preset_tag == "LEVY":
        drift = spec.params["beta"]
    elif spec.preset_tag == "POISSON":
        drift = 0.0
    else:
        return None
    return drift + sum(rate * amp for rate, amp in spec.jumps)


def finite_crossing_check(spec: ProcessSpec, barrier: Barrier) -> Certificate:
    """Certify ``P(tau_S(x) < inf) = 1`` from the mean path.

    If ``E X(t)`` eventually stays above S the crossing is certain.  Only
    affine means are handled; anything else is reported as unknown.
    """
    slope = mean_slope(spec)
    if slope is not None and slope > 0:
        return Certificate.HOLDS
    return Certificate.UNKNOWN
