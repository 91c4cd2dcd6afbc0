"""Finite-difference solvers for the crossing boundary-value problems.

All problems live on a truncated half-line ``[x_min, S]`` discretised by a
uniform :class:`Grid1D` whose last node is the barrier.  The diffusion part
``sigma^2/2 f'' + b f'`` uses second-order central differences (first-order
upwinding for the drift when the cell Peclet number ``|b| h / sigma^2``
exceeds one).  Every node contributes one row of a banded system that is
solved directly; the unit-jump operator adds one extra diagonal at offset
``m = 1/h``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.linalg import LinAlgError, solve_banded
from scipy.sparse.linalg import spsolve

from .process import ProcessSpec, make_preset

log = logging.getLogger(__name__)

LEFT_BC_KINDS = ("dirichlet-zero", "polynomial-match", "natural")
BOUND_SLACK = 1e-10
JUMP_BUFFER = 2.0


class SolverError(RuntimeError):
    """The discrete system is singular or its solution is not admissible."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[x_min, x_max]`` with ``x_max`` the barrier."""

    x_min: float
    x_max: float
    n_nodes: int

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            raise ValueError("a grid needs at least 3 nodes")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must lie below x_max")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, h: float) -> "Grid1D":
        """Grid with spacing ``h``; ``x_max - x_min`` must be a multiple of ``h``."""
        cells = (x_max - x_min) / h
        n = int(round(cells))
        if abs(cells - n) > 1e-9 * max(1.0, cells):
            raise ValueError(f"interval length {x_max - x_min} is not a multiple of h={h}")
        return cls(float(x_min), float(x_max), n + 1)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        x = self.x_min + self.h * np.arange(self.n_nodes)
        x[-1] = self.x_max
        return x


@dataclass(frozen=True)
class BVPSolution:
    grid: Grid1D
    values: np.ndarray
    residual_norm: float
    left_bc_kind: str
    flags: tuple[str, ...] = field(default=())

    def at(self, x: float) -> float:
        """Value at ``x`` (linear interpolation between nodes)."""
        if not self.grid.x_min <= x <= self.grid.x_max:
            raise ValueError(f"x={x} outside the grid [{self.grid.x_min}, {self.grid.x_max}]")
        return float(np.interp(x, self.grid.nodes, self.values))


def default_x_min(spec: ProcessSpec, S: float) -> float:
    """Left truncation ``S - max(30, 10 / mu_eff)`` with a preset drift scale."""
    tag, p = spec.preset_tag, spec.params
    mu_eff = None
    if tag == "BM_DRIFT":
        mu_eff = abs(p["mu"])
    elif tag == "OU":
        mu_eff = p["mu"]
    elif tag == "LEVY":
        mu_eff = abs(p["beta"] + p["theta"])
    elif tag == "POISSON":
        mu_eff = p["theta"]
    width = 30.0 if not mu_eff else max(30.0, 10.0 / mu_eff)
    return S - width


def _evaluate(fn, x: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(fn(x), dtype=float)
        if out.shape == x.shape:
            return out
        if out.ndim == 0:
            return np.full_like(x, float(out))
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(v)) for v in x])


def _as_weight(U) -> Callable:
    if callable(U):
        return U
    value = float(U)
    return lambda x: np.full_like(np.asarray(x, dtype=float), value)


class _Banded:
    """Rows of a banded matrix with bandwidths (1, 2) plus optional extra entries."""

    def __init__(self, n):
        self.n = n
        self.diag = {-1: np.zeros(n), 0: np.zeros(n), 1: np.zeros(n), 2: np.zeros(n)}
        self.extra = None

    def set(self, offset, rows, values):
        self.diag[offset][rows] = values

    def matrix(self):
        n = self.n
        mats = []
        for k, d in self.diag.items():
            if k >= 0:
                mats.append(sparse.diags(d[: n - k], k, shape=(n, n)))
            else:
                mats.append(sparse.diags(d[-k:], k, shape=(n, n)))
        A = sum(mats[1:], mats[0]).tocsr()
        if self.extra is not None:
            A = A + self.extra
        return A.tocsc()

    def solve(self, rhs):
        # equilibrate rows first: interior rows carry 1/h^2, boundary rows 1
        scale = np.zeros(self.n)
        for k, d in self.diag.items():
            scale = np.maximum(scale, np.abs(d))
        if self.extra is not None:
            scale = np.maximum(scale, abs(self.extra).max(axis=1).toarray().ravel())
        scale[scale == 0] = 1.0
        for k in self.diag:
            self.diag[k] = self.diag[k] / scale
        if self.extra is not None:
            self.extra = sparse.diags(1.0 / scale) @ self.extra
        values = self._solve(rhs / scale)
        for k in self.diag:
            self.diag[k] = self.diag[k] * scale
        if self.extra is not None:
            self.extra = sparse.diags(scale) @ self.extra
        return values

    def _solve(self, rhs):
        if self.extra is not None:
            try:
                with np.errstate(all="raise"):
                    return spsolve(self.matrix(), rhs)
            except (RuntimeError, FloatingPointError) as exc:
                raise SolverError(f"sparse solve failed: {exc}") from exc
        n = self.n
        ab = np.zeros((4, n))
        for k, d in self.diag.items():
            # solve_banded layout: ab[u + i - j, j] = A[i, j] with u = 2
            row = 2 - k
            if k >= 0:
                ab[row, k:] = d[: n - k]
            else:
                ab[row, : n + k] = d[-k:]
        try:
            return solve_banded((1, 2), ab, rhs)
        except (LinAlgError, ValueError) as exc:
            raise SolverError(f"banded solve failed: {exc}") from exc


def _diffusion_rows(spec: ProcessSpec, grid: Grid1D, sigma_floor: float = 0.0):
    """Stencil weights (lower, centre, upper) of ``sigma^2/2 f'' + b f'`` at interior nodes."""
    x = grid.nodes[1:-1]
    h = grid.h
    b = _evaluate(spec.drift, x)
    sig = np.maximum(_evaluate(spec.diffusion, x), sigma_floor)
    a2 = 0.5 * sig * sig
    if np.any(a2 <= 0):
        raise SolverError("diffusion vanishes at an interior node; the problem is not elliptic")
    peclet = np.abs(b) * h / (2.0 * a2)
    upwind = peclet > 1.0
    lower = a2 / h**2 - b / (2 * h)
    upper = a2 / h**2 + b / (2 * h)
    centre = -2 * a2 / h**2
    if np.any(upwind):
        log.warning("cell Peclet number above one on %d nodes; using first-order upwinding",
                    int(np.count_nonzero(upwind)))
        bp, bm = np.maximum(b, 0), np.minimum(b, 0)
        lower = np.where(upwind, a2 / h**2 - bm / h, lower)
        upper = np.where(upwind, a2 / h**2 + bp / h, upper)
        centre = np.where(upwind, -2 * a2 / h**2 - (bp - bm) / h, centre)
    return lower, np.broadcast_to(centre, x.shape).copy(), upper, bool(np.any(upwind))


def _finish(grid, A: _Banded, rhs, kind, flags, bounds=None):
    values = A.solve(rhs)
    if not np.all(np.isfinite(values)):
        raise SolverError("non-finite values in the discrete solution")
    resid = A.matrix() @ values - rhs
    scale = max(1.0, float(np.max(np.abs(rhs))))
    residual_norm = float(np.max(np.abs(resid[1:-1]))) / scale if grid.n_nodes > 2 else 0.0
    if bounds is not None:
        lo, hi = bounds
        slack = BOUND_SLACK
        if values.min() < lo - slack or values.max() > hi + slack:
            raise SolverError(
                f"solution leaves [{lo}, {hi}]: range [{values.min():.6g}, {values.max():.6g}]; "
                "the left truncation or the weight make the problem ill-posed"
            )
        values = np.clip(values, lo, hi)
    return BVPSolution(grid, values, residual_norm, kind, tuple(flags))


def _check_diffusive(spec: ProcessSpec, what: str):
    if spec.has_jumps:
        raise ValueError(f"{what} handles pure diffusions; use solve_pdde_levy for jumps")


def solve_lt_bvp(spec: ProcessSpec, U, lam: float, grid: Grid1D) -> BVPSolution:
    """Laplace transform ``E exp(-lam int_0^tau U(X) dt)`` as a function of the start.

    Solves ``sigma^2/2 M'' + b M' - lam U M = 0`` with ``M(S) = 1`` and
    ``M(x_min) = 0`` standing in for the limit at minus infinity.

    Raises
    ------
    SolverError
        If the system is singular or the solution leaves ``[0, 1]``.
    """
    _check_diffusive(spec, "solve_lt_bvp")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    n = grid.n_nodes
    lower, centre, upper, upwind = _diffusion_rows(spec, grid)
    weight = _evaluate(_as_weight(U), grid.nodes[1:-1])
    A = _Banded(n)
    inner = np.arange(1, n - 1)
    A.set(-1, inner, lower)
    A.set(0, inner, centre - lam * weight)
    A.set(1, inner, upper)
    A.set(0, [0, n - 1], 1.0)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    flags = ["upwind"] if upwind else []
    return _finish(grid, A, rhs, "dirichlet-zero", flags, bounds=(0.0, 1.0))


def _polynomial_slope(spec: ProcessSpec, grid: Grid1D, forcing: np.ndarray) -> float:
    """Slope at ``x_min`` of the polynomial solution of ``T''/2 + mu T' = -f``.

    ``f`` is fitted by a quartic on the leftmost unit of the grid; then
    ``T' = -(1/mu) sum_k (-1/(2 mu))^k f^(k)``, which terminates.
    """
    mu = spec.params["mu"]
    x = grid.nodes
    window = x <= x[0] + 2.0
    if np.count_nonzero(window) < 9:
        window = np.zeros_like(x, dtype=bool)
        window[: min(9, x.size)] = True
    poly = np.polynomial.Polynomial.fit(x[window], forcing[window], deg=4)
    slope, deriv, factor = 0.0, poly, 1.0
    for _ in range(5):
        slope += factor * deriv(x[0])
        factor *= -1.0 / (2.0 * mu)
        deriv = deriv.deriv()
    return -slope / mu


def _default_moment_bc(spec: ProcessSpec) -> str:
    if spec.preset_tag == "BM_DRIFT" and spec.params["mu"] > 0:
        return "polynomial-match"
    return "natural"


def solve_moment_bvp(spec: ProcessSpec, U, n: int, grid: Grid1D,
                     prev: BVPSolution | None = None,
                     left_bc_kind: str | None = None) -> BVPSolution:
    """Moment ``T_n(x) = E (int_0^tau U(X) dt)^n`` through ``L T_n = -n U T_{n-1}``.

    The right condition is ``T_n(S) = 0``.  The left end needs one extra
    condition: ``"polynomial-match"`` (default for BM with positive drift)
    imposes the slope of the polynomial particular solution, discarding the
    ``exp(-2 mu x)`` mode; ``"natural"`` sets ``T_n'' = 0`` at ``x_min``.

    A solution negative on more than 1% of the nodes is flagged
    ``"moment may not exist"`` (for the first moment only when the weight
    is non-negative, since a signed weight makes a signed mean legitimate).
    """
    _check_diffusive(spec, "solve_moment_bvp")
    if n not in (1, 2):
        raise ValueError("only the first two moments are supported")
    if n == 2 and prev is None:
        raise ValueError("the second moment needs the first-moment solution as prev")
    if prev is not None and (prev.grid != grid):
        raise ValueError("prev was solved on a different grid")
    kind = left_bc_kind or _default_moment_bc(spec)
    if kind not in ("polynomial-match", "natural"):
        raise ValueError(f"left_bc_kind must be polynomial-match or natural, got {kind!r}")
    if kind == "polynomial-match" and not (spec.preset_tag == "BM_DRIFT" and spec.params["mu"] > 0):
        raise ValueError("polynomial-match is available for BM with positive drift only")

    N = grid.n_nodes
    h = grid.h
    x = grid.nodes
    lower, centre, upper, upwind = _diffusion_rows(spec, grid)
    t_prev = np.ones(N) if n == 1 else prev.values
    forcing = n * _evaluate(_as_weight(U), x) * t_prev
    A = _Banded(N)
    inner = np.arange(1, N - 1)
    A.set(-1, inner, lower)
    A.set(0, inner, centre)
    A.set(1, inner, upper)
    rhs = np.zeros(N)
    rhs[1:-1] = -forcing[1:-1]
    A.set(0, N - 1, 1.0)
    if kind == "natural":
        A.set(0, 0, 1.0)
        A.set(1, 0, -2.0)
        A.set(2, 0, 1.0)
    else:
        # ghost node T_{-1} = T_1 - 2 h g folded into the equation at x_min
        g = _polynomial_slope(spec, grid, forcing)
        a2 = 0.5 * spec.diffusion(x[0]) ** 2
        A.set(0, 0, -2 * a2 / h**2)
        A.set(1, 0, 2 * a2 / h**2)
        rhs[0] = -forcing[0] - spec.drift(x[0]) * g + 2 * a2 * g / h
    flags = ["upwind"] if upwind else []
    sol = _finish(grid, A, rhs, kind, flags)
    # a signed weight legitimately gives a signed odd moment
    sign_definite = n % 2 == 0 or np.all(forcing >= 0)
    if sign_definite and np.count_nonzero(sol.values < 0) > 0.01 * N:
        log.warning("T_%d negative on more than 1%% of nodes: moment may not exist", n)
        sol = BVPSolution(sol.grid, sol.values, sol.residual_norm, kind,
                          sol.flags + ("moment may not exist",))
    return sol


def solve_min_bvp(spec: ProcessSpec, z: float, S: float, grid: Grid1D) -> BVPSolution:
    """``w(x) = P(min before tau <= z)`` from ``L w = 0``, ``w(z) = 1``, ``w(S) = 0``."""
    _check_diffusive(spec, "solve_min_bvp")
    if not z < S:
        raise ValueError("z must lie below S")
    if abs(grid.x_min - z) > 1e-12 * max(1.0, abs(z)) or abs(grid.x_max - S) > 1e-12 * max(1.0, abs(S)):
        raise ValueError("the grid must span [z, S]")
    N = grid.n_nodes
    lower, centre, upper, upwind = _diffusion_rows(spec, grid)
    A = _Banded(N)
    inner = np.arange(1, N - 1)
    A.set(-1, inner, lower)
    A.set(0, inner, centre)
    A.set(1, inner, upper)
    A.set(0, [0, N - 1], 1.0)
    rhs = np.zeros(N)
    rhs[0] = 1.0
    flags = ["upwind"] if upwind else []
    sol = _finish(grid, A, rhs, "dirichlet-zero", flags, bounds=(0.0, 1.0))
    if np.any(np.diff(sol.values) > BOUND_SLACK):
        flags.append("not monotone")
        sol = BVPSolution(sol.grid, sol.values, sol.residual_norm, sol.left_bc_kind, tuple(flags))
    return sol


LEVY_PROBLEMS = ("fpt-lt", "area-lt", "mean-fpt", "mean-area")


def solve_pdde_levy(beta: float, theta: float, lam: float, problem: str, grid: Grid1D,
                    sigma: float = 1.0) -> BVPSolution:
    """Problems for ``L f = sigma^2/2 f'' + beta f' + theta (f(x+1) - f(x))``.

    ``problem`` selects ``L M - lam U M = 0`` (``fpt-lt`` with ``U = 1``,
    ``area-lt`` with ``U(x) = x``; outer value 1 at and above S, zero at
    ``x_min``) or ``L T = -U`` (``mean-fpt``, ``mean-area``; outer value 0,
    natural condition at ``x_min``).  The grid spacing must be ``1/m``.
    ``sigma`` defaults to the unit diffusion of the preset; a tiny value acts
    as a diffusion floor approximating the pure-jump process.
    """
    if problem not in LEVY_PROBLEMS:
        raise ValueError(f"problem must be one of {LEVY_PROBLEMS}")
    if not theta > 0:
        raise ValueError("theta must be positive")
    if problem.endswith("-lt") and not lam >= 0:
        raise ValueError("lambda must be non-negative")
    h = grid.h
    m = int(round(1.0 / h))
    if abs(m * h - 1.0) > 1e-9:
        raise SolverError(f"grid spacing {h} is not of the form 1/m")
    if grid.x_min > grid.x_max - 1.0 - JUMP_BUFFER:
        raise ValueError("x_min must lie at least 1 + buffer below S")
    spec = make_preset("BM_DRIFT", mu=beta)
    scaled = ProcessSpec(spec.drift, lambda x: sigma, preset_tag=None)
    N = grid.n_nodes
    x = grid.nodes
    lower, centre, upper, upwind = _diffusion_rows(scaled, grid)
    laplace = problem.endswith("-lt")
    weight = np.ones(N) if problem in ("fpt-lt", "mean-fpt") else x.copy()
    outer = 1.0 if laplace else 0.0

    A = _Banded(N)
    inner = np.arange(1, N - 1)
    A.set(-1, inner, lower)
    A.set(1, inner, upper)
    diag = centre - theta
    if laplace:
        diag = diag - lam * weight[1:-1]
    A.set(0, inner, diag)
    rhs = np.zeros(N)
    if not laplace:
        rhs[1:-1] = -weight[1:-1]
    target = inner + m
    inside = target < N - 1
    rows_in = inner[inside]
    A.extra = sparse.csr_matrix((np.full(rows_in.size, theta), (rows_in, rows_in + m)),
                                shape=(N, N))
    rhs[inner[~inside]] -= theta * outer
    A.set(0, N - 1, 1.0)
    rhs[-1] = outer
    if laplace:
        A.set(0, 0, 1.0)
        kind = "dirichlet-zero"
    else:
        A.set(0, 0, 1.0)
        A.set(1, 0, -2.0)
        A.set(2, 0, 1.0)
        kind = "natural"
    flags = ["upwind"] if upwind else []
    bounds = (0.0, 1.0) if problem == "fpt-lt" else None
    return _finish(grid, A, rhs, kind, flags, bounds=bounds)


ORDER_SPREAD = 0.25


@dataclass(frozen=True)
class ConvergenceStudy:
    h: np.ndarray
    errors: np.ndarray
    orders: np.ndarray
    order: float | None
    monotone: bool
    consistent: bool

    @property
    def flagged(self) -> bool:
        return not (self.monotone and self.consistent)


def grid_refine_study(op: Callable[[float], float], levels, exact: float | None = None) -> ConvergenceStudy:
    """Observed convergence order of ``op(h)`` over refinement ``levels``.

    With ``exact`` the errors are ``|op(h) - exact|``; otherwise they are
    differences between consecutive levels (Richardson).  The study is
    flagged, and no order claimed, when the errors fail to decrease strictly
    or when the pairwise orders spread by more than ``ORDER_SPREAD`` (the
    errors are not yet in their asymptotic regime).
    """
    hs = np.asarray(sorted(levels, reverse=True), dtype=float)
    if hs.size < 3:
        raise ValueError("need at least three refinement levels")
    values = np.array([op(h) for h in hs])
    if exact is not None:
        errors = np.abs(values - exact)
        h_err = hs
    else:
        errors = np.abs(np.diff(values))
        h_err = hs[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log(errors[:-1] / errors[1:]) / np.log(h_err[:-1] / h_err[1:])
    monotone = bool(np.all(np.diff(errors) < 0) and np.all(errors > 0))
    consistent = bool(np.all(np.isfinite(orders)) and np.ptp(orders) <= ORDER_SPREAD)
    order = float(orders[-1]) if monotone and consistent else None
    if order is None:
        log.warning("errors are not in a monotone asymptotic regime; no order claimed")
    return ConvergenceStudy(h_err, errors, orders, order, monotone, consistent)


def truncation_delta(solve: Callable[[float], BVPSolution], x_min: float, extra: float,
                     x: float) -> float:
    """Change of the value at ``x`` when the left buffer grows by ``extra``."""
    return abs(solve(x_min - extra).at(x) - solve(x_min).at(x))
