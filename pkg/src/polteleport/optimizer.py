"""Deterministic derivative-free maximization of protocol figures of merit.

A coarse grid scan picks the starting cell, then a bounded Nelder-Mead
simplex polishes it. Unity-gain constraints are eliminated analytically by
the calibrated gains, so fidelity problems only search transmittivities.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import GainError, OptimizationError, ParameterError
from .metrics import (
    conditional_variances,
    polarization_fidelity,
    reference_fidelity,
    transfer_coefficients,
)
from .optics import AMPLITUDE, PHASE
from .protocols import ProtocolParams, simulate

DEFAULT_GRID = 33
SQUEEZING_FLOOR = 1e-6
# Extra grid points at lo + 10^-k (hi - lo) and hi - 10^-k (hi - lo); several
# optima sit in correlated limits (eps -> 0 as V -> 0) finer than the grid.
EDGE_DECADES = (2, 3, 4, 5, 6)
_INFO_GAINS = ("h_plus", "h_minus", "v_plus")


@dataclass
class OptimizationProblem:
    objective: Callable[[Mapping[str, float]], float]
    bounds: dict[str, tuple[float, float]]
    name: str = "custom"
    grid: int = DEFAULT_GRID
    edge_points: bool = True


def _axis(lo: float, hi: float, n: int, edges: bool) -> np.ndarray:
    pts = list(np.linspace(lo, hi, n))
    if edges and hi > lo:
        span = hi - lo
        for k in EDGE_DECADES:
            pts.extend((lo + span * 10.0**-k, hi - span * 10.0**-k))
    return np.unique(np.array(pts, dtype=float))


@dataclass
class OptimizationResult:
    best_params: dict[str, float]
    best_value: float
    evaluations: int
    grid_value: float
    trace: list[tuple[dict[str, float], float]] | None = field(default=None, repr=False)


def maximize(problem: OptimizationProblem, tol: float = 1e-8, keep_trace: bool = False) -> OptimizationResult:
    names = list(problem.bounds)
    trace: list[tuple[dict[str, float], float]] | None = [] if keep_trace else None
    count = 0

    def evaluate(x: Sequence[float]) -> float:
        nonlocal count
        count += 1
        point = {n: float(v) for n, v in zip(names, x)}
        try:
            val = float(problem.objective(point))
        except (ParameterError, GainError, ZeroDivisionError, ValueError):
            val = math.nan
        if trace is not None:
            trace.append((point, val))
        return val if math.isfinite(val) else -math.inf

    if not names:
        val = evaluate([])
        if val == -math.inf:
            raise OptimizationError(f"{problem.name}: objective is not finite")
        return OptimizationResult({}, val, count, val, trace)

    axes = [_axis(lo, hi, problem.grid, problem.edge_points) for lo, hi in problem.bounds.values()]
    best_x, best_val = None, -math.inf
    for x in itertools.product(*axes):
        val = evaluate(x)
        if val > best_val:
            best_x, best_val = np.array(x, dtype=float), val
    if best_x is None:
        raise OptimizationError(f"{problem.name}: objective is non-finite over the whole grid")
    grid_val = best_val

    # initial simplex: one step to the neighbouring grid point along each axis
    simplex = [best_x.copy()]
    for i, axis in enumerate(axes):
        vertex = best_x.copy()
        if len(axis) > 1:
            j = int(np.searchsorted(axis, best_x[i]))
            vertex[i] = axis[j + 1] if j + 1 < len(axis) else axis[j - 1]
        simplex.append(vertex)
    res = minimize(
        lambda x: -evaluate(x),
        best_x,
        method="Nelder-Mead",
        bounds=list(problem.bounds.values()),
        options={
            "initial_simplex": np.array(simplex),
            "xatol": 1e-12,
            "fatol": tol,
            "maxiter": 4000,
            "maxfev": 8000,
        },
    )
    if math.isfinite(res.fun) and -res.fun > best_val:
        best_x, best_val = np.asarray(res.x, dtype=float), -float(res.fun)
    best = {n: float(v) for n, v in zip(names, best_x)}
    return OptimizationResult(best, best_val, count, grid_val, trace)


def _fidelity_of(params: ProtocolParams) -> float:
    return polarization_fidelity(simulate(params)).total


def fidelity_problem(
    params: ProtocolParams,
    free: Sequence[str] = ("eps1", "eps2"),
    bounds: Mapping[str, tuple[float, float]] | None = None,
    grid: int = DEFAULT_GRID,
) -> OptimizationProblem:
    """Maximize total polarisation fidelity over ``free`` parameter fields."""
    bad = [n for n in free if n in _INFO_GAINS]
    if bad:
        raise ParameterError(f"fidelity is fixed at unity gain; {bad} cannot be free")
    bounds = dict(bounds or {})
    full = {n: bounds.get(n, (0.0, 1.0)) for n in free}

    def objective(point: Mapping[str, float]) -> float:
        return _fidelity_of(replace(params, **point))

    return OptimizationProblem(objective, full, f"fidelity[{params.scheme}]", grid)


def tv_problem(
    params: ProtocolParams,
    vcv_max: float,
    free: Sequence[str] = ("v_plus",),
    bounds: Mapping[str, tuple[float, float]] | None = None,
    g_max: float = 10.0,
    grid: int = DEFAULT_GRID,
) -> OptimizationProblem:
    """Maximize T_q subject to V_cv <= ``vcv_max``; infeasible points are non-finite."""
    bounds = dict(bounds or {})
    full = {}
    for n in free:
        default = (-g_max, g_max) if n in _INFO_GAINS or n == "v_minus" else (0.0, 1.0)
        full[n] = bounds.get(n, default)

    def objective(point: Mapping[str, float]) -> float:
        outcome = simulate(replace(params, **point))
        if conditional_variances(outcome)["Vcv"] > vcv_max:
            return -math.inf
        return transfer_coefficients(outcome)["Tq"]

    return OptimizationProblem(objective, full, f"tq-at-vcv[{params.scheme}]", grid)


BET_REGIMES = tuple(itertools.product((PHASE, AMPLITUDE), (1, -1)))


def bet_regimes(
    vsq: float, vsq3: float, grid: int = DEFAULT_GRID, scheme: str = "bet"
) -> dict[tuple[str, int], OptimizationResult]:
    """Optimum fidelity of each (squeezed quadrature, polarity) regime."""
    out = {}
    for quad, pol in BET_REGIMES:
        p = ProtocolParams(scheme, vsq=vsq, vsq3=vsq3, sq3_quadrature=quad, polarity=pol)
        out[(quad, pol)] = maximize(fidelity_problem(p, grid=grid))
    return out


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    vsq: float
    vsq3: float
    eps1: float | None
    eps2: float | None
    fidelity: float
    fidelity_closed_form: float | None
    evaluations: int

    @property
    def abs_diff(self) -> float | None:
        if self.fidelity_closed_form is None:
            return None
        return abs(self.fidelity - self.fidelity_closed_form)


def _sweep_point(args) -> SweepRow:
    params, free, grid = args
    if params.scheme in ("bet", "optimized-twin") and free:
        res = maximize(fidelity_problem(params, free, grid=grid))
        best = replace(params, **res.best_params)
        fid, evals = res.best_value, res.evaluations
    else:
        best = params
        fid, evals = _fidelity_of(params), 1
    r = best.resolved()
    uses_eps = r.scheme in ("bet", "optimized-twin")
    return SweepRow(
        r.scheme,
        r.vsq,
        r.vsq3,
        r.eps1 if uses_eps else None,
        r.eps2 if uses_eps else None,
        fid,
        reference_fidelity(r),
        evals,
    )


def sweep(
    template: ProtocolParams,
    vsq_grid: Sequence[float],
    tie_vsq3: bool = True,
    free: Sequence[str] = ("eps1", "eps2"),
    grid: int = DEFAULT_GRID,
    parallel: int = 1,
) -> list[SweepRow]:
    """Fidelity versus squeezing; optimizes transmittivities where the scheme has them.

    ``tie_vsq3`` sets the third squeezer equal to ``vsq`` at every point.
    Rows come back in grid order regardless of ``parallel``.
    """
    grid_values = [float(v) for v in vsq_grid]
    if any(b > a for a, b in zip(grid_values, grid_values[1:])) and any(
        b < a for a, b in zip(grid_values, grid_values[1:])
    ):
        raise ValueError("squeezing grid must be monotone")
    jobs = [
        (replace(template, vsq=v, vsq3=v if tie_vsq3 else template.vsq3), tuple(free), grid)
        for v in grid_values
    ]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]
