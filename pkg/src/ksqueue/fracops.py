"""Discrete Caputo and stretched fractional derivatives (L1 scheme)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .specfun import KilbasSaigo, KSParams, kernel_values

__all__ = [
    "SampledFunction",
    "MeshSpec",
    "ResidualResult",
    "caputo_l1",
    "caputo_l1_all",
    "stretched_apply",
    "graded_mesh",
    "relaxation_residual",
]


@dataclass(frozen=True)
class SampledFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ParameterError("grid and values must be 1-d arrays of equal length")
        if grid.size and grid[0] < 0:
            raise ParameterError("grid must start at t >= 0")
        if np.any(np.diff(grid) <= 0):
            raise ParameterError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.size


@dataclass(frozen=True)
class MeshSpec:
    """Graded mesh on [0, t_max]; residuals are reported for t >= t_min only.

    ``grading_exponent=None`` picks min(2/(alpha+gamma), 5).
    """

    t_min: float
    t_max: float
    n_points: int
    grading_exponent: float | None = None

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max):
            raise ParameterError("need 0 < t_min < t_max")
        if self.n_points < 8:
            raise ParameterError("n_points must be >= 8")
        if self.grading_exponent is not None and self.grading_exponent < 1:
            raise ParameterError("grading_exponent must be >= 1")


@dataclass(frozen=True)
class ResidualResult:
    max_residual: float
    residual_curve: SampledFunction


def _l1_weights(grid: np.ndarray, i: int, alpha: float) -> np.ndarray:
    ti = grid[i]
    left = (ti - grid[:i]) ** (1.0 - alpha)
    right = (ti - grid[1 : i + 1]) ** (1.0 - alpha)
    return (left - right) / np.diff(grid[: i + 1])


def caputo_l1(f: SampledFunction, alpha: float, i: int) -> float:
    """L1 approximation of the Caputo derivative of order alpha at grid[i].

    f is taken piecewise linear between nodes and constant on [0, grid[0]].
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"Caputo order must lie in (0, 1), got {alpha}")
    if not (1 <= i < len(f)):
        raise ParameterError(f"index {i} outside 1..{len(f) - 1}")
    w = _l1_weights(f.grid, i, alpha)
    return float(w @ np.diff(f.values[: i + 1])) / math.gamma(2.0 - alpha)


def caputo_l1_all(f: SampledFunction, alpha: float) -> np.ndarray:
    """caputo_l1 at every index 1..N (entry 0 is nan)."""
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"Caputo order must lie in (0, 1), got {alpha}")
    df = np.diff(f.values)
    out = np.full(len(f), np.nan)
    for i in range(1, len(f)):
        out[i] = _l1_weights(f.grid, i, alpha) @ df[:i]
    out[1:] /= math.gamma(2.0 - alpha)
    return out


def _stretched_all(f: SampledFunction, params: KSParams) -> np.ndarray:
    if params.alpha == 1.0:
        out = np.full(len(f), np.nan)
        out[1:] = np.diff(f.values) / np.diff(f.grid)
        return out
    with np.errstate(divide="ignore"):
        return f.grid ** (-params.gamma) * caputo_l1_all(f, params.alpha)


def stretched_apply(f: SampledFunction, params: KSParams, i: int) -> float:
    """t_i^(-gamma) times the L1 Caputo derivative; backward difference when alpha = 1."""
    if not (1 <= i < len(f)):
        raise ParameterError(f"index {i} outside 1..{len(f) - 1}")
    ti = f.grid[i]
    if ti <= 0:
        raise ParameterError("stretched operator is singular at t = 0")
    if params.alpha == 1.0:
        return float((f.values[i] - f.values[i - 1]) / (ti - f.grid[i - 1]))
    return ti ** (-params.gamma) * caputo_l1(f, params.alpha, i)


def graded_mesh(params: KSParams, mesh: MeshSpec) -> np.ndarray:
    r = mesh.grading_exponent
    if r is None:
        r = min(2.0 / params.beta, 5.0)
    s = np.arange(mesh.n_points + 1) / mesh.n_points
    return mesh.t_max * s**r


def relaxation_residual(params: KSParams, theta: float, mesh: MeshSpec) -> ResidualResult:
    """Residual of D^(alpha,gamma) f + theta f for the KS eigenfunction f.

    f(t) = E_{a,m,l}(-theta t^(alpha+gamma)) is sampled on a mesh graded
    towards t = 0; the residual is returned for mesh points with t >= t_min.
    """
    if theta < 0:
        raise ParameterError("theta must be >= 0")
    grid = graded_mesh(params, mesh)
    fvals = np.array([kernel_values(KilbasSaigo(params), [theta], t)[0] for t in grid])
    f = SampledFunction(grid, fvals)
    r = _stretched_all(f, params) + theta * fvals
    keep = grid >= mesh.t_min
    curve = SampledFunction(grid[keep], r[keep])
    return ResidualResult(float(np.max(np.abs(curve.values))), curve)
