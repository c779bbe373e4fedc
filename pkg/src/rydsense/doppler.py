"""Thermal-velocity averaging over a 1-D Maxwell-Boltzmann distribution.

Velocities are taken along the (collinear) beam axis only. Averages use
compensated summation in fixed node order so results are bit-stable no
matter how callers parallelize the per-node evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.constants as sc

from .errors import RydsenseError

WEIGHT_SUM_TOL = 1e-12


def sigma_v(temperature: float, mass: float) -> float:
    """1-D rms thermal velocity sqrt(kB T / m), m/s."""
    return math.sqrt(sc.k * temperature / mass)


@dataclass(frozen=True)
class VelocityGrid:
    velocities: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.velocities, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.shape != w.shape or v.ndim != 1 or v.size == 0:
            raise RydsenseError("velocity grid needs matching 1-D node and weight arrays")
        if (w < 0).any():
            raise RydsenseError("velocity grid weights must be >= 0")
        total = math.fsum(w.tolist())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise RydsenseError(f"velocity grid weights sum to {total}, expected 1")
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "weights", w)

    @property
    def n_points(self) -> int:
        return self.velocities.size


def make_grid(
    temperature: float,
    mass: float,
    n_points: int = 201,
    span_sigmas: float = 4.0,
    rule: str = "trapezoid",
) -> VelocityGrid:
    """Quadrature grid for Maxwell-Boltzmann averaging.

    "trapezoid" places uniform nodes over +-span_sigmas*sigma_v with
    Gaussian weights (default, resolves narrow sub-Doppler features);
    "gauss-hermite" uses Gauss-Hermite nodes (few points, smooth
    integrands only). n_points = 1 degenerates to a single node at v = 0.
    """
    if n_points < 1:
        raise RydsenseError(f"n_points must be >= 1, got {n_points}")
    if span_sigmas <= 0:
        raise RydsenseError(f"span_sigmas must be > 0, got {span_sigmas}")
    if n_points == 1:
        return VelocityGrid(np.array([0.0]), np.array([1.0]))
    sig = sigma_v(temperature, mass)
    if rule == "trapezoid":
        v = np.linspace(-span_sigmas * sig, span_sigmas * sig, n_points)
        w = np.exp(-(v**2) / (2.0 * sig**2))
        # trapezoid end-point halving, then exact normalization
        w[0] *= 0.5
        w[-1] *= 0.5
        w /= math.fsum(w.tolist())
    elif rule == "gauss-hermite":
        x, wh = np.polynomial.hermite.hermgauss(n_points)
        v = x * math.sqrt(2.0) * sig
        w = wh / math.sqrt(math.pi)
        w /= math.fsum(w.tolist())
    else:
        raise RydsenseError(f"unknown quadrature rule {rule!r}")
    # enforce exact symmetry of the node set about v = 0
    v = 0.5 * (v - v[::-1])
    w = 0.5 * (w + w[::-1])
    w /= math.fsum(w.tolist())
    return VelocityGrid(v, w)


def doppler_average(f: Callable[[float], float], grid: VelocityGrid) -> float:
    """Weighted average of f over the grid; linear in f, exact for constants."""
    return math.fsum(wi * f(vi) for vi, wi in zip(grid.velocities, grid.weights))


def average_values(values: np.ndarray, grid: VelocityGrid) -> float:
    """Average precomputed per-node values (same contract as doppler_average)."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.velocities.shape:
        raise RydsenseError(
            f"values shape {values.shape} does not match grid of {grid.n_points} nodes"
        )
    return math.fsum((grid.weights * values).tolist())
