"""Model parameters, derived scales and time conventions.

Natural units (hbar = 1) are used throughout.  Times are carried both as
the physical time ``t`` and the dimensionless ``T = delta * t / 2``, so
that one Heisenberg time ``t_H = 2 pi / delta`` corresponds to ``T = pi``.

Interval convention: ``m pi < T <= (m + 1) pi`` is interval ``m``; an exact
multiple ``T = m pi`` therefore belongs to the *left* interval ``m - 1``
and ``T = 0`` belongs to interval 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

TWO_PI = 2.0 * math.pi

# alpha this close to 1 is snapped to 0 (alpha is periodic)
ALPHA_SNAP = 1e-12
# relative slack when deciding that t is an exact multiple of t_H
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Discrete level coupled to an equidistant, infinite quasi-continuum.

    Attributes
    ----------
    e_b : float
        Energy of the discrete level.
    delta : float
        Level spacing of the quasi-continuum, ``delta > 0``.
    g : float
        Real coupling between the discrete level and every continuum level.
    """

    e_b: float
    delta: float
    g: float
    alpha: float = field(init=False)
    theta: float = field(init=False)
    gamma: float = field(init=False)
    t_h: float = field(init=False)

    def __post_init__(self):
        for name in ("e_b", "delta", "g"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite real number, got {value!r}")
        if self.delta <= 0:
            raise ParameterError(f"level spacing delta must be positive, got {self.delta}")
        if self.g < 0:
            raise ParameterError(f"coupling g must be non-negative, got {self.g}")
        alpha = offset_parameter(self.e_b, self.delta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "theta", TWO_PI * alpha)
        object.__setattr__(self, "gamma", TWO_PI * self.g**2 / self.delta)
        # written as 2 pi * (1/delta) so it equals 2 pi * rho for rho = 1/delta bit for bit
        object.__setattr__(self, "t_h", TWO_PI * (1.0 / self.delta))

    def with_coupling(self, g: float) -> "ModelParams":
        return ModelParams(self.e_b, self.delta, g)

    def with_alpha(self, alpha: float) -> "ModelParams":
        """Same spacing and coupling, discrete level moved to ``alpha * delta``."""
        return ModelParams(alpha * self.delta, self.delta, self.g)

    def as_dict(self) -> dict:
        return {
            "e_b": self.e_b,
            "delta": self.delta,
            "g": self.g,
            "alpha": self.alpha,
            "theta": self.theta,
            "gamma": self.gamma,
            "t_h": self.t_h,
        }


@dataclass(frozen=True)
class DimensionlessTime:
    T: float
    m: int


def offset_parameter(e_b: float, delta: float) -> float:
    """Fractional position ``alpha in [0, 1)`` of ``e_b`` within a level spacing."""
    ratio = e_b / delta
    alpha = ratio - math.floor(ratio)
    if abs(alpha - 1.0) < ALPHA_SNAP or alpha >= 1.0:
        alpha = 0.0
    return alpha


def derive_params(e_b: float, delta: float, g: float) -> ModelParams:
    return ModelParams(float(e_b), float(delta), float(g))


def interval_index(x, period):
    """Left-convention interval index of ``x`` for intervals of length ``period``.

    ``k * period < x <= (k + 1) * period`` maps to ``k``; ``x = 0`` maps to 0.
    Values within ``BOUNDARY_RTOL`` of a multiple of the period are treated as
    lying exactly on the boundary.  Works elementwise on arrays.
    """
    x = np.asarray(x, dtype=float)
    ratio = x / period
    nearest = np.rint(ratio)
    on_boundary = np.abs(ratio - nearest) <= BOUNDARY_RTOL * np.maximum(1.0, np.abs(ratio))
    k = np.where(on_boundary, nearest - 1, np.floor(ratio))
    k = np.maximum(k, 0).astype(int)
    return k if k.ndim else int(k)


def on_boundary(x, period):
    """Elementwise: is ``x`` a positive multiple of ``period`` (within rounding)?"""
    x = np.asarray(x, dtype=float)
    ratio = x / period
    nearest = np.rint(ratio)
    hit = (np.abs(ratio - nearest) <= BOUNDARY_RTOL * np.maximum(1.0, np.abs(ratio))) & (nearest >= 1)
    return hit if hit.ndim else bool(hit)


def to_dimensionless(t: float, params: ModelParams) -> DimensionlessTime:
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be finite and non-negative, got {t}")
    T = params.delta * t / 2.0
    return DimensionlessTime(T=T, m=interval_index(T, math.pi))


def to_physical(T: float, params: ModelParams) -> float:
    return 2.0 * T / params.delta


def heisenberg_grid(t_h: float, n_intervals: float, points_per_interval: int = 200):
    """Uniform time grid over ``[0, n_intervals * t_h]`` that hits every ``k * t_h``.

    Grid points are ``j * t_h / points_per_interval`` computed from integer
    ``j`` so that boundaries are exact multiples of ``t_h``.
    """
    if points_per_interval < 1:
        raise DomainError("points_per_interval must be >= 1")
    if n_intervals <= 0:
        raise DomainError("n_intervals must be positive")
    n = int(round(n_intervals * points_per_interval))
    j = np.arange(n + 1, dtype=float)
    return j * (t_h / points_per_interval)
