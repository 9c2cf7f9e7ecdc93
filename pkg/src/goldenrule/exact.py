"""Exact survival amplitude of the discrete level, all orders in ``g``.

In the interaction picture the amplitude to remain in ``|b>`` is a sum of
echo contributions, one for every Heisenberg time already elapsed::

    S_bb(t) = sum_{k=0}^{K} e^{i k theta} c_k(x_k) e^{-x_k / 2},
    x_k = gamma (t - k t_H),   K = interval index of t.

Summing the Dyson series over the ways ``k`` echo delays can be shared out
among ``r`` of the level-continuum round trips gives::

    c_k(x) = sum_{r=1}^{k} C(k-1, r-1) (-x)^r / r!   (k >= 1),   c_0 = 1,

which coincides with ``-(x/k) L^{(1)}_{k-1}(x)``.  Both constructions are
kept and cross-checked in exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

from .errors import DomainError, NumericalError
from .params import ModelParams, interval_index, on_boundary

DEFAULT_K_MAX = 8
# compositions are enumerated explicitly up to this echo index
ENUMERATION_LIMIT = 12
CROSS_CHECK_LIMIT = 6


@dataclass(frozen=True)
class IntervalTerm:
    """Polynomial ``c_k(x)`` multiplying ``e^{-x/2} e^{i k theta}`` for echo ``k``.

    ``exact`` holds rational coefficients in ascending powers of ``x``;
    ``coefficients`` is the float copy used for evaluation.
    """

    k: int
    exact: Tuple[Fraction, ...]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([float(c) for c in self.exact])

    def __call__(self, x):
        # Horner, highest power first
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        coeffs = self.coefficients
        acc = np.zeros_like(x)
        for p in range(len(coeffs) - 1, 0, -1):
            acc = acc * x + p * coeffs[p]
        return acc


def _compositions(k):
    # ordered tuples of positive integers summing to k
    for cuts in itertools.product((False, True), repeat=k - 1):
        parts, run = [], 1
        for cut in cuts:
            if cut:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield tuple(parts)


def enumerated_coefficients(k: int) -> Tuple[Fraction, ...]:
    """``c_k`` by explicit enumeration of echo assignments.

    Each composition ``(m_1, ..., m_r)`` of ``k`` says which ``r`` round trips
    carry a delay of ``m_j t_H``.  Resumming the remaining undelayed trips
    turns every such composition into ``(-x)^r / r!``.
    """
    if k < 0:
        raise DomainError("echo index must be non-negative")
    if k == 0:
        return (Fraction(1),)
    if k > ENUMERATION_LIMIT:
        raise DomainError(f"explicit enumeration limited to k <= {ENUMERATION_LIMIT}")
    coeffs = [Fraction(0)] * (k + 1)
    for parts in _compositions(k):
        r = len(parts)
        coeffs[r] += Fraction((-1) ** r, math.factorial(r))
    return tuple(coeffs)


def _laguerre(n: int, a: int) -> List[Fraction]:
    # generalized Laguerre L_n^{(a)} in ascending powers, three-term recurrence
    prev = [Fraction(1)]
    if n == 0:
        return prev
    cur = [Fraction(1 + a), Fraction(-1)]
    for j in range(1, n):
        nxt = [Fraction(0)] * (j + 2)
        for p, c in enumerate(cur):
            nxt[p] += (2 * j + 1 + a) * c
            nxt[p + 1] -= c
        for p, c in enumerate(prev):
            nxt[p] -= (j + a) * c
        prev, cur = cur, [c / (j + 1) for c in nxt]
    return cur


def laguerre_coefficients(k: int) -> Tuple[Fraction, ...]:
    """``c_k = -(x/k) L^{(1)}_{k-1}(x)`` from the Laguerre recurrence."""
    if k < 0:
        raise DomainError("echo index must be non-negative")
    if k == 0:
        return (Fraction(1),)
    lag = _laguerre(k - 1, 1)
    return (Fraction(0),) + tuple(-c / k for c in lag)


def interval_terms(k_max: int, method: str = "laguerre") -> List[IntervalTerm]:
    """Echo polynomials ``c_0 .. c_{k_max}``.

    With ``method="laguerre"`` every term with ``k <= CROSS_CHECK_LIMIT`` is
    compared coefficient by coefficient with the explicit enumeration before
    being returned.
    """
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    if method not in ("laguerre", "enumeration"):
        raise ValueError(f"unknown method {method!r}")
    terms = []
    for k in range(k_max + 1):
        if method == "enumeration":
            coeffs = enumerated_coefficients(k)
        else:
            coeffs = laguerre_coefficients(k)
            if k <= CROSS_CHECK_LIMIT and coeffs != enumerated_coefficients(k):
                raise NumericalError(f"Laguerre form disagrees with enumeration at k={k}", {"k": k})
        terms.append(IntervalTerm(k, coeffs))
    return terms


_TERM_CACHE: Dict[int, List[IntervalTerm]] = {}


def _terms(k_max):
    if k_max not in _TERM_CACHE:
        _TERM_CACHE[k_max] = interval_terms(k_max)
    return _TERM_CACHE[k_max]


def _echo_counts(params, t, side):
    K = interval_index(t, params.t_h)
    if side == "right":
        K = K + np.asarray(on_boundary(t, params.t_h), dtype=int)
    elif side != "left":
        raise ValueError("side must be 'left' or 'right'")
    return K


def _prepare(params, t, k_max, side):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise DomainError("times must be finite and non-negative")
    K = np.atleast_1d(_echo_counts(params, t, side))
    need = int(K.max(initial=0))
    if need > k_max:
        raise DomainError(
            f"t reaches echo index {need} > k_max={k_max}; "
            "raise k_max or use the numeric propagator for this span"
        )
    return t, K, _terms(k_max)


def survival_amplitude(params: ModelParams, t, k_max: int = DEFAULT_K_MAX, side: str = "left"):
    """Interaction-picture amplitude ``S_bb(t)``; scalar or array ``t``.

    At exact multiples of ``t_H`` the left-interval expression is used by
    default; ``side="right"`` includes the echo that starts there (whose
    polynomial vanishes at ``x = 0``, so the two agree).
    """
    t, K, terms = _prepare(params, t, k_max, side)
    flat = np.atleast_1d(t)
    out = np.zeros(flat.shape, dtype=complex)
    for k in range(int(K.max(initial=0)) + 1):
        active = K >= k
        x = params.gamma * (flat[active] - k * params.t_h)
        out[active] += np.exp(1j * k * params.theta) * terms[k](x) * np.exp(-x / 2.0)
    return complex(out[0]) if t.ndim == 0 else out


def survival_amplitude_derivative(params: ModelParams, t, k_max: int = DEFAULT_K_MAX, side: str = "left"):
    """One-sided ``dS_bb/dt``; discontinuous at multiples of ``t_H``."""
    t, K, terms = _prepare(params, t, k_max, side)
    flat = np.atleast_1d(t)
    out = np.zeros(flat.shape, dtype=complex)
    for k in range(int(K.max(initial=0)) + 1):
        active = K >= k
        x = params.gamma * (flat[active] - k * params.t_h)
        term = terms[k]
        out[active] += (
            np.exp(1j * k * params.theta) * params.gamma * (term.derivative(x) - 0.5 * term(x)) * np.exp(-x / 2.0)
        )
    return complex(out[0]) if t.ndim == 0 else out


def survival_probability(params: ModelParams, t, k_max: int = DEFAULT_K_MAX, side: str = "left"):
    return np.abs(survival_amplitude(params, t, k_max=k_max, side=side)) ** 2


def survival_probability_derivative(params: ModelParams, t, k_max: int = DEFAULT_K_MAX, side: str = "left"):
    """One-sided ``dP_i/dt = 2 Re(conj(S) dS/dt)``."""
    s = survival_amplitude(params, t, k_max=k_max, side=side)
    ds = survival_amplitude_derivative(params, t, k_max=k_max, side=side)
    return 2.0 * np.real(np.conj(s) * ds)


@dataclass
class AmplitudeSeries:
    times: np.ndarray
    amplitudes: np.ndarray
    survival: np.ndarray
    interval_ids: np.ndarray
    boundary_values: Dict[int, Tuple[complex, complex]]


def validate_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1:
        raise DomainError("time grid must be one-dimensional")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise DomainError("time grid must be finite and non-negative")
    if np.any(np.diff(grid) < 0):
        raise DomainError("time grid must be sorted")
    return grid


def survival_probability_series(params: ModelParams, grid, k_max: int = DEFAULT_K_MAX) -> AmplitudeSeries:
    grid = validate_grid(grid)
    amps = survival_amplitude(params, grid, k_max=k_max)
    boundary = {}
    for t in grid[on_boundary(grid, params.t_h)]:
        k = int(round(t / params.t_h))
        if k in boundary:
            continue
        right = survival_amplitude(params, t, k_max=k_max, side="right") if k <= k_max else None
        boundary[k] = (survival_amplitude(params, t, k_max=k_max), right)
    survival = np.abs(amps) ** 2
    return AmplitudeSeries(
        times=grid,
        amplitudes=amps,
        survival=survival,
        interval_ids=np.atleast_1d(interval_index(grid, params.t_h)),
        boundary_values=boundary,
    )
