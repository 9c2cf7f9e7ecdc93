"""First-order transition probability into a quasi-continuum.

Three routes to the same quantity:

* :func:`p_first_order_generic` sums the first-order populations of an
  arbitrary discrete spectrum level by level;
* :func:`p_first_order_integral` replaces that sum by an integral over a
  density of states;
* :func:`w_alpha` is the exact closed form for the equidistant model,
  ``P = (4 g^2 / delta^2) W_alpha(T)``, piecewise linear in ``T`` with kinks
  at ``T = m pi``.  :func:`w_alpha_direct` is the brute-force sampling sum
  it is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError
from .params import TWO_PI, ModelParams, interval_index

# |sin(theta/2)| below this switches W_alpha to the cosine-sum form
SMALL_HALF_SINE = 1e-8
# resonant term |E_n - E_b| below RESONANCE_RTOL * energy scale uses the t^2 limit
RESONANCE_RTOL = 1e-12


@dataclass(frozen=True)
class SpectrumSpec:
    """A finite quasi-continuum: level energies and couplings to ``|b>``.

    ``band`` is the interval ``(a, b)`` the continuum covers (edges may be
    infinite) and ``density`` the density of states used by the integral
    approximation and :func:`validity_window`.
    """

    energies: np.ndarray
    couplings: np.ndarray
    band: Optional[tuple] = None
    density: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        couplings = np.asarray(self.couplings, dtype=float)
        if energies.ndim != 1 or couplings.shape != energies.shape:
            raise DomainError("energies and couplings must be 1-d arrays of equal length")
        if not np.all(np.isfinite(energies)) or not np.all(np.isfinite(couplings)):
            raise DomainError("energies and couplings must be finite")
        if energies.size > 1 and not np.all(np.diff(energies) > 0):
            raise DomainError("level energies must be strictly increasing")
        if self.band is not None:
            a, b = self.band
            if not a < b:
                raise DomainError(f"band edges must satisfy a < b, got {self.band}")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "couplings", couplings)

    @property
    def energy_scale(self) -> float:
        if self.energies.size > 1:
            return float(np.median(np.diff(self.energies)))
        return max(1.0, abs(float(self.energies[0])) if self.energies.size else 1.0)


@dataclass(frozen=True)
class ValidityWindow:
    t_min: float
    t_max: float
    nonempty: bool


class DirectSum(NamedTuple):
    value: float
    tail_bound: float


def ideal_spectrum(params: ModelParams, n_max: int) -> SpectrumSpec:
    """Equidistant levels ``n * delta`` for ``|n| <= n_max``, all coupled with ``g``.

    The declared band is the whole real line, with constant density ``1/delta``.
    """
    n = np.arange(-n_max, n_max + 1, dtype=float)
    inv_delta = 1.0 / params.delta
    return SpectrumSpec(
        energies=n * params.delta,
        couplings=np.full(n.shape, params.g),
        band=(-math.inf, math.inf),
        density=lambda e: inv_delta,
    )


def p_first_order_generic(spec: SpectrumSpec, e_b: float, t: float) -> float:
    """First-order probability of having left ``|b>`` after time ``t``.

    ``sum_n |g_n|^2 * 4 sin^2((E_n - E_b) t / 2) / (E_n - E_b)^2``, with the
    resonant term replaced by its limit ``|g_n|^2 t^2``.
    """
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    detuning = spec.energies - e_b
    weight = np.abs(spec.couplings) ** 2
    resonant = np.abs(detuning) < RESONANCE_RTOL * spec.energy_scale
    safe = np.where(resonant, 1.0, detuning)
    terms = np.where(
        resonant,
        weight * t * t,
        weight * 4.0 * np.sin(safe * t / 2.0) ** 2 / safe**2,
    )
    return float(np.sum(terms))


def _weight_integrand(rho, g, e_b, t):
    half_t = t / 2.0

    def f(eps):
        d = eps - e_b
        if d == 0.0:
            lump = t * t
        else:
            lump = 4.0 * math.sin(d * half_t) ** 2 / (d * d)
        return rho(eps) * abs(g(eps)) ** 2 * lump

    return f


def p_first_order_integral(rho, g, a, b, e_b, t, epsrel=1e-8, max_segments=4000):
    """Continuum approximation of :func:`p_first_order_generic`.

    Integrates ``rho(e) |g(e)|^2 * 4 sin^2((e - E_b) t/2) / (e - E_b)^2`` over
    ``[a, b]``.  The range is cut at the zeros ``E_b + 2 pi k / t`` of the lump
    function so each lump is integrated separately; beyond ``max_segments``
    cuts the remaining tails go to a single adaptive call each.
    """
    if not a < e_b < b:
        raise DomainError(f"need a < E_b < b, got a={a}, E_b={e_b}, b={b}")
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")
    f = _weight_integrand(rho, g, e_b, t)
    period = TWO_PI / t
    k_hi = min(math.floor((b - e_b) / period), max_segments // 2)
    k_lo = min(math.floor((e_b - a) / period), max_segments // 2)
    cuts = [a] + [e_b - k * period for k in range(k_lo, 0, -1)] + [e_b]
    cuts += [e_b + k * period for k in range(1, k_hi + 1)] + [b]
    cuts = sorted(set(c for c in cuts if a <= c <= b))

    # quadpack refuses relative tolerances near machine epsilon
    seg_rel = max(epsrel * 1e-2, 1e-13)
    total = 0.0
    abserr = 0.0
    failures = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        value, err, info = integrate.quad(f, lo, hi, epsrel=seg_rel, epsabs=0.0, limit=200, full_output=1)[:3]
        if not math.isfinite(value) or not math.isfinite(err):
            failures.append((lo, hi, "non-finite"))
        total += value
        abserr += err
    if failures or not abserr <= epsrel * max(abs(total), 1e-300) * 10:
        raise NumericalError(
            "quadrature of the first-order lump did not converge",
            {"value": total, "abserr": abserr, "segments": len(cuts) - 1, "failures": failures},
        )
    return total


def dirichlet_slope(m, theta):
    """``sin((2m+1) theta/2) / sin(theta/2)``, i.e. ``sum_{|n|<=m} e^{i n theta}``."""
    m = np.asarray(m)
    s = math.sin(theta / 2.0)
    if abs(s) < SMALL_HALF_SINE:
        return _cosine_sum_slope(m, theta)
    return np.sin((2 * m + 1) * theta / 2.0) / s


def kink_value(m, theta):
    """``sin^2(m theta/2) / sin^2(theta/2)``: ``W_alpha(m pi) / pi^2``."""
    m = np.asarray(m)
    s = math.sin(theta / 2.0)
    if abs(s) < SMALL_HALF_SINE:
        return _cosine_sum_offset(m, theta)
    return np.sin(m * theta / 2.0) ** 2 / (s * s)


def _cosine_sum_slope(m, theta):
    # 1 + 2 sum_{n=1}^m cos(n theta); no division, exact limit 2m+1 at theta=0
    m = np.asarray(m)
    out = np.ones(m.shape)
    for n in range(1, int(m.max(initial=0)) + 1):
        out += np.where(n <= m, 2.0 * math.cos(n * theta), 0.0)
    return out


def _cosine_sum_offset(m, theta):
    # Fejer form: m + 2 sum_{n=1}^{m-1} (m - n) cos(n theta); limit m^2
    m = np.asarray(m)
    out = m.astype(float).copy()
    for n in range(1, int(m.max(initial=0))):
        out += np.where(n < m, 2.0 * (m - n) * math.cos(n * theta), 0.0)
    return out


def _check_alpha(alpha):
    if not (0.0 <= alpha < 1.0) or not math.isfinite(alpha):
        raise DomainError(f"offset alpha must lie in [0, 1), got {alpha}")


def w_alpha(T, alpha):
    """Closed-form ``W_alpha(T) = T^2 sum_m sinc^2((m - alpha) T)``.

    On ``m pi < T <= (m+1) pi``::

        W = pi D_m(theta) (T - m pi) + pi^2 sin^2(m theta/2) / sin^2(theta/2)

    with ``theta = 2 pi alpha`` and the Dirichlet kernel ``D_m``.  Near
    ``theta = 0`` both factors are evaluated as finite cosine sums.
    Accepts scalar or array ``T``.
    """
    _check_alpha(alpha)
    T_arr = np.asarray(T, dtype=float)
    if np.any(T_arr < 0) or not np.all(np.isfinite(T_arr)):
        raise DomainError("T must be finite and non-negative")
    theta = TWO_PI * alpha
    m = interval_index(T_arr, math.pi)
    out = math.pi * dirichlet_slope(m, theta) * (T_arr - m * math.pi) + math.pi**2 * kink_value(m, theta)
    return float(out) if np.ndim(out) == 0 else out


def w_alpha_slope(m, alpha):
    """Slope ``dW/dT`` on interval ``m``."""
    _check_alpha(alpha)
    return math.pi * dirichlet_slope(m, TWO_PI * alpha)


def w_alpha_direct(T: float, alpha: float, M: int = 1_000_000) -> DirectSum:
    """Brute-force ``T^2 sum_{|m|<=M} sinc^2((m - alpha) T)``.

    Returns the truncated sum and a rigorous bound on the omitted tail.
    Each term is ``sin^2((m - alpha) T) / (m - alpha)^2``, so the tail is
    at most ``sum_{|m|>M} 1/(m - alpha)^2 <= 1/(M - alpha) + 1/M`` in
    absolute terms, whatever ``T``.
    """
    if M < 1:
        raise DomainError("truncation M must be >= 1")
    if T < 0:
        raise DomainError("T must be non-negative")
    tail = 1.0 / (M - alpha) + 1.0 / M if M > alpha else math.inf
    if T == 0:
        return DirectSum(0.0, tail)
    x = (np.arange(-M, M + 1, dtype=float) - alpha) * T
    # np.sinc(u) = sin(pi u)/(pi u), exact 1 at u = 0
    terms = np.sinc(x / math.pi) ** 2
    return DirectSum(float(T * T * np.sum(terms)), tail)


def p_ideal_first_order(params: ModelParams, t):
    """``(4 g^2 / delta^2) W_alpha(delta t / 2)``; scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("time must be non-negative")
    pref = 4.0 * params.g**2 / params.delta**2
    return pref * w_alpha(params.delta * t_arr / 2.0, params.alpha)


def golden_rule_rate(rho_at_eb: float, g_at_eb: float) -> float:
    if rho_at_eb < 0:
        raise DomainError("density of states must be non-negative")
    return TWO_PI * abs(g_at_eb) ** 2 * rho_at_eb


def validity_window(spec: SpectrumSpec, e_b: float) -> ValidityWindow:
    """Raw time bounds for the golden rule on a band with density of states.

    The lower bound comes from requiring the lump width ``2 pi / t`` to fit
    inside the band, the upper one from requiring the level spacing
    ``1/rho`` to be finer than the lump.  No safety factor is applied.
    """
    if spec.band is None or spec.density is None:
        raise DomainError("validity window needs band edges and a density of states")
    a, b = spec.band
    if not a < e_b < b:
        raise DomainError(f"E_b = {e_b} lies outside the band ({a}, {b})")
    rho = spec.density(e_b)
    if not rho > 0:
        raise DomainError("density of states at E_b must be positive")
    nearest_edge = min(abs(a - e_b), abs(b - e_b))
    t_min = 0.0 if math.isinf(nearest_edge) else TWO_PI / nearest_edge
    t_max = TWO_PI * rho
    return ValidityWindow(t_min=t_min, t_max=t_max, nonempty=t_min < t_max)
