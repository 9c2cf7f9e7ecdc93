"""Observables extracted from sampled curves.

Kink detection, rate fits, the per-interval golden-rule deviation table and
the coupling-order scaling of the first-order residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import AnalysisError
from .exact import DEFAULT_K_MAX, survival_probability
from .first_order import p_ideal_first_order
from .params import ModelParams, heisenberg_grid, interval_index

MIN_POINTS_PER_TH = 50


@dataclass
class KinkReport:
    """Detected slope discontinuities of a sampled curve.

    ``slopes`` holds the (left, right) one-sided slopes at each location and
    ``significance`` the gap divided by the combined fit, model and
    continuity error.
    ``matched`` pairs every expected location with the detection within
    ``match_tol`` of it, or ``None``.
    """

    locations: List[float]
    slopes: List[Tuple[float, float]]
    gaps: List[float]
    standard_errors: List[float]
    model_errors: List[float]
    significance: List[float]
    expected: List[float]
    matched: List[Tuple[float, Optional[float]]]
    match_tol: float

    @property
    def unmatched_detections(self) -> List[float]:
        hits = {loc for _, loc in self.matched if loc is not None}
        return [loc for loc in self.locations if loc not in hits]

    @property
    def all_matched(self) -> bool:
        return all(loc is not None for _, loc in self.matched)


def _one_sided_fit(x, y, degree):
    # least squares in x; returns value, slope, their std errors
    X = np.vander(x, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(x.size - degree - 1, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.pinv(X.T @ X)
    return coef[0], coef[1], math.sqrt(max(cov[1, 1], 0.0))


def _check_curve(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise AnalysisError("curve must be two 1-d arrays of equal length")
    if np.any(np.diff(t) < 0):
        raise AnalysisError("curve abscissae must be sorted")
    # boundary points may be listed twice (once per side)
    t, idx = np.unique(t, return_index=True)
    return t, y[idx]


def detect_kinks(
    t,
    y,
    t_h: float,
    K: Optional[int] = None,
    window: float = 0.2,
    exclusion: float = 0.02,
    degree: int = 2,
    threshold: float = 5.0,
    floor: float = 1e-8,
) -> KinkReport:
    """Locate slope discontinuities of ``y(t)``.

    At every grid point ``c`` whose neighbourhood ``[c - window t_H,
    c + window t_H]`` lies inside the data, polynomials of ``degree`` are
    fitted separately to the left and right neighbourhoods (leaving out
    ``exclusion t_H`` on either side of ``c``) and their slopes at ``c`` are
    compared.  The gap counts as significant when it exceeds ``threshold``
    times ``sqrt(se^2 + model^2 + defect^2)``: ``se`` is the least-squares
    standard error, ``model`` the change of the gap when the fit degree is
    raised by one (smooth curvature would otherwise pose as a kink) and
    ``defect`` the mismatch of the two fitted values at ``c`` divided by the
    exclusion width (a kink lying inside one of the fit windows produces a
    large mismatch).  Gaps below ``floor`` times the largest slope of the
    curve are ignored.

    Contiguous runs of significant points are collapsed to the most
    significant one; of two such detections closer than ``2 * exclusion``
    only the stronger survives.  Each location is finally moved to where the
    two one-sided fits intersect.
    """
    t, y = _check_curve(t, y)
    if t.size < 3:
        raise AnalysisError("curve too short for kink detection")
    spacing = float(np.median(np.diff(t)))
    if spacing <= 0 or t_h / spacing < MIN_POINTS_PER_TH - 1e-9:
        raise AnalysisError(
            f"grid too coarse: {t_h / spacing if spacing > 0 else 0:.1f} points per t_H, need >= {MIN_POINTS_PER_TH}"
        )
    slope_scale = float(np.abs(np.diff(y) / np.diff(t)).max()) if t.size > 1 else 0.0
    L = window * t_h
    ex = exclusion * t_h
    slack = 1e-9 * t_h

    rows = []
    for i, c in enumerate(t):
        if c - L < t[0] - slack or c + L > t[-1] + slack:
            continue
        left = (t >= c - L - slack) & (t <= c - ex + slack)
        right = (t >= c + ex - slack) & (t <= c + L + slack)
        if left.sum() < degree + 3 or right.sum() < degree + 3:
            continue
        xl = (t[left] - c) / t_h
        xr = (t[right] - c) / t_h
        a_l, s_l, e_l = _one_sided_fit(xl, y[left], degree)
        a_r, s_r, e_r = _one_sided_fit(xr, y[right], degree)
        _, s_l2, _ = _one_sided_fit(xl, y[left], degree + 1)
        _, s_r2, _ = _one_sided_fit(xr, y[right], degree + 1)
        gap = s_r - s_l
        se = math.hypot(e_l, e_r)
        model = abs(gap - (s_r2 - s_l2))
        # a kink is continuous: both fits must reach the same value at c
        defect = abs(a_r - a_l) / exclusion
        denom = math.hypot(se, model, defect)
        sig = abs(gap) / denom if denom > 0 else (math.inf if gap != 0 else 0.0)
        flagged = sig >= threshold and abs(gap) > floor * slope_scale * t_h and abs(gap) > threshold * se
        rows.append((i, c, a_l, s_l / t_h, a_r, s_r / t_h, gap / t_h, se / t_h, model / t_h, sig, flagged))

    # collapse contiguous flagged runs
    clusters = []
    current = []
    prev_i = None
    for row in rows:
        if row[-1] and (prev_i is not None and row[0] == prev_i + 1 and current):
            current.append(row)
        elif row[-1]:
            if current:
                clusters.append(current)
            current = [row]
        else:
            if current:
                clusters.append(current)
            current = []
        prev_i = row[0]
    if current:
        clusters.append(current)

    # strongest first; anything within two exclusion widths of a kept kink is its echo
    kept = []
    for cluster in sorted(clusters, key=lambda cl: -max(r[9] for r in cl)):
        best = max(cluster, key=lambda r: r[9])
        if all(abs(best[1] - other[1]) > 2 * ex for other in kept):
            kept.append(best)
    kept.sort(key=lambda r: r[1])

    locations, slopes, gaps, ses, models, sigs = [], [], [], [], [], []
    for best in kept:
        _, c, a_l, s_l, a_r, s_r, gap, se, model, sig, _ = best
        loc = c
        if s_l != s_r:
            shift = (a_r - a_l) / (s_l - s_r)
            if abs(shift) <= ex:
                loc = c + shift
        locations.append(float(loc))
        slopes.append((float(s_l), float(s_r)))
        gaps.append(float(gap))
        ses.append(float(se))
        models.append(float(model))
        sigs.append(float(sig))

    if K is None:
        K = int(math.floor((t[-1] - L) / t_h + 1e-9))
    expected = [k * t_h for k in range(1, K + 1)]
    tol = exclusion * t_h
    matched = []
    for e in expected:
        near = [loc for loc in locations if abs(loc - e) <= tol]
        matched.append((e, min(near, key=lambda loc: abs(loc - e)) if near else None))
    return KinkReport(locations, slopes, gaps, ses, models, sigs, expected, matched, tol)


@dataclass
class RateFit:
    rate: float
    t_lo: float
    t_hi: float
    residual_rms: float
    reference: Optional[float]
    mode: str
    n_points: int

    @property
    def relative_error(self) -> Optional[float]:
        if self.reference is None:
            return None
        if self.reference == 0:
            return abs(self.rate)
        return abs(self.rate - self.reference) / abs(self.reference)


def fit_rate(t, y, t_h: float, mode: str = "linear", window=None, reference=None, skip_fraction: float = 0.05) -> RateFit:
    """Least-squares decay or growth rate inside the first Heisenberg interval.

    ``mode="linear"`` fits the slope of ``y`` (a transition probability);
    ``mode="log"`` fits the slope of ``-log y`` (a survival probability).
    The first ``skip_fraction`` of the window is left out.
    """
    t, y = _check_curve(t, y)
    if mode not in ("linear", "log"):
        raise AnalysisError(f"unknown fit mode {mode!r}")
    t_lo, t_hi = window if window is not None else (0.0, t_h)
    if not (0.0 <= t_lo < t_hi <= t_h * (1 + 1e-12)):
        raise AnalysisError(f"fit window ({t_lo}, {t_hi}) must lie inside (0, t_H]")
    start = t_lo + skip_fraction * (t_hi - t_lo)
    sel = (t >= start) & (t <= t_hi) & (t > 0)
    if sel.sum() < 20:
        raise AnalysisError(f"fit window holds {int(sel.sum())} points, need >= 20")
    x = t[sel]
    if mode == "log":
        if np.any(y[sel] <= 0):
            raise AnalysisError("log-survival fit needs positive values")
        v = -np.log(y[sel])
    else:
        v = y[sel]
    X = np.vander(x, 2, increasing=True)
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    rms = float(np.sqrt(np.mean((v - X @ coef) ** 2)))
    return RateFit(float(coef[1]), float(start), float(t_hi), rms, reference, mode, int(sel.sum()))


@dataclass
class BreakdownRow:
    alpha: float
    interval: int
    max_relative_deviation: float
    max_absolute_deviation: float
    t_at_max: float


def breakdown_scan(params_list: Sequence[ModelParams], n_intervals: int = 3, points_per_interval: int = 200) -> List[BreakdownRow]:
    """Per-interval deviation of the first-order ``P(t)`` from ``gamma t``.

    Relative deviations ``|P - gamma t| / (gamma t)`` are exact zeros on the
    first interval and of order one beyond it.  Absolute deviations are
    reported too, since the relative measure is meaningless when
    ``gamma = 0``.
    """
    if n_intervals < 3:
        raise AnalysisError("breakdown scan needs a span of at least 3 t_H")
    rows = []
    for params in params_list:
        grid = heisenberg_grid(params.t_h, n_intervals, points_per_interval)[1:]
        p = p_ideal_first_order(params, grid)
        golden = params.gamma * grid
        abs_dev = np.abs(p - golden)
        rel_dev = np.where(golden > 0, abs_dev / np.where(golden > 0, golden, 1.0), 0.0)
        ids = interval_index(grid, params.t_h)
        for k in range(n_intervals):
            sel = ids == k
            j = int(np.argmax(rel_dev[sel]))
            rows.append(
                BreakdownRow(
                    alpha=params.alpha,
                    interval=k,
                    max_relative_deviation=float(rel_dev[sel][j]),
                    max_absolute_deviation=float(abs_dev[sel].max()),
                    t_at_max=float(grid[sel][j]),
                )
            )
    return rows


@dataclass
class ScalingReport:
    t: float
    couplings: List[float]
    residuals: List[float]
    power: float


def order_scaling(params: ModelParams, t: float, g_list: Sequence[float], k_max: int = DEFAULT_K_MAX) -> ScalingReport:
    """Power law of ``|(1 - P_i) - P_first_order|`` in the coupling.

    The next correction beyond first order is ``O(g^4)``, so the fitted
    exponent should sit near 4.  Zero couplings give a zero residual and are
    left out of the fit.
    """
    residuals = []
    for g in g_list:
        p = params.with_coupling(g)
        exact = 1.0 - float(survival_probability(p, t, k_max=k_max))
        first = float(p_ideal_first_order(p, t))
        residuals.append(abs(exact - first))
    use = [(g, r) for g, r in zip(g_list, residuals) if g > 0 and r > 0]
    if len(use) >= 2:
        slope = np.polyfit(np.log([g for g, _ in use]), np.log([r for _, r in use]), 1)[0]
        power = float(slope)
    else:
        power = float("nan")
    return ScalingReport(float(t), [float(g) for g in g_list], residuals, power)
