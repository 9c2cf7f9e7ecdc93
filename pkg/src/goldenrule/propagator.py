"""Brute-force propagation of the truncated level-continuum Hamiltonian.

The continuum is cut to ``n = -N .. N``, giving a real symmetric
``(2N + 2) x (2N + 2)`` arrowhead matrix with ``|b>`` first.  Its
eigendecomposition gives ``psi(t) = Q exp(-i Lambda t) Q^T psi(0)`` for any
``t`` without time stepping, so unitarity holds to roundoff.

This module does not use any of the closed-form results and serves as the
independent reference for them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .arrowhead import ArrowheadEigen, arrowhead_eigh
from .errors import DomainError, NumericalError
from .exact import validate_grid
from .params import ModelParams

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-10
EDGE_FRACTION = 0.05
EDGE_POPULATION_TOL = 1e-6
DEFAULT_N = 1000
# above this dimension the orthogonality check uses random probe vectors
_FULL_CHECK_DIM = 2500


@dataclass
class PropagatorState:
    """Diagonalized truncated Hamiltonian.

    ``eigenvectors`` is ``None`` for the arrowhead method, whose vectors are
    regenerated on demand from the secular roots.
    """

    params: ModelParams
    n_trunc: int
    e_b_sim: float
    levels: np.ndarray
    eigenvalues: np.ndarray
    head: np.ndarray
    method: str
    eigenvectors: Optional[np.ndarray] = None
    arrow: Optional[ArrowheadEigen] = field(default=None, repr=False)
    orthogonality_error: float = float("nan")

    @property
    def dim(self) -> int:
        return self.levels.size + 1

    def hamiltonian(self) -> np.ndarray:
        return hamiltonian(self.e_b_sim, self.levels, self.params.g)

    def vector_rows(self, rows) -> np.ndarray:
        """Rows of the eigenvector matrix (row 0 is ``|b>``, row ``j`` is level ``j-1``)."""
        rows = np.asarray(rows)
        if self.eigenvectors is not None:
            return self.eigenvectors[rows]
        out = np.empty((rows.size, self.eigenvalues.size))
        is_head = rows == 0
        out[is_head] = self.head
        if (~is_head).any():
            out[~is_head] = self.arrow.vector_rows(rows[~is_head] - 1)
        return out


@dataclass
class Propagation:
    times: np.ndarray
    survival: np.ndarray
    transferred: np.ndarray
    norm: np.ndarray
    amplitude: np.ndarray


def hamiltonian(e_b: float, levels, g: float) -> np.ndarray:
    levels = np.asarray(levels, dtype=float)
    n = levels.size + 1
    H = np.zeros((n, n))
    H[0, 0] = e_b
    H[0, 1:] = g
    H[1:, 0] = g
    H[np.arange(1, n), np.arange(1, n)] = levels
    return H


def _orthogonality_error(state: PropagatorState) -> float:
    if state.eigenvectors is not None and state.dim <= _FULL_CHECK_DIM:
        Q = state.eigenvectors
        return float(np.abs(Q.T @ Q - np.eye(state.dim)).max())
    # Q^T Q x = x for a few fixed probes; O(dim^2) instead of O(dim^3)
    rng = np.random.default_rng(12345)
    probes = rng.standard_normal((state.dim, 4))
    Q = state.eigenvectors if state.eigenvectors is not None else state.vector_rows(np.arange(state.dim))
    resid = Q.T @ (Q @ probes) - probes
    return float(np.abs(resid).max() / np.abs(probes).max())


def build(params: ModelParams, n_trunc: int = DEFAULT_N, method: str = "dense", check: bool = True) -> PropagatorState:
    """Assemble and diagonalize the truncated Hamiltonian.

    The discrete level is placed at ``alpha * delta`` in ``[0, delta)``;
    only ``alpha`` enters the dynamics, and this keeps the resonance at the
    centre of the truncated band.  ``method`` is ``"dense"`` (LAPACK
    ``eigh``) or ``"arrowhead"`` (secular equation, O(N^2)).
    """
    if n_trunc < 1:
        raise DomainError("truncation N must be >= 1")
    levels = np.arange(-n_trunc, n_trunc + 1, dtype=float) * params.delta
    e_b_sim = params.alpha * params.delta
    if params.g == 0:
        # diagonal: sort the head level into place
        eigenvalues = np.concatenate([[e_b_sim], levels])
        vectors = np.eye(levels.size + 1)
        order = np.argsort(eigenvalues, kind="stable")
        state = PropagatorState(params, n_trunc, e_b_sim, levels, eigenvalues[order], vectors[0, order], "dense", vectors[:, order])
    elif method == "dense":
        try:
            w, Q = np.linalg.eigh(hamiltonian(e_b_sim, levels, params.g))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigensolver failed: {exc}", {"N": n_trunc}) from exc
        state = PropagatorState(params, n_trunc, e_b_sim, levels, w, Q[0].copy(), "dense", Q)
    elif method == "arrowhead":
        arrow = arrowhead_eigh(e_b_sim, np.full(levels.size, params.g), levels)
        state = PropagatorState(params, n_trunc, e_b_sim, levels, arrow.eigenvalues, arrow.first_components(), "arrowhead", arrow=arrow)
    else:
        raise ValueError(f"unknown method {method!r}")
    if check:
        err = _orthogonality_error(state)
        state.orthogonality_error = err
        if not err <= ORTHOGONALITY_TOL:
            raise NumericalError("eigenvectors not orthogonal", {"max_error": err, "N": n_trunc, "method": state.method})
    return state


def _phases(state, times):
    return np.exp(-1j * np.outer(state.eigenvalues, times))


def survival_amplitude(state: PropagatorState, grid) -> np.ndarray:
    """Interaction-picture ``<b| e^{iH_0 t} e^{-iHt} |b>``, comparable to the closed form."""
    grid = np.asarray(grid, dtype=float)
    amp = (state.head**2) @ _phases(state, grid)
    return amp * np.exp(1j * state.e_b_sim * grid)


def evolve(state: PropagatorState, psi, t: float) -> np.ndarray:
    """``e^{-iHt} psi`` for a single (possibly negative) time."""
    psi = np.asarray(psi, dtype=complex)
    Q = state.eigenvectors if state.eigenvectors is not None else state.vector_rows(np.arange(state.dim))
    return Q @ (np.exp(-1j * state.eigenvalues * t) * (Q.T @ psi))


def propagate(state: PropagatorState, grid, chunk: int = 256) -> Propagation:
    """Full state evolution from ``|b>``; returns ``P_i``, ``P`` and the norm per time."""
    grid = validate_grid(grid)
    survival = np.empty(grid.size)
    transferred = np.empty(grid.size)
    norm = np.empty(grid.size)
    Q = state.eigenvectors if state.eigenvectors is not None else state.vector_rows(np.arange(state.dim))
    for lo in range(0, grid.size, chunk):
        sl = slice(lo, lo + chunk)
        psi = Q @ (state.head[:, None] * _phases(state, grid[sl]))
        pop = np.abs(psi) ** 2
        survival[sl] = pop[0]
        transferred[sl] = pop[1:].sum(axis=0)
        norm[sl] = survival[sl] + transferred[sl]
    return Propagation(grid, survival, transferred, norm, survival_amplitude(state, grid))


def edge_population(state: PropagatorState, grid, fraction: float = EDGE_FRACTION) -> np.ndarray:
    """Population in the outermost ``fraction`` of continuum levels at each time."""
    grid = np.asarray(grid, dtype=float)
    n_levels = state.levels.size
    n_edge = max(1, int(math.ceil(fraction * n_levels / 2.0)))
    rows = np.concatenate([np.arange(1, n_edge + 1), np.arange(n_levels - n_edge + 1, n_levels + 1)])
    V = state.vector_rows(rows)
    psi = V @ (state.head[:, None] * _phases(state, grid))
    return (np.abs(psi) ** 2).sum(axis=0)


@dataclass
class ConvergenceReport:
    n_list: List[int]
    max_deviation: List[float]
    edge_population: List[float]
    tolerance: float
    smallest_converged_n: Optional[int]
    warnings: List[str]


def convergence_study(params: ModelParams, grid, n_list, tolerance: float = 1e-4, method: str = "arrowhead") -> ConvergenceReport:
    """Self-convergence of ``P_i`` in the truncation ``N``.

    Deviations are measured against the largest ``N`` in ``n_list``.
    """
    grid = validate_grid(grid)
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must hold at least two strictly increasing truncations")
    curves = []
    edges = []
    for n in n_list:
        state = build(params, n, method=method, check=False)
        curves.append(np.abs(survival_amplitude(state, grid)) ** 2)
        edges.append(float(edge_population(state, grid).max()))
    reference = curves[-1]
    deviations = [float(np.abs(c - reference).max()) for c in curves]
    converged = [n for n, dev in zip(n_list[:-1], deviations[:-1]) if dev <= tolerance]
    warnings = []
    for n, pop in zip(n_list, edges):
        if pop > EDGE_POPULATION_TOL:
            msg = f"N={n}: population {pop:.3g} in outer {EDGE_FRACTION:.0%} of levels exceeds {EDGE_POPULATION_TOL:g}"
            warnings.append(msg)
            logger.warning(msg)
    return ConvergenceReport(n_list, deviations, edges, tolerance, converged[0] if converged else None, warnings)
