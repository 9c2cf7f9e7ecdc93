"""Eigendecomposition of symmetric arrowhead matrices.

The matrix has the form::

    [[a,  z^T   ],
     [z,  diag(d)]]

with ``d`` strictly increasing and every ``z_j != 0``.  Its eigenvalues are
the roots of the secular function

    f(lam) = lam - a - sum_j z_j^2 / (lam - d_j),

exactly one in each gap ``(d_j, d_{j+1})`` and one beyond either end.  Each
root is stored relative to its nearest pole, ``lam = d[pole] + offset``, so
that the differences ``lam - d_j`` entering the eigenvectors keep full
relative accuracy even when ``lam`` sits very close to a pole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

_MAX_ITER = 200
_CHUNK = 256


@dataclass
class ArrowheadEigen:
    eigenvalues: np.ndarray
    pole: np.ndarray
    offset: np.ndarray
    d: np.ndarray
    z: np.ndarray
    a: float

    def differences(self, rows=None):
        """``lam_k - d_j`` for the requested continuum rows ``j`` (shape rows x n+1)."""
        j = np.arange(self.d.size) if rows is None else np.asarray(rows)
        return (self.d[self.pole][None, :] - self.d[j][:, None]) + self.offset[None, :]

    def first_components(self) -> np.ndarray:
        """Component of every normalized eigenvector on the arrow head."""
        out = np.empty(self.eigenvalues.size)
        for lo in range(0, out.size, _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            diff = (self.d[self.pole[sl]][None, :] - self.d[:, None]) + self.offset[sl][None, :]
            norm2 = 1.0 + np.sum((self.z[:, None] / diff) ** 2, axis=0)
            out[sl] = 1.0 / np.sqrt(norm2)
        return out

    def vector_rows(self, rows=None) -> np.ndarray:
        """Rows of the eigenvector matrix for continuum indices ``rows``.

        Row ``j`` of the continuum block is ``z_j / (lam_k - d_j)`` times the
        head component of eigenvector ``k``.
        """
        head = self.first_components()
        return (self.z[np.arange(self.d.size) if rows is None else np.asarray(rows)][:, None] / self.differences(rows)) * head[None, :]

    def matrix(self) -> np.ndarray:
        """Full orthogonal eigenvector matrix, head row first."""
        return np.vstack([self.first_components()[None, :], self.vector_rows()])


def _secular(offset, pole_d, a, d, z2):
    # f and f' at lam = pole_d + offset, evaluated from pole-relative differences
    diff = (pole_d[None, :] - d[:, None]) + offset[None, :]
    inv = 1.0 / diff
    f = (pole_d + offset) - a - np.sum(z2[:, None] * inv, axis=0)
    fp = 1.0 + np.sum(z2[:, None] * inv * inv, axis=0)
    return f, fp


def arrowhead_eigh(a: float, z, d) -> ArrowheadEigen:
    """Eigenvalues of the arrowhead matrix, ascending, by safeguarded Newton.

    Each root is bracketed between its two neighbouring poles (or a Weyl
    bound at the ends); Newton steps in the pole-relative offset fall back to
    bisection whenever they leave the bracket.
    """
    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float)
    n = d.size
    if n == 0:
        return ArrowheadEigen(np.array([a]), np.zeros(1, int), np.zeros(1), d, z, a)
    if np.any(np.diff(d) <= 0):
        raise ValueError("d must be strictly increasing")
    if np.any(z == 0):
        raise ValueError("arrowhead solver needs every z_j nonzero (deflate first)")
    z2 = z * z
    spread = np.sqrt(np.sum(z2)) + abs(a - d[0]) + abs(a - d[-1]) + 1.0

    # root r is bracketed by offsets lo[r] < x < hi[r] from d[pole[r]]
    pole = np.empty(n + 1, dtype=int)
    lo = np.empty(n + 1)
    hi = np.empty(n + 1)
    pole[0], lo[0], hi[0] = 0, -spread, 0.0
    pole[n], lo[n], hi[n] = n - 1, 0.0, spread
    if n > 1:
        mids = 0.5 * (d[:-1] + d[1:])
        fmid = np.concatenate([
            _secular(np.zeros(mids[s].size), mids[s], a, d, z2)[0]
            for s in (slice(i, i + _CHUNK) for i in range(0, mids.size, _CHUNK))
        ])
        # f increases through each gap, so f(mid) > 0 puts the root in the left half
        left = fmid > 0
        pole[1:n] = np.where(left, np.arange(n - 1), np.arange(1, n))
        half = mids - d[pole[1:n]]
        lo[1:n] = np.where(left, 0.0, half)
        hi[1:n] = np.where(left, half, 0.0)
    origin = d[pole]

    offset = 0.5 * (lo + hi)
    for start in range(0, n + 1, _CHUNK):
        s = slice(start, start + _CHUNK)
        offset[s] = _solve_chunk(offset[s], lo[s], hi[s], origin[s], a, d, z2)

    eig = origin + offset
    if not np.all(np.diff(eig) > 0):
        raise NumericalError("arrowhead eigenvalues not strictly increasing", {"n": n + 1})
    return ArrowheadEigen(eig, pole, offset, d, z, float(a))


def _solve_chunk(x, lo, hi, origin, a, d, z2):
    lo = lo.copy()
    hi = hi.copy()
    x = x.copy()
    active = np.ones(x.size, dtype=bool)
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        f, fp = _secular(x[idx], origin[idx], a, d, z2)
        # tighten the bracket with the sign of f
        pos = f > 0
        hi[idx[pos]] = x[idx[pos]]
        lo[idx[~pos]] = x[idx[~pos]]
        step = f / fp
        trial = x[idx] - step
        bad = ~((trial > lo[idx]) & (trial < hi[idx]))
        trial[bad] = 0.5 * (lo[idx[bad]] + hi[idx[bad]])
        exact = f == 0
        trial[exact] = x[idx[exact]]
        scale = np.maximum(np.abs(trial), np.finfo(float).tiny)
        width = hi[idx] - lo[idx]
        done = (np.abs(trial - x[idx]) <= 4 * np.finfo(float).eps * scale) | (width <= 4 * np.finfo(float).eps * scale) | exact
        x[idx] = trial
        active[idx[done]] = False
    if active.any():
        raise NumericalError("secular equation iteration did not converge", {"unconverged": int(active.sum())})
    return x
