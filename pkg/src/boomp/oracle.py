"""Brute-force least-squares reference.

Solves the normal equations with an LU factorization so that its numerical
path shares nothing with the Gram-Schmidt/dual-atom machinery in
:mod:`boomp.core`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import Atom, IllConditioned, Signal

PIVOT_RATIO_CAP = 1e-12

@dataclass
class OracleSolution:
    coefficients: np.ndarray
    approximation: np.ndarray
    residual_norm: float

def _stack(atoms, dim: int) -> np.ndarray:
    rows = [np.asarray(a.values if isinstance(a, Atom) else a, dtype=np.float64).ravel()
            for a in atoms]
    if not rows:
        return np.zeros((0, dim))
    return np.vstack(rows)

def least_squares_projection(f, atoms: Sequence) -> OracleSolution:
    """Orthogonal projection of ``f`` onto the span of ``atoms``.

    Raises:
        IllConditioned: when the smallest LU pivot of the Gram matrix is below
            ``PIVOT_RATIO_CAP`` times the largest.
    """
    y = f.samples if isinstance(f, Signal) else np.asarray(f, dtype=np.float64).ravel()
    A = _stack(atoms, y.size)
    if A.shape[0] == 0:
        return OracleSolution(np.zeros(0), np.zeros_like(y), float(np.linalg.norm(y)))
    if A.shape[1] != y.size:
        raise ValueError(f"atoms have length {A.shape[1]}, signal {y.size}")
    gram = A @ A.T
    rhs = A @ y
    with warnings.catch_warnings():
        # singularity is reported through the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(gram, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_RATIO_CAP * pivots.max():
        raise IllConditioned(f"Gram pivot ratio {pivots.min() / pivots.max():.2e}")
    c = scipy.linalg.lu_solve((lu, piv), rhs)
    approx = c @ A
    return OracleSolution(c, approx, float(np.linalg.norm(y - approx)))

def best_single_deletion(f, atoms: Sequence) -> tuple[int, float]:
    """Leave-one-out search: the position whose removal keeps the residual smallest."""
    atoms = list(atoms)
    if not atoms:
        raise ValueError("need at least one atom")
    best_j, best_norm = -1, np.inf
    for j in range(len(atoms)):
        sol = least_squares_projection(f, atoms[:j] + atoms[j + 1:])
        if sol.residual_norm < best_norm:
            best_j, best_norm = j, sol.residual_norm
    return best_j, best_norm
