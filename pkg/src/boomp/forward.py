"""Optimized Orthogonal Matching Pursuit (OOMP).

Each iteration picks the dictionary atom whose inclusion minimizes the norm of
the new residual.  With ``gamma_i`` the component of atom ``i`` orthogonal to
the current span and ``r`` the current residual this is the atom maximizing
``<alpha_i, r>**2 / ||gamma_i||**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    DEPENDENCE_EPS,
    Decomposition,
    DependentAtom,
    DimensionMismatch,
    Dictionary,
    Exhausted,
    _as_samples,
    compute_coefficients,
    forward_update_duals,
    orthogonalize_next,
    reconstruct,
)


@dataclass
class ForwardConfig:
    max_atoms: int
    residual_tol: float = 0.0
    dependence_eps: float = DEPENDENCE_EPS

    def __post_init__(self):
        if int(self.max_atoms) < 1:
            raise ValueError(f"max_atoms must be >= 1, got {self.max_atoms}")
        if not self.residual_tol >= 0:
            raise ValueError(f"residual_tol must be >= 0, got {self.residual_tol}")
        self.max_atoms = int(self.max_atoms)


def orthogonal_energy(dictionary: Dictionary, state: Decomposition) -> np.ndarray:
    """``||gamma_i||**2`` for every atom, recomputed from the stored basis."""
    A = dictionary.matrix
    if len(state) == 0:
        return np.einsum("ij,ij->i", A, A)
    coef = (A @ state.psi.T) / state.psi_norm_sq
    G = A - coef @ state.psi
    coef = (G @ state.psi.T) / state.psi_norm_sq
    G = G - coef @ state.psi
    return np.einsum("ij,ij->i", G, G)


def select_forward_atom(dictionary: Dictionary, state: Decomposition, residual,
                        gamma_sq: Optional[np.ndarray] = None,
                        eps: float = DEPENDENCE_EPS,
                        excluded=()) -> tuple[int, float]:
    """Pick the next atom.

    Args:
        dictionary: Candidate atoms.
        state: Current decomposition; its atoms are never re-selected.
        residual: Current ``f - f_V``.
        gamma_sq: Precomputed ``||gamma_i||**2``; recomputed when omitted.
        eps: Admissibility threshold relative to ``||alpha_i||**2``.
        excluded: Extra dictionary indices to skip.

    Returns:
        ``(index, score)`` with ties going to the lowest index.

    Raises:
        Exhausted: if no atom is admissible.
    """
    r = _as_samples(residual)
    if r.size != dictionary.dim:
        raise DimensionMismatch(f"residual has length {r.size}, expected {dictionary.dim}")
    if gamma_sq is None:
        gamma_sq = orthogonal_energy(dictionary, state)
    admissible = gamma_sq >= eps * np.einsum("ij,ij->i", dictionary.matrix, dictionary.matrix)
    blocked = [i for i in list(state.selected) + list(excluded) if i >= 0]
    admissible[blocked] = False
    if not admissible.any():
        raise Exhausted("no admissible atom left")
    corr = dictionary.matrix @ r
    scores = np.full(len(dictionary), -np.inf)
    scores[admissible] = corr[admissible] ** 2 / gamma_sq[admissible]
    i = int(np.argmax(scores))
    return i, float(scores[i])


def oomp_run(f, dictionary: Dictionary, cfg: ForwardConfig,
             incremental: bool = True,
             callback: Optional[Callable[[Decomposition], None]] = None) -> Decomposition:
    """Run OOMP until ``residual_tol``, ``max_atoms`` or exhaustion.

    The returned decomposition carries ``history`` (residual norm after each
    added atom) and ``stop_reason`` (``"residual_tol"``, ``"max_atoms"`` or
    ``"exhausted"``).  With ``incremental=False`` the orthogonal energies are
    recomputed from scratch each iteration instead of downdated.
    ``callback`` sees the state after every added atom and must not mutate it.
    """
    y = _as_samples(f)
    if y.size != dictionary.dim:
        raise DimensionMismatch(f"signal has length {y.size}, dictionary dim {dictionary.dim}")
    A = dictionary.matrix
    state = Decomposition(dim=dictionary.dim)
    state.residual = y.copy()
    state.residual_norm = float(np.linalg.norm(y))
    gamma_sq = np.einsum("ij,ij->i", A, A)
    rejected: set[int] = set()

    while True:
        if state.residual_norm <= cfg.residual_tol:
            state.stop_reason = "residual_tol"
            break
        if len(state) >= cfg.max_atoms:
            state.stop_reason = "max_atoms"
            break
        if not incremental:
            gamma_sq = orthogonal_energy(dictionary, state)
        try:
            i, _ = select_forward_atom(dictionary, state, state.residual, gamma_sq,
                                       cfg.dependence_eps, excluded=rejected)
        except Exhausted:
            state.stop_reason = "exhausted"
            break
        try:
            psi, psi_norm_sq = orthogonalize_next(state, A[i], cfg.dependence_eps)
        except DependentAtom:
            # Downdated energy passed the threshold but the accurate one did not.
            rejected.add(i)
            continue
        forward_update_duals(state, A[i], psi, psi_norm_sq, index=i)
        compute_coefficients(state, y)
        reconstruct(state, dictionary, y)
        state.history.append(state.residual_norm)
        if callback is not None:
            callback(state)
        if incremental:
            gamma_sq = gamma_sq - (A @ psi) ** 2 / psi_norm_sq
    return state
