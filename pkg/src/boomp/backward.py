"""Backward Optimized Orthogonal Matching Pursuit (BOOMP).

Starting from an orthogonal projection ``f_V = sum_n c_n alpha_n`` with duals
``beta_n``, each step removes the atom whose deletion least increases the
residual.  Removing position ``j`` subtracts ``R_j = c_j beta_j / ||beta_j||**2``
from the approximation, so the increase is ``c_j**2 / ||beta_j||**2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    Decomposition,
    EmptyDecomposition,
    Infeasible,
    _as_samples,
    _check_position,
    backward_downdate_duals,
    reconstruct,
)


class Criterion(str, enum.Enum):
    THEOREM1 = "theorem1"
    NAIVE_ABS_COEFF = "naive_abs_coeff"


@dataclass
class BackwardConfig:
    target_count: Optional[int] = None
    error_budget: Optional[float] = None
    criterion: Criterion = Criterion.THEOREM1

    def __post_init__(self):
        if self.target_count is None and self.error_budget is None:
            raise ValueError("set target_count, error_budget or both")
        if self.target_count is not None:
            self.target_count = int(self.target_count)
            if self.target_count < 1:
                raise ValueError(f"target_count must be >= 1, got {self.target_count}")
        if self.error_budget is not None and not self.error_budget >= 0:
            raise ValueError(f"error_budget must be >= 0, got {self.error_budget}")
        self.criterion = Criterion(self.criterion)


@dataclass
class DeletionStep:
    """``criterion_value`` is always ``c_j**2 / ||beta_j||**2``, whichever rule chose ``j``."""

    position: int
    dictionary_index: int
    criterion_value: float
    coefficient: float
    residual_norm_after: float


@dataclass
class DeletionTrace:
    initial_residual_norm: float
    steps: list[DeletionStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def residual_norms(self) -> list[float]:
        return [s.residual_norm_after for s in self.steps]


def deletion_scores(state: Decomposition,
                    criterion: Criterion = Criterion.THEOREM1) -> np.ndarray:
    if criterion is Criterion.NAIVE_ABS_COEFF:
        return np.abs(state.coefficients)
    return state.coefficients ** 2 / np.einsum("ij,ij->i", state.duals, state.duals)


def select_deletion_index(state: Decomposition,
                          criterion: Criterion = Criterion.THEOREM1) -> tuple[int, float]:
    """Position minimizing ``c_j**2 / ||beta_j||**2`` (lowest position on ties).

    With ``Criterion.NAIVE_ABS_COEFF`` the score is ``|c_j|`` instead.
    """
    if len(state) == 0:
        raise EmptyDecomposition("nothing to delete")
    scores = deletion_scores(state, Criterion(criterion))
    j = int(np.argmin(scores))
    return j, float(scores[j])


def downdate_coefficients(state: Decomposition, j: int) -> np.ndarray:
    """Coefficients of the projection onto the span without position ``j``.

    Uses the duals *before* the deletion, so call it ahead of
    :func:`boomp.core.backward_downdate_duals`.  Stores and returns the
    reduced vector.
    """
    j = _check_position(state, j)
    bj = state.duals[j]
    c = state.coefficients - (state.duals @ bj) / (bj @ bj) * state.coefficients[j]
    state.coefficients = np.delete(c, j)
    return state.coefficients


def deletion_residual(state: Decomposition, j: int) -> tuple[np.ndarray, float]:
    """``R_j = c_j beta_j / ||beta_j||**2`` and its squared norm; no mutation."""
    j = _check_position(state, j)
    bj = state.duals[j]
    bj_sq = float(bj @ bj)
    cj = float(state.coefficients[j])
    return cj * bj / bj_sq, cj * cj / bj_sq


def delete_atom(state: Decomposition, j: int, f) -> Decomposition:
    """One full backward step at position ``j``."""
    downdate_coefficients(state, j)
    backward_downdate_duals(state, j)
    reconstruct(state, None, f)
    return state


def boomp_run(state: Decomposition, f, cfg: BackwardConfig,
              callback: Optional[Callable[[Decomposition, DeletionStep], None]] = None,
              ) -> tuple[Decomposition, DeletionTrace]:
    """Shrink ``state`` by repeated optimal deletions.

    The input is not modified.  The run stops at ``target_count`` atoms, or
    just before a deletion whose predicted residual norm would exceed
    ``error_budget``.

    Raises:
        Infeasible: if ``target_count`` exceeds the current size or cannot be
            reached within ``error_budget``.  The partial result is attached as
            ``exc.state`` and ``exc.trace``.
    """
    y = _as_samples(f)
    state = state.copy()
    reconstruct(state, None, y)
    trace = DeletionTrace(initial_residual_norm=state.residual_norm)
    if cfg.target_count is not None and cfg.target_count > len(state):
        exc = Infeasible(f"target_count {cfg.target_count} exceeds current size {len(state)}")
        exc.state, exc.trace = state, trace
        raise exc
    target = cfg.target_count if cfg.target_count is not None else 0
    while len(state) > target:
        j, _ = select_deletion_index(state, cfg.criterion)
        _, increase = deletion_residual(state, j)
        if cfg.error_budget is not None:
            predicted = np.sqrt(state.residual_norm ** 2 + increase)
            if predicted > cfg.error_budget:
                if cfg.target_count is not None:
                    exc = Infeasible(
                        f"stopped at {len(state)} atoms: next deletion gives residual "
                        f"{predicted:.4g} > budget {cfg.error_budget:.4g}")
                    exc.state, exc.trace = state, trace
                    raise exc
                break
        idx = state.selected[j]
        cj = float(state.coefficients[j])
        delete_atom(state, j, y)
        step = DeletionStep(j, idx, increase, cj, state.residual_norm)
        trace.steps.append(step)
        if callback is not None:
            callback(state, step)
    return state, trace
