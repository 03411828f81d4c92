"""Numerical invariant checks for decompositions, with the oracle as referee."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backward import BackwardConfig, boomp_run, deletion_residual, select_deletion_index
from .core import Decomposition, Dictionary, _as_samples
from .forward import ForwardConfig, oomp_run
from .oracle import least_squares_projection

BIORTHOGONALITY_TOL = 1e-8
PAPER_BIORTHOGONALITY_TOL = 1e-6
RESIDUAL_ORTHOGONALITY_TOL = 1e-8
DUALITY_TOL = 1e-8
ORACLE_COEFF_TOL = 1e-8


def biorthogonality_error(state: Decomposition) -> float:
    """``max |<alpha_m, beta_n> - delta_mn|``."""
    if len(state) == 0:
        return 0.0
    return float(np.abs(state.atoms @ state.duals.T - np.eye(len(state))).max())


def residual_orthogonality_error(state: Decomposition, f) -> float:
    """``max_n |<alpha_n, f - f_V>| / ||f||``."""
    y = _as_samples(f)
    if len(state) == 0:
        return 0.0
    r = y - state.approximation()
    return float(np.abs(state.atoms @ r).max() / max(np.linalg.norm(y), np.finfo(float).tiny))


def duality_error(state: Decomposition) -> float:
    """``max_j || sum_n alpha_n <beta_n, beta_j> - beta_j ||_inf``."""
    if len(state) == 0:
        return 0.0
    B = state.duals
    return float(np.abs((B @ B.T) @ state.atoms - B).max())


def oracle_coefficient_error(state: Decomposition, f) -> float:
    """Relative 2-norm gap between stored and least-squares coefficients."""
    if len(state) == 0:
        return 0.0
    ref = least_squares_projection(f, list(state.atoms)).coefficients
    return float(np.linalg.norm(state.coefficients - ref) / np.linalg.norm(ref))


@dataclass
class Check:
    name: str
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: worst {self.worst:.3e} (tol {self.tol:.0e})"


@dataclass
class InvariantMonitor:
    """Accumulates worst-case invariant violations over many states."""

    f: np.ndarray
    biorthogonality_tol: float = BIORTHOGONALITY_TOL
    worst: dict = field(default_factory=dict)
    steps: int = 0

    def _update(self, key: str, value: float) -> None:
        self.worst[key] = max(self.worst.get(key, 0.0), value)

    def observe(self, state: Decomposition, *_) -> None:
        self.steps += 1
        self._update("biorthogonality", biorthogonality_error(state))
        self._update("residual orthogonality", residual_orthogonality_error(state, self.f))
        self._update("duality consistency", duality_error(state))
        self._update("coefficients vs oracle", oracle_coefficient_error(state, self.f))

    def observe_deletion(self, state: Decomposition, *_) -> None:
        self.observe(state)

    def checks(self) -> list[Check]:
        tols = {
            "biorthogonality": self.biorthogonality_tol,
            "residual orthogonality": RESIDUAL_ORTHOGONALITY_TOL,
            "duality consistency": DUALITY_TOL,
            "coefficients vs oracle": ORACLE_COEFF_TOL,
        }
        return [Check(k, self.worst.get(k, 0.0), tol) for k, tol in tols.items()]


def check_deletion_identity(state: Decomposition, f) -> float:
    """Relative gap between ``||f_V - f_reduced||**2`` and ``c_j**2/||beta_j||**2``."""
    j, _ = select_deletion_index(state)
    _, predicted = deletion_residual(state, j)
    full = least_squares_projection(f, list(state.atoms)).approximation
    rest = least_squares_projection(f, [a for k, a in enumerate(state.atoms) if k != j])
    actual = float(np.sum((full - rest.approximation) ** 2))
    if actual == 0.0:
        return abs(predicted)
    return abs(predicted - actual) / actual


def verify_pipeline(f, dictionary: Dictionary, max_atoms: int, target_count: int,
                    biorthogonality_tol: float = PAPER_BIORTHOGONALITY_TOL,
                    ) -> tuple[list[Check], Optional[str]]:
    """Re-run forward then backward pursuit with every invariant checked per step.

    Returns the checks and an error message if the backward stage could not run.
    """
    y = _as_samples(f)
    monitor = InvariantMonitor(y, biorthogonality_tol)
    state = oomp_run(y, dictionary, ForwardConfig(max_atoms), callback=monitor.observe)
    error = None
    additivity = 0.0
    try:
        reduced, trace = boomp_run(state, y, BackwardConfig(target_count),
                                   callback=monitor.observe_deletion)
    except Exception as exc:  # reported, not fatal, for the verify summary
        error = f"{type(exc).__name__}: {exc}"
    else:
        lhs = reduced.residual_norm ** 2
        rhs = state.residual_norm ** 2 + sum(s.criterion_value for s in trace.steps)
        additivity = abs(lhs - rhs) / max(lhs, np.finfo(float).tiny)
    checks = monitor.checks()
    checks.append(Check("additivity of deletion residuals", additivity, 1e-8))
    return checks, error
