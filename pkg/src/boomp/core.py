"""Domain types and the recursive biorthogonalization kernels.

Both pursuit directions share the same state object, :class:`Decomposition`,
which keeps the selected atoms, their biorthogonal duals, an orthogonal basis
of their span (used only to grow the set), the expansion coefficients and the
residual.  Positions inside a decomposition are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

DEPENDENCE_EPS = 1e-10
UNIT_NORM_TOL = 1e-12


class PursuitError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(PursuitError, ValueError):
    pass


class DependentAtom(PursuitError):
    """The candidate atom lies numerically inside the current span."""


class IndexOutOfRange(PursuitError, IndexError):
    pass


class Exhausted(PursuitError):
    """No admissible atom is left in the dictionary."""


class EmptyDecomposition(PursuitError):
    pass


class Infeasible(PursuitError):
    """A backward run cannot reach its target under the given budget."""


class IllConditioned(PursuitError):
    pass


class EmptySpec(PursuitError, ValueError):
    pass


@dataclass
class Signal:
    """Real samples on a uniform time grid."""

    samples: np.ndarray
    grid_start: float = 0.0
    grid_step: float = 1.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if self.samples.size == 0:
            raise ValueError("signal has no samples")
        if not self.grid_step > 0:
            raise ValueError(f"grid_step must be positive, got {self.grid_step}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("signal contains NaN or Inf")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.grid_start + self.grid_step * np.arange(self.samples.size)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.samples))


@dataclass(frozen=True)
class AtomMeta:
    scale: int
    translation: int


@dataclass
class Atom:
    values: np.ndarray
    meta: Optional[AtomMeta] = None


def _as_samples(f) -> np.ndarray:
    if isinstance(f, Signal):
        return f.samples
    return np.asarray(f, dtype=np.float64).ravel()


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ValueError("dictionary contains a zero-norm or non-finite atom")
    # Rows already at unit norm are kept bit-for-bit so that
    # save/load cycles do not perturb the atoms.
    scale = np.where(np.abs(norms - 1.0) <= UNIT_NORM_TOL, 1.0, norms)
    return matrix / scale[:, None]


class Dictionary:
    """An ordered set of unit-norm atoms sharing one vector length.

    Atoms are stored as the rows of ``matrix`` (shape ``(n_atoms, dim)``) and
    normalized on construction.

    Args:
        matrix: Raw atom vectors, one per row.
        meta: Optional per-atom (scale, translation) labels.
        provenance: Free-form description of how the atoms were generated.
    """

    def __init__(self, matrix, meta: Optional[Sequence[Optional[AtomMeta]]] = None,
                 provenance: Optional[dict] = None):
        matrix = np.array(matrix, dtype=np.float64, ndmin=2)
        if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
            raise ValueError("dictionary needs at least one non-empty atom")
        self.matrix = _normalize_rows(matrix)
        self.matrix.flags.writeable = False
        if meta is None:
            meta = [None] * matrix.shape[0]
        if len(meta) != matrix.shape[0]:
            raise ValueError("meta length does not match the number of atoms")
        self.meta = list(meta)
        self.provenance = dict(provenance or {})

    @classmethod
    def from_atoms(cls, atoms: Sequence[Atom], provenance: Optional[dict] = None):
        lengths = {np.asarray(a.values).size for a in atoms}
        if len(lengths) > 1:
            raise DimensionMismatch(f"atoms have differing lengths {sorted(lengths)}")
        return cls([np.asarray(a.values, dtype=np.float64).ravel() for a in atoms],
                   [a.meta for a in atoms], provenance)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def __getitem__(self, i: int) -> Atom:
        return Atom(self.matrix[i], self.meta[i])

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def atoms(self) -> list[Atom]:
        return [self[i] for i in range(len(self))]


@dataclass
class Decomposition:
    """Live pursuit state for one signal.

    Row ``k`` of ``atoms``, ``duals`` and ``psi`` belongs to the atom at
    dictionary index ``selected[k]``.
    """

    dim: int
    selected: list[int] = field(default_factory=list)
    atoms: np.ndarray = None
    duals: np.ndarray = None
    psi: np.ndarray = None
    psi_norm_sq: np.ndarray = None
    coefficients: np.ndarray = None
    residual: Optional[np.ndarray] = None
    residual_norm: float = float("nan")
    history: list[float] = field(default_factory=list)
    stop_reason: Optional[str] = None

    def __post_init__(self):
        empty = np.zeros((0, self.dim))
        if self.atoms is None:
            self.atoms = empty.copy()
        if self.duals is None:
            self.duals = empty.copy()
        if self.psi is None:
            self.psi = empty.copy()
        if self.psi_norm_sq is None:
            self.psi_norm_sq = np.zeros(0)
        if self.coefficients is None:
            self.coefficients = np.zeros(0)

    def __len__(self) -> int:
        return len(self.selected)

    def copy(self) -> "Decomposition":
        return Decomposition(
            dim=self.dim,
            selected=list(self.selected),
            atoms=self.atoms.copy(),
            duals=self.duals.copy(),
            psi=self.psi.copy(),
            psi_norm_sq=self.psi_norm_sq.copy(),
            coefficients=self.coefficients.copy(),
            residual=None if self.residual is None else self.residual.copy(),
            residual_norm=self.residual_norm,
            history=list(self.history),
            stop_reason=self.stop_reason,
        )

    def approximation(self) -> np.ndarray:
        return self.coefficients @ self.atoms


def _atom_values(atom: Any) -> np.ndarray:
    if isinstance(atom, Atom):
        return np.asarray(atom.values, dtype=np.float64)
    return np.asarray(atom, dtype=np.float64).ravel()


def _gram_schmidt_pass(v: np.ndarray, psi: np.ndarray, psi_norm_sq: np.ndarray) -> np.ndarray:
    if psi.shape[0] == 0:
        return v
    return v - ((psi @ v) / psi_norm_sq) @ psi


def orthogonalize_next(state: Decomposition, atom, eps: float = DEPENDENCE_EPS):
    """Component of ``atom`` orthogonal to the span of the selected atoms.

    Classical Gram-Schmidt against the stored basis, followed by one
    re-orthogonalization pass.

    Returns:
        ``(psi, psi_norm_sq)``.

    Raises:
        DependentAtom: if ``psi_norm_sq < eps * ||atom||**2``.
    """
    a = _atom_values(atom)
    if a.size != state.dim:
        raise DimensionMismatch(f"atom has length {a.size}, expected {state.dim}")
    psi = _gram_schmidt_pass(a, state.psi, state.psi_norm_sq)
    psi = _gram_schmidt_pass(psi, state.psi, state.psi_norm_sq)
    psi_norm_sq = float(psi @ psi)
    if psi_norm_sq < eps * float(a @ a):
        raise DependentAtom(f"orthogonal component {psi_norm_sq:.3e} below threshold")
    return psi, psi_norm_sq


def forward_update_duals(state: Decomposition, atom, psi: np.ndarray, psi_norm_sq: float,
                         index: Optional[int] = None) -> Decomposition:
    """Append ``atom`` to ``state`` and update every dual atom in place.

    The new dual is ``psi / ||psi||**2``; each old dual ``b`` becomes
    ``b - new_dual * <atom, b>``.  ``index`` is the atom's dictionary index
    (recorded in ``state.selected``; -1 if unknown).
    """
    a = _atom_values(atom)
    if a.size != state.dim or psi.size != state.dim:
        raise DimensionMismatch("atom/psi length does not match the decomposition")
    new_dual = psi / psi_norm_sq
    if len(state):
        overlaps = state.duals @ a
        duals = state.duals - np.outer(overlaps, new_dual)
    else:
        duals = state.duals
    state.duals = np.vstack([duals, new_dual])
    state.atoms = np.vstack([state.atoms, a])
    state.psi = np.vstack([state.psi, psi])
    state.psi_norm_sq = np.append(state.psi_norm_sq, psi_norm_sq)
    state.selected.append(-1 if index is None else int(index))
    return state


def rebuild_ortho_basis(state: Decomposition) -> Decomposition:
    """Re-orthogonalize the retained atoms in their selection order."""
    psi = np.zeros((0, state.dim))
    norms = np.zeros(0)
    for a in state.atoms:
        p = _gram_schmidt_pass(a, psi, norms)
        p = _gram_schmidt_pass(p, psi, norms)
        psi = np.vstack([psi, p])
        norms = np.append(norms, p @ p)
    state.psi = psi
    state.psi_norm_sq = norms
    return state


def _check_position(state: Decomposition, j: int) -> int:
    n = len(state)
    if not isinstance(j, (int, np.integer)) or not 0 <= j < n:
        raise IndexOutOfRange(f"position {j} outside 0..{n - 1}")
    return int(j)


def backward_downdate_duals(state: Decomposition, j: int) -> Decomposition:
    """Remove the atom at position ``j`` and adapt the remaining duals.

    Each remaining dual ``b_n`` becomes
    ``b_n - b_j <b_j, b_n> / ||b_j||**2``.  Coefficients are left alone; see
    :func:`boomp.backward.downdate_coefficients`, which must run first.
    """
    j = _check_position(state, j)
    bj = state.duals[j]
    duals = state.duals - np.outer(state.duals @ bj, bj) / (bj @ bj)
    keep = np.arange(len(state)) != j
    state.duals = duals[keep]
    state.atoms = state.atoms[keep]
    del state.selected[j]
    return rebuild_ortho_basis(state)


def compute_coefficients(state: Decomposition, f) -> np.ndarray:
    """Inner products of the duals with ``f``; stored on ``state``."""
    samples = _as_samples(f)
    if samples.size != state.dim:
        raise DimensionMismatch(f"signal has length {samples.size}, expected {state.dim}")
    state.coefficients = state.duals @ samples
    return state.coefficients


def reconstruct(state: Decomposition, dictionary: Optional[Dictionary] = None, f=None) -> Signal:
    """Return the approximation ``sum_n c_n alpha_n``.

    When ``f`` is given the residual and its norm are refreshed on ``state``.
    ``dictionary`` is only used to check dimensions; the selected atoms are
    cached on the state.
    """
    if dictionary is not None and dictionary.dim != state.dim:
        raise DimensionMismatch(f"dictionary dim {dictionary.dim} != {state.dim}")
    if state.coefficients.size != len(state):
        raise ValueError("coefficients are not populated")
    approx = state.approximation() if len(state) else np.zeros(state.dim)
    if f is not None:
        samples = _as_samples(f)
        if samples.size != state.dim:
            raise DimensionMismatch(f"signal has length {samples.size}, expected {state.dim}")
        state.residual = samples - approx
        state.residual_norm = float(np.linalg.norm(state.residual))
    if isinstance(f, Signal):
        return Signal(approx, f.grid_start, f.grid_step)
    return Signal(approx)


def decomposition_from_indices(dictionary: Dictionary, indices: Sequence[int], f,
                               eps: float = DEPENDENCE_EPS) -> Decomposition:
    """Grow a decomposition over ``indices`` in order and project ``f`` onto it."""
    state = Decomposition(dim=dictionary.dim)
    for i in indices:
        atom = dictionary.matrix[i]
        psi, nsq = orthogonalize_next(state, atom, eps)
        forward_update_duals(state, atom, psi, nsq, index=i)
    compute_coefficients(state, f)
    reconstruct(state, dictionary, f)
    return state
