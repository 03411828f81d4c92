"""Mexican-hat wavelet dictionaries, linear chirps, and their CSV/JSON files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import AtomMeta, Dictionary, EmptySpec, Signal

MEXHAT_AMPLITUDE = 2.0 / math.sqrt(3.0) * math.pi ** -0.25
PAPER_ATOM_COUNT = 665


def mexican_hat(t):
    """``(2/sqrt(3)) pi**(-1/4) (1 - t**2) exp(-t**2 / 2)``; scalar or array."""
    t = np.asarray(t, dtype=np.float64)
    out = MEXHAT_AMPLITUDE * (1.0 - t * t) * np.exp(-0.5 * t * t)
    return float(out) if out.ndim == 0 else out


def grid(start: float, step: float, stop: float) -> np.ndarray:
    """Samples ``start, start+step, ...`` up to ``stop`` inclusive, like ``start:step:stop``."""
    if not step > 0:
        raise ValueError(f"grid step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"grid end {stop} precedes start {start}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


@dataclass
class MexHatSpec:
    """Wavelets ``2**(m/2) psi(t 2**m - translation_step n)`` on a sampled interval.

    For each scale the translation index runs over the centers inside
    ``interval`` plus ``margin_indices`` extra indices on both sides.
    """

    scales: Sequence[int] = (0, 1, 2, 3, 4)
    translation_step: float = 0.2
    interval: tuple[float, float] = (0.0, 4.0)
    grid_step: float = 0.01
    margin_indices: int = 4

    def __post_init__(self):
        self.scales = [int(m) for m in self.scales]
        if not self.scales:
            raise EmptySpec("no scales given")
        lo, hi = self.interval
        if not hi > lo:
            raise EmptySpec(f"degenerate interval {self.interval}")
        if not self.grid_step > 0 or not self.translation_step > 0:
            raise EmptySpec("grid_step and translation_step must be positive")
        if self.margin_indices < 0:
            raise EmptySpec("margin_indices must be >= 0")
        self.interval = (float(lo), float(hi))

    def times(self) -> np.ndarray:
        return grid(self.interval[0], self.grid_step, self.interval[1])

    def translations(self, m: int) -> range:
        lo, hi = self.interval
        s = 2.0 ** m / self.translation_step
        # Tolerance guards centers that land on the interval ends.
        first = math.ceil(lo * s - 1e-9)
        last = math.floor(hi * s + 1e-9)
        return range(first - self.margin_indices, last + self.margin_indices + 1)


@dataclass
class ChirpSpec:
    """Linear chirp from ``f0`` Hz at t=0 to ``f1`` Hz at ``t1``."""

    f0: float = 0.0
    t1: float = 1.0
    f1: float = 2.0
    grid: tuple[float, float, float] = (0.0, 0.01, 4.0)

    def __post_init__(self):
        if not self.t1 > 0:
            raise ValueError(f"t1 must be positive, got {self.t1}")
        start, step, stop = self.grid
        if not step > 0 or stop < start:
            raise ValueError(f"malformed grid {self.grid}")


def build_mexhat_dictionary(spec: MexHatSpec) -> Dictionary:
    t = spec.times()
    rows, meta = [], []
    for m in spec.scales:
        amp = 2.0 ** (m / 2.0)
        for n in spec.translations(m):
            rows.append(amp * mexican_hat(t * 2.0 ** m - spec.translation_step * n))
            meta.append(AtomMeta(m, n))
    if not rows:
        raise EmptySpec("spec produces no atoms")
    provenance = {"kind": "mexican_hat", **asdict(spec), "n_atoms": len(rows)}
    provenance["scales"] = list(spec.scales)
    provenance["interval"] = list(spec.interval)
    return Dictionary(np.vstack(rows), meta, provenance)


def chirp_phase(spec: ChirpSpec, t) -> np.ndarray:
    """Phase in cycles, ``f0 t + (f1 - f0) t**2 / (2 t1)``."""
    t = np.asarray(t, dtype=np.float64)
    return spec.f0 * t + (spec.f1 - spec.f0) * t * t / (2.0 * spec.t1)


def chirp(spec: ChirpSpec) -> Signal:
    """``cos(2 pi phase)`` sampled on ``spec.grid``, zero initial phase."""
    start, step, stop = spec.grid
    t = grid(start, step, stop)
    return Signal(np.cos(2.0 * np.pi * chirp_phase(spec, t)), start, step)


def paper_dictionary() -> Dictionary:
    d = build_mexhat_dictionary(MexHatSpec())
    if len(d) != PAPER_ATOM_COUNT:
        raise AssertionError(f"expected {PAPER_ATOM_COUNT} atoms, built {len(d)}")
    return d


def paper_chirp() -> Signal:
    return chirp(ChirpSpec())


# --- files -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_signal(path, signal: Signal) -> None:
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write("t,value\n")
        for t, v in zip(signal.times, signal.samples):
            fh.write(f"{_fmt(t)},{_fmt(v)}\n")


def _uniform_step(t: np.ndarray) -> float:
    if t.size < 2:
        return 1.0
    steps = np.diff(t)
    step = float((t[-1] - t[0]) / (t.size - 1))
    if not np.allclose(steps, step, rtol=1e-6, atol=1e-12):
        raise ValueError("time column is not a uniform grid")
    return step


def read_signal(path) -> Signal:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected columns t,value")
    t = data[:, 0]
    return Signal(data[:, 1], float(t[0]), _uniform_step(t))


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_dictionary(path, dictionary: Dictionary, times: Optional[np.ndarray] = None) -> None:
    """CSV with one atom per column after a leading time column, plus a JSON sidecar."""
    path = Path(path)
    if times is None:
        times = np.arange(dictionary.dim, dtype=np.float64)
    header = ",".join(["t"] + [f"a{i}" for i in range(len(dictionary))])
    table = np.column_stack([times, dictionary.matrix.T])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")
    sidecar = {
        "provenance": dictionary.provenance,
        "n_atoms": len(dictionary),
        "dim": dictionary.dim,
        "atoms": [None if m is None else {"scale": m.scale, "translation": m.translation}
                  for m in dictionary.meta],
    }
    sidecar_path(path).write_text(json.dumps(sidecar, indent=1))


def read_dictionary(path) -> tuple[Dictionary, np.ndarray]:
    """Load a dictionary file; returns the dictionary and its time column."""
    path = Path(path)
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times, matrix = table[:, 0], table[:, 1:].T
    meta, provenance = None, {}
    side = sidecar_path(path)
    if side.exists():
        info = json.loads(side.read_text())
        provenance = info.get("provenance", {})
        meta = [None if m is None else AtomMeta(m["scale"], m["translation"])
                for m in info.get("atoms", [])] or None
    return Dictionary(matrix, meta, provenance), times
