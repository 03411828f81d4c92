"""Command-line interface: ``boomp gen-dict|gen-signal|decompose|shrink|reproduce``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .backward import BackwardConfig, Criterion, DeletionTrace, boomp_run
from .core import (
    DEPENDENCE_EPS,
    Decomposition,
    DimensionMismatch,
    Dictionary,
    EmptySpec,
    PursuitError,
    Signal,
    decomposition_from_indices,
)
from .dictgen import (
    ChirpSpec,
    MexHatSpec,
    build_mexhat_dictionary,
    chirp,
    read_dictionary,
    read_signal,
    write_dictionary,
    write_signal,
)
from .forward import ForwardConfig, oomp_run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

ARTIFACT_FORMAT = "boomp-decomposition/1"


class InputError(Exception):
    """Unreadable, malformed or mutually inconsistent input files."""


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


# --- argument parsing helpers ----------------------------------------------

def _int_list(text: str) -> list[int]:
    """``"0..4"`` or ``"0,1,3"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _float_tuple(n: int):
    def parse(text: str) -> tuple[float, ...]:
        try:
            values = tuple(float(x) for x in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
        if len(values) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
        return values
    return parse


def _sig4(x: float) -> str:
    return f"{x:.4g}"


# --- artifacts ---------------------------------------------------------------

def content_hash(dictionary: Dictionary, signal: Signal) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dictionary.matrix).tobytes())
    h.update(np.ascontiguousarray(signal.samples).tobytes())
    return h.hexdigest()


def write_artifact(path: Path, state: Decomposition, dictionary: Dictionary, signal: Signal,
                   config: dict) -> None:
    artifact = {
        "format": ARTIFACT_FORMAT,
        "selected": [int(i) for i in state.selected],
        "coefficients": [float(c) for c in state.coefficients],
        "residual_norm": state.residual_norm,
        "config": config,
        "hash": content_hash(dictionary, signal),
    }
    path.write_text(json.dumps(artifact, indent=1))


def load_artifact(path: Path, dictionary: Dictionary, signal: Signal) -> tuple[Decomposition, dict]:
    """Rebuild the duals for a stored index list.  The hash must match the inputs."""
    try:
        artifact = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read decomposition {path}: {exc}") from exc
    if artifact.get("format") != ARTIFACT_FORMAT:
        raise InputError(f"{path}: not a {ARTIFACT_FORMAT} file")
    if artifact.get("hash") != content_hash(dictionary, signal):
        raise InputError(f"{path}: dictionary or signal differs from the one decomposed")
    eps = artifact.get("config", {}).get("dependence_eps", DEPENDENCE_EPS)
    state = decomposition_from_indices(dictionary, artifact["selected"], signal, eps)
    return state, artifact


def coefficient_rows(state: Decomposition, dictionary: Dictionary) -> list[dict]:
    rows = []
    for pos, (idx, c) in enumerate(zip(state.selected, state.coefficients)):
        meta = dictionary.meta[idx] if 0 <= idx < len(dictionary) else None
        rows.append({
            "position": pos,
            "index": int(idx),
            "scale": None if meta is None else meta.scale,
            "translation": None if meta is None else meta.translation,
            "coefficient": float(c),
        })
    return rows


def write_coefficients(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["position", "index", "scale", "translation", "coefficient"])
        for r in rows:
            w.writerow([r["position"], r["index"],
                        "" if r["scale"] is None else r["scale"],
                        "" if r["translation"] is None else r["translation"],
                        repr(r["coefficient"])])


def write_series(path: Path, signal: Signal, state: Decomposition) -> None:
    approx = state.approximation() if len(state) else np.zeros(len(signal))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "signal", "approximation", "abs_difference"])
        for t, y, a in zip(signal.times, signal.samples, approx):
            w.writerow([repr(float(t)), repr(float(y)), repr(float(a)), repr(float(abs(y - a)))])


def write_trace(path: Path, trace: DeletionTrace) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "position", "index", "criterion_value", "coefficient",
                    "residual_norm_after"])
        for k, s in enumerate(trace.steps, 1):
            w.writerow([k, s.position, s.dictionary_index, repr(s.criterion_value),
                        repr(s.coefficient), repr(s.residual_norm_after)])


def trace_dicts(trace: Optional[DeletionTrace]) -> list[dict]:
    if trace is None:
        return []
    return [vars(s).copy() for s in trace.steps]


def _load_inputs(args) -> tuple[Signal, Dictionary]:
    try:
        signal = read_signal(args.signal)
        dictionary, _ = read_dictionary(args.dictionary)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    if dictionary.dim != len(signal):
        raise InputError(str(DimensionMismatch(
            f"signal has {len(signal)} samples, dictionary atoms have {dictionary.dim}")))
    return signal, dictionary


def _output_dir(args) -> Path:
    out = Path(args.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc}") from exc
    return out


# --- subcommands ---------------------------------------------------------------

def cmd_gen_dict(args) -> int:
    spec = MexHatSpec(scales=args.scales, translation_step=args.step,
                      interval=tuple(args.interval), grid_step=args.grid,
                      margin_indices=args.margin)
    dictionary = build_mexhat_dictionary(spec)
    out = _output_dir(args)
    path = out / args.name
    write_dictionary(path, dictionary, spec.times())
    print(f"wrote {len(dictionary)} atoms x {dictionary.dim} samples to {path}")
    return EXIT_OK


def cmd_gen_signal(args) -> int:
    f0, t1, f1 = args.chirp
    signal = chirp(ChirpSpec(f0=f0, t1=t1, f1=f1, grid=tuple(args.grid)))
    out = _output_dir(args)
    path = out / args.name
    write_signal(path, signal)
    print(f"wrote {len(signal)} samples to {path}")
    return EXIT_OK


def _forward_config(args, dictionary: Dictionary) -> ForwardConfig:
    max_atoms = args.max_atoms
    if max_atoms is None:
        max_atoms = min(len(dictionary), dictionary.dim)
    return ForwardConfig(max_atoms=max_atoms, residual_tol=args.tol)


def cmd_decompose(args) -> int:
    signal, dictionary = _load_inputs(args)
    cfg = _forward_config(args, dictionary)
    t0 = time.perf_counter()
    state = oomp_run(signal, dictionary, cfg)
    elapsed = time.perf_counter() - t0
    out = _output_dir(args)
    config = {"max_atoms": cfg.max_atoms, "residual_tol": cfg.residual_tol,
              "dependence_eps": cfg.dependence_eps}
    rows = coefficient_rows(state, dictionary)
    report = {
        "command": "decompose",
        "config": config,
        "n_atoms": len(state),
        "stop_reason": state.stop_reason,
        "forward_history": state.history,
        "deletion_trace": [],
        "coefficients": rows,
        "residual_norm_forward": state.residual_norm,
        "residual_norm_backward": None,
        "timing_seconds": {"forward": elapsed},
    }
    write_artifact(out / "decomposition.json", state, dictionary, signal, config)
    write_coefficients(out / "coefficients.csv", rows)
    write_series(out / "series.csv", signal, state)
    (out / "report.json").write_text(json.dumps(report, indent=1))
    print(f"OOMP: {len(state)} atoms ({state.stop_reason}), "
          f"residual norm {_sig4(state.residual_norm)}")
    return EXIT_OK


def cmd_shrink(args) -> int:
    if args.target_count is None and args.error_budget is None:
        print("shrink: give --target-count and/or --error-budget", file=sys.stderr)
        return EXIT_USAGE
    signal, dictionary = _load_inputs(args)
    state, artifact = load_artifact(Path(args.decomposition), dictionary, signal)
    cfg = BackwardConfig(target_count=args.target_count, error_budget=args.error_budget,
                         criterion=args.criterion)
    out = _output_dir(args)
    t0 = time.perf_counter()
    reduced, trace = boomp_run(state, signal, cfg)
    elapsed = time.perf_counter() - t0
    config = dict(artifact.get("config", {}))
    config.update({"target_count": cfg.target_count, "error_budget": cfg.error_budget,
                   "criterion": cfg.criterion.value})
    rows = coefficient_rows(reduced, dictionary)
    report = {
        "command": "shrink",
        "config": config,
        "n_atoms_before": len(state),
        "n_atoms": len(reduced),
        "forward_history": [],
        "deletion_trace": trace_dicts(trace),
        "coefficients": rows,
        "residual_norm_forward": state.residual_norm,
        "residual_norm_backward": reduced.residual_norm,
        "timing_seconds": {"backward": elapsed},
    }
    write_artifact(out / "shrunk_decomposition.json", reduced, dictionary, signal, config)
    write_coefficients(out / "shrunk_coefficients.csv", rows)
    write_series(out / "shrunk_series.csv", signal, reduced)
    write_trace(out / "trace.csv", trace)
    (out / "shrink_report.json").write_text(json.dumps(report, indent=1))
    print(f"BOOMP: {len(state)} -> {len(reduced)} atoms, "
          f"residual norm {_sig4(state.residual_norm)} -> {_sig4(reduced.residual_norm)}")
    return EXIT_OK


def run_reproduce(max_atoms: int = 60, target_count: int = 34) -> dict:
    """The chirp experiment: OOMP-N, BOOMP down to ``target_count``, and OOMP-``target_count``.

    Raises:
        StageError: naming the stage that failed.
    """
    from .dictgen import paper_chirp, paper_dictionary

    try:
        dictionary = paper_dictionary()
        signal = paper_chirp()
    except Exception as exc:
        raise StageError("setup", exc) from exc
    timing = {}
    try:
        t0 = time.perf_counter()
        forward = oomp_run(signal, dictionary, ForwardConfig(max_atoms))
        timing["forward"] = time.perf_counter() - t0
    except PursuitError as exc:
        raise StageError("forward", exc) from exc
    try:
        t0 = time.perf_counter()
        reduced, trace = boomp_run(forward, signal, BackwardConfig(target_count))
        timing["backward"] = time.perf_counter() - t0
    except PursuitError as exc:
        raise StageError("backward", exc) from exc
    try:
        t0 = time.perf_counter()
        baseline = oomp_run(signal, dictionary, ForwardConfig(target_count))
        timing["baseline"] = time.perf_counter() - t0
    except PursuitError as exc:
        raise StageError("baseline", exc) from exc
    return {
        "dictionary": dictionary,
        "signal": signal,
        "forward": forward,
        "reduced": reduced,
        "trace": trace,
        "baseline": baseline,
        "timing": timing,
    }


def cmd_reproduce(args) -> int:
    run = run_reproduce(args.max_atoms, args.target_count)
    dictionary, signal = run["dictionary"], run["signal"]
    forward, reduced, baseline = run["forward"], run["reduced"], run["baseline"]
    print(f"dictionary: {len(dictionary)} atoms, signal: {len(signal)} samples")
    print(f"{'method':<24}{'atoms':>6}{'residual':>12}")
    print(f"{'OOMP':<24}{len(forward):>6}{_sig4(forward.residual_norm):>12}")
    print(f"{'OOMP + BOOMP':<24}{len(reduced):>6}{_sig4(reduced.residual_norm):>12}")
    print(f"{'OOMP (stopped early)':<24}{len(baseline):>6}{_sig4(baseline.residual_norm):>12}")
    status = EXIT_OK
    if args.verify:
        from .verify import verify_pipeline

        checks, error = verify_pipeline(signal, dictionary, args.max_atoms, args.target_count)
        for c in checks:
            print(c.line())
        if error is not None:
            print(f"FAIL  backward stage: {error}")
        if error is not None or not all(c.passed for c in checks):
            status = EXIT_NUMERICAL
    if args.output_dir is not None:
        out = _output_dir(args)
        report = {
            "command": "reproduce",
            "config": {"max_atoms": args.max_atoms, "target_count": args.target_count},
            "n_dictionary_atoms": len(dictionary),
            "forward_history": forward.history,
            "baseline_history": baseline.history,
            "deletion_trace": trace_dicts(run["trace"]),
            "coefficients": coefficient_rows(reduced, dictionary),
            "residual_norm_forward": forward.residual_norm,
            "residual_norm_backward": reduced.residual_norm,
            "residual_norm_baseline": baseline.residual_norm,
            "timing_seconds": run["timing"],
        }
        (out / "reproduce_report.json").write_text(json.dumps(report, indent=1))
        write_series(out / "boomp_series.csv", signal, reduced)
        write_series(out / "oomp_series.csv", signal, baseline)
        write_trace(out / "trace.csv", run["trace"])
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boomp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dict", help="write a Mexican-hat dictionary")
    p.add_argument("--scales", type=_int_list, required=True, help='e.g. "0..4" or "0,2,3"')
    p.add_argument("--step", type=float, default=0.2, help="translation step")
    p.add_argument("--interval", type=_float_tuple(2), required=True, help="t_min,t_max")
    p.add_argument("--grid", type=float, required=True, help="sampling step")
    p.add_argument("--margin", type=int, default=4, help="extra translations per side")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--name", default="dictionary.csv")
    p.add_argument("--seed", type=int, help="reserved; unused")
    p.set_defaults(func=cmd_gen_dict)

    p = sub.add_parser("gen-signal", help="write a linear chirp")
    p.add_argument("--chirp", type=_float_tuple(3), required=True, help="f0,t1,f1")
    p.add_argument("--grid", type=_float_tuple(3), required=True, help="start,step,end")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--name", default="signal.csv")
    p.add_argument("--seed", type=int, help="reserved; unused")
    p.set_defaults(func=cmd_gen_signal)

    p = sub.add_parser("decompose", help="run OOMP")
    p.add_argument("--signal", required=True)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--max-atoms", type=int)
    p.add_argument("--tol", type=float, default=0.0, help="stop at this residual norm")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--seed", type=int, help="reserved; unused")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("shrink", help="run BOOMP on a decomposition")
    p.add_argument("--decomposition", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--target-count", type=int)
    p.add_argument("--error-budget", type=float)
    p.add_argument("--criterion", choices=[c.value for c in Criterion],
                   default=Criterion.THEOREM1.value)
    p.add_argument("--output-dir", default=".")
    p.add_argument("--seed", type=int, help="reserved; unused")
    p.set_defaults(func=cmd_shrink)

    p = sub.add_parser("reproduce", help="run the chirp experiment end to end")
    p.add_argument("--max-atoms", type=int, default=60)
    p.add_argument("--target-count", type=int, default=34)
    p.add_argument("--verify", action="store_true", help="also run the invariant checks")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--seed", type=int, help="reserved; unused")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error in stage {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL if isinstance(exc.cause, PursuitError) else EXIT_IO
        return code
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EmptySpec as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PursuitError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
