"""Command-line front end.

Every subcommand reads or writes the measurement-set JSON, so they compose
through pipes::

    seqpovm bosonic --N 1 --truncation 8 | seqpovm simulate --m 2 --shots 1000 --seed 7

Exit codes: 0 success, 1 numerical or analysis failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .ancilla import DephasingScheme, bosonic_modular_scheme, build_measurement_pair, degeneracy_analysis, polarization_table
from .asymptotics import channel_report
from .errors import SeqPovmError, StructuralError
from .io import (
    dumps,
    encode_matrix,
    loads_measurement_set,
    measurement_set_to_dict,
    state_from_json,
    write_csv,
)
from .povm import DEFAULT_SEED, TOL, TOL_GROUP, decompose, validate
from .trajectory import run_ensemble
from .typicality import ENUMERATION_CAP, group_signatures, typicality_report


class UsageError(Exception):
    pass


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _load_set(args):
    try:
        text = _read_input(args.input)
    except OSError as exc:
        raise StructuralError(f"cannot read {args.input}: {exc}") from exc
    return loads_measurement_set(text)


def _decompose(args):
    return decompose(_load_set(args), tol=args.tol, tol_group=args.tol_group, seed=args.diag_seed)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text}") from exc


def worker_count(requested: int | None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("SEQPOVM_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"SEQPOVM_THREADS must be an integer, got {cap!r}")
    return max(1, n)


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args):
    report = validate(_load_set(args), tol=args.tol)
    out = report.to_dict()
    out["failures"] = report.failures()
    return (0 if report.ok else 1), out


def cmd_decompose(args):
    dec = _decompose(args)
    return 0, {
        "d": dec.d,
        "r": dec.r,
        "s": dec.s,
        "groups": [list(g) for g in dec.groups],
        "phases": dec.phases.tolist(),
        "representatives": encode_matrix(dec.representatives.T),
        "signatures": [s.tolist() for s in group_signatures(dec)],
        "basis": encode_matrix(dec.eigen.basis),
        "coefficients": encode_matrix(dec.eigen.coefficients),
    }


def cmd_channel(args):
    return 0, channel_report(_decompose(args), args.m)


def cmd_typicality(args):
    dec = _decompose(args)
    rep = typicality_report(dec, args.m, args.eta, args.delta, cap=args.cap)
    variant = "stirling" if args.stirling else "exact"
    if args.csv:
        w = rep.weights
        grid_w = w.grid_weights(variant)
        header = [f"count_{i}" for i in range(dec.r)] + [f"weight_{k}" for k in range(dec.s)]
        header += [f"in_neighborhood_{k}" for k in range(dec.s)]
        rows = (
            list(map(int, w.grid[n])) + list(grid_w[n]) + [int(b) for b in w.members[n]]
            for n in range(w.grid.shape[0])
        )
        write_csv(args.csv, header, rows)
    return 0, rep.to_dict(variant)


def _parse_state(text: str | None, d: int):
    if text is None:
        return np.eye(d, dtype=complex) / d
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"--state is not valid JSON: {exc}") from exc
    state = state_from_json(data, d)
    if state.shape[0] != d:
        raise StructuralError(f"state dimension {state.shape[0]} does not match d={d}")
    return state


def cmd_simulate(args):
    mset = _load_set(args)
    dec = decompose(mset, tol=args.tol, tol_group=args.tol_group, seed=args.diag_seed)
    state = _parse_state(args.state, mset.d)
    workers = worker_count(args.workers)
    result = run_ensemble(
        mset, state, args.m, args.shots, args.seed, decomp=dec, workers=workers,
        keep_records=bool(args.csv),
    )
    if args.csv:
        report, records = result
        rows = []
        for shot, item in enumerate(records):
            if item is None:
                rows.append([shot, "", "", "aborted", ""])
                continue
            rec, fid = item
            rows.append([shot, rec.outcome_string, " ".join(map(str, rec.frequency.counts)), rec.classified_group, fid])
        write_csv(args.csv, ["shot", "outcomes", "counts", "group", "fidelity"], rows)
    else:
        report = result
    return 0, report.to_dict()


def cmd_scheme(args):
    scheme = DephasingScheme.from_dphi(args.omega, args.dphi)
    mset = build_measurement_pair(scheme, swap_labels=args.swap_labels)
    meta = {
        "scheme": "dephasing",
        "omega": list(scheme.spectrum),
        "dphi": scheme.dphi,
        "swap_labels": args.swap_labels,
        "polarization": polarization_table(scheme).tolist(),
        "degeneracies": [p.to_dict() for p in degeneracy_analysis(scheme).pairs],
    }
    return 0, measurement_set_to_dict(mset, meta)


def cmd_bosonic(args):
    scheme, mset = bosonic_modular_scheme(args.N, args.truncation, args.dphi)
    meta = {
        "scheme": "bosonic",
        "N": scheme.N,
        "truncation": scheme.truncation,
        "dphi": scheme.dphi,
        "omega": scheme.spectrum.tolist(),
        "class_polarization": scheme.class_polarizations().tolist(),
    }
    return 0, measurement_set_to_dict(mset, meta)


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqpovm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_input(p):
        p.add_argument("input", nargs="?", default="-", help="measurement-set JSON (default: stdin)")
        p.add_argument("--tol", type=float, default=TOL, help="validation tolerance")
        p.add_argument("--tol-group", type=float, default=TOL_GROUP, help="grouping tolerance")
        p.add_argument("--diag-seed", type=int, default=DEFAULT_SEED,
                       help="seed of the random combination used for diagonalization")
        return p

    p = with_input(sub.add_parser("validate", help="check completeness, normality, commutativity"))
    p.set_defaults(func=cmd_validate)

    p = with_input(sub.add_parser("decompose", help="common eigenbasis and phase-equivalence groups"))
    p.set_defaults(func=cmd_decompose)

    p = with_input(sub.add_parser("channel", help="distance of Phi^m to its asymptotic form"))
    p.add_argument("--m", type=_positive_int, required=True)
    p.set_defaults(func=cmd_channel)

    p = with_input(sub.add_parser("typicality", help="separation bound, neighborhood weights, error bounds"))
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--delta", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="report exact multinomial weights (default)")
    g.add_argument("--stirling", action="store_true", help="report exp(-m S) weights")
    p.add_argument("--csv", help="write per-grid-point weights here")
    p.add_argument("--cap", type=_positive_int, default=ENUMERATION_CAP)
    p.set_defaults(func=cmd_typicality)

    p = with_input(sub.add_parser("simulate", help="Monte Carlo ensemble of measurement sequences"))
    p.add_argument("--state", help='initial state as JSON or a path: a ket, a density matrix, or {"ket": ...}; default I/d')
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--shots", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=_positive_int, default=None)
    p.add_argument("--csv", help="write per-trajectory rows here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scheme", help="measurement pair from an ancilla dephasing scheme")
    p.add_argument("--omega", type=_float_list, required=True, help="comma-separated phases")
    p.add_argument("--dphi", type=float, default=0.0)
    p.add_argument("--swap-labels", action="store_true")
    p.set_defaults(func=cmd_scheme)

    p = sub.add_parser("bosonic", help="modular excitation-number scheme of a truncated bosonic mode")
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--truncation", type=_positive_int, default=None)
    p.add_argument("--dphi", type=float, default=None)
    p.set_defaults(func=cmd_bosonic)
    return parser


def _error(exc: Exception) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc)}
    report = getattr(exc, "report", None)
    if report is not None:
        err["report"] = report.to_dict()
    return {"error": err}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, payload = args.func(args)
    except (StructuralError, UsageError) as exc:
        code, payload = 2, _error(exc)
    except (SeqPovmError, ValueError) as exc:
        code, payload = 1, _error(exc)
    text = dumps(payload) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
