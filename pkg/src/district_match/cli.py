"""Command-line entry point: ``district-match <command> ...``.

Exit codes: 0 success, 2 usage error, 3 unreadable input file, 4 malformed
problem document, 5 invalid problem, 6 enumeration budget exceeded.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .equilibrium import DEFAULT_BUDGET, BudgetExceeded, Refinement, enumerate_equilibria
from .experiment import ExperimentSpec, ExperimentSpecError, run_experiment
from .io import ProblemFormatError, dumps, load_problem, parse_mode, problem_to_dict
from .lab.confirm import confirm_tuple
from .lab.fixtures import build_fixture
from .lab.witness import DetectorPrecondition, Theorem, detect
from .market import UNIFORM_WEIGHTS, MarketParamError, MarketParams, sample_market
from .model import Mechanism, Mode, Problem, validate_problem

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_FORMAT = 4
EXIT_INVALID = 5
EXIT_BUDGET = 6

DEFAULT_MECHANISMS = {"L": Mechanism.DA, "R": Mechanism.BM}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _mechanism_pair(text: str) -> tuple[str, Mechanism]:
    district, sep, mech = text.partition("=")
    if not sep or not district:
        raise argparse.ArgumentTypeError(f"expected DISTRICT=BM|DA, got {text!r}")
    try:
        return district, Mechanism(mech.upper())
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown mechanism {mech!r}; expected BM or DA") from None


def _mode(text: str) -> Mode:
    try:
        return parse_mode(text)
    except ProblemFormatError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str) -> Problem:
    try:
        p = load_problem(path)
    except OSError as exc:
        raise CliError(EXIT_FILE, f"cannot read {path}: {exc.strerror or exc}") from exc
    except ProblemFormatError as exc:
        raise CliError(EXIT_FORMAT, str(exc)) from exc
    return p


def _override(p: Problem, mechanisms, mode: Optional[Mode]) -> Problem:
    if mechanisms:
        mechs = dict(p.mechanisms)
        for d, m in mechanisms:
            if d not in mechs:
                raise CliError(EXIT_USAGE, f"--mechanism names unknown district {d!r}")
            mechs[d] = m
        p = replace(p, mechanisms=mechs)
    if mode is not None:
        p = replace(p, mode=mode)
    return p


def _check(p: Problem) -> None:
    errors = validate_problem(p)
    if errors:
        raise CliError(EXIT_INVALID, "invalid problem:\n  " + "\n  ".join(errors))


def cmd_solve(args) -> int:
    p = _override(_load(args.input), args.mechanism, args.mode)
    _check(p)
    try:
        eq = enumerate_equilibria(p, args.budget, refinement=args.refine)
    except BudgetExceeded as exc:
        raise CliError(EXIT_BUDGET, f"{exc}; rerun with a larger --budget") from exc
    doc = {
        "input": args.input,
        "mechanisms": {d: m.value for d, m in p.mechanisms.items()},
        "mode": p.mode.value,
        "refinement": Refinement(args.refine).value,
        "budget": args.budget,
        **eq.to_report(),
    }
    _emit(dumps(doc), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    mechanisms = dict(DEFAULT_MECHANISMS)
    mechanisms.update(dict(args.mechanism or ()))
    try:
        params = MarketParams(args.n, args.k, args.seed, tuple(args.weights), args.location_prob, args.mode)
    except MarketParamError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    _emit(dumps(problem_to_dict(sample_market(params, mechanisms))), args.out)
    return EXIT_OK


def cmd_fixture(args) -> int:
    mechanisms = dict(args.mechanism or ())
    try:
        p = build_fixture(
            args.name, args.x, mechanisms.get("L", Mechanism.BM), mechanisms.get("R", Mechanism.BM), args.mode
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    _emit(dumps(problem_to_dict(p)), args.out)
    return EXIT_OK


def cmd_detect(args) -> int:
    p = _override(_load(args.input), args.mechanism, args.mode)
    _check(p)
    try:
        hits = detect(p, args.theorem, isolated=args.isolated)
    except DetectorPrecondition as exc:
        raise CliError(EXIT_INVALID, str(exc)) from exc
    rows = []
    for w in hits:
        row = {"theorem": w.theorem.value, "students": list(w.students), "schools": w.school_map,
               "left": w.left, "right": w.right}
        if args.confirm:
            row["confirmation"] = confirm_tuple(p, w, args.budget, args.refine).value
        rows.append(row)
    _emit(dumps({"input": args.input, "tuples": rows}), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    mechanisms = dict(DEFAULT_MECHANISMS)
    mechanisms.update(dict(args.mechanism or ()))
    parts = tuple(args.fixed_tuple) if args.fixed_tuple is not None else ()
    try:
        spec = ExperimentSpec(
            theorem=args.theorem, ns=tuple(args.n), trials=args.trials, seed=args.seed, k=args.k,
            mechanisms=mechanisms, mode=args.mode, weights=tuple(args.weights),
            location_prob=args.location_prob, fixed_parts=parts, confirm=not args.no_confirm,
            refinement=args.refine, budget=args.budget,
        )
    except (ExperimentSpecError, MarketParamError) as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    try:
        report = run_experiment(spec)
    except DetectorPrecondition as exc:
        raise CliError(EXIT_INVALID, str(exc)) from exc
    _emit(report.csv(), args.out)
    if args.tuples_out:
        Path(args.tuples_out).write_text(report.tuples_csv())
    return EXIT_OK


def _add_common(sp, input_required: bool = False, budget: bool = False):
    if input_required:
        sp.add_argument("--input", required=True, help="problem file (JSON)")
    sp.add_argument("--mechanism", nargs="+", type=_mechanism_pair, metavar="D=BM|DA",
                    help="per-district mechanism, e.g. L=BM R=DA")
    sp.add_argument("--mode", type=_mode, default=None, help="naive or strategic")
    if budget:
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum profile count to scan")
        sp.add_argument("--refine", type=Refinement, choices=list(Refinement), default=Refinement.NONE,
                        metavar="{none,undominated}", help="equilibrium refinement (default: none)")
    sp.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="district-match", description="Multi-district school choice toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="enumerate pure Nash equilibria of a problem file")
    _add_common(sp, input_required=True, budget=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sample", help="draw a random (n; k) market")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--weights", type=float, nargs=8, default=list(UNIFORM_WEIGHTS), metavar="W")
    sp.add_argument("--location-prob", type=float, default=0.5)
    _add_common(sp)
    sp.set_defaults(func=cmd_sample, mode=None)

    sp = sub.add_parser("fixture", help="write one of the worked examples as a problem file")
    sp.add_argument("name", help="sec31, sec41, cycle or cycleN")
    sp.add_argument("--x", type=int, default=2, help="cycle length")
    _add_common(sp)
    sp.set_defaults(func=cmd_fixture)

    sp = sub.add_parser("detect", help="list witness tuples in a problem file")
    sp.add_argument("--theorem", type=Theorem, choices=list(Theorem), required=True, metavar="{T1,T2,L1,L2}")
    sp.add_argument("--confirm", action="store_true", help="also confirm each tuple with the solver")
    sp.add_argument("--isolated", action="store_true", help="keep only tuples whose extra list entries avoid named schools")
    _add_common(sp, input_required=True, budget=True)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("experiment", help="seeded Monte Carlo experiment, CSV report")
    sp.add_argument("--theorem", type=Theorem, choices=list(Theorem), required=True, metavar="{T1,T2,L1,L2}")
    sp.add_argument("--n", type=int, nargs="+", required=True, help="market sizes")
    sp.add_argument("--k", type=int, default=None, help="list length (default: construction's own)")
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--weights", type=float, nargs=8, default=list(UNIFORM_WEIGHTS), metavar="W")
    sp.add_argument("--location-prob", type=float, default=0.5)
    sp.add_argument("--fixed-tuple", nargs="*", default=None, metavar="GROUP",
                    help="test condition groups on the first students (default group: preferences)")
    sp.add_argument("--no-confirm", action="store_true", help="skip solver confirmation of hits")
    sp.add_argument("--tuples-out", help="also write one CSV row per detected tuple")
    _add_common(sp, budget=True)
    sp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "mode", None) is None and args.command in ("sample", "fixture", "experiment"):
        args.mode = Mode.NAIVE
    if args.command == "experiment" and args.fixed_tuple is not None and not args.fixed_tuple:
        args.fixed_tuple = ["preferences"]
    try:
        return args.func(args)
    except CliError as exc:
        print(f"district-match {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
