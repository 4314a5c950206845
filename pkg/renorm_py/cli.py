# renorm_py/cli.py

import argparse
import dataclasses
import logging
import sys
from typing import List, Optional

from renorm_py import __version__
from renorm_py.errors import NumericalFlag, ScenarioError
from renorm_py.protocols import run_protocol
from renorm_py.results import emit_results
from renorm_py.scenario import PROTOCOLS, Scenario, load_scenario
from renorm_py.models import jc_equivalent

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

logger = logging.getLogger(__name__)


def _with_overrides(sc: Scenario, seed: Optional[int], out: Optional[str]) -> Scenario:
    if seed is not None:
        if not hasattr(sc.protocol, "seed"):
            logger.warning("--seed ignored: protocol %s does not sample", sc.protocol.kind)
        else:
            sc = sc.model_copy(update={"protocol": sc.protocol.model_copy(update={"seed": seed})})
    if out is not None:
        sc = sc.model_copy(update={"output": sc.output.model_copy(update={"directory": out})})
    return sc


def run_metadata(sc: Scenario, grids: dict) -> dict:
    p = sc.model_params()
    return {
        "code_version": __version__,
        "scenario": sc.model_dump(mode="json", by_alias=True),
        "params_rad_s": dataclasses.asdict(p),
        "jc_equivalent_rad_s": dataclasses.asdict(jc_equivalent(p, sc.model)),
        "seed": sc.seed,
        "grids": grids,
    }


def run_scenario(path: str, workers: int = 1, seed: Optional[int] = None, out: Optional[str] = None,
                 strict: bool = False, expect_protocol: Optional[str] = None) -> int:
    """Validate, run and write one scenario; returns the process exit code."""
    try:
        sc = _with_overrides(load_scenario(path), seed, out)
    except ScenarioError as exc:
        print(f"[ERROR] {path}: invalid scenario\n{exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"[ERROR] cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_IO

    if expect_protocol is not None and sc.protocol.kind != expect_protocol:
        print(f"[ERROR] {path}: protocol is {sc.protocol.kind}, not {expect_protocol}", file=sys.stderr)
        return EXIT_SCHEMA

    try:
        outcome = run_protocol(sc, workers=workers)
    except NumericalFlag as exc:
        print(f"[ERROR] {sc.name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ScenarioError as exc:
        print(f"[ERROR] {sc.name}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    try:
        paths = emit_results(outcome.tables, run_metadata(sc, outcome.grids), sc.output.directory,
                             sc.output.formats, stem=sc.name)
    except OSError as exc:
        print(f"[ERROR] cannot write results to {sc.output.directory}: {exc}", file=sys.stderr)
        return EXIT_IO

    if outcome.singular:
        print(f"[WARN] {outcome.summary} ({outcome.singular} singular samples written as null)")
        if strict:
            return EXIT_NUMERIC
    else:
        print(f"[OK] {outcome.summary}")
    for path_written in paths:
        logger.info("wrote %s", path_written)
    return EXIT_OK


def validate_scenario(path: str) -> int:
    try:
        sc = load_scenario(path)
    except ScenarioError as exc:
        print(f"[ERROR] {path}: invalid scenario\n{exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"[ERROR] cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"[OK] {path}: {sc.name} ({sc.protocol.kind}, model {sc.model})")
    return EXIT_OK


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", help="scenario YAML file")
    p.add_argument("--workers", type=int, default=1, help="threads for independent grid points")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", type=str, default=None, help="override the output directory")
    p.add_argument("--strict", action="store_true", help="exit 3 when singular samples were emitted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renorm", description="Time-dependent level renormalisation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("scenario")

    _add_run_options(sub.add_parser("run", help="run any scenario"))
    for protocol in PROTOCOLS:
        _add_run_options(sub.add_parser(protocol.replace("_", "-"), help=f"run a {protocol} scenario"))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "validate":
        return validate_scenario(args.scenario)
    if args.workers < 1:
        print("[ERROR] --workers must be >= 1", file=sys.stderr)
        return EXIT_SCHEMA
    expect = None if args.command == "run" else args.command.replace("-", "_")
    return run_scenario(args.scenario, workers=args.workers, seed=args.seed, out=args.out,
                        strict=args.strict, expect_protocol=expect)


if __name__ == "__main__":
    sys.exit(main())
