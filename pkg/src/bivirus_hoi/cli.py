"""Command line entry point: ``bivirus-hoi <subcommand> [options]``.

CSV and JSON go to stdout or ``--out``; logs go to stderr. Exit status is 0
on success, 1 on any operation error and 2 on usage errors.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import IO, Callable, Dict, List, Optional

from pydantic import BaseModel

from bivirus_hoi import __version__
from bivirus_hoi.application.analysis_service import InitialCondition, ScenarioAnalysisService
from bivirus_hoi.application.scenario_service import BUILTINS, LoadedScenario, builtin, load_config, load_scenario, serialize
from bivirus_hoi.config import settings
from bivirus_hoi.exceptions import BivirusError, ScenarioError
from bivirus_hoi.schemas.equilibrium import ConditionsSummary, EquilibriumCatalog
from bivirus_hoi.schemas.scenario import ScenarioConfig
from bivirus_hoi.schemas.simulation import CensusSummary, InitialKind, TrajectoryReport
from bivirus_hoi.utils.csv_io import write_census_csv, write_trajectory_csv
from bivirus_hoi.utils.logging import get_logger, setup_logging

logger = get_logger(__name__)

SCHEMAS: Dict[str, type] = {
    "scenario": ScenarioConfig,
    "equilibria": EquilibriumCatalog,
    "conditions": ConditionsSummary,
    "census": CensusSummary,
    "trajectory": TrajectoryReport,
}


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--config", type=Path, help="Scenario JSON file")
    source.add_argument("--builtin", choices=sorted(BUILTINS), help="Built-in scenario")
    common.add_argument("--seed", type=_nonnegative_int, help="Base seed (overrides the scenario rng_seed)")
    common.add_argument("--t-max", type=float, dest="t_max", help="Integration horizon")
    common.add_argument("--count", type=_nonnegative_int, help="Census trajectories")
    common.add_argument("--out", type=Path, help="Output file")
    common.add_argument("--json", action="store_true", help="JSON report instead of text")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR")
    common.add_argument("--log-json", action="store_true", help="Structured JSON log records")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bivirus-hoi", description="Competitive bivirus SIS model on hypergraphs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="Integrate one trajectory, CSV output")
    simulate.add_argument("--initial", choices=[k.value for k in InitialKind], default=InitialKind.RANDOM.value)
    simulate.add_argument("--eps", type=float, default=1e-3, help="Level of the near-dfe start")
    simulate.add_argument("--x1", type=_float_list, help="Explicit virus 1 fractions, comma separated")
    simulate.add_argument("--x2", type=_float_list, help="Explicit virus 2 fractions, comma separated")
    simulate.set_defaults(handler=cmd_simulate)

    sub.add_parser("equilibria", parents=[common], help="Enumerate and classify equilibria") \
        .set_defaults(handler=cmd_equilibria)
    sub.add_parser("conditions", parents=[common], help="Evaluate the sufficient conditions") \
        .set_defaults(handler=cmd_conditions)
    sub.add_parser("census", parents=[common], help="Convergence census from random starts") \
        .set_defaults(handler=cmd_census)

    show = sub.add_parser("builtin", parents=[common], help="Print a built-in scenario as JSON")
    show.add_argument("name", nargs="?", choices=sorted(BUILTINS))
    show.set_defaults(handler=cmd_builtin)

    schema = sub.add_parser("schema", parents=[common], help="Print the JSON schema of a report")
    schema.add_argument("name", choices=sorted(SCHEMAS))
    schema.set_defaults(handler=cmd_schema)
    return parser


def _scenario(args: argparse.Namespace) -> LoadedScenario:
    if args.config is not None:
        return load_config(args.config)
    if args.builtin is not None:
        return load_scenario(builtin(args.builtin))
    raise ScenarioError("one of --config or --builtin is required")


def _emit(text: str, out: Optional[Path], stream: IO[str]) -> None:
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=stream)


def _dump(model: BaseModel) -> str:
    return model.model_dump_json(indent=2)


def _vector(values: List[float]) -> str:
    return "[" + " ".join(f"{v:.4f}" for v in values) + "]"


def format_catalog(catalog: EquilibriumCatalog) -> str:
    header = f"{'label':<16} {'stability':<29} {'s_jacobian':>11} {'residual':>9} {'sat':>5} {'nondeg':>6}  x1 | x2"
    lines = [header, "-" * len(header)]
    for r in catalog.records:
        lines.append(
            f"{r.label:<16} {r.stability.value:<29} {r.s_jacobian:>11.4e} {r.residual:>9.1e} "
            f"{str(r.saturated):>5} {str(r.nondegenerate):>6}  {_vector(r.x1)} | {_vector(r.x2)}"
        )
    lines.append(f"solver runs: {catalog.solver_runs}/{catalog.budget}"
                 + (" (budget exhausted)" if catalog.budget_exhausted else ""))
    lines.extend(f"warning: {w}" for w in catalog.warnings)
    return "\n".join(lines)


def format_conditions(summary: ConditionsSummary) -> str:
    lines = []
    for report in summary.reports:
        lines.append(f"{report.name}: {report.holds}")
        for check in report.checks:
            evidence = json.dumps(check.evidence, default=str)
            note = f"  ({check.note})" if check.note else ""
            lines.append(f"  {check.name}: {check.holds} {evidence}{note}")
        if report.claim:
            lines.append(f"  claim: {report.claim} -> verified: {report.claim_verified}")
    lines.append(f"regime: {summary.regime.value if summary.regime else 'none'}")
    return "\n".join(lines)


def format_census(summary: CensusSummary) -> str:
    lines = [f"converged: {summary.converged}/{summary.count} ({100 * summary.fraction_converged:.1f}%)"]
    for label, count in summary.histogram.items():
        lines.append(f"  {label}: {count}")
    if summary.unconverged_runs:
        lines.append(f"not converged: runs {', '.join(map(str, summary.unconverged_runs))}")
    return "\n".join(lines)


def cmd_simulate(args: argparse.Namespace) -> int:
    service = ScenarioAnalysisService(_scenario(args))
    initial = InitialCondition(
        kind=InitialKind(args.initial),
        seed=args.seed if args.seed is not None else service.scenario.simulation.rng_seed,
        eps=args.eps,
        x1=args.x1,
        x2=args.x2,
    )
    traj, report = service.simulate(initial, t_max=args.t_max)
    text = _dump(report) if args.json else report.headline()
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", encoding="utf-8", newline="") as handle:
            write_trajectory_csv(traj, handle)
        print(text)
    else:
        write_trajectory_csv(traj, sys.stdout)
        print(text, file=sys.stderr)
    return 0


def cmd_equilibria(args: argparse.Namespace) -> int:
    catalog = ScenarioAnalysisService(_scenario(args)).equilibria()
    print(_dump(catalog) if args.json else format_catalog(catalog))
    if args.out is not None:
        _emit(_dump(catalog), args.out, sys.stdout)
    return 0


def cmd_conditions(args: argparse.Namespace) -> int:
    summary = ScenarioAnalysisService(_scenario(args)).conditions()
    print(_dump(summary) if args.json else format_conditions(summary))
    if args.out is not None:
        _emit(_dump(summary), args.out, sys.stdout)
    return 0


def cmd_census(args: argparse.Namespace) -> int:
    summary = ScenarioAnalysisService(_scenario(args)).census(count=args.count, seed=args.seed, t_max=args.t_max)
    print(_dump(summary) if args.json else format_census(summary))
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", encoding="utf-8", newline="") as handle:
            write_census_csv(summary, handle)
    return 0


def cmd_builtin(args: argparse.Namespace) -> int:
    name = args.name or args.builtin
    if name is None:
        raise ScenarioError(f"name a built-in scenario: {', '.join(sorted(BUILTINS))}")
    _emit(serialize(builtin(name)), args.out, sys.stdout)
    return 0


def cmd_schema(args: argparse.Namespace) -> int:
    _emit(json.dumps(SCHEMAS[args.name].model_json_schema(), indent=2), args.out, sys.stdout)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(
        log_level=args.log_level or settings.log_level,
        log_file=settings.log_file,
        json_format=args.log_json or settings.log_json_format,
        console_output=settings.log_console_output,
    )
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except BivirusError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
