"""
Command-line entry point: python -m app.main <subcommand> [options].

Reports go to --out or standard output; diagnostics go to standard error.
Exit codes: 0 success, 2 symbol outside the admissible class, 1 anything else.
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

import app
from app.config.settings import settings
from app.core.pipeline_manager import pipeline_manager
from app.models.pipeline import PipelineType
from app.models.report import AnalysisReport
from app.utils.logger import get_logger

logger = get_logger(__name__)

USAGE_EXIT = 1


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """Raises instead of exiting so usage errors map to exit code 1."""

    def error(self, message: str) -> None:
        raise UsageError(message)


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--symbol", help='Symbol text, e.g. "9/2 - 2^-s - 3^-s - 2*6^-s"')
    common.add_argument("--file", help="File holding symbol text or JSON")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--samples", type=int, help="Monte-Carlo samples per cell")
    common.add_argument("--eps-max", type=float, help="Largest Carleson box side")
    common.add_argument("--eps-min", type=float, help="Smallest Carleson box side")
    common.add_argument("--out", help="Output file or directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--exact", action="store_true", help="Rational arithmetic where supported")

    parser = CliParser(prog="python -m app.main", description="Dirichlet symbol composition-operator laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {app.__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)

    analyze = sub.add_parser("analyze", parents=[common], help="Profile, boundary points and verdict")
    analyze.add_argument("--carleson", action="store_true", help="Always attach a box exponent fit")

    carleson = sub.add_parser("carleson", parents=[common], help="Box measures and the box exponent")
    carleson.add_argument("--sampler", choices=("lattice", "random"))
    carleson.add_argument("--tau", type=float, help="Box height for a single box")
    carleson.add_argument("--eps", type=float, help="Box side for a single box")

    keylemma = sub.add_parser("keylemma", parents=[common], help="Taylor-factorization laboratory")
    keylemma.add_argument("--a1", help="Coefficient of 1 - z1, e.g. 1/2")
    keylemma.add_argument("--a2", help="Coefficient of 1 - z2")
    keylemma.add_argument("--imc", help="Imaginary part of c")
    keylemma.add_argument("--imb1", help="Imaginary part of b1; default from Im c")
    keylemma.add_argument("--imb2", help="Imaginary part of b2; default from Im c")
    keylemma.add_argument("--grid", type=int, help="Sweep an n x n grid of the admissible triangle")
    keylemma.add_argument("--geometry", action="store_true", help="Also run the triangle geometry checks")

    construct = sub.add_parser("construct", parents=[common], help="Boundary-flat constructions")
    mode = construct.add_mutually_exclusive_group(required=True)
    mode.add_argument("--flat", nargs=2, type=int, metavar=("K", "N"), help="Re Phi = (1 - cos x)^K with 2N targets")
    mode.add_argument("--separated", type=_int_list, metavar="K1,K2,...", help="Even orders per variable")
    mode.add_argument("--counterexample", choices=("cex3", "cex5a", "cex5b"))
    construct.add_argument("--delta", help="Family parameter, e.g. 1/10")
    construct.add_argument("--poly", help="Polynomial in z1, z2, ... for cex3 and cex5b")
    construct.add_argument("--dim", type=int, help="Dimension for cex5a")
    construct.add_argument("--grid", type=int, help="Certification grid points per dimension")
    construct.add_argument("--analyze", action="store_true", help="Classify the resulting symbol")

    approx = sub.add_parser("approx", parents=[common], help="Approximation-number tools")
    approx.add_argument("--eta", action="store_true", help="Compactness index (default)")
    approx.add_argument("--omega", action="store_true", help="Contact exponent")
    approx.add_argument("--witness", action="store_true", help="Lower-bound lattice witness")
    approx.add_argument("--delta", type=float, help="Witness lattice step")
    approx.add_argument("--nu", type=float, help="Witness real-part offset")
    approx.add_argument("--fit-deltas", type=_float_list, help="Witness exponent fit over these steps")
    approx.add_argument("--probe", action="store_true", help="Truncated matrix probe")
    approx.add_argument("--M", type=int, dest="M", help="Probe column cap")
    approx.add_argument("--D", type=int, dest="D", help="Probe degree cap")
    approx.add_argument("--schatten", nargs=2, metavar=("P", "Q"), help="Separated example in S_Q but not S_P")
    approx.add_argument("--build", action="store_true", help="Build and certify the Schatten example")
    approx.add_argument("--length", type=float, metavar="OMEGA", help="Hyperbolic length growth fit")
    approx.add_argument("--blaschke", nargs=2, type=float, metavar=("N", "OMEGA"), help="Blaschke product bound")
    approx.add_argument("--sigma", type=float, help="Left edge of the contact region")
    approx.add_argument("--C", type=float, dest="C", help="Contact constant")
    approx.add_argument("--bounds", nargs="+", type=int, metavar="N", help="Bound curves at these n")
    approx.add_argument("--eta-value", help="Compactness index for --bounds")
    approx.add_argument("--omega-value", type=float, help="Contact exponent for --bounds")
    approx.add_argument("--kappa", type=float, help="Box exponent for --bounds")
    approx.add_argument("--exponential-form", choices=("printed", "corrected"))
    return parser


def render(report: AnalysisReport, fmt: str) -> str:
    if fmt == "csv":
        frame = pd.DataFrame.from_records(report.table) if report.table else pd.json_normalize([report.payload])
        return frame.to_csv(index=False)
    return json.dumps(report.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"


def write_report(report: AnalysisReport, fmt: str, out: Optional[str]) -> Optional[Path]:
    """Write to --out (a file, or a directory getting <command>.<fmt>), else stdout."""
    target = out or settings.output_dir
    text = render(report, fmt)
    if not target:
        sys.stdout.write(text)
        return None
    path = Path(target)
    if path.is_dir() or not path.suffix:
        path.mkdir(parents=True, exist_ok=True)
        path = path / f"{report.command}.{fmt}"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run one pipeline and write its report.

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return USAGE_EXIT
    if not args.command:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT

    options: Dict[str, Any] = vars(args)
    command = options.pop("command")
    fmt = options.pop("format")
    out = options.pop("out")

    response = asyncio.run(pipeline_manager.execute(PipelineType(command), options))
    if response.error is not None:
        sys.stderr.write(json.dumps(response.error.model_dump(mode="json", exclude={"timestamp"})) + "\n")
        return response.exit_code

    path = write_report(response.result, fmt, out)
    logger.info("Report written", command=command, path=str(path) if path else "stdout")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
