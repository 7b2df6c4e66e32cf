"""
`twint fit regress` and `twint fit curve`: maximum-likelihood fits of a CSV file.
"""
import argparse
import logging
from pathlib import Path
from typing import Any

from twint.core.exceptions import ConvergenceError
from twint.schemas.estimation import CurveFitSpec, RegressionSpec
from twint.schemas.run_config import RunConfig
from twint.services.estimation_service import EstimationService
from twint.services.io_service import format_report, read_csv

logger = logging.getLogger("FitCommand")

FAMILY_CHOICES = ["normal", "student-t", "twin-t"]
SKEW_CHOICES = ["none", "two-piece", "jones", "azzalini"]


def _enum_value(text: str) -> str:
    return text.replace("-", "_")


def register(subparsers: argparse._SubParsersAction) -> None:
    fit = subparsers.add_parser("fit", help="maximum-likelihood fits")
    kinds = fit.add_subparsers(dest="fit_kind", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", type=Path, required=True, help="CSV file with a header row")
    common.add_argument("--out", type=Path, help="write the report to this file instead of stdout")
    common.add_argument("--json", action="store_true", help="structured JSON report")
    common.add_argument("--seed", type=int, help="random seed for the bootstrap")

    regress = kinds.add_parser("regress", parents=[common], help="linear regression with heavy-tailed errors")
    regress.add_argument("--family", default="twin-t", choices=FAMILY_CHOICES)
    regress.add_argument("--response", required=True, help="response column")
    regress.add_argument("--covariates", nargs="+", required=True, help="covariate columns")
    regress.add_argument("--hetero", action="store_true", help="log sigma^2 = lambda0 + lambda1 * x")
    regress.add_argument("--dispersion-covariate", help="covariate driving the dispersion (default: first)")
    regress.set_defaults(handler=run_from_args)

    curve = kinds.add_parser("curve", parents=[common], help="location-scale(-skew) fit of one column")
    curve.add_argument("--family", default="twin-t", choices=[c for c in FAMILY_CHOICES if c != "normal"])
    curve.add_argument("--skew", default="none", choices=SKEW_CHOICES)
    curve.add_argument("--column", required=True, help="column to fit")
    curve.add_argument("--bootstrap", type=int, default=0, metavar="N", help="bootstrap replicates for SEs")
    curve.set_defaults(handler=run_from_args)


def build_config(args: argparse.Namespace) -> RunConfig:
    extra: dict[str, Any] = {} if args.seed is None else {"seed": args.seed}
    if args.fit_kind == "regress":
        spec = RegressionSpec(
            error_family=_enum_value(args.family), heteroscedastic=args.hetero,
            response_column=args.response, covariate_columns=args.covariates,
            dispersion_covariate=args.dispersion_covariate,
        )
        return RunConfig(command="fit_regress", input_path=args.data, output_path=args.out,
                         json_output=args.json, regression=spec, **extra)
    spec = CurveFitSpec(family=_enum_value(args.family), skew=_enum_value(args.skew), column=args.column)
    return RunConfig(command="fit_curve", input_path=args.data, output_path=args.out, json_output=args.json,
                     curve=spec, bootstrap_replicates=args.bootstrap, **extra)


def run(config: RunConfig) -> int:
    data = read_csv(config.input_path)
    service = EstimationService(config.optimizer)
    if config.command == "fit_regress":
        report = service.fit_regression(config.regression, data)
    else:
        report = service.fit_curve(config.curve, data, bootstrap_replicates=config.bootstrap_replicates,
                                   seed=config.seed)

    text = format_report(report, as_json=config.json_output) + "\n"
    if config.output_path is not None:
        config.output_path.write_text(text, encoding="utf-8", newline="\n")
        logger.info(f"Report written to {config.output_path}")
    else:
        print(text, end="")
    if not report.converged:
        raise ConvergenceError(f"{report.family} fit did not converge after {report.iterations} iterations")
    return 0


def run_from_args(args: argparse.Namespace) -> int:
    return run(build_config(args))
