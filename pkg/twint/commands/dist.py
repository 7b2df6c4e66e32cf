"""
`twint dist`: evaluate or sample one distribution from the command line.
"""
import argparse
import logging
from pathlib import Path
from typing import Any

import numpy as np

from twint.core.exceptions import UsageError
from twint.models import (
    AzzaliniTwinT,
    GeneralizedTwinT,
    JonesTwinT,
    LocationScaleModel,
    MultivariateGeneralizedTwinT,
    MultivariateTwinT,
    TwinT,
    TwoPieceTwinT,
)
from twint.schemas.run_config import MULTIVARIATE_FAMILIES, DistAction, DistFamily, DistRequest, RunConfig
from twint.services.io_service import format_number

logger = logging.getLogger("DistCommand")


def parse_vector(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as e:
        raise UsageError(f"cannot parse '{text}' as comma-separated numbers") from e


def parse_matrix(text: str) -> list[list[float]]:
    """Row-major matrix with ';' between rows, e.g. '1,0.5;0.5,2'."""
    return [parse_vector(row) for row in text.split(";")]


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("dist", help="evaluate pdf/cdf/quantile or sample a distribution")
    p.add_argument("--family", required=True, choices=[f.value for f in DistFamily])
    p.add_argument("--action", required=True, choices=[a.value for a in DistAction])
    p.add_argument("--nu", type=float, help="degrees of freedom")
    p.add_argument("--gamma", type=float, help="two-piece asymmetry")
    p.add_argument("--a", type=float, help="Jones left-tail parameter")
    p.add_argument("--b", type=float, help="Jones right-tail parameter")
    p.add_argument("--phi", type=float, help="Azzalini skewing parameter in [-1, 1]")
    p.add_argument("--beta", type=float, help="generalized tail-shape power")
    p.add_argument("--gamma-param", type=float, help="generalized gamma")
    p.add_argument("--loc", type=float, default=0.0, help="location (univariate families)")
    p.add_argument("--scale", type=float, default=1.0, help="scale (univariate families)")
    p.add_argument("--mu", help="location vector, e.g. '0,0' (multivariate families)")
    p.add_argument("--scale-matrix", help="scale matrix, rows separated by ';'")
    p.add_argument("--x", nargs="+", default=[], help="evaluation points (probabilities for quantile); "
                                                       "comma-separated vectors for multivariate families")
    p.add_argument("--n", type=int, default=0, help="number of draws for --action sample")
    p.add_argument("--seed", type=int, help="random seed (default: settings.DEFAULT_SEED)")
    p.add_argument("--out", type=Path, help="write the values to this file instead of stdout")
    p.set_defaults(handler=run_from_args)


def build_config(args: argparse.Namespace) -> RunConfig:
    request = DistRequest(
        family=args.family, action=args.action, nu=args.nu, gamma=args.gamma, a=args.a, b=args.b,
        phi=args.phi, beta=args.beta, gamma_param=args.gamma_param, loc=args.loc, scale=args.scale,
        mu=parse_vector(args.mu) if args.mu else None,
        scale_matrix=parse_matrix(args.scale_matrix) if args.scale_matrix else None,
        points=[parse_vector(x) for x in args.x], n=args.n,
    )
    extra: dict[str, Any] = {} if args.seed is None else {"seed": args.seed}
    return RunConfig(command="dist", output_path=args.out, dist=request, **extra)


def build_distribution(req: DistRequest):
    """The distribution object a request describes (univariate families wrapped with loc/scale)."""
    family = req.family
    if family in MULTIVARIATE_FAMILIES:
        V = np.asarray(req.scale_matrix, dtype=float)
        mu = req.mu if req.mu is not None else np.zeros(V.shape[0])
        if family == DistFamily.MULTIVARIATE:
            return MultivariateTwinT(nu=req.nu, mu=mu, V=V)
        return MultivariateGeneralizedTwinT(beta=req.beta, gam=req.gamma_param, mu=mu, V=V)

    if family == DistFamily.TWIN_T:
        base = TwinT(nu=req.nu)
    elif family == DistFamily.TWO_PIECE:
        base = TwoPieceTwinT(base=TwinT(nu=req.nu), gamma=req.gamma)
    elif family == DistFamily.JONES:
        base = JonesTwinT(base=TwinT(nu=req.nu if req.nu is not None else req.a + req.b), a=req.a, b=req.b)
    elif family == DistFamily.AZZALINI:
        base = AzzaliniTwinT(base=TwinT(nu=req.nu), phi=req.phi)
    else:
        base = GeneralizedTwinT(beta=req.beta, gam=req.gamma_param)
    return LocationScaleModel(mu=req.loc, sigma=req.scale, base=base)


def evaluate(config: RunConfig) -> list[str]:
    req = config.dist
    dist = build_distribution(req)
    multivariate = req.family in MULTIVARIATE_FAMILIES

    if req.action == DistAction.SAMPLE:
        draws = dist.sample(req.n, config.seed)
        if multivariate:
            return [",".join(format_number(v) for v in row) for row in draws]
        return [format_number(v) for v in draws]

    lines = []
    for point in req.points:
        if multivariate:
            x = np.asarray(point, dtype=float)
        elif len(point) != 1:
            raise UsageError(f"univariate family {req.family.value} takes scalar --x values")
        else:
            x = point[0]
        if req.action == DistAction.PDF:
            value = dist.pdf(x)
        elif req.action == DistAction.LOGPDF:
            value = dist.log_pdf(x)
        elif req.action == DistAction.CDF:
            value = dist.cdf(x)
        else:
            value = dist.quantile(x)
        lines.append(format_number(value))
    return lines


def run(config: RunConfig) -> int:
    lines = evaluate(config)
    text = "\n".join(lines) + "\n"
    if config.output_path is not None:
        config.output_path.write_text(text, encoding="utf-8", newline="\n")
        logger.info(f"Wrote {len(lines)} values to {config.output_path}")
    else:
        print(text, end="")
    return 0


def run_from_args(args: argparse.Namespace) -> int:
    return run(build_config(args))
