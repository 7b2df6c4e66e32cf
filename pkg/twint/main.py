import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from twint.commands import dist, fit, simulate
from twint.core.config import settings
from twint.core.exceptions import DomainError, TwinTError, UsageError

logger = logging.getLogger("twint")


class CliArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of printing usage and exiting."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog=settings.PROJECT_NAME, description="Twin-t distributions and robust fitting")
    parser.add_argument("--log-level", default=None, help=f"logging level (default: {settings.LOG_LEVEL})")
    commands = parser.add_subparsers(dest="command", required=True)
    dist.register(commands)
    fit.register(commands)
    simulate.register(commands)
    return parser


def _validation_message(error: ValidationError) -> str:
    first = error.errors()[0]
    message = str(first.get("msg", error))
    for prefix in ("Value error, ", "Assertion failed, "):
        message = message.removeprefix(prefix)
    location = ".".join(str(part) for part in first.get("loc", ()))
    if first.get("type") != "value_error" and location:
        return f"{location}: {message}"
    return message


def report_error(error: TwinTError) -> int:
    print(f"error[{error.code}]: {error.message}", file=sys.stderr)
    return error.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=(args.log_level or settings.LOG_LEVEL).upper(),
                            format="%(asctime)s %(name)s %(levelname)s %(message)s")
        return args.handler(args)
    except TwinTError as e:
        logger.debug(f"{type(e).__name__}: {e.message}", exc_info=True)
        return report_error(e)
    except ValidationError as e:
        logger.debug("parameter validation failed", exc_info=True)
        return report_error(DomainError(_validation_message(e)))
    except SystemExit as e:
        # --help
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
