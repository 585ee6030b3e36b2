"""
regime-swk command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.
"""
import sys
from collections.abc import Sequence

import anyio
from loguru import logger as l
from pydantic import ValidationError

from regime_swk import meta_config
from regime_swk.commands import build_parser
from regime_swk.models.exceptions import ConfigError, RegimeSwkError

RUNTIME_ERROR_EXIT_CODE: int = 4


def configure_logging(level: str | None = None) -> None:
    l.remove()
    l.add(sys.stderr, level=level or meta_config.LOG_LEVEL)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        anyio.run(args.handler, args)
    except RegimeSwkError as e:
        l.error(f"{type(e).__name__}: {e.message}")
        return e.exit_code
    except ValidationError as e:
        l.error(f"Invalid configuration: {e}")
        return ConfigError.exit_code
    except Exception:
        l.exception(f"Unexpected failure in '{args.command}'")
        return RUNTIME_ERROR_EXIT_CODE
    l.success(f"'{args.command}' finished")
    return 0


if __name__ == '__main__':
    sys.exit(main())
