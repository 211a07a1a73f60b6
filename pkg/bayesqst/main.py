import argparse
import logging
import sys
from typing import Callable, List, Optional, Sequence, Tuple, Type

from bayesqst import __version__
from bayesqst.cli import register_commands
from bayesqst.config import get_settings
from bayesqst.exceptions import ChainFailure, QstError

logger = logging.getLogger(__name__)

ExceptionHandler = Callable[[BaseException], int]


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once from settings; ``level`` overrides QST_LOG_LEVEL."""
    settings = get_settings()
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format=settings.log_format,
    )


def build_parser() -> argparse.ArgumentParser:
    """Create the command-line application with every subcommand attached."""
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog=settings.project_name,
        description="Parallel Bayesian quantum state tomography with adaptive pCN chains",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Override QST_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    register_commands(subparsers)
    return parser


# Exception handlers
def chain_failure_handler(exc: ChainFailure) -> int:
    """Handle failed chains; completed chains are already on disk."""
    logger.error(f"Chain failure: {exc.detail}")
    for chain_index, cause in exc.failures.items():
        logger.error(f"  chain {chain_index}: {cause}")
    return exc.exit_code


def qst_exception_handler(exc: QstError) -> int:
    """Handle domain errors."""
    logger.error(f"{type(exc).__name__}: {exc.detail}")
    return exc.exit_code


def keyboard_interrupt_handler(exc: KeyboardInterrupt) -> int:
    logger.error("Interrupted by user")
    return 130


def general_exception_handler(exc: Exception) -> int:
    """Handle unexpected errors."""
    logger.error(f"Unexpected error: {str(exc)}", exc_info=exc)
    return QstError.exit_code


# Most specific first
EXCEPTION_HANDLERS: List[Tuple[Type[BaseException], ExceptionHandler]] = [
    (ChainFailure, chain_failure_handler),
    (QstError, qst_exception_handler),
    (KeyboardInterrupt, keyboard_interrupt_handler),
    (Exception, general_exception_handler),
]


def handle_exception(exc: BaseException) -> int:
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc)
    raise exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the chosen subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    logger.debug(f"Running '{args.command}' with {vars(args)}")
    try:
        args.handler(args)
    except SystemExit:
        raise
    except BaseException as exc:
        return handle_exception(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
