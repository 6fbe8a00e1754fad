"""
Experiment controller.

Routes harness commands to registered experiment runners and turns their
outcome into an exit code. The controller knows WHAT was asked; the runners
know HOW to run it.
"""

import logging
from typing import Any, Dict, Optional

from ptnn.errors import (
    DimensionMismatchError,
    DomainError,
    FormatError,
    MetricError,
    NumericalFailureError,
)

from .runners.base import ExperimentRunner, ExperimentSpec, UsageError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def exit_code_for(exc: BaseException) -> int:
    """Map a failure to the harness exit code."""
    if isinstance(exc, (UsageError, DimensionMismatchError, DomainError, MetricError)):
        return EXIT_USAGE
    if isinstance(exc, (OSError, FormatError)):
        return EXIT_IO
    # NumericalFailureError and anything unexpected
    return EXIT_NUMERICAL


class ExperimentController:
    """
    Registry and dispatcher for experiment runners.

    Usage:
        controller = ExperimentController()
        controller.register_runner(CompleteRunner())
        result = await controller.execute("complete", spec)
        sys.exit(result["exit_code"])
    """

    def __init__(self):
        self.runners: Dict[str, ExperimentRunner] = {}
        logger.debug("ExperimentController initialized")

    def register_runner(self, runner: ExperimentRunner) -> None:
        kind = runner.kind
        if kind in self.runners:
            logger.warning(f"Runner '{kind}' already registered, replacing")
        self.runners[kind] = runner
        logger.debug(f"Registered runner: {kind}")

    def get_runner(self, kind: str) -> Optional[ExperimentRunner]:
        return self.runners.get(kind)

    def list_runners(self) -> list[str]:
        return list(self.runners.keys())

    async def execute(self, kind: str, spec: ExperimentSpec) -> Dict[str, Any]:
        """
        Run one command.

        Returns:
            {
                "success": bool,
                "error": str | None,
                "exit_code": int,
                ...runner result fields
            }
        """
        runner = self.runners.get(kind)
        if runner is None:
            error_msg = f"Unknown command: {kind}. Available: {self.list_runners()}"
            logger.error(error_msg)
            return {"success": False, "error": error_msg, "exit_code": EXIT_USAGE}

        try:
            logger.info(f"Running {kind} -> {spec.out}")
            runner.validate(spec)
            result = await runner.run(spec)
            return {**result, "success": True, "error": None, "exit_code": EXIT_OK}

        except NumericalFailureError as e:
            logger.error(f"{kind} failed on Fourier slice {e.slice_index}: {e}", exc_info=True)
            return {"success": False, "error": str(e), "exit_code": EXIT_NUMERICAL}

        except Exception as e:
            code = exit_code_for(e)
            if code == EXIT_NUMERICAL:
                logger.error(f"Error running {kind}: {e}", exc_info=True)
            else:
                logger.error(f"{kind} failed: {e}")
            return {"success": False, "error": str(e), "exit_code": code}
