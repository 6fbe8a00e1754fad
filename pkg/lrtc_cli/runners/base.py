"""
Abstract base class for experiment runners.

Each runner implements one harness command (complete, p-sweep, ...). The
controller routes a command to the runner registered under its kind.
"""

import asyncio
import csv
import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ptnn import SolverConfig, gen_lowrank, gen_mask, observe, psnr, rse, solve

logger = logging.getLogger(__name__)

SUCCESS_PSNR_DB = 32.0


class UsageError(Exception):
    """Invalid command line or missing input; maps to exit code 1."""


@dataclass
class ExperimentSpec:
    """
    Everything one harness command needs.

    Sweep axes left as None are filled by the runner from its desk-scale or
    full-scale defaults.
    """

    kind: str
    out: Path
    dims: Optional[Tuple[int, int, int]] = None
    ranks: Optional[List[int]] = None
    srs: Optional[List[float]] = None
    ps: Optional[List[float]] = None
    sizes: Optional[List[int]] = None
    depths: Optional[List[int]] = None
    trials: int = 3
    base_seed: int = 0
    workers: int = 1
    full_scale: bool = False
    overrides: Dict[str, Any] = field(default_factory=dict)
    trace: Optional[Path] = None
    inputs: Dict[str, Any] = field(default_factory=dict)

    def solver_config(self, **extra) -> SolverConfig:
        return SolverConfig().replace(**{**self.overrides, **extra})


@dataclass(frozen=True)
class TrialJob:
    """One synthetic completion: generate, sample, solve, score."""

    dims: Tuple[int, int, int]
    rank: int
    sr: float
    seed: int
    cfg: SolverConfig


def run_trial(job: TrialJob) -> Dict[str, Any]:
    truth = gen_lowrank(job.dims, job.rank, job.seed)
    mask = gen_mask(job.dims, job.sr, job.seed)
    recovered, trace = solve(observe(truth, mask), mask, job.cfg)
    return {
        "rse": rse(truth, recovered),
        "psnr": psnr(truth, recovered),
        "iterations": trace.iterations,
        "converged": int(trace.converged),
    }


async def run_trials(
    jobs: Sequence[Any],
    workers: int = 1,
    fn: Callable[[Any], Dict[str, Any]] = run_trial,
) -> List[Dict[str, Any]]:
    """Run fn over jobs on a thread pool; results come back in job order."""
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [loop.run_in_executor(pool, fn, job) for job in jobs]
        return list(await asyncio.gather(*futures))


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value)) if math.isfinite(value) else ""
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Dict[str, Any]], append=False):
    """
    Write rows with a fixed header; non-finite floats become empty cells.

    Args:
        path: CSV file, parent directories are created
        columns: header, also the column order
        rows: dicts keyed by column; missing keys become empty cells
        append: add to an existing file, writing the header only if it is empty
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not append or not path.exists() or path.stat().st_size == 0
    with open(path, "a" if append else "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        if new_file:
            writer.writeheader()
        for row in rows:
            writer.writerow({c: _cell(row.get(c, "")) for c in columns})
    logger.info(f"Wrote {path}")


def summary_path(out: Path) -> Path:
    out = Path(out)
    return out.with_name(f"{out.stem}_summary{out.suffix or '.csv'}")


def mean_of(rows: Sequence[Dict[str, Any]], key: str) -> float:
    return float(np.mean([r[key] for r in rows]))


def std_of(rows: Sequence[Dict[str, Any]], key: str) -> float:
    return float(np.std([r[key] for r in rows]))


def sr_grid() -> List[float]:
    """0.05, 0.10, ..., 0.50."""
    return [round(0.05 * k, 2) for k in range(1, 11)]


class ExperimentRunner(ABC):
    """
    Abstract base class for experiment runners.

    A runner:
    - Declares the command kind it serves
    - Fills unset axes of a spec from its defaults
    - Runs the experiment and writes its CSV output

    Every run returns {"success": bool, "out": str, "rows": int, ...}.
    """

    @property
    @abstractmethod
    def kind(self) -> str:
        """
        Return the command identifier.

        Examples: "complete", "p-sweep", "phase-diagram"
        """
        pass

    @abstractmethod
    async def run(self, spec: ExperimentSpec) -> Dict[str, Any]:
        """
        Run the experiment described by spec.

        Returns:
            {
                "success": bool,
                "out": str,        # main CSV path
                "rows": int,       # rows written to it
            }
        """
        pass

    def validate(self, spec: ExperimentSpec) -> None:
        if spec.trials < 1:
            raise UsageError(f"trials must be >= 1, got {spec.trials}")
        if spec.workers < 1:
            raise UsageError(f"workers must be >= 1, got {spec.workers}")
        for name in ("ranks", "srs", "ps", "sizes", "depths"):
            axis = getattr(spec, name)
            if axis is not None and len(axis) == 0:
                raise UsageError(f"sweep axis '{name}' is empty")
