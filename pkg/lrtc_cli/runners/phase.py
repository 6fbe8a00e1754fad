"""
Phase diagram over tubal rank x sampling rate.

A trial succeeds when its PSNR is strictly above SUCCESS_PSNR_DB. One row per
cell records the fraction of successful trials.
"""

import logging
from typing import Any, Dict

from .base import (
    SUCCESS_PSNR_DB,
    ExperimentRunner,
    ExperimentSpec,
    TrialJob,
    mean_of,
    run_trials,
    sr_grid,
    write_csv,
)

logger = logging.getLogger(__name__)

COLUMNS = ["rank", "sr", "trials", "successes", "success_fraction", "mean_psnr", "mean_rse"]


class PhaseDiagramRunner(ExperimentRunner):
    """Success fraction per (rank, sr) cell on one instance shape."""

    DESK_DIMS = (50, 50, 10)
    DESK_RANKS = (2, 5, 10, 20, 30, 40)
    DESK_SRS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
    FULL_DIMS = (100, 100, 20)
    FULL_RANKS = tuple(range(10, 41, 5))

    @property
    def kind(self) -> str:
        return "phase-diagram"

    async def run(self, spec: ExperimentSpec) -> Dict[str, Any]:
        """
        Run every (rank, sr) cell for spec.trials trials.

        Returns:
            {
                "out": str,     # the phase CSV
                "rows": int,    # one per cell, ranks outer, rates inner
                "cells": list,  # the rows as written
            }
        """
        dims = tuple(spec.dims or (self.FULL_DIMS if spec.full_scale else self.DESK_DIMS))
        ranks = spec.ranks or (self.FULL_RANKS if spec.full_scale else self.DESK_RANKS)
        srs = spec.srs or (sr_grid() if spec.full_scale else self.DESK_SRS)
        cfg = spec.solver_config()

        cells = [(r, sr) for r in ranks for sr in srs]
        jobs = [
            TrialJob(dims, r, sr, spec.base_seed + trial, cfg)
            for r, sr in cells
            for trial in range(spec.trials)
        ]
        logger.info(f"phase-diagram on {dims}: {len(ranks)} ranks x {len(srs)} rates")
        results = await run_trials(jobs, spec.workers)

        rows = []
        for c, (r, sr) in enumerate(cells):
            chunk = results[c * spec.trials : (c + 1) * spec.trials]
            successes = sum(1 for res in chunk if res["psnr"] > SUCCESS_PSNR_DB)
            rows.append(
                {
                    "rank": r,
                    "sr": sr,
                    "trials": spec.trials,
                    "successes": successes,
                    "success_fraction": successes / spec.trials,
                    "mean_psnr": mean_of(chunk, "psnr"),
                    "mean_rse": mean_of(chunk, "rse"),
                }
            )
        write_csv(spec.out, COLUMNS, rows)
        return {"out": str(spec.out), "rows": len(rows), "cells": rows}
