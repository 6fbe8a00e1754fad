"""
Synthetic parameter sweeps: shrinkage exponent p, tensor size n and depth I3.

Each trial draws a fresh low-rank tensor and mask from seed base_seed + trial,
so every grid cell sees the same trial seeds. Rows are written in grid order
whatever the worker count; the per-cell means go to <out stem>_summary.csv.
"""

import dataclasses
import logging
from abc import abstractmethod
from typing import Any, Dict, List, Tuple

import numpy as np

from .base import (
    ExperimentRunner,
    ExperimentSpec,
    TrialJob,
    mean_of,
    run_trial,
    run_trials,
    sr_grid,
    std_of,
    summary_path,
    write_csv,
)

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = ["trial", "seed", "rse", "psnr", "iterations", "converged"]
SUMMARY_COLUMNS = ["trials", "mean_rse", "std_rse", "mean_psnr"]


def p_grid() -> List[float]:
    """-2.0, -1.9, ..., 0.9 (30 values)."""
    return [round(v, 1) for v in np.linspace(-2.0, 0.9, 30)]


class GridSweepRunner(ExperimentRunner):
    """
    Sweep over a grid of cells, several trials per cell.

    Subclasses name the cell columns and list the cells of a spec, each
    with a job template whose seed is replaced per trial.
    """

    cell_columns: Tuple[str, ...] = ()
    trial_columns: List[str] = TRIAL_COLUMNS
    summary_columns: List[str] = SUMMARY_COLUMNS

    @abstractmethod
    def cells(self, spec: ExperimentSpec) -> List[Tuple[Dict[str, Any], Any]]:
        """One (cell values, job template with seed 0) pair per grid cell."""

    def run_job(self, job: Any) -> Dict[str, Any]:
        return run_trial(job)

    def summarize(self, chunk: List[Dict[str, Any]]) -> Dict[str, Any]:
        return {
            "mean_rse": mean_of(chunk, "rse"),
            "std_rse": std_of(chunk, "rse"),
            "mean_psnr": mean_of(chunk, "psnr"),
        }

    async def run(self, spec: ExperimentSpec) -> Dict[str, Any]:
        """
        Run every cell for spec.trials trials and write both CSVs.

        Returns:
            {
                "out": str,      # per-trial CSV
                "summary": str,  # per-cell means
                "rows": int,
                "cells": list,   # the summary rows
            }
        """
        cells = self.cells(spec)
        jobs = []
        for _, template in cells:
            for trial in range(spec.trials):
                jobs.append(dataclasses.replace(template, seed=spec.base_seed + trial))
        logger.info(
            f"{self.kind}: {len(cells)} cells x {spec.trials} trials on {spec.workers} worker(s)"
        )
        results = await run_trials(jobs, spec.workers, self.run_job)

        rows, summary = [], []
        for c, (values, _) in enumerate(cells):
            chunk = results[c * spec.trials : (c + 1) * spec.trials]
            for trial, result in enumerate(chunk):
                rows.append({**values, "trial": trial, "seed": spec.base_seed + trial, **result})
            summary.append({**values, "trials": spec.trials, **self.summarize(chunk)})
            logger.debug(f"{values}: mean rse {summary[-1]['mean_rse']:.4g}")

        columns = list(self.cell_columns)
        write_csv(spec.out, columns + self.trial_columns, rows)
        write_csv(summary_path(spec.out), columns + self.summary_columns, summary)
        return {
            "out": str(spec.out),
            "summary": str(summary_path(spec.out)),
            "rows": len(rows),
            "cells": summary,
        }


class PSweepRunner(GridSweepRunner):
    """Recovery quality against the shrinkage exponent p on one instance shape."""

    DESK_DIMS = (50, 50, 10)
    DESK_RANK = 3
    FULL_DIMS = (100, 100, 20)
    FULL_RANK = 5
    SR = 0.2

    cell_columns = ("p", "i1", "i2", "i3", "rank", "sr")

    @property
    def kind(self) -> str:
        return "p-sweep"

    def cells(self, spec: ExperimentSpec):
        dims = spec.dims or (self.FULL_DIMS if spec.full_scale else self.DESK_DIMS)
        rank = spec.ranks[0] if spec.ranks else (
            self.FULL_RANK if spec.full_scale else self.DESK_RANK
        )
        sr = spec.srs[0] if spec.srs else self.SR
        out = []
        for p in spec.ps or p_grid():
            cfg = spec.solver_config(p=p)
            values = {"p": p, "i1": dims[0], "i2": dims[1], "i3": dims[2], "rank": rank, "sr": sr}
            out.append((values, TrialJob(tuple(dims), rank, sr, 0, cfg)))
        return out


class SizeSweepRunner(GridSweepRunner):
    """n x n x n tensors of fixed tubal rank over the sampling-rate grid."""

    DESK_SIZES = (25, 50, 75, 100)
    DESK_RANK = 3
    FULL_SIZES = (50, 100, 150, 200)
    FULL_RANK = 5

    cell_columns = ("n", "rank", "sr")

    @property
    def kind(self) -> str:
        return "size-sweep"

    def cells(self, spec: ExperimentSpec):
        sizes = spec.sizes or (self.FULL_SIZES if spec.full_scale else self.DESK_SIZES)
        rank = spec.ranks[0] if spec.ranks else (
            self.FULL_RANK if spec.full_scale else self.DESK_RANK
        )
        cfg = spec.solver_config()
        return [
            ({"n": n, "rank": rank, "sr": sr}, TrialJob((n, n, n), rank, sr, 0, cfg))
            for n in sizes
            for sr in spec.srs or sr_grid()
        ]


class DepthSweepRunner(GridSweepRunner):
    """I x I x I3 tensors of fixed tubal rank, varying I3, over the sampling-rate grid."""

    DESK_SIDE = 50
    DESK_DEPTHS = (10, 20, 30, 40, 50)
    DESK_RANK = 3
    FULL_SIDE = 100
    FULL_DEPTHS = (20, 40, 60, 80, 100)
    FULL_RANK = 5

    cell_columns = ("i", "i3", "rank", "sr")

    @property
    def kind(self) -> str:
        return "depth-sweep"

    def cells(self, spec: ExperimentSpec):
        side = spec.dims[0] if spec.dims else (
            self.FULL_SIDE if spec.full_scale else self.DESK_SIDE
        )
        depths = spec.depths or (self.FULL_DEPTHS if spec.full_scale else self.DESK_DEPTHS)
        rank = spec.ranks[0] if spec.ranks else (
            self.FULL_RANK if spec.full_scale else self.DESK_RANK
        )
        cfg = spec.solver_config()
        return [
            (
                {"i": side, "i3": i3, "rank": rank, "sr": sr},
                TrialJob((side, side, i3), rank, sr, 0, cfg),
            )
            for i3 in depths
            for sr in spec.srs or sr_grid()
        ]
