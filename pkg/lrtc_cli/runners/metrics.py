"""Metric report for a (truth, estimate) pair of tensor or image files."""

import logging
from pathlib import Path
from typing import Any, Dict

from ptnn import evaluate

from .base import ExperimentRunner, ExperimentSpec, UsageError, write_csv
from .complete import load_input

logger = logging.getLogger(__name__)

COLUMNS = ["truth", "estimate", "rse", "psnr", "ssim"]


class MetricsRunner(ExperimentRunner):
    """Appends one rse/psnr/ssim row; ssim stays empty unless I3 == 3."""

    @property
    def kind(self) -> str:
        return "metrics"

    def validate(self, spec: ExperimentSpec) -> None:
        super().validate(spec)
        for key in ("truth", "estimate"):
            path = spec.inputs.get(key)
            if not path:
                raise UsageError(f"metrics needs a {key} file")
            if not Path(path).is_file():
                raise UsageError(f"{key} file not found: {path}")

    async def run(self, spec: ExperimentSpec) -> Dict[str, Any]:
        truth_path = Path(spec.inputs["truth"])
        estimate_path = Path(spec.inputs["estimate"])
        report = evaluate(load_input(truth_path), load_input(estimate_path))
        row = {"truth": str(truth_path), "estimate": str(estimate_path), **report.as_row()}
        write_csv(spec.out, COLUMNS, [row], append=True)
        logger.info(f"rse={report.rse:.6g} psnr={report.psnr:.4g} ssim={row['ssim']}")
        return {"out": str(spec.out), "rows": 1, "row": row}
