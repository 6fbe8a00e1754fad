"""
Image inpainting sweep: each RGB image sampled at several rates, completed
with each shrinkage exponent, scored by RSE, PSNR and SSIM.

Masks are drawn from seed base_seed + trial, so p = 1 and p < 1 see the same
missing pixels within a trial.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple

from ptnn import SolverConfig, evaluate, gen_mask, image_to_tensor, observe, solve

from .base import ExperimentSpec, UsageError, mean_of, std_of
from .sweeps import GridSweepRunner

logger = logging.getLogger(__name__)

DEFAULT_SRS = (0.1, 0.2, 0.3, 0.4)
DEFAULT_PS = (-1.0, 1.0)


@dataclass(frozen=True)
class ImageJob:
    """One masked image completion."""

    path: Path
    sr: float
    seed: int
    cfg: SolverConfig


def run_image_trial(job: ImageJob) -> Dict[str, Any]:
    """
    Mask, complete and score one image.

    Returns:
        {"rse", "psnr", "ssim", "iterations", "converged"} for the trial row
    """
    truth = image_to_tensor(job.path)
    mask = gen_mask(truth.shape, job.sr, job.seed)
    recovered, trace = solve(observe(truth, mask), mask, job.cfg)
    report = evaluate(truth, recovered)
    return {
        **report.as_row(),
        "iterations": trace.iterations,
        "converged": int(trace.converged),
    }


class ImageSweepRunner(GridSweepRunner):
    """
    Inpainting over images x sampling rates x p.

    spec.inputs keys:
        images: list of image paths (any format Pillow reads, loaded as RGB)
    """

    cell_columns = ("image", "sr", "p")
    trial_columns = ["trial", "seed", "rse", "psnr", "ssim", "iterations", "converged"]
    summary_columns = ["trials", "mean_rse", "std_rse", "mean_psnr", "mean_ssim"]

    @property
    def kind(self) -> str:
        return "image"

    def validate(self, spec: ExperimentSpec) -> None:
        super().validate(spec)
        images = spec.inputs.get("images")
        if not images:
            raise UsageError("image needs --images")
        for path in images:
            if not Path(path).is_file():
                raise UsageError(f"image file not found: {path}")
        for sr in spec.srs or ():
            if not 0 < sr <= 1:
                raise UsageError(f"sampling rate must lie in (0, 1], got {sr}")

    def cells(self, spec: ExperimentSpec) -> List[Tuple[Dict[str, Any], ImageJob]]:
        out = []
        for path in spec.inputs["images"]:
            for sr in spec.srs or DEFAULT_SRS:
                for p in spec.ps or DEFAULT_PS:
                    cfg = spec.solver_config(p=p)
                    values = {"image": Path(path).name, "sr": sr, "p": p}
                    out.append((values, ImageJob(Path(path), sr, 0, cfg)))
        return out

    def run_job(self, job: ImageJob) -> Dict[str, Any]:
        logger.debug(f"Inpainting {job.path.name} at sr={job.sr} p={job.cfg.p} seed={job.seed}")
        return run_image_trial(job)

    def summarize(self, chunk: List[Dict[str, Any]]) -> Dict[str, Any]:
        return {
            "mean_rse": mean_of(chunk, "rse"),
            "std_rse": std_of(chunk, "rse"),
            "mean_psnr": mean_of(chunk, "psnr"),
            "mean_ssim": mean_of(chunk, "ssim"),
        }
