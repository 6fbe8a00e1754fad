"""
Single completion run: tensor file or image in, recovered tensor and one CSV row out.
"""

import asyncio
import logging
import time
from pathlib import Path
from typing import Any, Dict

from ptnn import (
    SamplingMask,
    evaluate,
    gen_mask,
    image_to_tensor,
    observe,
    read_mask,
    read_tensor,
    solve,
    tensor_to_image,
    write_tensor,
)
from ptnn.errors import DimensionMismatchError
from ptnn.metrics import recovery_error

from .base import ExperimentRunner, ExperimentSpec, UsageError, write_csv

logger = logging.getLogger(__name__)

TENSOR_SUFFIX = ".tns"

COLUMNS = [
    "input",
    "mask",
    "sr",
    "seed",
    "p",
    "lambda",
    "scale",
    "lambda_effective",
    "beta0",
    "beta_max",
    "eta",
    "gamma0",
    "rho",
    "max_iters",
    "tol",
    "iterations",
    "converged",
    "objective",
    "wall_time_s",
    "rse",
    "psnr",
    "ssim",
    "recovery_error",
]

TRACE_COLUMNS = [
    "iter",
    "f_value",
    "f_prev",
    "f_momentum",
    "step_norm",
    "rel_change",
    "residual",
    "gamma",
    "beta",
    "momentum_accepted",
    "f_raw",
]


def is_tensor_file(path: Path) -> bool:
    return Path(path).suffix.lower() == TENSOR_SUFFIX


def load_input(path: Path):
    """Read a .tns tensor or any Pillow-readable image as a tensor."""
    return read_tensor(path) if is_tensor_file(path) else image_to_tensor(path)


class CompleteRunner(ExperimentRunner):
    """
    Complete one tensor.

    spec.inputs keys:
        input: tensor (.tns) or image path; also the ground truth unless
               truth is given
        mask:  mask file path, or
        sr:    sampling rate for a generated mask seeded with spec.base_seed
        truth: optional ground-truth tensor path for the metric columns
    """

    @property
    def kind(self) -> str:
        return "complete"

    def validate(self, spec: ExperimentSpec) -> None:
        super().validate(spec)
        inputs = spec.inputs
        if not inputs.get("input"):
            raise UsageError("complete needs an input tensor or image")
        for key in ("input", "mask", "truth"):
            path = inputs.get(key)
            if path is not None and not Path(path).is_file():
                raise UsageError(f"{key} file not found: {path}")
        if inputs.get("mask") is None and inputs.get("sr") is None:
            raise UsageError("complete needs --mask or --sr")

    async def run(self, spec: ExperimentSpec) -> Dict[str, Any]:
        return await asyncio.to_thread(self._run, spec)

    def _run(self, spec: ExperimentSpec) -> Dict[str, Any]:
        inputs = spec.inputs
        src = Path(inputs["input"])
        x = load_input(src)
        truth = load_input(inputs["truth"]) if inputs.get("truth") else x
        if truth.shape != x.shape:
            raise DimensionMismatchError(f"truth {truth.shape} does not match input {x.shape}")

        if inputs.get("mask") is not None:
            mask: SamplingMask = read_mask(inputs["mask"])
            if mask.dims != tuple(x.shape):
                raise DimensionMismatchError(f"mask {mask.dims} does not match input {x.shape}")
        else:
            mask = gen_mask(x.shape, inputs["sr"], spec.base_seed)

        cfg = spec.solver_config()
        started = time.perf_counter()
        recovered, trace = solve(observe(x, mask), mask, cfg)
        elapsed = time.perf_counter() - started

        out = Path(spec.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        recovered_path = out.with_name(f"{out.stem}_recovered{TENSOR_SUFFIX}")
        write_tensor(recovered_path, recovered)
        if not is_tensor_file(src):
            tensor_to_image(recovered, out.with_name(f"{out.stem}_recovered.ppm"))

        report = evaluate(truth, recovered)
        row = {
            "input": str(src),
            "mask": str(inputs["mask"]) if inputs.get("mask") else "",
            "sr": mask.sr,
            "seed": "" if inputs.get("mask") else spec.base_seed,
            "p": cfg.p,
            "lambda": trace.lam,
            "scale": trace.scale,
            "lambda_effective": trace.lam_effective,
            "beta0": cfg.beta0,
            "beta_max": cfg.beta_max,
            "eta": cfg.eta,
            "gamma0": cfg.gamma0,
            "rho": cfg.rho,
            "max_iters": cfg.max_iters,
            "tol": cfg.tol,
            "iterations": trace.iterations,
            "converged": int(trace.converged),
            "objective": "" if trace.final_objective is None else trace.final_objective,
            "wall_time_s": elapsed,
            **report.as_row(),
            "recovery_error": recovery_error(truth, recovered),
        }
        write_csv(out, COLUMNS, [row])
        if spec.trace is not None:
            write_csv(spec.trace, TRACE_COLUMNS, trace.to_rows())

        logger.info(
            f"Recovered {x.shape}: rse={report.rse:.4g} psnr={report.psnr:.2f} dB "
            f"in {trace.iterations} iterations"
        )
        return {"out": str(out), "rows": 1, "recovered": str(recovered_path), "row": row}
