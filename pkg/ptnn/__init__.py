"""
Tensor p-Shrinkage Nuclear Norm Library

Low-rank tensor completion under the t-product: tensor algebra and t-SVD,
p-shrinkage thresholding, and a momentum-accelerated ADMM solver.

Usage:
    from ptnn import SolverConfig, gen_lowrank, gen_mask, observe, solve, rse

    truth = gen_lowrank((40, 40, 10), r=3, seed=0)
    mask = gen_mask(truth.shape, sr=0.5, seed=0)
    recovered, trace = solve(observe(truth, mask), mask, SolverConfig(p=-1))
    print(rse(truth, recovered), trace.iterations)
"""

from .data import (
    SamplingMask,
    gen_lowrank,
    gen_mask,
    image_to_tensor,
    observe,
    project,
    project_complement,
    read_mask,
    read_tensor,
    tensor_to_image,
    write_mask,
    write_tensor,
)
from .errors import (
    DimensionMismatchError,
    DomainError,
    FormatError,
    MetricError,
    NumericalFailureError,
    PtnnError,
)
from .metrics import MetricReport, evaluate, psnr, rse, ssim
from .shrink import ShrinkParams, p_shrink, p_shrink_array, p_shrink_spectrum, zero_crossing
from .solver import SolverConfig, SolverTrace, objective, solve
from .talg import TSvd, tgsvt, tprod, tsvd, tubal_rank

__version__ = "0.1.0"
__all__ = [
    "SamplingMask",
    "gen_lowrank",
    "gen_mask",
    "image_to_tensor",
    "observe",
    "project",
    "project_complement",
    "read_mask",
    "read_tensor",
    "tensor_to_image",
    "write_mask",
    "write_tensor",
    "DimensionMismatchError",
    "DomainError",
    "FormatError",
    "MetricError",
    "NumericalFailureError",
    "PtnnError",
    "MetricReport",
    "evaluate",
    "psnr",
    "rse",
    "ssim",
    "ShrinkParams",
    "p_shrink",
    "p_shrink_array",
    "p_shrink_spectrum",
    "zero_crossing",
    "SolverConfig",
    "SolverTrace",
    "objective",
    "solve",
    "TSvd",
    "tgsvt",
    "tprod",
    "tsvd",
    "tubal_rank",
]
