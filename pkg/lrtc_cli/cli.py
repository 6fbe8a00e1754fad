#!/usr/bin/env python3
"""
ptnn-lrtc command line.

Subcommands: complete, p-sweep, size-sweep, depth-sweep, phase-diagram, image,
metrics.
Every command writes CSV; logs go to stderr and stdout only lists the files
written.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical failure.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .controller import EXIT_USAGE, ExperimentController
from .runners import ExperimentSpec, UsageError, default_runners

logger = logging.getLogger(__name__)

COMMANDS = (
    "complete",
    "p-sweep",
    "size-sweep",
    "depth-sweep",
    "phase-diagram",
    "image",
    "metrics",
)


class HarnessArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting, so main owns the exit code."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _list_of(kind):
    def parse(text: str):
        try:
            values = [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a comma-separated {kind.__name__} list: {text}")
        if not values:
            raise argparse.ArgumentTypeError("empty list")
        return values

    parse.__name__ = f"{kind.__name__}_list"
    return parse


def _dims(text: str):
    values = _list_of(int)(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"dims need three integers, got {text}")
    return tuple(values)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    solver = common.add_argument_group("solver")
    solver.add_argument("--p", type=float, help="shrinkage exponent, p <= 1 (default -1)")
    solver.add_argument("--lambda", dest="lam", type=float,
                        help="regularization weight (default 1/sqrt(I3 max(I1, I2)))")
    solver.add_argument("--beta0", type=float)
    solver.add_argument("--beta-max", dest="beta_max", type=float)
    solver.add_argument("--eta", type=float)
    solver.add_argument("--gamma0", type=float)
    solver.add_argument("--rho", type=float)
    solver.add_argument("--max-iters", dest="max_iters", type=int)
    solver.add_argument("--tol", type=float)
    solver.add_argument("--no-normalize", dest="normalize", action="store_const", const=False,
                        help="iterate on the raw observation scale")

    run = common.add_argument_group("run")
    run.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    run.add_argument("--trials", type=int, default=3, help="trials per cell (default 3)")
    run.add_argument("--out", type=Path, help="output CSV (default <command>.csv)")
    run.add_argument("--trace", type=Path, help="per-iteration trace CSV (complete only)")
    run.add_argument("--paper-scale", "--full-scale", dest="full_scale", action="store_true",
                     help="use the full-size default grids")
    run.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    run.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    axes = common.add_argument_group("axes")
    axes.add_argument("--dims", type=_dims, help="I1,I2,I3")
    axes.add_argument("--rank", type=int, help="tubal rank of generated tensors")
    axes.add_argument("--sr", type=float, help="sampling rate")
    axes.add_argument("--p-values", dest="ps", type=_list_of(float))
    axes.add_argument("--ranks", type=_list_of(int))
    axes.add_argument("--srs", type=_list_of(float))
    axes.add_argument("--sizes", type=_list_of(int))
    axes.add_argument("--depths", type=_list_of(int))
    return common


def build_parser() -> HarnessArgumentParser:
    parser = HarnessArgumentParser(prog="ptnn-lrtc", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=HarnessArgumentParser)
    common = _common_flags()

    complete = sub.add_parser("complete", parents=[common], help="complete one tensor or image")
    complete.add_argument("--input", type=Path, required=True, help=".tns tensor or image file")
    complete.add_argument("--mask", type=Path, help="mask file; otherwise --sr with --seed")
    complete.add_argument("--truth", type=Path, help="ground truth (default: the input)")

    sub.add_parser("p-sweep", parents=[common], help="recovery vs shrinkage exponent p")
    sub.add_parser("size-sweep", parents=[common], help="recovery vs n for n x n x n tensors")
    sub.add_parser("depth-sweep", parents=[common], help="recovery vs I3")
    sub.add_parser("phase-diagram", parents=[common], help="success rate over rank x sr")

    image = sub.add_parser("image", parents=[common], help="inpainting of RGB images over sr x p")
    image.add_argument("--images", type=_list_of(Path), required=True,
                       help="comma-separated image files")

    metrics = sub.add_parser("metrics", parents=[common], help="rse/psnr/ssim of two files")
    metrics.add_argument("--truth", type=Path, required=True)
    metrics.add_argument("--estimate", type=Path, required=True)
    return parser


SOLVER_FIELDS = ("p", "lam", "beta0", "beta_max", "eta", "gamma0", "rho", "max_iters", "tol",
                 "normalize")


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """Turn parsed arguments into an ExperimentSpec; unset axes stay None."""
    srs = args.srs or ([args.sr] if args.sr is not None else None)
    ranks = args.ranks or ([args.rank] if args.rank is not None else None)
    inputs = {
        key: getattr(args, key)
        for key in ("input", "mask", "truth", "estimate", "images")
        if getattr(args, key, None) is not None
    }
    if args.sr is not None:
        inputs["sr"] = args.sr
    return ExperimentSpec(
        kind=args.command,
        out=args.out or Path(f"{args.command}.csv"),
        dims=args.dims,
        ranks=ranks,
        srs=srs,
        ps=args.ps,
        sizes=args.sizes,
        depths=args.depths,
        trials=args.trials,
        base_seed=args.seed,
        workers=args.workers,
        full_scale=args.full_scale,
        overrides={f: getattr(args, f) for f in SOLVER_FIELDS if getattr(args, f) is not None},
        trace=args.trace,
        inputs=inputs,
    )


async def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE

    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)
    controller = ExperimentController()
    for runner in default_runners():
        controller.register_runner(runner)

    result = await controller.execute(args.command, spec_from_args(args))
    if result["success"]:
        for key in ("out", "summary", "recovered"):
            if result.get(key):
                print(result[key])
    else:
        print(f"error: {result['error']}", file=sys.stderr)
    return result["exit_code"]


def main(argv: Optional[List[str]] = None) -> int:
    """
    Console entry point.

    Args:
        argv: arguments without the program name; sys.argv[1:] when None

    Returns:
        Exit code: 0 success, 1 usage, 2 I/O or format, 3 numerical failure.
    """
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s [%(levelname)s] %(message)s",
        stream=sys.stderr,
    )
    return asyncio.run(run(argv))


if __name__ == "__main__":
    sys.exit(main())
