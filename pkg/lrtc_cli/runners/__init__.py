"""
Experiment runners for the harness.

Each runner implements one command (complete, a sweep, the phase diagram,
image inpainting or a metric report) behind the ExperimentRunner interface.
"""

from .base import ExperimentRunner, ExperimentSpec, UsageError
from .complete import CompleteRunner
from .image import ImageSweepRunner
from .metrics import MetricsRunner
from .phase import PhaseDiagramRunner
from .sweeps import DepthSweepRunner, PSweepRunner, SizeSweepRunner

__all__ = [
    "ExperimentRunner",
    "ExperimentSpec",
    "UsageError",
    "CompleteRunner",
    "ImageSweepRunner",
    "MetricsRunner",
    "PhaseDiagramRunner",
    "DepthSweepRunner",
    "PSweepRunner",
    "SizeSweepRunner",
]


def default_runners() -> list[ExperimentRunner]:
    return [
        CompleteRunner(),
        PSweepRunner(),
        SizeSweepRunner(),
        DepthSweepRunner(),
        PhaseDiagramRunner(),
        ImageSweepRunner(),
        MetricsRunner(),
    ]
