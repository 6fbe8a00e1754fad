"""
Recovery-quality metrics: RSE, PSNR and SSIM.

SSIM settings are frozen: 8 x 8 non-overlapping windows (incomplete border
windows dropped; an image narrower than 8 pixels uses one window across that
axis), c1 = (0.01 L)^2, c2 = (0.03 L)^2 with L = 1, population statistics.
RGB tensors are reduced to greyscale with luminance weights 0.299/0.587/0.114.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from skimage.util import view_as_blocks

from .errors import DimensionMismatchError, MetricError
from .talg import Tensor3, as_tensor3

PSNR_CAP_DB = 300.0
SSIM_WINDOW = 8
SSIM_C1 = (0.01 * 1.0) ** 2
SSIM_C2 = (0.03 * 1.0) ** 2
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class MetricReport:
    rse: float
    psnr: float
    ssim: Optional[float] = None

    def as_row(self) -> dict:
        return {"rse": self.rse, "psnr": self.psnr, "ssim": "" if self.ssim is None else self.ssim}


def _pair(x, xstar):
    x = as_tensor3(x, "x")
    xstar = as_tensor3(xstar, "xstar")
    if x.shape != xstar.shape:
        raise DimensionMismatchError(f"shapes differ: {x.shape} vs {xstar.shape}")
    return x, xstar


def rse(x: Tensor3, xstar: Tensor3) -> float:
    """Relative square error ||xstar - x||_F / ||x||_F against ground truth x."""
    x, xstar = _pair(x, xstar)
    ref = np.linalg.norm(x)
    if ref == 0:
        raise MetricError("RSE is undefined for a zero ground truth")
    return float(np.linalg.norm(xstar - x) / ref)


def psnr(x: Tensor3, xstar: Tensor3) -> float:
    """Peak signal-to-noise ratio in dB, peak = max |x|; capped at PSNR_CAP_DB."""
    x, xstar = _pair(x, xstar)
    peak = float(np.max(np.abs(x)))
    if peak == 0:
        raise MetricError("PSNR is undefined for a zero ground truth")
    mse = float(np.sum((xstar - x) ** 2)) / x.size
    if mse == 0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(peak**2 / mse), PSNR_CAP_DB)


def rgb_to_grey(x: Tensor3) -> NDArray[np.float64]:
    x = as_tensor3(x)
    if x.shape[2] != 3:
        raise DimensionMismatchError(f"RGB conversion needs 3 slices, got {x.shape[2]}")
    r, g, b = LUMA_WEIGHTS
    return r * x[:, :, 0] + g * x[:, :, 1] + b * x[:, :, 2]


def _windows(img: np.ndarray) -> np.ndarray:
    """Split into (n, wh, ww) non-overlapping windows."""
    h, w = img.shape
    wh = min(SSIM_WINDOW, h)
    ww = min(SSIM_WINDOW, w)
    cropped = np.ascontiguousarray(img[: h - h % wh, : w - w % ww])
    return view_as_blocks(cropped, (wh, ww)).reshape(-1, wh, ww)


def _cov(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    da = a - a.mean(axis=(1, 2), keepdims=True)
    db = b - b.mean(axis=(1, 2), keepdims=True)
    return (da * db).mean(axis=(1, 2))


def ssim(img: NDArray[np.float64], imgstar: NDArray[np.float64]) -> float:
    """Mean structural similarity of two greyscale images with values in [0, 1]."""
    img = np.asarray(img, dtype=np.float64)
    imgstar = np.asarray(imgstar, dtype=np.float64)
    if img.ndim != 2 or img.shape != imgstar.shape:
        raise DimensionMismatchError(
            f"SSIM needs equal 2-D shapes, got {img.shape}, {imgstar.shape}"
        )
    a = _windows(img)
    b = _windows(imgstar)
    mu_a = a.mean(axis=(1, 2))
    mu_b = b.mean(axis=(1, 2))
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * _cov(a, b) + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (_cov(a, a) + _cov(b, b) + SSIM_C2)
    return float(np.mean(num / den))


def recovery_error(x: Tensor3, xstar: Tensor3) -> float:
    """Normalized recovery error ||xstar - x||_F^2 / (I1 I2 I3)."""
    x, xstar = _pair(x, xstar)
    return float(np.sum((xstar - x) ** 2)) / x.size


def evaluate(x: Tensor3, xstar: Tensor3) -> MetricReport:
    """
    RSE and PSNR for any tensor; SSIM too when the tensor is an RGB image.

    Args:
        x: ground truth
        xstar: estimate, same dims as x

    Returns:
        MetricReport; ssim is None unless I3 == 3.

    Raises:
        MetricError: x is all zeros
    """
    x, xstar = _pair(x, xstar)
    score = ssim(rgb_to_grey(x), rgb_to_grey(xstar)) if x.shape[2] == 3 else None
    return MetricReport(rse=rse(x, xstar), psnr=psnr(x, xstar), ssim=score)
