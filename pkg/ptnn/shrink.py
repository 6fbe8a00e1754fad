"""
Scalar and spectral p-shrinkage thresholding.

The operator is

    s_p^mu(x) = sign(x) * max(|x| - mu * |x|**(p - 1), 0)

It is the soft threshold at p = 1 and tends to hard thresholding (no penalty
for large inputs) as p -> -inf. s_p^mu(0) = 0 for every p.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ShrinkParams:
    """Exponent p (<= 1) and weight mu (> 0) of the p-shrinkage operator."""

    p: float
    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.mu)):
            raise DomainError(f"p and mu must be finite, got p={self.p}, mu={self.mu}")
        if self.p > 1:
            raise DomainError(f"p must be <= 1, got {self.p}")
        if self.mu <= 0:
            raise DomainError(f"mu must be > 0, got {self.mu}")


def _shrink_magnitude(a: np.ndarray, params: ShrinkParams) -> np.ndarray:
    # |x|**(p-1) is inf at 0 for p < 1 and may overflow for very negative p;
    # both push the bracket to -inf, which the max with 0 absorbs.
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        penalty = params.mu * np.power(a, params.p - 1.0)
        out = np.maximum(a - penalty, 0.0)
    return np.where(a == 0, 0.0, out)


def p_shrink_array(x: np.ndarray, params: ShrinkParams) -> np.ndarray:
    """Elementwise signed p-shrinkage of an arbitrary real array."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * _shrink_magnitude(np.abs(x), params)


def p_shrink(x: float, params: ShrinkParams) -> float:
    """Apply the p-shrinkage operator to one real number."""
    if x == 0:
        return 0.0
    # + 0.0 folds a signed zero into 0.0
    return float(p_shrink_array(np.array([x]), params)[0]) + 0.0


def p_shrink_spectrum(sbar: np.ndarray, params: ShrinkParams) -> np.ndarray:
    """
    Shrink an array of singular values.

    Args:
        sbar: nonnegative singular values, any shape
        params: shrinkage parameters

    Returns:
        Array of the same shape with 0 <= out <= sbar elementwise.
    """
    sbar = np.asarray(sbar, dtype=np.float64)
    if np.any(sbar < 0):
        raise DomainError("singular values must be nonnegative")
    return _shrink_magnitude(sbar, params)


def zero_crossing(params: ShrinkParams) -> float:
    """Largest |x| mapped to zero: mu**(1 / (2 - p))."""
    return params.mu ** (1.0 / (2.0 - params.p))
