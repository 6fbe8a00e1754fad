"""
Third-order tensor algebra under the t-product.

Tensors are dense float64 numpy arrays of shape (I1, I2, I3). The mode-3 DFT
turns the t-product into independent products of frontal slices, so the
transforms, the t-SVD, the norms and the proximal step all work on the
Fourier-domain slices X̄^(k).

For a real tensor the Fourier slices are conjugate symmetric
(X̄^(I3-k) = conj(X̄^(k))), so only the first I3 // 2 + 1 slices are
decomposed (numpy's rfft layout) and the rest are mirrored.

Every function here is pure: inputs are never mutated, so the module is safe
for concurrent read-only use.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import DimensionMismatchError, DomainError, NumericalFailureError
from .shrink import ShrinkParams, p_shrink_spectrum

logger = logging.getLogger(__name__)

Tensor3 = NDArray[np.float64]
FTensor3 = NDArray[np.complex128]

DEFAULT_RANK_TOL = 1e-8


def as_tensor3(x, name: str = "x") -> Tensor3:
    """Validate and return x as a finite float64 array of shape (I1, I2, I3)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise DimensionMismatchError(f"{name} must be third-order, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise DimensionMismatchError(f"{name} has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains NaN or Inf entries")
    return arr


# ---------------------------------------------------------------------------
# Transforms and structural operators
# ---------------------------------------------------------------------------


def dft_mode3(x: Tensor3) -> FTensor3:
    """Unnormalized forward DFT of every tube x(i1, i2, :)."""
    return np.fft.fft(as_tensor3(x), axis=2)


def idft_mode3(xbar: FTensor3) -> Tensor3:
    """Inverse of dft_mode3 (divides by I3); returns the real part."""
    xbar = np.asarray(xbar)
    if xbar.ndim != 3:
        raise DimensionMismatchError(f"expected a third-order array, got shape {xbar.shape}")
    return np.fft.ifft(xbar, axis=2).real


def unfold(x: Tensor3) -> NDArray[np.float64]:
    """Stack the frontal slices vertically: (I1 * I3) x I2."""
    x = as_tensor3(x)
    i1, i2, i3 = x.shape
    return x.transpose(2, 0, 1).reshape(i3 * i1, i2)


def fold(m: NDArray[np.float64], dims: Tuple[int, int, int]) -> Tensor3:
    """Inverse of unfold."""
    i1, i2, i3 = dims
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (i1 * i3, i2):
        raise DimensionMismatchError(f"cannot fold {m.shape} into {dims}")
    return m.reshape(i3, i1, i2).transpose(1, 2, 0).copy()


def bcirc(x: Tensor3) -> NDArray[np.float64]:
    """
    Block circulant matrix of x, (I1 * I3) x (I2 * I3).

    Block (r, c) holds frontal slice (r - c) mod I3. Dense and quadratic in
    I3; intended as a test oracle.
    """
    x = as_tensor3(x)
    i1, i2, i3 = x.shape
    out = np.empty((i1 * i3, i2 * i3), dtype=np.float64)
    for r in range(i3):
        for c in range(i3):
            out[r * i1 : (r + 1) * i1, c * i2 : (c + 1) * i2] = x[:, :, (r - c) % i3]
    return out


def tprod(a: Tensor3, b: Tensor3) -> Tensor3:
    """t-product a * b, computed slicewise in the Fourier domain."""
    a = as_tensor3(a, "a")
    b = as_tensor3(b, "b")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimensionMismatchError(f"cannot t-multiply {a.shape} by {b.shape}")
    i3 = a.shape[2]
    ah = np.fft.rfft(a, axis=2)
    bh = np.fft.rfft(b, axis=2)
    ch = np.einsum("ijk,jlk->ilk", ah, bh)
    return np.fft.irfft(ch, n=i3, axis=2)


def transpose(x: Tensor3) -> Tensor3:
    """t-transpose: slice 1 transposed, slices 2..I3 transposed in reverse order."""
    x = as_tensor3(x)
    i3 = x.shape[2]
    order = (-np.arange(i3)) % i3
    return x[:, :, order].transpose(1, 0, 2).copy()


def identity_tensor(n: int, i3: int) -> Tensor3:
    """Identity for the t-product: eye(n) in the first frontal slice, zeros elsewhere."""
    if n < 1 or i3 < 1:
        raise DomainError(f"identity_tensor needs n, I3 >= 1, got n={n}, I3={i3}")
    out = np.zeros((n, n, i3), dtype=np.float64)
    out[:, :, 0] = np.eye(n)
    return out


# ---------------------------------------------------------------------------
# Fourier-slice SVD
# ---------------------------------------------------------------------------


def _slice_svd(k: int, m: np.ndarray, full_matrices: bool, compute_uv: bool):
    try:
        return scipy.linalg.svd(
            m, full_matrices=full_matrices, compute_uv=compute_uv, lapack_driver="gesvd"
        )
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailureError(
            f"SVD did not converge on Fourier slice {k + 1}", slice_index=k
        ) from e


def _batched_svd(mats: np.ndarray, full_matrices: bool = False, compute_uv: bool = True):
    """SVD of a (K, m, n) stack; falls back to per-slice gesvd on failure."""
    try:
        return np.linalg.svd(mats, full_matrices=full_matrices, compute_uv=compute_uv)
    except np.linalg.LinAlgError:
        logger.warning(f"Batched SVD of {mats.shape[0]} slices failed, retrying with gesvd")

    results = [_slice_svd(k, m, full_matrices, compute_uv) for k, m in enumerate(mats)]
    if not compute_uv:
        return np.stack(results)
    u, s, vh = zip(*results)
    return np.stack(u), np.stack(s), np.stack(vh)


def _half_slices(x: Tensor3) -> np.ndarray:
    """Fourier slices k = 0 .. I3 // 2 as a (H, I1, I2) stack."""
    return np.fft.rfft(x, axis=2).transpose(2, 0, 1)


def _mirror_columns(half: np.ndarray, i3: int) -> np.ndarray:
    """Expand per-slice values (m, I3 // 2 + 1) to all I3 slices."""
    k = np.arange(i3)
    return half[:, np.minimum(k, i3 - k)]


def _real_slice_indices(i3: int) -> list:
    # DC is always real; the Nyquist slice is real for even I3.
    return [0, i3 // 2] if i3 % 2 == 0 and i3 > 1 else [0]


def fourier_singular_values(x: Tensor3) -> NDArray[np.float64]:
    """Singular values of every Fourier slice, shape (min(I1, I2), I3)."""
    x = as_tensor3(x)
    s = _batched_svd(_half_slices(x), compute_uv=False)
    return _mirror_columns(s.T, x.shape[2])


@dataclass(frozen=True)
class TSvd:
    """
    t-SVD factors x = U * S * V^T.

    U is I1 x I1 x I3, S is I1 x I2 x I3 and f-diagonal, V is I2 x I2 x I3.
    sbar holds the Fourier-domain singular values, shape (min(I1, I2), I3),
    each column nonincreasing.
    """

    U: Tensor3
    S: Tensor3
    V: Tensor3
    sbar: NDArray[np.float64]

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.S.shape

    def reconstruct(self) -> Tensor3:
        return tprod(self.U, tprod(self.S, transpose(self.V)))


def tsvd(x: Tensor3) -> TSvd:
    """
    Full t-SVD of x.

    Args:
        x: real I1 x I2 x I3 tensor

    Returns:
        TSvd with real U, S, V such that U * S * V^T reproduces x

    Raises:
        NumericalFailureError: an SVD of a Fourier slice did not converge
    """
    x = as_tensor3(x)
    i1, i2, i3 = x.shape
    m = min(i1, i2)
    mats = _half_slices(x)
    u, s, vh = _batched_svd(mats, full_matrices=True)
    u, vh = u.copy(), vh.copy()

    # Factors of real slices must be real, otherwise irfft drops their phase.
    for k in _real_slice_indices(i3):
        uk, sk, vhk = _slice_svd(k, mats[k].real, True, True)
        u[k], s[k], vh[k] = uk, sk, vhk

    h = mats.shape[0]
    sbar_half = np.zeros((i1, i2, h), dtype=np.complex128)
    diag = np.arange(m)
    sbar_half[diag, diag, :] = s.T

    U = np.fft.irfft(u.transpose(1, 2, 0), n=i3, axis=2)
    S = np.fft.irfft(sbar_half, n=i3, axis=2)
    V = np.fft.irfft(np.conj(vh).transpose(2, 1, 0), n=i3, axis=2)
    return TSvd(U=U, S=S, V=V, sbar=_mirror_columns(s.T, i3))


# ---------------------------------------------------------------------------
# Ranks and norms
# ---------------------------------------------------------------------------


def _threshold(sbar: np.ndarray, tol: float) -> float:
    if tol < 0:
        raise DomainError(f"rank tolerance must be >= 0, got {tol}")
    return tol * float(sbar.max()) if sbar.size else 0.0


def multi_rank(t: TSvd, tol: float = DEFAULT_RANK_TOL) -> NDArray[np.int64]:
    """Rank of each Fourier slice, relative to the largest singular value."""
    if not t.sbar.size or t.sbar.max() == 0:
        return np.zeros(t.sbar.shape[1], dtype=np.int64)
    return np.sum(t.sbar > _threshold(t.sbar, tol), axis=0).astype(np.int64)


def tubal_rank(t: TSvd, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular tubes with a Fourier entry above tol * max(sbar)."""
    if not t.sbar.size or t.sbar.max() == 0:
        return 0
    return int(np.sum(t.sbar.max(axis=1) > _threshold(t.sbar, tol)))


def average_rank(t: TSvd, tol: float = DEFAULT_RANK_TOL) -> float:
    """Tensor average rank: mean of the multi-rank entries."""
    return float(np.mean(multi_rank(t, tol)))


def tnn(t: TSvd) -> float:
    """Tensor nuclear norm: mean over slices of the Fourier-slice nuclear norms."""
    return float(t.sbar.sum()) / t.sbar.shape[1]


def spectral_norm(t: TSvd) -> float:
    return float(t.sbar.max()) if t.sbar.size else 0.0


def ptnn_from_values(sbar: np.ndarray, p: float, mu: float) -> float:
    """p-TNN from Fourier singular values of shape (min(I1, I2), I3)."""
    if p >= 1:
        raise DomainError(f"p-TNN needs p < 1, got {p} (use tnn for p = 1)")
    params = ShrinkParams(p, mu)
    return float(p_shrink_spectrum(sbar, params).sum()) / sbar.shape[1]


def ptnn(t: Union[TSvd, np.ndarray], p: float, mu: float) -> float:
    """Tensor p-shrinkage nuclear norm (1/I3) * sum s_p^mu(sbar)."""
    sbar = t.sbar if isinstance(t, TSvd) else np.asarray(t, dtype=np.float64)
    return ptnn_from_values(sbar, p, mu)


# ---------------------------------------------------------------------------
# Proximal step
# ---------------------------------------------------------------------------


def tgsvt(z: Tensor3, p: float, tau: float) -> Tensor3:
    """
    Tensor generalized singular value thresholding.

    Shrinks every Fourier-domain singular value of z with s_p^tau and rebuilds
    U * D * V^T. At p = 1 this is slicewise singular value soft thresholding.

    Args:
        z: real tensor to threshold
        p: shrinkage exponent, p <= 1
        tau: shrinkage weight, tau > 0

    Returns:
        Real tensor of the same dims.
    """
    z = as_tensor3(z, "z")
    params = ShrinkParams(p, tau)
    i3 = z.shape[2]
    u, s, vh = _batched_svd(_half_slices(z), full_matrices=False)
    d = p_shrink_spectrum(s, params)
    rebuilt = (u * d[:, None, :]) @ vh
    return np.fft.irfft(rebuilt.transpose(1, 2, 0), n=i3, axis=2)
