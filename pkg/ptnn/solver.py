"""
Low-rank tensor completion with the p-shrinkage tensor nuclear norm.

Minimizes F(X) = 1/2 ||P_Ω(X - T)||_F^2 + lam * ||X||_p with ADMM on the
splitting Y = X, accelerated by an adaptive momentum step:

    Q   = X^t + gamma^t (X^t - X^{t-1})
    W   = Q if F(Q) <= F(X^t) else X^t         (gamma grows or shrinks by rho)
    Y   = tgsvt(W - Z / beta, p, lam / beta)
    X   = P_Ω̄(Y + Z / beta) + P_Ω(T)
    Z   = Z + beta (Y - X)
    beta = min(eta * beta, beta_max)

The Y-update shrinks with tau = lam / beta^t. F is evaluated with one norm
weight for the whole solve, mu = lam / beta_max, so values recorded at
different iterations are comparable. With p = 1 the regularizer is the
tensor nuclear norm and the Y-update is slicewise singular value soft
thresholding.

A run stops once both the relative step ||X^{t+1} - X^t|| / ||X^t|| and the
primal residual ||Y^{t+1} - X^{t+1}|| / ||X^{t+1}|| are at most tol.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .data import SamplingMask, project
from .errors import DimensionMismatchError, DomainError
from .shrink import ShrinkParams, zero_crossing
from .talg import Tensor3, as_tensor3, fourier_singular_values, ptnn_from_values, tgsvt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """
    Hyperparameters of the momentum ADMM solver.

    lam=None selects 1 / sqrt(I3 * max(I1, I2)) for the problem at hand.
    normalize divides the observation by its peak magnitude before iterating
    and scales the estimate back afterwards. lam then weighs the norm of the
    scaled problem; SolverTrace.lam_effective is the same weight in the
    caller's units.
    """

    p: float = -1.0
    lam: Optional[float] = None
    beta0: float = 0.01
    beta_max: float = 1e5
    eta: float = 1.1
    gamma0: float = 0.1
    rho: float = 2.0
    max_iters: int = 1000
    tol: float = 1e-4
    normalize: bool = True
    log_every: int = 50

    def __post_init__(self):
        checks = [
            (math.isfinite(self.p) and self.p <= 1, f"p must be <= 1, got {self.p}"),
            (self.lam is None or self.lam > 0, f"lambda must be > 0, got {self.lam}"),
            (self.beta0 > 0, f"beta0 must be > 0, got {self.beta0}"),
            (self.beta_max >= self.beta0, "beta_max must be >= beta0"),
            (self.eta > 1, f"eta must be > 1, got {self.eta}"),
            (0 < self.gamma0 <= 1, f"gamma0 must lie in (0, 1], got {self.gamma0}"),
            (self.rho > 1, f"rho must be > 1, got {self.rho}"),
            (self.max_iters >= 1, f"max_iters must be >= 1, got {self.max_iters}"),
            (self.tol > 0, f"tol must be > 0, got {self.tol}"),
            (self.log_every >= 1, f"log_every must be >= 1, got {self.log_every}"),
        ]
        for ok, message in checks:
            if not ok:
                raise DomainError(message)

    def lambda_for(self, dims: Tuple[int, int, int]) -> float:
        if self.lam is not None:
            return float(self.lam)
        i1, i2, i3 = dims
        return 1.0 / math.sqrt(i3 * max(i1, i2))

    def replace(self, **overrides) -> "SolverConfig":
        """Copy with the given fields replaced; None values are ignored."""
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})


@dataclass
class SolverState:
    """Iterates of one solve. All tensors share the observation's dims."""

    X_prev: Tensor3
    X: Tensor3
    Y: Tensor3
    Z: Tensor3
    W: Tensor3
    Q: Tensor3
    beta: float
    gamma: float
    iter: int = 0
    # Fourier singular values of X, cached between iterations.
    sbar_x: Optional[np.ndarray] = None
    f_x: float = math.nan
    f_q: float = math.nan

    @classmethod
    def initial(cls, dims: Tuple[int, int, int], cfg: SolverConfig) -> "SolverState":
        zeros = np.zeros(dims, dtype=np.float64)
        return cls(
            X_prev=zeros,
            X=zeros.copy(),
            Y=zeros.copy(),
            Z=zeros.copy(),
            W=zeros.copy(),
            Q=zeros.copy(),
            beta=cfg.beta0,
            gamma=cfg.gamma0,
        )


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    f_value: float
    f_prev: float
    f_momentum: float
    step_norm: float
    rel_change: float
    residual: float
    gamma: float
    beta: float
    momentum_accepted: bool


@dataclass
class SolverTrace:
    """
    Per-iteration history of a solve.

    f_value is F(X^{t+1}) and f_prev is F(X^t), both with mu = lam / beta_max.
    With normalize=True they refer to the observation divided by scale; the
    same quantities in the caller's units are lam_effective and f_raw.
    """

    lam: float
    scale: float = 1.0
    records: List[IterationRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max_iters"

    @property
    def lam_effective(self) -> float:
        """Weight on the norm of the unscaled problem, lam * scale."""
        return self.lam * self.scale

    @property
    def f_values(self) -> np.ndarray:
        return np.array([r.f_value for r in self.records])

    @property
    def f_raw(self) -> np.ndarray:
        """F in the caller's units, f_value * scale**2."""
        return self.f_values * self.scale**2

    @property
    def step_norms(self) -> np.ndarray:
        return np.array([r.step_norm for r in self.records])

    @property
    def final_objective(self) -> Optional[float]:
        """Raw F of the returned estimate; None when no iteration ran."""
        return float(self.f_raw[-1]) if self.records else None

    def descent_violations(self, rel_slack: float = 1e-9) -> List[int]:
        """Iterations where F(X^{t+1}) > F(X^t) beyond rel_slack * (1 + |F(X^t)|)."""
        return [
            r.iter
            for r in self.records
            if r.f_value > r.f_prev + rel_slack * (1.0 + abs(r.f_prev))
        ]

    def rate_bound_gap(self, beta0: float) -> float:
        """
        2 (F(X^1) - F(X^last)) / (beta0 T) - min_t ||X^{t+1} - X^t||_F^2.

        Nonnegative when the relaxed convergence-rate bound holds.
        """
        if not self.records:
            return math.inf
        bound = 2.0 * (self.records[0].f_value - self.records[-1].f_value)
        bound /= beta0 * self.iterations
        return bound - float(np.min(self.step_norms**2))

    def to_rows(self) -> List[dict]:
        factor = self.scale**2
        return [{**dataclasses.asdict(r), "f_raw": r.f_value * factor} for r in self.records]


StepCallback = Callable[[SolverState, IterationRecord], None]


def _check_dims(x: Tensor3, obs: Tensor3, mask: SamplingMask) -> None:
    if x.shape != obs.shape or tuple(obs.shape) != mask.dims:
        raise DimensionMismatchError(
            f"dims disagree: x {x.shape}, obs {obs.shape}, mask {mask.dims}"
        )


def _objective(
    x: Tensor3,
    sbar: np.ndarray,
    obs: Tensor3,
    mask: SamplingMask,
    cfg: SolverConfig,
    beta: float,
) -> float:
    residual = np.where(mask.to_bool(), x - obs, 0.0)
    fit = 0.5 * float(np.sum(residual**2))
    lam = cfg.lambda_for(x.shape)
    if cfg.p == 1:
        reg = float(sbar.sum()) / sbar.shape[1]
    else:
        reg = ptnn_from_values(sbar, cfg.p, lam / beta)
    return fit + lam * reg


def objective(
    x: Tensor3,
    obs: Tensor3,
    mask: SamplingMask,
    cfg: SolverConfig,
    beta: Optional[float] = None,
) -> float:
    """
    F(x) = 1/2 ||P_Ω(x - obs)||_F^2 + lam * ||x||_p with mu = lam / beta.

    beta defaults to cfg.beta_max, the weight solve() records F with.
    """
    x = as_tensor3(x)
    obs = as_tensor3(obs, "obs")
    _check_dims(x, obs, mask)
    beta = cfg.beta_max if beta is None else beta
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    return _objective(x, fourier_singular_values(x), obs, mask, cfg, beta)


def update_Y(w: Tensor3, z: Tensor3, beta: float, cfg: SolverConfig) -> Tensor3:
    """Y-subproblem: prox of lam ||.||_p at w - z / beta."""
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    tau = cfg.lambda_for(np.shape(w)) / beta
    return tgsvt(np.asarray(w) - np.asarray(z) / beta, cfg.p, tau)


def update_X(
    y: Tensor3, z: Tensor3, beta: float, obs: Tensor3, mask: SamplingMask
) -> Tensor3:
    """X-subproblem: y + z / beta off Ω, the observation copied verbatim on Ω."""
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    y = np.asarray(y, dtype=np.float64)
    obs = np.asarray(obs, dtype=np.float64)
    _check_dims(y, obs, mask)
    return np.where(mask.to_bool(), obs, y + np.asarray(z) / beta)


def update_Z(z: Tensor3, y: Tensor3, x: Tensor3, beta: float) -> Tensor3:
    """Multiplier step z + beta (y - x)."""
    z, y, x = (np.asarray(a, dtype=np.float64) for a in (z, y, x))
    if not z.shape == y.shape == x.shape:
        raise DimensionMismatchError(f"dims disagree: {z.shape}, {y.shape}, {x.shape}")
    return z + beta * (y - x)


def momentum_step(
    state: SolverState, obs: Tensor3, mask: SamplingMask, cfg: SolverConfig
) -> Tuple[Tensor3, float, bool]:
    """
    Adaptive momentum: extrapolate, keep the extrapolation only if it does
    not increase F. Returns (W, next gamma, accepted).

    Stores Q, F(X) and F(Q) on the state.
    """
    if state.sbar_x is None:
        state.sbar_x = fourier_singular_values(state.X)
    f_x = _objective(state.X, state.sbar_x, obs, mask, cfg, cfg.beta_max)

    diff = state.X - state.X_prev
    q = state.X + state.gamma * diff
    if np.any(diff):
        f_q = _objective(q, fourier_singular_values(q), obs, mask, cfg, cfg.beta_max)
    else:
        f_q = f_x

    state.Q, state.f_x, state.f_q = q, f_x, f_q
    if f_q <= f_x:
        return q, min(1.0, cfg.rho * state.gamma), True
    return state.X, state.gamma / cfg.rho, False


def solve(
    obs: Tensor3,
    mask: SamplingMask,
    cfg: Optional[SolverConfig] = None,
    callback: Optional[StepCallback] = None,
) -> Tuple[Tensor3, SolverTrace]:
    """
    Complete obs from its entries on mask.

    Entries of obs outside the mask are ignored. The returned tensor equals
    obs exactly on the mask. Hitting max_iters is reported on the trace,
    not raised. A fully observed tensor is returned as is, with a converged
    trace and no iterations.

    Args:
        obs: observation, any values off the mask
        mask: observed positions, dims equal to obs.shape
        cfg: solver hyperparameters, SolverConfig() when None
        callback: called as callback(state, record) after every iteration

    Returns:
        (estimate, trace)

    Raises:
        DimensionMismatchError: obs and mask disagree
        DomainError: the mask is empty
    """
    cfg = cfg or SolverConfig()
    obs = as_tensor3(obs, "obs")
    if tuple(obs.shape) != mask.dims:
        raise DimensionMismatchError(f"obs {obs.shape} does not match mask {mask.dims}")
    if mask.count == 0:
        raise DomainError("cannot complete a tensor with no observed entries")

    lam = cfg.lambda_for(obs.shape)
    if mask.count == mask.size:
        logger.info(f"All {mask.size} entries of {obs.shape} observed, nothing to complete")
        return obs.copy(), SolverTrace(lam=lam, converged=True)

    observed = project(obs, mask)
    peak = float(np.max(np.abs(observed)))
    scale = peak if cfg.normalize and peak > 0 else 1.0
    target = observed / scale

    state = SolverState.initial(obs.shape, cfg)
    trace = SolverTrace(lam=lam, scale=scale)
    logger.info(
        f"Solving {obs.shape} completion: sr={mask.sr:.4f} p={cfg.p} lambda={lam:.4g} "
        f"scale={scale:.4g} lambda_effective={trace.lam_effective:.4g}"
    )

    for it in range(1, cfg.max_iters + 1):
        beta = state.beta
        state.W, gamma_next, accepted = momentum_step(state, target, mask, cfg)

        y = update_Y(state.W, state.Z, beta, cfg)
        x_new = update_X(y, state.Z, beta, target, mask)
        z_new = update_Z(state.Z, y, x_new, beta)

        step = float(np.linalg.norm(x_new - state.X))
        base = float(np.linalg.norm(state.X))
        rel = step / base if base > 0 else math.inf
        x_norm = float(np.linalg.norm(x_new))
        residual = float(np.linalg.norm(y - x_new)) / x_norm if x_norm > 0 else math.inf
        sbar_new = fourier_singular_values(x_new)
        f_new = _objective(x_new, sbar_new, target, mask, cfg, cfg.beta_max)

        record = IterationRecord(
            iter=it,
            f_value=f_new,
            f_prev=state.f_x,
            f_momentum=state.f_q,
            step_norm=step,
            rel_change=rel,
            residual=residual,
            gamma=state.gamma,
            beta=beta,
            momentum_accepted=accepted,
        )
        trace.records.append(record)

        state.X_prev, state.X, state.Y, state.Z = state.X, x_new, y, z_new
        state.sbar_x = sbar_new
        state.gamma = gamma_next
        state.beta = min(cfg.eta * beta, cfg.beta_max)
        state.iter = it

        if callback is not None:
            callback(state, record)

        if it == 1 or it % cfg.log_every == 0:
            cutoff = zero_crossing(ShrinkParams(cfg.p, lam / beta))
            logger.debug(
                f"iter {it}: F={f_new:.6g} rel_change={rel:.3e} residual={residual:.3e} "
                f"beta={beta:.3g} cutoff={cutoff:.3g} gamma={record.gamma:.3g} "
                f"momentum={'yes' if accepted else 'no'}"
            )

        if rel <= cfg.tol and residual <= cfg.tol:
            trace.converged = True
            break

    x_hat = np.where(mask.to_bool(), obs, state.X * scale)
    if trace.converged:
        logger.info(f"Converged after {trace.iterations} iterations")
    else:
        logger.warning(f"Stopped at max_iters={cfg.max_iters} without reaching tol={cfg.tol}")
    return x_hat, trace
