"""Monte Carlo reference for the ML delay estimator.

Each trial samples the normalized cross-correlation
``X(theta) = sqrt(rho) R(theta - Theta) + w(theta)`` on a grid, with
``w`` zero-mean Gaussian of covariance ``R(theta_i - theta_j)``, and takes
its (optionally parabola-refined) argmax as the estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mse_models import MseCurve, db_to_linear
from .pulse_model import AcrModel, EstimationSetup

__all__ = ["CovarianceError", "McConfig", "McResult", "noise_factor",
           "simulate_mle_mse", "monte_carlo_curve"]

JITTER = 1e-10


class CovarianceError(RuntimeError):
    """Grid covariance not factorizable even after jitter."""


@dataclass(frozen=True)
class McConfig:
    """Grid, trial count, seed and peak-refinement switch.

    ``spacing`` defaults to the smaller of ``T_w / 50`` and one
    twentieth of a carrier period. With ``rel_tol`` set, ``trials`` is a
    minimum: the count doubles until the standard error is at most
    ``rel_tol`` times the MSE or ``max_trials`` is reached. Rare large
    errors (cycle slips near the asymptotic threshold) need this.
    """

    trials: int = 10_000
    seed: int = 0
    spacing: Optional[float] = None
    refine: bool = True
    batch: int = 500
    rel_tol: Optional[float] = None
    max_trials: int = 320_000

    def __post_init__(self):
        if self.trials < 100:
            raise ValueError("need at least 100 trials")
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.spacing is not None and not self.spacing > 0:
            raise ValueError("grid spacing must be positive")

    def grid(self, a: AcrModel, setup: EstimationSetup) -> np.ndarray:
        h = self.spacing
        if h is None:
            h = a.scale / 50.0
            if a.f_c > 0:
                h = min(h, 1.0 / (20.0 * a.f_c))
        elif a.f_c > 0 and h > 1.0 / (10.0 * a.f_c) * (1 + 1e-12):
            raise ValueError("grid spacing must resolve the carrier (<= 1/(10 f_c))")
        n = int(math.ceil(setup.T / h)) + 1
        return np.linspace(setup.Theta1, setup.Theta2, n)


@dataclass(frozen=True)
class McResult:
    mse: float
    stderr: float
    trials: int


def noise_factor(a: AcrModel, grid: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of ``R(theta_i - theta_j)`` plus ``1e-10 trace`` jitter."""
    cov = np.asarray(a.R(grid[:, None] - grid[None, :]), dtype=float)
    cov = 0.5 * (cov + cov.T)
    cov[np.diag_indices_from(cov)] += JITTER * float(np.trace(cov))
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise CovarianceError("grid covariance is not positive definite after jitter") from exc


def _trial_normals(seed: int, first: int, count: int, n: int) -> np.ndarray:
    # one independent stream per trial, so results do not depend on batching
    out = np.empty((n, count))
    for j in range(count):
        ss = np.random.SeedSequence((seed, first + j))
        out[:, j] = np.random.Generator(np.random.Philox(ss)).standard_normal(n)
    return out


def _argmax_estimates(x: np.ndarray, grid: np.ndarray, refine: bool) -> np.ndarray:
    idx = np.argmax(x, axis=0)
    est = grid[idx]
    if refine:
        cols = np.arange(x.shape[1])
        inner = (idx > 0) & (idx < grid.size - 1)
        i = idx[inner]
        c = cols[inner]
        y0, y1, y2 = x[i - 1, c], x[i, c], x[i + 1, c]
        den = y0 - 2.0 * y1 + y2
        with np.errstate(divide="ignore", invalid="ignore"):
            off = np.where(den < 0.0, 0.5 * (y0 - y2) / den, 0.0)
        h = grid[1] - grid[0]
        est[inner] = grid[i] + np.clip(off, -0.5, 0.5) * h
    return np.clip(est, grid[0], grid[-1])


def simulate_mle_mse(a: AcrModel, setup: EstimationSetup, rho: float,
                     cfg: McConfig = McConfig(), *, factor: Optional[np.ndarray] = None) -> McResult:
    """Empirical MSE (s^2) of the grid ML estimator and its standard error.

    ``factor`` may pass a precomputed :func:`noise_factor` for the grid of
    ``cfg`` to reuse it across SNR values.
    """
    if not rho > 0:
        raise ValueError("SNR must be positive")
    grid = cfg.grid(a, setup)
    L = noise_factor(a, grid) if factor is None else factor
    signal = math.sqrt(rho) * np.asarray(a.R(grid - setup.Theta), dtype=float)
    sq = np.empty(0)
    target = cfg.trials
    while True:
        done = sq.size
        new = np.empty(target - done)
        for first in range(done, target, cfg.batch):
            count = min(cfg.batch, target - first)
            x = signal[:, None] + L @ _trial_normals(cfg.seed, first, count, grid.size)
            new[first - done:first - done + count] = (
                _argmax_estimates(x, grid, cfg.refine) - setup.Theta) ** 2
        sq = np.concatenate([sq, new])
        mse = float(sq.mean())
        se = float(sq.std(ddof=1) / math.sqrt(sq.size))
        # precision is checked only at doublings so the result does not depend on batch
        if cfg.rel_tol is None or se <= cfg.rel_tol * mse or target >= cfg.max_trials:
            return McResult(mse, se, sq.size)
        target = min(2 * target, cfg.max_trials)


def monte_carlo_curve(a: AcrModel, setup: EstimationSetup, snr_db, cfg: McConfig = McConfig()) -> MseCurve:
    """Monte Carlo MSE on an SNR grid (dB), one noise factorization for all points."""
    L = noise_factor(a, cfg.grid(a, setup))
    rho = db_to_linear(snr_db)
    mse = [simulate_mle_mse(a, setup, r, cfg, factor=L).mse for r in rho]
    return MseCurve(rho, np.array(mse), "monte_carlo")
