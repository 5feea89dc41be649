"""Closed-form error levels (CRLB, envelope CRLB, a priori MSE) and the two
interval-estimation MSE approximations of the ML delay estimator.

SNR arguments are linear. Times are in seconds, MSEs in s^2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .mvn_prob import DominanceProblem, GaussianVector
from .pulse_model import AcrModel, EstimationSetup, IntervalSet
from .special_math import DomainError, q_approx, q_function

__all__ = [
    "IntervalSet",
    "MseCurve",
    "MseEstimate",
    "db_to_linear",
    "linear_to_db",
    "default_snr_grid_db",
    "crlb",
    "ecrlb",
    "max_mse",
    "ccr_vector",
    "interval_moments",
    "mse_num",
    "mse_num_estimate",
    "mse_ana",
    "mse_ana_env",
    "ana_spacing",
    "curves_to_csv",
]

CURVE_LABELS = ("crlb", "ecrlb", "e_U", "e_num", "e_ana", "e_ana_env",
                "z1", "z2", "b1", "b2", "monte_carlo")


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def default_snr_grid_db(lo: float = -20.0, hi: float = 60.0, step: float = 0.25) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, n)


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not (rho > 0.0 and math.isfinite(rho)):
        raise DomainError(f"SNR must be positive and finite, got {rho!r}")
    return rho


def crlb(a: AcrModel, rho: float) -> float:
    """Cramer-Rao bound ``1 / (rho beta_s^2)``."""
    return 1.0 / (_check_rho(rho) * a.beta_s_sq)


def ecrlb(a: AcrModel, rho: float) -> float:
    """Envelope Cramer-Rao bound ``1 / (rho beta_e^2)``."""
    return 1.0 / (_check_rho(rho) * a.beta_e_sq)


def max_mse(setup: EstimationSetup) -> float:
    """MSE of a uniform estimate over the a priori domain."""
    mid = 0.5 * (setup.Theta1 + setup.Theta2)
    return setup.T ** 2 / 12.0 + (setup.Theta - mid) ** 2


def ccr_vector(a: AcrModel, setup: EstimationSetup, testpoints, rho: float) -> GaussianVector:
    """Gaussian vector of the normalized cross-correlation at the testpoints.

    Mean ``sqrt(rho) R(theta_n - Theta)``, covariance ``R(theta_n - theta_m)``.
    """
    t = np.asarray(testpoints, dtype=float)
    mean = math.sqrt(rho) * np.asarray(a.R(t - setup.Theta), dtype=float)
    cov = np.asarray(a.R(t[:, None] - t[None, :]), dtype=float)
    return GaussianVector(mean, 0.5 * (cov + cov.T))


def interval_moments(a: AcrModel, setup: EstimationSetup, intervals: IntervalSet,
                     rho: float, *, variance: str = "squared_ratio"):
    """Conditional mean and variance of the estimate inside each interval.

    Oscillating partitions: the estimate sits at the local maximum, with a
    local CRLB-like variance ``c (R''_0 / R''_n)^2`` (``variance='squared_ratio'``)
    or ``c |R''_0 / R''_n|`` (``variance='abs_ratio'``), capped by the
    uniform variance of the interval.

    Non-oscillating partitions: outside the interval holding ``Theta`` the
    estimate falls on one of the two boundaries, on the left one with
    probability ``Q(sqrt(rho) R'_n / beta_s)``. The interval holding
    ``Theta`` is centred on ``Theta`` with variance ``min(c, w^2/12)``.

    Returns
    -------
    mu, var : ndarray
    flagged : ndarray of bool
        Testpoints whose curvature could not be used (uniform variance taken).
    """
    if variance not in ("squared_ratio", "abs_ratio"):
        raise ValueError(f"unknown variance rule {variance!r}")
    c = crlb(a, rho)
    w = intervals.widths
    uniform = w ** 2 / 12.0
    n = len(intervals)
    flagged = np.zeros(n, dtype=bool)
    k0 = intervals.index0

    if intervals.mode == "oscillating":
        mu = intervals.testpoints.copy()
        r0 = intervals.r_ddot[k0]
        rn = intervals.r_ddot
        usable = rn < 0.0
        flagged = ~usable
        ratio = np.where(usable, r0 / np.where(usable, rn, 1.0), np.inf)
        local = c * (ratio ** 2 if variance == "squared_ratio" else np.abs(ratio))
        var = np.minimum(local, uniform)
    else:
        d = intervals.boundaries
        p_left = np.asarray(q_function(math.sqrt(rho) * intervals.r_dot
                                       / math.sqrt(a.beta_s_sq)), dtype=float)
        mu = d[:-1] * p_left + d[1:] * (1.0 - p_left)
        var = np.minimum(p_left * (1.0 - p_left) * w ** 2, uniform)
        mu[k0] = setup.Theta
        var[k0] = min(c, uniform[k0])
    return mu, var, flagged


@dataclass
class MseEstimate:
    """MSE value with its QMC standard error and per-interval breakdown."""

    mse: float
    stderr: float
    probs: np.ndarray = field(repr=False)
    prob_stderr: np.ndarray = field(repr=False)
    flagged: bool = False


def mse_num_estimate(a: AcrModel, setup: EstimationSetup, intervals: IntervalSet,
                     rho: float, *, seed: int = 0, variance: str = "squared_ratio",
                     rel_tol: float = 0.01, n_points: int = 1024,
                     max_points: int = 2 ** 15, n_randomizations: int = 8) -> MseEstimate:
    """Interval-estimation MSE ``sum_n P_n [(Theta - mu_n)^2 + sigma_n^2]``.

    ``P_n`` is the probability that the cross-correlation at testpoint
    ``n`` exceeds every other testpoint. The lattice size of each ``P_n``
    is doubled, largest error contribution first, until the propagated
    standard error is below ``rel_tol`` times the MSE or ``max_points``
    is reached.
    """
    rho = _check_rho(rho)
    mu, var, flagged = interval_moments(a, setup, intervals, rho, variance=variance)
    loss = (setup.Theta - mu) ** 2 + var
    g = ccr_vector(a, setup, intervals.testpoints, rho)
    n = g.dim
    problems = [DominanceProblem(g, k, seed=seed) for k in range(n)]
    points = np.full(n, int(n_points))
    probs = np.empty(n)
    errs = np.empty(n)
    for k, prob in enumerate(problems):
        probs[k], errs[k] = prob.run(points[k], n_randomizations)

    while True:
        e = float(probs @ loss)
        contrib = errs * loss
        se = float(np.sqrt(np.sum(contrib ** 2)))
        if se <= rel_tol * e:
            break
        refinable = np.array([p.exact is None for p in problems]) & (points < max_points)
        if not refinable.any():
            break
        k = int(np.argmax(np.where(refinable, contrib, -1.0)))
        if contrib[k] <= 0.0:
            break
        points[k] *= 2
        probs[k], errs[k] = problems[k].run(points[k], n_randomizations)
    return MseEstimate(e, se, probs, errs, bool(flagged.any()))


def mse_num(a: AcrModel, setup: EstimationSetup, intervals: IntervalSet, rho: float,
            seed: int = 0, **kwargs) -> float:
    """Numeric interval-estimation MSE (s^2); see :func:`mse_num_estimate`."""
    return mse_num_estimate(a, setup, intervals, rho, seed=seed, **kwargs).mse


def ana_spacing(a: AcrModel) -> float:
    """Offset of the competing testpoints in the three-interval approximation.

    One carrier period for oscillating ACRs, ``pi / (4 beta_s)`` otherwise.
    """
    if a.oscillating:
        return 1.0 / a.f_c
    return math.pi / (4.0 * math.sqrt(a.beta_s_sq))


def _three_interval(c0: float, delta: float, r_delta: float, rho: float, q: str) -> float:
    x = math.sqrt(rho / 2.0 * (1.0 - r_delta))
    if q == "exact":
        tail = q_function(x)
    elif q == "approx":
        tail = q_approx(x)
    else:
        raise ValueError(f"unknown Q evaluation {q!r}")
    return c0 + 2.0 * delta ** 2 * tail


def mse_ana(a: AcrModel, rho: float, *, q: str = "exact") -> float:
    """Three-interval analytic MSE ``c + 2 D^2 Q(sqrt(rho (1 - R(D)) / 2))``.

    ``q='approx'`` replaces Q with its large-argument form, which is the
    form the closed-form thresholds invert exactly.
    """
    rho = _check_rho(rho)
    delta = ana_spacing(a)
    return _three_interval(crlb(a, rho), delta, float(a.R(delta)), rho, q)


def mse_ana_env(a: AcrModel, rho: float, *, q: str = "exact") -> float:
    """Envelope form ``c_e + 2 D^2 Q(sqrt(rho (1 - e_R(D)) / 2))``, ``D = pi/(4 beta_e)``."""
    if not a.oscillating:
        raise DomainError("the envelope MSE approximation needs a carrier-modulated ACR")
    rho = _check_rho(rho)
    delta = math.pi / (4.0 * math.sqrt(a.beta_e_sq))
    return _three_interval(ecrlb(a, rho), delta, float(a.e_R(delta)), rho, q)


@dataclass
class MseCurve:
    """MSE sampled on an ascending SNR grid (linear SNR, s^2)."""

    snr_grid: np.ndarray
    mse: np.ndarray
    label: str
    stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        self.snr_grid = np.asarray(self.snr_grid, dtype=float)
        self.mse = np.asarray(self.mse, dtype=float)
        if self.snr_grid.shape != self.mse.shape or self.snr_grid.ndim != 1:
            raise ValueError("snr_grid and mse must be 1-D of equal length")
        if np.any(np.diff(self.snr_grid) <= 0):
            raise ValueError("snr_grid must be strictly increasing")
        if np.any(~(self.mse > 0)):
            raise ValueError("mse must be positive")
        if self.label not in CURVE_LABELS:
            raise ValueError(f"unknown curve label {self.label!r}")

    @property
    def snr_db(self) -> np.ndarray:
        return linear_to_db(self.snr_grid)

    @classmethod
    def from_function(cls, fn, snr_db: Sequence[float], label: str) -> "MseCurve":
        rho = db_to_linear(snr_db)
        return cls(rho, np.array([fn(r) for r in rho]), label)

    def rows(self) -> Iterable[tuple]:
        for r_db, m in zip(self.snr_db, self.mse):
            yield (f"{r_db:.4f}", f"{m:.10e}", f"{math.sqrt(m):.10e}", self.label)


def curves_to_csv(curves: Sequence[MseCurve], path=None) -> str:
    """CSV with columns ``snr_db, mse_s2, rmse_s, label``; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["snr_db", "mse_s2", "rmse_s", "label"])
    for cv in curves:
        w.writerows(cv.rows())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
