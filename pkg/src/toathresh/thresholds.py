"""SNR thresholds delimiting the a priori, ambiguity and asymptotic regions.

Numeric thresholds are read off any sampled MSE curve. Closed-form ones
invert the three-interval MSE approximation (with the large-argument Q
approximation) through the lower branch of Lambert W.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .lower_bounds import alb_z
from .mse_models import MseCurve, crlb, db_to_linear, ecrlb, max_mse, mse_num
from .pulse_model import (AcrModel, EstimationSetup, PulseSpec, build_acr,
                          equal_split_count, gaussian_width, local_maxima)
from .special_math import DomainError, lambert_w_m1

__all__ = [
    "ALPHAS",
    "ThresholdSet",
    "InapplicableError",
    "thresholds_numeric",
    "rho_as_analytic",
    "rho_am2_analytic",
    "rho_am1_analytic",
    "thresholds_analytic",
    "acr_for_ifbw",
    "LambdaSolution",
    "lambda_at_asymptotic_threshold",
    "gamma_sweep_model",
    "lambda_sweep_model",
    "numeric_thresholds_for",
    "sweep_to_csv",
]

ALPHAS = {"pr": 0.5, "am1": 2.0, "am2": 0.5, "as": 1.1}
_NAMES = ("pr", "am1", "am2", "as")


class InapplicableError(DomainError):
    """Closed-form threshold not defined (Lambert W argument below -1/e)."""


def _db(x):
    return None if x is None else 10.0 * math.log10(x)


@dataclass
class ThresholdSet:
    """The four thresholds (linear SNR, ``None`` when not found)."""

    rho_pr: Optional[float] = None
    rho_am1: Optional[float] = None
    rho_am2: Optional[float] = None
    rho_as: Optional[float] = None
    alphas: dict = field(default_factory=lambda: dict(ALPHAS))
    provenance: str = "analytic"

    @property
    def rho_pr_db(self):
        return _db(self.rho_pr)

    @property
    def rho_am1_db(self):
        return _db(self.rho_am1)

    @property
    def rho_am2_db(self):
        return _db(self.rho_am2)

    @property
    def rho_as_db(self):
        return _db(self.rho_as)

    def as_db(self) -> dict:
        return {f"rho_{k}_db": _db(getattr(self, f"rho_{k}")) for k in _NAMES}

    def is_ordered(self, tol_db: float = 0.0) -> bool:
        """True if the thresholds present are non-decreasing pr -> am1 -> am2 -> as."""
        vals = [v for v in (self.rho_pr_db, self.rho_am1_db, self.rho_am2_db,
                            self.rho_as_db) if v is not None]
        return all(b >= a - tol_db for a, b in zip(vals[:-1], vals[1:]))


# --- numeric -------------------------------------------------------------

def _targets(a: AcrModel, setup: EstimationSetup, alphas: dict):
    e_u = max_mse(setup)
    out = {"pr": lambda r: alphas["pr"] * e_u,
           "as": lambda r: alphas["as"] * crlb(a, r)}
    if a.oscillating:
        out["am1"] = lambda r: alphas["am1"] * ecrlb(a, r)
        out["am2"] = lambda r: alphas["am2"] * ecrlb(a, r)
    return out


def _last_entry(ok: np.ndarray) -> Optional[int]:
    """Index from which ``ok`` holds to the end of the grid, else None."""
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return 0 if bad.size == 0 else int(bad[-1]) + 1


def thresholds_numeric(curve: MseCurve, a: AcrModel, setup: EstimationSetup, *,
                       evaluator: Optional[Callable[[float], float]] = None,
                       alphas: Optional[dict] = None, tol_db: float = 0.01) -> ThresholdSet:
    """Thresholds of a sampled MSE curve.

    Each threshold is the smallest grid SNR after which the curve stays at
    or below its target (``alpha_pr e_U``, ``alpha c_e`` or ``alpha_as c``)
    for every larger grid SNR. The bracketing grid cell is then refined by
    bisection to ``tol_db`` when ``evaluator`` (SNR -> MSE) is given, or by
    log-linear interpolation otherwise. A condition that fails at the top
    of the grid, or already holds at its bottom, yields ``None``. The
    ambiguity thresholds are only sought for oscillating ACRs.
    """
    alphas = dict(ALPHAS, **(alphas or {}))
    rho = curve.snr_grid
    snr_db = curve.snr_db
    out = ThresholdSet(alphas=alphas, provenance=f"numeric:{curve.label}")
    for name, target in _targets(a, setup, alphas).items():
        t = np.array([target(r) for r in rho])
        i = _last_entry(curve.mse <= t)
        if i is None or i == 0:
            continue
        lo, hi = snr_db[i - 1], snr_db[i]
        if evaluator is not None:
            def excess(x_db):
                r = 10.0 ** (x_db / 10.0)
                return evaluator(r) - target(r)
            while hi - lo > tol_db:
                mid = 0.5 * (lo + hi)
                if excess(mid) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            x = hi
        else:
            f0 = math.log(curve.mse[i - 1] / t[i - 1])
            f1 = math.log(curve.mse[i] / t[i])
            x = hi if f0 == f1 else lo + (hi - lo) * f0 / (f0 - f1)
        setattr(out, f"rho_{name}", 10.0 ** (x / 10.0))
    return out


# --- closed forms --------------------------------------------------------

def _lambert_threshold(gain: float, one_minus_r: float, form: str) -> float:
    """Solve ``rho Q~(sqrt(rho (1 - R) / 2)) = gain`` with Q~ the tail approximation.

    ``form='derived'`` uses ``H = -pi G^2 (1 - R)^2 / 2``, the exact inverse
    of that equation. ``form='printed'`` keeps a single factor ``(1 - R)``
    and reproduces the widely quoted closed-form constants.
    """
    if gain <= 0.0 or one_minus_r <= 0.0:
        raise InapplicableError("threshold equation has no positive solution")
    if form == "derived":
        h = -math.pi * gain ** 2 * one_minus_r ** 2 / 2.0
    elif form == "printed":
        h = -math.pi * gain ** 2 * one_minus_r / 2.0
    else:
        raise ValueError(f"unknown closed-form variant {form!r}")
    if h < -math.exp(-1.0):
        raise InapplicableError(
            f"asymptotic threshold formula inapplicable (H = {h:.4g} < -1/e)")
    return -2.0 * lambert_w_m1(h) / one_minus_r


def _spacing(a: AcrModel) -> float:
    if a.oscillating:
        return 1.0 / a.f_c
    return math.pi / (4.0 * math.sqrt(a.beta_s_sq))


def rho_as_analytic(a: AcrModel, *, alpha: float = ALPHAS["as"], form: str = "derived",
                    envelope: bool = True) -> float:
    """Closed-form asymptotic threshold (linear SNR).

    The competing peaks sit one carrier period away for oscillating ACRs
    and ``pi / (4 beta_s)`` away otherwise. With ``envelope=True`` the
    oscillating case evaluates the envelope at that offset.
    """
    delta = _spacing(a)
    r = a.e_R(delta) if (a.oscillating and envelope) else a.R(delta)
    gain = (alpha - 1.0) / (2.0 * delta ** 2 * a.beta_s_sq)
    return _lambert_threshold(gain, 1.0 - float(r), form)


def rho_am2_analytic(a: AcrModel, *, alpha: float = ALPHAS["am2"],
                     form: str = "derived") -> float:
    """Closed-form end-ambiguity threshold, where ``e_ana`` meets ``alpha c_e``."""
    if not a.oscillating:
        raise DomainError("end-ambiguity threshold needs a carrier-modulated ACR")
    delta = 1.0 / a.f_c
    gain = (alpha / a.beta_e_sq - 1.0 / a.beta_s_sq) / (2.0 * delta ** 2)
    return _lambert_threshold(gain, 1.0 - float(a.e_R(delta)), form)


def rho_am1_analytic(a: AcrModel, *, alpha: float = ALPHAS["am1"],
                     form: str = "derived") -> float:
    """Closed-form begin-ambiguity threshold from the envelope MSE approximation."""
    if not a.oscillating:
        raise DomainError("begin-ambiguity threshold needs a carrier-modulated ACR")
    delta = math.pi / (4.0 * math.sqrt(a.beta_e_sq))
    gain = (alpha - 1.0) / (2.0 * delta ** 2 * a.beta_e_sq)
    return _lambert_threshold(gain, 1.0 - float(a.e_R(delta)), form)


def thresholds_analytic(a: AcrModel, *, form: str = "derived") -> ThresholdSet:
    """Closed-form thresholds; entries whose formula is inapplicable are None."""
    out = ThresholdSet(provenance="analytic")
    calls = [("as", rho_as_analytic)]
    if a.oscillating:
        calls += [("am1", rho_am1_analytic), ("am2", rho_am2_analytic)]
    for name, fn in calls:
        try:
            setattr(out, f"rho_{name}", fn(a, form=form))
        except InapplicableError:
            pass
    return out


# --- IFBW inversion ------------------------------------------------------

def acr_for_ifbw(lam: float, B: float = 1e9) -> AcrModel:
    """Gaussian passband ACR with IFBW ``lam`` (closed forms depend on ``lam`` only)."""
    return build_acr(PulseSpec.from_ifbw(lam, B))


@dataclass(frozen=True)
class LambdaSolution:
    """IFBW at which the asymptotic threshold equals a given SNR."""

    lam: float
    status: str  # ok | below_minimum | above_ceiling


def lambda_at_asymptotic_threshold(rho0: float, *, shape: Callable[[float], AcrModel] = acr_for_ifbw,
                                   lam_min: float = 0.5, lam_max: float = 50.0,
                                   threshold: Optional[Callable[[AcrModel], float]] = None,
                                   form: str = "derived", tol: float = 1e-6) -> LambdaSolution:
    """Largest IFBW whose asymptotic threshold does not exceed ``rho0``.

    Bisection on the (increasing) closed-form asymptotic threshold curve
    by default; pass ``threshold`` to invert another monotone curve.
    """
    if not rho0 > 0:
        raise DomainError("SNR must be positive")
    if threshold is None:
        def threshold(a):
            return rho_as_analytic(a, form=form)

    def f(lam):
        try:
            return threshold(shape(lam)) - rho0
        except InapplicableError:
            return math.inf

    if f(lam_min) > 0.0:
        return LambdaSolution(lam_min, "below_minimum")
    if f(lam_max) <= 0.0:
        return LambdaSolution(lam_max, "above_ceiling")
    lo, hi = lam_min, lam_max
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return LambdaSolution(0.5 * (lo + hi), "ok")


# --- sweeps ----------------------------------------------------------------

def gamma_sweep_model(gamma: float, domain=(-2e-9, 2e-9)) -> tuple[AcrModel, EstimationSetup]:
    """Baseband Gaussian over a fixed domain, width chosen so that ``T B = gamma``."""
    s = EstimationSetup(0.0, domain[0], domain[1])
    return build_acr(PulseSpec("baseband_gaussian", gaussian_width(gamma / s.T))), s


def lambda_sweep_model(lam: float, f_c: float = 6.85e9,
                       domain_tw=(-2.0, 1.5)) -> tuple[AcrModel, EstimationSetup]:
    """Passband Gaussian with fixed carrier and ``B = f_c / lam``; domain in pulse widths."""
    p = PulseSpec.from_bandwidth(f_c / lam, f_c)
    return build_acr(p), EstimationSetup(0.0, domain_tw[0] * p.T_w, domain_tw[1] * p.T_w)


def numeric_thresholds_for(a: AcrModel, setup: EstimationSetup, snr_db, *,
                           curve: str = "e_num", seed: int = 0,
                           n_intervals: Optional[int] = None) -> ThresholdSet:
    """Thresholds of ``e_num`` or ``z1`` sampled on ``snr_db`` and refined by bisection.

    Non-oscillating ACRs use :func:`equal_split_count` intervals unless
    ``n_intervals`` is given.
    """
    if curve == "e_num":
        if n_intervals is None and not a.oscillating:
            n_intervals = equal_split_count(a, setup)
        iv = local_maxima(a, setup, n_intervals=n_intervals or 8)

        def evaluator(r):
            return mse_num(a, setup, iv, r, seed=seed)
    elif curve == "z1":
        def evaluator(r):
            return alb_z(a, setup, r, 1)
    else:
        raise ValueError(f"unsupported curve {curve!r}")
    rho = db_to_linear(snr_db)
    cv = MseCurve(rho, np.array([evaluator(r) for r in rho]), curve)
    return thresholds_numeric(cv, a, setup, evaluator=evaluator)

def sweep_to_csv(rows: Sequence[tuple[str, float, ThresholdSet]], path=None) -> str:
    """CSV with columns sweep_var, value, rho_*_db, provenance; empty field = not found."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep_var", "value", "rho_pr_db", "rho_am1_db", "rho_am2_db",
                "rho_as_db", "provenance"])
    for var, value, ts in rows:
        cells = ["" if v is None else f"{v:.2f}" for v in ts.as_db().values()]
        w.writerow([var, f"{value:.6g}", *cells, ts.provenance])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
