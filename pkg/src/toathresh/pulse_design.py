"""Choice of bandwidth and carrier of a Gaussian-envelope pulse that maximizes
delay accuracy at a given SNR inside an allowed frequency band.

Frequencies are in Hz, SNR linear, MSE in s^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mse_models import max_mse, mse_num
from .pulse_model import EstimationSetup, PulseSpec, build_acr, local_maxima
from .mvn_prob import MAX_DIM
from .special_math import DomainError
from .thresholds import (ALPHAS, LambdaSolution, acr_for_ifbw,
                         lambda_at_asymptotic_threshold, rho_am1_analytic)

__all__ = [
    "InfeasibleError",
    "DesignConstraints",
    "Geometry",
    "DesignSolution",
    "SearchResult",
    "feasible_geometry",
    "crlb_carrier",
    "ecrlb_gaussian",
    "design_free_bandwidth",
    "design_fixed_bandwidth",
    "max_rmse_gain",
    "design_setup",
    "predicted_mse",
    "exhaustive_search_reference",
]

_LN10 = math.log(10.0)
# a priori domain in units of the pulse width
DOMAIN_TW = (-2.0, 1.5)


class InfeasibleError(DomainError):
    """Constraints admit no pulse."""


@dataclass(frozen=True)
class DesignConstraints:
    """Band ``[f_l, f_h]``, available SNR and optional fixed bandwidth."""

    f_l: float
    f_h: float
    rho0: float
    fixed_b: Optional[float] = None
    alphas: dict = field(default_factory=lambda: dict(ALPHAS))
    delta_db: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.f_l < self.f_h):
            raise DomainError("need 0 < f_l < f_h")
        if not self.rho0 > 0.0:
            raise DomainError("SNR must be positive")
        if self.fixed_b is not None:
            if not self.fixed_b > 0.0:
                raise DomainError("fixed bandwidth must be positive")
            if self.fixed_b > (self.f_h - self.f_l) * (1.0 + 1e-12):
                raise InfeasibleError("fixed bandwidth exceeds the available band")

    @property
    def rho0_db(self) -> float:
        return 10.0 * math.log10(self.rho0)


@dataclass(frozen=True)
class Geometry:
    B_max: float
    lambda_min: float
    lambda_b_min: Optional[float]
    lambda_b_max: Optional[float]
    corners: dict


def feasible_geometry(c: DesignConstraints, lam0: Optional[float] = None) -> Geometry:
    """Extent of the feasible (B, f_c) region and the corner points used by the designs.

    Corner keys: ``fl_fh`` (widest pulse), and with a fixed bandwidth
    ``b_fl``/``b_fh``; with ``lam0`` also ``lam0_fh`` and ``b_lam0``.
    """
    B_max = c.f_h - c.f_l
    corners = {"fl_fh": (B_max, 0.5 * (c.f_l + c.f_h))}
    lb_min = lb_max = None
    if c.fixed_b is not None:
        b = c.fixed_b
        lb_min = c.f_l / b + 0.5
        lb_max = c.f_h / b - 0.5
        corners["b_fl"] = (b, c.f_l + b / 2.0)
        corners["b_fh"] = (b, c.f_h - b / 2.0)
        if lam0 is not None:
            corners["b_lam0"] = (b, lam0 * b)
    if lam0 is not None:
        corners["lam0_fh"] = (2.0 * c.f_h / (2.0 * lam0 + 1.0),
                              2.0 * lam0 * c.f_h / (2.0 * lam0 + 1.0))
    return Geometry(B_max, 0.5 + c.f_l / B_max, lb_min, lb_max, corners)


def crlb_carrier(f_c: float, rho: float) -> float:
    """Carrier-dominated CRLB ``1 / (4 pi^2 f_c^2 rho)``."""
    return 1.0 / (4.0 * math.pi ** 2 * f_c ** 2 * rho)


def ecrlb_gaussian(B: float, rho: float) -> float:
    """Envelope CRLB of a Gaussian pulse of -10 dB bandwidth ``B``."""
    return 2.0 * _LN10 / (math.pi ** 2 * B ** 2 * rho)


@dataclass
class DesignSolution:
    """Chosen (B0, f_c0) with the regime reached and the predicted MSE.

    ``mse_point`` is set when the MSE is predicted as a value and
    ``mse_interval`` (lower, upper) when it is only bracketed.
    """

    B0: float
    f_c0: float
    lambda0: Optional[float]
    regime: str
    mse_point: Optional[float] = None
    mse_interval: Optional[tuple] = None

    def check(self, c: DesignConstraints, tol: float = 1e-6) -> None:
        slack = tol * c.f_h
        if self.f_c0 - self.B0 / 2.0 < c.f_l - slack or self.f_c0 + self.B0 / 2.0 > c.f_h + slack:
            raise AssertionError("design leaves the allowed band")
        if c.fixed_b is not None and abs(self.B0 - c.fixed_b) > slack:
            raise AssertionError("design bandwidth differs from the fixed bandwidth")

    @property
    def rmse(self) -> float:
        if self.mse_point is not None:
            return math.sqrt(self.mse_point)
        return math.sqrt(self.mse_interval[1])

    def to_dict(self) -> dict:
        out = {"B0_GHz": self.B0 / 1e9, "fc0_GHz": self.f_c0 / 1e9,
               "lambda0": self.lambda0, "regime": self.regime}
        if self.mse_point is not None:
            out["mse_ps2"] = float(self.mse_point) * 1e24
            out["rmse_ps"] = math.sqrt(self.mse_point) * 1e12
        else:
            lo, hi = self.mse_interval
            out["mse_interval_ps2"] = [float(lo) * 1e24, float(hi) * 1e24]
            out["rmse_ps"] = [math.sqrt(lo) * 1e12, math.sqrt(hi) * 1e12]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _lambda0(c: DesignConstraints, form: str) -> LambdaSolution:
    return lambda_at_asymptotic_threshold(c.rho0, form=form)


def design_free_bandwidth(c: DesignConstraints, *, form: str = "derived") -> DesignSolution:
    """Best (B, f_c) when the bandwidth is free inside the band.

    Below the begin-ambiguity threshold the widest pulse wins. Above it,
    the pulse is pushed to the IFBW ``lambda0`` at which the asymptotic
    threshold equals the available SNR, touching the upper band edge.
    """
    if c.fixed_b is not None:
        raise DomainError("use design_fixed_bandwidth for a fixed bandwidth")
    geo = feasible_geometry(c)
    B_max, f_mid = geo.corners["fl_fh"]
    am1_db = 10.0 * math.log10(rho_am1_analytic(acr_for_ifbw(4.0), alpha=c.alphas["am1"],
                                                form=form))
    r_db = c.rho0_db
    if r_db < am1_db - c.delta_db:
        # MSE between twice the envelope CRLB and the a priori MSE
        widest = PulseSpec.from_bandwidth(B_max, f_mid)
        return DesignSolution(B_max, f_mid, None, "below_begin_ambiguity",
                              mse_interval=(ecrlb_gaussian(B_max, c.rho0) * c.alphas["am1"],
                                            max_mse(design_setup(widest))))
    if r_db <= am1_db + c.delta_db:
        return DesignSolution(B_max, f_mid, None, "at_begin_ambiguity",
                              mse_point=ecrlb_gaussian(B_max, c.rho0))
    sol = _lambda0(c, form)
    lam0 = sol.lam
    if sol.status == "below_minimum" or lam0 < geo.lambda_min:
        return DesignSolution(B_max, f_mid, lam0, "between_ecrlb_and_crlb",
                              mse_interval=(crlb_carrier(f_mid, c.rho0),
                                            ecrlb_gaussian(B_max, c.rho0)))
    B0, f_c0 = feasible_geometry(c, lam0).corners["lam0_fh"]
    return DesignSolution(B0, f_c0, lam0, "crlb_achieved",
                          mse_point=crlb_carrier(f_c0, c.rho0))


def design_fixed_bandwidth(c: DesignConstraints, *, form: str = "derived") -> DesignSolution:
    """Best carrier for a fixed bandwidth ``b``: ``f_c = lambda0 b`` clamped to the band."""
    if c.fixed_b is None:
        raise DomainError("fixed bandwidth missing")
    b = c.fixed_b
    sol = _lambda0(c, form)
    lam0 = sol.lam
    geo = feasible_geometry(c, lam0)
    if sol.status == "below_minimum" or lam0 < geo.lambda_b_min:
        f_c0 = geo.corners["b_fl"][1]
        return DesignSolution(b, f_c0, lam0, "between_ecrlb_and_crlb",
                              mse_interval=(crlb_carrier(f_c0, c.rho0),
                                            ecrlb_gaussian(b, c.rho0)))
    if lam0 <= geo.lambda_b_max:
        f_c0 = lam0 * b
        return DesignSolution(b, f_c0, lam0, "crlb_achieved",
                              mse_point=crlb_carrier(f_c0, c.rho0))
    f_c0 = geo.corners["b_fh"][1]
    return DesignSolution(b, f_c0, lam0, "clamped_lambda_max",
                          mse_point=crlb_carrier(f_c0, c.rho0))


def max_rmse_gain(f_l: float, f_h: float, b: float, *, alpha_as: float = ALPHAS["as"]) -> float:
    """Largest RMSE improvement from moving a width-``b`` pulse across the band.

    Ratio of the CRLB RMSE at the lowest carrier to the RMSE ``sqrt(alpha_as c)``
    reached at the asymptotic threshold with the highest carrier.
    """
    lo = build_acr(PulseSpec.from_bandwidth(b, f_l + b / 2.0))
    hi = build_acr(PulseSpec.from_bandwidth(b, f_h - b / 2.0))
    return math.sqrt(hi.beta_s_sq / (alpha_as * lo.beta_s_sq))


def design_setup(p: PulseSpec, domain_tw=DOMAIN_TW) -> EstimationSetup:
    """A priori domain ``[k1 T_w, k2 T_w]`` around a true delay at 0."""
    return EstimationSetup(0.0, domain_tw[0] * p.T_w, domain_tw[1] * p.T_w)


def predicted_mse(B: float, f_c: float, rho: float, *, seed: int = 0,
                  domain_tw=DOMAIN_TW, **kwargs) -> float:
    """Numeric interval-estimation MSE of the Gaussian pulse (B, f_c)."""
    p = PulseSpec.from_bandwidth(B, f_c)
    a = build_acr(p)
    s = design_setup(p, domain_tw)
    return mse_num(a, s, local_maxima(a, s), rho, seed=seed, **kwargs)


@dataclass
class SearchResult:
    B1: float
    f_c1: float
    e1: float
    n_evaluated: int
    n_skipped: int

    @property
    def lambda1(self) -> float:
        return self.f_c1 / self.B1


def _grid_points(c: DesignConstraints, B_step: float, fc_step: float):
    tol = 1e-9 * c.f_h
    B_max = c.f_h - c.f_l
    Bs = B_step * np.arange(1, int(math.floor(B_max / B_step + 1e-9)) + 1)
    if c.fixed_b is not None:
        Bs = np.array([c.fixed_b])
    k_lo = int(math.floor(c.f_l / fc_step))
    k_hi = int(math.ceil(c.f_h / fc_step))
    fcs = fc_step * np.arange(k_lo, k_hi + 1)
    for B in Bs:
        for fc in fcs:
            if fc - B / 2.0 >= c.f_l - tol and fc + B / 2.0 <= c.f_h + tol:
                yield float(B), float(fc)


def exhaustive_search_reference(c: DesignConstraints, *, B_step: float = 0.2e9,
                                fc_step: float = 0.1e9, seed: int = 0,
                                domain_tw=DOMAIN_TW, rel_tol: float = 0.01) -> SearchResult:
    """Grid minimum of the numeric MSE over the feasible band triangle.

    Pulses whose interval partition exceeds the MVN dimension limit
    (IFBW above about 10) are skipped and counted. Ties go to the
    smallest B, then the smallest f_c.
    """
    best = None
    n_eval = n_skip = 0
    for B, fc in _grid_points(c, B_step, fc_step):
        p = PulseSpec.from_bandwidth(B, fc)
        a = build_acr(p)
        s = design_setup(p, domain_tw)
        I = local_maxima(a, s)
        if len(I) > MAX_DIM:
            n_skip += 1
            continue
        e = mse_num(a, s, I, c.rho0, seed=seed, rel_tol=rel_tol)
        n_eval += 1
        if best is None or e < best[2]:
            best = (B, fc, e)
    if best is None:
        raise InfeasibleError("no evaluable grid point inside the band")
    return SearchResult(best[0], best[1], best[2], n_eval, n_skip)
