"""Gaussian pulse models, their normalized autocorrelations and the interval
partitions used by the interval-estimation MSE approximation.

All quantities are SI (seconds, hertz). The normalized ACR is
``R(theta) = R_s(theta) / E_s``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

__all__ = [
    "ModelError",
    "PulseSpec",
    "AcrModel",
    "EstimationSetup",
    "IntervalSet",
    "gaussian_bandwidth",
    "gaussian_width",
    "flat_spectrum_mqbw",
    "build_acr",
    "sampled_acr",
    "local_maxima",
    "equal_split_count",
    "PRESETS",
    "load_preset",
]

_BW_FACTOR = 2.0 * math.sqrt(math.log(10.0) / math.pi)


class ModelError(ValueError):
    """Pulse/ACR model cannot support the requested operation."""


def gaussian_bandwidth(T_w: float) -> float:
    """-10 dB bandwidth of the Gaussian pulse ``exp(-2 pi t^2 / T_w^2)``."""
    return _BW_FACTOR / T_w


def gaussian_width(B: float) -> float:
    """Pulse width ``T_w`` giving a -10 dB bandwidth ``B``."""
    return _BW_FACTOR / B


def flat_spectrum_mqbw(B: float, f_c: float = 0.0) -> tuple[float, float]:
    """``(beta_s^2, beta_e^2)`` of a pulse with a flat spectrum of width ``B`` at ``f_c``.

    ``beta_e^2 = pi^2 B^2 / 3``; the carrier adds ``4 pi^2 f_c^2``.
    """
    beta_e_sq = math.pi ** 2 * B ** 2 / 3.0
    return beta_e_sq + 4.0 * math.pi ** 2 * f_c ** 2, beta_e_sq


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse, baseband ``exp(-2 pi t^2/T_w^2)`` or carrier-modulated."""

    kind: str
    T_w: float
    f_c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("baseband_gaussian", "passband_gaussian"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if not (self.T_w > 0 and math.isfinite(self.T_w)):
            raise ValueError("T_w must be positive")
        if self.f_c < 0:
            raise ValueError("f_c must be non-negative")
        if self.kind == "passband_gaussian" and self.f_c <= 0:
            raise ValueError("a passband pulse needs f_c > 0")
        if self.kind == "baseband_gaussian" and self.f_c != 0:
            raise ValueError("a baseband pulse has f_c = 0")

    @classmethod
    def from_bandwidth(cls, B: float, f_c: float = 0.0) -> "PulseSpec":
        kind = "passband_gaussian" if f_c > 0 else "baseband_gaussian"
        return cls(kind, gaussian_width(B), f_c)

    @classmethod
    def from_ifbw(cls, lam: float, B: float) -> "PulseSpec":
        """Passband pulse with bandwidth ``B`` and carrier ``lam * B``."""
        return cls.from_bandwidth(B, lam * B)


@dataclass(frozen=True)
class AcrModel:
    """Normalized ACR with its envelope and derivative closures.

    ``ifbw`` is ``f_c / B`` (0 for baseband). ``scale`` is a characteristic
    duration (the pulse width) used to size numerical grids. For passband
    models ``envelope`` holds the ACR of the baseband envelope pulse.
    """

    R: Callable
    e_R: Callable
    R_dot: Callable
    R_ddot: Callable
    E_s: float
    beta_s_sq: float
    beta_e_sq: float
    B: float
    f_c: float
    scale: float
    oscillating: bool
    envelope: Optional["AcrModel"] = field(default=None, repr=False)

    @property
    def ifbw(self) -> float:
        return self.f_c / self.B if self.f_c > 0 else 0.0


def _gaussian_closures(T_w: float):
    a = math.pi / T_w ** 2

    def R(theta):
        th = np.asarray(theta, dtype=float)
        return np.exp(-a * th * th)

    def R_dot(theta):
        th = np.asarray(theta, dtype=float)
        return -2.0 * a * th * np.exp(-a * th * th)

    def R_ddot(theta):
        th = np.asarray(theta, dtype=float)
        return (4.0 * a * a * th * th - 2.0 * a) * np.exp(-a * th * th)

    return R, R_dot, R_ddot


def build_acr(p: PulseSpec) -> AcrModel:
    """Analytic normalized ACR of a Gaussian pulse.

    Baseband: ``R(theta) = exp(-pi theta^2 / T_w^2)``, ``beta^2 = 2 pi / T_w^2``.
    Passband: ``R(theta) = e_R(theta) cos(2 pi f_c theta)`` with ``e_R`` the
    baseband ACR, hence ``beta_s^2 = beta_e^2 + 4 pi^2 f_c^2``.
    """
    R0, R0_dot, R0_ddot = _gaussian_closures(p.T_w)
    beta_e_sq = 2.0 * math.pi / p.T_w ** 2
    B = gaussian_bandwidth(p.T_w)
    E_base = p.T_w / 2.0
    base = AcrModel(
        R=R0, e_R=R0, R_dot=R0_dot, R_ddot=R0_ddot, E_s=E_base,
        beta_s_sq=beta_e_sq, beta_e_sq=beta_e_sq, B=B, f_c=0.0,
        scale=p.T_w, oscillating=False,
    )
    if p.kind == "baseband_gaussian":
        return base

    w = 2.0 * math.pi * p.f_c

    def R(theta):
        th = np.asarray(theta, dtype=float)
        return R0(th) * np.cos(w * th)

    def R_dot(theta):
        th = np.asarray(theta, dtype=float)
        return R0_dot(th) * np.cos(w * th) - w * R0(th) * np.sin(w * th)

    def R_ddot(theta):
        th = np.asarray(theta, dtype=float)
        c, s = np.cos(w * th), np.sin(w * th)
        return R0_ddot(th) * c - 2.0 * w * R0_dot(th) * s - w * w * R0(th) * c

    # energy of e_s(t) cos(2 pi f_c t), double-frequency term kept
    E_s = 0.25 * p.T_w * (1.0 + math.exp(-math.pi * (p.f_c * p.T_w) ** 2))
    return AcrModel(
        R=R, e_R=R0, R_dot=R_dot, R_ddot=R_ddot, E_s=E_s,
        beta_s_sq=beta_e_sq + w * w, beta_e_sq=beta_e_sq, B=B, f_c=p.f_c,
        scale=p.T_w, oscillating=True, envelope=base,
    )


def _minus10db_bandwidth(theta: np.ndarray, values: np.ndarray) -> float:
    # energy spectrum = Fourier transform of the ACR
    h = theta[1] - theta[0]
    n = 1 << int(math.ceil(math.log2(8 * theta.size)))
    spec = np.abs(np.fft.rfft(np.fft.ifftshift(_pad_centered(values, n)))) * h
    freqs = np.fft.rfftfreq(n, h)
    k = int(np.argmax(spec))
    level = 0.1 * spec[k]
    hi = k
    while hi + 1 < spec.size and spec[hi + 1] >= level:
        hi += 1
    lo = k
    while lo - 1 >= 0 and spec[lo - 1] >= level:
        lo -= 1
    f_hi = _crossing(freqs, spec, hi, hi + 1, level)
    if lo == 0:
        return 2.0 * f_hi
    return f_hi - _crossing(freqs, spec, lo - 1, lo, level)


def _pad_centered(values: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    m = values.size
    start = n // 2 - m // 2
    out[start:start + m] = values
    return out


def _crossing(freqs, spec, i, j, level):
    if j >= spec.size:
        return freqs[-1]
    f0, f1, s0, s1 = freqs[i], freqs[j], spec[i], spec[j]
    if s1 == s0:
        return f0
    return f0 + (level - s0) * (f1 - f0) / (s1 - s0)


def sampled_acr(theta, values, *, f_c: float = 0.0, envelope_values=None,
                E_s: float = 1.0) -> AcrModel:
    """ACR model from samples on a uniform symmetric grid.

    Fallback for pulse shapes without closed forms: a cubic spline in
    ``|theta|`` (zero slope at the origin) supplies ``R`` and its
    derivatives. ``values`` must be normalized so that ``R(0) = 1``.
    Outside the sampled span the ACR is taken as 0.
    """
    theta = np.asarray(theta, dtype=float)
    values = np.asarray(values, dtype=float)
    if theta.ndim != 1 or theta.shape != values.shape or theta.size < 9:
        raise ModelError("need matching 1-D theta/values with at least 9 samples")
    steps = np.diff(theta)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
        raise ModelError("sampled ACR needs a uniform ascending grid")
    if not np.isclose(theta[0], -theta[-1], rtol=0, atol=1e-9 * steps.mean()):
        raise ModelError("sampled ACR grid must be symmetric about 0")
    i0 = int(np.argmin(np.abs(theta)))
    if abs(values[i0] - 1.0) > 1e-9:
        raise ModelError("sampled ACR must satisfy R(0) = 1")

    def _spline(vals):
        half = vals[i0:]
        return CubicSpline(theta[i0:], half, bc_type=((1, 0.0), "not-a-knot"))

    span = theta[-1]

    def _closures(spl):
        d1, d2 = spl.derivative(1), spl.derivative(2)

        def R(th):
            u = np.abs(np.asarray(th, dtype=float))
            return np.where(u <= span, spl(np.minimum(u, span)), 0.0)

        def R_dot(th):
            t = np.asarray(th, dtype=float)
            u = np.abs(t)
            return np.where(u <= span, np.sign(t) * d1(np.minimum(u, span)), 0.0)

        def R_ddot(th):
            u = np.abs(np.asarray(th, dtype=float))
            return np.where(u <= span, d2(np.minimum(u, span)), 0.0)

        return R, R_dot, R_ddot, -float(d2(0.0))

    R, R_dot, R_ddot, beta_s_sq = _closures(_spline(values))
    B = _minus10db_bandwidth(theta, values)
    scale = 1.0 / B
    if envelope_values is None:
        if f_c > 0:
            raise ModelError("a sampled passband ACR needs its envelope samples")
        return AcrModel(R=R, e_R=R, R_dot=R_dot, R_ddot=R_ddot, E_s=E_s,
                        beta_s_sq=beta_s_sq, beta_e_sq=beta_s_sq, B=B, f_c=0.0,
                        scale=scale, oscillating=False)
    env_values = np.asarray(envelope_values, dtype=float)
    eR, eR_dot, eR_ddot, beta_e_sq = _closures(_spline(env_values))
    B_env = _minus10db_bandwidth(theta, env_values)
    envelope = AcrModel(R=eR, e_R=eR, R_dot=eR_dot, R_ddot=eR_ddot, E_s=E_s,
                        beta_s_sq=beta_e_sq, beta_e_sq=beta_e_sq, B=B_env, f_c=0.0,
                        scale=1.0 / B_env, oscillating=False)
    return AcrModel(R=R, e_R=eR, R_dot=R_dot, R_ddot=R_ddot, E_s=E_s,
                    beta_s_sq=beta_s_sq, beta_e_sq=beta_e_sq, B=B, f_c=f_c,
                    scale=1.0 / B_env, oscillating=f_c > 0, envelope=envelope)


@dataclass(frozen=True)
class EstimationSetup:
    """True delay ``Theta`` and a priori domain ``[Theta1, Theta2]`` (seconds)."""

    Theta: float
    Theta1: float
    Theta2: float

    def __post_init__(self):
        if not self.Theta2 > self.Theta1:
            raise ValueError("need Theta1 < Theta2")
        if not self.Theta1 <= self.Theta <= self.Theta2:
            raise ValueError("Theta must lie in [Theta1, Theta2]")

    @property
    def T(self) -> float:
        return self.Theta2 - self.Theta1

    def gamma(self, B: float) -> float:
        """A priori time-bandwidth product ``T * B``."""
        return self.T * B

    def shifted(self, offset: float) -> "EstimationSetup":
        return EstimationSetup(self.Theta + offset, self.Theta1 + offset, self.Theta2 + offset)


@dataclass(frozen=True)
class IntervalSet:
    """Partition of the a priori domain into intervals ``[d_n, d_{n+1})``.

    ``testpoints[n]`` lies in interval ``n``; ``index0`` is the interval that
    holds the true delay (its testpoint equals ``Theta``). ``r_dot`` and
    ``r_ddot`` are the normalized ACR derivatives at ``testpoint - Theta``.
    """

    boundaries: np.ndarray
    testpoints: np.ndarray
    r_dot: np.ndarray
    r_ddot: np.ndarray
    mode: str
    index0: int

    def __post_init__(self):
        d, t = self.boundaries, self.testpoints
        if d.size != t.size + 1:
            raise ValueError("need one more boundary than testpoints")
        if np.any(np.diff(d) <= 0):
            raise ValueError("boundaries must be strictly increasing")
        if np.any(t < d[:-1]) or np.any(t > d[1:]):
            raise ValueError("each testpoint must lie in its interval")

    def __len__(self) -> int:
        return self.testpoints.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.boundaries)


def _derivative_roots(a: AcrModel, lo: float, hi: float):
    """Local maxima and minima of ``R`` on ``[lo, hi]`` (lag coordinates)."""
    step = a.scale / 200.0
    if a.f_c > 0:
        step = min(step, 1.0 / (32.0 * a.f_c))
    n = int(math.ceil((hi - lo) / step)) + 1
    u = np.linspace(lo, hi, n)
    du = a.R_dot(u)
    maxima, minima = [0.0], []
    guard = 0.5 * (u[1] - u[0])
    for i in range(n - 1):
        s0, s1 = du[i], du[i + 1]
        if s0 == 0.0 or s0 * s1 >= 0.0:
            continue
        root = brentq(lambda x: float(a.R_dot(x)), u[i], u[i + 1], xtol=1e-15 * a.scale)
        if s0 > 0.0 > s1:
            if abs(root) > guard:
                maxima.append(root)
        else:
            minima.append(root)
    # exact zeros landing on grid points
    for i in np.flatnonzero(du == 0.0):
        if 0 < i < n - 1 and abs(u[i]) > guard:
            if du[i - 1] > 0.0 > du[i + 1]:
                maxima.append(u[i])
            elif du[i - 1] < 0.0 < du[i + 1]:
                minima.append(u[i])
    return np.array(sorted(maxima)), np.array(sorted(minima))


def equal_split_count(a: AcrModel, setup: EstimationSetup) -> int:
    """Odd interval count whose width is closest to ``pi / (4 beta_s)``.

    That width puts the centres of the two intervals next to the true delay
    at ``Theta -+ pi/(4 beta_s)``, the same offsets the three-interval
    analytic approximation uses for non-oscillating ACRs.
    """
    width = math.pi / (4.0 * math.sqrt(a.beta_s_sq))
    n = max(1, int(round(setup.T / width)))
    if n % 2 == 0:
        n += 1 if setup.T / width >= n else -1
    return max(n, 1)


def local_maxima(a: AcrModel, setup: EstimationSetup, *, n_intervals: int = 8,
                 mode: Optional[str] = None) -> IntervalSet:
    """Interval partition of ``[Theta1, Theta2]`` with one testpoint per interval.

    ``mode='oscillating'`` (default for carrier-modulated ACRs) puts a
    testpoint at every local maximum of ``R(theta - Theta)`` inside the
    domain and the interval boundaries at the local minima between adjacent
    maxima. ``mode='non_oscillating'`` splits the domain into
    ``n_intervals`` equal intervals with testpoints at their centres.
    In both modes the interval containing ``Theta`` uses ``Theta`` as its
    testpoint.
    """
    if mode is None:
        mode = "oscillating" if a.oscillating else "non_oscillating"
    Th, lo, hi = setup.Theta, setup.Theta1, setup.Theta2

    if mode == "oscillating":
        maxima, minima = _derivative_roots(a, lo - Th, hi - Th)
        maxima = maxima[(maxima >= lo - Th) & (maxima <= hi - Th)]
        if maxima.size == 0:
            raise ModelError("no local maxima of the ACR inside the a priori domain")
        cuts = []
        for m0, m1 in zip(maxima[:-1], maxima[1:]):
            between = minima[(minima > m0) & (minima < m1)]
            if between.size == 0:
                raise ModelError("no local minimum between adjacent maxima")
            cuts.append(between[np.argmin(a.R(between))])
        boundaries = np.concatenate(([lo], np.asarray(cuts) + Th, [hi]))
        lags = maxima
        index0 = int(np.flatnonzero(maxima == 0.0)[0])
    elif mode == "non_oscillating":
        if n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        boundaries = np.linspace(lo, hi, n_intervals + 1)
        index0 = int(np.clip(np.searchsorted(boundaries, Th, side="right") - 1,
                             0, n_intervals - 1))
        centres = 0.5 * (boundaries[:-1] + boundaries[1:])
        centres[index0] = Th
        lags = centres - Th
    else:
        raise ValueError(f"unknown interval mode {mode!r}")

    lags = np.asarray(lags, dtype=float)
    return IntervalSet(
        boundaries=np.asarray(boundaries, dtype=float),
        testpoints=lags + Th,
        r_dot=np.asarray(a.R_dot(lags), dtype=float),
        r_ddot=np.asarray(a.R_ddot(lags), dtype=float),
        mode=mode,
        index0=index0,
    )


# Presets use the config-file keys and units (ns, GHz).
PRESETS = {
    "baseband": {"kind": "baseband_gaussian", "T_w_ns": 1.0, "f_c_GHz": 0.0,
                 "Theta_ns": 0.0, "Theta1_ns": -2.0, "Theta2_ns": 2.0},
    "passband": {"kind": "passband_gaussian", "T_w_ns": 2.0, "f_c_GHz": 6.85,
                 "Theta_ns": 0.0, "Theta1_ns": -4.0, "Theta2_ns": 3.0},
    "fcc": {"kind": "passband_gaussian", "T_w_ns": round(gaussian_width(7.5e9) * 1e9, 6),
            "f_c_GHz": 6.85, "Theta_ns": 0.0,
            "Theta1_ns": round(-2.0 * gaussian_width(7.5e9) * 1e9, 6),
            "Theta2_ns": round(1.5 * gaussian_width(7.5e9) * 1e9, 6)},
}


def preset_from_dict(cfg: dict) -> tuple[PulseSpec, EstimationSetup]:
    """Build (pulse, setup) from a mapping with the preset keys."""
    missing = {"kind", "T_w_ns", "Theta1_ns", "Theta2_ns"} - set(cfg)
    if missing:
        raise ValueError(f"preset is missing keys: {sorted(missing)}")
    kind = cfg["kind"]
    if kind in ("baseband", "passband"):
        kind += "_gaussian"
    pulse = PulseSpec(kind, float(cfg["T_w_ns"]) * 1e-9, float(cfg.get("f_c_GHz", 0.0)) * 1e9)
    setup = EstimationSetup(float(cfg.get("Theta_ns", 0.0)) * 1e-9,
                            float(cfg["Theta1_ns"]) * 1e-9, float(cfg["Theta2_ns"]) * 1e-9)
    return pulse, setup


def load_preset(name_or_path) -> tuple[PulseSpec, EstimationSetup]:
    """Built-in preset by name, or a JSON file holding the preset keys."""
    key = str(name_or_path)
    if key in PRESETS:
        return preset_from_dict(PRESETS[key])
    path = Path(key)
    if not path.is_file():
        raise KeyError(f"unknown preset {key!r} (built-ins: {', '.join(PRESETS)})")
    return preset_from_dict(json.loads(path.read_text()))
