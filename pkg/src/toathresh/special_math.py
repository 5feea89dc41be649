"""Scalar special functions: Gaussian tail, its large-argument approximation,
the lower real branch of Lambert W and the valley-filling operator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

__all__ = [
    "DomainError",
    "ValleyFilledFn",
    "q_function",
    "q_approx",
    "lambert_w_m1",
    "valley_fill",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_E = math.exp(-1.0)


class DomainError(ValueError):
    """Argument outside the domain where a function is defined."""


def q_function(x):
    """Upper-tail probability of the standard normal, Q(x) = P{Z > x}.

    Evaluated through ``erfc`` so that deep tails keep full relative precision.
    Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("q_function requires finite input")
    out = 0.5 * erfc(arr / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def q_approx(x):
    """Large-argument approximation Q(x) ~ exp(-x^2/2) / (x sqrt(2 pi)).

    It is an upper bound of Q for every x > 0:
    (1/x - 1/x^3) phi(x) < Q(x) < phi(x)/x.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("q_approx is only defined for finite x > 0")
    out = _INV_SQRT_2PI * np.exp(-0.5 * arr * arr) / arr
    return float(out) if out.ndim == 0 else out


def _halley_step(w: float, h: float) -> float:
    ew = math.exp(w)
    f = w * ew - h
    wp1 = w + 1.0
    # w <= -1 on this branch; wp1 == 0 only at the branch point
    if wp1 == 0.0:
        return 0.0
    return f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))


def lambert_w_m1(h: float, *, rtol: float = 1e-12, max_iter: int = 64) -> float:
    """Branch -1 of the Lambert W function.

    Returns the real ``w <= -1`` satisfying ``w * exp(w) = h`` for
    ``h`` in ``[-1/e, 0)``.

    Parameters
    ----------
    h : float
        Argument, must lie in ``[-1/e, 0)``.
    rtol : float
        Target relative residual ``|w e^w - h| / |h|``.

    Returns
    -------
    float
        ``w <= -1``.

    Raises
    ------
    DomainError
        If ``h`` is outside ``[-1/e, 0)``.
    """
    h = float(h)
    # a few ulps of slack so that -1/e computed in floating point is accepted
    if not math.isfinite(h) or h >= 0.0 or h < -_INV_E * (1.0 + 4e-16):
        raise DomainError(f"Lambert W branch -1 undefined for h={h!r}")
    if h <= -_INV_E:
        return -1.0

    if h < -0.25:
        # series about the branch point
        p = -math.sqrt(2.0 * (1.0 + math.e * h))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    else:
        l1 = math.log(-h)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    w = min(w, -1.0)

    for _ in range(max_iter):
        dw = _halley_step(w, h)
        w_new = w - dw
        if not math.isfinite(w_new) or w_new > -1.0:
            break
        w = w_new
        if abs(dw) <= 1e-15 * abs(w):
            break
    if abs(w * math.exp(w) - h) <= rtol * abs(h):
        return w
    return _bisect_w_m1(h, rtol)


def _bisect_w_m1(h: float, rtol: float) -> float:
    # w e^w is strictly decreasing on (-inf, -1]
    lo = -1.0
    hi_mag = 2.0
    while hi_mag * math.exp(-hi_mag) > -h:
        hi_mag *= 2.0
    a, b = -hi_mag, lo
    for _ in range(400):
        mid = 0.5 * (a + b)
        f = mid * math.exp(mid) - h
        if f > 0.0:
            b = mid
        else:
            a = mid
        if abs(f) <= rtol * abs(h) or b - a <= 1e-16 * abs(mid):
            return mid
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ValleyFilledFn:
    """Sampled function after valley filling; ``value`` is non-increasing."""

    xi: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.xi)


def valley_fill(values, xi=None) -> ValleyFilledFn:
    """Suffix maximum ``V{f}(xi_i) = max_{j >= i} f(xi_j)`` on an ascending grid.

    Parameters
    ----------
    values : array_like
        Samples of ``f`` on the grid.
    xi : array_like, optional
        Ascending abscissae. Defaults to ``0, 1, ..., n-1``.
    """
    f = np.asarray(values, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise DomainError("valley_fill needs a non-empty 1-D sample grid")
    if xi is None:
        grid = np.arange(f.size, dtype=float)
    else:
        grid = np.asarray(xi, dtype=float)
        if grid.shape != f.shape:
            raise DomainError("xi and values must have the same length")
        if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
            raise DomainError("valley_fill grid must be strictly ascending")
    filled = np.maximum.accumulate(f[::-1])[::-1]
    return ValleyFilledFn(xi=grid, value=filled)
