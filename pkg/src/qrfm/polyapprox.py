"""Polynomial approximations of activation functions.

``sin(t x)`` and ``cos(t x)`` use the truncated Jacobi–Anger expansion with
Bessel coefficients. Other activations (tanh) get a Chebyshev interpolant
whose degree is chosen by a grid check.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .constants import BESSEL_MAX_ARG, BESSEL_MAX_ORDER, SUP_GRID_POINTS
from .qsvt import Polynomial, _cheb_interpolate, _clenshaw, sup_grid

Kind = Literal["sin", "cos"]


def bessel_j_all(nmax: int, t: float) -> np.ndarray:
    """``J_0(t) .. J_nmax(t)`` by Miller's backward recurrence.

    The recurrence ``J_{k-1} = (2k/t) J_k - J_{k+1}`` is run downward from a
    start order well above ``max(nmax, |t|)`` and normalized with
    ``J_0 + 2 sum_k J_{2k} = 1``.
    """
    if nmax < 0:
        raise ValueError("order must be nonnegative")
    out = np.zeros(nmax + 1)
    if t == 0.0:
        out[0] = 1.0
        return out
    x = abs(t)
    top = max(nmax, int(x)) + 20 + int(math.sqrt(40.0 * max(nmax, int(x), 1)))
    top += top % 2
    j_next, j_cur = 0.0, 1e-300
    vals = np.zeros(top + 1)
    vals[top] = j_cur
    norm = 0.0
    for k in range(top, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        vals[k - 1] = j_cur
        if abs(j_cur) > 1e250:
            vals[k - 1:] *= 1e-250
            j_next *= 1e-250
            j_cur *= 1e-250
    norm = vals[0] + 2.0 * np.sum(vals[2::2])
    vals /= norm
    out[:] = vals[: nmax + 1]
    if t < 0:
        out[1::2] *= -1.0
    return out


def bessel_j(order: int, t: float) -> float:
    """Bessel function of the first kind ``J_order(t)``, integer order."""
    if not 0 <= order <= BESSEL_MAX_ORDER:
        raise ValueError(f"order must lie in [0, {BESSEL_MAX_ORDER}]")
    if not abs(t) <= BESSEL_MAX_ARG:
        raise ValueError(f"|t| must be at most {BESSEL_MAX_ARG}")
    return float(bessel_j_all(order, t)[order])


def growth_r(t: float, eps: float) -> int:
    """Smallest integer ``r ≥ t`` with ``(t / r)**r ≤ eps``."""
    t = abs(t)
    if t == 0.0:
        return 0
    r = max(1, math.ceil(t))
    while r * (math.log(t) - math.log(r)) > math.log(eps):
        r += 1
    return r


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0 / math.e:
        raise ValueError("eps must lie in (0, 1/e)")


@dataclass(frozen=True)
class TrigApproxSpec:
    """Truncation data for ``cos(t x)`` or ``sin(t x)`` at sup error ``eps``."""

    t: float
    eps: float
    kind: Kind = "sin"

    def __post_init__(self):
        _check_eps(self.eps)
        if self.kind not in ("sin", "cos"):
            raise ValueError("kind must be 'sin' or 'cos'")
        if not np.isfinite(self.t):
            raise ValueError("t must be finite")

    @property
    def R(self) -> int:
        return growth_r(math.e * abs(self.t) / 2.0, 5.0 * self.eps / 4.0) // 2

    @property
    def degree(self) -> int:
        return 2 * self.R if self.kind == "cos" else 2 * self.R + 1


def jacobi_anger(spec: TrigApproxSpec) -> Polynomial:
    """Truncated Jacobi–Anger series in the Chebyshev basis.

    cos: ``J_0(t) + 2 sum_{k=1}^R (-1)^k J_{2k}(t) T_{2k}``;
    sin: ``2 sum_{k=0}^R (-1)^k J_{2k+1}(t) T_{2k+1}``.
    """
    R = spec.R
    jv = bessel_j_all(2 * R + 1, spec.t)
    coef = np.zeros(spec.degree + 1)
    signs = (-1.0) ** np.arange(R + 1)
    if spec.kind == "cos":
        coef[0::2] = 2.0 * signs * jv[0 : 2 * R + 1 : 2]
        coef[0] = jv[0]
        parity = "even"
    else:
        coef[1::2] = 2.0 * signs * jv[1 : 2 * R + 2 : 2]
        parity = "odd"
    peak = float(np.max(np.abs(_clenshaw(coef, sup_grid()))))
    return Polynomial(coef, parity, max(peak, 0.0))


def degree_for_eps(t: float, eps: float, kind: Kind = "sin") -> int:
    """Degree of the Jacobi–Anger polynomial for ``(t, eps)``."""
    return TrigApproxSpec(t, eps, kind).degree


def trig_sup_error(p: Polynomial, t: float, kind: Kind, points: int = SUP_GRID_POINTS) -> float:
    x = sup_grid(points)
    ref = np.sin(t * x) if kind == "sin" else np.cos(t * x)
    return float(np.max(np.abs(_clenshaw(p.coefficients, x) - ref)))


def chebyshev_fit(f: Callable[[np.ndarray], np.ndarray], eps: float, parity: str = "none",
                  max_degree: int = 4001) -> Polynomial:
    """Chebyshev interpolant of ``f`` with grid sup error ≤ ``eps``.

    The degree is grown geometrically and then bisected to the smallest value
    passing the check on a 10⁴-point grid.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = sup_grid()
    ref = f(x)

    def fit(d):
        c = _cheb_interpolate(f, d)
        if parity == "odd":
            c[0::2] = 0.0
        elif parity == "even":
            c[1::2] = 0.0
        return c, float(np.max(np.abs(_clenshaw(c, x) - ref)))

    step = 2 if parity in ("odd", "even") else 1
    lo = 1 if parity == "odd" else 0
    hi = lo
    coef, err = fit(hi)
    while err > eps:
        if hi >= max_degree:
            raise ValueError(f"no interpolant of degree ≤ {max_degree} reaches {eps:.3g}")
        lo = hi
        hi = min(max_degree, max(hi * 2, hi + step))
        if parity == "odd" and hi % 2 == 0:
            hi += 1
        if parity == "even" and hi % 2:
            hi += 1
        coef, err = fit(hi)
    # bisect between the last failing and first passing degree
    while hi - lo > step:
        mid = (lo + hi) // 2
        if parity == "odd" and mid % 2 == 0:
            mid += 1
        if parity == "even" and mid % 2:
            mid += 1
        if mid >= hi:
            break
        c_mid, e_mid = fit(mid)
        if e_mid <= eps:
            hi, coef = mid, c_mid
        else:
            lo = mid
    peak = float(np.max(np.abs(_clenshaw(coef, x))))
    return Polynomial(coef, parity if parity in ("odd", "even") else "none", peak)


def activation_polynomial(activation: str, t: float, eps: float) -> Polynomial:
    """Polynomial for ``sigma(t y)`` on ``y ∈ [-1, 1]``, scaled to ``|P| ≤ 1``.

    sin/cos use Jacobi–Anger at ``eps / 2`` then divide by ``1 + eps / 2``;
    tanh uses :func:`chebyshev_fit`.
    """
    if activation in ("sin", "cos"):
        p = jacobi_anger(TrigApproxSpec(t, eps / 2.0, activation))
        return p.scaled(1.0 / (1.0 + eps / 2.0))
    if activation == "tanh":
        p = chebyshev_fit(lambda y: np.tanh(t * y), eps / 2.0, parity="odd")
        return p.scaled(1.0 / (1.0 + eps / 2.0))
    raise ValueError(f"unsupported activation {activation!r}")


@functools.lru_cache(maxsize=256)
def activation_degree(activation: str, t: float, eps: float) -> int:
    if activation in ("sin", "cos"):
        return degree_for_eps(t, eps / 2.0, activation)
    return activation_polynomial(activation, t, eps).degree


__all__ = [
    "bessel_j", "bessel_j_all", "growth_r",
    "TrigApproxSpec", "jacobi_anger", "degree_for_eps", "trig_sup_error",
    "chebyshev_fit", "activation_polynomial", "activation_degree",
]
