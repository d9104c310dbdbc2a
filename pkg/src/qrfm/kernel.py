"""Random Fourier features and the kernel ridge regression dual.

With features ``phi(x)_j = exp(-i w_j x) / sqrt(M)`` and ``Z`` the matrix whose
rows are ``phi(x_l)^T``, the approximate kernel is ``K = Z Z^H``. A dual
solution ``a`` maps to primal coefficients ``beta = Z^H a`` and both give the
same predictions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class RffBasis:
    """Frequencies ``w_0 .. w_{M-1}`` drawn from ``p`` (standard Gaussian by default)."""

    frequencies: np.ndarray = field(repr=False)
    seed: int | None = None
    real: bool = False

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float)
        object.__setattr__(self, "frequencies", w)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("frequencies must be a nonempty 1-D array")

    @property
    def M(self) -> int:
        """Feature count: ``2 * len(frequencies)`` for the real cos/sin split."""
        return 2 * self.frequencies.size if self.real else self.frequencies.size

    @classmethod
    def sample(cls, m: int, seed: int = 0, scale: float = 1.0, real: bool = False) -> "RffBasis":
        """``2**m`` frequencies from ``N(0, 1/scale**2)``; the real split keeps M = 2**m."""
        M = 2 ** m
        count = M // 2 if real else M
        if count < 1:
            raise ValueError("real features need m ≥ 1")
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal(count) / scale, seed, real)


def gaussian_kernel(x, y, scale: float = 1.0) -> np.ndarray:
    """``exp(-(x - y)^2 / (2 scale^2))`` for all pairs."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = x[:, None] - y[None, :]
    return np.exp(-0.5 * (d / scale) ** 2)


def rff_features(basis: RffBasis, x) -> np.ndarray:
    """Feature rows for each point; a scalar ``x`` gives one vector.

    Complex: ``exp(-i w_j x) / sqrt(M)``. Real split: ``[cos(w x), sin(w x)] / sqrt(M / 2)``
    normalized the same way, so ``phi(x)^H phi(x') = mean_j cos(w_j (x - x'))``.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    arg = np.outer(x, basis.frequencies)
    if basis.real:
        z = np.hstack([np.cos(arg), np.sin(arg)]) / np.sqrt(basis.frequencies.size)
    else:
        z = np.exp(-1j * arg) / np.sqrt(basis.frequencies.size)
    return z[0] if scalar else z


def kernel_approx(basis: RffBasis, points) -> np.ndarray:
    """``K = Z Z^H`` over the given points."""
    z = rff_features(basis, np.atleast_1d(points))
    return z @ z.conj().T


def krr_dual_solve(K: np.ndarray, targets: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Solve ``(K + ridge I) a = targets``.

    A Cholesky solve is tried first. With ``ridge = 0`` and a singular
    ``K`` the minimum-norm least-squares solution is returned with a warning.
    """
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    K = np.asarray(K)
    y = np.asarray(targets)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise ValueError("K must be square and match the target length")
    sys = K + ridge * np.eye(K.shape[0])
    try:
        c = scipy.linalg.cho_factor(sys)
        a = scipy.linalg.cho_solve(c, y)
        if np.linalg.norm(sys @ a - y) <= 1e-8 * max(1.0, np.linalg.norm(y)):
            return a
    except np.linalg.LinAlgError:
        pass
    if ridge > 0:
        return np.linalg.solve(sys, y)
    warnings.warn("kernel matrix is singular; returning the minimum-norm solution", RuntimeWarning,
                  stacklevel=2)
    return np.linalg.lstsq(sys, y, rcond=None)[0]


def dual_to_primal(Z: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """``beta = Z^H a``, so that ``phi(x)^T beta = sum_l a_l k(x, x_l)``."""
    Z = np.asarray(Z)
    alpha = np.asarray(alpha)
    if Z.shape[0] != alpha.shape[0]:
        raise ValueError("one dual coefficient per training point is required")
    return Z.conj().T @ alpha


def predict_primal(basis: RffBasis, beta: np.ndarray, x) -> np.ndarray:
    return rff_features(basis, np.atleast_1d(x)) @ beta


def predict_dual(basis: RffBasis, alpha: np.ndarray, x_train, x) -> np.ndarray:
    """``sum_l a_l k(x, x_l)`` with the approximate kernel ``phi(x)^T conj(phi(x_l))``."""
    zt = rff_features(basis, np.atleast_1d(x))
    zl = rff_features(basis, np.atleast_1d(x_train))
    return (zt @ zl.conj().T) @ alpha


def kernel_error(basis: RffBasis, points, scale: float = 1.0) -> float:
    """Max-entry error of ``K`` against the exact Gaussian kernel."""
    pts = np.atleast_1d(points)
    return float(np.max(np.abs(kernel_approx(basis, pts) - gaussian_kernel(pts, pts, scale))))


__all__ = [
    "RffBasis", "gaussian_kernel", "rff_features", "kernel_approx", "krr_dual_solve",
    "dual_to_primal", "predict_primal", "predict_dual", "kernel_error",
]
