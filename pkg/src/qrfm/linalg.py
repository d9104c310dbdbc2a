"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` (or real
arrays that promote cleanly). Two routes exist for the decompositions: the
from-scratch Jacobi solvers in this module and LAPACK through numpy. LAPACK is
the default because the experiment-scale dilations are 512x512 and larger;
the Jacobi routes are kept as an independent implementation and are exercised
against LAPACK in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .constants import HERMITIAN_TOL, RECONSTRUCTION_TOL

Method = Literal["lapack", "jacobi"]


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class NotHermitianError(ValueError):
    """Raised when a matrix required to be Hermitian is not."""

    def __init__(self, deviation: float):
        super().__init__(f"matrix is not Hermitian: max |H - H^dagger| = {deviation:.3e}")
        self.deviation = deviation


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a 2-D complex array with finite entries."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    arr = arr.astype(complex, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def matmul_kron_dagger(a, b=None, mode: str = "product") -> np.ndarray:
    """Combine matrices by ``mode``: ``"product"`` (a @ b), ``"kron"`` (a ⊗ b)
    or ``"adjoint"`` (a^dagger; ``b`` is ignored)."""
    a = as_matrix(a, "a")
    if mode == "adjoint":
        return a.conj().T
    b = as_matrix(b, "b")
    if mode == "product":
        if a.shape[1] != b.shape[0]:
            raise DimensionError(f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ")
        return a @ b
    if mode == "kron":
        return np.kron(a, b)
    raise ValueError(f"unknown mode {mode!r}; expected 'product', 'kron' or 'adjoint'")


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def hermitian_deviation(h) -> float:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h - h.conj().T)))


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    return hermitian_deviation(h) <= tol


def relative_residual(a, b) -> float:
    """‖a - b‖_F / max(‖b‖_F, tiny)."""
    denom = max(np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / denom)


@dataclass(frozen=True)
class EigDecomposition:
    """Hermitian eigendecomposition ``h = V diag(eigenvalues) V^dagger``.

    Eigenvalues are real and ascending; eigenvectors are the columns of ``V``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class SvdDecomposition:
    """Thin SVD ``a = U diag(singular_values) V^dagger`` with descending values."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.conj().T


# --------------------------------------------------------------------------
# Jacobi solvers


def _jacobi_eigh(h: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi for complex Hermitian matrices."""
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0.0:
        return np.real(np.diag(a)).copy(), v
    tol = 0.1 * np.finfo(float).eps * scale
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= tol * 1e-3:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * mag, app - aqq)
                c, s = np.cos(theta), np.sin(theta)
                # G = diag(1, conj(phase)) @ [[c, -s], [s, c]]
                g00, g01 = c, -s
                g10, g11 = np.conj(phase) * s, np.conj(phase) * c
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = colp * g00 + colq * g10
                a[:, q] = colp * g01 + colq * g11
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = np.conj(g00) * rowp + np.conj(g10) * rowq
                a[q, :] = np.conj(g01) * rowp + np.conj(g11) * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = vp * g00 + vq * g10
                v[:, q] = vp * g01 + vq * g11
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the columns of ``u`` not flagged in ``keep`` with an orthonormal
    completion of the kept columns."""
    rows, cols = u.shape
    out = u.copy()
    basis = [out[:, k] for k in range(cols) if keep[k]]
    fill = [k for k in range(cols) if not keep[k]]
    e = 0
    for k in fill:
        while e < rows:
            cand = np.zeros(rows, dtype=complex)
            cand[e] = 1.0
            e += 1
            for b in basis:
                cand -= (b.conj() @ cand) * b
            for b in basis:  # second pass for stability
                cand -= (b.conj() @ cand) * b
            nrm = np.linalg.norm(cand)
            if nrm > 1e-8:
                cand /= nrm
                basis.append(cand)
                out[:, k] = cand
                break
    return out


def _jacobi_svd_tall(a: np.ndarray, max_sweeps: int = 60):
    """One-sided (Hestenes) Jacobi on the columns of a tall matrix."""
    work = np.array(a, dtype=complex)
    rows, cols = work.shape
    v = np.eye(cols, dtype=complex)
    tol = np.finfo(float).eps * max(rows, 1)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                ap = work[:, p].copy()
                aq = work[:, q].copy()
                alpha = np.real(ap.conj() @ ap)
                beta = np.real(aq.conj() @ aq)
                gamma = ap.conj() @ aq
                g = abs(gamma)
                if g == 0.0 or g <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                phase = gamma / g
                zeta = (beta - alpha) / (2.0 * g)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                aq_ph = aq * np.conj(phase)
                work[:, p] = c * ap - s * aq_ph
                work[:, q] = s * ap + c * aq_ph
                vp = v[:, p].copy()
                vq_ph = v[:, q] * np.conj(phase)
                v[:, p] = c * vp - s * vq_ph
                v[:, q] = s * vp + c * vq_ph
        if not rotated:
            break
    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    v = v[:, order]
    floor = (sigma[0] if sigma.size else 0.0) * np.finfo(float).eps * max(rows, cols)
    keep = sigma > max(floor, np.finfo(float).tiny)
    u = np.zeros_like(work)
    u[:, keep] = work[:, keep] / sigma[keep]
    if not np.all(keep):
        u = _complete_basis(u, keep)
    return u, sigma, v


def _jacobi_svd(a: np.ndarray):
    rows, cols = a.shape
    if rows >= cols:
        return _jacobi_svd_tall(a)
    u, s, v = _jacobi_svd_tall(a.conj().T)
    return v, s, u


# --------------------------------------------------------------------------
# Public decompositions


def hermitian_eig(h, method: Method = "lapack", tol: float = HERMITIAN_TOL) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises :class:`NotHermitianError` (carrying the max deviation) if
    ``max |h - h^dagger| > tol``.
    """
    h = as_matrix(h, "h")
    dev = hermitian_deviation(h)
    if dev > tol:
        raise NotHermitianError(dev)
    h = 0.5 * (h + h.conj().T)
    if method == "lapack":
        w, v = np.linalg.eigh(h)
    elif method == "jacobi":
        w, v = _jacobi_eigh(h)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EigDecomposition(np.asarray(w, dtype=float), v)


def svd(a, method: Method = "lapack") -> SvdDecomposition:
    """Thin SVD with singular values sorted in descending order."""
    a = as_matrix(a, "a")
    if a.size == 0:
        raise DimensionError("cannot decompose an empty matrix")
    if method == "lapack":
        u, s, vh = np.linalg.svd(a, full_matrices=False)
        return SvdDecomposition(u, s, vh.conj().T)
    if method == "jacobi":
        u, s, v = _jacobi_svd(a)
        return SvdDecomposition(u, s, v)
    raise ValueError(f"unknown method {method!r}")


def spectral_norm(a) -> float:
    a = np.asarray(a)
    if a.ndim == 1:  # diagonal payload
        return float(np.max(np.abs(a))) if a.size else 0.0
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def default_rcond(shape: tuple[int, int]) -> float:
    return max(shape) * np.finfo(float).eps


def pinv_solve(a, f, rcond: float | None = None) -> np.ndarray:
    """Minimum-norm least squares through a truncated SVD.

    Singular values at or below ``rcond * sigma_max`` are discarded.
    """
    a = as_matrix(a, "a")
    f = np.asarray(f, dtype=complex)
    if rcond is None:
        rcond = default_rcond(a.shape)
    dec = svd(a)
    s = dec.singular_values
    cutoff = rcond * (s[0] if s.size else 0.0)
    keep = s > cutoff
    coeff = (dec.U[:, keep].conj().T @ f) / s[keep]
    return dec.V[:, keep] @ coeff


def lstsq_solve(a, f, rcond: float | None = None) -> np.ndarray:
    """Minimum-norm solution of ``min ‖a v - f‖_2``.

    Householder QR with column pivoting handles the clearly well-conditioned
    case. When the pivoted ``R`` shows a diagonal ratio below ``sqrt(rcond)``
    the problem is treated as rank deficient and solved by a truncated SVD
    with threshold ``rcond * sigma_max`` (default ``max(rows, cols) * eps``).
    The returned array is real when both inputs are real.
    """
    a_in = np.asarray(a)
    f_in = np.asarray(f)
    real = np.isrealobj(a_in) and np.isrealobj(f_in)
    a = as_matrix(a_in, "a")
    f = np.asarray(f_in, dtype=complex)
    if f.ndim != 1 or f.shape[0] != a.shape[0]:
        raise DimensionError(f"right-hand side of length {f.shape} does not match {a.shape[0]} rows")
    if rcond is None:
        rcond = default_rcond(a.shape)
    rows, cols = a.shape
    v = None
    if rows >= cols:
        q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
        rdiag = np.abs(np.diag(r))
        if rdiag.size and rdiag[0] > 0 and rdiag[-1] > np.sqrt(rcond) * rdiag[0]:
            y = scipy.linalg.solve_triangular(r, q.conj().T @ f)
            v = np.empty(cols, dtype=complex)
            v[perm] = y
    if v is None:
        v = pinv_solve(a, f, rcond)
    return v.real if real else v


__all__ = [
    "DimensionError",
    "NotHermitianError",
    "EigDecomposition",
    "SvdDecomposition",
    "as_matrix",
    "matmul_kron_dagger",
    "dagger",
    "hermitian_deviation",
    "is_hermitian",
    "relative_residual",
    "hermitian_eig",
    "svd",
    "spectral_norm",
    "default_rcond",
    "pinv_solve",
    "lstsq_solve",
    "RECONSTRUCTION_TOL",
]
