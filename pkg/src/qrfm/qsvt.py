"""Quantum singular value transformation.

Two routes are provided. ``apply_poly_semantic`` applies a polynomial to the
singular values (or eigenvalues) of the encoded matrix directly. ``qsp_circuit``
builds the alternating phase circuit on the tiny tier.

Phase convention: the projector-controlled rotation is
``Z_phi = U_Pi exp(i phi U_Pi)`` with ``U_Pi = 2 Pi - I``, realized with one
signal qubit. With this choice all-zero phases reproduce ``T_d`` exactly, not
only up to a global phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.fft

from . import circuit as qc
from .blockenc import BlockEncoding, lcu_combine
from .constants import MAX_INVERSION_DEGREE, SUP_GRID_POINTS
from .ledger import scale_counts

Parity = Literal["even", "odd", "none"]
Variant = Literal["diamond", "left", "right"]


class DomainError(ValueError):
    """Raised when a Chebyshev series is evaluated outside [-1, 1]."""


def sup_grid(points: int = SUP_GRID_POINTS) -> np.ndarray:
    return np.linspace(-1.0, 1.0, points)


def _clenshaw(coef: np.ndarray, x: np.ndarray) -> np.ndarray:
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for c in coef[:0:-1]:
        b1, b2 = 2.0 * x * b1 - b2 + c, b1
    return x * b1 - b2 + coef[0]


def detect_parity(coef: np.ndarray, tol: float = 0.0) -> Parity:
    coef = np.asarray(coef)
    odd = np.abs(coef[1::2])
    even = np.abs(coef[0::2])
    if np.all(odd <= tol):
        return "even"
    if np.all(even <= tol):
        return "odd"
    return "none"


@dataclass(frozen=True)
class Polynomial:
    """Chebyshev series ``sum_k c_k T_k`` with declared parity and sup bound."""

    coefficients: np.ndarray
    parity: Parity = "none"
    sup_norm_bound: float = 1.0
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        coef = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if coef.ndim != 1 or coef.size == 0:
            raise ValueError("coefficients must be a nonempty vector")
        object.__setattr__(self, "coefficients", coef)
        if self.parity == "even" and np.any(coef[1::2] != 0):
            raise ValueError("even polynomial has nonzero odd-order coefficients")
        if self.parity == "odd" and np.any(coef[0::2] != 0):
            raise ValueError("odd polynomial has nonzero even-order coefficients")
        if self.check:
            peak = float(np.max(np.abs(_clenshaw(coef, sup_grid()))))
            if peak > self.sup_norm_bound + 1e-12:
                raise ValueError(f"max |P| on the grid is {peak:.6g} > declared bound {self.sup_norm_bound:.6g}")

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coefficients)[0]
        return int(nz[-1]) if nz.size else 0

    def __call__(self, x):
        return chebyshev_eval(self, x)

    def scaled(self, factor: float) -> "Polynomial":
        return Polynomial(self.coefficients * factor, self.parity, self.sup_norm_bound * abs(factor))

    def grid_sup(self, points: int = SUP_GRID_POINTS) -> float:
        return float(np.max(np.abs(_clenshaw(self.coefficients, sup_grid(points)))))

    @classmethod
    def chebyshev_t(cls, d: int) -> "Polynomial":
        coef = np.zeros(d + 1)
        coef[d] = 1.0
        return cls(coef, "even" if d % 2 == 0 else "odd", 1.0)

    @classmethod
    def from_coefficients(cls, coef, tol: float = 0.0) -> "Polynomial":
        """Build with parity detected and the bound set to the grid maximum."""
        coef = np.asarray(coef, dtype=float)
        parity = detect_parity(coef, tol)
        if parity == "even":
            coef = coef.copy()
            coef[1::2] = 0.0
        elif parity == "odd":
            coef = coef.copy()
            coef[0::2] = 0.0
        peak = float(np.max(np.abs(_clenshaw(coef, sup_grid()))))
        return cls(coef, parity, peak)


@dataclass(frozen=True)
class PhaseSequence:
    """Phases ``phi_0 .. phi_d`` in radians."""

    phases: np.ndarray

    def __post_init__(self):
        ph = np.atleast_1d(np.asarray(self.phases, dtype=float))
        if ph.ndim != 1 or ph.size == 0:
            raise ValueError("need at least one phase")
        if not np.all(np.isfinite(ph)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phases", ph)

    @property
    def degree(self) -> int:
        return self.phases.size - 1

    @classmethod
    def chebyshev(cls, d: int) -> "PhaseSequence":
        """All-zero phases, which realize ``T_d`` under this module's convention."""
        return cls(np.zeros(d + 1))


def chebyshev_eval(p: Polynomial | np.ndarray, x):
    """Clenshaw evaluation of ``sum c_k T_k(x)``; ``|x| ≤ 1`` required."""
    coef = p.coefficients if isinstance(p, Polynomial) else np.asarray(p, dtype=float)
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0 + 1e-12):
        raise DomainError("Chebyshev evaluation requires |x| ≤ 1")
    out = _clenshaw(coef, np.clip(xa, -1.0, 1.0).astype(float))
    return float(out) if np.ndim(x) == 0 else out


# --------------------------------------------------------------------------
# semantic application


def _matrix_function(b: np.ndarray, f: Callable[[np.ndarray], np.ndarray], parity: Parity,
                     variant: Variant) -> np.ndarray:
    """Apply ``f`` to a normalized matrix (1-D diagonal or 2-D)."""
    if b.ndim == 1:
        if np.all(np.isreal(b)):
            return f(np.real(b))
        mag = np.abs(b)
        phase = np.where(mag > 0, b / np.where(mag > 0, mag, 1.0), 1.0)
        if variant == "diamond":
            return phase * f(mag)
        return f(mag).astype(complex)
    square = b.shape[0] == b.shape[1]
    if square and np.max(np.abs(b - b.conj().T), initial=0.0) <= 1e-12:
        h = 0.5 * (b + b.conj().T)
        w, v = np.linalg.eigh(h)
        out = (v * f(w)) @ v.conj().T
        return np.real(out) if np.isrealobj(b) else out
    w_, s, vh = np.linalg.svd(b, full_matrices=False)
    fs = f(s)
    if variant == "diamond":
        return (w_ * fs) @ vh
    if variant == "left":
        return (w_ * fs) @ w_.conj().T
    if variant == "right":
        v = vh.conj().T
        return (v * fs) @ vh
    raise ValueError(f"unknown variant {variant!r}")


def apply_function_semantic(be: BlockEncoding, f: Callable[[np.ndarray], np.ndarray], degree: int,
                            variant: Variant = "diamond", parity: Parity = "none",
                            epsilon: float = 0.0, bound: float = 1.0) -> BlockEncoding:
    """Semantic QSVT with a function in place of an explicit polynomial.

    ``degree`` is the polynomial degree the circuit would need; it sets the
    query count. ``bound`` is the sup of ``|f|`` on [-1, 1].
    """
    if be.encoded is None:
        raise ValueError("semantic QSVT needs the encoded matrix")
    if bound > 1.0 + 1e-12:
        raise ValueError(f"function bound {bound:.6g} exceeds 1; rescale first")
    b = be.encoded / be.alpha
    out = _matrix_function(b, f, parity, variant)
    return BlockEncoding(1.0, be.ancillas + 1, be.data_qubits, epsilon, encoded=out,
                         block_rows=be.block_rows if variant == "diamond" else None,
                         block_cols=be.block_cols if variant == "diamond" else None,
                         queries=scale_counts(be.queries, max(degree, 0)),
                         meta={"degree": int(degree)})


def apply_poly_semantic(be: BlockEncoding, p: Polynomial, variant: Variant = "diamond",
                        epsilon: float = 0.0) -> BlockEncoding:
    """Encoding of ``P(B / alpha)`` in the chosen singular-value variant.

    Hermitian inputs use the eigendecomposition, so ``P(B)`` is the ordinary
    matrix polynomial.
    """
    if p.sup_norm_bound > 1.0 + 1e-12:
        raise ValueError(f"polynomial bound {p.sup_norm_bound:.6g} exceeds 1; rescale first")
    return apply_function_semantic(be, lambda s: _clenshaw(p.coefficients, np.asarray(s, dtype=float)),
                                   p.degree, variant, p.parity, epsilon, p.sup_norm_bound)


# --------------------------------------------------------------------------
# circuit tier


def _projector_phase(width: int, ancillas: list[int], signal: int, phi: float) -> list[qc.Gate]:
    """``Z_phi = U_Pi exp(i phi U_Pi)`` via the signal qubit."""
    flag = qc.mcnot(ancillas, signal, values=[0] * len(ancillas))
    rot = qc.phase_diagonal([-np.exp(-1j * phi), np.exp(1j * phi)], [signal], name="ZPHI")
    return [flag, rot, flag]


def qsp_circuit(be: BlockEncoding, phases: PhaseSequence | np.ndarray, target: bool = True) -> BlockEncoding:
    """Alternating phase sequence on a tiny-tier encoding.

    Matrix order (rightmost acts first), with ``U`` the circuit of ``be``:
    even ``d``: ``Z_0 prod_k (U^dg Z_{2k-1} U Z_{2k})``;
    odd ``d``: ``Z_0 U Z_1 prod_k (U^dg Z_{2k} U Z_{2k+1})``.
    One signal qubit is prepended to the ancilla register.
    """
    if be.circuit is None:
        raise ValueError("qsp_circuit needs a tiny-tier encoding")
    if not isinstance(phases, PhaseSequence):
        phases = PhaseSequence(phases)
    phi = phases.phases
    d = phases.degree
    a = be.ancillas
    width = 1 + be.width
    anc = list(range(1, 1 + a))
    u = be.circuit.shifted(1, width)
    udg = u.adjoint()

    def zp(k):
        return ("Z", phi[k])

    if d % 2 == 0:
        factors = [zp(0)]
        for k in range(1, d // 2 + 1):
            factors += [("Udg", None), zp(2 * k - 1), ("U", None), zp(2 * k)]
    else:
        factors = [zp(0), ("U", None), zp(1)]
        for k in range(1, (d - 1) // 2 + 1):
            factors += [("Udg", None), zp(2 * k), ("U", None), zp(2 * k + 1)]
    gates: list[qc.Gate] = []
    for kind, val in reversed(factors):
        if kind == "Z":
            gates += _projector_phase(width, anc, 0, val)
        elif kind == "U":
            gates += u.gates
        else:
            gates += udg.gates
    circ = qc.Circuit(width, tuple(gates))
    enc = None
    if target and be.encoded is not None and np.all(phi == 0):
        enc = apply_poly_semantic(be, Polynomial.chebyshev_t(d)).encoded
    return BlockEncoding(1.0, a + 1, be.data_qubits, 0.0, circuit=circ, encoded=enc,
                         block_rows=be.block_rows, block_cols=be.block_cols,
                         queries=scale_counts(be.queries, d), meta={"degree": d})


def chebyshev_lcu(be: BlockEncoding, p: Polynomial) -> BlockEncoding:
    """Tiny-tier encoding of ``P(B / alpha)`` as an LCU of ``T_k`` phase circuits.

    The result has ``alpha = sum |c_k|``. It stands in for phase-factor
    synthesis, which this package does not implement.
    """
    coef = p.coefficients
    terms = []
    for k in np.nonzero(coef)[0]:
        tk = qsp_circuit(be, PhaseSequence.chebyshev(int(k)), target=be.encoded is not None)
        terms.append((float(coef[k]), tk))
    if not terms:
        raise ValueError("zero polynomial has no LCU")
    return lcu_combine(terms)


# --------------------------------------------------------------------------
# inversion polynomial


def _cheb_interpolate(f: Callable[[np.ndarray], np.ndarray], degree: int) -> np.ndarray:
    """Chebyshev interpolant at first-kind nodes through a DCT."""
    n = degree + 1
    k = np.arange(n)
    nodes = np.cos(np.pi * (k + 0.5) / n)
    c = scipy.fft.dct(f(nodes), type=2) / n
    c[0] /= 2.0
    return c


def _smoothing_exponent(kappa: float, eps: float) -> tuple[int, float]:
    """Pick ``(p, c)`` so the smoothed target stays below 1 and is accurate at 1/kappa."""
    u = np.linspace(1e-4, 5.0, 20001)
    for p in (4, 6, 8, 10, 12, 16):
        c = np.log(2.0 * kappa / eps) ** (-1.0 / p)
        peak = np.max((1.0 - np.exp(-(u ** p))) / u) / (2.0 * c)
        if peak <= 0.98:
            return p, c
    raise ValueError("no admissible smoothing for this (kappa, eps)")


def inversion_target(kappa: float, eps: float) -> Callable[[np.ndarray], np.ndarray]:
    """Odd smooth function equal to ``1/(2 kappa x)`` up to ``eps/(2 kappa)`` on ``|x| ≥ 1/kappa``."""
    p, c = _smoothing_exponent(kappa, eps)
    delta = c / kappa

    def g(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        nz = x != 0
        xn = x[nz]
        out[nz] = -np.expm1(-((xn / delta) ** p)) / (2.0 * kappa * xn)
        return out

    return g


def inversion_poly(kappa: float, eps: float, max_degree: int = MAX_INVERSION_DEGREE) -> Polynomial:
    """Odd polynomial with ``|P(x) - 1/(2 kappa x)| ≤ eps/(2 kappa)`` on
    ``1/kappa ≤ |x| ≤ 1`` and ``|P| ≤ 1`` on [-1, 1].

    The degree is grown until a dense-grid check passes.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not np.isfinite(kappa) or kappa < 1:
        raise ValueError("kappa must be finite and ≥ 1")
    g = inversion_target(kappa, eps)
    xs = np.linspace(1.0 / kappa, 1.0, SUP_GRID_POINTS)
    full = sup_grid()
    want = 1.0 / (2.0 * kappa * xs)
    tol = eps / (2.0 * kappa)
    d = max(3, int(2.5 * kappa * np.log(kappa / eps + 1.0)) // 2 * 2 + 1)
    while d <= max_degree:
        coef = _cheb_interpolate(g, d)
        coef[0::2] = 0.0
        err = np.max(np.abs(_clenshaw(coef, xs) - want))
        peak = np.max(np.abs(_clenshaw(coef, full)))
        if err <= tol and peak <= 1.0:
            return Polynomial(coef, "odd", float(peak))
        d = int(d * 1.2) // 2 * 2 + 1
    raise ValueError(f"inversion polynomial for kappa={kappa:.3g}, eps={eps:.3g} needs degree > {max_degree}")


def inversion_degree_estimate(kappa: float, eps: float) -> int:
    """Odd degree ``3 kappa log(kappa / eps)`` charged when the polynomial is not built.

    The factor 3 matches the degrees :func:`inversion_poly` reaches.
    """
    d = int(np.ceil(3.0 * kappa * np.log(max(kappa / eps, np.e))))
    return d if d % 2 else d + 1


__all__ = [
    "Polynomial", "PhaseSequence", "DomainError",
    "chebyshev_eval", "detect_parity", "sup_grid",
    "apply_poly_semantic", "apply_function_semantic",
    "qsp_circuit", "chebyshev_lcu",
    "inversion_target", "inversion_poly", "inversion_degree_estimate",
]
