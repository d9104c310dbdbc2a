"""End-to-end quantum random feature pipeline, emulated classically.

Steps:

1. input oracles ``U_x``, ``U_w``, ``U_b``;
2. ``U_{wx+b}`` by LCU, then the activation by QSVT (``U_sigma``);
3. operator and boundary encodings ``U_L``, ``U_B`` combined into the entry
   oracle ``O_A``, lifted to an encoding of ``A`` and amplified;
4. Hermitian dilation and QSVT inversion applied to ``|f>``;
5. recovery of the solution state ``∝ Phi v`` plus the bookkeeping needed to
   undo every normalization.

In ``"semantic"`` mode activations are applied as exact matrix functions
(query counts still use the degree a polynomial would need). In
``"circuit"`` mode the explicit approximating polynomials are applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import blockenc as be_ops
from . import circuit as qc
from .blockenc import BlockEncoding
from .constants import KAPPA_CAP, MAX_INVERSION_DEGREE, SOLVE_RCOND
from .ledger import ResourceLedger, add_counts
from .oracles import (CollocationGrid, PreparedState, RandomFeatureSpec, uf_prepare, ux_coordinate,
                      ux_cyclic, uw_ub_from_ansatz)
from .polyapprox import activation_degree, activation_polynomial
from .problems import PdeProblem
from .qsvt import Polynomial, apply_function_semantic, apply_poly_semantic, inversion_degree_estimate, inversion_poly
from .rfm import activation_value

MODES = ("semantic", "circuit")

# Largest estimated degree for which the solve builds the explicit inversion
# polynomial by default; above it the target function is applied directly.
POLY_DEGREE_BUDGET = 4001


class KappaCapExceeded(RuntimeError):
    """Raised when the estimated condition number is above the configured cap."""

    def __init__(self, kappa: float, cap: float):
        super().__init__(f"estimated condition number {kappa:.3e} exceeds the cap {cap:.3e}; "
                         "rescale the penalties or raise the cap")
        self.kappa = kappa
        self.cap = cap


class UnsupportedActivation(ValueError):
    """Raised when circuit mode is asked for an activation without a polynomial route."""


@dataclass(frozen=True)
class PipelineConfig:
    eps: float = 1e-6
    mode: str = "semantic"
    rcond: float = SOLVE_RCOND
    kappa_cap: float = KAPPA_CAP
    ux: str = "coordinate"
    allow_fallback: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0 < self.eps < 1 / np.e:
            raise ValueError("eps must lie in (0, 1/e)")
        if self.ux not in ("coordinate", "cyclic"):
            raise ValueError("ux must be 'coordinate' or 'cyclic'")


# --------------------------------------------------------------------------
# oracles and the affine encoding


def encoded_oracles(grid: CollocationGrid, spec: RandomFeatureSpec, ux: str = "coordinate"):
    """Encoded-tier ``U_x``, ``U_w``, ``U_b`` for a given feature spec."""
    if ux == "coordinate":
        u_x = ux_coordinate(grid)
    else:
        u_x = ux_cyclic(grid, tiny=False)
    m = spec.m
    u_w = BlockEncoding(1.0, m + 1, m, encoded=spec.w.copy(), label="U_w", queries={"U_w": 1})
    u_b = BlockEncoding(1.0, m + 1, m, encoded=spec.b.copy(), label="U_b", queries={"U_b": 1})
    return u_x, u_w, u_b


def tiny_oracles(n: int, m: int, seed, ux: str = "coordinate", activation: str = "sin",
                 alpha_w: float = 1.0):
    """Tiny-tier oracles carrying both circuit and encoded diagonal."""
    grid = CollocationGrid.uniform_grid(n)
    u_x = ux_coordinate(grid) if ux == "coordinate" else ux_cyclic(grid, tiny=True)
    u_w, u_b, spec = uw_ub_from_ansatz(m, seed, activation, alpha_w, tiny=True)
    return grid, u_x, u_w, u_b, spec


def affine_encoding(u_x: BlockEncoding, u_w: BlockEncoding, u_b: BlockEncoding) -> BlockEncoding:
    """``U_{wx+b}``: equal-weight LCU of ``U_x ⊗ U_w`` and ``I ⊗ U_b``.

    Joint data index is ``i * M + j``. ``U_b`` reuses the ancillas of ``U_w``,
    so the result is an ``(alpha_x + 1, a_1 + a_2 + 1, 0)`` encoding.
    """
    xw = be_ops.kron(u_x, u_w)
    ib = be_ops.kron(be_ops.identity_encoding(u_x.data_qubits), u_b)
    out = be_ops.lcu_combine([(1.0, xw), (1.0, ib)])
    return replace(out, label="U_wx+b")


# --------------------------------------------------------------------------
# activation and derivative encodings


def _derivative_bound(activation: str, order: int) -> float:
    if order == 2 and activation == "tanh":
        return 4.0 / (3.0 * np.sqrt(3.0))
    return 1.0


def activation_encoding(u_aff: BlockEncoding, spec: RandomFeatureSpec, eps: float, mode: str = "semantic",
                        order: int = 0, allow_fallback: bool = False) -> BlockEncoding:
    """``(1, a + 1, eps)`` encoding of ``diag(sigma^(order)(alpha_w (w x + b)))``.

    The affine encoding has normalization ``alpha``, so the polynomial acts on
    ``y = (w x + b) / alpha`` with scale ``t = alpha * alpha_w``.
    """
    t = u_aff.alpha * spec.alpha_w
    act = spec.activation
    if order == 0:
        f = lambda y: activation_value(act, t * y)
        degree = activation_degree(act, t, eps)
    else:
        f = lambda y: activation_value(act, t * y, order)
        # derivatives of sin/cos are shifted sin/cos; tanh derivatives share the tanh scale
        degree = activation_degree(act, t, eps) + (order if act == "tanh" else 0)
    if mode == "semantic":
        return apply_function_semantic(u_aff, f, degree, epsilon=eps, bound=_derivative_bound(act, order))
    if act in ("sin", "cos") or allow_fallback:
        from .polyapprox import chebyshev_fit
        if order == 0:
            p = activation_polynomial(act, t, eps)
        else:
            parity = _derivative_parity(act, order)
            p = chebyshev_fit(f, eps / 2.0, parity=parity)
            bound = max(p.sup_norm_bound, 1e-300)
            if bound > 1.0:
                p = p.scaled(1.0 / bound)
        return apply_poly_semantic(u_aff, p, epsilon=eps)
    raise UnsupportedActivation(f"circuit mode has no polynomial route for {act!r}; "
                                "enable allow_fallback to use a Chebyshev fit")


def _derivative_parity(act: str, order: int) -> str:
    base = {"sin": 1, "cos": 0, "tanh": 1}[act]
    return "odd" if (base + order) % 2 else "even"


def build_feature_be(grid: CollocationGrid, spec: RandomFeatureSpec, eps: float, mode: str = "semantic",
                     ux: str = "coordinate", allow_fallback: bool = False) -> BlockEncoding:
    """``U_sigma``: QSVT of ``U_{wx+b}`` with the activation."""
    u_aff = affine_encoding(*encoded_oracles(grid, spec, ux))
    out = activation_encoding(u_aff, spec, eps, mode, 0, allow_fallback)
    return replace(out, label="U_sigma")


def _column_lift(u: BlockEncoding, n: int) -> BlockEncoding:
    """``I_N ⊗ U`` for an encoding on the feature register."""
    return be_ops.kron(be_ops.identity_encoding(n), u)


def build_derivative_be(grid: CollocationGrid, spec: RandomFeatureSpec, eps: float, order: int = 1,
                        mode: str = "semantic", ux: str = "coordinate",
                        allow_fallback: bool = False) -> BlockEncoding:
    """Encoding of ``diag(d^order/dx^order phi_j(x_i))``.

    ``(I ⊗ U_w)^order`` times ``U_{sigma^(order)}``, declared with the factor
    ``alpha_w**order`` folded into ``alpha``.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    u_x, u_w, u_b = encoded_oracles(grid, spec, ux)
    u_aff = affine_encoding(u_x, u_w, u_b)
    out = activation_encoding(u_aff, spec, eps, mode, order, allow_fallback)
    lifted = _column_lift(u_w, grid.n)
    for _ in range(order):
        out = be_ops.product(lifted, out)
    return replace(be_ops.scale(out, spec.alpha_w ** order), label=f"U_phi^({order})")


def helmholtz_weight_encoding(u_w: BlockEncoding, k: float, alpha_w: float) -> BlockEncoding:
    """Encoding of ``diag(k^2 - alpha_w^2 w_j^2)`` by a degree-2 polynomial of ``U_w``.

    ``q(y) = (k^2 - alpha_w^2 y^2) / c`` with ``c = max(k^2, |k^2 - alpha_w^2|)``
    is bounded by 1 on [-1, 1]. Tiny-tier inputs get the Chebyshev LCU circuit.
    """
    c = max(k * k, abs(k * k - alpha_w ** 2))
    coef = np.array([(k * k - alpha_w ** 2 / 2.0) / c, 0.0, -(alpha_w ** 2 / 2.0) / c])
    q = Polynomial(coef, "even", 1.0)
    if u_w.circuit is not None:
        from .qsvt import chebyshev_lcu
        lcu = chebyshev_lcu(u_w, q)
        enc = k * k - alpha_w ** 2 * np.real(u_w.encoded) ** 2
        return replace(lcu, alpha=lcu.alpha * c, encoded=enc, label="U_k2-w2")
    out = apply_poly_semantic(u_w, q)
    return replace(be_ops.scale(out, c), label="U_k2-w2")


def operator_encoding(u_sigma: BlockEncoding, u_w: BlockEncoding, spec: RandomFeatureSpec, k: float,
                      n: int, u_sigma_dd: BlockEncoding | None = None) -> BlockEncoding:
    """``U_L`` for ``L = d^2/dx^2 + k^2`` acting on the features.

    sin/cos: ``(I ⊗ U_{k^2 - w^2}) U_sigma``. Other activations use the
    derivative basis: ``LCU(U_phi'', k^2 U_sigma)`` where ``u_sigma_dd`` is
    the encoding of ``alpha_w^2 w^2 sigma''``.
    """
    if spec.activation in ("sin", "cos"):
        weight = helmholtz_weight_encoding(u_w, k, spec.alpha_w)
        out = be_ops.product(_column_lift(weight, n), u_sigma)
    else:
        if u_sigma_dd is None:
            raise ValueError("the derivative route needs the second-derivative encoding")
        out = be_ops.lcu_combine([(1.0, u_sigma_dd), (k * k, u_sigma)])
    return replace(out, label="U_L")


def boundary_flag_gates(n: int, flag: int, data_offset: int) -> list[qc.Gate]:
    """Flip ``flag`` when the row register holds ``|0^n>`` or ``|1^n>``."""
    rows = [data_offset + q for q in range(n)]
    gates = [qc.mcnot(rows, flag, values=[0] * n)]
    if n > 0:
        gates.append(qc.mcnot(rows, flag, values=[1] * n))
    return gates


def entry_oracle(u_l: BlockEncoding, u_b: BlockEncoding, grid: CollocationGrid, m: int,
                 boundary_weight: float = 1.0) -> BlockEncoding:
    """``O_A``: ``U_B`` on boundary rows, ``U_L`` elsewhere, common ``alpha = alpha_L``.

    A flag qubit is set by comparators on the row register (all zeros or all
    ones), selects the branch, and is uncomputed. The boundary branch carries
    an extra rotation ancilla scaling by ``boundary_weight * alpha_B / alpha_L``.
    """
    n = grid.n
    if set(grid.boundary_indices) - {0, grid.N - 1}:
        raise ValueError("the boundary selector handles only the two endpoints")
    d = n + m
    if u_l.data_qubits != d or u_b.data_qubits != d:
        raise ValueError("U_L and U_B must act on the joint (row, feature) register")
    alpha = u_l.alpha
    ratio = boundary_weight * u_b.alpha / alpha
    if not 0 < ratio <= 1.0 + 1e-12:
        raise ValueError("weighted boundary encoding has a larger normalization than U_L")
    b_enc = None if u_b.encoded is None else boundary_weight * u_b.encoded
    scaled_b = be_ops.product(be_ops.scalar_encoding(min(ratio, 1.0), d), u_b)
    scaled_b = replace(scaled_b, alpha=alpha, epsilon=boundary_weight * u_b.epsilon, encoded=b_enc)
    shared = max(u_l.ancillas, scaled_b.ancillas)
    anc = 1 + shared
    enc = None
    if u_l.encoded is not None and u_b.encoded is not None:
        lv = np.asarray(u_l.encoded if u_l.encoded.ndim == 1 else np.diag(u_l.encoded)).reshape(grid.N, -1)
        bv = np.asarray(b_enc if b_enc.ndim == 1 else np.diag(b_enc)).reshape(grid.N, -1)
        vals = lv.copy()
        b_idx = list(grid.boundary_indices)
        vals[b_idx] = bv[b_idx]
        enc = vals.ravel()
    circ = None
    if u_l.circuit is not None and u_b.circuit is not None:
        width = anc + d
        flag = 0
        data = [anc + q for q in range(d)]
        gates = boundary_flag_gates(n, flag, anc)
        for branch, value in ((u_l, 0), (scaled_b, 1)):
            mapping = [1 + shared - branch.ancillas + q for q in range(branch.ancillas)] + data
            gates += branch.circuit.embed(width, mapping).controlled([flag], [value]).gates
        gates += boundary_flag_gates(n, flag, anc)
        circ = qc.Circuit(width, tuple(gates))
    eps = max(u_l.epsilon, scaled_b.epsilon)
    return BlockEncoding(alpha, anc, d, eps, circuit=circ, encoded=enc, label="O_A",
                         queries=add_counts(u_l.queries, u_b.queries))


def tiny_entry_oracle(n: int, m: int, seed, activation: str = "sin", alpha_w: float = 1.0,
                      k: float = 2.0, ux: str = "coordinate"):
    """Simulable ``O_A`` for small registers.

    ``U_w`` enters through its ansatz circuit. The activation itself is a
    single dilation gate, since a phase-circuit QSVT of the required degree
    would be too deep to simulate; for tanh the whole ``U_L`` is one gate.

    Returns:
        ``(O_A, spec, grid)``.
    """
    grid, u_x, u_w, u_b, spec = tiny_oracles(n, m, seed, ux, activation, alpha_w)
    x = np.real(u_x.encoded)
    z = alpha_w * (np.outer(x, spec.w) + spec.b[None, :])
    sig = activation_value(activation, z).ravel()
    u_sigma = be_ops.dilation_encoding(sig, alpha=1.0, label="U_sigma",
                                       queries=add_counts(u_x.queries, u_w.queries, u_b.queries))
    if activation in ("sin", "cos"):
        u_l = operator_encoding(u_sigma, u_w, spec, k, n)
    else:
        from .rfm import operator_matrix
        lphi = operator_matrix(spec, x, k).ravel()
        u_l = be_ops.dilation_encoding(lphi, label="U_L", queries=dict(u_sigma.queries))
    return entry_oracle(u_l, u_sigma, grid, m), spec, grid


@dataclass(frozen=True)
class SystemEncodings:
    u_sigma: BlockEncoding
    u_l: BlockEncoding
    o_a: BlockEncoding
    a_be: BlockEncoding
    a_amp: BlockEncoding


def build_system_be(problem: PdeProblem, grid: CollocationGrid, spec: RandomFeatureSpec, eps: float,
                    mode: str = "semantic", ux: str = "coordinate", ledger: ResourceLedger | None = None,
                    allow_fallback: bool = False, boundary_weight: float = 1.0) -> SystemEncodings:
    """Feature, operator and entry encodings, the lifted ``A`` and its amplified form."""
    u_x, u_w, u_b = encoded_oracles(grid, spec, ux)
    u_aff = affine_encoding(u_x, u_w, u_b)
    u_sigma = replace(activation_encoding(u_aff, spec, eps, mode, 0, allow_fallback), label="U_sigma")
    u_dd = None
    if spec.activation not in ("sin", "cos"):
        u_dd = build_derivative_be(grid, spec, eps, 2, mode, ux, allow_fallback)
    u_l = operator_encoding(u_sigma, u_w, spec, problem.k, grid.n, u_dd)
    o_a = entry_oracle(u_l, u_sigma, grid, spec.m, boundary_weight)
    a_be = be_ops.oracle_to_be(o_a, grid.n, spec.m)
    a_amp = be_ops.amplify(a_be, ledger)
    if ledger is not None:
        ledger.note_ancillas(a_amp.ancillas)
    return SystemEncodings(u_sigma, u_l, o_a, a_be, a_amp)


# --------------------------------------------------------------------------
# linear-system solve


@dataclass(frozen=True)
class DilatedSystem:
    """``[[0, A], [A^dg, 0]]`` for the zero-padded, normalized ``A``."""

    A_tilde: np.ndarray
    f_tilde: np.ndarray
    kappa_est: float
    scale: float
    rows: int
    cols: int


def dilate(a: np.ndarray, f: np.ndarray, rcond: float = SOLVE_RCOND) -> DilatedSystem:
    """Hermitian dilation of ``A / sigma_max`` padded to ``max(N, M)``.

    ``kappa_est`` is ``sigma_max / sigma_min`` over singular values above
    ``rcond * sigma_max``.
    """
    a = np.asarray(a)
    N, M = a.shape
    D = max(N, M)
    s = np.linalg.svd(a, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    if smax == 0:
        raise ValueError("A is identically zero")
    kept = s[s > rcond * smax]
    kappa = smax / float(kept[-1])
    ap = np.zeros((D, D), dtype=a.dtype)
    ap[:N, :M] = a / smax
    at = np.block([[np.zeros((D, D), dtype=a.dtype), ap], [ap.conj().T, np.zeros((D, D), dtype=a.dtype)]])
    ft = np.zeros(2 * D, dtype=complex if np.iscomplexobj(f) else float)
    ft[:N] = f
    return DilatedSystem(at, ft, kappa, smax, N, M)


def dilation_block_encoding(a_be: BlockEncoding) -> BlockEncoding:
    """Encoding of ``[[0, A], [A^dg, 0]]`` from an encoding of rectangular ``A``.

    A new qubit ``c`` is placed in front of the data register. The circuit
    applies ``U_A`` when ``c = 1`` and ``U_A^dg`` when ``c = 0``, then flips
    ``c``. The block rows and columns are ``(0, rows_A)`` followed by
    ``(1, cols_A)``, so the encoded matrix is ``(N + M)``-dimensional.
    """
    d = a_be.data_qubits
    full = np.arange(2 ** d)
    rows = full if a_be.block_rows is None else np.asarray(a_be.block_rows)
    cols = full if a_be.block_cols is None else np.asarray(a_be.block_cols)
    idx = np.concatenate([rows, (1 << d) + cols])
    enc = None
    if a_be.encoded is not None:
        a = a_be.dense()
        N, M = a.shape
        enc = np.zeros((N + M, N + M), dtype=np.result_type(a.dtype, float))
        enc[:N, N:] = a
        enc[N:, :N] = a.conj().T
    circ = None
    if a_be.circuit is not None:
        anc = a_be.ancillas
        width = anc + 1 + d
        c = anc
        mapping = list(range(anc)) + [anc + 1 + q for q in range(d)]
        fwd = a_be.circuit.embed(width, mapping).controlled([c], [1])
        bwd = a_be.circuit.adjoint().embed(width, mapping).controlled([c], [0])
        circ = fwd + bwd + qc.Circuit(width, (qc.x(c),))
    q = add_counts(a_be.queries, a_be.queries)
    return BlockEncoding(a_be.alpha, a_be.ancillas, d + 1, a_be.epsilon, circuit=circ, encoded=enc,
                         block_rows=idx, block_cols=idx, label="A_dil", queries=q)


@dataclass(frozen=True)
class QlspResult:
    """Normalized coefficient state and the norms needed to undo normalization.

    ``xi = ‖A_n^+ f‖`` for ``A_n = A / scale`` and unit ``f``.
    """

    v_state: np.ndarray
    xi: float
    kappa: float
    scale: float
    degree: int
    rounds: int
    polynomial: bool


def solve_qlsp_semantic(sys_be: BlockEncoding, f_state: np.ndarray, eps: float = 1e-6,
                        rcond: float = SOLVE_RCOND, kappa_cap: float = KAPPA_CAP,
                        ledger: ResourceLedger | None = None, use_polynomial: bool | None = None,
                        f_queries: dict | None = None) -> QlspResult:
    """Solve ``A v = f`` through the Hermitian dilation.

    The odd inversion function ``1/(2 kappa lambda)`` is applied to the
    eigenvalues of the dilation; eigenvalues below ``rcond`` are dropped,
    which mirrors the truncated pseudo-inverse of the classical solve. By
    default the explicit inversion polynomial is used whenever its estimated
    degree fits :data:`POLY_DEGREE_BUDGET`. The ``v`` block of the result is
    returned normalized.
    """
    if sys_be.encoded is None:
        raise ValueError("the solve needs the encoded matrix")
    a = sys_be.dense()
    f_state = np.asarray(f_state)
    if f_state.shape != (a.shape[0],):
        raise ValueError(f"right-hand side has length {f_state.shape}, expected {a.shape[0]}")
    dil = dilate(a, f_state, rcond)
    kappa = dil.kappa_est
    if kappa > kappa_cap:
        raise KappaCapExceeded(kappa, kappa_cap)
    if use_polynomial is None:
        use_polynomial = inversion_degree_estimate(kappa, eps) <= POLY_DEGREE_BUDGET
    w, v = np.linalg.eigh(dil.A_tilde)
    # small eigenvalues: relative cut matches the classical truncation
    keep = np.abs(w) > rcond
    if use_polynomial:
        p = inversion_poly(max(kappa, 1.0 + 1e-12), min(eps, 0.5), MAX_INVERSION_DEGREE)
        g = np.where(keep, p(np.clip(w, -1.0, 1.0)), 0.0)
        degree = p.degree
    else:
        g = np.zeros_like(w)
        g[keep] = 1.0 / (2.0 * kappa * w[keep])
        degree = inversion_degree_estimate(kappa, eps)
    coeff = v.conj().T @ dil.f_tilde
    x = v @ (g * coeff)
    D = dil.A_tilde.shape[0] // 2
    vblock = x[D : D + dil.cols]
    amp = float(np.linalg.norm(vblock))
    if amp == 0:
        raise ValueError("right-hand side is orthogonal to the range of A")
    xi = 2.0 * kappa * amp
    rounds = int(np.ceil(kappa / xi))
    if ledger is not None:
        ledger.charge(sys_be.queries, degree * rounds)
        ledger.charge_calls(sys_be.label or "A", degree * rounds)
        ledger.charge(f_queries or {"U_f": 1}, 2 * rounds + 1)
        ledger.add_rounds(rounds)
        ledger.note_ancillas(sys_be.ancillas + 2)
        ledger.record("kappa", kappa)
        ledger.record("xi", xi)
        ledger.record("inversion_degree", degree)
    return QlspResult(vblock / amp, xi, kappa, dil.scale, degree, rounds, bool(use_polynomial))


# --------------------------------------------------------------------------
# recovery


@dataclass(frozen=True)
class SolutionState:
    """Unit-norm grid amplitudes ``∝ Phi v`` and the norm dropped on the way."""

    amplitudes: np.ndarray
    norm_factor: float

    def __post_init__(self):
        if not np.isclose(np.linalg.norm(self.amplitudes), 1.0, atol=1e-12):
            raise ValueError("amplitudes must have unit norm")


def feature_matrix_from_be(feature_be: BlockEncoding, N: int) -> np.ndarray:
    enc = feature_be.encoded if feature_be.encoded.ndim == 1 else np.diag(feature_be.encoded)
    return np.asarray(enc).reshape(N, -1)


def recover_solution_state(feature_be: BlockEncoding, v_state: np.ndarray, N: int | None = None,
                           ledger: ResourceLedger | None = None) -> SolutionState:
    """Amplitudes of ``(I ⊗ H^m) U_sigma (H^n ⊗ I) U_v |0>`` with the column register in ``|0^m>``.

    That block equals ``Phi v / sqrt(NM)``; ``norm_factor`` is its norm times
    ``sqrt(NM)``, so ``Phi v = amplitudes * norm_factor``.
    """
    v_state = np.asarray(v_state)
    M = v_state.size
    if N is None:
        N = (feature_be.encoded.size if feature_be.encoded.ndim == 1 else feature_be.encoded.shape[0]) // M
    phi = feature_matrix_from_be(feature_be, N)
    if phi.shape[1] != M:
        raise ValueError("coefficient vector does not match the feature register")
    block = phi @ v_state / np.sqrt(N * M)
    nrm = float(np.linalg.norm(block))
    if nrm == 0:
        raise ValueError("recovered state is zero")
    if ledger is not None:
        ledger.charge(feature_be.queries, 1)
    amps = block / nrm
    if np.all(np.abs(np.imag(amps)) < 1e-14):
        amps = np.real(amps)
    return SolutionState(amps, nrm * np.sqrt(N * M))


# --------------------------------------------------------------------------
# full run and resource report


@dataclass
class QrfmResult:
    state: SolutionState
    u: np.ndarray
    qlsp: QlspResult
    f_norm: float
    encodings: SystemEncodings
    ledger: ResourceLedger = field(repr=False)


def boundary_weight_from(penalties, grid: CollocationGrid) -> float:
    """Single boundary weight from a penalty vector that is 1 on interior rows."""
    if penalties is None:
        return 1.0
    lam = np.asarray(penalties, dtype=float)
    if lam.shape != (grid.N,) or not np.allclose(lam[grid.interior_mask], 1.0):
        raise ValueError("penalties must be 1 on interior rows and a shared value on boundary rows")
    b = lam[list(grid.boundary_indices)]
    if b.size and not np.allclose(b, b[0]):
        raise ValueError("boundary penalties must share one value")
    return float(b[0]) if b.size else 1.0


def run_qrfm(problem: PdeProblem, grid: CollocationGrid, spec: RandomFeatureSpec,
             cfg: PipelineConfig = PipelineConfig(), ledger: ResourceLedger | None = None,
             penalties=None) -> QrfmResult:
    """Run all five steps and return the state and the de-normalized solution on the grid.

    ``penalties`` (default all ones) weights the boundary rows of both ``A``
    and ``f``.
    """
    ledger = ledger if ledger is not None else ResourceLedger()
    bw = boundary_weight_from(penalties, grid)
    enc = build_system_be(problem, grid, spec, cfg.eps, cfg.mode, cfg.ux, ledger, cfg.allow_fallback, bw)
    prep: PreparedState = uf_prepare(problem, grid)
    if bw != 1.0:
        vals = prep.amplitudes * prep.norm
        vals[list(grid.boundary_indices)] *= bw
        prep = PreparedState(vals / np.linalg.norm(vals), float(np.linalg.norm(vals)))
    q = solve_qlsp_semantic(enc.a_amp, prep.amplitudes, cfg.eps, cfg.rcond, cfg.kappa_cap, ledger)
    state = recover_solution_state(enc.u_sigma, q.v_state, grid.N, ledger)
    ledger.note_ancillas(enc.u_sigma.ancillas)
    ledger.record("eps", cfg.eps)
    ledger.record("alpha_A", enc.a_be.alpha)
    u = denormalize(state, prep.norm, q)
    return QrfmResult(state, u, q, prep.norm, enc, ledger)


def denormalize(state: SolutionState, f_norm: float, q: QlspResult) -> np.ndarray:
    """Grid values ``Phi A^+ f`` from the normalized pieces."""
    return np.real(state.amplitudes * state.norm_factor * f_norm * q.xi / q.scale)


def resource_report(ledger: ResourceLedger, n: int, m: int, eps: float, alpha_A: float | None = None) -> dict:
    """Per-oracle counts next to the scaling model ``sqrt(MN) * mn * log(1/eps)``.

    ``sqrt_mn`` is the number of amplification rounds needed to normalize the
    encoding of ``A`` (``ceil(alpha_A)`` with ``alpha_A ∝ sqrt(MN)``) and
    ``log_inv_eps`` is ``ceil(log2(1/eps))``.
    """
    snap = ledger.snapshot()
    N, M = 2 ** n, 2 ** m
    if alpha_A is None:
        alpha_A = snap["notes"].get("alpha_A", np.sqrt(N * M))
    sqrt_mn = int(np.ceil(alpha_A - 1e-12))
    log_inv_eps = int(np.ceil(np.log2(1.0 / eps)))
    return {
        "n": n,
        "m": m,
        "eps": eps,
        "queries": snap["queries"],
        "ancilla_watermark": snap["ancilla_qubits"],
        "amplification_rounds": snap["amplification_rounds"],
        "components": {"sqrt_mn": sqrt_mn, "log_inv_eps": log_inv_eps, "poly_mn": m * n},
        "predicted": float(np.sqrt(N * M) * (m * n) * np.log2(1.0 / eps)),
        "notes": snap["notes"],
    }


__all__ = [
    "PipelineConfig", "KappaCapExceeded", "UnsupportedActivation", "MODES",
    "encoded_oracles", "tiny_oracles", "affine_encoding",
    "activation_encoding", "build_feature_be", "build_derivative_be",
    "helmholtz_weight_encoding", "operator_encoding", "boundary_flag_gates", "entry_oracle", "tiny_entry_oracle",
    "SystemEncodings", "build_system_be",
    "DilatedSystem", "dilate", "dilation_block_encoding", "QlspResult", "solve_qlsp_semantic",
    "SolutionState", "recover_solution_state", "feature_matrix_from_be",
    "QrfmResult", "boundary_weight_from", "run_qrfm", "denormalize", "resource_report",
]
