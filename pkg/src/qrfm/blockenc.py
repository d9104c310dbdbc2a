"""Block-encoding algebra on two tiers.

A :class:`BlockEncoding` of an operator ``B`` is a unitary whose top-left
block (ancillas in ``|0...0>``) equals ``B / alpha`` up to ``epsilon``. The
tiny tier carries that unitary as a :class:`~qrfm.circuit.Circuit`; the
encoded tier carries ``B`` itself, either as a dense matrix or, for diagonal
operators, as a 1-D array of the diagonal. Both may be present at once, in
which case the circuit is the construction and the matrix is its target.

Register layout for circuits: ancilla qubits first (``0..a-1``), then data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import circuit as qc
from .constants import SIMULATION_MAX_QUBITS
from .ledger import ResourceLedger, add_counts, scale_counts
from .linalg import spectral_norm


@dataclass(frozen=True)
class BlockEncoding:
    """(alpha, ancillas, epsilon) block-encoding.

    Attributes:
        alpha: normalization, ``B ≈ alpha * block``.
        ancillas: ancilla count ``a``.
        data_qubits: width of the register ``B`` acts on.
        epsilon: error bound on ``B``.
        circuit: tiny-tier unitary, width ``ancillas + data_qubits``.
        encoded: target operator ``B``; 2-D dense or 1-D diagonal.
        block_rows, block_cols: data-register indices of the rows/columns that
            form a rectangular block; ``None`` means the whole register.
        label: name used for query accounting.
        queries: oracle queries spent by one application of this encoding.
        meta: free-form construction details (rescale factors, degrees).
    """

    alpha: float
    ancillas: int
    data_qubits: int
    epsilon: float = 0.0
    circuit: qc.Circuit | None = field(default=None, repr=False)
    encoded: np.ndarray | None = field(default=None, repr=False)
    block_rows: np.ndarray | None = field(default=None, repr=False)
    block_cols: np.ndarray | None = field(default=None, repr=False)
    label: str = ""
    queries: Mapping[str, int] = field(default_factory=dict)
    meta: Mapping[str, object] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.alpha > 0 or not np.isfinite(self.alpha):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if self.ancillas < 0 or self.data_qubits < 0:
            raise ValueError("qubit counts must be nonnegative")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.circuit is None and self.encoded is None:
            raise ValueError("a block-encoding needs a circuit or an encoded matrix")
        if self.circuit is not None and self.circuit.width != self.ancillas + self.data_qubits:
            raise ValueError(f"circuit width {self.circuit.width} != ancillas + data "
                             f"({self.ancillas} + {self.data_qubits})")
        if self.encoded is not None:
            enc = self.encoded
            if not np.all(np.isfinite(enc)):
                raise ValueError("encoded matrix has non-finite entries")
            if self.block_rows is None and self.block_cols is None:
                dim = 2 ** self.data_qubits
                expected = (dim,) if enc.ndim == 1 else (dim, dim)
                if enc.shape != expected:
                    raise ValueError(f"encoded shape {enc.shape} does not fit {self.data_qubits} data qubits")
            norm = spectral_norm(enc)
            if norm > self.alpha + self.epsilon + 1e-9 * max(1.0, self.alpha):
                raise ValueError(f"‖B‖ = {norm:.6g} exceeds alpha + epsilon = {self.alpha + self.epsilon:.6g}")

    @property
    def tier(self) -> str:
        return "tiny" if self.circuit is not None else "encoded"

    @property
    def is_diagonal(self) -> bool:
        return self.encoded is not None and self.encoded.ndim == 1

    @property
    def width(self) -> int:
        return self.ancillas + self.data_qubits

    def dense(self) -> np.ndarray:
        """Encoded target as a dense matrix."""
        if self.encoded is None:
            raise ValueError("no encoded matrix attached")
        return np.diag(self.encoded) if self.encoded.ndim == 1 else self.encoded

    def adjoint(self) -> "BlockEncoding":
        enc = None
        if self.encoded is not None:
            enc = self.encoded.conj() if self.encoded.ndim == 1 else self.encoded.conj().T
        circ = self.circuit.adjoint() if self.circuit is not None else None
        label = self.label[:-3] if self.label.endswith("^dg") else (self.label + "^dg" if self.label else "")
        return replace(self, circuit=circ, encoded=enc, block_rows=self.block_cols,
                       block_cols=self.block_rows, label=label)

    def with_label(self, label: str, queries: Mapping[str, int] | None = None) -> "BlockEncoding":
        return replace(self, label=label, queries=dict(queries) if queries is not None else dict(self.queries))


# --------------------------------------------------------------------------
# constructors


def from_matrix(b, alpha: float | None = None, ancillas: int = 0, epsilon: float = 0.0,
                label: str = "", queries: Mapping[str, int] | None = None) -> BlockEncoding:
    """Encoded-tier wrapper; ``alpha`` defaults to ``max(‖B‖₂, tiny)``."""
    b = np.asarray(b)
    enc = b.astype(complex) if np.iscomplexobj(b) else b.astype(float)
    dim = enc.shape[0]
    d = int(round(np.log2(dim))) if dim else 0
    if 2 ** d != dim:
        raise ValueError(f"dimension {dim} is not a power of two; pad first")
    if alpha is None:
        alpha = max(spectral_norm(enc), np.finfo(float).tiny)
    return BlockEncoding(alpha, ancillas, d, epsilon, encoded=enc, label=label, queries=dict(queries or {}))


def from_circuit(c: qc.Circuit, ancillas: int, alpha: float = 1.0, target=None, epsilon: float = 0.0,
                 label: str = "", queries: Mapping[str, int] | None = None) -> BlockEncoding:
    enc = None if target is None else np.asarray(target)
    return BlockEncoding(alpha, ancillas, c.width - ancillas, epsilon, circuit=c, encoded=enc,
                         label=label, queries=dict(queries or {}))


def from_unitary_circuit(c: qc.Circuit, label: str = "", queries=None, with_target: bool = True) -> BlockEncoding:
    """A unitary is a (1, 0, 0)-encoding of itself."""
    target = qc.circuit_to_unitary(c) if with_target else None
    return from_circuit(c, 0, 1.0, target, label=label, queries=queries)


def identity_encoding(data_qubits: int, diagonal: bool = True) -> BlockEncoding:
    enc = np.ones(2 ** data_qubits) if diagonal else np.eye(2 ** data_qubits)
    return BlockEncoding(1.0, 0, data_qubits, circuit=qc.Circuit(data_qubits), encoded=enc)


def dilation_encoding(b, alpha: float | None = None, label: str = "", epsilon: float = 0.0,
                      queries: Mapping[str, int] | None = None) -> BlockEncoding:
    """Tiny-tier (alpha, 1, eps) encoding of ``B`` as one custom dilation gate.

    ``B`` may be a 1-D diagonal or a square matrix. Used for operators whose
    own circuit would be too deep for simulation.
    """
    b = np.asarray(b)
    if alpha is None:
        alpha = max(spectral_norm(b), np.finfo(float).tiny)
    dim = b.shape[0]
    d = int(round(np.log2(dim))) if dim else -1
    if dim == 0 or 2 ** d != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    if b.ndim == 1 and np.isrealobj(b):
        c = _real_diagonal_dilation(b / alpha, d, label or "DIL")
    else:
        u = qc.unitary_dilation(b / alpha)
        c = qc.Circuit(d + 1, (qc.custom(u, list(range(d + 1)), name=label or "DIL"),))
    return BlockEncoding(alpha, 1, d, epsilon, circuit=c, encoded=b, label=label, queries=dict(queries or {}))


def _real_diagonal_dilation(vals: np.ndarray, d: int, name: str) -> qc.Circuit:
    """``RY(phi_k) Z`` on the ancilla for each data index, built from diagonal gates.

    Same unitary as the dense dilation of a real diagonal, but every gate is
    one qubit or diagonal, so simulation stays cheap for large registers.
    """
    if np.max(np.abs(vals), initial=0.0) > 1 + 1e-12:
        raise ValueError("dilation needs ‖B‖ ≤ 1")
    half = np.arccos(np.clip(vals, -1.0, 1.0))
    phases = np.exp(1j * np.concatenate([-half, half]))
    return qc.Circuit(d + 1, (
        qc.z(0), qc.phase_diagonal([1, -1j], [0], "Sdg"), qc.h(0),
        qc.phase_diagonal(phases, list(range(d + 1)), name),
        qc.h(0), qc.phase_diagonal([1, 1j], [0], "S"),
    ))


def scalar_encoding(value: float, data_qubits: int = 0) -> BlockEncoding:
    """(1, 1, 0)-encoding of ``value * I`` via a single RY rotation (|value| ≤ 1)."""
    if abs(value) > 1:
        raise ValueError("scalar encoding needs |value| ≤ 1")
    theta = 2.0 * np.arccos(value)
    c = qc.Circuit(1 + data_qubits, (qc.ry(theta, 0),))
    return BlockEncoding(1.0, 1, data_qubits, circuit=c, encoded=np.full(2 ** data_qubits, float(value)))


# --------------------------------------------------------------------------
# block extraction


def _ancilla_zero_columns(be: BlockEncoding) -> np.ndarray:
    """Simulate the circuit on every input ``|0^a>|c>`` and return rows with ancillas in 0."""
    if be.circuit is None:
        raise ValueError("no circuit attached")
    if be.width > SIMULATION_MAX_QUBITS:
        raise qc.WidthError(f"width {be.width} exceeds the simulation cap of {SIMULATION_MAX_QUBITS} qubits")
    ddim = 2 ** be.data_qubits
    cols = np.arange(ddim) if be.block_cols is None else np.asarray(be.block_cols)
    state = np.zeros((2 ** be.width, cols.size), dtype=complex)
    state[cols, np.arange(cols.size)] = 1.0
    out = be.circuit.apply(state)
    rows = np.arange(ddim) if be.block_rows is None else np.asarray(be.block_rows)
    return out[rows, :]


def raw_block(be: BlockEncoding) -> np.ndarray:
    """``(<0^a| (x) I) U (|0^a> (x) I)`` without the alpha factor."""
    if be.circuit is None:
        return be.dense() / be.alpha
    return _ancilla_zero_columns(be)


def extract_block(be: BlockEncoding) -> np.ndarray:
    """``alpha`` times the top-left block; the stored matrix on the encoded tier."""
    if be.circuit is None:
        return be.dense()
    return be.alpha * _ancilla_zero_columns(be)


def encoding_error(be: BlockEncoding) -> float:
    """Max-abs deviation between the circuit block and the attached target."""
    return float(np.max(np.abs(extract_block(be) - be.dense())))


# --------------------------------------------------------------------------
# combinators


def _encoded_all(bes: Sequence[BlockEncoding]) -> bool:
    return all(b.encoded is not None for b in bes)


def _circuits_all(bes: Sequence[BlockEncoding]) -> bool:
    return all(b.circuit is not None for b in bes)


def _same_kind(encs: Sequence[np.ndarray]) -> list[np.ndarray]:
    if all(e.ndim == 1 for e in encs):
        return list(encs)
    return [np.diag(e) if e.ndim == 1 else e for e in encs]


def _prep_gate(weights: np.ndarray, k: int) -> qc.Gate | list[qc.Gate]:
    """PREP on ``k`` index qubits with amplitudes ``sqrt(weights / sum)``."""
    amps = np.zeros(2 ** k)
    amps[: weights.size] = np.sqrt(weights / weights.sum())
    if np.allclose(amps, amps[0]):
        return [qc.h(q) for q in range(k)]
    return [qc.custom(qc.householder_prep(amps), list(range(k)), name="PREP")]


def lcu_combine(terms: Sequence[tuple[complex, BlockEncoding]]) -> BlockEncoding:
    """Block-encoding of ``sum_i c_i B_i`` by PREP / SELECT / PREP^dagger.

    PREP loads ``sqrt(|c_i| alpha_i / lam)`` with ``lam = sum |c_i| alpha_i``;
    the phases of ``c_i`` sit in a diagonal gate on the index register. Term
    ancilla registers share one register of the largest size, right-aligned.
    Two equal-weight terms give the Hadamard sandwich.
    """
    if not terms:
        raise ValueError("lcu_combine needs at least one term")
    coefs = np.array([complex(c) for c, _ in terms])
    bes = [b for _, b in terms]
    d = bes[0].data_qubits
    if any(b.data_qubits != d for b in bes):
        raise ValueError("all LCU terms must act on the same data register")
    alphas = np.array([b.alpha for b in bes])
    weights = np.abs(coefs) * alphas
    lam = float(weights.sum())
    if lam <= 0:
        raise ValueError("LCU coefficients are all zero")
    eps = float(np.sum(np.abs(coefs) * np.array([b.epsilon for b in bes])))
    k = int(np.ceil(np.log2(len(terms)))) if len(terms) > 1 else 0
    shared = max(b.ancillas for b in bes)
    queries = add_counts(*[b.queries for b in bes])

    enc = None
    if _encoded_all(bes):
        encs = _same_kind([b.encoded for b in bes])
        enc = sum(c * e for c, e in zip(coefs, encs))
        if np.all(np.isreal(coefs)) and all(not np.iscomplexobj(e) for e in encs):
            enc = np.real(enc)

    circ = None
    if _circuits_all(bes):
        width = k + shared + d
        gates: list[qc.Gate] = []
        prep = _prep_gate(weights, k) if k else []
        gates += prep
        phases = np.ones(2 ** k, dtype=complex)
        nz = np.abs(coefs) > 0
        phases[: len(terms)][nz] = coefs[nz] / np.abs(coefs[nz])
        if k and not np.allclose(phases, 1.0):
            gates.append(qc.phase_diagonal(phases, list(range(k)), name="PHASE"))
        elif not k and not np.isclose(phases[0], 1.0):
            gates.append(qc.Gate("GPHASE", (), np.array([[phases[0]]])))
        for i, b in enumerate(bes):
            if weights[i] == 0 or not b.circuit.gates:
                continue
            mapping = [k + shared - b.ancillas + q for q in range(b.ancillas)]
            mapping += [k + shared + q for q in range(d)]
            sub = b.circuit.embed(width, mapping)
            if k:
                bits = [(i >> (k - 1 - q)) & 1 for q in range(k)]
                sub = sub.controlled(list(range(k)), bits)
            gates += sub.gates
        gates += [g.adjoint() for g in reversed(prep)]
        circ = qc.Circuit(width, tuple(gates))

    return BlockEncoding(lam, k + shared, d, eps, circuit=circ, encoded=enc, queries=queries,
                         meta={"lcu_weights": weights.tolist()})


def product(be1: BlockEncoding, be2: BlockEncoding) -> BlockEncoding:
    """Encoding of ``B1 @ B2``: ``be2`` acts first, each on its own ancillas."""
    if be1.data_qubits != be2.data_qubits:
        raise ValueError("product needs matching data registers")
    a1, a2, d = be1.ancillas, be2.ancillas, be1.data_qubits
    enc = None
    if _encoded_all([be1, be2]):
        e1, e2 = _same_kind([be1.encoded, be2.encoded])
        enc = e1 * e2 if e1.ndim == 1 else e1 @ e2
    circ = None
    if _circuits_all([be1, be2]):
        width = a1 + a2 + d
        data = [a1 + a2 + q for q in range(d)]
        c2 = be2.circuit.embed(width, [a1 + q for q in range(a2)] + data)
        c1 = be1.circuit.embed(width, list(range(a1)) + data)
        circ = c2 + c1
    eps = be1.alpha * be2.epsilon + be2.alpha * be1.epsilon
    return BlockEncoding(be1.alpha * be2.alpha, a1 + a2, d, eps, circuit=circ, encoded=enc,
                         queries=add_counts(be1.queries, be2.queries))


def kron(be_a: BlockEncoding, be_b: BlockEncoding) -> BlockEncoding:
    """Encoding of ``A (x) B``; layout ``[anc_A, anc_B, data_A, data_B]``."""
    aa, ab, da, db = be_a.ancillas, be_b.ancillas, be_a.data_qubits, be_b.data_qubits
    enc = None
    if _encoded_all([be_a, be_b]):
        ea, eb = _same_kind([be_a.encoded, be_b.encoded])
        enc = np.kron(ea, eb)
    circ = None
    if _circuits_all([be_a, be_b]):
        width = aa + ab + da + db
        ca = be_a.circuit.embed(width, list(range(aa)) + [aa + ab + q for q in range(da)])
        cb = be_b.circuit.embed(width, [aa + q for q in range(ab)] + [aa + ab + da + q for q in range(db)])
        circ = ca + cb
    eps = be_a.alpha * be_b.epsilon + be_b.alpha * be_a.epsilon
    return BlockEncoding(be_a.alpha * be_b.alpha, aa + ab, da + db, eps, circuit=circ, encoded=enc,
                         queries=add_counts(be_a.queries, be_b.queries))


def scale(be: BlockEncoding, factor: float) -> BlockEncoding:
    """Re-declare the encoded operator as ``factor * B`` (alpha scaled, circuit unchanged)."""
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    enc = None if be.encoded is None else be.encoded * factor
    return replace(be, alpha=be.alpha * factor, epsilon=be.epsilon * factor, encoded=enc)


def diag_project(be: BlockEncoding, m: int | None = None) -> BlockEncoding:
    """Encoding of the diagonal part of ``B`` with ``m`` extra ancillas.

    Each data qubit is copied onto a fresh ancilla by CNOT before and after
    ``U``; the ancillas return to zero exactly when input and output basis
    states agree. The new ancillas precede the old ones.
    """
    d = be.data_qubits
    if m is None:
        m = d
    if m != d:
        raise ValueError(f"diag_project acts on {d} data qubits, got m={m}")
    enc = None
    if be.encoded is not None:
        enc = be.encoded.copy() if be.encoded.ndim == 1 else np.diag(be.encoded).copy()
        if np.all(np.isreal(enc)):
            enc = np.real(enc)
    circ = None
    if be.circuit is not None:
        a = be.ancillas
        width = m + a + d
        copy = [qc.cnot(m + a + q, q) for q in range(m)]
        inner = be.circuit.shifted(m, width)
        circ = qc.Circuit(width, tuple(copy)) + inner + qc.Circuit(width, tuple(copy))
    return BlockEncoding(be.alpha, be.ancillas + m, d, be.epsilon, circuit=circ, encoded=enc,
                         queries=dict(be.queries), label=be.label)


def oracle_to_be(o: BlockEncoding, n: int, m: int) -> BlockEncoding:
    """Lift a diagonal entry oracle ``O_A`` to an encoding of the N x M matrix A.

    ``o`` encodes ``diag(A_ij)`` over the joint index ``i * M + j``. The
    Hadamard sandwich (H on the column register after O_A, H on the row
    register before) gives ``<i, 0^m| U |0^n, j> = A_ij / (alpha_O sqrt(MN))``.
    Rows of the block are the data states ``(i, 0^m)`` and columns ``(0^n, j)``.
    """
    if o.data_qubits != n + m:
        raise ValueError(f"oracle acts on {o.data_qubits} data qubits, expected n + m = {n + m}")
    N, M = 2 ** n, 2 ** m
    rows = np.arange(N) * M
    cols = np.arange(M)
    enc = None
    if o.encoded is not None:
        vals = o.encoded if o.encoded.ndim == 1 else np.diag(o.encoded)
        enc = np.asarray(vals).reshape(N, M)
    circ = None
    if o.circuit is not None:
        a = o.ancillas
        width = a + n + m
        pre = qc.Circuit(width, tuple(qc.h(a + q) for q in range(n)))
        post = qc.Circuit(width, tuple(qc.h(a + n + q) for q in range(m)))
        circ = pre + o.circuit + post
    alpha = o.alpha * np.sqrt(N * M)
    return BlockEncoding(alpha, o.ancillas, n + m, o.epsilon, circuit=circ, encoded=enc,
                         block_rows=rows, block_cols=cols, queries=dict(o.queries), label="A",
                         meta={"n": n, "m": m, "oracle_alpha": o.alpha})


def amplify(be: BlockEncoding, ledger: ResourceLedger | None = None) -> BlockEncoding:
    """Oblivious amplitude amplification as bookkeeping.

    ``(alpha, l, eps) -> (alpha', l + 1, alpha * eps)`` where ``alpha' = 1``
    when ``‖B‖₂ ≤ 1`` and ``‖B‖₂`` otherwise, so the rewritten parameters stay
    a valid encoding of the unchanged matrix. ``ceil(alpha)`` rounds are
    charged, each using ``be`` and ``be^dagger`` once.
    """
    if be.alpha < 1:
        raise ValueError("amplify expects alpha ≥ 1")
    rounds = int(np.ceil(be.alpha - 1e-12))
    label = be.label or "be"
    if ledger is not None:
        ledger.charge_calls(label, rounds)
        ledger.charge_calls(label + "^dg", rounds)
        ledger.add_rounds(rounds)
    norm = spectral_norm(be.encoded) if be.encoded is not None else 1.0
    new_alpha = max(1.0, norm)
    return BlockEncoding(new_alpha, be.ancillas + 1, be.data_qubits, be.alpha * be.epsilon,
                         encoded=be.encoded, block_rows=be.block_rows, block_cols=be.block_cols,
                         label=be.label, queries=scale_counts(be.queries, 2 * rounds),
                         meta={**dict(be.meta), "amplification_rounds": rounds})


__all__ = [
    "BlockEncoding",
    "from_matrix", "from_circuit", "from_unitary_circuit", "identity_encoding",
    "dilation_encoding", "scalar_encoding",
    "raw_block", "extract_block", "encoding_error",
    "lcu_combine", "product", "kron", "scale", "diag_project", "oracle_to_be", "amplify",
]
