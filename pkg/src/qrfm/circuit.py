"""Small gate-model simulator.

Qubit 0 is the most significant bit of a basis-state index, so for a register
of width ``w`` the basis state ``|k>`` has qubit ``q`` equal to bit
``(k >> (w - 1 - q)) & 1``. Every construction in the package uses this
ordering.

Circuits are immutable gate lists. ``Circuit.apply`` acts on a batch of state
columns of shape ``(2**width, batch)``, which is how block extraction avoids
materializing full unitaries on wide registers.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import TINY_TIER_MAX_QUBITS, UNITARY_TOL

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class WidthError(ValueError):
    """Raised when a register is too wide to materialize on the tiny tier."""


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


@dataclass(frozen=True)
class Gate:
    """A (possibly controlled) unitary acting on ``targets``.

    ``matrix`` acts on the targets in the listed order (first target is the
    most significant). ``control_values[k]`` is 1 for an ordinary control and 0
    for an anti-control on ``controls[k]``.
    """

    name: str
    targets: tuple[int, ...]
    matrix: np.ndarray = field(repr=False, compare=False)
    controls: tuple[int, ...] = ()
    control_values: tuple[int, ...] = ()
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.targets and self.matrix.shape != (1, 1):
            raise ValueError("gate needs at least one target")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("repeated target qubit")
        if len(set(self.controls)) != len(self.controls):
            raise ValueError("repeated control qubit")
        if set(self.targets) & set(self.controls):
            raise ValueError("target and control sets must be disjoint")
        if len(self.control_values) != len(self.controls):
            raise ValueError("one polarity value per control is required")
        if any(v not in (0, 1) for v in self.control_values):
            raise ValueError("control polarity must be 0 or 1")
        dim = 2 ** len(self.targets)
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {len(self.targets)} targets")
        if not all(np.isfinite(p) for p in self.params):
            raise ValueError("gate parameters must be finite")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @functools.cached_property
    def is_diagonal(self) -> bool:
        m = self.matrix
        return not np.any(m[~np.eye(m.shape[0], dtype=bool)])

    def adjoint(self) -> "Gate":
        name = self.name[:-3] if self.name.endswith("^dg") else self.name + "^dg"
        return Gate(name, self.targets, self.matrix.conj().T, self.controls, self.control_values,
                    tuple(-p for p in self.params))

    def with_controls(self, controls: Sequence[int], values: Sequence[int] | None = None) -> "Gate":
        values = tuple(values) if values is not None else (1,) * len(controls)
        return Gate(self.name, self.targets, self.matrix, tuple(controls) + self.controls,
                    values + self.control_values, self.params)

    def remap(self, mapping: Sequence[int]) -> "Gate":
        return Gate(self.name, tuple(mapping[t] for t in self.targets), self.matrix,
                    tuple(mapping[c] for c in self.controls), self.control_values, self.params)


# gate constructors


def h(q: int) -> Gate:
    return Gate("H", (q,), _H)


def x(q: int) -> Gate:
    return Gate("X", (q,), _X)


def z(q: int) -> Gate:
    return Gate("Z", (q,), _Z)


def _angle(theta: float) -> float:
    if not np.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    return float(theta)


def ry(theta: float, q: int) -> Gate:
    theta = _angle(theta)
    return Gate("RY", (q,), ry_matrix(theta), params=(float(theta),))


def rz(theta: float, q: int) -> Gate:
    theta = _angle(theta)
    return Gate("RZ", (q,), rz_matrix(theta), params=(float(theta),))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (target,), _X, (control,), (1,))


def mcnot(controls: Sequence[int], target: int, values: Sequence[int] | None = None) -> Gate:
    values = tuple(values) if values is not None else (1,) * len(controls)
    return Gate("MCNOT", (target,), _X, tuple(controls), values)


def custom(matrix, targets: Sequence[int], name: str = "U") -> Gate:
    return Gate(name, tuple(targets), np.asarray(matrix, dtype=complex))


def phase_diagonal(phases, targets: Sequence[int], name: str = "D") -> Gate:
    """Diagonal gate ``diag(phases)`` on ``targets``; unitarity is the caller's job."""
    return Gate(name, tuple(targets), np.diag(np.asarray(phases, dtype=complex)))


def _apply_gate(psi: np.ndarray, gate: Gate, width: int) -> np.ndarray:
    """Apply ``gate`` in place to ``psi`` of shape (2,)*width + (batch,)."""
    idx: list = [slice(None)] * (width + 1)
    for c, v in zip(gate.controls, gate.control_values):
        idx[c] = v
    sub = psi[tuple(idx)]
    # axes of the targets inside the sliced view
    controls = sorted(gate.controls)
    axes = [t - sum(1 for c in controls if c < t) for t in gate.targets]
    k = len(axes)
    if k == 0:
        psi[tuple(idx)] = sub * gate.matrix[0, 0]
        return psi
    if gate.is_diagonal:
        diag = np.diag(gate.matrix).reshape((2,) * k)
        shape = [1] * sub.ndim
        order = np.argsort(axes)
        diag = np.transpose(diag, order)
        for a in axes:
            shape[a] = 2
        psi[tuple(idx)] = sub * diag.reshape(shape)
        return psi
    moved = np.moveaxis(sub, axes, list(range(k)))
    rest = moved.shape[k:]
    out = (gate.matrix @ moved.reshape(2 ** k, -1)).reshape((2,) * k + rest)
    psi[tuple(idx)] = np.moveaxis(out, list(range(k)), axes)
    return psi


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``width`` qubits; ``gates[0]`` acts first."""

    width: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("width must be nonnegative")
        for g in self.gates:
            if any(q < 0 or q >= self.width for q in g.qubits):
                raise ValueError(f"gate {g.name} touches qubits {g.qubits} outside width {self.width}")

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.width != self.width:
            raise ValueError(f"cannot concatenate widths {self.width} and {other.width}")
        return Circuit(self.width, self.gates + other.gates)

    def append(self, *gates: Gate) -> "Circuit":
        return Circuit(self.width, self.gates + tuple(gates))

    def adjoint(self) -> "Circuit":
        return Circuit(self.width, tuple(g.adjoint() for g in reversed(self.gates)))

    def controlled(self, controls: Sequence[int], values: Sequence[int] | None = None) -> "Circuit":
        """Control every gate on qubits already inside this register."""
        return Circuit(self.width, tuple(g.with_controls(controls, values) for g in self.gates))

    def embed(self, width: int, mapping: Sequence[int]) -> "Circuit":
        """Place this circuit into a ``width``-qubit register; qubit ``q`` goes to ``mapping[q]``."""
        if len(mapping) != self.width:
            raise ValueError("mapping must list one destination per qubit")
        return Circuit(width, tuple(g.remap(mapping) for g in self.gates))

    def shifted(self, offset: int, width: int) -> "Circuit":
        return self.embed(width, [q + offset for q in range(self.width)])

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Apply to a state vector or a batch of columns ``(2**width, batch)``."""
        state = np.asarray(state, dtype=complex)
        vector = state.ndim == 1
        cols = state.reshape(2 ** self.width, -1)
        psi = cols.reshape((2,) * self.width + (cols.shape[1],)).copy()
        for g in self.gates:
            psi = _apply_gate(psi, g, self.width)
        out = psi.reshape(2 ** self.width, -1)
        return out[:, 0] if vector else out

    def to_unitary(self, cap: int = TINY_TIER_MAX_QUBITS) -> np.ndarray:
        return circuit_to_unitary(self, cap)

    @property
    def size(self) -> int:
        return len(self.gates)


def circuit_to_unitary(c: Circuit, cap: int = TINY_TIER_MAX_QUBITS) -> np.ndarray:
    """Materialize the full ``2**width`` unitary of ``c``."""
    if c.width > cap:
        raise WidthError(f"circuit width {c.width} exceeds the tiny-tier cap of {cap} qubits; "
                         "use the encoded tier or column extraction instead")
    return c.apply(np.eye(2 ** c.width, dtype=complex))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


# constructions


def shift_matrix(n: int, power: int = 1) -> np.ndarray:
    """Cyclic decrement ``|k> -> |k - power mod 2**n>`` built by index arithmetic."""
    dim = 2 ** n
    u = np.zeros((dim, dim), dtype=complex)
    k = np.arange(dim)
    u[(k - power) % dim, k] = 1.0
    return u


def shift_power_circuit(n: int, j: int) -> Circuit:
    """Circuit for ``U**(2**j)`` with ``U|k> = |k-1 mod 2**n>``.

    Subtracting ``2**j`` flips bit ``j`` and borrows into bit ``b > j`` exactly
    when bits ``j..b-1`` are all zero, hence anti-controlled multi-target NOTs
    ordered from the top bit down, followed by ``X`` on bit ``j``.
    """
    if not 0 <= j < n:
        raise ValueError(f"exponent index j={j} out of range for n={n}")

    def qubit(bit: int) -> int:
        return n - 1 - bit

    gates = []
    for bit in range(n - 1, j, -1):
        lower = [qubit(b) for b in range(j, bit)]
        gates.append(mcnot(lower, qubit(bit), values=[0] * len(lower)))
    gates.append(x(qubit(j)))
    return Circuit(n, tuple(gates))


def ansatz_angles(m: int, seed: int | np.random.SeedSequence | None) -> np.ndarray:
    """Angles ``(theta1, theta2, theta3)`` per qubit, uniform on [0, 2π)."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * np.pi, size=(m, 3))


def cnot_ring(m: int) -> Circuit:
    """CNOT(i -> i+1) for i < m-1, then CNOT(m-1 -> 0); empty for m = 1."""
    if m < 2:
        return Circuit(m)
    gates = [cnot(i, i + 1) for i in range(m - 1)]
    gates.append(cnot(m - 1, 0))
    return Circuit(m, tuple(gates))


def random_ansatz(m: int, seed=None, angles: np.ndarray | None = None) -> Circuit:
    """Hardware-efficient layer: per-qubit RZ, RY, RZ followed by a CNOT ring.

    Args:
        m: number of qubits (>= 1).
        seed: seed or SeedSequence for the angles; ignored when ``angles`` is given.
        angles: optional ``(m, 3)`` array overriding the random draw.
    """
    if m < 1:
        raise ValueError("ansatz needs at least one qubit")
    if angles is None:
        angles = ansatz_angles(m, seed)
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (m, 3):
        raise ValueError(f"angles must have shape ({m}, 3)")
    gates = []
    for q in range(m):
        t1, t2, t3 = angles[q]
        gates += [rz(t1, q), ry(t2, q), rz(t3, q)]
    return Circuit(m, tuple(gates)) + cnot_ring(m)


def _is_identity(c: Circuit) -> bool:
    return len(c.gates) == 0


def select_controlled(blocks: Sequence[Circuit], selector_width: int, mode: str = "index") -> Circuit:
    """SELECT over data-register circuits.

    The result acts on ``selector_width + data_width`` qubits with the
    selector first. In ``"index"`` mode block ``k`` runs when the selector
    holds ``|k>``. In ``"binary"`` mode block ``j`` is controlled by the
    selector qubit carrying weight ``2**j``, so blocks ``U**(2**j)`` give
    ``sum_i |i><i| (x) U**i``.
    """
    if not blocks:
        raise ValueError("at least one block is required")
    widths = {b.width for b in blocks}
    if len(widths) != 1:
        raise ValueError(f"blocks act on different data widths: {sorted(widths)}")
    data = widths.pop()
    total = selector_width + data
    mapping = [selector_width + q for q in range(data)]
    gates: list[Gate] = []
    if mode == "index":
        if len(blocks) > 2 ** selector_width:
            raise ValueError(f"{len(blocks)} blocks do not fit a {selector_width}-qubit selector")
        sel = list(range(selector_width))
        for k, block in enumerate(blocks):
            if _is_identity(block):
                continue
            bits = [(k >> (selector_width - 1 - q)) & 1 for q in range(selector_width)]
            gates += block.embed(total, mapping).controlled(sel, bits).gates
    elif mode == "binary":
        if len(blocks) > selector_width:
            raise ValueError(f"{len(blocks)} binary blocks need as many selector qubits")
        for j, block in enumerate(blocks):
            control = selector_width - 1 - j
            gates += block.embed(total, mapping).controlled([control]).gates
    else:
        raise ValueError(f"unknown select mode {mode!r}")
    return Circuit(total, tuple(gates))


def householder_prep(amplitudes) -> np.ndarray:
    """Real orthogonal matrix whose first column is ``amplitudes`` (unit norm)."""
    a = np.asarray(amplitudes, dtype=float)
    a = a / np.linalg.norm(a)
    e0 = np.zeros_like(a)
    e0[0] = 1.0
    u = e0 - a
    nrm = np.linalg.norm(u)
    if nrm < 1e-15:
        return np.eye(a.size, dtype=complex)
    u /= nrm
    return (np.eye(a.size) - 2.0 * np.outer(u, u)).astype(complex)


def unitary_dilation(b: np.ndarray) -> np.ndarray:
    """One-ancilla unitary ``[[B, S_L], [S_R, -B^dagger]]`` with ``B`` in the top-left.

    ``B`` may be a square matrix with ``‖B‖ ≤ 1`` or a 1-D diagonal.
    """
    b = np.asarray(b, dtype=complex)
    if b.ndim == 1:
        if np.max(np.abs(b), initial=0.0) > 1 + 1e-12:
            raise ValueError("dilation needs ‖B‖ ≤ 1")
        s = np.sqrt(np.clip(1.0 - np.abs(b) ** 2, 0.0, None))
        return np.block([[np.diag(b), np.diag(s)], [np.diag(s), -np.diag(b.conj())]])
    w, sig, vh = np.linalg.svd(b)
    if sig[0] > 1 + 1e-12:
        raise ValueError("dilation needs ‖B‖ ≤ 1")
    s = np.sqrt(np.clip(1.0 - sig ** 2, 0.0, None))
    left = (w * s) @ w.conj().T
    right = (vh.conj().T * s) @ vh
    return np.block([[b, left], [right, -b.conj().T]])


__all__ = [
    "Gate", "Circuit", "WidthError",
    "h", "x", "z", "ry", "rz", "cnot", "mcnot", "custom", "phase_diagonal",
    "ry_matrix", "rz_matrix",
    "circuit_to_unitary", "is_unitary",
    "shift_matrix", "shift_power_circuit",
    "ansatz_angles", "cnot_ring", "random_ansatz",
    "select_controlled", "householder_prep", "unitary_dilation",
]
