"""Input oracles: grid coordinates U_x, random diagonals U_w / U_b, and U_f.

Every oracle comes back as a :class:`~qrfm.blockenc.BlockEncoding` that
carries both the construction circuit (when small enough to simulate) and the
encoded diagonal, so the pipeline can run on the encoded tier while tests
compare the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import circuit as qc
from .blockenc import BlockEncoding, diag_project, lcu_combine
from .problems import PdeProblem

ACTIVATIONS = ("sin", "cos", "tanh")


@dataclass(frozen=True)
class CollocationGrid:
    """Collocation points on [-1, 1] with ``N = 2**n`` entries."""

    n: int
    points: np.ndarray
    boundary_indices: tuple[int, ...] = ()
    uniform: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.shape != (2 ** self.n,):
            raise ValueError(f"expected {2 ** self.n} points, got shape {pts.shape}")
        if np.any(np.abs(pts) > 1.0 + 1e-12):
            raise ValueError("collocation points must lie in [-1, 1]")
        if any(not 0 <= i < pts.size for i in self.boundary_indices):
            raise ValueError("boundary index out of range")

    @property
    def N(self) -> int:
        return 2 ** self.n

    @property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[list(self.boundary_indices)] = False
        return mask

    @classmethod
    def uniform_grid(cls, n: int) -> "CollocationGrid":
        """``x_i = -1 + 2 i / (2**n - 1)`` with boundary rows {0, N-1}."""
        if n < 1:
            raise ValueError("need at least one qubit")
        N = 2 ** n
        pts = -1.0 + 2.0 * np.arange(N) / (N - 1)
        return cls(n, pts, (0, N - 1), uniform=True)


@dataclass(frozen=True)
class RandomFeatureSpec:
    """Features ``sigma(alpha_w (w_j x + b_j))`` for ``j < 2**m``."""

    m: int
    w: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    activation: str = "sin"
    alpha_w: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        M = 2 ** self.m
        if w.shape != (M,) or b.shape != (M,):
            raise ValueError(f"w and b must have length {M}")
        if np.any(np.abs(w) > 1 + 1e-12) or np.any(np.abs(b) > 1 + 1e-12):
            raise ValueError("|w_j| and |b_j| must not exceed 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")
        if not self.alpha_w >= 1:
            raise ValueError("alpha_w must be at least 1")

    @property
    def M(self) -> int:
        return 2 ** self.m

    def with_activation(self, activation: str) -> "RandomFeatureSpec":
        return replace(self, activation=activation)


@dataclass(frozen=True)
class PreparedState:
    """Unit-norm amplitudes plus the norm dropped during normalization."""

    amplitudes: np.ndarray
    norm: float


# --------------------------------------------------------------------------
# U_x


def fourier_matrix(n: int) -> np.ndarray:
    """``F_jk = exp(2 pi i jk / N) / sqrt(N)``."""
    N = 2 ** n
    k = np.arange(N)
    return np.exp(2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)


def cyclic_coefficients(x: np.ndarray) -> np.ndarray:
    """``a = F x``: first row of the circulant ``sqrt(N) F^-1 diag(x) F``."""
    n = int(round(np.log2(x.size)))
    return fourier_matrix(n) @ np.asarray(x, dtype=complex)


def state_prep_unitary(amplitudes: np.ndarray) -> np.ndarray:
    """Unitary whose first column is the normalized complex ``amplitudes``."""
    a = np.asarray(amplitudes, dtype=complex)
    a = a / np.linalg.norm(a)
    mat = np.eye(a.size, dtype=complex)
    mat[:, 0] = a
    q, r = np.linalg.qr(mat)
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q


def ux_cyclic(grid: CollocationGrid, tiny: bool | None = None) -> BlockEncoding:
    """Encoding of ``diag(x)`` through a circulant matrix.

    Time order on (index ⊗ data): ``F^-1`` on data, PREP of ``a / ‖a‖`` on the
    index register, binary-controlled shifts ``U**(2**j)``, ``H^n`` on the
    index register, ``F`` on data. PREP needs a unit vector, so the encoding
    has ``alpha = ‖x‖₂`` with ``n`` ancillas.
    """
    n = grid.n
    x = grid.points
    a = cyclic_coefficients(x)
    norm = float(np.linalg.norm(x))
    if norm == 0:
        raise ValueError("all-zero grid cannot be encoded")
    if tiny is None:
        tiny = n <= 6
    circ = None
    if tiny:
        width = 2 * n
        data = list(range(n, 2 * n))
        index = list(range(n))
        f = fourier_matrix(n)
        gates = [qc.custom(f.conj().T, data, name="F^-1"),
                 qc.custom(state_prep_unitary(a), index, name="PREP_a")]
        shifts = [shift for shift in (qc.shift_power_circuit(n, j) for j in range(n))]
        gates += qc.select_controlled(shifts, n, mode="binary").gates
        gates += [qc.h(q) for q in index]
        gates.append(qc.custom(f, data, name="F"))
        circ = qc.Circuit(width, tuple(gates))
    return BlockEncoding(norm, n, n, 0.0, circuit=circ, encoded=x.copy(), label="U_x",
                         queries={"U_x": 1},
                         meta={"construction": "cyclic", "a": a, "rescale": norm, "prep_queries": 1})


def _z_encoding(n: int, qubit: int) -> BlockEncoding:
    signs = 1.0 - 2.0 * ((np.arange(2 ** n) >> (n - 1 - qubit)) & 1)
    return BlockEncoding(1.0, 0, n, circuit=qc.Circuit(n, (qc.z(qubit),)), encoded=signs)


def ux_coordinate(grid: CollocationGrid) -> BlockEncoding:
    """Encoding of ``x_hat = -sum_k 2**k / (2**n - 1) Z_k`` (uniform grid only).

    ``Z_k`` acts on the bit of weight ``2**k``. PREP loads
    ``sqrt(2**k / (2**n - 1))`` on ``ceil(log2 n)`` index qubits.
    """
    if not grid.uniform:
        raise ValueError("the coordinate construction needs a uniform grid; use ux_cyclic instead")
    n = grid.n
    denom = 2.0 ** n - 1.0
    terms = [(-(2.0 ** k) / denom, _z_encoding(n, n - 1 - k)) for k in range(n)]
    be = lcu_combine(terms)
    return replace(be, label="U_x", queries={"U_x": 1},
                   meta={**dict(be.meta), "construction": "coordinate"})


# --------------------------------------------------------------------------
# U_w, U_b


def ansatz_diagonal(c: qc.Circuit) -> np.ndarray:
    dim = 2 ** c.width
    u = c.apply(np.eye(dim, dtype=complex))
    return np.diag(u).copy()


def diagonal_from_ansatz(c: qc.Circuit, label: str, tiny: bool = True) -> BlockEncoding:
    """(1, m+1, 0)-encoding of ``diag((U + U^dg) / 2)`` for an ansatz ``U``.

    An equal-weight LCU of ``U`` and ``U^dg`` followed by diagonal projection.
    """
    m = c.width
    values = np.real(ansatz_diagonal(c))
    circ = None
    if tiny:
        u = BlockEncoding(1.0, 0, m, circuit=c)
        lcu = lcu_combine([(0.5, u), (0.5, u.adjoint())])
        circ = diag_project(lcu, m).circuit
    return BlockEncoding(1.0, m + 1, m, 0.0, circuit=circ, encoded=values, label=label,
                         queries={label: 1})


def ansatz_seeds(seed) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(2)


def uw_ub_from_ansatz(m: int, seed, activation: str = "sin", alpha_w: float = 1.0,
                      tiny: bool | None = None):
    """Random diagonals from two independently seeded ansatz instances.

    Returns:
        ``(U_w, U_b, spec)`` where ``spec.w`` and ``spec.b`` are the real parts
        of the ansatz diagonals.
    """
    if tiny is None:
        tiny = m <= 6
    s_w, s_b = ansatz_seeds(seed)
    cw = qc.random_ansatz(m, s_w)
    cb = qc.random_ansatz(m, s_b)
    uw = diagonal_from_ansatz(cw, "U_w", tiny)
    ub = diagonal_from_ansatz(cb, "U_b", tiny)
    spec = RandomFeatureSpec(m, uw.encoded, ub.encoded, activation, alpha_w,
                             seed if isinstance(seed, (int, np.integer)) else None)
    return uw, ub, spec


def random_feature_spec(m: int, seed, activation: str = "sin", alpha_w: float = 1.0) -> RandomFeatureSpec:
    """Spec only, skipping circuit construction."""
    return uw_ub_from_ansatz(m, seed, activation, alpha_w, tiny=False)[2]


# --------------------------------------------------------------------------
# U_f


def rhs_vector(problem: PdeProblem, grid: CollocationGrid) -> np.ndarray:
    """Forcing at interior points and boundary values at boundary points."""
    vals = np.asarray(problem.forcing(grid.points), dtype=float).copy()
    for i in grid.boundary_indices:
        vals[i] = problem.boundary_value(grid.points[i])
    return vals


def uf_prepare(problem: PdeProblem, grid: CollocationGrid) -> PreparedState:
    vals = rhs_vector(problem, grid)
    norm = float(np.linalg.norm(vals))
    if norm == 0:
        raise ValueError("right-hand side is identically zero")
    return PreparedState(vals / norm, norm)


__all__ = [
    "CollocationGrid", "RandomFeatureSpec", "PreparedState", "ACTIVATIONS",
    "fourier_matrix", "cyclic_coefficients", "state_prep_unitary",
    "ux_cyclic", "ux_coordinate",
    "ansatz_diagonal", "diagonal_from_ansatz", "ansatz_seeds", "uw_ub_from_ansatz", "random_feature_spec",
    "rhs_vector", "uf_prepare",
]
