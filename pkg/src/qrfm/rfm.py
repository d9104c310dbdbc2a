"""Classical random feature method for the 1-D Helmholtz problem.

Global features are ``phi_j(x) = sigma(alpha_w (w_j x + b_j))``. Interior
collocation rows apply ``L = d^2/dx^2 + k^2`` in closed form; boundary rows
evaluate the features (Dirichlet). The coefficients solve the row-weighted
least-squares problem.

Local features glued by a partition of unity are in the second half of the
module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SOLVE_RCOND
from .linalg import lstsq_solve
from .oracles import CollocationGrid, RandomFeatureSpec, rhs_vector
from .problems import PdeProblem

INTERIOR = "interior"
BOUNDARY = "boundary"


def activation_value(activation: str, z: np.ndarray, order: int = 0) -> np.ndarray:
    """``sigma^(order)(z)`` for order 0, 1 or 2."""
    z = np.asarray(z, dtype=float)
    if activation == "sin":
        return [np.sin, np.cos, lambda u: -np.sin(u)][order](z)
    if activation == "cos":
        return [np.cos, lambda u: -np.sin(u), lambda u: -np.cos(u)][order](z)
    if activation == "tanh":
        t = np.tanh(z)
        if order == 0:
            return t
        if order == 1:
            return 1.0 - t * t
        return -2.0 * t * (1.0 - t * t)
    raise ValueError(f"unsupported activation {activation!r}")


def _arguments(spec: RandomFeatureSpec, x: np.ndarray) -> np.ndarray:
    return spec.alpha_w * (np.outer(x, spec.w) + spec.b[None, :])


def _points(grid_or_points) -> np.ndarray:
    if isinstance(grid_or_points, CollocationGrid):
        return grid_or_points.points
    return np.atleast_1d(np.asarray(grid_or_points, dtype=float))


def assemble_feature_matrix(spec: RandomFeatureSpec, grid) -> np.ndarray:
    """``Phi_ij = sigma(alpha_w (w_j x_i + b_j))``, shape (N, M)."""
    return activation_value(spec.activation, _arguments(spec, _points(grid)))


def feature_derivative_matrix(spec: RandomFeatureSpec, grid, order: int = 1) -> np.ndarray:
    """``d^order/dx^order`` of each feature at each point."""
    x = _points(grid)
    scale = (spec.alpha_w * spec.w[None, :]) ** order
    return scale * activation_value(spec.activation, _arguments(spec, x), order)


def operator_matrix(spec: RandomFeatureSpec, grid, k: float, method: str = "closed",
                    h: float = 1e-4) -> np.ndarray:
    """``(d^2/dx^2 + k^2) phi_j`` at every point.

    ``"closed"`` uses the activation identities: ``(k^2 - (a w)^2) sigma`` for
    sin/cos and ``2 (a w)^2 sigma^3 + (k^2 - 2 (a w)^2) sigma`` for tanh, with
    ``a = alpha_w``. ``"fd"`` uses a central second difference with step ``h``.
    """
    x = _points(grid)
    if method == "fd":
        phi = lambda p: activation_value(spec.activation, _arguments(spec, p))
        dd = (phi(x + h) - 2.0 * phi(x) + phi(x - h)) / (h * h)
        return dd + k * k * phi(x)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    sig = assemble_feature_matrix(spec, x)
    aw2 = (spec.alpha_w * spec.w[None, :]) ** 2
    if spec.activation in ("sin", "cos"):
        return (k * k - aw2) * sig
    if spec.activation == "tanh":
        return 2.0 * aw2 * sig ** 3 + (k * k - 2.0 * aw2) * sig
    raise ValueError(f"no closed-form operator image for {spec.activation!r}")


@dataclass(frozen=True)
class AssembledSystem:
    """Row-weighted collocation system ``A v ≈ f``."""

    A: np.ndarray
    f: np.ndarray
    row_kinds: np.ndarray
    penalties: np.ndarray

    def __post_init__(self):
        if self.A.shape[0] != self.f.shape[0] or self.f.shape != self.penalties.shape:
            raise ValueError("A, f and penalties disagree on the row count")
        if np.any(self.penalties <= 0):
            raise ValueError("penalties must be strictly positive")


def default_penalties(grid: CollocationGrid) -> np.ndarray:
    """1 on interior rows and ``sqrt(N)`` on boundary rows."""
    lam = np.ones(grid.N)
    lam[list(grid.boundary_indices)] = np.sqrt(grid.N)
    return lam


def unit_penalties(grid: CollocationGrid) -> np.ndarray:
    return np.ones(grid.N)


def assemble_system(problem: PdeProblem, spec: RandomFeatureSpec, grid: CollocationGrid,
                    penalties: np.ndarray | None = None) -> AssembledSystem:
    """Collocation matrix with Dirichlet rows at the boundary indices."""
    lam = default_penalties(grid) if penalties is None else np.asarray(penalties, dtype=float)
    if lam.shape != (grid.N,):
        raise ValueError(f"expected {grid.N} penalties")
    A = operator_matrix(spec, grid, problem.k)
    kinds = np.full(grid.N, INTERIOR, dtype=object)
    b_idx = list(grid.boundary_indices)
    if b_idx:
        A[b_idx] = assemble_feature_matrix(spec, grid.points[b_idx])
        kinds[b_idx] = BOUNDARY
    f = rhs_vector(problem, grid)
    return AssembledSystem(lam[:, None] * A, lam * f, kinds, lam)


def solve_coefficients(sys: AssembledSystem, rcond: float | None = SOLVE_RCOND) -> np.ndarray:
    """Minimum-norm least-squares coefficients."""
    return lstsq_solve(sys.A, sys.f, rcond)


def evaluate_solution(spec: RandomFeatureSpec, v: np.ndarray, points) -> np.ndarray:
    """``u(x) = sum_j v_j phi_j(x)``."""
    x = _points(points)
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("evaluation points must lie in [-1, 1]")
    return assemble_feature_matrix(spec, x) @ np.asarray(v)


# --------------------------------------------------------------------------
# partition of unity


@dataclass(frozen=True)
class PouSpec:
    """Local features ``sigma(k_nj x_tilde + b_nj)`` on patches ``x_tilde = (x - x_n) / r_n``.

    ``kind`` selects the weight: ``"psi_a"`` (indicator of [-1, 1)) or
    ``"psi_b"`` (indicator plateau with sine tails on [3/4, 5/4]). The first
    and last patches keep weight 1 beyond the outer domain edge so the weights
    sum to one up to the boundary.
    """

    centers: np.ndarray
    radii: np.ndarray
    kind: str
    k: np.ndarray
    b: np.ndarray
    activation: str = "tanh"
    domain: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("psi_a", "psi_b"):
            raise ValueError("kind must be 'psi_a' or 'psi_b'")
        if np.any(np.asarray(self.radii) <= 0):
            raise ValueError("radii must be positive")
        if self.k.shape != self.b.shape or self.k.shape[0] != len(self.centers):
            raise ValueError("k and b must be (patches, J) arrays")

    @property
    def patches(self) -> int:
        return len(self.centers)

    @property
    def J(self) -> int:
        return self.k.shape[1]

    @classmethod
    def uniform(cls, patches: int, J: int, kind: str = "psi_b", seed=0, activation: str = "tanh",
                scale: float = 1.0) -> "PouSpec":
        """Patches of radius ``1 / patches`` centred ``2 r`` apart on [-1, 1]."""
        r = 1.0 / patches
        centers = -1.0 + (2 * np.arange(patches) + 1) * r
        rng = np.random.default_rng(seed)
        k = rng.uniform(-scale, scale, size=(patches, J))
        b = rng.uniform(-scale, scale, size=(patches, J))
        return cls(centers, np.full(patches, r), kind, k, b, activation)


def psi_a(xt: np.ndarray) -> np.ndarray:
    xt = np.asarray(xt, dtype=float)
    return ((xt >= -1.0) & (xt < 1.0)).astype(float)


def psi_b(xt: np.ndarray, order: int = 0) -> np.ndarray:
    """Smooth-tailed weight and its derivatives in ``x_tilde``."""
    xt = np.asarray(xt, dtype=float)
    left = ((xt >= -1.25) & (xt < -0.75)).astype(float)
    mid = ((xt >= -0.75) & (xt <= 0.75)).astype(float)
    right = ((xt > 0.75) & (xt <= 1.25)).astype(float)
    s = np.sin(2 * np.pi * xt)
    c = np.cos(2 * np.pi * xt)
    if order == 0:
        return left * (1 + s) / 2 + mid + right * (1 - s) / 2
    if order == 1:
        return left * np.pi * c - right * np.pi * c
    if order == 2:
        return -left * 2 * np.pi ** 2 * s + right * 2 * np.pi ** 2 * s
    raise ValueError("order must be 0, 1 or 2")


def _patch_weights(pou: PouSpec, x: np.ndarray, order: int = 0) -> np.ndarray:
    """(points, patches) array of weight derivatives in x."""
    xt = (x[:, None] - pou.centers[None, :]) / pou.radii[None, :]
    last = pou.patches - 1
    lo, hi = pou.domain
    if pou.kind == "psi_a":
        w = psi_a(xt) if order == 0 else np.zeros_like(xt)
        if order == 0:
            w[:, last] = np.where(np.isclose(x, hi), 1.0, w[:, last])
        return w
    w = psi_b(xt, order) / pou.radii[None, :] ** order
    # flat outer tails on the first and last patch
    outer_lo = xt[:, 0] < -0.75
    outer_hi = xt[:, last] > 0.75
    w[outer_lo, 0] = 1.0 if order == 0 else 0.0
    w[outer_hi, last] = 1.0 if order == 0 else 0.0
    return w


def _local_features(pou: PouSpec, x: np.ndarray, order: int = 0) -> np.ndarray:
    """(points, patches, J) array of ``d^order/dx^order sigma(k x_tilde + b)``."""
    xt = (x[:, None] - pou.centers[None, :]) / pou.radii[None, :]
    z = pou.k[None, :, :] * xt[:, :, None] + pou.b[None, :, :]
    scale = (pou.k / pou.radii[:, None])[None, :, :] ** order
    return scale * activation_value(pou.activation, z, order)


def pou_basis(pou: PouSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """Patch weights ``psi_n(x)`` and local features ``phi_nj(x)`` at a point or points.

    Returns arrays of shape (patches,) and (patches, J) for scalar ``x``, with a
    leading points axis otherwise.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    w = _patch_weights(pou, xs)
    phi = _local_features(pou, xs)
    if np.ndim(x) == 0:
        return w[0], phi[0]
    return w, phi


def pou_design(pou: PouSpec, x: np.ndarray, order: int = 0) -> np.ndarray:
    """Design matrix of ``d^order/dx^order [psi_n phi_nj]``, columns ordered (n, j)."""
    x = np.asarray(x, dtype=float)
    if order == 0:
        out = _patch_weights(pou, x)[:, :, None] * _local_features(pou, x)
    elif order == 1:
        out = (_patch_weights(pou, x, 1)[:, :, None] * _local_features(pou, x)
               + _patch_weights(pou, x)[:, :, None] * _local_features(pou, x, 1))
    elif order == 2:
        out = (_patch_weights(pou, x, 2)[:, :, None] * _local_features(pou, x)
               + 2 * _patch_weights(pou, x, 1)[:, :, None] * _local_features(pou, x, 1)
               + _patch_weights(pou, x)[:, :, None] * _local_features(pou, x, 2))
    else:
        raise ValueError("order must be 0, 1 or 2")
    return out.reshape(x.size, -1)


def _interfaces(pou: PouSpec) -> np.ndarray:
    return 0.5 * (pou.centers[:-1] + pou.centers[1:])


def pou_continuity_rows(pou: PouSpec) -> np.ndarray:
    """Value and first-derivative matching across psi_a patch interfaces.

    At each interface ``x_I`` between patches ``n`` and ``n+1`` the rows read
    ``sum_j u_nj phi_nj^(q)(x_I) - sum_j u_{n+1,j} phi_{n+1,j}^(q)(x_I) = 0``
    for ``q = 0, 1``, with each local expansion evaluated on its own patch.
    """
    P, J = pou.patches, pou.J
    rows = []
    for n, xi in enumerate(_interfaces(pou)):
        for q in (0, 1):
            feats = _local_features(pou, np.array([xi]), q)[0]
            row = np.zeros((P, J))
            row[n] = feats[n]
            row[n + 1] = -feats[n + 1]
            rows.append(row.ravel())
    return np.array(rows).reshape(-1, P * J)


def pou_assemble(problem: PdeProblem, pou: PouSpec, grid: CollocationGrid,
                 boundary_weight: float | None = None, continuity_weight: float = 1.0) -> AssembledSystem:
    """Collocation system for the PoU representation; psi_a adds continuity rows."""
    x = grid.points
    A = pou_design(pou, x, 2) + problem.k ** 2 * pou_design(pou, x, 0)
    b_idx = list(grid.boundary_indices)
    A[b_idx] = pou_design(pou, x[b_idx], 0)
    f = rhs_vector(problem, grid)
    lam = np.ones(grid.N)
    lam[b_idx] = np.sqrt(grid.N) if boundary_weight is None else boundary_weight
    kinds = np.full(grid.N, INTERIOR, dtype=object)
    kinds[b_idx] = BOUNDARY
    A = lam[:, None] * A
    f = lam * f
    if pou.kind == "psi_a" and pou.patches > 1:
        C = continuity_weight * pou_continuity_rows(pou)
        A = np.vstack([A, C])
        f = np.concatenate([f, np.zeros(C.shape[0])])
        kinds = np.concatenate([kinds, np.full(C.shape[0], "continuity", dtype=object)])
        lam = np.concatenate([lam, np.full(C.shape[0], continuity_weight)])
    return AssembledSystem(A, f, kinds, lam)


def pou_evaluate(pou: PouSpec, coeffs: np.ndarray, x) -> np.ndarray:
    return pou_design(pou, np.atleast_1d(np.asarray(x, dtype=float))) @ coeffs


__all__ = [
    "activation_value", "assemble_feature_matrix", "feature_derivative_matrix", "operator_matrix",
    "AssembledSystem", "default_penalties", "unit_penalties", "assemble_system",
    "solve_coefficients", "evaluate_solution",
    "PouSpec", "psi_a", "psi_b", "pou_basis", "pou_design", "pou_continuity_rows",
    "pou_assemble", "pou_evaluate",
]
