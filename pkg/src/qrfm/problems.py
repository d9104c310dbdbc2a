"""PDE problem definitions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PdeProblem:
    """1-D Helmholtz problem ``u'' + k^2 u = f`` on [-1, 1] with Dirichlet data.

    Attributes:
        k: wave number.
        forcing: callable returning ``f(x)``.
        left, right: boundary values ``u(-1)`` and ``u(1)``.
        exact: optional closed-form solution for error reporting.
        domain: interval endpoints.
    """

    k: float
    forcing: Func
    left: float
    right: float
    exact: Func | None = None
    domain: tuple[float, float] = (-1.0, 1.0)
    name: str = "helmholtz"

    def boundary_value(self, x: float) -> float:
        lo, hi = self.domain
        if np.isclose(x, lo):
            return self.left
        if np.isclose(x, hi):
            return self.right
        if self.exact is None:
            raise ValueError(f"no boundary value available at x={x}")
        return float(self.exact(np.array([x]))[0])


def helmholtz_exact(x):
    y = np.asarray(x, dtype=float) + 0.05
    return np.sin(3 * np.pi * y) * np.cos(2 * np.pi * y) + 2.0


def helmholtz_exact_dd(x):
    # u - 2 = (sin(5 pi y) + sin(pi y)) / 2
    y = np.asarray(x, dtype=float) + 0.05
    return -0.5 * ((5 * np.pi) ** 2 * np.sin(5 * np.pi * y) + np.pi ** 2 * np.sin(np.pi * y))


def helmholtz_problem(k: float = 2.0) -> PdeProblem:
    """Manufactured Helmholtz benchmark with ``u = sin(3π(x+.05)) cos(2π(x+.05)) + 2``."""

    def forcing(x):
        return helmholtz_exact_dd(x) + k * k * helmholtz_exact(x)

    left = float(helmholtz_exact(np.array([-1.0]))[0])
    right = float(helmholtz_exact(np.array([1.0]))[0])
    return PdeProblem(k=k, forcing=forcing, left=left, right=right, exact=helmholtz_exact)


__all__ = ["PdeProblem", "helmholtz_problem", "helmholtz_exact", "helmholtz_exact_dd"]
