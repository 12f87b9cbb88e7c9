"""Lie-algebra rank test for unitary controllability of ``H0 + u(t) V``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DepthExceeded, NotHermitian
from .states import SystemSpec, as_square_matrix


@dataclass(frozen=True, eq=False)
class LieClosureReport:
    """Result of closing ``{iH0, iV}`` under commutators.

    ``controllable`` is true when the closure is all of u(n) or exactly su(n);
    ``spans_su`` records whether su(n) is contained in it.
    """

    dimension: int
    controllable: bool
    spans_su: bool
    basis: List[np.ndarray]
    iterations: int
    n: int

    @property
    def full_dimension(self) -> int:
        return self.n * self.n


def _ip(a: np.ndarray, b: np.ndarray) -> float:
    # real inner product on skew-Hermitian matrices
    return float(np.real(np.vdot(a, b)))


def _reduce(x: np.ndarray, basis: List[np.ndarray]) -> np.ndarray:
    for _ in range(2):
        for b in basis:
            x = x - _ip(b, x) * b
    return x


def _try_add(x: np.ndarray, basis: List[np.ndarray], tol: float) -> Optional[np.ndarray]:
    norm = np.linalg.norm(x)
    if norm <= tol:
        return None
    r = _reduce(x / norm, basis)
    rn = np.linalg.norm(r)
    if rn <= tol:
        return None
    r = r / rn
    basis.append(r)
    return r


def lie_closure(h0, v, tol: float = 1e-10, max_depth: Optional[int] = None) -> LieClosureReport:
    """Dynamical Lie algebra generated by ``iH0`` and ``iV``.

    Generators are normalized first so the test is scale free; a new element
    is kept when its component orthogonal to the current basis is above
    ``tol`` relative to its own norm.

    Raises
    ------
    NotHermitian
        If ``h0`` or ``v`` is not Hermitian.
    DepthExceeded
        If the closure has not stabilized after ``n**4`` rounds.
    """
    h0 = as_square_matrix(h0)
    v = as_square_matrix(v)
    n = h0.shape[0]
    for name, m in (("H0", h0), ("V", v)):
        scale = max(float(np.max(np.abs(m))), 1e-300)
        if np.max(np.abs(m - m.conj().T)) > 1e-10 * scale:
            raise NotHermitian(f"{name} is not Hermitian")
    if v.shape != h0.shape:
        raise NotHermitian(f"H0 and V shapes differ: {h0.shape} vs {v.shape}")
    max_depth = n ** 4 if max_depth is None else max_depth

    basis: List[np.ndarray] = []
    gens = [1j * m / np.linalg.norm(m) for m in (h0, v) if np.linalg.norm(m) > 0]
    frontier = [b for b in (_try_add(g, basis, tol) for g in gens) if b is not None]
    iterations = 0
    while frontier and len(basis) < n * n:
        iterations += 1
        if iterations > max_depth:
            raise DepthExceeded(f"closure not stable after {max_depth} rounds")
        new = []
        old = list(basis)
        for a in frontier:
            for b in old:
                c = _try_add(a @ b - b @ a, basis, tol)
                if c is not None:
                    new.append(c)
                if len(basis) == n * n:
                    break
        frontier = new

    dim = len(basis)
    traceless = [b - np.trace(b) / n * np.eye(n) for b in basis]
    su_basis: List[np.ndarray] = []
    for t in traceless:
        _try_add(t, su_basis, tol)
    spans_su = len(su_basis) == n * n - 1
    controllable = dim == n * n or (dim == n * n - 1 and spans_su)
    return LieClosureReport(dim, controllable, spans_su, basis, iterations, n)


def system_closure(system: SystemSpec, tol: float = 1e-10) -> LieClosureReport:
    """Closure for the free Hamiltonian and the dipole coupling ``V = -mu``."""
    return lie_closure(system.hamiltonian(), -system.dipole_operator(), tol)
