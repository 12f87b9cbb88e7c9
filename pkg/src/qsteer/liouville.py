"""Incoherent-light Liouvillian: assembly, steady states, gaps, CP checks.

The generator is

    L(rho) = -i[H0, rho] + sum_{i<j} A_ij [(n_ij + 1) D[Q_ij](rho) + n_ij D[Q_ji](rho)]

with ``Q_ij = |i><j|`` and ``D[Q](rho) = 2 Q rho Q^+ - Q^+Q rho - rho Q^+Q``,
taken literally (note the factor 2). Any light-induced Hamiltonian shift is
set to zero. Superoperators act on column-stacked density matrices,
``vec(rho) = rho.flatten(order="F")``.

Because ``H0`` is diagonal and every jump operator is a transition operator,
the superoperator is block diagonal after a permutation: populations form one
block, and each coherence is its own 1x1 block. Null spaces, spectra and
exponentials are computed block by block, which keeps the optical-frequency
entries (~1e15 rad/s) from polluting the population dynamics (~1e8 1/s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Mapping, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import MissingOccupation, NonUniqueSteadyState, NumericalError, ValidationError
from .states import DensityMatrix, SystemSpec, validate_density

NULL_REL_TOL = 1e-8
RESIDUAL_REL_TOL = 1e-10

Pair = Tuple[int, int]


def vec(rho) -> np.ndarray:
    return np.asarray(rho).flatten(order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> -i[h, rho]``."""
    n = h.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def lindblad_superop(q: np.ndarray) -> np.ndarray:
    """Superoperator of ``2 q rho q^+ - q^+q rho - rho q^+q``."""
    n = q.shape[0]
    eye = np.eye(n)
    qdq = q.conj().T @ q
    return 2 * np.kron(q.conj(), q) - np.kron(eye, qdq) - np.kron(qdq.T, eye)


def transition_operator(dim: int, i: int, j: int) -> np.ndarray:
    q = np.zeros((dim, dim), dtype=complex)
    q[i, j] = 1.0
    return q


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Photon occupation number of the incoherent field for each transition pair."""

    occupation: Mapping[Pair, float]

    def __post_init__(self):
        occ = {}
        for (i, j), v in dict(self.occupation).items():
            i, j = int(i), int(j)
            if not i < j:
                raise ValidationError(f"occupation pair ({i}, {j}) must have i < j")
            v = float(v)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"occupation n[{i},{j}] = {v} must be finite and >= 0")
            occ[(i, j)] = v
        object.__setattr__(self, "occupation", occ)

    @classmethod
    def from_table(cls, table) -> "SpectralDensity":
        """Build from an upper-triangular table; NaN marks a missing entry."""
        t = np.asarray(table, dtype=float)
        return cls({(i, j): t[i, j] for i in range(t.shape[0])
                    for j in range(i + 1, t.shape[0]) if not np.isnan(t[i, j])})

    @classmethod
    def uniform(cls, dim: int, value: float) -> "SpectralDensity":
        return cls({(i, j): value for i in range(dim) for j in range(i + 1, dim)})

    def __getitem__(self, pair: Pair) -> float:
        return self.occupation[pair]

    def get(self, pair: Pair, default=None):
        return self.occupation.get(pair, default)

    def as_table(self, dim: int) -> np.ndarray:
        t = np.zeros((dim, dim))
        for (i, j), v in self.occupation.items():
            t[i, j] = v
        return t


@dataclass(frozen=True, eq=False)
class Liouvillian:
    system: SystemSpec
    density: SpectralDensity
    superop: np.ndarray
    blocks: List[np.ndarray] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.system.dim

    def apply(self, rho) -> np.ndarray:
        return unvec(self.superop @ vec(rho), self.dim)

    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([np.linalg.eigvals(self.superop[np.ix_(b, b)]) for b in self.blocks])

    def propagator(self, t: float) -> np.ndarray:
        """``exp(L t)`` as an n^2 x n^2 matrix, exponentiated block by block."""
        s = np.zeros_like(self.superop)
        for b in self.blocks:
            idx = np.ix_(b, b)
            s[idx] = scipy.linalg.expm(self.superop[idx] * t)
        return s


def find_blocks(superop: np.ndarray) -> List[np.ndarray]:
    """Index sets of the irreducible diagonal blocks of ``superop``."""
    pattern = (superop != 0) | (superop.T != 0)
    ncomp, labels = connected_components(pattern, directed=False)
    return [np.flatnonzero(labels == c) for c in range(ncomp)]


def build_dissipator(system: SystemSpec, density: SpectralDensity) -> Liouvillian:
    """Assemble the full Liouvillian for a constant spectral density.

    Raises
    ------
    MissingOccupation
        If a pair with ``A_ij > 0`` has no occupation entry.
    """
    n = system.dim
    s = commutator_superop(system.hamiltonian())
    for i, j in system.pairs():
        a = system.einstein[i, j]
        occ = density.get((i, j))
        if a == 0:
            continue
        if occ is None:
            raise MissingOccupation(f"A[{i},{j}] = {a:g} > 0 but no occupation n[{i},{j}] given")
        s = s + a * ((occ + 1) * lindblad_superop(transition_operator(n, i, j))
                     + occ * lindblad_superop(transition_operator(n, j, i)))
    s.setflags(write=False)
    return Liouvillian(system, density, s, find_blocks(s))


@dataclass(frozen=True)
class _NullAnalysis:
    count: int
    vector: np.ndarray
    per_block: List[int]
    scale: float


def _null_analysis(L: Liouvillian) -> _NullAnalysis:
    gmax = float(np.max(np.abs(L.superop))) if L.superop.size else 0.0
    per_block, vector, scale = [], None, 0.0
    for b in L.blocks:
        sub = L.superop[np.ix_(b, b)]
        _, sv, vh = np.linalg.svd(sub)
        thresh = max(NULL_REL_TOL * sv[0], 1e-14 * gmax)
        k = int(np.sum(sv <= thresh))
        per_block.append(k)
        if k == 1 and vector is None:
            vector = np.zeros(L.superop.shape[0], dtype=complex)
            vector[b] = vh[-1].conj()
            scale = float(np.max(np.abs(sub)))
    return _NullAnalysis(sum(per_block), vector, per_block, scale)


def steady_state(L: Liouvillian) -> DensityMatrix:
    """The unique state annihilated by ``L``.

    Raises
    ------
    NonUniqueSteadyState
        If the null space has dimension other than one (general-position
        assumptions violated, e.g. some ``A_ij = 0``).
    """
    na = _null_analysis(L)
    if na.count != 1:
        raise NonUniqueSteadyState(
            f"Liouvillian null space has dimension {na.count}; the steady state is not unique"
        )
    rho = unvec(na.vector, L.dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-300:
        raise NumericalError("null vector has zero trace")
    rho = rho / tr
    resid = float(np.max(np.abs(L.apply(rho))))
    if resid > RESIDUAL_REL_TOL * max(na.scale, 1.0):
        raise NumericalError(f"steady-state residual {resid:.3e} too large")
    return validate_density(rho)


def steady_state_residual(L: Liouvillian, rho) -> float:
    """``max|L(rho)|`` divided by the largest rate in the population block."""
    na = _null_analysis(L)
    scale = na.scale if na.scale > 0 else float(np.max(np.abs(L.superop)))
    return float(np.max(np.abs(L.apply(np.asarray(rho))))) / max(scale, 1e-300)


def spectral_gap(L: Liouvillian) -> float:
    """Smallest ``|Re lambda|`` over the nonzero eigenvalues of ``L`` (1/s)."""
    na = _null_analysis(L)
    if na.count != 1:
        raise NonUniqueSteadyState(
            f"Liouvillian null space has dimension {na.count}; no spectral gap"
        )
    rest = []
    for b, k in zip(L.blocks, na.per_block):
        ev = np.linalg.eigvals(L.superop[np.ix_(b, b)])
        ev = ev[np.argsort(np.abs(ev))]
        rest.append(ev[k:])
    rest = np.concatenate(rest)
    return float(np.min(np.abs(rest.real)))


def relaxation_time(L: Liouvillian) -> float:
    return 1.0 / spectral_gap(L)


def choi_matrix(superop_t: np.ndarray, dim: int) -> np.ndarray:
    """Normalized Choi matrix ``sum_ij |i><j| (x) Phi(|i><j|) / n``."""
    n = dim
    c = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            img = unvec(superop_t[:, j * n + i], n)
            c[i * n:(i + 1) * n, j * n:(j + 1) * n] = img
    return c / n


@dataclass(frozen=True)
class CPReport:
    t: float
    choi_min_eigenvalue: float
    trace_error: float
    psd_tol: float = 1e-8
    trace_tol: float = 1e-8

    @property
    def completely_positive(self) -> bool:
        return self.choi_min_eigenvalue >= -self.psd_tol

    @property
    def trace_preserving(self) -> bool:
        return self.trace_error <= self.trace_tol

    @property
    def passed(self) -> bool:
        return self.completely_positive and self.trace_preserving


def cp_check(L: Liouvillian, t: float) -> CPReport:
    """Complete positivity and trace preservation of ``exp(L t)``."""
    if t < 0:
        raise ValidationError(f"t must be >= 0, got {t}")
    n = L.dim
    s = L.propagator(t)
    c = choi_matrix(s, n)
    lam = float(np.linalg.eigvalsh(0.5 * (c + c.conj().T))[0])
    # Tr Phi(|i><j|) must equal delta_ij
    tr_row = sum(s[k * n + k, :] for k in range(n))
    err = float(np.max(np.abs(tr_row - vec(np.eye(n)))))
    return CPReport(float(t), lam, err)
