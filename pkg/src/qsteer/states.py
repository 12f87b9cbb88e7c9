"""Density matrices, system descriptions and state metrics.

Conventions used throughout the package:

* Level ``k`` (0-based) is the ``k``-th energy eigenstate of the free
  Hamiltonian, energies sorted nondecreasing, so level 0 is the ground state.
* Transition frequencies are positive, ``omega[i, j] = energies[j] - energies[i]``
  for ``i < j``.
* The Bloch vector maps the ground level ``|0>`` to ``+z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    InvalidSystem,
    NotHermitian,
    NotPSD,
    NotSquare,
    TraceNotOne,
)

DEFAULT_TOL = 1e-10
DEFAULT_DEGENERACY_TOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_square_matrix(raw) -> np.ndarray:
    """Coerce ``raw`` to a finite square complex matrix (a copy)."""
    m = np.array(raw, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise NotSquare(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotSquare("matrix has non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state. Construct through :func:`validate_density`."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return self.mat.diagonal().real.copy()

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, populations={np.round(self.populations, 6).tolist()})"


def validate_density(raw, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """Check that ``raw`` is Hermitian, unit trace and positive semidefinite.

    The entries are kept as given; nothing is renormalized or symmetrized.

    Raises
    ------
    NotHermitian, TraceNotOne, NotPSD
        With the measured residual in the message.
    """
    m = as_square_matrix(raw)
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > tol:
        raise NotHermitian(f"max |rho - rho^dagger| = {herm:.3e} exceeds {tol:.1e}")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise TraceNotOne(f"|Tr(rho) - 1| = {abs(tr - 1.0):.3e} exceeds {tol:.1e}")
    lam_min = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    if lam_min < -tol:
        raise NotPSD(f"smallest eigenvalue {lam_min:.3e} is below -{tol:.1e}")
    return DensityMatrix(_frozen(m))


def basis_state(dim: int, k: int) -> DensityMatrix:
    m = np.zeros((dim, dim), dtype=complex)
    m[k, k] = 1.0
    return DensityMatrix(_frozen(m))


def diagonal_state(populations) -> DensityMatrix:
    return validate_density(np.diag(np.asarray(populations, dtype=float)))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(_frozen(np.eye(dim) / dim))


@dataclass(frozen=True, eq=False)
class SpectrumDecomposition:
    """Eigenvalues sorted strictly descending with phase-fixed eigenvectors.

    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def fix_phase(vec: np.ndarray, tie_tol: float = 1e-12) -> np.ndarray:
    """Rotate ``vec`` so its largest-magnitude component is real positive.

    Near-ties in magnitude go to the lowest index.
    """
    mags = np.abs(vec)
    k = int(np.flatnonzero(mags >= mags.max() - tie_tol)[0])
    return vec * (abs(vec[k]) / vec[k])


def decompose_target(
    rho_f: DensityMatrix, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL
) -> SpectrumDecomposition:
    """Spectral decomposition of a target state with ``p_1 > p_2 > ... > p_n``.

    Raises
    ------
    DegenerateSpectrum
        If two eigenvalues lie within ``degeneracy_tol`` of each other. Perturb
        the target slightly; non-degenerate states are dense.
    """
    m = np.asarray(rho_f.mat)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w, v = w[::-1], v[:, ::-1]
    gaps = w[:-1] - w[1:]
    if gaps.size and gaps.min() <= degeneracy_tol:
        k = int(np.argmin(gaps))
        raise DegenerateSpectrum(
            f"eigenvalues {w[k]:.12g} and {w[k + 1]:.12g} differ by {gaps[k]:.3e} "
            f"<= degeneracy_tol {degeneracy_tol:.1e}; perturb the target"
        )
    vecs = np.column_stack([fix_phase(v[:, k]) for k in range(v.shape[1])])
    w = np.array(w, dtype=float)
    w.setflags(write=False)
    vecs.setflags(write=False)
    return SpectrumDecomposition(w, vecs)


def _check_dims(a: DensityMatrix, b: DensityMatrix):
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of ``a - b``."""
    _check_dims(a, b)
    x, y = np.asarray(a.mat), np.asarray(b.mat)
    if x.tobytes() > y.tobytes():
        # canonical argument order makes the result exactly symmetric
        x, y = y, x
    d = x - y
    d = 0.5 * (d + d.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))


def frobenius_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _check_dims(a, b)
    return float(np.linalg.norm(np.asarray(a.mat) - np.asarray(b.mat)))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``."""
    _check_dims(a, b)
    sa = _psd_sqrt(np.asarray(a.mat))
    inner = sa @ np.asarray(b.mat) @ sa
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def to_density(self) -> DensityMatrix:
        m = 0.5 * (np.eye(2) + self.x * PAULI_X + self.y * PAULI_Y + self.z * PAULI_Z)
        return DensityMatrix(_frozen(m))


def bloch_vector(rho: DensityMatrix) -> BlochVector:
    if rho.dim != 2:
        raise DimensionMismatch(f"Bloch vector needs a 2-level state, got dim {rho.dim}")
    m = np.asarray(rho.mat)
    return BlochVector(*(float(np.real(np.trace(m @ s))) for s in (PAULI_X, PAULI_Y, PAULI_Z)))


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """An n-level system under control.

    Attributes
    ----------
    energies : (n,) float array
        Level energies as angular frequencies (rad/s, hbar = 1), nondecreasing.
    einstein : (n, n) float array
        ``einstein[i, j]`` for ``i < j`` is the spontaneous emission rate of
        ``j -> i`` (1/s). Diagonal and lower triangle are zero.
    dipole : (n, n) float array
        ``dipole[i, j]`` for ``i < j`` is the transition dipole (C m). The
        diagonal may hold permanent dipoles; the lower triangle is zero.
    """

    energies: np.ndarray
    einstein: np.ndarray
    dipole: np.ndarray = field(default=None)

    def __post_init__(self):
        e = np.array(self.energies, dtype=float)
        n = e.size
        if e.ndim != 1 or n < 2:
            raise InvalidSystem("energies must be a list of at least 2 values")
        if not np.all(np.isfinite(e)):
            raise InvalidSystem("energies must be finite")
        if np.any(np.diff(e) < 0):
            raise InvalidSystem("energies must be sorted nondecreasing")
        a = self._table(self.einstein, n, "einstein", allow_diagonal=False)
        mu = np.zeros((n, n)) if self.dipole is None else self._table(
            self.dipole, n, "dipole", allow_diagonal=True)
        for name, val in (("energies", e), ("einstein", a), ("dipole", mu)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @staticmethod
    def _table(raw, n, name, allow_diagonal):
        t = np.array(raw, dtype=float)
        if t.shape != (n, n):
            raise InvalidSystem(f"{name} must be a {n}x{n} table, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise InvalidSystem(f"{name} entries must be finite")
        if np.any(t < 0):
            raise InvalidSystem(f"{name} entries must be >= 0")
        k = -1 if allow_diagonal else 0
        if np.any(np.tril(t, k) != 0):
            raise InvalidSystem(f"{name} must be upper triangular (i < j entries only)")
        return t

    @property
    def dim(self) -> int:
        return self.energies.size

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    def dipole_operator(self) -> np.ndarray:
        """Real symmetric dipole matrix built from the upper-triangular table."""
        mu = self.dipole
        return (mu + mu.T - np.diag(mu.diagonal())).astype(complex)

    def pairs(self):
        n = self.dim
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    def transition_frequency(self, i: int, j: int) -> float:
        return float(self.energies[j] - self.energies[i])

    def general_position_issues(self, rel_tol: float = 1e-9) -> List[str]:
        """Reasons the system is *not* in general position (empty list if it is)."""
        issues = []
        for i, j in self.pairs():
            if self.einstein[i, j] == 0:
                issues.append(f"A[{i},{j}] = 0")
        freqs = [(self.transition_frequency(i, j), (i, j)) for i, j in self.pairs()]
        scale = max(max(abs(f) for f, _ in freqs), 1e-300)
        freqs.sort()
        for (f1, p1), (f2, p2) in zip(freqs, freqs[1:]):
            if f2 - f1 <= rel_tol * scale:
                issues.append(f"transition frequencies of {p1} and {p2} coincide")
        if any(f <= rel_tol * scale for f, _ in freqs):
            issues.append("zero transition frequency (degenerate energies)")
        return issues

    def scaled_rates(self, factor: float) -> "SystemSpec":
        return SystemSpec(self.energies, self.einstein * factor, self.dipole)


def random_density(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """Random state from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityMatrix(_frozen(0.5 * (m + m.conj().T)))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
