"""Composite electron-nuclear Hilbert space: operators, states, Hamiltonian.

The electron qubit lives in its dressed basis {|+>, |->} (eigenbasis of the
drive) and occupies tensor slot 0; nucleus j (spin-1/2, basis {|up>, |dn>})
occupies slot j+1.  In this fixed ordering the drive splitting couples to
``sigma_z`` = diag(1, -1) and the hyperfine interaction enters through
``sigma_x``, which is the population-difference operator of the lab-frame
qubit levels.

All frequencies are angular (rad/s); fields are tesla.  Types are immutable
and operations are pure functions, safe for concurrent sweep evaluation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import GYROMAGNETIC_RATIOS

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
NORM_TOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# spin-1/2 operators for the nuclei
SPIN_X = 0.5 * SIGMA_X
SPIN_Y = 0.5 * SIGMA_Y
SPIN_Z = 0.5 * SIGMA_Z
SPIN_PLUS = SPIN_X + 1.0j * SPIN_Y
SPIN_MINUS = SPIN_X - 1.0j * SPIN_Y


class DimensionMismatchError(ValueError):
    """Operator or state dimensions do not match."""


@dataclass(frozen=True)
class Nucleus:
    """A spin-1/2 nucleus with secular hyperfine components.

    Parameters
    ----------
    gyromagnetic_ratio : float
        Angular frequency per tesla (rad/s/T).
    hyperfine_x : float
        Transverse hyperfine component A_x (rad/s).
    hyperfine_z : float
        Parallel hyperfine component A_z (rad/s).
    label : str
        Free text, e.g. the isotope name.
    """

    gyromagnetic_ratio: float
    hyperfine_x: float
    hyperfine_z: float
    label: str = ""

    def __post_init__(self):
        for name in ("gyromagnetic_ratio", "hyperfine_x", "hyperfine_z"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Nucleus.{name} must be finite")


def nucleus_from_isotope(isotope: str, hyperfine_x: float, hyperfine_z: float,
                         gyromagnetic_ratio: float | None = None) -> Nucleus:
    """Build a Nucleus from the bundled isotope table, optionally overriding gamma."""
    if gyromagnetic_ratio is None:
        try:
            gyromagnetic_ratio = GYROMAGNETIC_RATIOS[isotope]
        except KeyError:
            raise KeyError(
                f"unknown isotope {isotope!r}; known: {sorted(GYROMAGNETIC_RATIOS)}"
            ) from None
    return Nucleus(gyromagnetic_ratio, hyperfine_x, hyperfine_z, label=isotope)


@dataclass(frozen=True)
class SpinSystem:
    """Electron qubit plus N spin-1/2 nuclei under a static field along z.

    ``dimension`` is 2 * 2**N.  The electron occupies tensor slot 0 and
    nucleus j occupies slot j+1; this ordering is fixed and golden files
    depend on it.
    """

    field_z: float
    nuclei: tuple[Nucleus, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "nuclei", tuple(self.nuclei))

    @property
    def n_nuclei(self) -> int:
        return len(self.nuclei)

    @property
    def n_slots(self) -> int:
        return 1 + len(self.nuclei)

    @property
    def dimension(self) -> int:
        return 2 * 2 ** len(self.nuclei)


@dataclass(frozen=True)
class Observable:
    """A Hermitian operator on the composite space, with a display name."""

    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"observable matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) >= HERMITICITY_TOL:
            raise ValueError(f"observable {self.name!r} is not Hermitian within {HERMITICITY_TOL}")
        object.__setattr__(self, "matrix", m)


class QuantumState:
    """A state of the composite system: pure vector or density matrix.

    A state may additionally carry a decomposition into weighted pure
    branches (used for product states of a pure electron with maximally
    mixed nuclei); propagation exploits that decomposition by evolving
    the branch vectors instead of the full density matrix.
    """

    def __init__(self, *, vector: np.ndarray | None = None,
                 matrix: np.ndarray | None = None,
                 branch_weights: np.ndarray | None = None,
                 branch_vectors: np.ndarray | None = None):
        if (vector is None) == (matrix is None) and branch_vectors is None:
            raise ValueError("provide exactly one of vector, matrix, or branches")
        self._vector = None
        self._matrix = None
        self._branch_weights = None
        self._branch_vectors = None
        if vector is not None:
            v = np.asarray(vector, dtype=complex).ravel()
            norm = np.linalg.norm(v)
            if abs(norm - 1.0) >= NORM_TOL:
                raise ValueError(f"pure-state vector norm {norm} differs from 1 beyond {NORM_TOL}")
            self._vector = v
            self._branch_weights = np.array([1.0])
            self._branch_vectors = v[:, None]
        elif branch_vectors is not None:
            w = np.asarray(branch_weights, dtype=float)
            vs = np.asarray(branch_vectors, dtype=complex)
            if vs.ndim != 2 or vs.shape[1] != w.size:
                raise ValueError("branch_vectors must be (dimension, n_branches)")
            if abs(w.sum() - 1.0) >= TRACE_TOL or np.any(w < 0):
                raise ValueError("branch weights must be nonnegative and sum to 1")
            norms = np.linalg.norm(vs, axis=0)
            if np.max(np.abs(norms - 1.0)) >= NORM_TOL:
                raise ValueError("branch vectors must be unit norm")
            self._branch_weights = w
            self._branch_vectors = vs
            if w.size == 1:
                self._vector = vs[:, 0]
        else:
            m = np.asarray(matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionMismatchError("density matrix must be square")
            if np.max(np.abs(m - m.conj().T)) >= HERMITICITY_TOL:
                raise ValueError(f"density matrix not Hermitian within {HERMITICITY_TOL}")
            tr = np.trace(m).real
            if abs(tr - 1.0) >= TRACE_TOL:
                raise ValueError(f"density matrix trace {tr} differs from 1 beyond {TRACE_TOL}")
            if np.min(np.linalg.eigvalsh(m)) < EIGENVALUE_FLOOR:
                raise ValueError("density matrix has an eigenvalue below the tolerance floor")
            self._matrix = m

    @classmethod
    def pure(cls, vector: np.ndarray) -> "QuantumState":
        return cls(vector=vector)

    @classmethod
    def from_density(cls, matrix: np.ndarray) -> "QuantumState":
        return cls(matrix=matrix)

    @classmethod
    def mixture(cls, weights, vectors) -> "QuantumState":
        """Weighted mixture of pure states; ``vectors`` has one column per branch."""
        return cls(branch_weights=np.asarray(weights, dtype=float),
                   branch_vectors=np.asarray(vectors, dtype=complex))

    @property
    def dimension(self) -> int:
        if self._matrix is not None:
            return self._matrix.shape[0]
        return self._branch_vectors.shape[0]

    @property
    def is_pure(self) -> bool:
        return self._vector is not None

    @property
    def vector(self) -> np.ndarray:
        if self._vector is None:
            raise ValueError("state is not stored as a pure vector")
        return self._vector

    @property
    def branches(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(weights, vectors) decomposition if available, else None."""
        if self._branch_vectors is None:
            return None
        return self._branch_weights, self._branch_vectors

    def density_matrix(self) -> np.ndarray:
        """Materialize the density operator."""
        if self._matrix is not None:
            return self._matrix
        vs = self._branch_vectors
        return (vs * self._branch_weights) @ vs.conj().T


class InitialStateKind(str, enum.Enum):
    SENSING = "sensing"
    DNP_DCS = "dnp_dcs"
    TOPDNP_PARALLEL = "topdnp_parallel"
    TOPDNP_PERPENDICULAR = "topdnp_perpendicular"


def embed_matrix(local_op: np.ndarray, slot: int, system: SpinSystem) -> np.ndarray:
    """identity (x) ... (x) local_op (x) ... (x) identity, operator at ``slot``
    (0 = electron, j+1 = nucleus j).  No hermiticity requirement."""
    op = np.asarray(local_op, dtype=complex)
    if op.shape != (2, 2):
        raise DimensionMismatchError(f"local operator must be 2x2, got {op.shape}")
    if not 0 <= slot < system.n_slots:
        raise IndexError(f"slot {slot} out of range for {system.n_slots} slots")
    out = np.ones((1, 1), dtype=complex)
    for i in range(system.n_slots):
        out = np.kron(out, op if i == slot else IDENTITY_2)
    return out


def embed_operator(local_op: np.ndarray, slot: int, system: SpinSystem,
                   name: str = "") -> Observable:
    """Embed a single-site Hermitian 2x2 operator at the given tensor slot."""
    return Observable(embed_matrix(local_op, slot, system),
                      name=name or f"local[{slot}]")


def sigma_z_observable(system: SpinSystem) -> Observable:
    return embed_operator(SIGMA_Z, 0, system, name="sigma_z")


def sigma_x_observable(system: SpinSystem) -> Observable:
    return embed_operator(SIGMA_X, 0, system, name="sigma_x")


def nuclear_z_observable(system: SpinSystem, j: int) -> Observable:
    """I_z of nucleus j (1-based, matching the I_z[j] naming)."""
    return embed_operator(SPIN_Z, j, system, name=f"I_z[{j}]")


def nuclear_x_observable(system: SpinSystem, j: int) -> Observable:
    return embed_operator(SPIN_X, j, system, name=f"I_x[{j}]")


def nuclear_frequency(nucleus: Nucleus, field_z: float) -> float:
    """Shifted nuclear frequency gamma*B_z + A_z/2 (rad/s)."""
    return nucleus.gyromagnetic_ratio * field_z + 0.5 * nucleus.hyperfine_z


def build_hamiltonian(system: SpinSystem, omega_e: float) -> Observable:
    """Rotating-frame Hamiltonian at drive splitting ``omega_e``.

    H = omega_e * sigma_z/2
        + sum_j omega_nj * I_z[j]
        + (sigma_x/2) * sum_j (A_xj * I_x[j] + A_zj * I_z[j])
    """
    if not math.isfinite(omega_e):
        raise ValueError("omega_e must be finite")
    dim = system.dimension
    h = np.zeros((dim, dim), dtype=complex)
    h += omega_e * embed_operator(0.5 * SIGMA_Z, 0, system).matrix
    sx = embed_operator(SIGMA_X, 0, system).matrix
    for j, nuc in enumerate(system.nuclei, start=1):
        iz = embed_operator(SPIN_Z, j, system).matrix
        ix = embed_operator(SPIN_X, j, system).matrix
        h += nuclear_frequency(nuc, system.field_z) * iz
        h += 0.5 * sx @ (nuc.hyperfine_x * ix + nuc.hyperfine_z * iz)
    return Observable(h, name="H")


def expectation(state: QuantumState, obs: Observable) -> float:
    """Tr[rho O]; the imaginary residue is asserted below 1e-10 and dropped."""
    if state.dimension != obs.matrix.shape[0]:
        raise DimensionMismatchError(
            f"state dimension {state.dimension} != observable dimension {obs.matrix.shape[0]}"
        )
    branches = state.branches
    if branches is not None:
        w, vs = branches
        value = complex(np.einsum("ib,ij,jb,b->", vs.conj(), obs.matrix, vs, w))
    else:
        value = complex(np.trace(state.density_matrix() @ obs.matrix))
    if abs(value.imag) >= 1e-10:
        raise ValueError(f"expectation value has imaginary residue {value.imag}")
    return value.real


_ELECTRON_VECTORS = {
    # dressed |+> : sensing and DCS polarization start, and the lab-frame
    # transverse ("perpendicular") preparation for the pulse-train protocol
    InitialStateKind.SENSING: np.array([1.0, 0.0], dtype=complex),
    InitialStateKind.DNP_DCS: np.array([1.0, 0.0], dtype=complex),
    InitialStateKind.TOPDNP_PERPENDICULAR: np.array([1.0, 0.0], dtype=complex),
    # lab-frame |1> population state ("parallel" to the static field)
    InitialStateKind.TOPDNP_PARALLEL: np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
}


def initial_state(kind: InitialStateKind | str, system: SpinSystem) -> QuantumState:
    """Electron prepared per ``kind``, nuclei in the maximally mixed state.

    The nuclear identity is expanded over the 2**N basis states as equally
    weighted pure branches, which propagation handles by linearity.
    """
    kind = InitialStateKind(kind)
    electron = _ELECTRON_VECTORS[kind]
    n = system.n_nuclei
    if n == 0:
        return QuantumState.pure(electron)
    dim_n = 2 ** n
    vectors = np.zeros((2 * dim_n, dim_n), dtype=complex)
    for b in range(dim_n):
        basis = np.zeros(dim_n, dtype=complex)
        basis[b] = 1.0
        vectors[:, b] = np.kron(electron, basis)
    weights = np.full(dim_n, 1.0 / dim_n)
    return QuantumState.mixture(weights, vectors)
