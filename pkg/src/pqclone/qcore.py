"""Complex linear algebra and quantum primitives.

States are dense complex vectors, operators are dense complex matrices.
Everything is immutable after construction and safe to share across
threads; randomness is isolated in single-owner ``SeededRng`` instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox

from .errors import (
    BasisError,
    CapacityError,
    DimensionError,
    EmptyInputError,
    HermiticityError,
    NormalizationError,
)

NORM_TOL = 1e-10
HERM_TOL = 1e-10
PSD_TOL = 1e-9
RANK_TOL = 1e-9
MAX_DIM = 2**24


def _frozen(values, dtype=np.complex128) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ket:
    """A pure state: a dense complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.amplitudes)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionError("a ket must be a nonempty 1-D amplitude vector")
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def normalized(cls, values) -> "Ket":
        """Construct a unit-norm ket; raises on (near-)zero input."""
        arr = np.asarray(values, dtype=np.complex128)
        n = np.linalg.norm(arr)
        if n < 1e-12:
            raise NormalizationError("cannot normalize a zero vector")
        return cls(arr / n)

    @classmethod
    def basis_state(cls, dim: int, index: int) -> "Ket":
        if not 0 <= index < dim:
            raise DimensionError(f"basis index {index} outside dimension {dim}")
        arr = np.zeros(dim, dtype=np.complex128)
        arr[index] = 1.0
        return cls(arr)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A dense complex Hermitian matrix."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError("operator entries must form a square matrix")
        if np.max(np.abs(arr - arr.conj().T)) > HERM_TOL:
            raise HermiticityError("matrix is not Hermitian within tolerance")
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_matrix(cls, values) -> "HermitianOperator":
        """Symmetrize away roundoff before the Hermiticity check."""
        arr = np.asarray(values, dtype=np.complex128)
        return cls((arr + arr.conj().T) / 2.0)

    @classmethod
    def projector(cls, state: Ket) -> "HermitianOperator":
        v = state.amplitudes
        return cls(np.outer(v, v.conj()))

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim, dtype=np.complex128))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A weighted list of kets sharing one dimension."""

    members: tuple  # of (Ket, float)

    def __post_init__(self):
        members = tuple((k, float(p)) for k, p in self.members)
        if not members:
            raise EmptyInputError("an ensemble needs at least one member")
        dims = {k.dim for k, _ in members}
        if len(dims) != 1:
            raise DimensionError("ensemble members must share one dimension")
        total = sum(p for _, p in members)
        if abs(total - 1.0) > 1e-10:
            raise NormalizationError(f"ensemble probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0][0].dim

    def average_density(self) -> HermitianOperator:
        """The ensemble-averaged density matrix sum_m p_m |m><m|."""
        rho = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for state, prob in self.members:
            v = state.amplitudes
            rho += prob * np.outer(v, v.conj())
        return HermitianOperator.from_matrix(rho)


@dataclass
class SeededRng:
    """Counter-based random stream keyed by (seed, stream_id).

    Identical keys give identical draw sequences regardless of platform,
    thread count, or construction order. One instance per trial; never
    shared.
    """

    seed: int
    stream_id: int = 0
    _gen: Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = Generator(Philox(key=[self.seed, self.stream_id]))

    def random(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def normals(self, n: int) -> np.ndarray:
        return self._gen.standard_normal(n)

    def choice(self, probabilities: np.ndarray) -> int:
        """Sample an index from a probability vector with one uniform draw."""
        edges = np.cumsum(probabilities)
        # guard roundoff so a draw of ~1.0 cannot fall off the end
        edges[-1] = max(edges[-1], 1.0)
        return int(np.searchsorted(edges, self._gen.random(), side="right"))


# ---------------------------------------------------------------------------
# elementary operations


def inner_product(a: Ket, b: Ket) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.dim != b.dim:
        raise DimensionError(f"inner product of dims {a.dim} and {b.dim}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a: Ket, b: Ket) -> Ket:
    """Kronecker product; the left factor is the slow (row-major) index."""
    out_dim = a.dim * b.dim
    if out_dim > MAX_DIM:
        raise CapacityError(f"tensor dimension {out_dim} exceeds cap {MAX_DIM}")
    return Ket(np.kron(a.amplitudes, b.amplitudes))


def tensor_power(state: Ket, m: int) -> Ket:
    """|state>^(x m) with the same index convention as ``tensor``."""
    if m < 1:
        raise DimensionError("tensor power needs m >= 1")
    if state.dim**m > MAX_DIM:
        raise CapacityError(f"tensor dimension {state.dim}**{m} exceeds cap {MAX_DIM}")
    out = state.amplitudes
    for _ in range(m - 1):
        out = np.kron(out, state.amplitudes)
    return Ket(out)


def gram_matrix(states: Sequence[Ket]) -> HermitianOperator:
    """Matrix of pairwise inner products X[i,j] = <i|j>; Hermitian PSD."""
    if len(states) == 0:
        raise EmptyInputError("gram matrix of an empty state list")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise DimensionError("gram matrix needs states of one dimension")
    mat = np.column_stack([s.amplitudes for s in states])
    return HermitianOperator.from_matrix(mat.conj().T @ mat)


def hermitian_eigenvalues(m: HermitianOperator) -> np.ndarray:
    """Real spectrum in ascending order."""
    return np.linalg.eigvalsh(m.entries)


def hermitian_eigensystem(m: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """(eigenvalues ascending, eigenvector columns)."""
    return np.linalg.eigh(m.entries)


def rank_with_tolerance(states: Sequence[Ket], tol: float = RANK_TOL) -> int:
    """Linear-independence count: Gram eigenvalues above tol * largest."""
    if tol <= 0:
        raise ValueError("rank tolerance must be positive")
    eigs = hermitian_eigenvalues(gram_matrix(states))
    return int(np.sum(eigs > tol * eigs[-1]))


def is_psd(m: HermitianOperator, tol: float = PSD_TOL) -> bool:
    """True when the smallest eigenvalue is >= -tol."""
    return bool(hermitian_eigenvalues(m)[0] >= -tol)


def partial_trace(
    rho: HermitianOperator, dims: tuple[int, int], keep: str
) -> HermitianOperator:
    """Reduced density matrix of a bipartite operator.

    ``dims`` = (dA, dB) with rho.dim == dA * dB; ``keep`` selects the
    surviving subsystem, 'A' or 'B'. Trace is preserved.
    """
    d_a, d_b = dims
    if rho.dim != d_a * d_b:
        raise DimensionError(f"cannot factor dim {rho.dim} as {d_a} x {d_b}")
    tensor4 = rho.entries.reshape(d_a, d_b, d_a, d_b)
    if keep == "B":
        reduced = np.einsum("ijil->jl", tensor4)
    elif keep == "A":
        reduced = np.einsum("ijkj->ik", tensor4)
    else:
        raise ValueError("keep must be 'A' or 'B'")
    return HermitianOperator.from_matrix(reduced)


def _check_orthonormal(basis: Sequence[Ket], dim: int, tol: float = 1e-9) -> np.ndarray:
    if len(basis) != dim:
        raise BasisError(f"{len(basis)} basis vectors cannot span dimension {dim}")
    mat = np.column_stack([b.amplitudes for b in basis])
    if mat.shape[0] != dim:
        raise BasisError("basis vectors live in the wrong dimension")
    overlap = mat.conj().T @ mat
    if np.max(np.abs(overlap - np.eye(dim))) > tol:
        raise BasisError("basis is not orthonormal within tolerance")
    return mat


def born_measure(state: Ket, basis: Sequence[Ket], rng: SeededRng) -> tuple[int, Ket]:
    """Projective measurement of a full system in an orthonormal basis.

    Returns the sampled outcome index and the post-measurement state
    (the basis vector itself). Outcome k occurs with probability
    |<basis_k|state>|^2.
    """
    mat = _check_orthonormal(basis, state.dim)
    amps = mat.conj().T @ state.amplitudes
    probs = np.abs(amps) ** 2
    probs /= probs.sum()
    outcome = rng.choice(probs)
    return outcome, basis[outcome]


def measure_subsystem(
    state: Ket,
    dims: tuple[int, int],
    subsystem: str,
    basis: Sequence[Ket],
    rng: SeededRng,
) -> tuple[int, Ket]:
    """Measure one factor of a bipartite pure state in an orthonormal basis.

    Returns the sampled outcome and the normalized conditional state of
    the untouched co-subsystem.
    """
    d_a, d_b = dims
    if state.dim != d_a * d_b:
        raise DimensionError(f"cannot factor dim {state.dim} as {d_a} x {d_b}")
    joint = state.amplitudes.reshape(d_a, d_b)
    if subsystem == "A":
        mat = _check_orthonormal(basis, d_a)
        conditionals = mat.conj().T @ joint  # row m: unnormalized co-state
    elif subsystem == "B":
        mat = _check_orthonormal(basis, d_b)
        conditionals = (joint @ mat.conj()).T
    else:
        raise ValueError("subsystem must be 'A' or 'B'")
    probs = np.sum(np.abs(conditionals) ** 2, axis=1)
    probs /= probs.sum()
    outcome = rng.choice(probs)
    return outcome, Ket.normalized(conditionals[outcome])


def trace_distance(rho: HermitianOperator, sigma: HermitianOperator) -> float:
    """(1/2) sum |eig(rho - sigma)|: operational distinguishability."""
    if rho.dim != sigma.dim:
        raise DimensionError("trace distance needs equal dimensions")
    diff = HermitianOperator.from_matrix(rho.entries - sigma.entries)
    return float(0.5 * np.sum(np.abs(hermitian_eigenvalues(diff))))


# ---------------------------------------------------------------------------
# random-state helpers (tests, demos, instance generation)


def random_ket(dim: int, rng: SeededRng) -> Ket:
    """A ket with independent complex-normal amplitudes, normalized."""
    re = rng.normals(dim)
    im = rng.normals(dim)
    return Ket.normalized(re + 1j * im)


def haar_unitary(dim: int, rng: SeededRng) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normals(dim * dim) + 1j * rng.normals(dim * dim)).reshape(dim, dim)
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases.conj()
