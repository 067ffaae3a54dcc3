"""Finite-dimensional multipartite states and entropic primitives.

All entropies are in bits. Matrices are dense ``complex128`` arrays; the
party structure is carried alongside so reductions and permutations never
have to guess the tensor layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12
# Eigenvalues below this fraction of the largest one count as zero.
SUPPORT_RTOL = 1e-12
# Weight of sigma outside supp(rho) tolerated before S(sigma||rho) = inf.
SUPPORT_LEAK_TOL = 1e-9
MAX_DIMENSION = 256

PARTY_LABELS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class PartyStructure:
    """Ordered local dimensions of an n-party system."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("a party structure needs at least one party")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got {dims}")
        if self.dimension > MAX_DIMENSION:
            raise ValueError(
                f"total dimension {self.dimension} exceeds {MAX_DIMENSION}"
            )

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    @property
    def dimension(self) -> int:
        return math.prod(self.dims)

    def restrict(self, keep: Iterable[int]) -> "PartyStructure":
        return PartyStructure(tuple(self.dims[i] for i in sorted(keep)))

    def label(self, parties: Iterable[int]) -> str:
        return "".join(PARTY_LABELS[i] for i in sorted(parties))


def _as_structure(structure) -> PartyStructure:
    if isinstance(structure, PartyStructure):
        return structure
    return PartyStructure(tuple(structure))


@dataclass(frozen=True, eq=False)
class PureState:
    structure: PartyStructure
    amplitudes: np.ndarray

    def __post_init__(self):
        structure = _as_structure(self.structure)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != structure.dimension:
            raise ValueError(
                f"expected {structure.dimension} amplitudes, got {amps.shape[0]}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector norm is {norm!r}, expected 1")
        amps.flags.writeable = False
        object.__setattr__(self, "structure", structure)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, structure, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(structure, amps / norm)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix with an explicit party structure."""

    structure: PartyStructure
    matrix: np.ndarray

    def __post_init__(self):
        structure = _as_structure(self.structure)
        mat = np.array(self.matrix, dtype=complex)
        dim = structure.dimension
        if mat.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("density matrix has non-finite entries")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm >= HERMITIAN_TOL:
            raise ValueError(f"matrix is not Hermitian (deviation {herm:.3g})")
        mat = 0.5 * (mat + mat.conj().T)
        lam_min = np.linalg.eigvalsh(mat)[0]
        if lam_min <= -PSD_TOL:
            raise ValueError(
                f"matrix is not positive semidefinite (min eigenvalue {lam_min:.3g})"
            )
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {tr!r}, expected 1")
        mat.flags.writeable = False
        object.__setattr__(self, "structure", structure)
        object.__setattr__(self, "matrix", mat)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.structure.dims

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(np.trace(self.matrix @ self.matrix).real - 1.0) < tol


def from_pure(psi: PureState) -> QuantumState:
    """Rank-one projector onto ``psi``."""
    v = psi.amplitudes
    return QuantumState(psi.structure, np.outer(v, v.conj()))


def tensor(*states):
    """Tensor product of pure states or of density matrices (not mixed)."""
    if all(isinstance(s, PureState) for s in states):
        amps = states[0].amplitudes
        for s in states[1:]:
            amps = np.kron(amps, s.amplitudes)
        dims = sum((s.structure.dims for s in states), ())
        return PureState(PartyStructure(dims), amps)
    states = [from_pure(s) if isinstance(s, PureState) else s for s in states]
    mat = states[0].matrix
    for s in states[1:]:
        mat = np.kron(mat, s.matrix)
    dims = sum((s.structure.dims for s in states), ())
    return QuantumState(PartyStructure(dims), mat)


def basis_state(structure, digits: Sequence[int]) -> PureState:
    """Computational basis product state, e.g. ``digits=(1, 0, 0)`` for |100>."""
    structure = _as_structure(structure)
    if len(digits) != structure.n_parties:
        raise ValueError("one digit per party is required")
    amps = np.zeros(structure.dimension, dtype=complex)
    amps[np.ravel_multi_index(tuple(digits), structure.dims)] = 1.0
    return PureState(structure, amps)


def _reduced_matrix(matrix: np.ndarray, dims: tuple[int, ...], keep) -> np.ndarray:
    n = len(dims)
    keep = sorted(keep)
    t = matrix.reshape(dims + dims)
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out = [i for i in keep] + [i + n for i in keep]
    d = math.prod(dims[i] for i in keep)
    return np.einsum(t, row + col, out).reshape(d, d)


def partial_trace(rho: QuantumState | PureState, keep: Iterable[int]) -> QuantumState:
    """Reduced state on the parties in ``keep`` (the others are traced out)."""
    if isinstance(rho, PureState):
        rho = from_pure(rho)
    keep = set(int(k) for k in keep)
    n = rho.structure.n_parties
    if not keep:
        raise ValueError("keep must name at least one party")
    if not keep <= set(range(n)):
        raise ValueError(f"party indices {sorted(keep)} out of range for {n} parties")
    if len(keep) == n:
        return rho
    mat = _reduced_matrix(rho.matrix, rho.structure.dims, keep)
    return QuantumState(rho.structure.restrict(keep), mat)


def partial_transpose(rho: QuantumState, parties: Iterable[int]) -> np.ndarray:
    """Partial transpose on ``parties``; returns a plain matrix (may be non-PSD)."""
    dims = rho.structure.dims
    n = len(dims)
    parties = set(parties)
    t = rho.matrix.reshape(dims + dims)
    axes = [i + n if i in parties else i for i in range(n)]
    axes += [i if i in parties else i + n for i in range(n)]
    return t.transpose(axes).reshape(rho.matrix.shape)


def permute_parties(rho: QuantumState | PureState, order: Sequence[int]):
    """Relabel parties: new party ``k`` is old party ``order[k]``."""
    order = list(order)
    dims = rho.structure.dims
    if sorted(order) != list(range(len(dims))):
        raise ValueError(f"{order} is not a permutation of the parties")
    new_dims = tuple(dims[i] for i in order)
    if isinstance(rho, PureState):
        amps = rho.amplitudes.reshape(dims).transpose(order).reshape(-1)
        return PureState(PartyStructure(new_dims), amps)
    n = len(dims)
    t = rho.matrix.reshape(dims + dims).transpose(order + [i + n for i in order])
    d = rho.structure.dimension
    return QuantumState(PartyStructure(new_dims), t.reshape(d, d))


def entropy_of_spectrum(eigenvalues: np.ndarray) -> float:
    lam = np.clip(np.real(eigenvalues), 0.0, None)
    lam = lam[lam > 0]
    return max(0.0, float(-np.sum(lam * np.log2(lam))))


def von_neumann_entropy(rho: QuantumState | PureState) -> float:
    """Entropy in bits, with 0 log 0 = 0; tiny negatives are clamped to 0."""
    if isinstance(rho, PureState):
        return 0.0
    return entropy_of_spectrum(np.linalg.eigvalsh(rho.matrix))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def relative_entropy_matrices(sigma: np.ndarray, rho: np.ndarray) -> float:
    """S(sigma||rho) in bits for plain Hermitian PSD matrices."""
    s_vals, s_vecs = np.linalg.eigh(sigma)
    r_vals, r_vecs = np.linalg.eigh(rho)
    r_vals = np.clip(r_vals, 0.0, None)
    null = r_vals <= SUPPORT_RTOL * r_vals[-1]
    s_vals = np.clip(s_vals, 0.0, None)
    # overlap[i, j] = |<s_i|r_j>|^2
    overlap = np.abs(s_vecs.conj().T @ r_vecs) ** 2
    weights = s_vals @ overlap
    if np.sum(weights[null]) > SUPPORT_LEAK_TOL:
        return math.inf
    support = ~null
    cross = float(np.sum(weights[support] * np.log2(r_vals[support])))
    value = -entropy_of_spectrum(s_vals) - cross
    return max(0.0, value)


def quantum_relative_entropy(sigma: QuantumState, rho: QuantumState) -> float:
    """S(sigma||rho) = tr(sigma log sigma - sigma log rho) in bits, or inf."""
    if sigma.structure != rho.structure:
        raise ValueError(
            f"party structures differ: {sigma.structure.dims} vs {rho.structure.dims}"
        )
    return relative_entropy_matrices(sigma.matrix, rho.matrix)


def _embed(structure: PartyStructure, n_needed: int, amps_small: np.ndarray,
           small_dims: tuple[int, ...]) -> np.ndarray:
    """Place a state on the first parties of ``structure`` padded with |0>."""
    if structure.n_parties < n_needed:
        raise ValueError(
            f"state needs {n_needed} parties, structure has {structure.n_parties}"
        )
    t = np.zeros(structure.dims, dtype=complex)
    idx = tuple(slice(0, d) for d in small_dims) + (0,) * (structure.n_parties - n_needed)
    t[idx] = amps_small.reshape(small_dims)
    return t.reshape(-1)


def make_named_state(name: str, embedding=None, *params) -> PureState:
    """Build one of the named families: ``epr``, ``ghz``, ``w``, ``psi_eff``.

    ``ghz`` takes the amplitude alpha of |0...0> (beta = sqrt(1 - |alpha|^2))
    and spans every party of the embedding. ``w`` is the uniform single
    excitation over all parties. ``epr`` occupies the first two parties and
    ``psi_eff(e, f)`` = e|100> + f|010> + f|001> the first three; any extra
    parties are set to |0>.
    """
    key = name.lower().replace("-", "_")
    if embedding is None:
        embedding = (2, 2) if key == "epr" else (2, 2, 2)
    structure = _as_structure(embedding)
    n = structure.n_parties

    if key == "epr":
        if n < 2:
            raise ValueError("epr needs at least two parties")
        small = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        return PureState(structure, _embed(structure, 2, small, (2, 2)))

    if key == "ghz":
        if n < 2:
            raise ValueError("ghz needs at least two parties")
        alpha = complex(params[0]) if params else 1 / math.sqrt(2)
        if abs(alpha) > 1 + 1e-12:
            raise ValueError(f"ghz amplitude |alpha| = {abs(alpha)} exceeds 1")
        beta = math.sqrt(max(0.0, 1.0 - abs(alpha) ** 2))
        amps = np.zeros(structure.dims, dtype=complex)
        amps[(0,) * n] = alpha
        amps[(1,) * n] = beta
        return PureState.normalized(structure, amps.reshape(-1))

    if key == "w":
        amps = np.zeros(structure.dims, dtype=complex)
        for k in range(n):
            idx = [0] * n
            idx[k] = 1
            amps[tuple(idx)] = 1 / math.sqrt(n)
        return PureState.normalized(structure, amps.reshape(-1))

    if key in ("psi_eff", "psieff"):
        if len(params) != 2:
            raise ValueError("psi_eff takes two parameters (e, f)")
        e, f = complex(params[0]), complex(params[1])
        norm2 = abs(e) ** 2 + 2 * abs(f) ** 2
        if abs(norm2 - 1.0) > 1e-9:
            raise ValueError(f"|e|^2 + 2|f|^2 = {norm2}, expected 1")
        small = np.zeros((2, 2, 2), dtype=complex)
        small[1, 0, 0] = e
        small[0, 1, 0] = f
        small[0, 0, 1] = f
        return PureState.normalized(structure, _embed(structure, 3, small, (2, 2, 2)))

    raise ValueError(f"unknown named state {name!r}")


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def haar_random_pure(structure, seed) -> PureState:
    """Haar-distributed pure state; ``seed`` is an int, SeedSequence or Generator."""
    structure = _as_structure(structure)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return PureState.normalized(structure, complex_gaussian(rng, structure.dimension))


def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = complex_gaussian(rng, (dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_mixed_state(structure, rng: np.random.Generator, rank: int | None = None) -> QuantumState:
    """Induced-measure mixed state of the given rank (full rank by default)."""
    structure = _as_structure(structure)
    d = structure.dimension
    rank = d if rank is None else rank
    g = complex_gaussian(rng, (d, rank))
    m = g @ g.conj().T
    return QuantumState(structure, m / np.trace(m).real)


def apply_local_unitaries(rho: QuantumState | PureState, unitaries: Sequence[np.ndarray]):
    u = unitaries[0]
    for v in unitaries[1:]:
        u = np.kron(u, v)
    if isinstance(rho, PureState):
        return PureState.normalized(rho.structure, u @ rho.amplitudes)
    return QuantumState(rho.structure, u @ rho.matrix @ u.conj().T)
