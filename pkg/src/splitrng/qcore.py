"""Finite-dimensional Hilbert-space machinery for the simulator.

Conventions used throughout the package:

* A measurement basis is a d x d unitary whose *columns* are the outcome
  states; outcome k corresponds to column k.
* Spin systems order the computational basis by magnetic quantum number
  m = +j, ..., -j, so index 0 is the m = +j outcome.
* Bipartite amplitudes are stored row-major: flat index = a * dim_b + b.
* All angles are radians.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "NORM_ATOL",
    "UNITARY_ATOL",
    "PROB_ATOL",
    "SUPPORTED_SPINS",
    "StateVector",
    "Basis",
    "JointState",
    "OutcomeDistribution",
    "RandomSource",
    "computational_basis",
    "fourier_basis",
    "spin_dim",
    "spin_y_operator",
    "spin_rotation_basis",
    "born_probabilities",
    "joint_born_probabilities",
    "overlap_table",
    "sample",
    "sample_many",
]

NORM_ATOL = 1e-12
UNITARY_ATOL = 1e-10
PROB_ATOL = 1e-10

# Spin magnitudes with rotation machinery (Hilbert dimensions 2, 3, 4).
SUPPORTED_SPINS = (0.5, 1.0, 1.5)

# Born weights below this are treated as floating-point dust and clamped to 0.
_NEG_PROB_CLAMP = -1e-12


def _complex_array(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValueError(f"{what}: amplitudes must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of a single d-dimensional system (d >= 2)."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _complex_array(self.amps, "StateVector")
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("StateVector: need a 1-d amplitude vector of dimension >= 2")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > NORM_ATOL:
            raise ValueError(
                f"StateVector: squared norm {norm_sq} deviates from 1 by more than {NORM_ATOL}"
            )
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size


@dataclass(frozen=True, eq=False)
class Basis:
    """Orthonormal measurement basis stored as a unitary; column k is outcome k."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = _complex_array(self.matrix, "Basis")
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
            raise ValueError("Basis: need a square matrix of dimension >= 2")
        residual = np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])).max()
        if residual > UNITARY_ATOL:
            raise ValueError(f"Basis: columns not orthonormal (residual {residual:.3e})")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def column(self, index: int) -> StateVector:
        """Outcome state `index` as a StateVector."""
        if not 0 <= index < self.dim:
            raise ValueError(f"Basis: column index {index} out of range for dimension {self.dim}")
        return StateVector(self.matrix[:, index])


@dataclass(frozen=True, eq=False)
class JointState:
    """Normalized pure state of a bipartite system; index = a * dim_b + b."""

    dim_a: int
    dim_b: int
    amps: np.ndarray

    def __post_init__(self):
        if self.dim_a < 2 or self.dim_b < 2:
            raise ValueError("JointState: both subsystem dimensions must be >= 2")
        amps = _complex_array(self.amps, "JointState")
        if amps.ndim != 1 or amps.size != self.dim_a * self.dim_b:
            raise ValueError("JointState: amplitude count must equal dim_a * dim_b")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > NORM_ATOL:
            raise ValueError(
                f"JointState: squared norm {norm_sq} deviates from 1 by more than {NORM_ATOL}"
            )
        object.__setattr__(self, "amps", amps)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probability vector over measurement outcomes, in stored outcome order."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("OutcomeDistribution: need a 1-d probability vector")
        if not np.all(np.isfinite(probs)):
            raise ValueError("OutcomeDistribution: probabilities must be finite")
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValueError("OutcomeDistribution: probabilities must lie in [0, 1]")
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_ATOL:
            raise ValueError(f"OutcomeDistribution: probabilities sum to {total}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_weights(cls, weights) -> "OutcomeDistribution":
        """Build a distribution from raw Born weights.

        Weights in [-1e-12, 0) are clamped to 0 (floating-point dust) and the
        vector is renormalized; anything more negative is rejected.
        """
        probs = np.asarray(weights, dtype=np.float64)
        if np.any(probs < _NEG_PROB_CLAMP):
            raise ValueError("from_weights: negative weight beyond clamping tolerance")
        probs = np.clip(probs, 0.0, None)
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_ATOL:
            raise ValueError(f"from_weights: weights sum to {total}, not 1")
        return cls(probs / total)

    @property
    def num_outcomes(self) -> int:
        return self.probs.size


class RandomSource:
    """Deterministic pseudo-random source with indexed substreams.

    Wraps numpy's counter-based Philox generator keyed by a 64-bit seed.
    ``substream(i)`` derives an independent stream keyed by the pair
    (seed, spawn path + (i,)); identical seeds and call sequences reproduce
    identical outputs, so block-parallel simulation with one substream per
    block is bit-identical to sequential execution.
    """

    __slots__ = ("seed", "spawn_key", "_generator")

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("RandomSource: seed must be a 64-bit nonnegative integer")
        key = tuple(int(k) for k in spawn_key)
        if any(k < 0 for k in key):
            raise ValueError("RandomSource: spawn key entries must be nonnegative")
        self.seed = seed
        self.spawn_key = key
        seq = np.random.SeedSequence(entropy=seed, spawn_key=key)
        self._generator = np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RandomSource":
        """Independent stream for the given index, derived from (seed, path)."""
        if index < 0:
            raise ValueError("RandomSource: substream index must be nonnegative")
        return RandomSource(self.seed, self.spawn_key + (int(index),))

    def random(self, size=None):
        """Uniform floats in [0, 1)."""
        return self._generator.random(size)

    def integers(self, low, high=None, size=None, dtype=np.int64):
        return self._generator.integers(low, high, size=size, dtype=dtype)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"


def computational_basis(dim: int) -> Basis:
    if dim < 2:
        raise ValueError("computational_basis: dimension must be >= 2")
    return Basis(np.eye(dim, dtype=np.complex128))


def fourier_basis(dim: int) -> Basis:
    """Discrete-Fourier basis, mutually unbiased with the computational basis.

    Column k has entries exp(2*pi*i*r*k/dim) / sqrt(dim) for rows r, so every
    overlap with a computational basis state has squared modulus 1/dim.
    """
    if dim < 2:
        raise ValueError("fourier_basis: dimension must be >= 2")
    idx = np.arange(dim)
    matrix = np.exp(2j * np.pi * np.outer(idx, idx) / dim) / np.sqrt(dim)
    return Basis(matrix)


def spin_dim(j: float) -> int:
    """Hilbert dimension 2j + 1 for a supported spin magnitude."""
    if j not in SUPPORTED_SPINS:
        raise ValueError(f"unsupported spin {j!r}; supported magnitudes are 1/2, 1, 3/2")
    return int(round(2 * j + 1))


@lru_cache(maxsize=None)
def _spin_y_eig(j: float) -> tuple[np.ndarray, np.ndarray]:
    eigvals, eigvecs = np.linalg.eigh(spin_y_operator(j))
    eigvals.setflags(write=False)
    eigvecs.setflags(write=False)
    return eigvals, eigvecs


def spin_y_operator(j: float) -> np.ndarray:
    """Angular-momentum y operator in the m = +j..-j ordered basis."""
    d = spin_dim(j)
    m = j - np.arange(d)
    # raising operator connects index k to k-1 with the usual ladder weights
    weights = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    j_plus = np.zeros((d, d), dtype=np.complex128)
    j_plus[np.arange(d - 1), np.arange(1, d)] = weights
    return (j_plus - j_plus.conj().T) / 2j


def spin_rotation_basis(j: float, theta: float) -> Basis:
    """Measurement basis rotated about y by `theta` radians.

    Columns are exp(-i * theta * J_y) applied to the computational (J_z)
    basis. The exponential is evaluated through the eigendecomposition of the
    Hermitian J_y, which is exact to roundoff at these dimensions.
    """
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError("spin_rotation_basis: angle must be finite")
    eigvals, eigvecs = _spin_y_eig(j)
    matrix = (eigvecs * np.exp(-1j * theta * eigvals)) @ eigvecs.conj().T
    return Basis(matrix)


def born_probabilities(state: StateVector, basis: Basis) -> OutcomeDistribution:
    """Outcome distribution for measuring `state` in `basis`.

    Entry k is the squared modulus of the overlap with basis column k.
    """
    if state.dim != basis.dim:
        raise ValueError(
            f"born_probabilities: state dimension {state.dim} != basis dimension {basis.dim}"
        )
    overlaps = basis.matrix.conj().T @ state.amps
    return OutcomeDistribution.from_weights(np.abs(overlaps) ** 2)


def joint_born_probabilities(
    joint: JointState, basis_a: Basis, basis_b: Basis
) -> OutcomeDistribution:
    """Joint outcome distribution for a bipartite measurement.

    The probability of the pair (a, b) sits at flat index a * dim_b + b and
    equals the squared modulus of the overlap with column a of side A's basis
    tensored with column b of side B's.
    """
    if basis_a.dim != joint.dim_a or basis_b.dim != joint.dim_b:
        raise ValueError(
            "joint_born_probabilities: basis dimensions "
            f"({basis_a.dim}, {basis_b.dim}) do not match state dimensions "
            f"({joint.dim_a}, {joint.dim_b})"
        )
    table = joint.amps.reshape(joint.dim_a, joint.dim_b)
    overlaps = basis_a.matrix.conj().T @ table @ basis_b.matrix.conj()
    return OutcomeDistribution.from_weights((np.abs(overlaps) ** 2).reshape(-1))


def overlap_table(basis_a: Basis, basis_b: Basis) -> np.ndarray:
    """Matrix of squared overlaps |<a_i, b_j>|^2 between two bases."""
    if basis_a.dim != basis_b.dim:
        raise ValueError(
            f"overlap_table: dimensions differ ({basis_a.dim} vs {basis_b.dim})"
        )
    return np.abs(basis_a.matrix.conj().T @ basis_b.matrix) ** 2


def sample_many(dist: OutcomeDistribution, count: int, rng: RandomSource) -> np.ndarray:
    """Inverse-CDF sampling of `count` outcome indices, in stored order."""
    if count < 0:
        raise ValueError("sample_many: count must be nonnegative")
    cdf = np.cumsum(dist.probs)
    cdf[-1] = 1.0  # guard against cumulative roundoff at the top end
    return np.searchsorted(cdf, rng.random(count), side="right").astype(np.int64)


def sample(dist: OutcomeDistribution, rng: RandomSource) -> int:
    """Draw one outcome index from `dist`."""
    return int(sample_many(dist, 1, rng)[0])
