"""Seeded random states, unitaries, and measurements.

The command-line tools derive one substream per trial from a counter-based
generator (philox4x64, keyed by ``(seed, index)``), so re-runs are bitwise
reproducible and trials can be fanned out in any order.
"""

from __future__ import annotations

import numpy as np

from .tensor_core import DensityOperator, HilbertSpace, StateVector

RNG_NAME = "philox4x64"
RNG_VERSION = 1
_MASK = (1 << 64) - 1


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for trial ``index`` of run ``seed``."""
    key = np.array([int(seed) & _MASK, int(index) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    phase = np.diag(r) / np.abs(np.diag(r))
    return q * phase


def haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_pure_state(space: HilbertSpace, rng: np.random.Generator) -> StateVector:
    return StateVector(space, haar_vector(space.dim, rng))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Density matrix from a normalised Wishart draw of the given rank."""
    rank = dim if rank is None else int(rank)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_density_operator(space: HilbertSpace, rng: np.random.Generator,
                            rank: int | None = None) -> DensityOperator:
    return DensityOperator(space, random_density(space.dim, rng, rank))


def random_povm_elements(dim: int, n_outcomes: int, rng: np.random.Generator) -> list[np.ndarray]:
    """POVM from Wishart draws whitened by their sum."""
    rough = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rough.append(g @ g.conj().T)
    total = np.sum(rough, axis=0)
    vals, vecs = np.linalg.eigh(total)
    whiten = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return [whiten @ e @ whiten for e in rough]
