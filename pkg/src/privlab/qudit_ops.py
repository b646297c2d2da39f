"""Generalized Pauli algebra, conjugate bases, twisting, and measurements.

A qudit of prime dimension d carries the shift/phase pair

    Z = sum_k w^k |k><k|,   X = sum_k |k+1 mod d><k|,   w = exp(2 pi i / d),

so ZX = w XZ.  A conjugate basis collects d phase patterns theta[x, k] with
|x~> = d^{-1/2} sum_k exp(i theta[x, k]) |k>, orthonormal and unbiased with
respect to the standard basis.  The Fourier choice theta = 2 pi x k / d
diagonalises X with eigenvalue w^{-x}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .tensor_core import (
    KIND_ATOL,
    PSD_ATOL,
    DensityOperator,
    HilbertSpace,
    InvariantViolation,
    LinearOperator,
    StateVector,
    _as_complex,
    embed_operator,
    operator_function,
    partial_trace,
)

POVM_COMPLETENESS_ATOL = 1e-9


def generalized_paulis(d: int) -> tuple[LinearOperator, LinearOperator, complex]:
    """Return (Z, X, omega) on a single qudit of dimension d."""
    if d < 2:
        raise ValueError("qudit dimension must be at least 2")
    omega = np.exp(2j * np.pi / d)
    space = HilbertSpace((d,), ("Q",))
    z = np.diag(omega ** np.arange(d))
    x = np.zeros((d, d), dtype=np.complex128)
    for k in range(d):
        x[(k + 1) % d, k] = 1.0
    return (LinearOperator(space, z, "unitary"),
            LinearOperator(space, x, "unitary"),
            complex(omega))


@dataclass(frozen=True)
class ConjugateBasis:
    """Phase table defining a basis conjugate to the standard one."""

    d: int
    theta: np.ndarray  # shape (d, d); theta[x, k]

    def __post_init__(self):
        th = np.array(self.theta, dtype=float)
        if th.shape != (self.d, self.d):
            raise ValueError(f"theta must be {self.d}x{self.d}")
        object.__setattr__(self, "theta", th)
        v = self.vectors
        gram = v.conj().T @ v
        dev = float(np.max(np.abs(gram - np.eye(self.d))))
        if dev > 1e-10:
            raise ValueError(f"phase table is not orthonormal (deviation {dev:g})")
        th.flags.writeable = False

    @classmethod
    def fourier(cls, d: int) -> "ConjugateBasis":
        x, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        return cls(d, 2.0 * np.pi * x * k / d)

    @property
    def vectors(self) -> np.ndarray:
        """Matrix whose column x is |x~> in the standard basis."""
        return np.exp(1j * self.theta.T) / np.sqrt(self.d)

    def conjugated(self) -> "ConjugateBasis":
        """Entrywise complex conjugate basis (negated phases)."""
        return ConjugateBasis(self.d, -self.theta)

    def projector(self, x: int) -> np.ndarray:
        v = self.vectors[:, x]
        return np.outer(v, v.conj())

    def povm(self) -> "Povm":
        return Povm.projective_from_columns(self.vectors)


@dataclass(frozen=True)
class Povm:
    """A positive operator-valued measure with explicit outcome labels."""

    elements: tuple[np.ndarray, ...]
    outcome_labels: tuple = ()

    def __post_init__(self):
        els = tuple(_as_complex(e) for e in self.elements)
        if not els:
            raise ValueError("a POVM needs at least one element")
        dim = els[0].shape[0]
        for e in els:
            if e.shape != (dim, dim):
                raise ValueError("POVM elements must be square and equal-sized")
            herm = float(np.max(np.abs(e - e.conj().T)))
            if herm > KIND_ATOL:
                raise ValueError(f"POVM element not hermitian (deviation {herm:g})")
            lo = float(np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0])
            if lo < -PSD_ATOL:
                raise ValueError(f"POVM element not positive (min eig {lo:g})")
        total = np.sum(els, axis=0)
        dev = float(np.max(np.abs(total - np.eye(dim))))
        if dev > POVM_COMPLETENESS_ATOL:
            raise ValueError(f"POVM does not sum to identity (deviation {dev:g})")
        labels = tuple(self.outcome_labels) if self.outcome_labels else tuple(range(len(els)))
        if len(labels) != len(els):
            raise ValueError("outcome label count must match element count")
        for e in els:
            e.flags.writeable = False
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "outcome_labels", labels)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    @classmethod
    def standard_basis(cls, d: int) -> "Povm":
        return cls.projective_from_columns(np.eye(d))

    @classmethod
    def projective_from_columns(cls, columns: np.ndarray, labels: tuple = ()) -> "Povm":
        cols = _as_complex(columns)
        els = tuple(np.outer(cols[:, i], cols[:, i].conj()) for i in range(cols.shape[1]))
        return cls(els, labels)

    def sqrt_elements(self) -> tuple[np.ndarray, ...]:
        return tuple(operator_function(e, "sqrt")[2] for e in self.elements)


@dataclass(frozen=True)
class MeasurementResult:
    """Joint outcome distribution plus post-measurement marginals."""

    probs: np.ndarray                      # shape = outcome counts per POVM
    outcome_labels: tuple[tuple, ...]      # per-POVM outcome labels
    kept_labels: tuple[str, ...]
    conditionals: Mapping[tuple, DensityOperator]


def measure(state, povms: Sequence[tuple[Sequence[str], Povm]],
            *, conditional_cutoff: float = 1e-14) -> MeasurementResult:
    """Measure disjoint label sets jointly.

    For each joint outcome (j, k, ...) the probability is
    Tr[(E_j (x) F_k (x) ... (x) 1) rho] and the conditional state on the
    unmeasured factors is the normalised partial trace of the same product.
    Zero-probability outcomes carry no conditional state.
    """
    rho = state.density() if isinstance(state, StateVector) else state
    if not isinstance(rho, DensityOperator):
        raise TypeError("measure expects a DensityOperator or StateVector")
    space = rho.space
    seen: set[str] = set()
    for labels, povm in povms:
        labels = tuple(labels)
        if seen & set(labels):
            raise ValueError("measured label sets must be disjoint")
        seen |= set(labels)
        want = int(np.prod(space.dims_of(labels), dtype=np.int64))
        if povm.dim != want:
            raise ValueError(f"POVM dim {povm.dim} does not match labels {labels}")
    kept = tuple(x for x in space.labels if x not in seen)

    shape = tuple(p.n_outcomes for _, p in povms)
    probs = np.zeros(shape)
    conditionals: dict[tuple, DensityOperator] = {}
    embedded: list[list[np.ndarray]] = []
    for labels, povm in povms:
        embedded.append([embed_operator(space, e, tuple(labels)) for e in povm.elements])
    for idx in np.ndindex(*shape):
        op = embedded[0][idx[0]]
        for which in range(1, len(idx)):
            op = op @ embedded[which][idx[which]]
        weighted = op @ rho.matrix
        p = float(np.trace(weighted).real)
        probs[idx] = p
        if kept and p > conditional_cutoff:
            sub = space.restrict(kept)
            axes = [space.axis(x) for x in sub.labels]
            rest = [a for a in range(len(space.dims)) if a not in axes]
            n = len(space.dims)
            t = weighted.reshape(space.dims * 2)
            perm = axes + rest + [n + a for a in axes] + [n + a for a in rest]
            t = t.transpose(perm)
            kdim = sub.dim
            t = t.reshape(kdim, space.dim // kdim, kdim, space.dim // kdim)
            block = np.einsum("irjr->ij", t) / p
            conditionals[idx] = DensityOperator(sub, 0.5 * (block + block.conj().T))
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-10:
        raise InvariantViolation(f"outcome probabilities sum to {total!r}")
    return MeasurementResult(probs=probs,
                             outcome_labels=tuple(p.outcome_labels for _, p in povms),
                             kept_labels=kept,
                             conditionals=conditionals)


def coherent_measure(state: StateVector, labels: Sequence[str], povm: Povm,
                     out_label: str) -> StateVector:
    """Steer a POVM into a fresh register: sum_k (sqrt(E_k) |psi>) (x) |k>."""
    from .tensor_core import apply_to_vector  # local import keeps module load light

    space = state.space
    if out_label in space.labels:
        raise ValueError(f"label {out_label!r} already used")
    roots = povm.sqrt_elements()
    branches = [apply_to_vector(space, state.amplitudes, r, labels) for r in roots]
    amps = np.stack(branches, axis=-1).reshape(-1)
    nrm = float(np.linalg.norm(amps))
    if abs(nrm - 1.0) > 1e-10:
        raise InvariantViolation(f"coherent measurement broke normalisation ({nrm!r})")
    new_space = space.add_factor(out_label, povm.n_outcomes)
    return StateVector(new_space, amps / nrm)


# ---------------------------------------------------------------------------
# twisting


@dataclass(frozen=True)
class TwistingOperator:
    """Controlled shield unitary U = sum_{jk} P_j (x) P_k (x) V_jk.

    ``space`` must expose key labels A, B of equal dimension d and a
    shield label S; ``blocks`` maps every pair (j, k) to a unitary on
    the shield.
    """

    space: HilbertSpace
    blocks: Mapping[tuple[int, int], np.ndarray]

    def __post_init__(self):
        for lbl in ("A", "B", "S"):
            if lbl not in self.space.labels:
                raise ValueError("twisting space must carry labels A, B, S")
        d = self.space.dim_of("A")
        if self.space.dim_of("B") != d:
            raise ValueError("key registers A and B must have equal dimension")
        s = self.space.dim_of("S")
        blocks = {}
        for j in range(d):
            for k in range(d):
                if (j, k) not in self.blocks:
                    raise ValueError(f"missing twisting block ({j}, {k})")
                v = _as_complex(self.blocks[(j, k)])
                if v.shape != (s, s):
                    raise ValueError(f"block ({j}, {k}) must be {s}x{s}")
                dev = float(np.max(np.abs(v @ v.conj().T - np.eye(s))))
                if dev > KIND_ATOL:
                    raise ValueError(f"block ({j}, {k}) is not unitary (deviation {dev:g})")
                v.flags.writeable = False
                blocks[(j, k)] = v
        object.__setattr__(self, "blocks", blocks)

    @property
    def d(self) -> int:
        return self.space.dim_of("A")

    @property
    def shield_dim(self) -> int:
        return self.space.dim_of("S")

    @classmethod
    def _space(cls, d: int, shield_dim: int) -> HilbertSpace:
        return HilbertSpace((d, d, shield_dim), ("A", "B", "S"))

    @classmethod
    def from_diagonal(cls, d: int, diagonal: Sequence[np.ndarray]) -> "TwistingOperator":
        """All off-diagonal blocks set to the identity (only V_kk matter)."""
        if len(diagonal) != d:
            raise ValueError("need one diagonal block per key value")
        s = _as_complex(diagonal[0]).shape[0]
        blocks = {(j, k): np.eye(s, dtype=np.complex128) for j in range(d) for k in range(d)}
        for k in range(d):
            blocks[(k, k)] = _as_complex(diagonal[k])
        return cls(cls._space(d, s), blocks)

    @classmethod
    def identity(cls, d: int, shield_dim: int) -> "TwistingOperator":
        return cls.from_diagonal(d, [np.eye(shield_dim)] * d)

    @classmethod
    def random(cls, d: int, shield_dim: int, rng: np.random.Generator,
               diagonal_only: bool = False) -> "TwistingOperator":
        from .sampling import haar_unitary

        if diagonal_only:
            return cls.from_diagonal(d, [haar_unitary(shield_dim, rng) for _ in range(d)])
        blocks = {(j, k): haar_unitary(shield_dim, rng) for j in range(d) for k in range(d)}
        return cls(cls._space(d, shield_dim), blocks)

    def diagonal_blocks(self) -> list[np.ndarray]:
        return [self.blocks[(k, k)] for k in range(self.d)]


def twisting_unitary(t: TwistingOperator) -> LinearOperator:
    """Assemble the block-diagonal matrix of a twisting operator on (A, B, S)."""
    d, s = t.d, t.shield_dim
    dim = d * d * s
    u = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(d):
        for k in range(d):
            base = (j * d + k) * s
            u[base:base + s, base:base + s] = t.blocks[(j, k)]
    return LinearOperator(t.space, u, "unitary")


def maximally_entangled(d: int, labels: tuple[str, str] = ("A", "B")) -> StateVector:
    space = HilbertSpace((d, d), labels)
    amps = np.zeros(d * d, dtype=np.complex128)
    amps[::d + 1] = 1.0 / np.sqrt(d)
    return StateVector(space, amps)


def build_private_state(d: int, t: TwistingOperator, xi) -> DensityOperator:
    """Twist a maximally entangled key against a shield state.

    ``xi`` is the shield state (StateVector or DensityOperator on the
    shield); the result is U (Phi_d (x) xi) U^dagger on labels (A, B, S).
    """
    if t.d != d:
        raise ValueError("twisting dimension does not match d")
    shield = xi.density() if isinstance(xi, StateVector) else xi
    if shield.matrix.shape[0] != t.shield_dim:
        raise ValueError("shield state dimension does not match the twisting blocks")
    phi = maximally_entangled(d).density()
    base = np.kron(phi.matrix, shield.matrix)
    u = twisting_unitary(t).matrix
    return DensityOperator(t.space, u @ base @ u.conj().T)
