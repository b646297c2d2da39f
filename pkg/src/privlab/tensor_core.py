"""Dense linear algebra over labelled multipartite Hilbert spaces.

Everything downstream works at desk scale, so all operators are explicit
complex matrices and all structural bookkeeping (which tensor factor is
which) goes through :class:`HilbertSpace` labels rather than positional
conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Shared numerical tolerances.
NORM_ATOL = 1e-12      # state norm, trace, hermiticity
KIND_ATOL = 1e-10      # unitarity / idempotence checks on tagged operators
PSD_ATOL = 1e-10       # most negative eigenvalue tolerated on a positive object
SUPPORT_ATOL = 1e-10   # rank decisions (support of an operator)
LOG_CLAMP = 1e-12      # eigenvalue clamp before logarithms

OPERATOR_KINDS = ("general", "hermitian", "unitary", "projector", "povm-element")


class InvariantViolation(RuntimeError):
    """A numerical invariant failed beyond its stated tolerance."""


def _as_complex(a) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    return arr


@dataclass(frozen=True)
class HilbertSpace:
    """An ordered list of tensor factors with unique string labels."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        if len(dims) != len(labels):
            raise ValueError("dims and labels must have equal length")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        if not dims:
            raise ValueError("a space needs at least one factor")
        # dimension 1 is allowed: rank-one purifiers live on trivial factors
        if any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive, got {dims}")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"label {label!r} not in {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def dims_of(self, labels: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.dim_of(x) for x in labels)

    def restrict(self, labels: Iterable[str]) -> "HilbertSpace":
        """Subspace of the given labels, kept in this space's order."""
        wanted = set(labels)
        missing = wanted - set(self.labels)
        if missing:
            raise KeyError(f"labels {sorted(missing)} not in {self.labels}")
        keep = [x for x in self.labels if x in wanted]
        return HilbertSpace(self.dims_of(keep), tuple(keep))

    def tensor(self, other: "HilbertSpace") -> "HilbertSpace":
        overlap = set(self.labels) & set(other.labels)
        if overlap:
            raise ValueError(f"label collision on tensor product: {sorted(overlap)}")
        return HilbertSpace(self.dims + other.dims, self.labels + other.labels)

    def add_factor(self, label: str, dim: int) -> "HilbertSpace":
        return self.tensor(HilbertSpace((dim,), (label,)))


def _lock(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class StateVector:
    """A normalised pure state over a labelled space."""

    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _as_complex(self.amplitudes).reshape(-1)
        if amps.size != self.space.dim:
            raise ValueError(
                f"amplitude count {amps.size} does not match space dim {self.space.dim}"
            )
        nrm = float(np.linalg.norm(amps))
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"state norm {nrm!r} is not 1")
        if abs(nrm - 1.0) > NORM_ATOL:
            amps = amps / nrm  # renormalise away accumulated float dust
        object.__setattr__(self, "amplitudes", _lock(amps))

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.space.tensor(other.space),
                           np.kron(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityOperator":
        return DensityOperator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))

    def marginal(self, keep: Iterable[str]) -> "DensityOperator":
        sub = self.space.restrict(keep)
        return DensityOperator(sub, vector_marginal(self.space, self.amplitudes, sub.labels))

    def permuted(self, new_order: Sequence[str]) -> "StateVector":
        amps = permute_vector(self.space, self.amplitudes, new_order)
        return StateVector(HilbertSpace(tuple(self.space.dims_of(new_order)), tuple(new_order)), amps)

    def overlap(self, other: "StateVector") -> complex:
        if self.space.dims != other.space.dims:
            raise ValueError("overlap requires identical spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityOperator:
    """A density matrix with construction-time invariant checks."""

    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_complex(self.matrix)
        dim = self.space.dim
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {dim}")
        herm = float(np.max(np.abs(m - m.conj().T))) if dim else 0.0
        if herm > 1e-9:
            raise ValueError(f"matrix is not hermitian (deviation {herm:g})")
        if herm > NORM_ATOL:
            m = 0.5 * (m + m.conj().T)
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"trace {tr!r} is not 1")
        if abs(tr - 1.0) > NORM_ATOL:
            m = m / tr.real
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -PSD_ATOL:
            raise ValueError(f"matrix is not positive semidefinite (min eig {lo:g})")
        object.__setattr__(self, "matrix", _lock(m))

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(self.space.tensor(other.space),
                               np.kron(self.matrix, other.matrix))

    def marginal(self, keep: Iterable[str]) -> "DensityOperator":
        return partial_trace(self, keep)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def rank(self, tol: float = SUPPORT_ATOL) -> int:
        return int(np.sum(self.eigenvalues() > tol))


@dataclass(frozen=True)
class LinearOperator:
    """A matrix on a labelled space, tagged with the structure it claims."""

    space: HilbertSpace
    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        m = _as_complex(self.matrix)
        dim = self.space.dim
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {dim}")
        if self.kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        _verify_kind(m, self.kind)
        object.__setattr__(self, "matrix", _lock(m))

    def tensor(self, other: "LinearOperator") -> "LinearOperator":
        kind = self.kind if self.kind == other.kind else "general"
        if kind == "projector" or kind == "povm-element":
            pass  # products of projectors stay projectors factorwise
        return LinearOperator(self.space.tensor(other.space),
                              np.kron(self.matrix, other.matrix), kind)

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.space, self.matrix.conj().T, self.kind)


def _verify_kind(m: np.ndarray, kind: str) -> None:
    if kind == "general":
        return
    herm = float(np.max(np.abs(m - m.conj().T)))
    if kind == "hermitian":
        if herm > KIND_ATOL:
            raise ValueError(f"hermitian tag violated by {herm:g}")
    elif kind == "unitary":
        dev = float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))
        if dev > KIND_ATOL:
            raise ValueError(f"unitary tag violated by {dev:g}")
    elif kind == "projector":
        dev = max(herm, float(np.max(np.abs(m @ m - m))))
        if dev > KIND_ATOL:
            raise ValueError(f"projector tag violated by {dev:g}")
    elif kind == "povm-element":
        if herm > KIND_ATOL:
            raise ValueError(f"povm-element tag violated by hermiticity {herm:g}")
        lo = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lo < -PSD_ATOL:
            raise ValueError(f"povm-element tag violated by min eig {lo:g}")


# ---------------------------------------------------------------------------
# tensor manipulation helpers


def permute_vector(space: HilbertSpace, amps: np.ndarray, new_order: Sequence[str]) -> np.ndarray:
    if sorted(new_order) != sorted(space.labels):
        raise ValueError(f"{new_order} is not a permutation of {space.labels}")
    perm = [space.axis(x) for x in new_order]
    return np.ascontiguousarray(
        np.asarray(amps).reshape(space.dims).transpose(perm)
    ).reshape(-1)


def apply_to_vector(space: HilbertSpace, amps: np.ndarray, matrix: np.ndarray,
                    labels: Sequence[str]) -> np.ndarray:
    """Apply an operator that acts only on the given labels to a state vector.

    ``matrix`` is indexed in the order of ``labels``; the result keeps the
    original axis order of ``space``.
    """
    labels = list(labels)
    axes = [space.axis(x) for x in labels]
    dims = [space.dims[a] for a in axes]
    block = int(np.prod(dims, dtype=np.int64))
    m = _as_complex(matrix)
    if m.shape != (block, block):
        raise ValueError(f"operator shape {m.shape} does not match labels {labels}")
    tensor = np.asarray(amps).reshape(space.dims)
    op = m.reshape(dims + dims)
    out = np.tensordot(op, tensor, axes=(list(range(len(dims), 2 * len(dims))), axes))
    # tensordot moved the acted-on axes to the front; put them back
    rest = [a for a in range(len(space.dims)) if a not in axes]
    current = axes + rest
    inverse = np.argsort(current)
    return np.ascontiguousarray(out.transpose(inverse)).reshape(-1)


def embed_operator(space: HilbertSpace, matrix: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    """Extend an operator on a label subset to the whole space by identity."""
    labels = list(labels)
    axes = [space.axis(x) for x in labels]
    dims = [space.dims[a] for a in axes]
    rest = [a for a in range(len(space.dims)) if a not in axes]
    rest_dim = int(np.prod([space.dims[a] for a in rest], dtype=np.int64))
    m = _as_complex(matrix)
    block = int(np.prod(dims, dtype=np.int64))
    if m.shape != (block, block):
        raise ValueError(f"operator shape {m.shape} does not match labels {labels}")
    big = np.kron(m, np.eye(rest_dim))  # ordered (labels..., rest...)
    order = axes + rest
    n = len(space.dims)
    shaped = big.reshape([space.dims[a] for a in order] * 2)
    inverse = list(np.argsort(order))
    perm = inverse + [n + a for a in inverse]
    return np.ascontiguousarray(shaped.transpose(perm)).reshape(space.dim, space.dim)


def vector_marginal(space: HilbertSpace, amps: np.ndarray, keep: Sequence[str]) -> np.ndarray:
    """Reduced density matrix of a (possibly unnormalised) vector."""
    keep = list(keep)
    axes = [space.axis(x) for x in keep]
    rest = [a for a in range(len(space.dims)) if a not in axes]
    tensor = np.asarray(amps).reshape(space.dims).transpose(axes + rest)
    kdim = int(np.prod([space.dims[a] for a in axes], dtype=np.int64))
    w = tensor.reshape(kdim, -1)
    return w @ w.conj().T


# ---------------------------------------------------------------------------
# public operations


def tensor_product(a, b):
    """Kronecker product preserving labels; both operands of the same type."""
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    return a.tensor(b)


def partial_trace(state, keep: Iterable[str]) -> DensityOperator:
    """Trace out every factor not named in ``keep`` (order preserved)."""
    if isinstance(state, StateVector):
        return state.marginal(keep)
    if not isinstance(state, DensityOperator):
        raise TypeError("partial_trace expects a DensityOperator or StateVector")
    space = state.space
    sub = space.restrict(keep)
    if not sub.labels:
        raise ValueError("keep must name at least one factor")
    axes = [space.axis(x) for x in sub.labels]
    rest = [a for a in range(len(space.dims)) if a not in axes]
    n = len(space.dims)
    t = state.matrix.reshape(space.dims * 2)
    perm = axes + rest + [n + a for a in axes] + [n + a for a in rest]
    t = t.transpose(perm)
    kdim = sub.dim
    rdim = space.dim // kdim
    t = t.reshape(kdim, rdim, kdim, rdim)
    out = np.einsum("irjr->ij", t)
    return DensityOperator(sub, out)


def purify(rho: DensityOperator, new_label: str = "E") -> StateVector:
    """Return a pure state on ``space (x) new_label`` whose marginal is rho.

    The purifier dimension equals the rank of rho (support cut at
    ``SUPPORT_ATOL``), so pure inputs get a one-dimensional purifier.
    """
    if new_label in rho.space.labels:
        raise ValueError(f"label {new_label!r} already used")
    vals, vecs = np.linalg.eigh(rho.matrix)
    sel = vals > SUPPORT_ATOL
    if not np.any(sel):
        raise ValueError("cannot purify an operator with empty support")
    lam = vals[sel]
    v = vecs[:, sel]
    amps = (v * np.sqrt(lam)).reshape(-1)  # index order (space, purifier)
    space = rho.space.add_factor(new_label, int(lam.size))
    return StateVector(space, amps)


def operator_function(matrix: np.ndarray, f: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigendecompose a hermitian matrix and apply a spectral function.

    ``f`` is one of ``identity``, ``sqrt``, ``inv_sqrt_on_support``,
    ``log2_clamped``.  Returns ``(eigenvalues, eigenvectors, f(matrix))``.
    """
    m = _as_complex(matrix)
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > KIND_ATOL:
        raise ValueError(f"operator_function needs a hermitian input (deviation {herm:g})")
    vals, vecs = np.linalg.eigh(m)
    if f == "identity":
        fv = vals.astype(float)
    elif f == "sqrt":
        if vals[0] < -PSD_ATOL:
            raise ValueError(f"sqrt of a non-positive operator (min eig {vals[0]:g})")
        fv = np.sqrt(np.clip(vals, 0.0, None))
    elif f == "inv_sqrt_on_support":
        if vals[0] < -PSD_ATOL:
            raise ValueError(f"inv sqrt of a non-positive operator (min eig {vals[0]:g})")
        fv = np.where(vals > SUPPORT_ATOL, 1.0 / np.sqrt(np.clip(vals, SUPPORT_ATOL, None)), 0.0)
    elif f == "log2_clamped":
        fv = np.log2(np.clip(vals, LOG_CLAMP, None))
    else:
        raise ValueError(f"unknown spectral function {f!r}")
    out = (vecs * fv) @ vecs.conj().T
    return vals, vecs, out


def hermitian_decompose(op, f: str = "identity"):
    """Spectral decomposition of a hermitian LinearOperator or DensityOperator.

    Returns ``(eigenvalues, eigenvectors, LinearOperator(f(op)))``.
    """
    if isinstance(op, (LinearOperator, DensityOperator)):
        space, matrix = op.space, op.matrix
    else:
        raise TypeError("hermitian_decompose expects a LinearOperator or DensityOperator")
    vals, vecs, out = operator_function(matrix, f)
    return vals, vecs, LinearOperator(space, out, "hermitian")


def sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    return operator_function(matrix, "sqrt")[2]


def trace_norm(matrix: np.ndarray) -> float:
    m = _as_complex(matrix)
    if np.max(np.abs(m - m.conj().T)) <= KIND_ATOL:
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def trace_distance(rho, sigma) -> float:
    """Normalised trace distance (1/2)||rho - sigma||_1 in [0, 1]."""
    a = rho.matrix if isinstance(rho, (DensityOperator, LinearOperator)) else _as_complex(rho)
    b = sigma.matrix if isinstance(sigma, (DensityOperator, LinearOperator)) else _as_complex(sigma)
    return float(np.clip(0.5 * trace_norm(a - b), 0.0, 1.0))


def fidelity(rho, sigma) -> float:
    """Root fidelity Tr|sqrt(rho) sqrt(sigma)| in [0, 1]."""
    a = rho.matrix if isinstance(rho, (DensityOperator, LinearOperator)) else _as_complex(rho)
    b = sigma.matrix if isinstance(sigma, (DensityOperator, LinearOperator)) else _as_complex(sigma)
    cross = sqrt_psd(a) @ sqrt_psd(b)
    return float(np.clip(np.sum(np.linalg.svd(cross, compute_uv=False)), 0.0, 1.0))


def pure_state_trace_distance(a: StateVector, b: StateVector) -> float:
    """Unnormalised Tr|a - b| for pure states, via the overlap."""
    ov = abs(a.overlap(b))
    return 2.0 * math.sqrt(max(0.0, 1.0 - min(1.0, ov) ** 2))
