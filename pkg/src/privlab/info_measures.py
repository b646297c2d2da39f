"""Entropies, Holevo quantities, and entropic uncertainty audits.

All entropies are in bits.  Eigenvalues are clamped at 1e-12 before
logarithms, which keeps zero modes out of the sum without disturbing
anything above the clamp.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qudit_ops import ConjugateBasis, Povm, measure
from .tensor_core import (
    LOG_CLAMP,
    DensityOperator,
    HilbertSpace,
    StateVector,
    _as_complex,
    vector_marginal,
)


def shannon_entropy(p) -> float:
    """Shannon entropy in bits of a probability vector."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.size and float(arr.min()) < -1e-12:
        raise ValueError(f"negative probability {arr.min():g}")
    if abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {arr.sum()!r}")
    arr = np.clip(arr, LOG_CLAMP, None)
    return float(-np.sum(arr * np.log2(arr)) if arr.size else 0.0)


def _entropy_of_weights(w: np.ndarray) -> float:
    """-sum w log2 w over raw nonnegative weights (no normalisation check)."""
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    w = w[w > LOG_CLAMP]
    return float(-np.sum(w * np.log2(w))) if w.size else 0.0


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy in bits."""
    m = rho.matrix if isinstance(rho, DensityOperator) else _as_complex(rho)
    return _entropy_of_weights(np.linalg.eigvalsh(m))


@dataclass(frozen=True)
class CqEnsemble:
    """Classical-quantum ensemble: outcome k with probability p_k, state phi_k."""

    probs: np.ndarray
    states: tuple[DensityOperator, ...]
    labels: tuple = ()

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size != len(self.states):
            raise ValueError("probability and state counts differ")
        if p.size == 0:
            raise ValueError("empty ensemble")
        if float(p.min()) < -1e-12:
            raise ValueError(f"negative probability {p.min():g}")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        dim = self.states[0].matrix.shape[0]
        if any(s.matrix.shape[0] != dim for s in self.states):
            raise ValueError("ensemble states live on different dimensions")
        labels = tuple(self.labels) if self.labels else tuple(range(p.size))
        if len(labels) != p.size:
            raise ValueError("label count must match ensemble size")
        p = np.clip(p, 0.0, None)
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.states[0].matrix.shape[0]

    def average_matrix(self) -> np.ndarray:
        return np.sum([p * s.matrix for p, s in zip(self.probs, self.states)], axis=0)


def holevo_information(ensemble: CqEnsemble) -> float:
    """Holevo quantity S(sum p_k phi_k) - sum p_k S(phi_k) in bits."""
    avg = _entropy_of_weights(np.linalg.eigvalsh(ensemble.average_matrix()))
    cond = sum(p * von_neumann_entropy(s) for p, s in zip(ensemble.probs, ensemble.states))
    return float(avg - cond)


def coherent_information(rho: DensityOperator, target="B") -> float:
    """I_c(A > target) = S(target) - S(whole) on a bipartition of rho."""
    targets = (target,) if isinstance(target, str) else tuple(target)
    reduced = rho.marginal(targets)
    return von_neumann_entropy(reduced) - von_neumann_entropy(rho)


def conditional_entropy(joint) -> float:
    """H(X|Y) in bits from a joint table with X on axis 0 and Y on axis 1."""
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2:
        raise ValueError("joint table must be two-dimensional")
    if float(j.min()) < -1e-12:
        raise ValueError(f"negative joint probability {j.min():g}")
    if abs(float(j.sum()) - 1.0) > 1e-9:
        raise ValueError(f"joint table sums to {j.sum()!r}")
    return _entropy_of_weights(j.reshape(-1)) - _entropy_of_weights(j.sum(axis=0))


def mutual_information(joint) -> float:
    """I(X:Y) in bits from a joint probability table."""
    j = np.asarray(joint, dtype=float)
    hx = _entropy_of_weights(j.sum(axis=1))
    return hx - conditional_entropy(j)


# ---------------------------------------------------------------------------
# entropic uncertainty audits

AUDIT_MODES = ("maassen_uffink", "cit", "quantum_cit")


@dataclass(frozen=True)
class AuditRecord:
    """One uncertainty-relation check: sum(lhs_terms) >= rhs, slack = lhs - rhs."""

    mode: str
    lhs_terms: tuple[float, ...]
    rhs: float
    slack: float

    def to_dict(self) -> dict:
        return {"mode": self.mode, "lhs_terms": list(self.lhs_terms),
                "rhs": self.rhs, "slack": self.slack}


def _key_probs(rho: DensityOperator, columns: np.ndarray) -> np.ndarray:
    p = np.einsum("kx,kl,lx->x", columns.conj(), rho.matrix, columns).real
    return np.clip(p, 0.0, None)


def _cq_blocks(state, key_label: str, columns: np.ndarray,
               side_labels: Sequence[str]) -> list[np.ndarray]:
    """Unnormalised side states Tr_rest[(|v_x><v_x| (x) 1) rho] for each column."""
    if isinstance(state, DensityOperator):
        vec = None
        rho = state
    else:
        vec = state
        rho = None
    blocks = []
    d = columns.shape[1]
    if vec is not None:
        space = vec.space
        axis = space.axis(key_label)
        tensor = vec.amplitudes.reshape(space.dims)
        for x in range(d):
            v = columns[:, x]
            comp = np.tensordot(v.conj(), tensor, axes=(0, axis))  # drops the key axis
            rest_labels = [l for l in space.labels if l != key_label]
            rest_space = HilbertSpace(tuple(space.dims_of(rest_labels)), tuple(rest_labels))
            blocks.append(vector_marginal(rest_space, comp.reshape(-1),
                                          rest_space.restrict(side_labels).labels))
        return blocks
    space = rho.space
    sub = space.restrict(side_labels)
    axes = [space.axis(x) for x in sub.labels]
    kaxis = space.axis(key_label)
    n = len(space.dims)
    t = rho.matrix.reshape(space.dims * 2)
    for x in range(d):
        v = columns[:, x]
        m = np.tensordot(v.conj(), t, axes=(0, kaxis))
        m = np.tensordot(v, m, axes=(0, kaxis + n - 1))
        # m now has row indices (all but key) then column indices (all but key)
        rest = [a for a in range(n) if a != kaxis]
        keep_pos = [rest.index(a) for a in axes]
        drop_pos = [i for i, a in enumerate(rest) if a not in axes]
        r = len(rest)
        perm = keep_pos + drop_pos + [r + p for p in keep_pos] + [r + p for p in drop_pos]
        m = m.transpose(perm)
        kdim = sub.dim
        rdim = int(np.prod([space.dims[a] for a in rest], dtype=np.int64)) // kdim
        m = m.reshape(kdim, rdim, kdim, rdim)
        blocks.append(np.einsum("irjr->ij", m))
    return blocks


def _conditional_quantum_entropy(state, key_label: str, columns: np.ndarray,
                                 side_labels: Sequence[str]) -> float:
    """S(K|side) in bits after measuring key_label in the given basis."""
    blocks = _cq_blocks(state, key_label, columns, side_labels)
    joint = sum(_entropy_of_weights(np.linalg.eigvalsh(b)) for b in blocks)
    side = _entropy_of_weights(np.linalg.eigvalsh(np.sum(blocks, axis=0)))
    return float(joint - side)


def uncertainty_audit(mode: str, state, conj_basis: ConjugateBasis | None = None, *,
                      key_label: str = "A",
                      x_witness: tuple[Sequence[str], Povm] | None = None,
                      z_witness: tuple[Sequence[str], Povm] | None = None) -> AuditRecord:
    """Audit one instance of an entropic uncertainty relation.

    Modes:
      * ``maassen_uffink``: H(Z) + H(X~) >= log2 d on the key marginal.
      * ``cit``: H(Z|z_witness POVM) + H(X~|x_witness POVM) >= log2 d, with
        the witnesses measured on disjoint label sets of the same state.
      * ``quantum_cit``: S(Z|E) + S(X~|B) >= log2 d on a state with labels
        A, B, E.
    """
    if mode not in AUDIT_MODES:
        raise ValueError(f"unknown audit mode {mode!r}")
    space = state.space
    d = space.dim_of(key_label)
    basis = conj_basis if conj_basis is not None else ConjugateBasis.fourier(d)
    if basis.d != d:
        raise ValueError("conjugate basis dimension does not match the key register")
    rhs = float(np.log2(d))

    if mode == "maassen_uffink":
        rho = state.marginal((key_label,)) if len(space.labels) > 1 else (
            state.density() if isinstance(state, StateVector) else state)
        hz = shannon_entropy(np.clip(np.diag(rho.matrix).real, 0.0, None))
        hx = shannon_entropy(_key_probs(rho, basis.vectors))
        terms = (hz, hx)

    elif mode == "cit":
        if x_witness is None or z_witness is None:
            raise ValueError("cit mode needs x_witness and z_witness POVMs")
        zkey = Povm.standard_basis(d)
        xkey = basis.povm()
        res_z = measure(state, [((key_label,), zkey), (tuple(z_witness[0]), z_witness[1])])
        res_x = measure(state, [((key_label,), xkey), (tuple(x_witness[0]), x_witness[1])])
        terms = (conditional_entropy(res_z.probs), conditional_entropy(res_x.probs))

    else:  # quantum_cit
        for lbl in ("B", "E"):
            if lbl not in space.labels:
                raise ValueError("quantum_cit expects labels A, B, E")
        sz = _conditional_quantum_entropy(state, key_label, np.eye(d), ("E",))
        sx = _conditional_quantum_entropy(state, key_label, basis.vectors, ("B",))
        terms = (sz, sx)

    lhs = float(sum(terms))
    return AuditRecord(mode=mode, lhs_terms=tuple(float(t) for t in terms),
                       rhs=rhs, slack=lhs - rhs)
