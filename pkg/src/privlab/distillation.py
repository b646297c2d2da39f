"""Key distillation with CSS codes: rate formulas, the certified one-shot
protocol, and a fully coherent hashing simulation that tracks every
intermediate state of the correctness argument.

Register conventions: A and B are the d^n-dimensional key registers, any
extra labels except E are Bob's shield, E is the purifying environment.
Syndromes live in public registers R (standard basis, values M_z k) and T
(conjugate basis, values M_x x); decoded guesses go to fresh registers with
one extra "fail" slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from .css_codes import CssCode, GfMatrix, all_strings, class_members
from .discrimination import HswConfig, HswDecoderResult, helstrom_pair, hsw_class_decoder
from .info_measures import (CqEnsemble, coherent_information, holevo_information,
                            shannon_entropy)
from .privacy import PrivacyReport, epsilon_secret_direct
from .qudit_ops import ConjugateBasis, Povm, measure
from .tensor_core import (DensityOperator, HilbertSpace, InvariantViolation,
                          StateVector, purify, vector_marginal)

AMPLITUDE_CAP = 2 ** 20

_RESERVED = {"A", "B", "C", "E", "R", "T", "Az", "Ag", "Bq", "Bg", "Sq", "D"}


def _budget(dims: Sequence[int], what: str) -> int:
    total = int(np.prod([int(v) for v in dims], dtype=np.int64))
    if total > AMPLITUDE_CAP:
        raise ValueError(
            f"{what} needs {total} amplitudes (dims {tuple(int(v) for v in dims)}), "
            f"above the {AMPLITUDE_CAP} cap")
    return total


def _canonical_pure(state) -> StateVector:
    """Pure state with axis order (A, B, shield..., E?); mixed inputs are purified."""
    if isinstance(state, DensityOperator):
        if "E" in state.space.labels:
            raise ValueError("mixed states must not carry an E register; "
                             "the purifier owns that name")
        psi = purify(state, "E")
    elif isinstance(state, StateVector):
        psi = state
    else:
        raise TypeError("expected a StateVector or DensityOperator")
    labels = psi.space.labels
    for need in ("A", "B"):
        if need not in labels:
            raise ValueError(f"state must carry register {need!r}")
    shield = tuple(x for x in labels if x not in ("A", "B", "E"))
    order = ("A", "B") + shield + (("E",) if "E" in labels else ())
    return psi.permuted(order)


def extend_with_copy(psi: StateVector, label: str = "C") -> StateVector:
    """Copy register A's standard basis coherently into a fresh register.

    The result carries axis order (A, label, rest...) with the remaining
    labels in their original order.
    """
    space = psi.space
    if label in space.labels:
        raise ValueError(f"label {label!r} already used")
    rest = tuple(x for x in space.labels if x != "A")
    d = space.dim_of("A")
    amps = psi.permuted(("A",) + rest).amplitudes.reshape(d, -1)
    _budget((d, d, amps.shape[1]), "coherent copy")
    out = np.zeros((d, d, amps.shape[1]), dtype=np.complex128)
    for a in range(d):
        out[a, a] = amps[a]
    new_space = HilbertSpace((d, d) + tuple(space.dims_of(rest)), ("A", label) + rest)
    return StateVector(new_space, out.reshape(-1))


def _conj_matrix(d: int, n: int) -> np.ndarray:
    """Column x is the n-qudit Fourier conjugate-basis vector |x~>."""
    v1 = ConjugateBasis.fourier(d).vectors
    return reduce(np.kron, [v1] * n) if n > 1 else v1


def _flat_classes(strings: np.ndarray, rows: GfMatrix) -> np.ndarray:
    """Flat class value of each string under the GF(d) map ``rows``."""
    d = rows.d
    if rows.rows == 0:
        return np.zeros(len(strings), dtype=np.int64)
    vals = (strings @ rows.entries.T) % d
    powers = d ** np.arange(rows.rows - 1, -1, -1)
    return vals @ powers


# ---------------------------------------------------------------------------
# rates


@dataclass(frozen=True)
class RateBreakdown:
    """Additive pieces of the one-way distillable key bound.

    rate = i_zb - h_z + i_x_cbs; ck_rate = i_zb - i_ze is the classical
    key rate; identity_residual is |i_x_cbs - (h_z - i_ze)| and vanishes for
    globally pure inputs.
    """

    i_zb: float
    i_ze: float
    h_z: float
    i_x_cbs: float
    rate: float
    ck_rate: float
    coherent_info: float
    identity_residual: float


def _conditional_ensemble(psi: StateVector, basis: np.ndarray | None,
                          keep: Sequence[str], copy_a: bool = False) -> CqEnsemble:
    """Ensemble of conditionals on ``keep`` from measuring A of a pure state.

    ``basis`` columns define the measured basis (standard when None).  With
    ``copy_a`` the conditionals are those of the state with A copied onto a
    register C first (C keeps the standard-basis value).
    """
    space = psi.space
    rest = tuple(x for x in space.labels if x != "A")
    d = space.dim_of("A")
    amps = psi.permuted(("A",) + rest).amplitudes.reshape(d, -1)
    if basis is not None:
        rows = basis.conj().T @ amps
    else:
        rows = amps
    rest_dims = tuple(space.dims_of(rest))
    probs = np.empty(d)
    states = []
    keep = tuple(keep)
    for x in range(d):
        if copy_a:
            if basis is None:
                raise ValueError("copy_a requires an explicit basis")
            w = basis[:, x].conj()[:, None] * amps  # (C, rest): C holds the copy
            # the copy decoheres A, so the outcome weight is incoherent
            p = float(np.sum(np.abs(w) ** 2))
            sub = HilbertSpace((d,) + rest_dims, ("C",) + rest)
        else:
            w = rows[x]
            p = float(np.sum(np.abs(w) ** 2))
            sub = HilbertSpace(rest_dims, rest)
        probs[x] = p
        keep_here = tuple(lbl for lbl in sub.labels if lbl in keep)
        ksp = sub.restrict(keep_here)
        if p <= 1e-14:
            states.append(DensityOperator(ksp, np.eye(ksp.dim) / ksp.dim))
            continue
        mat = vector_marginal(sub, w.reshape(-1) / math.sqrt(p), keep_here)
        states.append(DensityOperator(ksp, 0.5 * (mat + mat.conj().T)))
    probs = probs / probs.sum()
    return CqEnsemble(probs, tuple(states), tuple(range(d)))


def distillable_rate(state, conj_basis: ConjugateBasis | None = None) -> RateBreakdown:
    """Evaluate the one-way rate bound I(Z:B) - H(Z) + I(X:CBS).

    The Z pieces come from measuring A in the standard basis (Bob keeps B
    alone, Eve the purifier); the X piece measures A of the state with a
    coherent copy of A attached, with Bob holding the copy, B and shield.
    """
    psi = _canonical_pure(state)
    space = psi.space
    d = space.dim_of("A")
    if conj_basis is None:
        conj_basis = ConjugateBasis.fourier(d)
    if conj_basis.d != d:
        raise ValueError("conjugate basis dimension does not match register A")
    shield = tuple(x for x in space.labels if x not in ("A", "B", "E"))
    has_e = "E" in space.labels

    ens_zb = _conditional_ensemble(psi, None, ("B",))
    i_zb = holevo_information(ens_zb)
    h_z = shannon_entropy(ens_zb.probs)
    i_ze = holevo_information(_conditional_ensemble(psi, None, ("E",))) if has_e else 0.0
    ens_x = _conditional_ensemble(psi, conj_basis.vectors, ("C", "B") + shield,
                                  copy_a=True)
    i_x_cbs = holevo_information(ens_x)

    lab = psi.marginal(("A", "B") + shield)
    coherent_info = coherent_information(lab, target=("B",) + shield)
    rate = i_zb - h_z + i_x_cbs
    return RateBreakdown(i_zb=i_zb, i_ze=i_ze, h_z=h_z, i_x_cbs=i_x_cbs,
                         rate=rate, ck_rate=i_zb - i_ze,
                         coherent_info=coherent_info,
                         identity_residual=abs(i_x_cbs - (h_z - i_ze)))


# ---------------------------------------------------------------------------
# decoder families


@dataclass(frozen=True)
class CssDecoders:
    """Per-syndrome decoders plus their incoherent error bookkeeping."""

    key_decoders: Mapping
    conj_decoders: Mapping
    z_result: HswDecoderResult
    x_result: HswDecoderResult
    z_labels: tuple[str, ...]
    x_labels: tuple[str, ...]


def build_css_decoders(state, code: CssCode, cfg: HswConfig = HswConfig(),
                       *, x_on_copy: bool = False,
                       iid_base_z: CqEnsemble | None = None,
                       iid_base_x: CqEnsemble | None = None,
                       n_copies: int | None = None) -> CssDecoders:
    """Class decoders for a state and code: one POVM per syndrome value.

    Key decoders act on B and guess Alice's standard-basis string within
    the alpha class; conjugate decoders act on (B, shield), or on (C, B)
    with ``x_on_copy`` (C being a coherent copy of A), and guess her
    conjugate-basis string within the beta class.
    """
    psi = _canonical_pure(state)
    space = psi.space
    d, n = code.d, code.n
    dd = d ** n
    if space.dim_of("A") != dd or space.dim_of("B") != dd:
        raise ValueError("key registers must have dimension d^n")
    shield = tuple(x for x in space.labels if x not in ("A", "B", "E"))
    strings = all_strings(d, n)

    ens_z = _conditional_ensemble(psi, None, ("B",))
    classes_z = {tuple(int(v) for v in a): list(class_members(code, a, "alpha"))
                 for a in all_strings(d, code.m_z)}
    z_result = hsw_class_decoder(ens_z, classes_z, cfg,
                                 iid_base=iid_base_z, n_copies=n_copies)

    v = _conj_matrix(d, n)
    if x_on_copy:
        x_labels = ("C", "B")
        ens_x = _conditional_ensemble(psi, v, x_labels, copy_a=True)
    else:
        x_labels = ("B",) + shield
        ens_x = _conditional_ensemble(psi, v, x_labels)
    classes_x = {tuple(int(v_) for v_ in b): list(class_members(code, b, "beta"))
                 for b in all_strings(d, code.m_x)}
    x_result = hsw_class_decoder(ens_x, classes_x, cfg,
                                 iid_base=iid_base_x, n_copies=n_copies)
    return CssDecoders(key_decoders=z_result.decoders,
                       conj_decoders=x_result.decoders,
                       z_result=z_result, x_result=x_result,
                       z_labels=("B",), x_labels=x_labels)


def _label_slots(povm: Povm, fail_slot: int) -> list[int]:
    slots = []
    for lab in povm.outcome_labels:
        slots.append(fail_slot if lab == "fail" else int(lab))
    return slots


# ---------------------------------------------------------------------------
# one-shot distillation


@dataclass(frozen=True)
class DistillationOutcome:
    """Certified one-shot result: final state, key sizes, privacy report."""

    final_state: StateVector
    key_dims: tuple[int, int]
    report: PrivacyReport
    transcript: Mapping


def one_shot_distill(state, code: CssCode, key_decoders: Mapping,
                     conj_decoders: Mapping) -> DistillationOutcome:
    """Run the coherent one-shot key distillation protocol.

    Alice extracts both syndromes coherently into public registers R and T,
    Bob decodes her string from B conditioned on alpha into a guess
    register; the certified security parameter is p'_e + sqrt(p~'_e) where
    p'_e is the logical key-test error of the protocol state and p~'_e the
    logical conjugate-test error of the stored pre-decode state.  The
    direct ccq distance of the encoded key (Eve holding E and R) is checked
    against the certificate.
    """
    psi = _canonical_pure(state)
    space = psi.space
    d, n = code.d, code.n
    dd = d ** n
    if space.dim_of("A") != dd or space.dim_of("B") != dd:
        raise ValueError(f"key registers must have dimension {dd}")
    shield = tuple(x for x in space.labels if x not in ("A", "B", "E"))
    bad = [x for x in shield if x in _RESERVED]
    if bad:
        raise ValueError(f"shield labels {bad} collide with protocol registers")
    has_e = "E" in space.labels
    s_dim = int(np.prod(space.dims_of(shield), dtype=np.int64)) if shield else 1
    e_dim = space.dim_of("E") if has_e else 1
    amps = psi.amplitudes.reshape(dd, dd, s_dim, e_dim)

    strings = all_strings(d, n)
    k_dim = d ** code.k
    r_dim, t_dim = d ** code.m_z, d ** code.m_x
    alpha_of = _flat_classes(strings, code.mz)
    beta_of = _flat_classes(strings, code.mx)
    lam_of = _flat_classes(strings, code.logical_z)
    mu_of = _flat_classes(strings, code.logical_x)
    g_of = _flat_classes(strings, code.destabilizer_z())
    v = _conj_matrix(d, n)

    alpha_keys = [tuple(int(x) for x in a) for a in all_strings(d, code.m_z)]
    beta_keys = [tuple(int(x) for x in b) for b in all_strings(d, code.m_x)]
    for key in alpha_keys:
        if key not in key_decoders:
            raise ValueError(f"missing key decoder for alpha {key}")
    for key in beta_keys:
        if key not in conj_decoders:
            raise ValueError(f"missing conjugate decoder for beta {key}")

    # coherent syndrome extraction
    _budget((dd, dd, s_dim, e_dim, r_dim, t_dim), "syndrome extraction")
    g0 = np.tensordot(v.conj().T, amps, axes=(1, 0))
    t1 = np.zeros((dd, dd, s_dim, e_dim, r_dim, t_dim), dtype=np.complex128)
    for beta in range(t_dim):
        gb = np.where((beta_of == beta)[:, None, None, None], g0, 0.0)
        wb = np.tensordot(v, gb, axes=(1, 0))
        for alpha in range(r_dim):
            sel = alpha_of == alpha
            t1[sel, :, :, :, alpha, beta] = wb[sel]
    nrm = float(np.linalg.norm(t1))
    if abs(nrm - 1.0) > 1e-10:
        raise InvariantViolation(f"syndrome extraction broke normalisation ({nrm!r})")

    # coherent key decoding into the guess register
    c_dim = dd + 1
    _budget((dd, dd, s_dim, e_dim, r_dim, t_dim, c_dim), "key decoding")
    t2 = np.zeros((dd, dd, s_dim, e_dim, r_dim, t_dim, c_dim), dtype=np.complex128)
    for alpha in range(r_dim):
        dec: Povm = key_decoders[alpha_keys[alpha]]
        if dec.dim != dd:
            raise ValueError("key decoders must act on B alone")
        slots = _label_slots(dec, dd)
        roots = dec.sqrt_elements()
        sl = t1[:, :, :, :, alpha, :]
        for root, slot in zip(roots, slots):
            contrib = np.tensordot(root, sl, axes=(1, 1))
            t2[:, :, :, :, alpha, :, slot] += np.moveaxis(contrib, 0, 1)
    nrm = float(np.linalg.norm(t2))
    if abs(nrm - 1.0) > 1e-10:
        raise InvariantViolation(f"key decoding broke normalisation ({nrm!r})")

    # logical key test on the protocol state
    w2 = np.einsum("absert c->ac", np.abs(t2) ** 2)
    lam_c = np.concatenate([lam_of, [-1]])
    succ = sum(float(w2[lam_of == lam][:, lam_c == lam].sum()) for lam in range(k_dim))
    p_prime_e = float(min(max(1.0 - succ, 0.0), 1.0))

    # logical conjugate test on the stored pre-decode state
    succ_x = 0.0
    for beta in range(t_dim):
        dec: Povm = conj_decoders[beta_keys[beta]]
        if dec.dim != dd * s_dim:
            raise ValueError("conjugate decoders must act on (B, shield)")
        roots = dec.sqrt_elements()
        sl = t1[:, :, :, :, :, beta].reshape(dd, dd * s_dim, e_dim, r_dim)
        for root, lab in zip(roots, dec.outcome_labels):
            if lab == "fail":
                continue
            mu_hat = mu_of[int(lab)]
            applied = np.tensordot(root, sl, axes=(1, 1))
            ga = np.tensordot(v.conj().T, applied, axes=(1, 1))
            succ_x += float(np.sum(np.abs(ga[mu_of == mu_hat]) ** 2))
    p_tilde_prime_e = float(min(max(1.0 - succ_x, 0.0), 1.0))
    eps_certified = p_prime_e + math.sqrt(p_tilde_prime_e)

    # incoherent hypothesis errors at string level
    pz = np.einsum("abse->a", np.abs(amps) ** 2)
    succ_z = 0.0
    eps_z_slots = {a: {lab: i for i, lab in enumerate(key_decoders[a].outcome_labels)}
                   for a in alpha_keys}
    for k in range(dd):
        if pz[k] <= 1e-14:
            continue
        phi = np.einsum("bse,cse->bc", amps[k], amps[k].conj()) / pz[k]
        akey = alpha_keys[alpha_of[k]]
        idx = eps_z_slots[akey].get(k)
        if idx is not None:
            el = key_decoders[akey].elements[idx]
            succ_z += float(pz[k] * np.trace(el @ phi).real)
    eps_z = float(min(max(1.0 - succ_z, 0.0), 1.0))

    qx = np.einsum("abse->a", np.abs(g0) ** 2)
    succ_xx = 0.0
    eps_x_slots = {b: {lab: i for i, lab in enumerate(conj_decoders[b].outcome_labels)}
                   for b in beta_keys}
    gflat = g0.reshape(dd, dd * s_dim, e_dim)
    for x in range(dd):
        if qx[x] <= 1e-14:
            continue
        theta = np.einsum("me,qe->mq", gflat[x], gflat[x].conj()) / qx[x]
        bkey = beta_keys[beta_of[x]]
        idx = eps_x_slots[bkey].get(x)
        if idx is not None:
            el = conj_decoders[bkey].elements[idx]
            succ_xx += float(qx[x] * np.trace(el @ theta).real)
    eps_x = float(min(max(1.0 - succ_xx, 0.0), 1.0))

    if p_prime_e > eps_z + 1e-9:
        raise InvariantViolation(
            f"logical key error {p_prime_e:.6e} exceeds the string-level "
            f"hypothesis error {eps_z:.6e}")

    # encode: A -> (logical, z-syndrome, destabiliser), guesses likewise
    zperm = (lam_of * r_dim + alpha_of) * t_dim + g_of
    baux = dd // k_dim
    cperm = np.concatenate([lam_of * baux + (alpha_of * t_dim + g_of),
                            [k_dim * baux]])
    t2a = np.zeros_like(t2)
    t2a[zperm] = t2
    enc = np.zeros(t2.shape[:-1] + ((k_dim + 1) * baux,), dtype=np.complex128)
    enc[..., cperm] = t2a
    dims = ((k_dim, r_dim, t_dim, dd) + ((s_dim,) if shield else ())
            + ((e_dim,) if has_e else ()) + (r_dim, t_dim, k_dim + 1, baux))
    labels = (("A", "Az", "Ag", "Bq") + (("Sq",) if shield else ())
              + (("E",) if has_e else ()) + ("R", "T", "B", "Bg"))
    enc = enc.reshape((k_dim, r_dim, t_dim) + t2.shape[1:-1] + (k_dim + 1, baux))
    final = StateVector(HilbertSpace(dims, labels), enc.reshape(-1))
    eps_direct = epsilon_secret_direct(final, eve_labels=("E", "R"))

    report = PrivacyReport(p_e=p_prime_e, p_tilde_e=p_tilde_prime_e,
                           eps_certified=eps_certified, eps_direct=eps_direct,
                           measurement_used="css_one_shot")
    transcript = {"n": n, "d": d, "k": code.k, "eps_z": eps_z, "eps_x": eps_x,
                  "p_prime_e": p_prime_e, "p_tilde_prime_e": p_tilde_prime_e,
                  "eps_certified": eps_certified, "eps_direct": eps_direct}
    return DistillationOutcome(final_state=final, key_dims=(k_dim, k_dim + 1),
                               report=report, transcript=transcript)


# ---------------------------------------------------------------------------
# coherent hashing simulation


@dataclass(frozen=True)
class HashingSimResult:
    """Tracked intermediates of the coherent hashing protocol.

    td_* are trace distances between the actual chain state and its ideal
    counterpart, each with the proved bound_*; encoded_fidelity is the
    fidelity of the final logical (A, D) pair with the maximally entangled
    state, ideal_encoded_fidelity the same for the ideal branch.
    """

    n: int
    key_dim: int
    eps_z: float
    eps_x: float
    overlap_psi2: float
    td_psi2: float
    bound_psi2: float
    td_psi3: float
    bound_psi3: float
    td_psi4: float
    bound_psi4: float
    encoded_fidelity: float
    ideal_encoded_fidelity: float


def _pure_distance(u: np.ndarray, w: np.ndarray) -> float:
    ov = abs(complex(np.vdot(u, w)))
    return 2.0 * math.sqrt(max(1.0 - min(ov, 1.0) ** 2, 0.0))


def coherent_hashing_sim(state, n: int, code: CssCode,
                         cfg: HswConfig = HswConfig()) -> HashingSimResult:
    """Coherently run hashing on n copies and audit the correctness chain.

    The input is a single-copy state on (A, B) (purified onto E if mixed).
    Bob first decodes Alice's standard string into C conditioned on the
    standard syndromes, then her conjugate string into D conditioned on the
    conjugate syndromes, then removes the back action with a phase
    decoupler on (C, D).  Each step is compared against the ideal branch
    where C is a perfect copy of A.
    """
    if isinstance(state, DensityOperator):
        if "E" in state.space.labels:
            raise ValueError("mixed states must not carry an E register")
        psi1 = purify(state, "E")
    elif isinstance(state, StateVector):
        psi1 = state
    else:
        raise TypeError("expected a StateVector or DensityOperator")
    extra = set(psi1.space.labels) - {"A", "B", "E"}
    if extra:
        raise ValueError(f"hashing takes plain (A, B) states, got extra {sorted(extra)}")
    d = code.d
    if psi1.space.dim_of("A") != d or psi1.space.dim_of("B") != d:
        raise ValueError("single-copy registers must have dimension d")
    if code.n != n:
        raise ValueError("code length must match the number of copies")

    psi = tensor_power_grouped(psi1.permuted(tuple(
        x for x in ("A", "B", "E") if x in psi1.space.labels)), n)
    dd = d ** n
    e_dim = psi.space.dim_of("E") if "E" in psi.space.labels else 1
    amps = psi.amplitudes.reshape(dd, dd, e_dim)

    strings = all_strings(d, n)
    k_dim = d ** code.k
    r_dim, t_dim = d ** code.m_z, d ** code.m_x
    alpha_of = _flat_classes(strings, code.mz)
    beta_of = _flat_classes(strings, code.mx)
    lam_of = _flat_classes(strings, code.logical_z)
    g_of = _flat_classes(strings, code.destabilizer_z())
    v = _conj_matrix(d, n)
    c_dim = dd + 1
    _budget((dd, dd, e_dim, r_dim, t_dim, c_dim, c_dim), "hashing chain")

    decs = build_css_decoders(psi, code, cfg, x_on_copy=True)
    eps_z = decs.z_result.average_error
    eps_x = decs.x_result.average_error
    alpha_keys = [tuple(int(x) for x in a) for a in all_strings(d, code.m_z)]
    beta_keys = [tuple(int(x) for x in b) for b in all_strings(d, code.m_x)]

    # syndrome extraction
    g0 = np.tensordot(v.conj().T, amps, axes=(1, 0))
    t1 = np.zeros((dd, dd, e_dim, r_dim, t_dim), dtype=np.complex128)
    for beta in range(t_dim):
        gb = np.where((beta_of == beta)[:, None, None], g0, 0.0)
        wb = np.tensordot(v, gb, axes=(1, 0))
        for alpha in range(r_dim):
            sel = alpha_of == alpha
            t1[sel, :, :, alpha, beta] = wb[sel]

    # standard-string decode into C, and the ideal copy branch
    t2 = np.zeros((dd, dd, e_dim, r_dim, t_dim, c_dim), dtype=np.complex128)
    for alpha in range(r_dim):
        dec: Povm = decs.key_decoders[alpha_keys[alpha]]
        slots = _label_slots(dec, dd)
        roots = dec.sqrt_elements()
        sl = t1[:, :, :, alpha, :]
        for root, slot in zip(roots, slots):
            contrib = np.tensordot(root, sl, axes=(1, 1))
            t2[:, :, :, alpha, :, slot] += np.moveaxis(contrib, 0, 1)
    # ideal branch: copy A onto C first, then project the syndromes on A
    # alone, so C carries the pre-projection string
    t2p = np.zeros_like(t2)
    for beta in range(t_dim):
        sel = beta_of == beta
        proj_b = v[:, sel] @ v[:, sel].conj().T
        wb = np.einsum("ac,cbe->abec", proj_b, amps)
        for alpha in range(r_dim):
            asel = alpha_of == alpha
            t2p[asel, :, :, alpha, beta, :dd] = wb[asel]
    overlap = float(np.vdot(t2, t2p).real)
    td2 = _pure_distance(t2, t2p)
    bound2 = 2.0 * math.sqrt(2.0 * eps_z)
    for arr, name in ((t2, "key decode"), (t2p, "ideal copy")):
        nrm = float(np.linalg.norm(arr))
        if abs(nrm - 1.0) > 1e-10:
            raise InvariantViolation(f"{name} broke normalisation ({nrm!r})")

    # conjugate-string decode on (C, B), outcome kept as a conjugated ket
    # in D; the untouched C-fail block routes to the D fail slot
    vpad = np.vstack([v.conj(), np.zeros((1, dd))])
    fail_ket = np.zeros(c_dim, dtype=np.complex128)
    fail_ket[dd] = 1.0

    def conj_decode(tin: np.ndarray) -> np.ndarray:
        tout = np.zeros(tin.shape + (c_dim,), dtype=np.complex128)
        for beta in range(t_dim):
            dec: Povm = decs.conj_decoders[beta_keys[beta]]
            roots = dec.sqrt_elements()
            acc = np.add.reduce(dec.elements)
            head = float(np.max(np.abs(np.eye(dd * dd) - acc)))
            if head > 1e-9:
                raise InvariantViolation(
                    f"conjugate decoder for beta {beta_keys[beta]} is not "
                    f"complete on the decoded block ({head!r})")
            sl = tin[:, :, :, :, beta, :]
            for root, lab in zip(roots, dec.outcome_labels):
                dvec = fail_ket if lab == "fail" else vpad[:, int(lab)]
                rr = np.zeros((c_dim * dd, c_dim * dd), dtype=np.complex128)
                rr[:dd * dd, :dd * dd] = root
                rt = rr.reshape(c_dim, dd, c_dim, dd)
                applied = np.tensordot(rt, sl, axes=((2, 3), (4, 1)))
                contrib = np.moveaxis(applied, (0, 1), (4, 1))
                tout[:, :, :, :, beta, :, :] += contrib[..., None] * dvec
            fb = sl[:, :, :, :, dd]
            tout[:, :, :, :, beta, dd, dd] += fb
        return tout

    t3 = conj_decode(t2)
    t3p = conj_decode(t2p)

    # ideal conjugate branch: Alice's conjugate string lands in D as a
    # conjugated ket while (C, B, E) keep the exact conditional states
    t3pp = np.zeros(t2p.shape + (c_dim,), dtype=np.complex128)
    for beta in range(t_dim):
        sel = beta_of == beta
        mb = np.einsum("ax,cx,dx->acd", v[:, sel], v[:, sel].conj(), vpad[:, sel])
        tb = np.einsum("acd,cbe->abecd", mb, amps)
        for alpha in range(r_dim):
            asel = alpha_of == alpha
            t3pp[asel, :, :, alpha, beta, :dd, :] = tb[asel]
    td3 = _pure_distance(t3p, t3pp)
    bound3 = 2.0 * math.sqrt(2.0 * eps_x)

    # phase decoupler on (C, D)
    phases = np.exp(2j * np.pi * ((strings @ strings.T) % d) / d)
    t4 = np.empty_like(t3)
    t4pp = np.empty_like(t3pp)
    vc = v.conj()
    for c in range(c_dim):
        if c < dd:
            u_c = np.zeros((c_dim, c_dim), dtype=np.complex128)
            u_c[:dd, :dd] = (vc * phases[c]) @ vc.conj().T
            u_c[dd, dd] = 1.0
        else:
            u_c = np.eye(c_dim, dtype=np.complex128)
        t4[:, :, :, :, :, c, :] = np.tensordot(t3[:, :, :, :, :, c, :], u_c, (5, 1))
        t4pp[:, :, :, :, :, c, :] = np.tensordot(t3pp[:, :, :, :, :, c, :], u_c, (5, 1))
    td4 = _pure_distance(t4, t4pp)
    bound4 = 2.0 * (math.sqrt(2.0 * eps_z) + math.sqrt(2.0 * eps_x))

    # encoded logical fidelity with the maximally entangled state on (A, D)
    zperm = (lam_of * r_dim + alpha_of) * t_dim + g_of
    baux = dd // k_dim
    dperm = np.concatenate([lam_of * baux + (alpha_of * t_dim + g_of),
                            [k_dim * baux]])

    def logical_fidelity(arr: np.ndarray) -> float:
        w = np.zeros_like(arr)
        w[zperm] = arr
        w2 = np.zeros(w.shape[:-1] + ((k_dim + 1) * baux,), dtype=np.complex128)
        w2[..., dperm] = w
        w2 = w2.reshape(k_dim, baux, dd, e_dim, r_dim, t_dim, c_dim, k_dim + 1, baux)
        w2 = np.moveaxis(w2, 7, 1).reshape(k_dim * (k_dim + 1), -1)
        rho = w2 @ w2.conj().T
        phi = np.zeros(k_dim * (k_dim + 1), dtype=np.complex128)
        for lam in range(k_dim):
            phi[lam * (k_dim + 1) + lam] = 1.0 / math.sqrt(k_dim)
        val = float(np.real(phi.conj() @ rho @ phi))
        return math.sqrt(min(max(val, 0.0), 1.0))

    return HashingSimResult(n=n, key_dim=k_dim, eps_z=eps_z, eps_x=eps_x,
                            overlap_psi2=overlap, td_psi2=td2, bound_psi2=bound2,
                            td_psi3=td3, bound_psi3=bound3,
                            td_psi4=td4, bound_psi4=bound4,
                            encoded_fidelity=logical_fidelity(t4),
                            ideal_encoded_fidelity=logical_fidelity(t4pp))


def tensor_power_grouped(psi: StateVector, n: int) -> StateVector:
    """n-fold tensor power with same-label copies merged into one register.

    Each merged register is indexed big-endian in the copy number, so the
    flat value of n key registers of dimension d is the index of the string
    (value of copy 1, ..., value of copy n) in lexicographic order.
    """
    if n < 1:
        raise ValueError("need at least one copy")
    space = psi.space
    ll = len(space.labels)
    _budget([dim ** n for dim in space.dims], "tensor power")
    arr = psi.amplitudes.reshape(space.dims)
    out = arr
    for _ in range(n - 1):
        out = np.multiply.outer(out, arr)
    perm = [c * ll + l for l in range(ll) for c in range(n)]
    out = out.transpose(perm)
    dims = tuple(int(dim) ** n for dim in space.dims)
    return StateVector(HilbertSpace(dims, space.labels), out.reshape(-1))


# ---------------------------------------------------------------------------
# two-qubit shielded scenario


@dataclass(frozen=True)
class TwoCopyResult:
    """Two-copy scenario outcome: decoders, numeric and analytic errors."""

    stabilizer: str
    adaptive: bool
    overlap: float
    error_prob: float
    analytic_error: float
    state: StateVector
    code: CssCode
    key_decoders: Mapping
    conj_decoders: Mapping


def shielded_bit_state(phi0: np.ndarray, phi1: np.ndarray) -> StateVector:
    """Key bit with a phase-error flag held by Eve and a shield seen by Bob.

    The state is (|00> + |11>)|phi0>|0> / 2 + (|00> - |11>)|phi1>|1> / 2 on
    registers (A, B, S, E); the shield overlap <phi0|phi1> controls how much
    of Eve's flag leaks into the key phase.
    """
    phi0 = np.asarray(phi0, dtype=np.complex128).reshape(-1)
    phi1 = np.asarray(phi1, dtype=np.complex128).reshape(-1)
    if phi0.shape != phi1.shape:
        raise ValueError("shield states must share a dimension")
    for vec in (phi0, phi1):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
            raise ValueError("shield states must be normalised")
    sh = phi0.shape[0]
    amps = np.zeros((2, 2, sh, 2), dtype=np.complex128)
    for a in range(2):
        amps[a, a, :, 0] = 0.5 * phi0
        amps[a, a, :, 1] = 0.5 * (-1.0) ** a * phi1
    space = HilbertSpace((2, 2, sh, 2), ("A", "B", "S", "E"))
    return StateVector(space, amps.reshape(-1))


def _two_copy_code(stabilizer: str) -> CssCode:
    gf = lambda rows, cols: GfMatrix(2, np.array(rows, dtype=np.int64).reshape(-1, cols))
    empty = gf([], 2)
    if stabilizer == "XX":
        return CssCode(mz=empty, mx=gf([1, 1], 2),
                       logical_z=gf([1, 1], 2), logical_x=gf([1, 0], 2))
    if stabilizer == "XI":
        return CssCode(mz=empty, mx=gf([1, 0], 2),
                       logical_z=gf([0, 1], 2), logical_x=gf([0, 1], 2))
    if stabilizer == "IX":
        return CssCode(mz=empty, mx=gf([0, 1], 2),
                       logical_z=gf([1, 0], 2), logical_x=gf([1, 0], 2))
    raise ValueError(f"unknown stabilizer {stabilizer!r} (use XX, XI or IX)")


def _op_on_copy(op: np.ndarray, copy: int, sh: int) -> np.ndarray:
    """Embed an operator on one (B_j, S_j) pair into (B1 B2 S1 S2)."""
    op4 = op.reshape(2, sh, 2, sh)
    i2 = np.eye(2)
    ish = np.eye(sh)
    if copy == 0:
        out = np.einsum("bsBS,cC,tT->bcstBCST", op4, i2, ish)
    else:
        out = np.einsum("bsBS,cC,tT->cbtsCBTS", op4, i2, ish)
    return out.reshape(4 * sh * sh, 4 * sh * sh)


def _positive_split(delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(0.5 * (delta + delta.conj().T))
    pos = vecs[:, vals >= 0.0]
    p0 = pos @ pos.conj().T
    p0 = 0.5 * (p0 + p0.conj().T)
    return p0, np.eye(delta.shape[0]) - p0


def _adaptive_conj_decoders(phi0: np.ndarray, phi1: np.ndarray) -> Mapping:
    """Optimal conjugate decoders for the XX stabilizer on two copies.

    Conditioned on Bob's conjugate-basis pair b, the two candidate shield
    products of a beta class are distinguished by their own pair test, so
    the class measurement splits over Bob's sectors.
    """
    phis = [np.asarray(phi0, dtype=np.complex128).reshape(-1),
            np.asarray(phi1, dtype=np.complex128).reshape(-1)]
    sh = phis[0].shape[0]
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    dim = 4 * sh * sh
    decoders = {}
    for beta in (0, 1):
        cands = [(0, beta), (1, 1 - beta)]
        labels = tuple(2 * x0 + x1 for x0, x1 in cands)
        els = [np.zeros((dim, dim), dtype=np.complex128) for _ in cands]
        for b0 in (0, 1):
            for b1 in (0, 1):
                pb = np.kron(np.outer(h[:, b0], h[:, b0].conj()),
                             np.outer(h[:, b1], h[:, b1].conj()))
                hs = [np.kron(phis[x0 ^ b0], phis[x1 ^ b1]) for x0, x1 in cands]
                q0, q1 = _positive_split(np.outer(hs[0], hs[0].conj())
                                         - np.outer(hs[1], hs[1].conj()))
                els[0] += np.kron(pb, q0)
                els[1] += np.kron(pb, q1)
        decoders[(beta,)] = Povm(tuple(els), labels)
    return decoders


def _single_copy_conj_decoders(phi0: np.ndarray, phi1: np.ndarray,
                               code: CssCode) -> Mapping:
    """Pair-test decoders reading only the copy that carries the logical X."""
    phis = [np.asarray(phi0, dtype=np.complex128).reshape(-1),
            np.asarray(phi1, dtype=np.complex128).reshape(-1)]
    sh = phis[0].shape[0]
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    copy = int(np.nonzero(code.logical_x.entries[0])[0][0])
    rhos = []
    for x in (0, 1):
        mat = np.zeros((2 * sh, 2 * sh), dtype=np.complex128)
        for b in (0, 1):
            pb = np.outer(h[:, b], h[:, b].conj())
            shield = phis[x ^ b]
            mat += 0.5 * np.kron(pb, np.outer(shield, shield.conj()))
        rhos.append(mat)
    pair, _ = helstrom_pair(DensityOperator(HilbertSpace((2 * sh,), ("W",)), rhos[0]),
                            DensityOperator(HilbertSpace((2 * sh,), ("W",)), rhos[1]))
    els = tuple(_op_on_copy(el, copy, sh) for el in pair.elements)
    guesses = []
    for a in (0, 1):
        y = [0, 0]
        y[copy] = a
        guesses.append(2 * y[0] + y[1])
    povm = Povm(els, tuple(guesses))
    return {(0,): povm, (1,): povm}


def two_copy_scenario(phi0: np.ndarray, phi1: np.ndarray,
                      stabilizer: str = "XX", adaptive: bool = True) -> TwoCopyResult:
    """Distil one key bit from two copies of the shielded-bit state.

    With the XX stabilizer the adaptive conjugate decoder reaches the
    two-copy pair-test error (1 - sqrt(1 - s^4)) / 2 in the shield overlap
    s, while any decoder reading a single copy is stuck at
    (1 - sqrt(1 - s^2)) / 2; XI and IX can only use one copy.
    """
    psi1 = shielded_bit_state(phi0, phi1)
    code = _two_copy_code(stabilizer)
    state = tensor_power_grouped(psi1, 2)
    s_ov = abs(complex(np.vdot(np.asarray(phi0, dtype=np.complex128).reshape(-1),
                               np.asarray(phi1, dtype=np.complex128).reshape(-1))))
    if stabilizer == "XX" and adaptive:
        conj_decoders = _adaptive_conj_decoders(phi0, phi1)
        analytic = 0.5 * (1.0 - math.sqrt(max(1.0 - s_ov ** 4, 0.0)))
    else:
        conj_decoders = _single_copy_conj_decoders(phi0, phi1, code)
        analytic = 0.5 * (1.0 - math.sqrt(max(1.0 - s_ov ** 2, 0.0)))
    key_decoders = build_css_decoders(state, code).key_decoders

    # class-level conjugate guess error, end to end
    space = state.space
    shield = tuple(x for x in space.labels if x not in ("A", "B", "E"))
    v = _conj_matrix(2, 2)
    mu_of = _flat_classes(all_strings(2, 2), code.logical_x)
    beta_of = _flat_classes(all_strings(2, 2), code.mx)
    ens = _conditional_ensemble(state, v, ("B",) + shield)
    error = 0.0
    for x in range(4):
        q = float(ens.probs[x])
        if q <= 1e-14:
            continue
        dec: Povm = conj_decoders[(int(beta_of[x]),)]
        good = 0.0
        for el, lab in zip(dec.elements, dec.outcome_labels):
            if lab != "fail" and mu_of[int(lab)] == mu_of[x]:
                good += float(np.trace(el @ ens.states[x].matrix).real)
        error += q * (1.0 - good)
    error = float(min(max(error, 0.0), 1.0))
    return TwoCopyResult(stabilizer=stabilizer, adaptive=bool(adaptive),
                      overlap=s_ov, error_prob=error, analytic_error=analytic,
                      state=state, code=code,
                      key_decoders=key_decoders, conj_decoders=conj_decoders)
