"""Helstrom pairs, pretty good measurement, per-class decoders."""

import math

import numpy as np
import pytest

from privlab import (CqEnsemble, DensityOperator, HilbertSpace, HswConfig,
                     HswDecoderResult, haar_vector, helstrom_pair,
                     hsw_class_decoder, pgm, pgm_error,
                     random_density_operator, substream, trace_norm)
from conftest import assert_povm


def ket_density(vec, label="Q"):
    vec = np.asarray(vec, dtype=np.complex128)
    h = HilbertSpace((vec.size,), (label,))
    return DensityOperator(h, np.outer(vec, vec.conj()))


def test_helstrom_two_pure_states_analytic():
    # equal priors: p_err = 1/2 (1 - sqrt(1 - |<a|b>|^2))
    for seed in range(8):
        rng = substream(seed)
        a = haar_vector(3, rng)
        b = haar_vector(3, rng)
        ov2 = abs(np.vdot(a, b)) ** 2
        want = 0.5 * (1.0 - math.sqrt(1.0 - ov2))
        povm, err = helstrom_pair(ket_density(a), ket_density(b))
        assert err == pytest.approx(want, abs=1e-10)
        assert_povm(povm, 3)


def test_helstrom_orthogonal_states_and_identical():
    e0 = ket_density([1.0, 0.0])
    e1 = ket_density([0.0, 1.0])
    _, err = helstrom_pair(e0, e1)
    assert err == pytest.approx(0.0, abs=1e-12)
    _, same = helstrom_pair(e0, e0)
    assert same == pytest.approx(0.5, abs=1e-12)


def test_helstrom_trace_norm_oracle():
    # p_err = 1/2 (1 - ||p0 rho0 - p1 rho1||_1)
    h = HilbertSpace((3,), ("Q",))
    for seed in range(8):
        r0 = random_density_operator(h, substream(100 + seed))
        r1 = random_density_operator(h, substream(200 + seed))
        for p0 in (0.5, 0.3, 0.8):
            want = 0.5 * (1.0 - trace_norm(p0 * r0.matrix - (1 - p0) * r1.matrix))
            _, err = helstrom_pair(r0, r1, p0=p0)
            assert err == pytest.approx(want, abs=1e-10)


def test_helstrom_error_is_achieved_by_returned_povm():
    h = HilbertSpace((2,), ("Q",))
    for seed in range(6):
        r0 = random_density_operator(h, substream(300 + seed))
        r1 = random_density_operator(h, substream(400 + seed))
        povm, err = helstrom_pair(r0, r1)
        achieved = 1.0 - 0.5 * float(np.real(
            np.trace(povm.elements[0] @ r0.matrix)
            + np.trace(povm.elements[1] @ r1.matrix)))
        assert achieved == pytest.approx(err, abs=1e-10)


def test_pgm_orthogonal_ensemble_is_projective():
    ens = CqEnsemble(np.array([0.25, 0.75]),
                     (ket_density([1.0, 0.0]), ket_density([0.0, 1.0])))
    povm = pgm(ens)
    assert_povm(povm, 2)
    assert pgm_error(ens, povm) == pytest.approx(0.0, abs=1e-12)


def test_pgm_trine_frozen_error():
    # symmetric trine: PGM is optimal with success 2/3
    kets = [np.array([math.cos(2 * math.pi * k / 3),
                      math.sin(2 * math.pi * k / 3)]) for k in range(3)]
    ens = CqEnsemble(np.full(3, 1 / 3), tuple(ket_density(v) for v in kets))
    assert pgm_error(ens) == pytest.approx(1 / 3, abs=1e-10)


def test_pgm_between_helstrom_and_twice_helstrom():
    h = HilbertSpace((3,), ("Q",))
    for seed in range(12):
        r0 = random_density_operator(h, substream(500 + seed))
        r1 = random_density_operator(h, substream(600 + seed))
        p0 = float(substream(700 + seed).uniform(0.2, 0.8))
        ens = CqEnsemble(np.array([p0, 1 - p0]), (r0, r1))
        _, opt = helstrom_pair(r0, r1, p0=p0)
        err = pgm_error(ens)
        assert err >= opt - 1e-10
        assert err <= 2 * opt + 1e-10


def test_pgm_error_accepts_external_measurement():
    h = HilbertSpace((2,), ("Q",))
    r0 = random_density_operator(h, substream(800))
    r1 = random_density_operator(h, substream(801))
    ens = CqEnsemble(np.array([0.5, 0.5]), (r0, r1))
    povm, opt = helstrom_pair(r0, r1)
    assert pgm_error(ens, povm) == pytest.approx(opt, abs=1e-10)


def test_hsw_class_decoder_single_class_matches_pgm():
    h = HilbertSpace((3,), ("Q",))
    states = tuple(random_density_operator(h, substream(900 + i))
                   for i in range(3))
    ens = CqEnsemble(np.array([0.2, 0.5, 0.3]), states, labels=(0, 1, 2))
    res = hsw_class_decoder(ens, {(): (0, 1, 2)})
    assert isinstance(res, HswDecoderResult)
    assert set(res.decoders) == {()}
    assert res.average_error == pytest.approx(pgm_error(ens), abs=1e-10)
    assert res.aborted_mass == pytest.approx(0.0, abs=1e-12)


def test_hsw_class_decoder_partition_bookkeeping():
    h = HilbertSpace((2,), ("Q",))
    states = tuple(random_density_operator(h, substream(1000 + i))
                   for i in range(4))
    probs = np.array([0.1, 0.4, 0.2, 0.3])
    ens = CqEnsemble(probs, states, labels=(0, 1, 2, 3))
    classes = {(0,): (0, 1), (1,): (2, 3)}
    res = hsw_class_decoder(ens, classes)
    assert set(res.decoders) == {(0,), (1,)}
    for value, members in classes.items():
        assert_povm(res.decoders[value], 2)
        assert res.decoders[value].outcome_labels == tuple(members)
    # average error = sum_class P(class) * per-class error
    want = sum(probs[list(m)].sum() * res.per_class_error[v]
               for v, m in classes.items())
    assert res.average_error == pytest.approx(want, abs=1e-10)
    # orthogonal pairs inside each class would make both errors vanish; the
    # random ones cannot beat guessing the likelier member
    for v, m in classes.items():
        assert 0.0 <= res.per_class_error[v] <= 0.5 + 1e-12


def test_hsw_class_decoder_rejects_bad_partition():
    h = HilbertSpace((2,), ("Q",))
    states = (random_density_operator(h, substream(1)),
              random_density_operator(h, substream(2)))
    ens = CqEnsemble(np.array([0.5, 0.5]), states, labels=(0, 1))
    with pytest.raises(ValueError):
        hsw_class_decoder(ens, {(0,): (0,)})  # misses index 1
    with pytest.raises(ValueError):
        hsw_class_decoder(ens, {(0,): (0, 1), (1,): (1,)})  # overlap


def test_hsw_typicality_path_stays_sound():
    h = HilbertSpace((2,), ("Q",))
    base_states = (DensityOperator(h, np.diag([0.9, 0.1])),
                   DensityOperator(h, np.diag([0.2, 0.8])))
    base = CqEnsemble(np.array([0.5, 0.5]), base_states, labels=(0, 1))
    # two-fold iid extension of the base ensemble
    labels, probs, states = [], [], []
    for i in range(2):
        for j in range(2):
            labels.append(2 * i + j)
            probs.append(0.25)
            m = np.kron(base_states[i].matrix, base_states[j].matrix)
            states.append(DensityOperator(HilbertSpace((4,), ("Q",)), m))
    ens = CqEnsemble(np.array(probs), tuple(states), labels=tuple(labels))
    cfg = HswConfig(delta=0.4, use_typicality=True)
    res = hsw_class_decoder(ens, {(): tuple(labels)}, cfg, iid_base=base,
                            n_copies=2)
    assert 0.0 <= res.average_error <= 1.0
    assert 0.0 <= res.aborted_mass <= 1.0
    for povm in res.decoders.values():
        total = np.sum(povm.elements, axis=0)
        vals = np.linalg.eigvalsh(total)
        assert vals.max() <= 1.0 + 1e-9  # sub-normalized is allowed here
