"""Labeled tensor registers: marginals, purification, distances."""

import math

import numpy as np
import pytest

from privlab import (DensityOperator, HilbertSpace, StateVector, fidelity,
                     partial_trace, pure_state_trace_distance, purify,
                     substream, trace_distance, trace_norm)
from privlab.tensor_core import (apply_to_vector, embed_operator,
                                 permute_vector, sqrt_psd, tensor_product,
                                 vector_marginal)
from privlab.sampling import random_density_operator, random_pure_state


def naive_partial_trace(dims, labels, matrix, keep):
    """Index-loop oracle for the marginal on ``keep``."""
    keep = tuple(keep)
    kept_axes = [labels.index(x) for x in keep]
    traced_axes = [i for i in range(len(dims)) if labels[i] not in keep]
    kd = [dims[i] for i in kept_axes]
    td = [dims[i] for i in traced_axes]
    out = np.zeros((int(np.prod(kd)), int(np.prod(kd))), dtype=np.complex128)
    t = matrix.reshape(tuple(dims) * 2)
    for ki in np.ndindex(*kd):
        for kj in np.ndindex(*kd):
            acc = 0.0
            for ti in np.ndindex(*td) if td else [()]:
                left = [0] * len(dims)
                right = [0] * len(dims)
                for a, v in zip(kept_axes, ki):
                    left[a] = v
                for a, v in zip(kept_axes, kj):
                    right[a] = v
                for a, v in zip(traced_axes, ti):
                    left[a] = v
                    right[a] = v
                acc += t[tuple(left) + tuple(right)]
            i = int(np.ravel_multi_index(ki, kd)) if kd else 0
            j = int(np.ravel_multi_index(kj, kd)) if kd else 0
            out[i, j] = acc
    return out


def test_hilbert_space_accessors():
    h = HilbertSpace((2, 3, 4), ("A", "B", "C"))
    assert h.dim == 24
    assert h.dim_of("B") == 3
    assert h.axis("C") == 2
    assert tuple(h.dims_of(("C", "A"))) == (4, 2)
    sub = h.restrict(("B", "C"))
    assert sub.labels == ("B", "C") and sub.dims == (3, 4)
    with pytest.raises(ValueError):
        HilbertSpace((2, 2), ("A", "A"))
    with pytest.raises(ValueError):
        HilbertSpace((2, 0), ("A", "B"))


def test_state_vector_validation():
    h = HilbertSpace((2,), ("A",))
    with pytest.raises(ValueError):
        StateVector(h, np.array([1.0, 1.0]))
    psi = StateVector(h, np.array([1.0, 0.0]))
    assert abs(psi.overlap(psi) - 1.0) < 1e-12


def test_density_operator_validation():
    h = HilbertSpace((2,), ("A",))
    with pytest.raises(ValueError):
        DensityOperator(h, np.array([[0.9, 0.0], [0.0, 0.3]]))
    with pytest.raises(ValueError):
        DensityOperator(h, np.array([[0.5, 0.5], [-0.5, 0.5]]))
    with pytest.raises(ValueError):
        DensityOperator(h, np.array([[1.4, 0.0], [0.0, -0.4]]))


def test_partial_trace_matches_loop_oracle():
    for seed in range(6):
        dims, labels = (2, 3, 2), ("A", "B", "C")
        rho = random_density_operator(HilbertSpace(dims, labels), substream(seed))
        for keep in (("A",), ("B",), ("A", "C"), ("B", "C"), ("A", "B", "C")):
            want = naive_partial_trace(dims, labels, rho.matrix, keep)
            got = partial_trace(rho, keep)
            assert got.space.labels == tuple(keep)
            assert np.allclose(got.matrix, want, atol=1e-12)


def test_partial_trace_of_pure_product_is_pure():
    a = StateVector(HilbertSpace((2,), ("A",)), np.array([1.0, 0.0]))
    b = StateVector(HilbertSpace((3,), ("B",)), np.array([0.0, 1.0, 0.0]) + 0j)
    ab = a.tensor(b)
    red = partial_trace(ab, ("B",))
    assert np.allclose(red.matrix, np.diag([0.0, 1.0, 0.0]))


def test_vector_marginal_agrees_with_partial_trace():
    for seed in range(6):
        space = HilbertSpace((2, 2, 3), ("A", "B", "E"))
        psi = random_pure_state(space, substream(10 + seed))
        m = vector_marginal(space, psi.amplitudes, ("A", "E"))
        want = partial_trace(psi, ("A", "E")).matrix
        assert np.allclose(m, want, atol=1e-12)


def test_purify_round_trip():
    for seed in range(5):
        space = HilbertSpace((2, 3), ("A", "B"))
        rho = random_density_operator(space, substream(20 + seed), rank=3)
        psi = purify(rho, "E")
        assert "E" in psi.space.labels
        back = partial_trace(psi, ("A", "B"))
        assert np.allclose(back.matrix, rho.matrix, atol=1e-10)


def test_trace_norm_is_singular_value_sum():
    rng = substream(31)
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert abs(trace_norm(m) - np.linalg.svd(m, compute_uv=False).sum()) < 1e-10


def test_trace_distance_frozen_and_oracle():
    h = HilbertSpace((2,), ("A",))
    zero = DensityOperator(h, np.diag([1.0, 0.0]))
    plus = DensityOperator(h, np.full((2, 2), 0.5))
    # analytic: (1/2)||rho - sigma||_1 = sqrt(2)/2 for |0> vs |+>
    assert abs(trace_distance(zero, plus) - math.sqrt(2) / 2) < 1e-12
    for seed in range(5):
        r = random_density_operator(h, substream(40 + seed))
        s = random_density_operator(h, substream(50 + seed))
        want = 0.5 * np.abs(np.linalg.eigvalsh(r.matrix - s.matrix)).sum()
        assert abs(trace_distance(r, s) - want) < 1e-12


def test_trace_distance_triangle_inequality():
    h = HilbertSpace((3,), ("A",))
    for seed in range(8):
        a = random_density_operator(h, substream(60 + seed))
        b = random_density_operator(h, substream(70 + seed))
        c = random_density_operator(h, substream(80 + seed))
        assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12


def test_fidelity_pure_states_overlap():
    h = HilbertSpace((2,), ("A",))
    zero = DensityOperator(h, np.diag([1.0, 0.0]))
    plus = DensityOperator(h, np.full((2, 2), 0.5))
    # root fidelity of pure states is |<a|b>|
    assert abs(fidelity(zero, plus) - math.sqrt(0.5)) < 1e-12
    assert abs(fidelity(zero, zero) - 1.0) < 1e-12


def test_fidelity_fuchs_van_de_graaf():
    h = HilbertSpace((3,), ("A",))
    for seed in range(8):
        r = random_density_operator(h, substream(90 + seed))
        s = random_density_operator(h, substream(100 + seed))
        f = fidelity(r, s)
        t = trace_distance(r, s)
        assert 1.0 - f <= t + 1e-10
        assert t <= math.sqrt(max(0.0, 1.0 - f * f)) + 1e-10


def test_pure_state_trace_distance_matches_density():
    # unnormalised convention: Tr|a - b| = 2 * (normalised trace distance)
    space = HilbertSpace((2, 2), ("A", "B"))
    for seed in range(5):
        a = random_pure_state(space, substream(110 + seed))
        b = random_pure_state(space, substream(120 + seed))
        want = 2.0 * trace_distance(a.density(), b.density())
        assert abs(pure_state_trace_distance(a, b) - want) < 1e-9


def test_sqrt_psd_squares_back():
    rng = substream(130)
    for _ in range(4):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = g @ g.conj().T
        r = sqrt_psd(a)
        assert np.allclose(r @ r, a, atol=1e-10)


def test_permute_vector_round_trip():
    space = HilbertSpace((2, 3, 2), ("A", "B", "C"))
    psi = random_pure_state(space, substream(140))
    perm = permute_vector(space, psi.amplitudes, ("C", "A", "B"))
    pspace = HilbertSpace((2, 2, 3), ("C", "A", "B"))
    back = permute_vector(pspace, perm, ("A", "B", "C"))
    assert np.allclose(back, psi.amplitudes)
    # oracle: explicit einsum transpose
    want = psi.amplitudes.reshape(2, 3, 2).transpose(2, 0, 1).reshape(-1)
    assert np.allclose(perm, want)


def test_state_vector_permuted_and_marginal():
    space = HilbertSpace((2, 3), ("A", "B"))
    psi = random_pure_state(space, substream(150))
    flip = psi.permuted(("B", "A"))
    assert flip.space.labels == ("B", "A")
    assert np.allclose(partial_trace(flip, ("A",)).matrix,
                       partial_trace(psi, ("A",)).matrix)
    assert np.allclose(psi.marginal(("B",)).matrix,
                       partial_trace(psi, ("B",)).matrix)


def test_embed_and_apply_operator():
    space = HilbertSpace((2, 3, 2), ("A", "B", "C"))
    rng = substream(160)
    op = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    big = embed_operator(space, op, ("B", "C"))
    psi = random_pure_state(space, substream(161))
    direct = big @ psi.amplitudes
    routed = apply_to_vector(space, psi.amplitudes, op, ("B", "C"))
    assert np.allclose(direct, routed, atol=1e-12)
    # embedding identity on the untouched register
    eye_a = embed_operator(space, np.eye(2), ("A",))
    assert np.allclose(eye_a, np.eye(12))


def test_tensor_product_orders_labels():
    a = random_density_operator(HilbertSpace((2,), ("A",)), substream(170))
    b = random_density_operator(HilbertSpace((3,), ("B",)), substream(171))
    ab = tensor_product(a, b)
    assert ab.space.labels == ("A", "B")
    assert np.allclose(ab.matrix, np.kron(a.matrix, b.matrix))
