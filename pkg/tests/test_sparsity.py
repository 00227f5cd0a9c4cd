import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riplab.sparsity import (
    AtomicPolytope,
    CanonicalL1,
    NormBounds,
    SamplingError,
    SchattenBall,
    TensorHull,
    conjugate_exponent,
    dual_norm,
    is_sparse,
    model_from_dict,
    model_to_dict,
    norm_x,
    parse_model,
    sample_sparse,
)

from .conftest import crandn


def test_l1_norm_of_basis_vector():
    x = np.zeros(5)
    x[0] = 1
    assert norm_x(CanonicalL1(5), x) == 1.0


def test_l1_norm_of_flat_unit_vector():
    N = 9
    assert norm_x(CanonicalL1(N), np.ones(N) / np.sqrt(N)) == pytest.approx(np.sqrt(N))


def test_nuclear_norm_of_scaled_identity():
    x = np.eye(2) / np.sqrt(2)
    assert norm_x(SchattenBall(2, 1.0), x) == pytest.approx(np.sqrt(2), abs=1e-12)


def test_l1_dual_of_all_ones():
    assert dual_norm(CanonicalL1(6), np.ones(6)) == 1.0


def test_polytope_of_basis_atoms_has_linf_dual(rng):
    eta = crandn(rng, 5)
    model = AtomicPolytope(np.eye(5))
    assert dual_norm(model, eta) == pytest.approx(np.max(np.abs(eta)), abs=1e-12)


def test_polytope_of_basis_atoms_has_l1_norm(rng):
    x = rng.standard_normal(5)
    assert norm_x(AtomicPolytope(np.eye(5)), x) == pytest.approx(np.sum(np.abs(x)), rel=1e-7)


def test_polytope_complex_gauge_uses_cone_program(rng):
    x = crandn(rng, 4)
    assert norm_x(AtomicPolytope(np.eye(4)), x) == pytest.approx(np.sum(np.abs(x)), rel=1e-5)


def test_polytope_outside_span_is_infinite():
    atoms = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert norm_x(AtomicPolytope(atoms), [0, 0, 1.0]) == np.inf


def test_polytope_rejects_atoms_outside_ball():
    with pytest.raises(ValueError):
        AtomicPolytope(np.array([[2.0, 0.0]]))


def test_schatten_dual_for_identity_instrument():
    n = 8
    q_dual = np.log(n)
    q = q_dual / (q_dual - 1)
    value = dual_norm(SchattenBall(n, q), np.sqrt(n) * np.eye(n))
    assert np.sqrt(n) <= value <= np.e * np.sqrt(n) * (1 + 1e-12)


def test_conjugate_exponent_pairs():
    assert conjugate_exponent(1.0) == np.inf
    assert conjugate_exponent(2.0) == 2.0
    assert conjugate_exponent(1.5) == pytest.approx(3.0)


def test_sparsity_membership_examples():
    N = 7
    model = CanonicalL1(N)
    flat = np.ones(N) / np.sqrt(N)
    assert is_sparse(model, flat, N)
    assert not is_sparse(model, flat, N - 1)
    x = np.zeros(N, dtype=complex)
    x[:3] = [1, -1, 1j]
    assert is_sparse(model, x, 3)
    assert is_sparse(model, np.zeros(N), 1.0)


def test_tensor_norm_bounds_bracket_rank_one(rng):
    model = TensorHull(2, 3)
    factors = [crandn(rng, 2) for _ in range(3)]
    factors = [f / np.linalg.norm(f) for f in factors]
    x = np.einsum("i,j,k->ijk", *factors).reshape(-1)
    b = norm_x(model, 2.5 * x)
    assert isinstance(b, NormBounds)
    assert b.lower <= 2.5 + 1e-9 and b.upper >= 2.5 - 1e-9
    assert b.upper == pytest.approx(2.5, rel=1e-6)
    assert is_sparse(model, x, 1.0)


def test_tensor_order_two_is_exact(rng):
    x = crandn(rng, 9)
    assert norm_x(TensorHull(3, 2), x).lower == norm_x(TensorHull(3, 2), x).upper
    assert norm_x(TensorHull(3, 2), x).upper == pytest.approx(
        np.sum(np.linalg.svd(x.reshape(3, 3), compute_uv=False)))


def test_tensor_dual_bounds_order(rng):
    model = TensorHull(2, 3)
    for _ in range(5):
        eta = rng.standard_normal(8)
        b = dual_norm(model, eta)
        assert b.lower <= b.upper + 1e-12
        assert b.upper <= np.linalg.norm(eta) + 1e-12


@pytest.mark.parametrize("model", [
    CanonicalL1(6), SchattenBall(3, 1.0), SchattenBall(3, 1.5), AtomicPolytope(np.eye(6)),
])
def test_holder_duality(model, rng):
    for _ in range(10):
        x, eta = crandn(rng, model.size), crandn(rng, model.size)
        if isinstance(model, AtomicPolytope):
            x, eta = x.real, eta.real
        assert abs(np.vdot(eta, x)) <= dual_norm(model, eta) * norm_x(model, x) + 1e-9


def test_dual_norm_order_reversal(rng):
    small = AtomicPolytope(np.eye(4)[:2])
    big = AtomicPolytope(np.vstack([np.eye(4)[:2], np.ones((1, 4)) / 2]))
    for _ in range(20):
        eta = crandn(rng, 4)
        assert dual_norm(small, eta) <= dual_norm(big, eta) + 1e-12


@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.integers(0, 2**31))
def test_norm_homogeneity(c, seed):
    rng = np.random.default_rng(seed)
    for model in (CanonicalL1(5), SchattenBall(2, 1.3)):
        x = crandn(rng, model.size)
        assert norm_x(model, c * x) == pytest.approx(abs(c) * norm_x(model, x), rel=1e-10)


@given(st.integers(0, 2**31), st.integers(1, 6))
def test_l1_oracle_equality(seed, N):
    rng = np.random.default_rng(seed)
    x = crandn(rng, N)
    assert norm_x(CanonicalL1(N), x) == pytest.approx(np.abs(x).sum(), rel=1e-12)
    assert dual_norm(CanonicalL1(N), x) == pytest.approx(np.abs(x).max(), rel=1e-12)


@pytest.mark.parametrize("model,s", [
    (CanonicalL1(10), 1), (CanonicalL1(10), 3), (CanonicalL1(10), 2.5),
    (SchattenBall(4, 1.0), 2), (SchattenBall(4, 1.5), 3),
    (AtomicPolytope(np.eye(6)), 2), (TensorHull(2, 3), 1), (TensorHull(2, 2), 2),
])
def test_samples_lie_in_sparse_slice(model, s, rng):
    for _ in range(10):
        sample = sample_sparse(model, s, rng)
        assert np.linalg.norm(sample.vector) == pytest.approx(1.0, abs=1e-12)
        assert sample.certificate <= np.sqrt(s) + 1e-12
        if not isinstance(model, TensorHull):
            assert is_sparse(model, sample.vector, s)


def test_l1_sample_at_level_one_is_basis_vector(rng):
    sample = sample_sparse(CanonicalL1(8), 1, rng)
    assert np.count_nonzero(sample.vector) == 1
    assert sample.certificate == pytest.approx(1.0)


def test_schatten_sample_has_rank_s(rng):
    sample = sample_sparse(SchattenBall(5, 1.0), 3, rng)
    sv = np.linalg.svd(sample.vector.reshape(5, 5), compute_uv=False)
    assert np.sum(sv > 1e-10) == 3
    assert np.sum(sv) <= np.sqrt(3) + 1e-12


def test_sampler_reports_exhausted_budget(rng):
    with pytest.raises(SamplingError):
        sample_sparse(CanonicalL1(10), 1.0, rng, n_atoms=5, max_tries=5)


def test_sampler_is_seed_deterministic():
    a = sample_sparse(SchattenBall(3), 2, 5).vector
    b = sample_sparse(SchattenBall(3), 2, 5).vector
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("spec,expected", [
    ("l1:64", CanonicalL1(64)),
    ("schatten:4:1.5", SchattenBall(4, 1.5)),
    ("schatten:4", SchattenBall(4, 1.0)),
    ("tensor:2:3", TensorHull(2, 3)),
])
def test_model_shorthand_and_roundtrip(spec, expected):
    model = parse_model(spec)
    assert model == expected
    assert model_from_dict(json.loads(json.dumps(model_to_dict(model)))) == expected


def test_polytope_roundtrip(rng):
    atoms = crandn(rng, 3, 4)
    atoms /= 2 * np.linalg.norm(atoms, axis=1, keepdims=True)
    back = model_from_dict(json.loads(json.dumps(model_to_dict(AtomicPolytope(atoms)))))
    np.testing.assert_array_equal(back.atoms, atoms)


@pytest.mark.parametrize("spec", ["l2:4", "tensor:2", "schatten:x", "l1"])
def test_bad_model_shorthand(spec):
    with pytest.raises(ValueError):
        parse_model(spec)
