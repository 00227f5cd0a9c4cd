import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riplab.bounds import gaussian_dual_norm_bound
from riplab.nets import (
    SphereNet,
    admissible_epsilon,
    best_rank_one,
    gaussian_dual_tail_experiment,
    greedy_rank_one_deflation,
    moment_constants,
    net_dual_norm,
    rank_one_tensor,
    round_rank_one,
    round_to_net,
    sphere_net,
    tensor_atoms,
)

from .conftest import crandn


@pytest.fixture(scope="module")
def net2():
    return sphere_net(2, 1 / 6, rng=0, validation_samples=20_000)


@pytest.fixture(scope="module")
def atoms22(net2):
    return tensor_atoms(net2, 2)


def test_one_dimensional_net():
    net = sphere_net(1, 0.3)
    assert sorted(net.points[:, 0]) == [-1.0, 1.0]
    assert net.covering_radius == 0.0


def test_cardinality_within_volume_bound():
    net = sphere_net(2, 0.5, rng=1, validation_samples=10_000)
    assert len(net) <= 25
    assert net.cardinality_bound == pytest.approx(25.0)


def test_net_is_packing_and_covering(net2):
    assert np.allclose(np.linalg.norm(net2.points, axis=1), 1.0, atol=1e-12)
    assert net2.min_separation() > net2.epsilon
    rng = np.random.default_rng(5)
    Y = rng.standard_normal((5000, 2))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    assert net2.distance_to_net(Y).max() <= net2.epsilon


def test_three_dimensional_net():
    net = sphere_net(3, 0.4, rng=2, validation_samples=10_000)
    assert net.min_separation() > 0.4
    assert len(net) <= net.cardinality_bound


def test_net_json_roundtrip(net2):
    back = SphereNet.from_dict(json.loads(json.dumps(net2.to_dict())))
    np.testing.assert_array_equal(back.points, net2.points)
    assert back.epsilon == net2.epsilon and back.covering_radius == net2.covering_radius


def test_net_budget_error():
    with pytest.raises(RuntimeError):
        sphere_net(3, 0.05, rng=0, max_points=50, validation_samples=100)


def test_order_one_atoms_are_the_net():
    net = sphere_net(2, 0.3, rng=3, validation_samples=5000)
    atoms = tensor_atoms(net, 1)
    assert atoms.cardinality == len(net)


def test_log_cardinality_bound(atoms22, net2):
    assert atoms22.log_cardinality == pytest.approx(2 * math.log(len(net2)))
    assert atoms22.log_cardinality <= 3 * 2 * 2 * (1 + math.log(2))


def test_window_is_enforced(net2):
    assert admissible_epsilon(1 / 6, 2) and not admissible_epsilon(1 / 6, 3)
    with pytest.raises(ValueError):
        tensor_atoms(net2, 3)


def test_rank_one_on_net_is_recovered(net2, atoms22):
    z1, z2 = net2.points[3], net2.points[7]
    xi = 2.0 * np.outer(z1, z2)
    bound = net_dual_norm(xi, atoms22)
    assert bound.certified
    assert bound.value >= np.linalg.norm(xi) - 1e-12
    assert bound.value / math.e == pytest.approx(2.0)


def test_order_one_dual_norm(rng):
    net = sphere_net(2, 0.3, rng=3, validation_samples=5000)
    atoms = tensor_atoms(net, 1)
    xi = rng.standard_normal(2)
    raw = net_dual_norm(xi, atoms, expand=False).value
    assert raw == pytest.approx(np.max(np.abs(net.points @ xi)))
    assert raw <= np.linalg.norm(xi) + 1e-12
    on_net = 3 * net.points[0]
    assert net_dual_norm(on_net, atoms, expand=False).value == pytest.approx(3.0)


def test_net_bound_dominates_injective_norm(atoms22, rng):
    for _ in range(20):
        xi = rng.standard_normal((2, 2))
        assert net_dual_norm(xi, atoms22).value >= np.linalg.norm(xi, 2) - 1e-12


def test_enumerate_matches_alternate(atoms22):
    rng = np.random.default_rng(11)
    for _ in range(100):
        xi = rng.standard_normal(4)
        a = net_dual_norm(xi, atoms22, mode="enumerate").value
        b = net_dual_norm(xi, atoms22, mode="alternate", restarts=50, rng=rng)
        assert not b.certified
        assert b.value == pytest.approx(a, abs=1e-6)


def test_refined_net_never_decreases(net2, rng):
    extra = rng.standard_normal((10, 2))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    finer = SphereNet(np.vstack([net2.points, extra]), net2.epsilon)
    coarse_atoms, fine_atoms = tensor_atoms(net2, 2), tensor_atoms(finer, 2)
    for _ in range(20):
        xi = rng.standard_normal(4)
        assert net_dual_norm(xi, fine_atoms).value >= net_dual_norm(xi, coarse_atoms).value


@given(st.integers(0, 2**31))
def test_rounding_reconstructs_with_bounded_mass(seed):
    net = sphere_net(2, 1 / 6, rng=0, validation_samples=20_000)
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(2)
    y *= rng.uniform(0, 1) / np.linalg.norm(y)
    r = round_to_net(y, net)
    recon = r.coefficients @ net.points[r.indices] if len(r.indices) else np.zeros(2)
    np.testing.assert_allclose(recon, y, atol=1e-12)
    assert r.mass <= np.linalg.norm(y) / (1 - net.epsilon) + 1e-12


def test_rank_one_rounding_mass(net2, rng):
    for _ in range(20):
        factors = [rng.standard_normal(2) for _ in range(2)]
        factors = [f / np.linalg.norm(f) for f in factors]
        _, mass = round_rank_one(factors, net2)
        assert mass <= (1 + 3 * net2.epsilon) ** 2 <= math.e


def test_best_rank_one_on_rank_one_tensor(rng):
    factors = [crandn(rng, 3) for _ in range(3)]
    T = rank_one_tensor(factors)
    value, found = best_rank_one(T, rng=0)
    assert value == pytest.approx(np.linalg.norm(T), rel=1e-10)
    overlap = abs(np.vdot(rank_one_tensor(found), T))
    assert overlap == pytest.approx(np.linalg.norm(T), rel=1e-10)


def test_matrix_case_reduces_to_spectral_norm(rng):
    M = crandn(rng, 4, 3)
    assert best_rank_one(M, rng=0)[0] == pytest.approx(np.linalg.norm(M, 2), rel=1e-9)


def test_deflation_reconstructs(rng):
    T = crandn(rng, 2, 2, 2)
    coeffs, residual = greedy_rank_one_deflation(T)
    assert np.linalg.norm(residual) <= 1e-12 * np.linalg.norm(T)
    # triangle inequality on T = sum c_i u_i + residual
    assert np.sum(np.abs(coeffs)) >= np.linalg.norm(T) - 1e-12


def test_tail_threshold_formula():
    assert gaussian_dual_norm_bound(2, 2, 0.1) > gaussian_dual_norm_bound(2, 2, 0.5)


def test_tail_experiment_order_one_oracle(rng):
    net = sphere_net(2, 0.3, rng=3, validation_samples=5000)
    atoms = tensor_atoms(net, 1)
    res = gaussian_dual_tail_experiment(2, 1, 200, 0.3, rng=np.random.default_rng(8), atoms=atoms)
    # same draws, coded directly as a maximum of correlated Gaussians
    g = np.random.default_rng(8).standard_normal((200, 2))
    direct = np.max(np.abs(g @ net.points.T), axis=1)
    np.testing.assert_allclose(res.values / math.e, direct, rtol=1e-12)
    assert res.deflated_rate == pytest.approx(np.mean(direct >= res.threshold))


def test_tail_rates_ordered(atoms22):
    res = gaussian_dual_tail_experiment(2, 2, 100, 0.5, rng=1, atoms=atoms22)
    assert res.deflated_rate <= res.raw_rate
    assert res.sigma == pytest.approx(math.sqrt(0.25 / 100))


def test_moment_constants_are_finite(atoms22):
    out = moment_constants(2, 2, [1, 2, 4], 100, rng=0, atoms=atoms22)
    assert set(out) == {1, 2, 4}
    assert all(0 < v < 10 for v in out.values())
