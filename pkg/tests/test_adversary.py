import numpy as np
import pytest

from cilwalk.adversary import (
    AdversaryConfig,
    augment,
    hitting_constants,
    load_chain_matrix,
    save_chain_matrix,
)
from cilwalk.graph import GraphSpec, generate_topology, metropolis_hastings


def k3_uniform():
    g = generate_topology("complete", 3, seed=0)
    return g, metropolis_hastings(g)


def path3():
    g = GraphSpec(3, ((1, 2), (2, 3)), "path", np.full(3, 1 / 3))
    return g, metropolis_hastings(g)


def test_k3_lethal_blocks():
    _, P = k3_uniform()
    chain = augment(P, AdversaryConfig((1,), 1.0))
    assert chain.transient_states == (2, 3)
    assert np.allclose(chain.q_sub, 1.0 / 3, atol=1e-15)
    assert np.allclose(chain.r_vec, 1.0 / 3, atol=1e-15)
    # merged case: full matrix is 3x3 with absorbing state last
    assert chain.p_prime.shape == (3, 3)
    assert chain.p_prime[2, 2] == 1.0


def test_k3_partial_termination_row():
    _, P = k3_uniform()
    chain = augment(P, AdversaryConfig((1,), 0.5))
    assert chain.transient_states == (1, 2, 3)
    i = chain.transient_index(1)
    assert chain.r_vec[i] == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(chain.q_sub[i], 1.0 / 6, atol=1e-15)
    # benign rows keep the original transition probabilities
    for u in (2, 3):
        j = chain.transient_index(u)
        assert chain.r_vec[j] == 0.0
        assert np.allclose(chain.q_sub[j], 1.0 / 3, atol=1e-15)


def test_complete_100_benign_row_sums():
    g = generate_topology("complete", 100, seed=0)
    P = metropolis_hastings(g)
    chain = augment(P, AdversaryConfig((1,), 1.0))
    assert np.allclose(chain.q_sub.sum(axis=1), 99 / 100, atol=1e-14)


def test_conservation_every_row():
    g = generate_topology("erdos_renyi", 40, seed=7, edge_probability=0.15)
    P = metropolis_hastings(g)
    for zeta in (1.0, 0.6, 0.05):
        chain = augment(P, AdversaryConfig((1,), zeta))
        cons = chain.q_sub.sum(axis=1) + chain.r_vec
        assert np.max(np.abs(cons - 1.0)) <= 1e-12


def test_lethal_limit_matches_benign_block():
    _, P = k3_uniform()
    lethal = augment(P, AdversaryConfig((1,), 1.0))
    eps = 1e-9
    near = augment(P, AdversaryConfig((1,), 1.0 - eps))
    # benign block of the near-lethal chain equals the lethal Q exactly
    bi = [near.transient_index(u) for u in (2, 3)]
    sub = near.q_sub[np.ix_(bi, bi)]
    assert np.array_equal(sub, lethal.q_sub)
    # the adversary's own surviving row carries O(eps) mass
    pi_row = near.q_sub[near.transient_index(1)]
    assert np.all(pi_row <= eps)


def test_augment_is_pure():
    _, P = k3_uniform()
    adv = AdversaryConfig((1,), 0.3)
    a, b = augment(P, adv), augment(P, adv)
    assert np.array_equal(a.p_prime, b.p_prime)
    assert np.array_equal(a.q_sub, b.q_sub)


def test_multi_pacman_lethal_merges_all():
    g = generate_topology("complete", 6, seed=0)
    P = metropolis_hastings(g)
    chain = augment(P, AdversaryConfig((1, 2), 1.0))
    assert chain.transient_states == (3, 4, 5, 6)
    assert np.allclose(chain.r_vec, 2.0 / 6, atol=1e-15)
    assert np.max(np.abs(chain.p_prime.sum(axis=1) - 1.0)) <= 1e-12


def test_multi_pacman_mixed_zetas():
    g = generate_topology("complete", 5, seed=0)
    P = metropolis_hastings(g)
    chain = augment(P, AdversaryConfig((1, 2), (1.0, 0.25)))
    assert chain.transient_states == (2, 3, 4, 5)
    i = chain.transient_index(2)
    # zeta-scaled row plus routed mass into the merged absorbing state
    assert chain.r_vec[i] == pytest.approx(0.25 + 0.75 * P[1, 0], abs=1e-15)
    cons = chain.q_sub.sum(axis=1) + chain.r_vec
    assert np.max(np.abs(cons - 1.0)) <= 1e-12


def test_zeta_validation():
    _, P = k3_uniform()
    with pytest.raises(ValueError):
        AdversaryConfig((1,), 0.0)
    with pytest.raises(ValueError):
        AdversaryConfig((1,), 1.5)
    with pytest.raises(ValueError):
        augment(P, AdversaryConfig((1, 2, 3), 1.0))


def test_hitting_constants_complete():
    g = generate_topology("complete", 100, seed=0)
    P = metropolis_hastings(g)
    d, c = hitting_constants(augment(P, AdversaryConfig((1,), 1.0)))
    assert d == 1
    assert c == pytest.approx(1.0 / 100, abs=1e-15)


def test_hitting_constants_ring5_bfs_distance():
    g = generate_topology("ring", 5, seed=0)
    P = metropolis_hastings(g)
    d, c = hitting_constants(augment(P, AdversaryConfig((1,), 1.0)))
    assert d == 2  # farthest benign node is two hops from the adversary


def test_hitting_constants_path3_matrix_square_oracle():
    _, P = path3()
    chain = augment(P, AdversaryConfig((1,), 1.0))
    d, c = hitting_constants(chain)
    # explicit 3x3 square of the augmented matrix
    P2 = chain.p_prime @ chain.p_prime
    i3 = chain.transient_index(3)
    assert d == 2
    assert c == pytest.approx(P2[i3, -1], abs=1e-15)
    assert c == pytest.approx(1.0 / 9, abs=1e-12)


def test_chain_matrix_round_trip(tmp_path):
    _, P = path3()
    chain = augment(P, AdversaryConfig((1,), 0.5))
    save_chain_matrix(chain, tmp_path / "m.txt")
    M = load_chain_matrix(tmp_path / "m.txt")
    assert np.array_equal(M, chain.p_prime)
