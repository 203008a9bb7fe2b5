import numpy as np
import pytest

from cilwalk.adversary import AdversaryConfig, augment
from cilwalk.graph import GraphSpec, generate_topology, metropolis_hastings
from cilwalk.spectral import (
    chain_stationary,
    qsd,
    spectral_gap,
    total_variation,
    yaglom_oracle,
)


def make_chain(tag, n, zeta, seed=0, **kwargs):
    g = generate_topology(tag, n, seed=seed, **kwargs)
    P = metropolis_hastings(g)
    return augment(P, AdversaryConfig((1,), zeta))


def path3_chain(zeta=1.0):
    g = GraphSpec(3, ((1, 2), (2, 3)), "path", np.full(3, 1 / 3))
    P = metropolis_hastings(g)
    return augment(P, AdversaryConfig((1,), zeta))


def test_complete_100_uniform_qsd():
    chain = make_chain("complete", 100, 1.0)
    res = qsd(chain)
    assert np.max(np.abs(res.nu - 1.0 / 99)) <= 1e-12
    assert res.alpha == pytest.approx(99 / 100, abs=1e-12)
    assert res.pi_chain[0] == 0.0  # merged adversary carries no mass
    assert res.residual <= 1e-10


def test_single_benign_node_point_mass():
    g = GraphSpec(2, ((1, 2),), "pair", np.array([0.5, 0.5]))
    P = metropolis_hastings(g)
    res = qsd(augment(P, AdversaryConfig((1,), 1.0)))
    assert res.nu.shape == (1,)
    assert res.nu[0] == 1.0
    assert res.alpha == pytest.approx(0.5, abs=1e-14)
    assert res.spectral_gap == 1.0


def test_path3_closed_form_eigenpair():
    # Q = [[1/3, 1/3], [1/3, 2/3]]: alpha = (3 + sqrt5)/6 and the
    # occupancy ratio between the two benign nodes is the golden ratio.
    res = qsd(path3_chain())
    s5 = np.sqrt(5.0)
    assert res.alpha == pytest.approx((3 + s5) / 6, abs=1e-12)
    phi = (1 + s5) / 2
    expected = np.array([1.0, phi]) / (1.0 + phi)
    assert np.max(np.abs(res.nu - expected)) < 1e-11


def test_path3_matches_numpy_eig_oracle():
    chain = path3_chain()
    res = qsd(chain)
    w, vl = np.linalg.eig(chain.q_sub.T)
    i = int(np.argmax(w.real))
    vec = np.abs(vl[:, i].real)
    vec /= vec.sum()
    assert abs(res.alpha - w[i].real) < 1e-12
    assert np.max(np.abs(res.nu - vec)) < 1e-10


def test_yaglom_one_step_is_renormalized_row():
    chain = path3_chain()
    out = yaglom_oracle(chain, start=2, t=1)
    row = chain.q_sub[chain.transient_index(2)]
    assert np.allclose(out, row / row.sum(), atol=1e-15)


def test_yaglom_complete_uniform_after_two_steps():
    chain = make_chain("complete", 100, 1.0)
    out = yaglom_oracle(chain, start=5, t=2)
    assert np.max(np.abs(out - 1.0 / 99)) < 1e-14


def test_yaglom_converges_to_qsd_path3():
    chain = path3_chain()
    res = qsd(chain)
    out = yaglom_oracle(chain, start=3, t=200)
    assert total_variation(out, res.nu) <= 1e-8


@pytest.mark.parametrize("zeta", [1.0, 0.5, 0.1])
def test_yaglom_limit_start_independent_small_graphs(zeta):
    graphs = [
        path3_chain(zeta),
        make_chain("complete", 5, zeta),
        make_chain("ring", 6, zeta),
    ]
    for chain in graphs:
        res = qsd(chain)
        horizon = int(np.ceil(50.0 / res.spectral_gap))
        for start in chain.transient_states:
            tv = total_variation(yaglom_oracle(chain, start, horizon), res.nu)
            assert tv <= 1e-6
            # convergence is monotone past a burn-in
            t_half = max(horizon // 2, 1)
            tv_half = total_variation(
                yaglom_oracle(chain, start, t_half), res.nu
            )
            assert tv <= tv_half + 1e-12


def test_alpha_increases_as_zeta_decreases():
    alphas = []
    for zeta in (1.0, 0.9, 0.5, 0.1):
        res = qsd(make_chain("ring", 5, zeta))
        alphas.append(res.alpha)
        # independent oracle: dense eigensolver on the same block
        chain = make_chain("ring", 5, zeta)
        top = max(np.linalg.eigvals(chain.q_sub).real)
        assert res.alpha == pytest.approx(top, abs=1e-10)
    assert all(a < b for a, b in zip(alphas, alphas[1:]))


def test_p_chain_rows_and_complete_stationary():
    chain = make_chain("complete", 30, 1.0)
    res = qsd(chain)
    assert np.max(np.abs(res.p_chain.sum(axis=1) - 1.0)) <= 1e-12
    # constant row sums: normalization preserves the leading eigenvector
    w = chain_stationary(res.p_chain)
    assert total_variation(w, res.nu) <= 1e-10


def test_two_state_symmetric_stationary():
    p = np.array([[0.3, 0.7], [0.7, 0.3]])
    w = chain_stationary(p)
    assert np.allclose(w, 0.5, atol=1e-12)


def test_ring_stationary_vs_qsd_discrepancy_is_measurable():
    # Q has non-constant row sums on a ring, so the row-normalized chain's
    # stationary law differs from the survival-conditioned occupancy.
    chain = make_chain("ring", 5, 1.0)
    res = qsd(chain)
    w = chain_stationary(res.p_chain)
    assert np.max(np.abs(w @ res.p_chain - w)) < 1e-10
    assert total_variation(w, res.nu) > 1e-4


def test_spectral_gap_known_value():
    # two-state chain with eigenvalues {1, 1 - a - b}
    p = np.array([[0.9, 0.1], [0.2, 0.8]])
    gap = spectral_gap(p)
    assert gap == pytest.approx(1.0 - 0.7, abs=1e-9)
