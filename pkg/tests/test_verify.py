import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cilwalk as cw
from cilwalk.engine import PopulationTrace
from cilwalk.verify import (
    BoundReport,
    DriftConstants,
    check_boundedness,
    check_drift,
    check_iteration_rate,
    check_peak,
    iteration_rate_bound,
    peak_bound,
    peak_envelope,
)


def complete_setup(n, zeta=1.0):
    g = cw.generate_topology("complete", n, seed=0)
    P = cw.metropolis_hastings(g)
    return g, P, cw.AdversaryConfig((1,), zeta)


@settings(max_examples=60, deadline=None)
@given(
    d=st.integers(1, 20),
    c=st.floats(1e-4, 1.0),
    zeta=st.floats(0.01, 1.0),
    n=st.integers(2, 500),
    eps=st.floats(1e-6, 100.0),
)
def test_drift_constants_ordering(d, c, zeta, n, eps):
    consts = DriftConstants(d=d, c=c, zeta=zeta, n_nodes=n, epsilon=eps)
    assert consts.b < consts.B
    assert consts.B > 0


def test_drift_constants_from_chain():
    g, P, adv = complete_setup(100)
    consts = DriftConstants.from_chain(cw.augment(P, adv))
    assert consts.d == 1
    assert consts.c == pytest.approx(0.01)
    assert consts.B == pytest.approx((99 + 1.0) / 0.01)


def test_check_drift_passes_on_protocol_traces():
    g, P, adv = complete_setup(20)
    cfg = cw.CilConfig(1, 1.0, 1, horizon=4000, seed=10)
    traces = cw.replicate(g, P, adv, cfg, n_seeds=20)
    consts = DriftConstants.from_chain(cw.augment(P, adv))
    rep = check_drift(traces, consts)
    assert rep.passed, rep.details


def test_zero_population_never_drifts_down():
    g, P, adv = complete_setup(10)
    cfg = cw.CilConfig(6, 1.0, 1, horizon=20_000, seed=3)
    tr = cw.run(g, P, adv, cfg)
    z = tr.z_series
    zero = np.nonzero(z[:-1] == 0)[0]
    assert zero.size > 0
    assert np.all(z[zero + 1] >= 0)  # creations only from extinction


def test_check_peak_holds_and_z0_dominant_case():
    g, P, adv = complete_setup(20)
    cfg = cw.CilConfig(1, 1.0, 1, horizon=1500, seed=6)
    traces = cw.replicate(g, P, adv, cfg, n_seeds=10)
    peak, env = check_peak(traces, 20, 1.0, 1.0, 1)
    assert peak.passed and env.passed
    assert peak.theoretical == pytest.approx(400.0)

    # z0 above the fixed point: the bound reduces to z0 and the envelope
    # is nonincreasing in t
    z0 = 50
    envelope = peak_envelope(np.arange(100), 10, 0.1, 1.0, z0)
    assert peak_bound(10, 0.1, 1.0, z0) == z0
    assert np.all(np.diff(envelope) <= 1e-12)
    cfg2 = cw.CilConfig(1, 0.1, z0, horizon=800, seed=8)
    g2, P2, adv2 = complete_setup(10)
    traces2 = cw.replicate(g2, P2, adv2, cfg2, n_seeds=10)
    peak2, env2 = check_peak(traces2, 10, 0.1, 1.0, z0)
    assert peak2.passed, (peak2.empirical, peak2.theoretical)
    assert peak2.theoretical == z0


def test_check_peak_rejects_nonunit_thresholds():
    g, P, adv = complete_setup(10)
    cfg = cw.CilConfig(2, 1.0, 1, horizon=100, seed=0)
    traces = cw.replicate(g, P, adv, cfg, n_seeds=2)
    with pytest.raises(ValueError):
        check_peak(traces, 10, 1.0, 1.0, 1)


def test_iteration_rate_formula_values():
    assert iteration_rate_bound(100, 1.0, 10, 1.0) == pytest.approx(100 / 110)
    assert iteration_rate_bound(100, 1.0, 1, 1.0) == pytest.approx(100 / 101)
    assert iteration_rate_bound(50, 0.5, 1, 1.0) == pytest.approx(100 / 101)


def test_check_iteration_rate_on_runs():
    g, P, adv = complete_setup(50)
    cfg = cw.CilConfig(5, 1.0, 3, horizon=40_000, seed=1)
    traces = cw.replicate(g, P, adv, cfg, n_seeds=3)
    dom = cw.run_dominated_single(
        g, P, adv, cw.CilConfig(5, 1.0, 1, horizon=600_000, seed=2)
    )
    cil_rep, dom_rep = check_iteration_rate(
        traces, dom, 50, 1.0, 5, 1.0, rate_tolerance=0.01
    )
    assert cil_rep.passed, cil_rep.details
    assert dom_rep.passed, dom_rep.details
    assert dom_rep.details["cycles"] >= 10_000


def _fake_trace(z):
    z = np.asarray(z, dtype=np.int64)
    return PopulationTrace(
        horizon=len(z),
        n_nodes=5,
        pacman_nodes=(1,),
        min_threshold=1,
        z_series=z,
        creations=np.zeros(len(z), dtype=np.int32),
        terminations=np.zeros(len(z), dtype=np.int32),
        parent=np.array([-1]),
        birth=np.array([0]),
        death=np.array([-1]),
        birth_node=np.array([2]),
        death_node=np.array([-1]),
        pacman_idle=np.zeros((0, 2), dtype=np.int64),
    )


def test_boundedness_flags_growth_and_envelope():
    stable = _fake_trace([3, 9, 5, 6, 7, 4, 5, 6, 3, 2])
    rep = check_boundedness([stable])
    assert rep.passed
    growing = _fake_trace(np.arange(10))
    rep2 = check_boundedness([growing])
    assert not rep2.passed
    capped = check_boundedness([stable], envelope=0.5, envelope_factor=10.0)
    assert not capped.passed  # max 9 exceeds 10 * 0.5


def test_boundedness_on_real_traces():
    # start above the stationary range so the running max is set during
    # the initial relaxation, not by late stationary excursions
    g, P, adv = complete_setup(30)
    cfg = cw.CilConfig(5, 1.0, 60, horizon=20_000, seed=4)
    traces = cw.replicate(g, P, adv, cfg, n_seeds=5)
    env = peak_bound(30, 1.0, 1.0, 60)
    rep = check_boundedness(traces, env)
    assert rep.passed, rep.details


def test_bound_report_serializes():
    rep = BoundReport("x", 1.0, 0.5, True, 0.1, {"arr": np.arange(3), "v": np.float64(2)})
    payload = json.dumps(rep.to_dict())
    back = json.loads(payload)
    assert back["name"] == "x"
    assert back["details"]["arr"] == [0, 1, 2]
