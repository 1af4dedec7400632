import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahsp.centralized import (
    order_mod,
    prime_step,
    qaa_phase,
    run_exact,
    run_exact_trials,
    run_standard,
    run_standard_trials,
)
from ahsp.corpus import all_subgroups, groups_up_to
from ahsp.groups import GroupElement, GroupError, GroupSpec, chain_length, span, trivial, whole
from ahsp.oracle import build_hidden_function

Z43 = GroupSpec((4, 3))
Z22 = GroupSpec((2, 2))


def test_qaa_phase_examples():
    assert abs(qaa_phase(1.0).phi - math.pi / 3) < 1e-15
    assert abs(qaa_phase(0.5).phi - math.pi / 2) < 1e-15
    assert abs(qaa_phase(0.75).phi - 1.2309594173407747) < 1e-12
    with pytest.raises(GroupError):
        qaa_phase(0.3)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 1.0))
def test_qaa_phase_cancels_bad_amplitude(b):
    # two-level model: psi = sqrt(1-b)|marked> + sqrt(b)|rest>, Q = (I + (w-1)|psi><psi|) R_A
    phi = qaa_phase(b).phi
    w = np.exp(1j * phi)
    assert abs(1 + (w - 1) * (1 - b + w * b)) < 1e-12
    assert math.pi / 3 - 1e-12 <= phi <= math.pi / 2 + 1e-12


def test_run_exact_example_100_of_100():
    k = span(Z43, [(2, 0)])
    o = build_hidden_function(Z43, k, 0)
    for seed in range(100):
        r = run_exact(Z43, o.fork(), k.order, np.random.default_rng(seed))
        assert r.recovered == k and r.success
        assert r.iterations == 2 and r.oracle_queries == 6


def test_run_exact_k_is_g():
    o = build_hidden_function(Z43, whole(Z43), 0)
    r = run_exact(Z43, o, Z43.order, np.random.default_rng(0))
    assert r.iterations == 0 and r.oracle_queries == 0 and r.recovered == whole(Z43)


def test_run_exact_trivial_k():
    o = build_hidden_function(Z22, trivial(Z22), 0)
    r = run_exact(Z22, o, 1, np.random.default_rng(0))
    assert r.iterations == 2 and r.oracle_queries == 6 and r.recovered == trivial(Z22)


def test_batched_runs_equal_single_runs():
    g = GroupSpec((8, 2, 3))
    k = span(g, [(4, 0, 0)])
    o = build_hidden_function(g, k, 1)
    single = [run_exact(g, o.fork(), k.order, np.random.default_rng(s)) for s in range(12)]
    batch = run_exact_trials(g, [o.fork() for _ in range(12)], k.order, [np.random.default_rng(s) for s in range(12)])
    for a, b in zip(single, batch):
        assert [m.coords for m in a.measured] == [m.coords for m in b.measured]
        assert a.oracle_queries == b.oracle_queries and a.recovered == b.recovered


def test_exact_steps_are_clean():
    g = GroupSpec((2, 2, 2, 3))
    k = span(g, [(1, 1, 0, 0)])
    o = build_hidden_function(g, k, 3)
    r = run_exact(g, o, k.order, np.random.default_rng(5))
    assert len(r.steps) == chain_length(g) - chain_length(k)
    orders = [s.span_order for s in r.steps]
    assert orders == sorted(orders) and orders[0] == 1
    for s in r.steps:
        assert s.bad_mass <= 1e-10 and s.good_uniform_dev <= 1e-9
        assert not s.span.contains(s.measured.coords)


def test_greedy_schedule_never_exceeds_chain():
    for g in groups_up_to(16):
        for n, k in enumerate(all_subgroups(g)):
            o = build_hidden_function(g, k, n)
            h = chain_length(g) - chain_length(k)
            r = run_exact(g, o, k.order, np.random.default_rng(n), schedule="greedy")
            assert r.success and r.iterations <= h and r.oracle_queries == 3 * r.iterations


def test_exact_rejects_bad_order():
    o = build_hidden_function(Z43, trivial(Z43), 0)
    with pytest.raises(GroupError):
        run_exact(Z43, o, 5, np.random.default_rng(0))
    with pytest.raises(ValueError):
        run_exact(Z43, o, 1, np.random.default_rng(0), schedule="nope")


def test_order_mod_and_prime_step():
    g = GroupSpec((8, 9))
    t = GroupElement((1, 1), g)
    assert order_mod(t, trivial(g)) == 72
    assert order_mod(t, span(g, [(2, 0)])) == 18
    a = prime_step(t, trivial(g))
    assert order_mod(a, trivial(g)) == 2
    assert order_mod(GroupElement((2, 0), g), span(g, [(2, 0)])) == 1


def test_run_standard_query_count_example():
    k = span(Z22, [(1, 1)])
    o = build_hidden_function(Z22, k, 0)
    r = run_standard(Z22, o, 0.1, np.random.default_rng(0))
    assert r.iterations == 6 and r.oracle_queries == 6
    assert all(m.coords in {(0, 0), (1, 1)} for m in r.measured)


def test_run_standard_k_is_g():
    o = build_hidden_function(Z43, whole(Z43), 0)
    r = run_standard(Z43, o, 0.25, np.random.default_rng(0))
    assert all(m.is_zero() for m in r.measured) and r.recovered == whole(Z43)


def test_run_standard_success_rate():
    rng = np.random.default_rng(123)
    eps, n = 0.1, 500
    subs = all_subgroups(Z43)
    k = subs[int(rng.integers(len(subs)))]
    o = build_hidden_function(Z43, k, 0)
    runs = run_standard_trials(Z43, [o.fork() for _ in range(n)], eps, [np.random.default_rng(s) for s in range(n)])
    rate = np.mean([r.success for r in runs])
    assert rate >= 1 - eps - 3 * math.sqrt(eps * (1 - eps) / n)
    assert all(r.oracle_queries == r.iterations for r in runs)


def test_report_json():
    k = span(Z43, [(2, 0)])
    r = run_exact(Z43, build_hidden_function(Z43, k, 0), k.order, np.random.default_rng(0))
    data = r.to_json()
    assert data["oracle_queries"] == 6 and data["recovered_order"] == 2 and data["success"] is True
