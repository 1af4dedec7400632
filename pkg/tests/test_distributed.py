import json
from fractions import Fraction

import numpy as np
import pytest

from ahsp.distributed import (
    ClassicalChannel,
    decode_subgroup,
    encode_subgroup,
    expected_node_queries,
    node_orders,
    run_dk_probabilistic,
    run_dk_probabilistic_trials,
    run_edk,
    run_local_exact,
    run_local_standard,
    thread_cap,
)
from ahsp.groups import GroupSpec, orthogonal, project_subgroup, span, trivial, whole
from ahsp.oracle import build_hidden_function
from ahsp.qudit_sim import IntegrityError
from ahsp.seeds import node_seeds, trial_seed

Z43 = GroupSpec((4, 3))
K = span(Z43, [(2, 0)])


def test_local_exact_nodes():
    o = build_hidden_function(Z43, K, 0)
    n1 = run_local_exact(GroupSpec((4,)), o.subfunction(0), 2, np.random.default_rng(0))
    assert n1.iterations == 1 and n1.local_queries == 3
    assert set(n1.local_orthogonal.iter_coords()) == {(0,), (2,)}
    n2 = run_local_exact(GroupSpec((3,)), o.subfunction(1), 1, np.random.default_rng(0))
    assert n2.iterations == 1 and n2.local_queries == 3 and n2.local_orthogonal == whole(GroupSpec((3,)))
    g4 = GroupSpec((4,))
    full = build_hidden_function(g4, whole(g4), 0)
    n3 = run_local_exact(g4, full, 4, np.random.default_rng(0))
    assert n3.iterations == 0 and n3.local_queries == 0 and n3.local_orthogonal == trivial(g4)


def test_local_standard_measurements_in_perp():
    o = build_hidden_function(Z43, K, 0)
    node = run_local_standard(GroupSpec((4,)), o.subfunction(0), 0.05, np.random.default_rng(0))
    assert set(node.local_orthogonal.iter_coords()) <= {(0,), (2,)}
    const = build_hidden_function(Z43, whole(Z43), 0)
    node = run_local_standard(GroupSpec((4,)), const.subfunction(0), 0.05, np.random.default_rng(0))
    assert node.local_orthogonal == trivial(GroupSpec((4,)))


def test_edk_example():
    o = build_hidden_function(Z43, K, 0)
    r = run_edk(Z43, o, K.order, node_seeds(99, 2))
    assert r.success and r.recovered == K
    assert r.max_node_queries == 3 and r.total_queries == 6
    assert r.quantum_messages == 0 and r.classical_messages == 2
    assert r.classical_bytes == sum(n.message_bytes for n in r.node_reports) > 0
    assert expected_node_queries(Z43, K) == [3, 3]


def test_edk_k_is_g():
    r = run_edk(Z43, build_hidden_function(Z43, whole(Z43), 0), 12, node_seeds(1, 2))
    assert r.recovered == whole(Z43) and r.total_queries == 0


def test_edk_three_primes_100_runs():
    g = GroupSpec((8, 9, 5))
    rng = np.random.default_rng(4)
    for trial in range(100):
        gens = [g.from_index(int(i)) for i in rng.integers(g.order, size=2)]
        k = span(g, gens)
        o = build_hidden_function(g, k, trial)
        r = run_edk(g, o, k.order, node_seeds(trial_seed(5, trial), 3), parallel=trial % 2 == 0)
        assert r.success
        assert [n.local_queries for n in r.node_reports] == expected_node_queries(g, k)
        assert all(n.state_dim <= 9 * 360 for n in r.node_reports)


def test_node_orders():
    g = GroupSpec((8, 9, 5))
    assert node_orders(g, 12) == [4, 3, 1]


def test_dk_epsilon_split():
    o = build_hidden_function(Z43, K, 0)
    r = run_dk_probabilistic(Z43, o, 0.2, node_seeds(3, 2))
    assert r.extra["epsilon_per_node"] == pytest.approx(0.1)
    assert r.quantum_messages == 0


def test_dk_single_prime_matches_standard_bound():
    from ahsp.groups import iteration_bound

    g = GroupSpec((2, 2))
    o = build_hidden_function(g, span(g, [(1, 1)]), 0)
    r = run_dk_probabilistic(g, o, 0.1, node_seeds(0, 1))
    assert r.node_reports[0].iterations == iteration_bound(g, Fraction(1, 10))


def test_dk_success_rate():
    o = build_hidden_function(Z43, K, 0)
    n, eps = 500, 0.1
    runs = run_dk_probabilistic_trials(Z43, o, eps, [node_seeds(trial_seed(8, t), 2) for t in range(n)])
    rate = np.mean([r.success for r in runs])
    assert rate >= 1 - eps - 3 * np.sqrt(eps * (1 - eps) / n)


def test_channel_bytes_only():
    ch = ClassicalChannel()
    with pytest.raises(TypeError):
        ch.send(0, 0, {"not": "bytes"})
    ch.send(0, 0, b"abc")
    assert ch.receive(0, 0) == b"abc" and ch.bytes == 3 and ch.messages == 1 and ch.quantum_messages == 0


def test_message_round_trip_and_mismatch():
    g = GroupSpec((8, 2))
    sub = span(g, [(2, 1)])
    payload = encode_subgroup(1, sub)
    assert json.loads(payload)["node"] == 1
    assert decode_subgroup(payload, g) == (1, sub)
    with pytest.raises(IntegrityError):
        decode_subgroup(payload, GroupSpec((4, 2)))


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("AHSP_THREADS", "1")
    assert thread_cap(4) == 1
    monkeypatch.setenv("AHSP_THREADS", "junk")
    assert thread_cap(3) == 3
    monkeypatch.delenv("AHSP_THREADS")
    assert thread_cap(0) == 1


def test_recombination_identity():
    g = GroupSpec((4, 2, 9, 5))
    k = span(g, [(2, 0, 3, 0)])
    o = build_hidden_function(g, k, 0)
    r = run_edk(g, o, k.order, node_seeds(2, 3))
    for i, node in enumerate(r.node_reports):
        assert node.local_orthogonal == orthogonal(project_subgroup(k, i))
    assert r.recovered == k
