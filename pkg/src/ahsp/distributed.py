"""Distributed solvers over the Sylow decomposition.

Node ``i`` holds the restriction ``f_i`` of the hidden function to the Sylow
component ``G_i`` and a local register ``H_{G_i} x H_G``. It finds
``K_i^perp`` on its own and sends it as a classical JSON message. The
orchestrator joins all nodes, forms ``K^perp`` as the direct sum of the
``K_i^perp`` and returns its orthogonal. There is no quantum channel.
"""

from __future__ import annotations

import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .centralized import RunReport, run_exact_trials, run_standard_trials
from .groups import (
    GroupError,
    GroupSpec,
    Subgroup,
    chain_length,
    direct_sum_subgroups,
    orthogonal,
    project_subgroup,
    sylow_decompose,
)
from .oracle import HiddenOracle
from .qudit_sim import IntegrityError


def thread_cap(default: int) -> int:
    """Worker count, capped by the ``AHSP_THREADS`` environment variable."""
    env = os.environ.get("AHSP_THREADS")
    if env:
        try:
            return max(1, min(default, int(env)))
        except ValueError:
            pass
    return max(1, default)


class ClassicalChannel:
    """Node-to-orchestrator link that only carries bytes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._inbox: dict[tuple[int, int], bytes] = {}
        self.messages = 0
        self.bytes = 0
        self.quantum_messages = 0

    def send(self, node: int, trial: int, payload: bytes) -> None:
        if not isinstance(payload, (bytes, bytearray)):
            raise TypeError(f"classical channel accepts bytes only, got {type(payload).__name__}")
        with self._lock:
            self._inbox[(node, trial)] = bytes(payload)
            self.messages += 1
            self.bytes += len(payload)

    def receive(self, node: int, trial: int) -> bytes:
        with self._lock:
            return self._inbox[(node, trial)]


def encode_subgroup(node: int, sub: Subgroup) -> bytes:
    return json.dumps({"node": node, "moduli": list(sub.group.moduli), "generators": sub.to_json()}).encode()


def decode_subgroup(payload: bytes, group: GroupSpec) -> tuple[int, Subgroup]:
    data = json.loads(payload)
    if tuple(data["moduli"]) != group.moduli:
        raise IntegrityError(f"message for {data['moduli']} does not match component {group}")
    return int(data["node"]), Subgroup.from_json(group, data["generators"])


@dataclass
class NodeReport:
    node_index: int
    local_orthogonal: Subgroup
    iterations: int
    local_queries: int
    seed: int
    state_dim: int = 0
    message_bytes: int = 0

    def to_json(self) -> dict:
        return {
            "node_index": self.node_index,
            "moduli": list(self.local_orthogonal.group.moduli),
            "local_orthogonal": self.local_orthogonal.to_json(),
            "iterations": self.iterations,
            "local_queries": self.local_queries,
            "seed": self.seed,
            "state_dim": self.state_dim,
            "message_bytes": self.message_bytes,
        }


@dataclass
class DistributedReport:
    node_reports: list[NodeReport]
    recovered: Subgroup
    max_node_queries: int
    total_queries: int
    classical_messages: int
    classical_bytes: int
    quantum_messages: int = 0
    success: bool | None = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "nodes": [n.to_json() for n in self.node_reports],
            "recovered": self.recovered.to_json(),
            "recovered_order": self.recovered.order,
            "max_node_queries": self.max_node_queries,
            "total_queries": self.total_queries,
            "classical_messages": self.classical_messages,
            "classical_bytes": self.classical_bytes,
            "quantum_messages": self.quantum_messages,
            "iterations": self.iterations,
            "success": self.success,
        }


def _node_report(i: int, group_i: GroupSpec, codomain: GroupSpec, run: RunReport, seed: int) -> NodeReport:
    return NodeReport(
        node_index=i,
        local_orthogonal=run.final_span,
        iterations=run.iterations,
        local_queries=run.oracle_queries,
        seed=int(seed),
        state_dim=group_i.order * codomain.order,
    )


def run_local_exact(
    group_i: GroupSpec, o_i: HiddenOracle, order_k_i: int, rng: np.random.Generator, seed: int = 0
) -> NodeReport:
    """``K_i^perp`` with certainty in ``len(G_i) - len(K_i)`` amplified iterations."""
    run = run_exact_trials(group_i, [o_i], order_k_i, [rng])[0]
    return _node_report(0, group_i, o_i.codomain, run, seed)


def run_local_standard(
    group_i: GroupSpec, o_i: HiddenOracle, epsilon_over_m, rng: np.random.Generator, seed: int = 0
) -> NodeReport:
    """Span of sampled elements of ``K_i^perp``, with failure probability at most ``epsilon_over_m``."""
    run = run_standard_trials(group_i, [o_i], epsilon_over_m, [rng])[0]
    return _node_report(0, group_i, o_i.codomain, run, seed)


def _orchestrate(
    group: GroupSpec,
    o: HiddenOracle,
    seeds: Sequence[Sequence[int]],
    node_task,
    parallel: bool,
) -> list[DistributedReport]:
    """Run every node on every trial, then aggregate each trial from its classical messages."""
    comps = sylow_decompose(group)
    m = len(comps)
    for s in seeds:
        if len(s) != m:
            raise GroupError(f"need {m} node seeds, got {len(s)}")
    trials = len(seeds)
    channel = ClassicalChannel()

    def work(i: int) -> list[NodeReport]:
        comp = comps[i]
        sub = o.subfunction(i)
        oracles = [sub.fork() for _ in range(trials)]
        rngs = [np.random.default_rng(int(s[i])) for s in seeds]
        runs = node_task(i, comp.group, oracles, rngs) if trials else []
        out = []
        for t, run in enumerate(runs):
            rep = _node_report(i, comp.group, o.codomain, run, seeds[t][i])
            payload = encode_subgroup(i, rep.local_orthogonal)
            rep.message_bytes = len(payload)
            channel.send(i, t, payload)
            out.append(rep)
        return out

    if parallel and m > 1:
        with ThreadPoolExecutor(max_workers=thread_cap(m)) as pool:
            per_node = list(pool.map(work, range(m)))
    else:
        per_node = [work(i) for i in range(m)]

    reports = []
    truth = o.sealed_subgroup()
    for t in range(trials):
        parts = []
        for i, comp in enumerate(comps):
            node, part = decode_subgroup(channel.receive(i, t), comp.group)
            if node != i:
                raise IntegrityError(f"message from node {node} filed under node {i}")
            parts.append(part)
        perp = direct_sum_subgroups(group, parts)
        recovered = orthogonal(perp)
        nodes = [per_node[i][t] for i in range(m)]
        queries = [n.local_queries for n in nodes]
        reports.append(
            DistributedReport(
                node_reports=nodes,
                recovered=recovered,
                max_node_queries=max(queries, default=0),
                total_queries=sum(queries),
                classical_messages=m,
                classical_bytes=sum(n.message_bytes for n in nodes),
                quantum_messages=channel.quantum_messages,
                success=recovered == truth,
                iterations=max((n.iterations for n in nodes), default=0),
            )
        )
    return reports


def node_orders(group: GroupSpec, order_k: int) -> list[int]:
    """``|K_i| = gcd(|K|, |G_i|)`` for every Sylow component."""
    return [math.gcd(order_k, c.group.order) for c in sylow_decompose(group)]


def run_edk_trials(
    group: GroupSpec, o: HiddenOracle, order_k: int, seeds: Sequence[Sequence[int]], parallel: bool = True
) -> list[DistributedReport]:
    """Independent exact distributed runs, one per row of per-node seeds."""
    if order_k < 1 or group.order % order_k:
        raise GroupError(f"|K| = {order_k} does not divide |G| = {group.order}")
    orders = node_orders(group, order_k)

    def task(i, group_i, oracles, rngs):
        return run_exact_trials(group_i, oracles, orders[i], rngs)

    return _orchestrate(group, o, seeds, task, parallel)


def run_edk(
    group: GroupSpec, o: HiddenOracle, order_k: int, node_seeds: Sequence[int], parallel: bool = True
) -> DistributedReport:
    """Exact distributed recovery of ``K`` from per-node amplified samplers."""
    return run_edk_trials(group, o, order_k, [node_seeds], parallel)[0]


def run_dk_probabilistic_trials(
    group: GroupSpec, o: HiddenOracle, epsilon: float, seeds: Sequence[Sequence[int]], parallel: bool = True
) -> list[DistributedReport]:
    if not 0 < epsilon < 1:
        raise GroupError(f"epsilon must lie in (0, 1), got {epsilon}")
    m = len(sylow_decompose(group))
    local_eps = Fraction(epsilon) / max(m, 1)

    def task(i, group_i, oracles, rngs):
        return run_standard_trials(group_i, oracles, local_eps, rngs)

    reports = _orchestrate(group, o, seeds, task, parallel)
    for r in reports:
        r.extra["epsilon_per_node"] = float(local_eps)
    return reports


def run_dk_probabilistic(
    group: GroupSpec, o: HiddenOracle, epsilon: float, node_seeds: Sequence[int], parallel: bool = True
) -> DistributedReport:
    """Per-node standard samplers at ``epsilon / m``; global success at least ``1 - epsilon``."""
    return run_dk_probabilistic_trials(group, o, epsilon, [node_seeds], parallel)[0]


def expected_node_queries(group: GroupSpec, k: Subgroup) -> list[int]:
    """``3 (len(G_i) - len(K_i))`` per node, from the true ``K``."""
    return [
        3 * (chain_length(c.group) - chain_length(project_subgroup(k, i)))
        for i, c in enumerate(sylow_decompose(group))
    ]
