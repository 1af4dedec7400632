"""Deterministic classical solvers.

``classical_node_solve`` works inside one Sylow p-group ``G_i``. It walks the
coordinates in order. At coordinate ``l`` it probes ``w = p^j e_l`` for
``j = 0, 1, ...``. A collision ``f(x) = f(y)`` with ``x in W1`` and
``y in W2 + w`` means ``y - x`` is a hidden element whose ``l``-th coordinate
is ``p^j``. The first such ``j`` extends the known part of ``K``.

Between coordinates, a query-free cover step picks ``W1`` and ``W2`` so that
``W2 - W1`` meets every coset of the known part of ``K`` in the coordinates
seen so far. A hidden element with a given ``l``-th coordinate exists iff
such a collision exists. Repeated evaluations are free.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable

from .distributed import decode_subgroup, encode_subgroup, thread_cap
from .groups import (
    Coords,
    GroupError,
    GroupSpec,
    Subgroup,
    chain_length_of_order,
    direct_sum_subgroups,
    span,
    sylow_decompose,
    trivial,
)
from .oracle import MAX_VERIFY_ORDER, HiddenOracle

BRUTE_FORCE_LIMIT = MAX_VERIFY_ORDER


def brute_force_solve(group: GroupSpec, o: HiddenOracle) -> Subgroup:
    """``{x : f(x) = f(0)}`` from ``|G|`` queries."""
    if group.order > BRUTE_FORCE_LIMIT:
        raise GroupError(f"|G| = {group.order} too large for brute force (limit {BRUTE_FORCE_LIMIT})")
    if o.domain != group:
        raise GroupError(f"oracle domain {o.domain} differs from {group}")
    values = {x: o.query(x).coords for x in group.iter_coords()}
    base = values[group.zero().coords]
    return span(group, [x for x, v in values.items() if v == base])


class _MemoOracle:
    """Charges each distinct point once."""

    def __init__(self, o: HiddenOracle):
        self.o = o
        self.cache: dict[Coords, Coords] = {}
        self.trace: list[Coords] = []

    def __call__(self, x: Coords) -> Coords:
        hit = self.cache.get(x)
        if hit is None:
            hit = self.cache[x] = self.o.query(x).coords
            self.trace.append(x)
        return hit

    @property
    def queries(self) -> int:
        return len(self.cache)


@dataclass
class NodeTrace:
    """Per-coordinate record of the node solver."""

    l: int
    t: int
    found: Coords | None
    w1: int
    w2: int


def _prime_of(group: GroupSpec) -> int:
    primes = set(group.primes)
    if len(primes) != 1:
        raise GroupError(f"{group} is not a p-group")
    return primes.pop()


def _unit(group: GroupSpec, c: int, scale: int = 1) -> Coords:
    return tuple(scale % group.moduli[c] if i == c else 0 for i in range(group.k))


def _order_mod(group: GroupSpec, x: Coords, sub: Subgroup, p: int) -> int:
    d = 1
    y = x
    while not sub.contains(y):
        y = group.reduce(v * p for v in y)
        d *= p
    return d


def _cover_subgroup(group: GroupSpec, known: Subgroup, upto: int, target: int, p: int) -> Subgroup:
    """``H`` with ``known <= H <= P`` and ``[H : known]`` the first power of ``p`` reaching ``target``.

    ``P`` is spanned by the first ``upto`` unit vectors; each added element
    has order ``p`` modulo the current ``H``.
    """
    h = known
    c = 0
    while h.order < known.order * target and c < upto:
        e = _unit(group, c)
        d = _order_mod(group, e, h, p)
        if d == 1:
            c += 1
            continue
        h = h.extend(group.reduce(v * (d // p) for v in e))
    return h


def _transversal_in_prefix(group: GroupSpec, sub: Subgroup, upto: int) -> list[Coords]:
    """Canonical representatives of ``P / sub`` where ``P`` is the first ``upto`` coordinates."""
    ranges = [range(sub.pivots[c]) if c < upto else range(1) for c in range(group.k)]
    return [tuple(x) for x in product(*ranges)]


def _transversal_of(sub: Subgroup, inside: Subgroup) -> list[Coords]:
    """Canonical representatives of ``inside / sub`` (requires ``sub <= inside``)."""
    return sorted({sub.reduce(x) for x in inside.iter_coords()})


def find_pair(group: GroupSpec, known: Subgroup, upto: int, r: int) -> tuple[list[Coords], list[Coords]]:
    """Query-free cover: ``W2 - W1`` meets every coset of ``known`` in the first ``upto`` coordinates.

    ``W2`` represents ``H / known`` with ``[H : known]`` about
    ``sqrt(|P / known| * max(1, r))``, and ``W1 = -(transversal of H in P)``.
    """
    p = _prime_of(group)
    prefix = math.prod(group.moduli[:upto])
    quotient = prefix // known.order
    target = min(quotient, math.isqrt(quotient * max(1, r) - 1) + 1 if quotient > 1 else 1)
    h = _cover_subgroup(group, known, upto, target, p)
    w2 = _transversal_of(known, h)
    w1 = sorted(group.reduce(-v for v in x) for x in _transversal_in_prefix(group, h, upto))
    return w1, w2


def classical_node_solve(group_i: GroupSpec, o_i: HiddenOracle, trace: list | None = None) -> tuple[Subgroup, int]:
    """Exact ``K_i`` inside the p-group ``G_i``, and the number of distinct points queried."""
    if o_i.domain != group_i:
        raise GroupError(f"oracle domain {o_i.domain} differs from {group_i}")
    if group_i.k == 0:
        return trivial(group_i), 0
    p = _prime_of(group_i)
    f = _MemoOracle(o_i)
    known = trivial(group_i)
    w1: list[Coords] = [group_i.zero().coords]
    w2: list[Coords] = [group_i.zero().coords]
    r = 0
    for l in range(group_i.k):
        alpha = chain_length_of_order(group_i.moduli[l])
        t = alpha
        found = None
        labels = {}
        for x in w1:
            labels.setdefault(f(x), x)
        for j in range(alpha):
            w = _unit(group_i, l, p**j)
            hits = []
            for b in w2:
                y = group_i.reduce(u + v for u, v in zip(b, w))
                x = labels.get(f(y))
                if x is not None:
                    hits.append((x, y))
            if hits:
                x, y = min(hits)
                found = group_i.reduce(u - v for u, v in zip(y, x))
                known = known.extend(found)
                t = j
                if j == 0:
                    r += 1
                break
        if trace is not None:
            trace.append(NodeTrace(l, t, found, len(w1), len(w2)))
        if l + 1 < group_i.k:
            w1, w2 = find_pair(group_i, known, l + 1, r)
    return known, f.queries


@dataclass
class ClassicalReport:
    recovered: Subgroup
    queries_per_node: list[int]
    total_queries: int
    max_node_queries: int
    success: bool | None = None
    classical_bytes: int = 0
    node_orders: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "recovered": self.recovered.to_json(),
            "recovered_order": self.recovered.order,
            "queries_per_node": self.queries_per_node,
            "total_queries": self.total_queries,
            "max_node_queries": self.max_node_queries,
            "classical_bytes": self.classical_bytes,
            "success": self.success,
        }


def run_edck(group: GroupSpec, o: HiddenOracle, parallel: bool = True) -> ClassicalReport:
    """Solve every Sylow node independently and take the direct sum of the ``K_i``."""
    comps = sylow_decompose(group)

    def work(i: int) -> tuple[bytes, int]:
        k_i, q = classical_node_solve(comps[i].group, o.subfunction(i))
        return encode_subgroup(i, k_i), q

    if parallel and len(comps) > 1:
        with ThreadPoolExecutor(max_workers=thread_cap(len(comps))) as pool:
            results = list(pool.map(work, range(len(comps))))
    else:
        results = [work(i) for i in range(len(comps))]
    parts = [decode_subgroup(msg, c.group)[1] for (msg, _), c in zip(results, comps)]
    recovered = direct_sum_subgroups(group, parts)
    queries = [q for _, q in results]
    return ClassicalReport(
        recovered=recovered,
        queries_per_node=queries,
        total_queries=sum(queries),
        max_node_queries=max(queries, default=0),
        success=recovered == o.sealed_subgroup(),
        classical_bytes=sum(len(msg) for msg, _ in results),
        node_orders=[c.group.order for c in comps],
    )


def cited_cost(order_g: int, order_k: int) -> float:
    """``sqrt((|G|/|K|) log2 |K|) + log2 |K|``."""
    lk = math.log2(order_k) if order_k > 1 else 0.0
    return math.sqrt(order_g / order_k * lk) + lk


def cauchy_schwarz_check(parts: Iterable[tuple[int, int]]) -> tuple[float, float, bool]:
    """Compare the summed per-node cost with the cost on the whole group.

    ``parts`` lists ``(|G_i|, |K_i|)``. Returns ``(lhs, rhs, lhs <= rhs)``.
    The inequality is guaranteed when every ``K_i`` is proper.
    """
    parts = list(parts)
    lhs = sum(cited_cost(g, k) for g, k in parts)
    rhs = cited_cost(math.prod(g for g, _ in parts), math.prod(k for _, k in parts))
    return lhs, rhs, lhs <= rhs * (1 + 1e-12)
