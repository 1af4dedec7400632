"""Invariant suites and brute-force reference oracles.

The reference oracles here deliberately avoid the Smith/Hermite machinery in
``groups``: they enumerate elements and test the defining conditions, so
agreement is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .centralized import qaa_phase, run_exact_trials
from .corpus import all_subgroups, exhaustive_instances, groups_up_to
from .groups import (
    GroupSpec,
    Subgroup,
    chain_length,
    direct_sum_subgroups,
    orthogonal,
    project_subgroup,
    rank,
    sylow_decompose,
    trivial,
)
from .normal_forms import factorize
from .oracle import build_hidden_function, verify_hiding
from .qudit_sim import (
    RegisterLayout,
    apply_A,
    apply_oracle,
    apply_phase_r0,
    apply_phase_ra,
    apply_Q,
    apply_qft,
    init_basis,
    marginal_first,
    random_state,
)


@dataclass
class PropertyResult:
    name: str
    checked: int = 0
    failures: int = 0
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.checked > 0 and self.failures == 0

    def record(self, passed: bool, context=None) -> None:
        self.checked += 1
        if not passed:
            self.failures += 1
            if len(self.examples) < 5:
                self.examples.append(context)

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.checked - self.failures}/{self.checked}"


# -- brute-force references ---------------------------------------------------


def brute_elements(sub: Subgroup) -> set[tuple[int, ...]]:
    """Closure of the generators under addition, by breadth-first search."""
    group = sub.group
    gens = [g for g in sub.generator_coords() if any(g)]
    zero = group.zero().coords
    seen = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = group.reduce(a + b for a, b in zip(x, g))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def brute_orthogonal(sub: Subgroup) -> set[tuple[int, ...]]:
    """``{g : sum_j k_j g_j / N_j = 0 mod 1}`` for every ``k`` in the subgroup.

    Both sides are scaled by ``L = lcm(N_j)`` so the test is exact integer arithmetic.
    """
    group = sub.group
    if not group.k:
        return {()}
    ks = np.array(sorted(brute_elements(sub)), dtype=np.int64)
    lcm = group.exponent
    w = np.array([lcm // n for n in group.moduli], dtype=np.int64)
    gs = group.coords_array
    ok = ~((ks * w) @ gs.T % lcm).any(axis=0)
    return {tuple(int(v) for v in gs[i]) for i in np.flatnonzero(ok)}


def brute_rank(elements: set[tuple[int, ...]], group: GroupSpec) -> int:
    """``max_p log_p |{x : p x = 0}|`` over the element set of a subgroup."""
    best = 0
    for p in set(group.primes):
        torsion = sum(1 for x in elements if not any((p * v) % n for v, n in zip(x, group.moduli)))
        best = max(best, round(math.log(torsion, p)))
    return best


def brute_len(order: int) -> int:
    return sum(factorize(order).values()) if order > 1 else 0


def character_sum(sub: Subgroup, m: tuple[int, ...]) -> complex:
    """``sum_{k in sub} exp(-2 pi i <k, m>)``."""
    group = sub.group
    ks = np.array(sorted(brute_elements(sub)), dtype=np.int64).reshape(-1, group.k)
    lcm = group.exponent
    w = np.array([lcm // n for n in group.moduli], dtype=np.int64)
    phase = (ks * (np.asarray(m) * w)).sum(axis=1) % lcm
    return complex(np.exp(-2j * np.pi * phase / lcm).sum())


# -- suites -------------------------------------------------------------------


def group_suite(max_order: int = 64, extra: Iterable[GroupSpec] = ()) -> list[PropertyResult]:
    names = [
        "orthogonal matches brute force",
        "double orthogonal is K",
        "|K| |K^perp| = |G|",
        "len additivity",
        "rank subadditivity",
        "rank(K^perp) <= rank(G)",
        "rank matches p-torsion count",
        "len(G) >= rank(G)",
        "CRT round trip",
        "orthogonal decomposition",
        "span closure matches order",
    ]
    res = {n: PropertyResult(n) for n in names}
    extra = tuple(extra)
    for g in list(groups_up_to(max_order)) + list(extra):
        res["len(G) >= rank(G)"].record(chain_length(g) >= rank(g), g)
        for k in all_subgroups(g):
            ctx = (g.moduli, k.to_json())
            kp = orthogonal(k)
            elems = brute_elements(k)
            res["span closure matches order"].record(len(elems) == k.order, ctx)
            if g.order <= 64:
                res["orthogonal matches brute force"].record(set(kp.iter_coords()) == brute_orthogonal(k), ctx)
                res["rank matches p-torsion count"].record(rank(k) == brute_rank(elems, g), ctx)
            res["double orthogonal is K"].record(orthogonal(kp) == k, ctx)
            res["|K| |K^perp| = |G|"].record(k.order * kp.order == g.order, ctx)
            res["len additivity"].record(chain_length(g) == chain_length(k) + chain_length(kp), ctx)
            res["rank subadditivity"].record(rank(g) <= rank(k) + rank(kp), ctx)
            res["rank(K^perp) <= rank(G)"].record(rank(kp) <= rank(g), ctx)
            m = len(sylow_decompose(g))
            parts = [project_subgroup(k, i) for i in range(m)]
            res["CRT round trip"].record(direct_sum_subgroups(g, parts) == k, ctx)
            res["orthogonal decomposition"].record(
                direct_sum_subgroups(g, [orthogonal(p) for p in parts]) == kp, ctx
            )
    return list(res.values())


def character_sum_suite(max_order: int = 64) -> PropertyResult:
    """Character sums over ``K_i`` vanish off ``K_i^perp``."""
    res = PropertyResult("character sums vanish off K_i^perp")
    seen = set()
    for g in groups_up_to(max_order):
        for comp in sylow_decompose(g):
            gi = comp.group
            if gi in seen:
                continue
            seen.add(gi)
            for ki in all_subgroups(gi):
                perp = orthogonal(ki)
                ks = np.array(sorted(brute_elements(ki)), dtype=np.int64).reshape(-1, gi.k)
                lcm = gi.exponent
                w = np.array([lcm // n for n in gi.moduli], dtype=np.int64)
                ms = gi.coords_array
                phase = (ks @ (ms * w).T) % lcm
                sums = np.abs(np.exp(-2j * np.pi * phase / lcm).sum(axis=0))
                outside = ~perp.membership_mask()
                worst = float(sums[outside].max()) if outside.any() else 0.0
                res.record(worst <= 1e-10, (gi.moduli, ki.to_json(), worst))
    return res


def hiding_suite(max_order: int = 64) -> list[PropertyResult]:
    whole_fn = PropertyResult("hidden function hides K")
    sub_fn = PropertyResult("restriction hides K_i")
    for n, (g, k) in enumerate(exhaustive_instances(max_order)):
        o = build_hidden_function(g, k, n)
        whole_fn.record(verify_hiding(o, k), (g.moduli, k.to_json()))
        for i in range(len(sylow_decompose(g))):
            oi = o.subfunction(i)
            sub_fn.record(verify_hiding(oi, project_subgroup(k, i)), (g.moduli, k.to_json(), i))
    return [whole_fn, sub_fn]


def sim_suite(max_order: int = 64, seed: int = 0, states: int = 20) -> list[PropertyResult]:
    """Unitarity on random states, post-A support and post-Q elimination."""
    rng = np.random.default_rng(seed)
    unit = PropertyResult("operators preserve norm")
    support = PropertyResult("post-A marginal uniform on K^perp")
    elim = PropertyResult("post-Q mass on span eliminated")
    groups = [g for g in groups_up_to(min(max_order, 24)) if g.order > 1]
    for g in groups:
        subs = all_subgroups(g)
        k = subs[len(subs) // 2]
        o = build_hidden_function(g, k, 1)
        layout = RegisterLayout.for_groups(g, g)
        params = qaa_phase(1 - k.order / g.order) if k.order * 2 <= g.order else qaa_phase(1.0)
        ops: list[Callable] = [
            lambda s: apply_qft(s, 0),
            lambda s: apply_qft(s, 0, inverse=True),
            lambda s: apply_oracle(s, o),
            lambda s: apply_oracle(s, o, inverse=True),
            lambda s: apply_phase_r0(s, 0.7),
            lambda s: apply_phase_ra(s, 0.7, k),
            lambda s: apply_A(s, o),
            lambda s: apply_Q(s, o, params, trivial(g)),
        ]
        for _ in range(states):
            s = random_state(layout, rng)
            for op in ops:
                unit.record(abs(op(s).norm() - 1.0) <= 1e-12, g.moduli)
    for g, k in exhaustive_instances(max_order):
        o = build_hidden_function(g, k, 2)
        p = marginal_first(apply_A(init_basis(RegisterLayout.for_groups(g, g)), o))
        mask = orthogonal(k).membership_mask()
        dev = max(float(np.abs(p[mask] - k.order / g.order).max()), float(p[~mask].sum()) if (~mask).any() else 0.0)
        support.record(dev <= 1e-10, (g.moduli, k.to_json(), dev))
        worst = [0.0]

        def watch(trial, trace, marginal):
            worst[0] = max(worst[0], trace.bad_mass)

        run_exact_trials(g, [o.fork() for _ in range(3)], k.order, [np.random.default_rng(t) for t in range(3)], watch)
        elim.record(worst[0] <= 1e-10, (g.moduli, k.to_json(), worst[0]))
    return [unit, support, elim]


def run_scope(scope: str, max_order: int) -> list[PropertyResult]:
    if scope == "group":
        return group_suite(max_order) + [character_sum_suite(max_order)] + hiding_suite(max_order)
    if scope == "sim":
        return sim_suite(max_order)
    if scope == "all":
        return run_scope("group", max_order) + run_scope("sim", max_order)
    raise ValueError(f"unknown scope {scope!r}")


def iter_failures(results: Iterable[PropertyResult]) -> Iterator[PropertyResult]:
    return (r for r in results if not r.ok)
