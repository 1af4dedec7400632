"""Instance corpora: every Abelian group up to an order, and all its subgroups."""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Iterator

from .groups import GroupSpec, Subgroup, span, trivial
from .normal_forms import factorize


def _partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def groups_of_order(n: int) -> list[GroupSpec]:
    """One representative per isomorphism class, primes ascending, exponents descending."""
    per_prime = []
    for p, e in sorted(factorize(n).items()) if n > 1 else []:
        per_prime.append([tuple(p**a for a in lam) for lam in _partitions(e)])
    return [GroupSpec(sum(choice, ())) for choice in product(*per_prime)]


def groups_up_to(max_order: int, min_order: int = 1) -> list[GroupSpec]:
    return [g for n in range(min_order, max_order + 1) for g in groups_of_order(n)]


@lru_cache(maxsize=None)
def cyclic_subgroups(group: GroupSpec) -> tuple[Subgroup, ...]:
    return tuple(sorted({span(group, [c]) for c in group.iter_coords()}, key=_key))


def _key(s: Subgroup):
    return (s.order, s.basis)


@lru_cache(maxsize=None)
def all_subgroups(group: GroupSpec) -> tuple[Subgroup, ...]:
    """Every subgroup, found by closing joins of cyclic subgroups."""
    cyclics = cyclic_subgroups(group)
    seen = {trivial(group)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for a in frontier:
            for c in cyclics:
                if c.issubgroup(a):
                    continue
                j = a.join(c)
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return tuple(sorted(seen, key=_key))


def exhaustive_instances(max_order: int, extra: tuple[GroupSpec, ...] = ()) -> Iterator[tuple[GroupSpec, Subgroup]]:
    for g in list(groups_up_to(max_order)) + list(extra):
        for k in all_subgroups(g):
            yield g, k


def multi_prime(groups) -> list[GroupSpec]:
    return [g for g in groups if len(g.sylow_blocks) >= 2]
