"""Exact arithmetic for finite Abelian groups written as sums of cyclic groups.

A group is given by its cyclic moduli ``N_1, ..., N_k`` (each a prime power).
Subgroups are stored as the Hermite normal form of the lattice

    span(generators) + N_1 Z e_1 + ... + N_k Z e_k   inside Z^k,

which is unique per subgroup, so structural equality is basis equality.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, Iterator, Sequence, Tuple, Union

import numpy as np

from .normal_forms import factorize, prime_power, smith_normal_form, xgcd

Coords = Tuple[int, ...]

#: Values of the bilinear form live in [0, 1) and are kept as exact fractions.
Rational01 = Fraction


class GroupError(ValueError):
    """Raised for ill-formed groups or mismatched group arguments."""


@dataclass(frozen=True)
class GroupSpec:
    """Finite Abelian group ``Z_{N_1} + ... + Z_{N_k}`` with prime-power moduli."""

    moduli: Tuple[int, ...]

    def __post_init__(self):
        moduli = tuple(int(n) for n in self.moduli)
        object.__setattr__(self, "moduli", moduli)
        for n in moduli:
            if prime_power(n) is None:
                raise GroupError(f"modulus {n} is not a prime power >= 2")

    def __repr__(self):
        if not self.moduli:
            return "GroupSpec(trivial)"
        return "GroupSpec(" + "+".join(f"Z{n}" for n in self.moduli) + ")"

    @property
    def k(self) -> int:
        return len(self.moduli)

    @cached_property
    def order(self) -> int:
        return math.prod(self.moduli)

    @cached_property
    def primes(self) -> Tuple[int, ...]:
        """Prime of each coordinate."""
        return tuple(prime_power(n)[0] for n in self.moduli)

    @cached_property
    def sylow_blocks(self) -> Tuple[Tuple[int, ...], ...]:
        """Coordinate indices grouped by prime, blocks in order of first appearance."""
        blocks: dict[int, list[int]] = {}
        for j, p in enumerate(self.primes):
            blocks.setdefault(p, []).append(j)
        return tuple(tuple(b) for b in blocks.values())

    @cached_property
    def exponent(self) -> int:
        return math.lcm(*self.moduli) if self.moduli else 1

    def reduce(self, coords: Iterable[int]) -> Coords:
        coords = tuple(coords)
        if len(coords) != self.k:
            raise GroupError(f"expected {self.k} coordinates, got {len(coords)}")
        return tuple(int(c) % n for c, n in zip(coords, self.moduli))

    def element(self, coords: Iterable[int]) -> "GroupElement":
        return GroupElement(self.reduce(coords), self)

    def zero(self) -> "GroupElement":
        return GroupElement((0,) * self.k, self)

    def iter_coords(self) -> Iterator[Coords]:
        """All elements as coordinate tuples, in row-major (flat index) order."""
        return product(*(range(n) for n in self.moduli))

    def elements(self) -> Iterator["GroupElement"]:
        for c in self.iter_coords():
            yield GroupElement(c, self)

    def index(self, coords: Sequence[int]) -> int:
        """Row-major flat index of an element."""
        idx = 0
        for c, n in zip(coords, self.moduli):
            idx = idx * n + c
        return idx

    def from_index(self, idx: int) -> Coords:
        out = []
        for n in reversed(self.moduli):
            idx, c = divmod(idx, n)
            out.append(c)
        return tuple(reversed(out))

    @cached_property
    def coords_array(self) -> np.ndarray:
        """``(order, k)`` array of all elements in flat-index order."""
        if not self.moduli:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices(self.moduli, dtype=np.int64)
        return grids.reshape(self.k, -1).T.copy()

    def flat_indices(self, coords: np.ndarray) -> np.ndarray:
        """Row-major flat indices of an ``(n, k)`` coordinate array."""
        if not self.moduli:
            return np.zeros(len(coords), dtype=np.int64)
        return np.ravel_multi_index(tuple(coords.T), self.moduli)

    def to_json(self) -> dict:
        return {"moduli": list(self.moduli)}

    @classmethod
    def from_json(cls, data: Union[str, dict]) -> "GroupSpec":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(data["moduli"]))


@dataclass(frozen=True)
class GroupElement:
    coords: Coords
    group: GroupSpec = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", self.group.reduce(self.coords))

    def _check(self, other: "GroupElement") -> None:
        if other.group != self.group:
            raise GroupError(f"elements of different groups: {self.group} vs {other.group}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(tuple(a + b for a, b in zip(self.coords, other.coords)), self.group)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(tuple(a - b for a, b in zip(self.coords, other.coords)), self.group)

    def __neg__(self) -> "GroupElement":
        return GroupElement(tuple(-a for a in self.coords), self.group)

    def __mul__(self, n: int) -> "GroupElement":
        return GroupElement(tuple(n * a for a in self.coords), self.group)

    __rmul__ = __mul__

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, j):
        return self.coords[j]

    def is_zero(self) -> bool:
        return not any(self.coords)


ElementLike = Union[GroupElement, Sequence[int]]


def _coords(group: GroupSpec, x: ElementLike) -> Coords:
    if isinstance(x, GroupElement):
        if x.group != group:
            raise GroupError(f"element of {x.group} used in {group}")
        return x.coords
    return group.reduce(x)


def _insert(basis: list[list[int]], vec: Sequence[int], moduli: Sequence[int]) -> None:
    """Add ``vec`` to an upper-triangular lattice basis containing diag(moduli)."""
    k = len(moduli)
    v = [int(c) % n for c, n in zip(vec, moduli)]
    for j in range(k):
        b = v[j]
        if not b:
            continue
        row = basis[j]
        a = row[j]
        if b % a == 0:
            q = b // a
            for c in range(j, k):
                v[c] = (v[c] - q * row[c]) % moduli[c]
            continue
        g, x, y = xgcd(a, b)
        ag, bg = a // g, b // g
        new_row = [0] * k
        for c in range(j, k):
            rc, vc = row[c], v[c]
            new_row[c] = (x * rc + y * vc) % moduli[c]
            v[c] = (ag * vc - bg * rc) % moduli[c]
        new_row[j] = g
        basis[j] = new_row


def _normalize(basis: list[list[int]]) -> None:
    k = len(basis)
    for i in range(k):
        row = basis[i]
        for j in range(i + 1, k):
            q = row[j] // basis[j][j]
            if q:
                pj = basis[j]
                for c in range(j, k):
                    row[c] -= q * pj[c]


class Subgroup:
    """A subgroup in canonical Hermite form.

    ``basis[i][i]`` is the pivot ``d_i`` (a divisor of ``N_i``); entries to
    the right of a pivot are reduced into ``[0, d_j)``. The subgroup has order
    ``prod(N_i / d_i)`` and the elements of ``G`` with ``0 <= x_i < d_i`` are
    a transversal of its cosets.
    """

    def __init__(self, group: GroupSpec, basis: Sequence[Sequence[int]]):
        self.group = group
        self.basis = tuple(tuple(r) for r in basis)

    @classmethod
    def generated(cls, group: GroupSpec, generators: Iterable[ElementLike] = ()) -> "Subgroup":
        basis = [[n if i == j else 0 for j in range(group.k)] for i, n in enumerate(group.moduli)]
        for g in generators:
            _insert(basis, _coords(group, g), group.moduli)
        _normalize(basis)
        return cls(group, basis)

    def __eq__(self, other):
        return isinstance(other, Subgroup) and self.group == other.group and self.basis == other.basis

    def __hash__(self):
        return hash((self.group, self.basis))

    def __repr__(self):
        gens = [list(g) for g in self.generator_coords()]
        return f"Subgroup({self.group!r}, order={self.order}, gens={gens})"

    @cached_property
    def pivots(self) -> Tuple[int, ...]:
        return tuple(self.basis[i][i] for i in range(self.group.k))

    @cached_property
    def order(self) -> int:
        return math.prod(n // d for n, d in zip(self.group.moduli, self.pivots))

    @property
    def index(self) -> int:
        return self.group.order // self.order

    def reduce(self, x: ElementLike) -> Coords:
        """Canonical representative of the coset ``x + K``."""
        v = list(_coords(self.group, x))
        moduli = self.group.moduli
        k = self.group.k
        for i in range(k):
            row = self.basis[i]
            q = v[i] // row[i]
            if q:
                for c in range(i, k):
                    v[c] = (v[c] - q * row[c]) % moduli[c]
        return tuple(v)

    def reduce_array(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`reduce` over an ``(n, k)`` coordinate array."""
        moduli = np.asarray(self.group.moduli, dtype=np.int64)
        v = np.array(coords, dtype=np.int64) % moduli if self.group.k else np.zeros((len(coords), 0), np.int64)
        for i, row in enumerate(self.basis):
            q = v[:, i] // row[i]
            v -= q[:, None] * np.asarray(row, dtype=np.int64)
            v %= moduli
        return v

    def membership_mask(self) -> np.ndarray:
        """Boolean mask over all group elements (flat order): True on the subgroup."""
        return _membership_mask(self)

    def contains(self, x: ElementLike) -> bool:
        return not any(self.reduce(x))

    __contains__ = contains

    def generator_coords(self) -> list[Coords]:
        """Nonzero basis rows reduced into the group; they generate the subgroup."""
        out = []
        for row in self.basis:
            c = self.group.reduce(row)
            if any(c):
                out.append(c)
        return out

    def generators(self) -> list[GroupElement]:
        return [GroupElement(c, self.group) for c in self.generator_coords()]

    def iter_coords(self) -> Iterator[Coords]:
        """All elements (each exactly once)."""
        moduli = self.group.moduli
        k = self.group.k
        mults = [n // d for n, d in zip(moduli, self.pivots)]
        for cs in product(*(range(m) for m in mults)):
            v = [0] * k
            for ci, row in zip(cs, self.basis):
                if ci:
                    for c in range(k):
                        v[c] += ci * row[c]
            yield tuple(a % n for a, n in zip(v, moduli))

    def elements(self) -> Iterator[GroupElement]:
        for c in self.iter_coords():
            yield GroupElement(c, self.group)

    def issubgroup(self, other: "Subgroup") -> bool:
        return all(other.contains(g) for g in self.generator_coords())

    def __le__(self, other: "Subgroup") -> bool:
        return self.issubgroup(other)

    def __lt__(self, other: "Subgroup") -> bool:
        return self != other and self.issubgroup(other)

    def extend(self, x: ElementLike) -> "Subgroup":
        """``self + <x>``; memoized since algorithms revisit the same chains."""
        return _extend(self, _coords(self.group, x))

    def join(self, *more: Union["Subgroup", ElementLike]) -> "Subgroup":
        gens: list = list(self.generator_coords())
        for m in more:
            if isinstance(m, Subgroup):
                gens.extend(m.generator_coords())
            else:
                gens.append(_coords(self.group, m))
        return Subgroup.generated(self.group, gens)

    @cached_property
    def invariant_factors(self) -> Tuple[int, ...]:
        """Invariant factors ``d_1 | d_2 | ...`` (all > 1) of the subgroup as an abstract group.

        The subgroup is ``Z^k`` modulo the relation lattice ``diag(N) B^{-1}``.
        """
        k = self.group.k
        moduli = self.group.moduli
        rel = []
        for r in range(k):
            row = [0] * k
            for c in range(k):
                acc = moduli[r] if r == c else 0
                for i in range(c):
                    acc -= row[i] * self.basis[i][c]
                q, rem = divmod(acc, self.basis[c][c])
                assert rem == 0, "relation lattice must be integral"
                row[c] = q
            rel.append(row)
        diag, _, _ = smith_normal_form(rel, ncols=k)
        return tuple(d for d in diag if d > 1)

    def to_json(self) -> list:
        return [list(c) for c in self.generator_coords()]

    @classmethod
    def from_json(cls, group: GroupSpec, data: Union[str, list]) -> "Subgroup":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.generated(group, [tuple(r) for r in data])


GroupOrSubgroup = Union[GroupSpec, Subgroup]


@lru_cache(maxsize=8192)
def _membership_mask(sub: Subgroup) -> np.ndarray:
    m = ~np.any(sub.reduce_array(sub.group.coords_array), axis=1)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=65536)
def _extend(sub: Subgroup, x: Coords) -> Subgroup:
    if sub.contains(x):
        return sub
    return Subgroup.generated(sub.group, list(sub.generator_coords()) + [x])


def whole(group: GroupSpec) -> Subgroup:
    return Subgroup.generated(group, [tuple(int(i == j) for j in range(group.k)) for i in range(group.k)])


def trivial(group: GroupSpec) -> Subgroup:
    return Subgroup.generated(group, [])


def bilinear(x: GroupElement, y: GroupElement) -> Rational01:
    """``sum_j x_j y_j / N_j  (mod 1)`` as an exact fraction in ``[0, 1)``."""
    if not isinstance(x, GroupElement) or not isinstance(y, GroupElement):
        raise GroupError("bilinear() takes two GroupElements")
    if x.group != y.group:
        raise GroupError(f"bilinear() on different groups: {x.group} vs {y.group}")
    lcm = x.group.exponent
    num = sum(a * b * (lcm // n) for a, b, n in zip(x.coords, y.coords, x.group.moduli))
    return Fraction(num % lcm, lcm)


def span(group: GroupSpec, generators: Iterable[ElementLike] = ()) -> Subgroup:
    return Subgroup.generated(group, generators)


def contains(subgroup: Subgroup, x: ElementLike) -> bool:
    return subgroup.contains(x)


@lru_cache(maxsize=65536)
def orthogonal(subgroup: Subgroup) -> Subgroup:
    """``{g : <k, g> = 0 mod 1 for all k in K}``.

    Scaling the congruences ``sum_j k_j g_j / N_j = 0 (mod 1)`` by
    ``L = lcm(N)`` gives the integer system ``M g = 0 (mod L)``. With
    ``U M V = D`` in Smith form, the solutions are ``V y`` where
    ``d_i y_i = 0 (mod L)``, i.e. ``y_i`` is a multiple of ``L / gcd(d_i, L)``.
    """
    group = subgroup.group
    k = group.k
    if k == 0:
        return trivial(group)
    lcm = group.exponent
    scale = [lcm // n for n in group.moduli]
    m = [[row[j] * scale[j] for j in range(k)] for row in subgroup.basis]
    diag, _, v = smith_normal_form(m, ncols=k)
    gens = []
    for i in range(k):
        d = diag[i] if i < len(diag) else 0
        step = lcm // math.gcd(d, lcm)
        gens.append([v[r][i] * step for r in range(k)])
    return Subgroup.generated(group, gens)


def chain_length_of_order(order: int) -> int:
    """Composition length of any Abelian group of this order."""
    return sum(factorize(order).values()) if order > 1 else 0


def chain_length(g: GroupOrSubgroup) -> int:
    return chain_length_of_order(g.order)


def rank(g: GroupOrSubgroup) -> int:
    """Minimal number of generators."""
    if isinstance(g, GroupSpec):
        if not g.moduli:
            return 0
        return max(len(b) for b in g.sylow_blocks)
    return len(g.invariant_factors)


@dataclass(frozen=True)
class SylowComponent:
    """A Sylow block ``G_i`` of ``G``, with the coordinate maps between them."""

    group: GroupSpec
    prime: int
    indices: Tuple[int, ...]
    ambient: GroupSpec = field(repr=False)

    def embed(self, x: ElementLike) -> Coords:
        """``(0, ..., g_i, ..., 0)`` in ``G``."""
        c = _coords(self.group, x)
        out = [0] * self.ambient.k
        for j, v in zip(self.indices, c):
            out[j] = v
        return tuple(out)

    def project(self, x: ElementLike) -> Coords:
        c = _coords(self.ambient, x)
        return tuple(c[j] for j in self.indices)


def sylow_decompose(group: GroupSpec) -> list[SylowComponent]:
    """Sylow components with pairwise distinct primes."""
    return [
        SylowComponent(GroupSpec(tuple(group.moduli[j] for j in block)), group.primes[block[0]], block, group)
        for block in group.sylow_blocks
    ]


def project_subgroup(subgroup: Subgroup, i: int) -> Subgroup:
    """Projection ``K_i`` of ``K`` onto the ``i``-th Sylow component (0-based)."""
    comps = sylow_decompose(subgroup.group)
    if not 0 <= i < len(comps):
        raise GroupError(f"component index {i} out of range for {len(comps)} components")
    comp = comps[i]
    return Subgroup.generated(comp.group, [comp.project(g) for g in subgroup.generator_coords()])


def direct_sum_subgroups(group: GroupSpec, parts: Sequence[Subgroup]) -> Subgroup:
    """``K_1 + ... + K_m`` as a subgroup of ``G``, one part per Sylow component."""
    comps = sylow_decompose(group)
    if len(parts) != len(comps):
        raise GroupError(f"expected {len(comps)} parts, got {len(parts)}")
    gens = []
    for comp, part in zip(comps, parts):
        if part.group != comp.group:
            raise GroupError(f"part over {part.group} does not match component {comp.group}")
        gens.extend(comp.embed(g) for g in part.generator_coords())
    return Subgroup.generated(group, gens)


def _ceil_log2(x: Fraction) -> int:
    """Smallest integer n >= 0 with 2**n >= x (x > 0)."""
    n = 0
    while Fraction(2) ** n < x:
        n += 1
    while n > 0 and Fraction(2) ** (n - 1) >= x:
        n -= 1
    return n


def iteration_bound(group: GroupSpec, epsilon: float, known_len_k: int | None = None) -> int:
    """Iterations of the standard sampler that guarantee success >= 1 - epsilon.

    ``min(rank(G) + ceil(log2(2/eps)), len(G) - len(K) + ceil(log2(1/eps)))``
    where ``len(K)`` is taken as 0 when unknown.
    """
    if not 0 < epsilon < 1:
        raise GroupError(f"epsilon must lie in (0, 1), got {epsilon}")
    eps = Fraction(epsilon)
    len_k = known_len_k or 0
    by_rank = rank(group) + _ceil_log2(2 / eps)
    by_len = chain_length(group) - len_k + _ceil_log2(1 / eps)
    return min(by_rank, by_len)


def generation_sample_size(group: GroupSpec, epsilon) -> int:
    """``rank(G) + ceil(log2(2/eps))`` uniform samples generate ``G`` with probability >= 1 - eps."""
    if not 0 < epsilon < 1:
        raise GroupError(f"epsilon must lie in (0, 1), got {epsilon}")
    return rank(group) + _ceil_log2(2 / Fraction(epsilon))


def generation_frequency(group: GroupSpec, samples: int, trials: int, rng: np.random.Generator) -> float:
    """Fraction of trials in which ``samples`` uniform elements (with replacement) span ``G``."""
    hits = 0
    for _ in range(trials):
        idx = rng.integers(group.order, size=samples)
        if span(group, [group.from_index(int(i)) for i in idx]).order == group.order:
            hits += 1
    return hits / trials if trials else 0.0
