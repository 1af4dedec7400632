"""Dense state-vector simulation of two-register qudit systems.

The first register holds the algorithm's domain group (one qudit per cyclic
factor), the second holds the oracle's codomain. Flat indexing is row-major
over ``dims``, first register before second. Operations return new states and
never renormalize.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .groups import GroupElement, GroupError, GroupSpec, Subgroup
from .oracle import HiddenOracle

NORM_DRIFT_LIMIT = 1e-8

# Above this first-register dimension the transform is applied qudit by qudit.
_DENSE_KERNEL_LIMIT = 128


class IntegrityError(RuntimeError):
    """An event the mathematics rules out was observed; carries a state dump."""

    def __init__(self, message: str, state_dump: bytes | None = None):
        super().__init__(message)
        self.state_dump = state_dump


@dataclass(frozen=True)
class RegisterLayout:
    dims: tuple[int, ...]
    n_first: int

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 1 for d in self.dims):
            raise ValueError(f"qudit dimensions must be positive: {self.dims}")
        if not 0 <= self.n_first <= len(self.dims):
            raise ValueError("n_first out of range")

    @classmethod
    def for_groups(cls, first: GroupSpec, second: GroupSpec) -> "RegisterLayout":
        return cls(first.moduli + second.moduli, first.k)

    @property
    def first_dims(self) -> tuple[int, ...]:
        return self.dims[: self.n_first]

    @property
    def second_dims(self) -> tuple[int, ...]:
        return self.dims[self.n_first :]

    @property
    def first_dim(self) -> int:
        return math.prod(self.first_dims)

    @property
    def second_dim(self) -> int:
        return math.prod(self.second_dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def flat(self, multi_index: Sequence[int]) -> int:
        if len(multi_index) != len(self.dims):
            raise IndexError(f"expected {len(self.dims)} indices, got {len(multi_index)}")
        idx = 0
        for i, d in zip(multi_index, self.dims):
            if not 0 <= i < d:
                raise IndexError(f"index {i} out of range for dimension {d}")
            idx = idx * d + i
        return idx

    def multi(self, flat: int) -> tuple[int, ...]:
        out = []
        for d in reversed(self.dims):
            flat, r = divmod(flat, d)
            out.append(r)
        return tuple(reversed(out))


@dataclass(frozen=True)
class StateVector:
    layout: RegisterLayout
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (self.layout.total,):
            raise ValueError(f"amplitude array of shape {self.amps.shape} does not fit {self.layout}")

    def matrix(self) -> np.ndarray:
        """View as ``(first_dim, second_dim)``."""
        return self.amps.reshape(self.layout.first_dim, self.layout.second_dim)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def _with(self, amps: np.ndarray) -> "StateVector":
        return StateVector(self.layout, amps.reshape(-1))


@dataclass(frozen=True)
class PhaseParams:
    b: float
    phi: float


def init_basis(layout: RegisterLayout, multi_index: Sequence[int] | None = None) -> StateVector:
    """Computational basis state (all zeros by default)."""
    amps = np.zeros(layout.total, dtype=np.complex128)
    amps[layout.flat(multi_index) if multi_index is not None else 0] = 1.0
    return StateVector(layout, amps)


def random_state(layout: RegisterLayout, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=layout.total) + 1j * rng.normal(size=layout.total)
    return StateVector(layout, v / np.linalg.norm(v))


@lru_cache(maxsize=None)
def dft_kernel(n: int, inverse: bool = False) -> np.ndarray:
    """``K[y, x] = exp(+-2 pi i x y / n) / sqrt(n)``; the forward map sends |x> to sum_y K[y, x] |y>."""
    x = np.arange(n)
    phase = np.outer(x, x) % n
    sign = -1.0 if inverse else 1.0
    k = np.exp(sign * 2j * np.pi * phase / n) / math.sqrt(n)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=None)
def _register_kernel(dims: tuple[int, ...], inverse: bool) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for n in dims:
        out = np.kron(out, dft_kernel(n, inverse))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _real_register_kernel(dims: tuple[int, ...], inverse: bool) -> np.ndarray:
    out = np.ascontiguousarray(_register_kernel(dims, inverse).real)
    out.setflags(write=False)
    return out


def apply_qft(s: StateVector, register: int, inverse: bool = False) -> StateVector:
    """DFT (or its inverse) on the single qudit at position ``register``."""
    dims = s.layout.dims
    if not 0 <= register < len(dims):
        raise IndexError(f"no qudit {register} in layout of {len(dims)} qudits")
    t = s.amps.reshape(dims)
    t = np.moveaxis(np.tensordot(dft_kernel(dims[register], inverse), t, axes=([1], [register])), 0, register)
    return s._with(np.ascontiguousarray(t))


def apply_qft_first(s: StateVector, inverse: bool = False) -> StateVector:
    """Tensor product of DFTs over every qudit of the first register.

    The transform acts column by column on the ``(first, second)`` matrix, so
    columns that are identically zero are skipped; they stay exactly zero.
    """
    layout = s.layout
    m = s.matrix()
    live = np.flatnonzero(m.any(axis=0))
    if len(live) == m.shape[1]:
        return s._with(_first_transform(m, layout, inverse))
    out = np.zeros_like(m)
    if len(live):
        out[:, live] = _first_transform(m[:, live], layout, inverse)
    return s._with(out)


def _first_transform(m: np.ndarray, layout: RegisterLayout, inverse: bool) -> np.ndarray:
    dims = layout.first_dims
    if layout.first_dim <= _DENSE_KERNEL_LIMIT:
        if all(d <= 2 for d in dims):
            # real kernel: transform re and im parts together
            flat = np.ascontiguousarray(m).view(np.float64)
            return (_real_register_kernel(dims, inverse) @ flat).view(np.complex128)
        return _register_kernel(dims, inverse) @ m
    cols = m.shape[1]
    t = m.reshape(dims + (cols,))
    for j, n in enumerate(dims):
        t = np.moveaxis(np.tensordot(dft_kernel(n, inverse), t, axes=([1], [j])), 0, j)
    return np.ascontiguousarray(t).reshape(layout.first_dim, cols)


@lru_cache(maxsize=None)
def _shift_table(group: GroupSpec, sign: int) -> np.ndarray:
    """``T[c, l] = index(c - sign * l)``: gather table for ``b -> b + sign * f``."""
    if not group.k:
        table = np.zeros((1, 1), dtype=np.int64)
        table.setflags(write=False)
        return table
    coords = group.coords_array
    moduli = np.asarray(group.moduli, dtype=np.int64)
    diff = (coords[:, None, :] - sign * coords[None, :, :]) % moduli
    table = group.flat_indices(diff.reshape(-1, group.k)).reshape(group.order, group.order)
    table.setflags(write=False)
    return table


_PERM_CACHE: dict = {}


def _oracle_permutation(labels: np.ndarray, codomain: GroupSpec, inverse: bool) -> np.ndarray:
    """Gather indices with ``new[g, c] = old[g, c -+ f(g)]``, cached per label table."""
    key = (id(labels), inverse)
    hit = _PERM_CACHE.get(key)
    if hit is not None and hit[0] is labels:
        return hit[1]
    table = _shift_table(codomain, -1 if inverse else 1)
    cols = table[:, labels].T
    perm = (np.arange(len(labels), dtype=np.int64)[:, None] * codomain.order + cols).reshape(-1)
    if len(_PERM_CACHE) > 256:
        _PERM_CACHE.clear()
    _PERM_CACHE[key] = (labels, perm)
    return perm


def apply_oracle(s: StateVector, oracle: HiddenOracle, inverse: bool = False) -> StateVector:
    """``|g>|b> -> |g>|b +- f(g)>``; one query."""
    layout = s.layout
    if layout.first_dims != oracle.domain.moduli or layout.second_dims != oracle.codomain.moduli:
        raise GroupError(f"layout {layout.dims} does not match oracle {oracle.domain} -> {oracle.codomain}")
    labels = oracle.unitary_action()
    return s._with(s.amps[_oracle_permutation(labels, oracle.codomain, inverse)])


def apply_phase_r0(s: StateVector, phi: float) -> StateVector:
    """Multiply the all-zeros amplitude by ``exp(i phi)``."""
    amps = s.amps.copy()
    amps[0] *= np.exp(1j * phi)
    return s._with(amps)


def apply_phase_ra(s: StateVector, phi: float, marked: Subgroup) -> StateVector:
    """Multiply amplitudes whose first-register index lies outside ``marked`` by ``exp(i phi)``."""
    if marked.group.moduli != s.layout.first_dims:
        raise GroupError(f"marked subgroup of {marked.group} does not match first register {s.layout.first_dims}")
    factor = np.where(marked.membership_mask(), 1.0 + 0j, np.exp(1j * phi))
    return s._with(s.matrix() * factor[:, None])


def apply_A(s: StateVector, oracle: HiddenOracle, inverse: bool = False) -> StateVector:
    """``A = (QFT^dagger x I) U_f (QFT x I)``; ``A^dagger`` uses ``U_f^dagger``. One query."""
    s = apply_qft_first(s, inverse=False)
    s = apply_oracle(s, oracle, inverse=inverse)
    return apply_qft_first(s, inverse=True)


def apply_Q(s: StateVector, oracle: HiddenOracle, params: PhaseParams, marked: Subgroup) -> StateVector:
    """``Q = A R_0(phi) A^dagger (R_A(phi, marked) x I)``; two queries."""
    s = apply_phase_ra(s, params.phi, marked)
    s = apply_A(s, oracle, inverse=True)
    s = apply_phase_r0(s, params.phi)
    return apply_A(s, oracle)


def marginal_first(s: StateVector) -> np.ndarray:
    """Probability of each first-register value, flat order."""
    m = s.matrix()
    return (m.real**2 + m.imag**2).sum(axis=1)


def measure_first(s: StateVector, rng: np.random.Generator, group: GroupSpec | None = None) -> GroupElement:
    """Sample the first register. ``group`` defaults to the group with the first register's moduli."""
    p = marginal_first(s)
    total = p.sum()
    if abs(total - 1.0) > NORM_DRIFT_LIMIT:
        raise IntegrityError(f"state norm drifted to {total!r}", dump_state(s))
    group = group or GroupSpec(s.layout.first_dims)
    return GroupElement(group.from_index(sample_index(p, rng)), group)


def support_first(s: StateVector, tol: float = 1e-10, group: GroupSpec | None = None) -> set[GroupElement]:
    group = group or GroupSpec(s.layout.first_dims)
    p = marginal_first(s)
    return {GroupElement(group.from_index(int(i)), group) for i in np.flatnonzero(p > tol)}


_HEADER = struct.Struct("<II")


def dump_state(s: StateVector) -> bytes:
    """``<n_dims, n_first, dims..., (re, im) doubles...>``, little endian."""
    dims = s.layout.dims
    head = _HEADER.pack(len(dims), s.layout.n_first) + struct.pack(f"<{len(dims)}I", *dims)
    return head + np.ascontiguousarray(s.amps, dtype="<c16").tobytes()


def load_state(data: bytes) -> StateVector:
    n, n_first = _HEADER.unpack_from(data, 0)
    off = _HEADER.size
    dims = struct.unpack_from(f"<{n}I", data, off)
    off += 4 * n
    amps = np.frombuffer(data[off:], dtype="<c16").astype(np.complex128)
    return StateVector(RegisterLayout(dims, n_first), amps)


class StateBatch:
    """``B`` independent states of one layout, advanced in lockstep.

    Amplitudes are stored as a ``(first, len(cols), B)`` array, where
    ``cols`` lists the second-register values that may carry amplitude; every
    other column is exactly zero. First-register operators keep ``cols``
    fixed and the oracle maps it to ``{c + f(g)}``, so this is exact.

    Each member has its own phases and its own marked subgroup; only the
    dense linear algebra is shared. A member may stand for several trials
    that run the same circuit: pass a sequence of oracles in its slot and
    every one of them is charged for each oracle call.
    Operations update the batch in place.
    """

    def __init__(self, layout: RegisterLayout, data: np.ndarray, cols: np.ndarray):
        if data.ndim != 3 or data.shape[0] != layout.first_dim or data.shape[1] != len(cols):
            raise ValueError(f"batch array of shape {data.shape} does not fit {layout}")
        self.layout = layout
        self.data = data
        self.cols = np.asarray(cols, dtype=np.int64)

    @classmethod
    def basis(cls, layout: RegisterLayout, size: int) -> "StateBatch":
        data = np.zeros((layout.first_dim, 1, size), dtype=np.complex128)
        data[0, 0, :] = 1.0
        return cls(layout, data, np.zeros(1, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.data.shape[2]

    def member(self, b: int) -> StateVector:
        full = np.zeros((self.layout.first_dim, self.layout.second_dim), dtype=np.complex128)
        full[:, self.cols] = self.data[:, :, b]
        return StateVector(self.layout, full.reshape(-1))

    def qft_first(self, inverse: bool = False) -> None:
        n, w, size = self.data.shape
        flat = self.data.reshape(n, w * size)
        self.data = _first_transform(flat, self.layout, inverse).reshape(n, w, size)

    def oracle(self, oracles: Sequence, inverse: bool = False) -> None:
        """``|g>|c> -> |g>|c +- f(g)>`` for every member; one query on each member's oracle(s)."""
        if len(oracles) != self.size:
            raise ValueError(f"need one oracle per member, got {len(oracles)} for {self.size}")
        flat = [o for slot in oracles for o in ((slot,) if isinstance(slot, HiddenOracle) else slot)]
        if not flat:
            raise ValueError("every member needs at least one oracle")
        first = flat[0]
        codomain = first.codomain
        if self.layout.first_dims != first.domain.moduli or self.layout.second_dims != codomain.moduli:
            raise GroupError(f"layout {self.layout.dims} does not match oracle {first.domain} -> {codomain}")
        labels = first.unitary_action()
        for o in flat[1:]:
            other = o.unitary_action()
            if other is not labels and not np.array_equal(other, labels):
                raise GroupError("batched oracles must compute the same function")
        sign = -1 if inverse else 1
        forward = _shift_table(codomain, -sign)  # forward[c, l] = c + sign * l
        back = _shift_table(codomain, sign)  # back[c, l] = c - sign * l
        new_cols = np.unique(forward[np.ix_(self.cols, np.unique(labels))])
        n, w, size = self.data.shape
        # flat row of each (g, old column); absent columns point at a trailing zero row
        pos = np.full(codomain.order, -1, dtype=np.int64)
        pos[self.cols] = np.arange(w)
        src = pos[back[new_cols][:, labels].T]  # (first, new width)
        rows = np.where(src >= 0, np.arange(n)[:, None] * w + src, n * w).reshape(-1)
        padded = np.empty((n * w + 1, size), dtype=self.data.dtype)
        padded[:-1] = self.data.reshape(n * w, size)
        padded[-1] = 0
        self.data = padded.take(rows, axis=0).reshape(n, len(new_cols), size)
        self.cols = new_cols

    def phase_r0(self, phis: np.ndarray) -> None:
        hit = np.flatnonzero(self.cols == 0)
        if len(hit):
            self.data[0, hit[0], :] *= np.exp(1j * np.asarray(phis, dtype=float))

    def phase_ra(self, phis: np.ndarray, marked: Sequence[Subgroup]) -> None:
        if len(marked) != self.size:
            raise ValueError("need one marked subgroup per member")
        if marked[0].group.moduli != self.layout.first_dims:
            raise GroupError(f"marked subgroup of {marked[0].group} does not match first register")
        inside = np.stack([m.membership_mask() for m in marked], axis=1)
        factor = np.where(inside, 1.0 + 0j, np.exp(1j * np.asarray(phis, dtype=float))[None, :])
        self.data *= factor[:, None, :]

    def A(self, oracles: Sequence, inverse: bool = False) -> None:
        self.qft_first(inverse=False)
        self.oracle(oracles, inverse=inverse)
        self.qft_first(inverse=True)

    def Q(self, oracles: Sequence, phis: np.ndarray, marked: Sequence[Subgroup]) -> None:
        self.phase_ra(phis, marked)
        self.A(oracles, inverse=True)
        self.phase_r0(phis)
        self.A(oracles)

    def marginals(self) -> np.ndarray:
        """``(first_dim, B)`` first-register probabilities."""
        d = self.data
        return (d.real**2 + d.imag**2).sum(axis=1)


def sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Draw a flat index from the probability vector ``p`` (one uniform draw)."""
    cdf = np.cumsum(p)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, len(p) - 1)


def sample_columns(probs: np.ndarray, rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """:func:`sample_index` applied to each column of ``probs`` with its own generator."""
    cdf = np.cumsum(probs, axis=0)
    u = np.array([rng.random() for rng in rngs]) * cdf[-1]
    idx = (cdf <= u[None, :]).sum(axis=0)
    return np.minimum(idx, probs.shape[0] - 1)
