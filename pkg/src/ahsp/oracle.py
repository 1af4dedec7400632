"""Query-counted hiding functions.

``f(x) = rho(x) + s`` where ``rho(x)`` is the canonical representative of the
coset ``x + K`` and ``s`` is a seeded shift of the codomain. The hidden
subgroup itself is sealed: algorithms only see evaluations, and every
evaluation (classical call or one application of the unitary ``U_f`` or its
inverse) increments ``query_count`` by one.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .groups import GroupElement, GroupError, GroupSpec, Subgroup, _coords, project_subgroup, sylow_decompose

LabelFn = Callable[[np.ndarray], np.ndarray]

MAX_VERIFY_ORDER = 4096


class HiddenOracle:
    """Black box ``f: domain -> codomain`` constant exactly on cosets of a hidden subgroup."""

    def __init__(self, domain: GroupSpec, codomain: GroupSpec, label_fn: LabelFn, hidden: Subgroup):
        self.domain = domain
        self.codomain = codomain
        self._label_fn = label_fn
        self._hidden = hidden
        self._lock = threading.Lock()
        self._table: np.ndarray | None = None
        self.query_count = 0
        self.meta_queries = 0

    def __repr__(self):
        return f"HiddenOracle({self.domain!r} -> {self.codomain!r}, queries={self.query_count})"

    def _charge(self, n: int = 1) -> None:
        with self._lock:
            self.query_count += n

    def _charge_meta(self, n: int) -> None:
        with self._lock:
            self.meta_queries += n

    def _labels(self, coords: np.ndarray) -> np.ndarray:
        arr = np.asarray(coords, dtype=np.int64)
        rows = arr.shape[0] if arr.ndim > 1 else 1
        return self._label_fn(arr.reshape(rows, self.domain.k))

    def query(self, x) -> GroupElement:
        """Evaluate ``f(x)``; one query."""
        c = _coords(self.domain, x)
        self._charge()
        return GroupElement(tuple(int(v) for v in self._labels(np.array([c]))[0]), self.codomain)

    def unitary_action(self) -> np.ndarray:
        """Codomain flat index of ``f(g)`` for every domain element ``g`` (flat order).

        This is what one application of ``U_f`` (or ``U_f^dagger``) needs, and
        it is charged as exactly one query.
        """
        self._charge()
        return self._action_table()

    def _action_table(self) -> np.ndarray:
        if self._table is None:
            table = self.codomain.flat_indices(self._labels(self.domain.coords_array))
            table.setflags(write=False)
            self._table = table
        return self._table

    def fork(self) -> "HiddenOracle":
        """Same function with a fresh, independent query counter."""
        twin = HiddenOracle(self.domain, self.codomain, self._label_fn, self._hidden)
        if self.domain.order * self.domain.k <= 1 << 22:
            twin._table = self._action_table()
        return twin

    def subfunction(self, i: int) -> "HiddenOracle":
        """Restriction ``f_i(g_i) = f(0, ..., g_i, ..., 0)`` to Sylow component ``i`` (0-based).

        The restriction has its own query counter and hides ``project_subgroup(K, i)``.
        """
        comps = sylow_decompose(self.domain)
        if not 0 <= i < len(comps):
            raise GroupError(f"component index {i} out of range for {len(comps)} components")
        idx = np.asarray(comps[i].indices, dtype=np.int64)
        k = self.domain.k
        parent = self._label_fn

        def label_fn(coords: np.ndarray) -> np.ndarray:
            full = np.zeros((len(coords), k), dtype=np.int64)
            full[:, idx] = coords
            return parent(full)

        return HiddenOracle(comps[i].group, self.codomain, label_fn, project_subgroup(self._hidden, i))

    def sealed_subgroup(self) -> Subgroup:
        """Ground truth, for verification and scoring only."""
        return self._hidden

    def meta_table(self) -> np.ndarray:
        """All labels as codomain flat indices, charged to the meta counter only."""
        if self.domain.order > MAX_VERIFY_ORDER:
            raise GroupError(f"domain of order {self.domain.order} too large to enumerate")
        self._charge_meta(self.domain.order)
        return self.codomain.flat_indices(self._labels(self.domain.coords_array))


def build_hidden_function(group: GroupSpec, hidden: Subgroup, seed: int = 0) -> HiddenOracle:
    """Oracle on ``group`` (codomain = ``group``) hiding ``hidden``."""
    if hidden.group != group:
        raise GroupError(f"subgroup of {hidden.group} does not live in {group}")
    rng = np.random.default_rng(seed)
    moduli = np.asarray(group.moduli, dtype=np.int64)
    shift = np.array([rng.integers(n) for n in group.moduli], dtype=np.int64)

    def label_fn(coords: np.ndarray) -> np.ndarray:
        if not group.k:
            return np.zeros((len(coords), 0), dtype=np.int64)
        return (hidden.reduce_array(coords) + shift) % moduli

    return HiddenOracle(group, group, label_fn, hidden)


def verify_hiding(oracle: HiddenOracle, subgroup: Subgroup) -> bool:
    """True iff ``f(x) == f(y) <=> x - y in subgroup`` for all pairs.

    Two partitions of the domain agree exactly when the map from labels to
    coset representatives is a bijection. Evaluations go to the meta counter.
    """
    if subgroup.group != oracle.domain:
        raise GroupError("subgroup and oracle domain differ")
    labels = oracle.meta_table()
    reps = oracle.domain.flat_indices(subgroup.reduce_array(oracle.domain.coords_array))
    forward: dict[int, int] = {}
    backward: dict[int, int] = {}
    for lab, rep in zip(labels.tolist(), reps.tolist()):
        if forward.setdefault(lab, rep) != rep or backward.setdefault(rep, lab) != lab:
            return False
    return True


def instance_to_json(group: GroupSpec, hidden: Subgroup, shift_seed: int = 0) -> dict:
    return {
        "moduli": list(group.moduli),
        "subgroup_generators": hidden.to_json(),
        "shift_seed": int(shift_seed),
    }


def load_instance(source: Union[str, Path, dict]) -> tuple[GroupSpec, Subgroup, HiddenOracle]:
    """Read an instance file (or its parsed dict) and build its oracle."""
    if isinstance(source, dict):
        data = source
    else:
        data = json.loads(Path(source).read_text())
    group = GroupSpec(tuple(data["moduli"]))
    hidden = Subgroup.from_json(group, data.get("subgroup_generators", []))
    return group, hidden, build_hidden_function(group, hidden, int(data.get("shift_seed", 0)))
