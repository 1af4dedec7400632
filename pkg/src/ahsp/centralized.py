"""Centralized quantum solvers: the standard sampler and the exact amplified one.

Both prepare ``|0>|0_G>``, apply ``A`` and measure the first register, which
yields an element of ``K^perp``. The exact solver inserts one amplification
step ``Q`` before each measurement so that the outcome provably avoids the
span of everything seen so far.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .groups import (
    GroupElement,
    GroupError,
    GroupSpec,
    Subgroup,
    chain_length,
    chain_length_of_order,
    iteration_bound,
    orthogonal,
    span,
    trivial,
)
from .normal_forms import factorize
from .oracle import HiddenOracle
from .qudit_sim import (
    NORM_DRIFT_LIMIT,
    IntegrityError,
    PhaseParams,
    RegisterLayout,
    StateBatch,
    dump_state,
    sample_columns,
)

SCHEDULES = ("chain", "greedy")
ELIMINATION_TOL = 1e-10


def qaa_phase(b: float) -> PhaseParams:
    """Phase for one exact amplification step, principal branch."""
    if not 0.5 - 1e-12 <= b <= 1 + 1e-12:
        raise GroupError(f"good-state weight b={b} outside [1/2, 1]")
    b = min(max(b, 0.5), 1.0)
    return PhaseParams(b, math.acos(1 - 1 / (2 * b)))


@dataclass(frozen=True)
class StepTrace:
    """Diagnostics of one amplified iteration (measured after ``Q``)."""

    iteration: int
    span_order: int
    b: float
    phi: float
    bad_mass: float
    good_uniform_dev: float
    measured: GroupElement
    accepted: GroupElement
    span: Optional[Subgroup] = None


@dataclass
class RunReport:
    recovered: Subgroup
    iterations: int
    planned_iterations: int
    oracle_queries: int
    measured: list[GroupElement]
    success: Optional[bool] = None
    wall_time: float = 0.0
    accepted: list[GroupElement] = field(default_factory=list)
    steps: list[StepTrace] = field(default_factory=list)
    final_span: Optional[Subgroup] = None

    def to_json(self) -> dict:
        return {
            "recovered": self.recovered.to_json(),
            "recovered_order": self.recovered.order,
            "iterations": self.iterations,
            "planned_iterations": self.planned_iterations,
            "oracle_queries": self.oracle_queries,
            "measured": [list(m.coords) for m in self.measured],
            "accepted": [list(a.coords) for a in self.accepted],
            "success": self.success,
            "wall_time": self.wall_time,
        }


def _check_oracle(group: GroupSpec, o: HiddenOracle) -> None:
    if o.domain != group:
        raise GroupError(f"oracle domain {o.domain} differs from {group}")


def _success(o: HiddenOracle, recovered: Subgroup) -> bool:
    return recovered == o.sealed_subgroup()


def order_mod(t: GroupElement, sub: Subgroup) -> int:
    """Smallest ``d > 0`` with ``d * t`` in ``sub``."""
    group = sub.group
    d = group.exponent
    if d == 1:
        return 1
    mask = sub.membership_mask()
    x = t.coords
    moduli = group.moduli

    def inside(n: int) -> bool:
        return bool(mask[group.index([(v * n) % m for v, m in zip(x, moduli)])])

    for p in factorize(d):
        while d % p == 0 and inside(d // p):
            d //= p
    return d


def prime_step(t: GroupElement, sub: Subgroup) -> GroupElement:
    """Multiple of ``t`` whose order modulo ``sub`` is the smallest prime of that order."""
    d = order_mod(t, sub)
    if d == 1:
        return t
    p = min(factorize(d))
    return t * (d // p)


def run_standard(
    group: GroupSpec,
    o: HiddenOracle,
    epsilon: float,
    rng: np.random.Generator,
    known_len_k: int | None = None,
) -> RunReport:
    """Sample ``h`` elements of ``K^perp`` and return the orthogonal of their span."""
    return run_standard_trials(group, [o], epsilon, [rng], known_len_k)[0]


def run_standard_trials(
    group: GroupSpec,
    oracles: Sequence[HiddenOracle],
    epsilon: float,
    rngs: Sequence[np.random.Generator],
    known_len_k: int | None = None,
) -> list[RunReport]:
    """Independent runs of :func:`run_standard`, one per (oracle, rng) pair, simulated in lockstep."""
    if len(oracles) != len(rngs):
        raise ValueError("need one rng per oracle")
    for o in oracles:
        _check_oracle(group, o)
    start = time.perf_counter()
    q0 = [o.query_count for o in oracles]
    h = iteration_bound(group, epsilon, known_len_k)
    layout = RegisterLayout.for_groups(group, oracles[0].codomain) if oracles else None
    measured: list[list[GroupElement]] = [[] for _ in oracles]
    for _ in range(h if oracles else 0):
        # every trial runs the same circuit: simulate it once, charge every oracle
        batch = StateBatch.basis(layout, 1)
        batch.A([list(oracles)])
        probs = batch.marginals()
        _check_norms(probs, batch)
        shared = np.zeros(len(oracles), dtype=np.int64)
        for b, idx in enumerate(sample_columns(probs[:, shared], rngs)):
            measured[b].append(GroupElement(group.from_index(int(idx)), group))
    elapsed = (time.perf_counter() - start) / max(len(oracles), 1)
    reports = []
    for b, o in enumerate(oracles):
        final = span(group, measured[b])
        recovered = orthogonal(final)
        reports.append(
            RunReport(
                recovered=recovered,
                iterations=h,
                planned_iterations=h,
                oracle_queries=o.query_count - q0[b],
                measured=measured[b],
                success=_success(o, recovered),
                wall_time=elapsed,
                accepted=list(measured[b]),
                final_span=final,
            )
        )
    return reports


def _check_norms(probs: np.ndarray, batch: StateBatch) -> None:
    totals = probs.sum(axis=0)
    drift = np.flatnonzero(np.abs(totals - 1.0) > NORM_DRIFT_LIMIT)
    if len(drift):
        b = int(drift[0])
        raise IntegrityError(f"state norm drifted to {totals[b]!r}", dump_state(batch.member(b)))


def _diagnostics(probs: np.ndarray, inside: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per column: mass on the marked set, and max deviation from uniform on the rest of the support."""
    bad = np.where(inside, probs, 0.0).sum(axis=0)
    good = ~inside & (probs > ELIMINATION_TOL)
    count = np.maximum(good.sum(axis=0), 1)
    mean = np.where(good, probs, 0.0).sum(axis=0) / count
    dev = np.where(good, np.abs(probs - mean[None, :]), 0.0).max(axis=0)
    return bad, dev


Observer = Callable[[int, StepTrace, np.ndarray], None]


def run_exact(
    group: GroupSpec,
    o: HiddenOracle,
    order_k: int,
    rng: np.random.Generator,
    observer: Observer | None = None,
    schedule: str = "chain",
) -> RunReport:
    """Recover ``K`` with certainty in ``len(G) - len(K)`` amplified iterations.

    Each measured ``t`` is outside the current span ``T``. With the default
    ``"chain"`` schedule the accepted element is the multiple of ``t`` whose
    order modulo ``T`` is prime, so ``|T|`` grows by one prime factor per
    iteration and exactly ``len(G) - len(K)`` iterations are needed. The
    ``"greedy"`` schedule adds ``t`` itself and stops early once ``T`` fills
    ``K^perp``.

    ``observer(trial, trace, marginal)`` sees the first-register distribution
    just before each measurement.
    """
    return run_exact_trials(group, [o], order_k, [rng], observer, schedule)[0]


def run_exact_trials(
    group: GroupSpec,
    oracles: Sequence[HiddenOracle],
    order_k: int,
    rngs: Sequence[np.random.Generator],
    observer: Observer | None = None,
    schedule: str = "chain",
) -> list[RunReport]:
    """Independent runs of :func:`run_exact`, one per (oracle, rng) pair, simulated in lockstep.

    Every member keeps its own span, phases, measurements and query counter;
    results match running each member alone with the same generator.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}; expected one of {SCHEDULES}")
    if len(oracles) != len(rngs):
        raise ValueError("need one rng per oracle")
    for o in oracles:
        _check_oracle(group, o)
    if order_k < 1 or group.order % order_k:
        raise GroupError(f"|K| = {order_k} does not divide |G| = {group.order}")
    start = time.perf_counter()
    n = len(oracles)
    q0 = [o.query_count for o in oracles]
    h = chain_length(group) - chain_length_of_order(order_k)
    target = group.order // order_k
    layout = RegisterLayout.for_groups(group, oracles[0].codomain) if n else None
    current = [trivial(group)] * n
    measured: list[list[GroupElement]] = [[] for _ in range(n)]
    accepted: list[list[GroupElement]] = [[] for _ in range(n)]
    steps: list[list[StepTrace]] = [[] for _ in range(n)]
    done = [0] * n
    for i in range(1, h + 1):
        active = [b for b in range(n) if current[b].order != target]
        if not active:
            break
        # trials with the same span run the same circuit; simulate each circuit once
        sharing: dict[Subgroup, list[int]] = {}
        for b in active:
            sharing.setdefault(current[b], []).append(b)
        marked = list(sharing)
        riders = [[oracles[b] for b in sharing[t]] for t in marked]
        slot_of = {t: u for u, t in enumerate(marked)}
        slot = np.array([slot_of[current[b]] for b in active], dtype=np.int64)
        params = [qaa_phase(1 - t.order * order_k / group.order) for t in marked]
        phis = np.array([p.phi for p in params])
        batch = StateBatch.basis(layout, len(marked))
        batch.A(riders)
        batch.Q(riders, phis, marked)
        probs = batch.marginals()
        _check_norms(probs, batch)
        inside = np.stack([t.membership_mask() for t in marked], axis=1)
        bad, dev = _diagnostics(probs, inside)
        picks = sample_columns(probs[:, slot], [rngs[b] for b in active])
        for j, b in enumerate(active):
            u = slot[j]
            p = probs[:, u]
            t = GroupElement(group.from_index(int(picks[j])), group)
            if inside[picks[j], u]:
                raise IntegrityError(
                    f"iteration {i}: measured {t.coords} inside span of order {marked[u].order} (bad mass {bad[u]:.3e})",
                    dump_state(batch.member(u)),
                )
            a = prime_step(t, marked[u]) if schedule == "chain" else t
            nxt = marked[u].extend(a.coords)
            if nxt.order <= marked[u].order:
                raise IntegrityError(f"iteration {i}: span did not grow", dump_state(batch.member(u)))
            trace = StepTrace(
                i, marked[u].order, params[u].b, params[u].phi, float(bad[u]), float(dev[u]), t, a, marked[u]
            )
            if observer is not None:
                observer(b, trace, p)
            measured[b].append(t)
            accepted[b].append(a)
            steps[b].append(trace)
            current[b] = nxt
            done[b] = i
    elapsed = (time.perf_counter() - start) / max(n, 1)
    reports = []
    for b, o in enumerate(oracles):
        recovered = orthogonal(current[b])
        reports.append(
            RunReport(
                recovered=recovered,
                iterations=done[b],
                planned_iterations=h,
                oracle_queries=o.query_count - q0[b],
                measured=measured[b],
                success=_success(o, recovered),
                wall_time=elapsed,
                accepted=accepted[b],
                steps=steps[b],
                final_span=current[b],
            )
        )
    return reports
