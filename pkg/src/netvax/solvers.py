"""Allocation policies over a compiled objective context.

All solvers are deterministic for fixed inputs (the random baseline for a
fixed seed).  Ties in the greedy argmax, within 1e-12, break toward the
lowest unit index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .epidemic import GROUP2
from .objective import Allocation, ObjectiveContext, objective_value

__all__ = [
    "ENUMERATION_BUDGET",
    "BudgetError",
    "SolverResult",
    "RandomAssignmentSummary",
    "greedy_capacity",
    "greedy_targeting",
    "brute_force",
    "random_assignment",
    "twni",
    "greedy_factor",
    "iter_random_subsets",
]

ENUMERATION_BUDGET = 10**8
_TIE_TOL = 1e-12
_DENSE_LIMIT = 4096


class BudgetError(RuntimeError):
    """Raised when brute-force enumeration would exceed the subset budget."""


@dataclass(frozen=True)
class SolverResult:
    """Outcome of one solver run.

    f_value is objective_value(ctx, allocation) recomputed at the end, so it
    agrees exactly with a direct evaluation; welfare adds the cached constant.
    gain_trace records (unit, marginal gain) per greedy round and is empty
    for non-incremental policies.
    """

    allocation: Allocation
    f_value: float
    welfare: float
    rounds: int
    gain_trace: tuple[tuple[int, float], ...] = ()


@dataclass(frozen=True)
class RandomAssignmentSummary:
    """Monte Carlo summary of uniformly random size-d allocations."""

    mean_f: float
    sd_f: float
    mean_welfare: float
    sd_welfare: float
    draws: int
    capacity: int


def _finish(ctx: ObjectiveContext, alloc: Allocation, rounds: int,
            trace: Sequence[tuple[int, float]] = ()) -> SolverResult:
    f = objective_value(ctx, alloc)
    return SolverResult(alloc, f, f + ctx.welfare_constant, rounds, tuple(trace))


def _pick(gains: np.ndarray, feasible: np.ndarray) -> int:
    """Lowest-index unit whose gain is within the tie window of the best."""
    masked = np.where(feasible, gains, -np.inf)
    best = masked.max()
    return int(np.nonzero(feasible & (gains >= best - _TIE_TOL))[0][0])


def greedy_capacity(ctx: ObjectiveContext, d: int) -> SolverResult:
    """Standard greedy under the cardinality budget d.

    Runs exactly min(d, n) rounds; marginal gains are maintained
    incrementally, so each round costs an argmax plus a neighbor update.
    The value is at least (1 - (1 - 1/d)^d) of the optimum.
    """
    if d < 1:
        raise ValueError(f"capacity must be >= 1, got {d}")
    n = ctx.n_units
    gains = ctx.initial_gains()
    active = np.ones(n, dtype=bool)
    chosen: list[int] = []
    trace: list[tuple[int, float]] = []
    for _ in range(min(d, n)):
        u = _pick(gains, active)
        trace.append((u, float(gains[u])))
        chosen.append(u)
        active[u] = False
        cols, vals = ctx.sym_row(u)
        gains[cols] += vals
    alloc = Allocation(frozenset(chosen), capacity=d)
    return _finish(ctx, alloc, len(chosen), trace)


def greedy_targeting(ctx: ObjectiveContext, d: int, d1: int, d2: int,
                     groups: np.ndarray) -> SolverResult:
    """Greedy under the budget d plus per-group caps d1 (group 1), d2 (group 2).

    Each round adds the best-gain unit whose group cap is still open, which
    matches scanning candidates in decreasing-gain order and taking the first
    feasible one.  Stops early once no feasible candidate remains.  The value
    is at least half the constrained optimum.
    """
    for name, val in (("d", d), ("d1", d1), ("d2", d2)):
        if val < 0:
            raise ValueError(f"{name} must be >= 0, got {val}")
    groups = np.asarray(groups)
    n = ctx.n_units
    if groups.shape != (n,):
        raise ValueError("groups must have one label per unit")
    gains = ctx.initial_gains()
    active = np.ones(n, dtype=bool)
    caps = [d1, d2]
    taken = [0, 0]
    chosen: list[int] = []
    trace: list[tuple[int, float]] = []
    while len(chosen) < min(d, n):
        feasible = active & (
            ((groups == 0) & (taken[0] < caps[0])) |
            ((groups == 1) & (taken[1] < caps[1])))
        if not feasible.any():
            break
        u = _pick(gains, feasible)
        trace.append((u, float(gains[u])))
        chosen.append(u)
        taken[int(groups[u])] += 1
        active[u] = False
        cols, vals = ctx.sym_row(u)
        gains[cols] += vals
    alloc = Allocation(frozenset(chosen), capacity=d, targeting=(d1, d2))
    return _finish(ctx, alloc, len(chosen), trace)


def _combo_chunks(n: int, k: int, chunk: int) -> Iterator[np.ndarray]:
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64)


def brute_force(ctx: ObjectiveContext, d: int) -> SolverResult:
    """Exhaustive search over all allocations of size min(d, n).

    Enumerates subsets in lexicographic order and keeps the first maximizer.
    Refuses instances whose subset count exceeds ENUMERATION_BUDGET.
    """
    if d < 0:
        raise ValueError(f"capacity must be >= 0, got {d}")
    n = ctx.n_units
    k = min(d, n)
    if k == 0:
        return _finish(ctx, Allocation.empty(d), rounds=0)
    count = math.comb(n, k)
    if count > ENUMERATION_BUDGET:
        raise BudgetError(
            f"C({n},{k}) = {count} subsets exceeds the enumeration budget "
            f"of {ENUMERATION_BUDGET}")

    base = ctx.initial_gains()
    if k == 1:
        best_idx = int(np.argmax(base))
        alloc = Allocation(frozenset([best_idx]), capacity=d)
        return _finish(ctx, alloc, rounds=count)
    if n > _DENSE_LIMIT:
        raise BudgetError(
            f"C({n},{k}) = {count} is within budget but pairwise evaluation "
            f"is limited to {_DENSE_LIMIT} units")

    pair = ctx.pairwise_dense()
    best_val = -np.inf
    best: Optional[np.ndarray] = None
    chunk = max(1, 2_000_000 // (k * k))
    for combos in _combo_chunks(n, k, chunk):
        vals = base[combos].sum(axis=1)
        vals += 0.5 * pair[combos[:, :, None], combos[:, None, :]].sum(axis=(1, 2))
        local = int(np.argmax(vals))
        if vals[local] > best_val:
            best_val = float(vals[local])
            best = combos[local]
    assert best is not None
    alloc = Allocation(frozenset(int(u) for u in best), capacity=d)
    return _finish(ctx, alloc, rounds=count)


def _batch_values(ctx: ObjectiveContext, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Objective values for a block of size-d subsets given as an (m, d)
    index array; also returns the (m, n) membership matrix for reuse."""
    m = idx.shape[0]
    member = np.zeros((m, ctx.n_units))
    member[np.arange(m)[:, None], idx] = 1.0
    lin = ctx.initial_gains()[idx].sum(axis=1)
    # _sym is symmetric, so (member @ _sym) == (_sym @ member.T).T
    quad = 0.5 * ((ctx._sym @ member.T).T * member).sum(axis=1)
    return lin + quad, member


def iter_random_subsets(seed: int, n: int, d: int, draws: int,
                        chunk: int = 2000) -> Iterator[np.ndarray]:
    """Yield uniformly random size-d subsets of range(n) in (m, d) blocks."""
    if not 0 < d <= n:
        raise ValueError(f"subset size must lie in [1, {n}], got {d}")
    rng = np.random.default_rng(seed)
    remaining = draws
    while remaining > 0:
        m = min(chunk, remaining)
        keys = rng.random((m, n))
        if d == n:
            yield np.tile(np.arange(n, dtype=np.int64), (m, 1))
        else:
            yield np.argpartition(keys, d, axis=1)[:, :d].astype(np.int64)
        remaining -= m


def random_assignment(ctx: ObjectiveContext, d: int, draws: int,
                      seed: int) -> RandomAssignmentSummary:
    """Monte Carlo baseline: mean and sd of F and welfare over uniformly
    random size-d allocations."""
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    n = ctx.n_units
    if not 0 < d <= n:
        raise ValueError(f"capacity must lie in [1, {n}], got {d}")
    values = np.empty(draws)
    pos = 0
    for idx in iter_random_subsets(seed, n, d, draws):
        chunk_vals, _ = _batch_values(ctx, idx)
        values[pos:pos + idx.shape[0]] = chunk_vals
        pos += idx.shape[0]
    mean_f = float(values.mean())
    sd_f = float(values.std(ddof=1)) if draws > 1 else 0.0
    return RandomAssignmentSummary(
        mean_f=mean_f, sd_f=sd_f,
        mean_welfare=mean_f + ctx.welfare_constant, sd_welfare=sd_f,
        draws=draws, capacity=d)


def twni(ctx: ObjectiveContext, d: int, groups: np.ndarray,
         priority_group: int = GROUP2) -> SolverResult:
    """Targeting With No network Information: fill the priority group in
    ascending unit order, then spill into the other group, up to d doses."""
    if d < 0:
        raise ValueError(f"capacity must be >= 0, got {d}")
    groups = np.asarray(groups)
    n = ctx.n_units
    if groups.shape != (n,):
        raise ValueError("groups must have one label per unit")
    if priority_group not in (0, 1):
        raise ValueError(f"priority_group must be 0 or 1, got {priority_group}")
    first = np.nonzero(groups == priority_group)[0]
    rest = np.nonzero(groups != priority_group)[0]
    order = np.concatenate([first, rest])[:min(d, n)]
    alloc = Allocation(frozenset(int(u) for u in order), capacity=d)
    return _finish(ctx, alloc, rounds=len(alloc.selected))


def greedy_factor(d: int) -> float:
    """Approximation factor 1 - (1 - 1/d)^d of capacity-constrained greedy;
    decreases toward 1 - 1/e."""
    if d < 1:
        raise ValueError(f"capacity must be >= 1, got {d}")
    return 1.0 - (1.0 - 1.0 / d) ** d
