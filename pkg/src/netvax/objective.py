"""Expected-welfare objective over vaccine allocations.

``build_context`` compiles a network plus health states into the quadratic
set function

    F(V) = sum_{i,j in V} w_ij + sum_{i in V} c_i
           - sum_{j in V} colsum_j(w) - sum_{i in V} rowsum_i(w),

where ``c_i >= 0`` is the direct welfare gain from vaccinating unit i and
``w_ij <= 0`` is the (signed) spillover weight of infected neighbor j on
susceptible unit i.  F is normalized so F(empty) = 0; next-period expected
welfare under the linearized infection rate is F plus an
allocation-independent constant, cached on the context.

With every off-diagonal weight non-positive, F is monotone non-decreasing
and submodular, which is what the greedy solvers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import sparse

from .epidemic import GROUP1, Population, SirParams
from .graph import ContactGraph

__all__ = [
    "TOLERANCE",
    "Allocation",
    "ObjectiveContext",
    "SubmodularityReport",
    "build_context",
    "objective_value",
    "welfare_value",
    "marginal_gain",
    "check_submodular",
]

TOLERANCE = 1e-12


@dataclass(frozen=True)
class Allocation:
    """A set of vaccinated units plus the constraint it was chosen under.

    selected : the vaccinated units (any iterable; stored as a frozenset).
    capacity : total budget d; len(selected) <= capacity.
    targeting : optional per-group caps (d1, d2) recorded by targeting solvers.
    """

    selected: frozenset[int]
    capacity: int
    targeting: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected", frozenset(int(u) for u in self.selected))
        if self.capacity < 0:
            raise ValueError(f"capacity must be >= 0, got {self.capacity}")
        if len(self.selected) > self.capacity:
            raise ValueError(
                f"allocation of {len(self.selected)} units exceeds capacity {self.capacity}")
        if any(u < 0 for u in self.selected):
            raise ValueError("unit indices must be non-negative")

    @classmethod
    def empty(cls, capacity: int = 0) -> "Allocation":
        return cls(frozenset(), capacity)

    def sorted_units(self) -> np.ndarray:
        return np.fromiter(sorted(self.selected), dtype=np.int64, count=len(self.selected))

    def indicator(self, n_units: int) -> np.ndarray:
        """Boolean membership vector of length n_units."""
        out = np.zeros(n_units, dtype=bool)
        idx = self.sorted_units()
        if idx.size and idx[-1] >= n_units:
            raise ValueError("allocation contains a unit outside the population")
        out[idx] = True
        return out


class ObjectiveContext:
    """Compiled coefficients of the set function F for one instance.

    direct_gain : per-unit non-negative linear coefficients c_i.
    spill_rows/spill_cols/spill_vals : COO triplets of the spillover weights
        w_ij (row = exposed unit, col = infecting neighbor).  Both
        orientations of an edge are stored independently when both apply.
    welfare_constant : next-period expected welfare minus F, constant in the
        allocation under the linearized infection rate.

    The constructor accepts arbitrary weight values so diagnostic code can
    probe broken instances; ``build_context`` is the validated path.
    """

    def __init__(self, n_units: int, direct_gain: np.ndarray,
                 spill_rows: np.ndarray, spill_cols: np.ndarray,
                 spill_vals: np.ndarray, welfare_constant: float) -> None:
        n_units = int(n_units)
        if n_units < 1:
            raise ValueError(f"n_units must be >= 1, got {n_units}")
        direct_gain = np.asarray(direct_gain, dtype=float)
        if direct_gain.shape != (n_units,):
            raise ValueError("direct_gain must have one entry per unit")
        rows = np.asarray(spill_rows, dtype=np.int64)
        cols = np.asarray(spill_cols, dtype=np.int64)
        vals = np.asarray(spill_vals, dtype=float)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise ValueError("spill triplets must be parallel 1-D arrays")
        if rows.size and (rows.min() < 0 or rows.max() >= n_units
                          or cols.min() < 0 or cols.max() >= n_units):
            raise ValueError("spill indices out of range")
        if np.any(rows == cols):
            raise ValueError("spill weights must be off-diagonal")

        self.n_units = n_units
        self.direct_gain = direct_gain
        self.spill_rows = rows
        self.spill_cols = cols
        self.spill_vals = vals
        self.welfare_constant = float(welfare_constant)
        for arr in (direct_gain, rows, cols, vals):
            arr.setflags(write=False)

        w = sparse.csr_array((vals, (rows, cols)), shape=(n_units, n_units))
        self._w = w
        self._row_sums = np.asarray(w.sum(axis=1)).ravel()
        self._col_sums = np.asarray(w.sum(axis=0)).ravel()
        # symmetric combination w_ij + w_ji, used by the incremental gain math
        self._sym = (w + w.T).tocsr()
        self._base_gain = direct_gain - self._row_sums - self._col_sums

    def initial_gains(self) -> np.ndarray:
        """Marginal gain of each unit at the empty allocation (fresh copy)."""
        return self._base_gain.copy()

    def sym_row(self, unit: int) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero columns and values of row ``unit`` of w + w^T."""
        s = self._sym
        lo, hi = s.indptr[unit], s.indptr[unit + 1]
        return s.indices[lo:hi], s.data[lo:hi]

    def pairwise_dense(self) -> np.ndarray:
        """Dense w + w^T; intended for small instances (brute-force search)."""
        return self._sym.toarray()


def build_context(graph: ContactGraph, pop: Population, params: SirParams) -> ObjectiveContext:
    """Compile the objective coefficients for one instance.

    Every spillover weight comes out non-positive and every direct gain
    non-negative, so the resulting F is monotone submodular by construction.
    """
    n = graph.n_units
    if pop.n_units != n:
        raise ValueError(f"graph has {n} units but population has {pop.n_units}")

    sus = pop.susceptible
    inf = pop.infected
    rec = pop.recovered
    gamma_own = params.gamma[pop.group]
    denom = np.maximum(graph.degree, 1).astype(float)

    c = pop.weight * (1.0 - rec - gamma_own * inf - sus) / n

    rows_parts = []
    cols_parts = []
    vals_parts = []
    if graph.n_edges:
        e = graph.edges
        for a, b in ((e[:, 0], e[:, 1]), (e[:, 1], e[:, 0])):
            mask = sus[a] & inf[b]
            if mask.any():
                i = a[mask]
                j = b[mask]
                rate = params.beta[pop.group[i], pop.group[j]]
                rows_parts.append(i)
                cols_parts.append(j)
                vals_parts.append(-pop.weight[i] * rate / (denom[i] * n))
    if rows_parts:
        rows = np.concatenate(rows_parts)
        cols = np.concatenate(cols_parts)
        vals = np.concatenate(vals_parts)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0, dtype=float)

    const = welfare_value(graph, pop, params, Allocation.empty(), mode="linear")
    return ObjectiveContext(n, c, rows, cols, vals, const)


def objective_value(ctx: ObjectiveContext, alloc: Allocation) -> float:
    """Evaluate F at an allocation.  F(empty) = 0."""
    idx = alloc.sorted_units()
    if idx.size == 0:
        return 0.0
    if idx[-1] >= ctx.n_units:
        raise ValueError("allocation contains a unit outside the instance")
    val = float(ctx._base_gain[idx].sum())
    val += float(ctx._w[idx][:, idx].sum())
    return val


def welfare_value(graph: ContactGraph, pop: Population, params: SirParams,
                  alloc: Allocation, mode: str = "linear") -> float:
    """Weighted expected share of units healthy (susceptible, recovered, or
    vaccinated) next period, in [0, max weight].

    mode picks the infection-rate form; "exact" is a diagnostic and is never
    fed to the solvers.
    """
    if mode not in ("linear", "exact"):
        raise ValueError(f"mode must be 'linear' or 'exact', got {mode!r}")
    n = graph.n_units
    if pop.n_units != n:
        raise ValueError("graph and population sizes differ")
    v = alloc.indicator(n).astype(float)
    live = pop.infected & (v == 0.0)

    z = np.zeros(n)
    if graph.n_edges:
        e = graph.edges
        a, b = e[:, 0], e[:, 1]
        np.add.at(z, a, params.beta[pop.group[a], pop.group[b]] * live[b])
        np.add.at(z, b, params.beta[pop.group[b], pop.group[a]] * live[a])
        z /= np.maximum(graph.degree, 1)
    escape = (1.0 - z) if mode == "linear" else np.exp(-z)

    gamma_own = params.gamma[pop.group]
    healthy = v + (pop.recovered + gamma_own * pop.infected) * (1.0 - v) \
        + escape * pop.susceptible * (1.0 - v)
    return float((pop.weight * healthy).sum() / n)


def marginal_gain(ctx: ObjectiveContext, alloc: Allocation, candidate: int) -> float:
    """F(V + candidate) - F(V), computed incrementally in O(deg)."""
    if not 0 <= candidate < ctx.n_units:
        raise ValueError(f"candidate {candidate} out of range")
    if candidate in alloc.selected:
        raise ValueError(f"candidate {candidate} already allocated")
    gain = float(ctx._base_gain[candidate])
    cols, vals = ctx.sym_row(candidate)
    if cols.size and alloc.selected:
        inside = np.isin(cols, alloc.sorted_units())
        gain += float(vals[inside].sum())
    return gain


@dataclass(frozen=True)
class SubmodularityReport:
    passed: bool
    trials: int
    counterexample: Optional[dict] = None


def check_submodular(ctx: ObjectiveContext, trials: int = 1000,
                     seed: int = 0) -> SubmodularityReport:
    """Randomized check of diminishing returns and monotonicity.

    Samples ``trials`` chains A subset-of B with a candidate x outside B and
    verifies gain(A, x) >= gain(B, x) and F(A) <= F(B), both to TOLERANCE.
    Returns the first violation found, if any.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    n = ctx.n_units
    for t in range(trials):
        perm = rng.permutation(n)
        a_size = int(rng.integers(0, n))
        b_extra = int(rng.integers(0, n - a_size))
        a_units = perm[:a_size]
        b_units = perm[:a_size + b_extra]
        x = int(perm[a_size + b_extra])
        alloc_a = Allocation(frozenset(int(u) for u in a_units), capacity=n)
        alloc_b = Allocation(frozenset(int(u) for u in b_units), capacity=n)
        gain_a = marginal_gain(ctx, alloc_a, x)
        gain_b = marginal_gain(ctx, alloc_b, x)
        if gain_a < gain_b - TOLERANCE:
            return SubmodularityReport(False, t + 1, {
                "property": "diminishing_returns",
                "small": sorted(int(u) for u in a_units),
                "large": sorted(int(u) for u in b_units),
                "candidate": x,
                "gap": gain_b - gain_a,
            })
        f_a = objective_value(ctx, alloc_a)
        f_b = objective_value(ctx, alloc_b)
        if f_a > f_b + TOLERANCE:
            return SubmodularityReport(False, t + 1, {
                "property": "monotonicity",
                "small": sorted(int(u) for u in a_units),
                "large": sorted(int(u) for u in b_units),
                "candidate": x,
                "gap": f_a - f_b,
            })
    return SubmodularityReport(True, trials, None)
