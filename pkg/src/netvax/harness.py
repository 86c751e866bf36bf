"""Simulation harness: seeded instance generation, policy comparisons over
network replicates, the estimation-noise regret study, and CSV emission.

Configs are flat ``key=value`` text files whose keys mirror the
ExperimentConfig field names; ``#`` starts a comment.  Replicate k of a run
with root seed s derives its seed as the first 8 bytes (big-endian) of
SHA-256("s:k"), so adding policies or capacities never perturbs the network
draws.
"""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, field, replace
from typing import IO, Optional, Sequence, Union

import numpy as np
from scipy import sparse

from .epidemic import (GROUP1, GROUP2, INFECTED, RECOVERED, SUSCEPTIBLE,
                       Population, SirParams)
from .graph import ContactGraph, erdos_renyi
from .objective import (Allocation, ObjectiveContext, build_context,
                        check_submodular, marginal_gain, objective_value,
                        welfare_value)
from .regret import EstimationNoiseModel, empirical_regret, sample_estimates
from .solvers import (RandomAssignmentSummary, SolverResult, _batch_values,
                      brute_force, greedy_capacity, greedy_factor,
                      greedy_targeting, iter_random_subsets,
                      random_assignment, twni)

__all__ = [
    "PARAMETER_SETS",
    "POLICIES",
    "CSV_HEADER",
    "REGRET_CSV_HEADER",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentRow",
    "RegretStudyConfig",
    "RegretStudyRow",
    "Instance",
    "CheckResult",
    "replicate_seed",
    "draw_instance",
    "run_experiment",
    "run_regret_study",
    "emit_csv",
    "emit_regret_csv",
    "parse_experiment_config",
    "parse_regret_config",
    "run_property_checks",
]

PARAMETER_SETS = {
    "set1": SirParams(beta=np.array([[0.7, 0.5], [0.5, 0.6]]),
                      gamma=np.array([0.1, 0.05])),
    "set2": SirParams(beta=np.array([[0.8, 0.5], [0.7, 0.7]]),
                      gamma=np.array([0.1, 0.025])),
}

POLICIES = ("greedy", "greedy_targeting", "brute", "random", "twni")

CSV_HEADER = ("policy", "capacity_fraction", "mean_welfare", "sd_welfare",
              "mean_f", "pct_young_vaccinated", "runtime_ms")

REGRET_CSV_HEADER = ("n_external", "replications", "capacity", "mean_total",
                     "mean_estimation_gap", "mean_optimization_gap",
                     "mean_evaluation_gap", "mean_noise_gap", "bound", "slack")


class ConfigError(ValueError):
    """Raised for unparseable or inconsistent experiment configuration."""


def replicate_seed(root_seed: int, index: int) -> int:
    """Stable per-replicate seed: first 8 bytes of SHA-256("root:index")."""
    digest = hashlib.sha256(f"{root_seed}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one policy-comparison experiment.

    parameter_set names a preset ("set1"/"set2") or carries explicit
    SirParams.  initial_states gives per-group probabilities over
    (susceptible, infected, recovered).  capacity_fractions are converted to
    budgets d = max(1, round(fraction * n_units)).  weights are the per-group
    welfare weights (group 1, group 2).  mode picks the welfare column's
    infection-rate form; the solvers always see the linear objective.
    """

    n_units: int
    density: float
    n_networks: int = 100
    parameter_set: Union[str, SirParams] = "set1"
    group1_probability: float = 0.4
    initial_states: tuple[tuple[float, float, float],
                          tuple[float, float, float]] = ((0.7, 0.2, 0.1),
                                                         (0.7, 0.2, 0.1))
    capacity_fractions: tuple[float, ...] = (0.07, 0.10, 0.20)
    weights: tuple[float, float] = (1.0, 1.0)
    policies: tuple[str, ...] = ("greedy", "random", "twni")
    random_draws: int = 10000
    seed: int = 0
    mode: str = "linear"
    targeting_fractions: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.n_units < 1:
            raise ConfigError(f"n_units must be >= 1, got {self.n_units}")
        if not 0.0 <= self.density <= 1.0:
            raise ConfigError(f"density must be in [0, 1], got {self.density}")
        if self.n_networks < 1:
            raise ConfigError(f"n_networks must be >= 1, got {self.n_networks}")
        if not 0.0 <= self.group1_probability <= 1.0:
            raise ConfigError("group1_probability must be in [0, 1]")
        for dist in self.initial_states:
            if len(dist) != 3 or any(p < 0 for p in dist):
                raise ConfigError("initial state distributions need three"
                                  " non-negative probabilities")
            if abs(sum(dist) - 1.0) > 1e-9:
                raise ConfigError(f"initial state distribution {dist} must sum to 1")
        if not self.capacity_fractions:
            raise ConfigError("at least one capacity fraction is required")
        for frac in self.capacity_fractions:
            if not 0.0 < frac <= 1.0:
                raise ConfigError(f"capacity fraction {frac} must lie in (0, 1]")
        if any(w < 0 for w in self.weights) or len(self.weights) != 2:
            raise ConfigError("weights must be two non-negative numbers")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        for pol in self.policies:
            if pol not in POLICIES:
                raise ConfigError(f"unknown policy {pol!r}; expected one of {POLICIES}")
        if self.random_draws < 1:
            raise ConfigError(f"random_draws must be >= 1, got {self.random_draws}")
        if self.mode not in ("linear", "exact"):
            raise ConfigError(f"mode must be 'linear' or 'exact', got {self.mode!r}")
        if isinstance(self.parameter_set, str) and self.parameter_set not in PARAMETER_SETS:
            raise ConfigError(f"unknown parameter set {self.parameter_set!r}")
        if self.targeting_fractions is not None:
            if len(self.targeting_fractions) != 2 or any(
                    f < 0 or f > 1 for f in self.targeting_fractions):
                raise ConfigError("targeting_fractions must be two values in [0, 1]")

    def params(self) -> SirParams:
        if isinstance(self.parameter_set, SirParams):
            return self.parameter_set
        return PARAMETER_SETS[self.parameter_set]


@dataclass(frozen=True)
class ExperimentRow:
    policy: str
    capacity_fraction: float
    mean_welfare: float
    sd_welfare: float
    mean_f: float
    pct_young_vaccinated: float
    runtime_ms: float


@dataclass(frozen=True)
class Instance:
    """One drawn replicate: network, health states, and compiled objective."""

    graph: ContactGraph
    pop: Population
    params: SirParams
    ctx: ObjectiveContext


def draw_instance(n_units: int, density: float, params: SirParams,
                  group1_probability: float,
                  initial_states: Sequence[Sequence[float]],
                  weights: Sequence[float], seed: int) -> Instance:
    """Draw a network, group labels, and health states, then compile."""
    rng = np.random.default_rng(seed)
    graph_seed = int(rng.integers(0, 2**63 - 1))
    graph = erdos_renyi(n_units, density, graph_seed)
    group = np.where(rng.random(n_units) < group1_probability,
                     GROUP1, GROUP2).astype(np.int8)
    dist = np.asarray(initial_states, dtype=float)[group]  # (n, 3), order S/I/R
    cum = np.cumsum(dist, axis=1)
    u = rng.random(n_units)
    state = (u[:, None] >= cum).sum(axis=1).astype(np.int8)
    state = np.minimum(state, RECOVERED)  # guard against rounding at u ~ 1
    weight = np.where(group == GROUP1, float(weights[0]), float(weights[1]))
    pop = Population(state0=state, group=group, weight=weight)
    return Instance(graph, pop, params, build_context(graph, pop, params))


def _capacity(fraction: float, n_units: int) -> int:
    return max(1, round(fraction * n_units))


def _pct_young(alloc: Allocation, group: np.ndarray) -> float:
    if not alloc.selected:
        return 0.0
    idx = alloc.sorted_units()
    young = int((group[idx] == GROUP1).sum())
    return 100.0 * young / idx.size


def _exposure_matrix(inst: Instance) -> sparse.csr_array:
    """B with B[i, j] = beta[g_i, g_j] * A_ij * I_j / deg_i, so the linear
    exposure of unit i under allocation v is (B @ (1 - v))_i."""
    graph, pop, params = inst.graph, inst.pop, inst.params
    n = graph.n_units
    rows, cols, vals = [], [], []
    if graph.n_edges:
        e = graph.edges
        denom = np.maximum(graph.degree, 1).astype(float)
        for a, b in ((e[:, 0], e[:, 1]), (e[:, 1], e[:, 0])):
            mask = pop.infected[b]
            if mask.any():
                i, j = a[mask], b[mask]
                rows.append(i)
                cols.append(j)
                vals.append(params.beta[pop.group[i], pop.group[j]] / denom[i])
    if rows:
        data = (np.concatenate(vals),
                (np.concatenate(rows), np.concatenate(cols)))
        return sparse.csr_array(data, shape=(n, n))
    return sparse.csr_array((n, n))


def _random_summary_exact(inst: Instance, d: int, draws: int, seed: int,
                          exposure: sparse.csr_array) -> RandomAssignmentSummary:
    """Random baseline with the welfare column evaluated in exact mode."""
    pop = inst.pop
    n = pop.n_units
    z_full = np.asarray(exposure.sum(axis=1)).ravel()
    gamma_own = inst.params.gamma[pop.group]
    nonsus_healthy = pop.weight * (pop.recovered + gamma_own * pop.infected)
    sus = pop.susceptible
    f_vals = np.empty(draws)
    w_vals = np.empty(draws)
    pos = 0
    for idx in iter_random_subsets(seed, n, d, draws):
        m = idx.shape[0]
        f_chunk, member = _batch_values(inst.ctx, idx)
        z = z_full[None, :] - (exposure @ member.T).T
        escape = ((1.0 - member[:, sus]) * np.exp(-z[:, sus])) @ pop.weight[sus]
        direct = member @ (pop.weight - nonsus_healthy)
        w_vals[pos:pos + m] = (nonsus_healthy.sum() + direct + escape) / n
        f_vals[pos:pos + m] = f_chunk
        pos += m
    sd_f = float(f_vals.std(ddof=1)) if draws > 1 else 0.0
    sd_w = float(w_vals.std(ddof=1)) if draws > 1 else 0.0
    return RandomAssignmentSummary(
        mean_f=float(f_vals.mean()), sd_f=sd_f,
        mean_welfare=float(w_vals.mean()), sd_welfare=sd_w,
        draws=draws, capacity=d)


def run_experiment(config: ExperimentConfig) -> list[ExperimentRow]:
    """Run every (policy, capacity fraction) cell over the network replicates.

    Per replicate all policies see the same instance; the random baseline's
    draw seed is derived from the replicate seed and the capacity index.
    Rows come back sorted by (policy, capacity fraction).
    """
    params = config.params()
    exact = config.mode == "exact"
    cells: dict[tuple[str, float], dict[str, list[float]]] = {
        (pol, frac): {"welfare": [], "f": [], "pct": [], "ms": []}
        for pol in config.policies for frac in config.capacity_fractions}

    for k in range(config.n_networks):
        seed_k = replicate_seed(config.seed, k)
        inst = draw_instance(config.n_units, config.density, params,
                             config.group1_probability, config.initial_states,
                             config.weights, seed_k)
        n = config.n_units
        n_young = int((inst.pop.group == GROUP1).sum())
        exposure = None
        if exact and "random" in config.policies:
            exposure = _exposure_matrix(inst)
        for ci, frac in enumerate(config.capacity_fractions):
            d = _capacity(frac, n)
            for pol in config.policies:
                cell = cells[(pol, frac)]
                start = time.perf_counter()
                if pol == "random":
                    rseed = replicate_seed(seed_k, 10_000 + ci)
                    if exact:
                        summary = _random_summary_exact(
                            inst, d, config.random_draws, rseed, exposure)
                    else:
                        summary = random_assignment(
                            inst.ctx, d, config.random_draws, rseed)
                    cell["welfare"].append(summary.mean_welfare)
                    cell["f"].append(summary.mean_f)
                    cell["pct"].append(100.0 * n_young / n)
                else:
                    if pol == "greedy":
                        res = greedy_capacity(inst.ctx, d)
                    elif pol == "brute":
                        res = brute_force(inst.ctx, d)
                    elif pol == "twni":
                        res = twni(inst.ctx, d, inst.pop.group)
                    elif pol == "greedy_targeting":
                        if config.targeting_fractions is not None:
                            d1 = round(config.targeting_fractions[0] * n)
                            d2 = round(config.targeting_fractions[1] * n)
                        else:
                            d1 = d2 = d
                        res = greedy_targeting(inst.ctx, d, d1, d2, inst.pop.group)
                    else:  # unreachable; config validates policy names
                        raise ConfigError(f"unknown policy {pol!r}")
                    welfare = res.welfare
                    if exact:
                        welfare = welfare_value(inst.graph, inst.pop, params,
                                                res.allocation, mode="exact")
                    cell["welfare"].append(welfare)
                    cell["f"].append(res.f_value)
                    cell["pct"].append(_pct_young(res.allocation, inst.pop.group))
                cell["ms"].append((time.perf_counter() - start) * 1000.0)

    rows = []
    for (pol, frac) in sorted(cells, key=lambda key: (key[0], key[1])):
        cell = cells[(pol, frac)]
        welfare = np.asarray(cell["welfare"])
        rows.append(ExperimentRow(
            policy=pol,
            capacity_fraction=frac,
            mean_welfare=float(welfare.mean()),
            sd_welfare=float(welfare.std(ddof=1)) if welfare.size > 1 else 0.0,
            mean_f=float(np.mean(cell["f"])),
            pct_young_vaccinated=float(np.mean(cell["pct"])),
            runtime_ms=float(np.sum(cell["ms"])),
        ))
    return rows


def emit_csv(rows: Sequence[ExperimentRow], sink: IO[str]) -> None:
    """Write experiment rows with the fixed header; welfare columns carry six
    decimal places.  Refuses an empty row list."""
    if not rows:
        raise ValueError("no experiment rows to emit")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([
            row.policy,
            f"{row.capacity_fraction:g}",
            f"{row.mean_welfare:.6f}",
            f"{row.sd_welfare:.6f}",
            f"{row.mean_f:.6f}",
            f"{row.pct_young_vaccinated:.2f}",
            f"{row.runtime_ms:.3f}",
        ])


@dataclass(frozen=True)
class RegretStudyConfig:
    """Noise study settings layered on top of a single drawn instance."""

    experiment: ExperimentConfig
    capacity: int = 3
    n_grid: tuple[int, ...] = (100, 1000, 10000)
    replications: int = 200
    use_brute: bool = True

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ConfigError(f"regret capacity must be >= 1, got {self.capacity}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("regret n grid must hold positive sample sizes")
        if self.replications < 1:
            raise ConfigError("regret replications must be >= 1")


@dataclass(frozen=True)
class RegretStudyRow:
    n_external: int
    replications: int
    capacity: int
    mean_total: float
    mean_estimation_gap: float
    mean_optimization_gap: float
    mean_evaluation_gap: float
    mean_noise_gap: float
    bound: float
    slack: float


def run_regret_study(config: RegretStudyConfig) -> list[RegretStudyRow]:
    """Sample estimation noise at each external sample size on one fixed
    instance and average the regret decomposition."""
    exp = config.experiment
    params = exp.params()
    inst = draw_instance(exp.n_units, exp.density, params,
                         exp.group1_probability, exp.initial_states,
                         exp.weights, replicate_seed(exp.seed, 0))
    rows = []
    for gi, n_external in enumerate(config.n_grid):
        noise = EstimationNoiseModel(n_external=n_external)
        totals, gap1s, gap2s, gap3s, noise_gaps = [], [], [], [], []
        bound = float("nan")
        for rep in range(config.replications):
            est_seed = replicate_seed(exp.seed, 1_000_000 + gi * config.replications + rep)
            est = sample_estimates(params, noise, est_seed)
            report = empirical_regret(inst.graph, inst.pop, params, est,
                                      config.capacity, use_brute=config.use_brute,
                                      n_external=n_external)
            totals.append(report.total)
            gap1s.append(report.estimation_gap)
            gap2s.append(report.optimization_gap)
            gap3s.append(report.evaluation_gap)
            noise_gaps.append(report.noise_gap)
            bound = report.bound
        rows.append(RegretStudyRow(
            n_external=n_external,
            replications=config.replications,
            capacity=config.capacity,
            mean_total=float(np.mean(totals)),
            mean_estimation_gap=float(np.mean(gap1s)),
            mean_optimization_gap=float(np.mean(gap2s)),
            mean_evaluation_gap=float(np.mean(gap3s)),
            mean_noise_gap=float(np.mean(noise_gaps)),
            bound=bound,
            slack=bound - float(np.mean(totals)),
        ))
    return rows


def emit_regret_csv(rows: Sequence[RegretStudyRow], sink: IO[str]) -> None:
    if not rows:
        raise ValueError("no regret rows to emit")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(REGRET_CSV_HEADER)
    for row in rows:
        writer.writerow([
            row.n_external, row.replications, row.capacity,
            f"{row.mean_total:.6f}", f"{row.mean_estimation_gap:.6f}",
            f"{row.mean_optimization_gap:.6f}", f"{row.mean_evaluation_gap:.6f}",
            f"{row.mean_noise_gap:.6f}", f"{row.bound:.6f}", f"{row.slack:.6f}",
        ])


_CONFIG_DEFAULT_TEXTS = {
    "n_networks": "100",
    "parameter_set": "set1",
    "group1_probability": "0.4",
    "initial_states_g1": "0.7,0.2,0.1",
    "initial_states_g2": "0.7,0.2,0.1",
    "capacity_fractions": "0.07,0.1,0.2",
    "weights": "1,1",
    "policies": "greedy,random,twni",
    "random_draws": "10000",
    "seed": "0",
    "mode": "linear",
}

_PARAM_KEYS = ("beta11", "beta12", "beta21", "beta22", "gamma1", "gamma2")
_REGRET_KEYS = ("regret_capacity", "regret_n_grid", "regret_replications",
                "regret_use_brute")
_KNOWN_KEYS = frozenset(
    ["n_units", "density", "targeting_fractions", "delta1", "delta2"]
    + list(_CONFIG_DEFAULT_TEXTS) + list(_PARAM_KEYS) + list(_REGRET_KEYS))


def _parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value at line {lineno}: {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r} at line {lineno}")
        if key in out:
            raise ConfigError(f"duplicate config key {key!r} at line {lineno}")
        out[key] = value
    return out


def _floats(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in value.split(",") if part.strip() != "")
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {value!r}") from None


def _triple(value: str) -> tuple[float, float, float]:
    parts = _floats(value)
    if len(parts) != 3:
        raise ConfigError(f"expected three probabilities, got {value!r}")
    return parts  # type: ignore[return-value]


def _int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}") from None


def _resolve_params(kv: dict[str, str]) -> Union[str, SirParams]:
    given = [key for key in _PARAM_KEYS if key in kv]
    deltas = [key for key in ("delta1", "delta2") if key in kv]
    if not given and not deltas:
        return kv.get("parameter_set", "set1")
    if given and len(given) != len(_PARAM_KEYS):
        missing = sorted(set(_PARAM_KEYS) - set(given))
        raise ConfigError(f"explicit parameters are incomplete; missing {missing}")
    if given:
        beta = np.array([[_float(kv["beta11"], "beta11"), _float(kv["beta12"], "beta12")],
                         [_float(kv["beta21"], "beta21"), _float(kv["beta22"], "beta22")]])
        gamma = np.array([_float(kv["gamma1"], "gamma1"), _float(kv["gamma2"], "gamma2")])
    else:
        base = PARAMETER_SETS[kv.get("parameter_set", "set1")]
        beta, gamma = base.beta.copy(), base.gamma.copy()
    delta = np.array([_float(kv.get("delta1", "0"), "delta1"),
                      _float(kv.get("delta2", "0"), "delta2")])
    try:
        return SirParams(beta=beta, gamma=gamma, delta=delta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_experiment_config(text: str) -> ExperimentConfig:
    """Build an ExperimentConfig from flat key=value text."""
    kv = _parse_kv(text)
    for required in ("n_units", "density"):
        if required not in kv:
            raise ConfigError(f"missing required config key {required!r}")
    merged = dict(_CONFIG_DEFAULT_TEXTS)
    merged.update(kv)
    if merged["parameter_set"] not in PARAMETER_SETS:
        raise ConfigError(f"unknown parameter set {merged['parameter_set']!r}")
    targeting = None
    if "targeting_fractions" in kv:
        parts = _floats(kv["targeting_fractions"])
        if len(parts) != 2:
            raise ConfigError("targeting_fractions needs exactly two values")
        targeting = (parts[0], parts[1])
    try:
        return ExperimentConfig(
            n_units=_int(merged["n_units"], "n_units"),
            density=_float(merged["density"], "density"),
            n_networks=_int(merged["n_networks"], "n_networks"),
            parameter_set=_resolve_params(kv),
            group1_probability=_float(merged["group1_probability"],
                                      "group1_probability"),
            initial_states=(_triple(merged["initial_states_g1"]),
                            _triple(merged["initial_states_g2"])),
            capacity_fractions=_floats(merged["capacity_fractions"]),
            weights=tuple(_floats(merged["weights"])),  # type: ignore[arg-type]
            policies=tuple(part.strip() for part in merged["policies"].split(",")
                           if part.strip()),
            random_draws=_int(merged["random_draws"], "random_draws"),
            seed=_int(merged["seed"], "seed"),
            mode=merged["mode"],
            targeting_fractions=targeting,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_regret_config(text: str) -> RegretStudyConfig:
    """Regret study settings share the experiment keys plus regret_* ones."""
    kv = _parse_kv(text)
    experiment = parse_experiment_config(text)
    use_brute_text = kv.get("regret_use_brute", "true").lower()
    if use_brute_text not in ("true", "false", "1", "0", "yes", "no"):
        raise ConfigError(f"regret_use_brute must be boolean, got {use_brute_text!r}")
    grid = kv.get("regret_n_grid", "100,1000,10000")
    try:
        n_grid = tuple(int(part) for part in grid.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"regret_n_grid must be integers, got {grid!r}") from None
    return RegretStudyConfig(
        experiment=experiment,
        capacity=_int(kv.get("regret_capacity", "3"), "regret_capacity"),
        n_grid=n_grid,
        replications=_int(kv.get("regret_replications", "200"),
                          "regret_replications"),
        use_brute=use_brute_text in ("true", "1", "yes"),
    )


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_instance(density: float, seed: int) -> Instance:
    return draw_instance(16, density, PARAMETER_SETS["set1"], 0.4,
                         ((0.7, 0.2, 0.1), (0.7, 0.2, 0.1)), (1.0, 1.0), seed)


def run_property_checks(seed: int = 0, trials: int = 1000) -> list[CheckResult]:
    """Structural invariants on seeded instances; used by the CLI check
    command and exercised directly in the test suite."""
    results = []
    rng = np.random.default_rng(seed)

    for density in (0.1, 0.5, 1.0):
        inst = _check_instance(density, replicate_seed(seed, int(density * 10)))
        report = check_submodular(inst.ctx, trials=trials, seed=seed)
        results.append(CheckResult(
            f"submodularity_density_{density:g}", report.passed,
            f"{report.trials} chain triples"))

    inst = _check_instance(0.5, replicate_seed(seed, 42))
    worst = 0.0
    for _ in range(200):
        size = int(rng.integers(0, inst.ctx.n_units))
        units = rng.permutation(inst.ctx.n_units)[:size]
        alloc = Allocation(frozenset(int(u) for u in units), capacity=inst.ctx.n_units)
        outside = [u for u in range(inst.ctx.n_units) if u not in alloc.selected]
        if not outside:
            continue
        x = int(rng.choice(outside))
        grown = Allocation(alloc.selected | {x}, capacity=inst.ctx.n_units)
        diff = objective_value(inst.ctx, grown) - objective_value(inst.ctx, alloc)
        worst = max(worst, abs(marginal_gain(inst.ctx, alloc, x) - diff))
    results.append(CheckResult("marginal_gain_consistency", worst <= 1e-12,
                               f"max deviation {worst:.3e}"))

    offsets = []
    for _ in range(100):
        size = int(rng.integers(0, inst.ctx.n_units + 1))
        units = rng.permutation(inst.ctx.n_units)[:size]
        alloc = Allocation(frozenset(int(u) for u in units), capacity=inst.ctx.n_units)
        w = welfare_value(inst.graph, inst.pop, inst.params, alloc, mode="linear")
        offsets.append(w - objective_value(inst.ctx, alloc))
    spread = max(offsets) - min(offsets)
    results.append(CheckResult("welfare_offset_constant", spread <= 1e-12,
                               f"offset spread {spread:.3e}"))

    if inst.ctx.spill_vals.size:
        flip = int(np.argmin(inst.ctx.spill_vals))  # most negative entry
        vals = inst.ctx.spill_vals.copy()
        vals[flip] = -vals[flip]
        broken = ObjectiveContext(inst.ctx.n_units, inst.ctx.direct_gain.copy(),
                                  inst.ctx.spill_rows.copy(),
                                  inst.ctx.spill_cols.copy(), vals,
                                  inst.ctx.welfare_constant)
        report = check_submodular(broken, trials=max(trials, 2000), seed=seed)
        results.append(CheckResult("mutation_detected", not report.passed,
                                   "flipped spillover weight caught"
                                   if not report.passed else
                                   "flipped spillover weight NOT caught"))

    small = draw_instance(12, 0.5, PARAMETER_SETS["set1"], 0.4,
                          ((0.7, 0.2, 0.1), (0.7, 0.2, 0.1)), (1.0, 1.0),
                          replicate_seed(seed, 7))
    greedy_res = greedy_capacity(small.ctx, 3)
    brute_res = brute_force(small.ctx, 3)
    lo = greedy_factor(3) * brute_res.f_value - 1e-12
    ok = lo <= greedy_res.f_value <= brute_res.f_value + 1e-12
    results.append(CheckResult(
        "greedy_guarantee_sandwich", ok,
        f"greedy {greedy_res.f_value:.6f} vs optimum {brute_res.f_value:.6f}"))
    return results
