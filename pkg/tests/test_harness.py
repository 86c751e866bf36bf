import hashlib
import io

import numpy as np
import pytest

from netvax import (
    GROUP1,
    GROUP2,
    PARAMETER_SETS,
    ConfigError,
    ExperimentConfig,
    RegretStudyConfig,
    SirParams,
    draw_instance,
    emit_csv,
    emit_regret_csv,
    parse_experiment_config,
    parse_regret_config,
    replicate_seed,
    run_experiment,
    run_property_checks,
    run_regret_study,
)

from _oracles import DEFAULT_DIST


def test_replicate_seed_matches_direct_hash():
    for root, index in ((0, 0), (7, 3), (123456, 999)):
        digest = hashlib.sha256(f"{root}:{index}".encode()).digest()
        want = int.from_bytes(digest[:8], "big")
        assert replicate_seed(root, index) == want


def test_replicate_seed_spreads():
    seeds = {replicate_seed(0, k) for k in range(200)}
    assert len(seeds) == 200
    assert replicate_seed(0, 1) != replicate_seed(1, 0)


def test_parameter_set_values():
    set1 = PARAMETER_SETS["set1"]
    assert set1.beta.tolist() == [[0.7, 0.5], [0.5, 0.6]]
    assert set1.gamma.tolist() == [0.1, 0.05]
    assert set1.delta.tolist() == [0.0, 0.0]
    set2 = PARAMETER_SETS["set2"]
    assert set2.beta.tolist() == [[0.8, 0.5], [0.7, 0.7]]
    assert set2.gamma.tolist() == [0.1, 0.025]


def test_draw_instance_deterministic():
    params = PARAMETER_SETS["set1"]
    a = draw_instance(30, 0.3, params, 0.4, DEFAULT_DIST, (1.0, 1.0), 5)
    b = draw_instance(30, 0.3, params, 0.4, DEFAULT_DIST, (1.0, 1.0), 5)
    c = draw_instance(30, 0.3, params, 0.4, DEFAULT_DIST, (1.0, 1.0), 6)
    assert a.graph == b.graph
    assert np.array_equal(a.pop.state0, b.pop.state0)
    assert np.array_equal(a.pop.group, b.pop.group)
    assert not (a.graph == c.graph and np.array_equal(a.pop.state0, c.pop.state0))


def test_draw_instance_marginals_within_three_sigma():
    params = PARAMETER_SETS["set1"]
    inst = draw_instance(2000, 0.01, params, 0.4, DEFAULT_DIST, (1.0, 1.0), 17)
    n_young = int((inst.pop.group == GROUP1).sum())
    # Binomial(2000, 0.4): sd ~ 21.9
    assert abs(n_young - 800) <= 66
    n_sus = int(inst.pop.susceptible.sum())
    n_inf = int(inst.pop.infected.sum())
    # Binomial(2000, 0.7): sd ~ 20.5; Binomial(2000, 0.2): sd ~ 17.9
    assert abs(n_sus - 1400) <= 62
    assert abs(n_inf - 400) <= 54


def test_draw_instance_group_weights():
    params = PARAMETER_SETS["set1"]
    inst = draw_instance(50, 0.2, params, 0.5, DEFAULT_DIST, (1.5, 1.0), 3)
    young = inst.pop.group == GROUP1
    assert np.all(inst.pop.weight[young] == 1.5)
    assert np.all(inst.pop.weight[~young] == 1.0)


def test_draw_instance_state_distribution_per_group():
    params = PARAMETER_SETS["set1"]
    dist = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    inst = draw_instance(200, 0.1, params, 0.5, dist, (1.0, 1.0), 9)
    young = inst.pop.group == GROUP1
    assert np.all(inst.pop.susceptible[young])
    assert np.all(inst.pop.infected[~young])


def test_parse_minimal_config_applies_defaults():
    config = parse_experiment_config("n_units=30\ndensity=0.2\n")
    assert config.n_units == 30
    assert config.density == 0.2
    assert config.n_networks == 100
    assert config.parameter_set == "set1"
    assert config.group1_probability == 0.4
    assert config.initial_states == ((0.7, 0.2, 0.1), (0.7, 0.2, 0.1))
    assert config.capacity_fractions == (0.07, 0.1, 0.2)
    assert config.weights == (1.0, 1.0)
    assert config.policies == ("greedy", "random", "twni")
    assert config.random_draws == 10000
    assert config.seed == 0
    assert config.mode == "linear"
    assert config.targeting_fractions is None


def test_parse_full_config():
    text = """
# comparison run
n_units = 40
density = 0.5
n_networks = 7
parameter_set = set2
group1_probability = 0.3
initial_states_g1 = 0.6,0.3,0.1
initial_states_g2 = 0.8,0.1,0.1
capacity_fractions = 0.05,0.15
weights = 1.5,1
policies = greedy,brute
random_draws = 500
seed = 11
mode = exact
targeting_fractions = 0.1,0.2
"""
    config = parse_experiment_config(text)
    assert config.n_networks == 7
    assert config.parameter_set == "set2"
    assert config.initial_states == ((0.6, 0.3, 0.1), (0.8, 0.1, 0.1))
    assert config.capacity_fractions == (0.05, 0.15)
    assert config.weights == (1.5, 1.0)
    assert config.policies == ("greedy", "brute")
    assert config.mode == "exact"
    assert config.targeting_fractions == (0.1, 0.2)


def test_parse_explicit_parameters():
    text = ("n_units=10\ndensity=0.5\n"
            "beta11=0.6\nbeta12=0.4\nbeta21=0.3\nbeta22=0.5\n"
            "gamma1=0.2\ngamma2=0.1\ndelta1=0.05\ndelta2=0.0\n")
    config = parse_experiment_config(text)
    params = config.params()
    assert isinstance(config.parameter_set, SirParams)
    assert params.beta.tolist() == [[0.6, 0.4], [0.3, 0.5]]
    assert params.gamma.tolist() == [0.2, 0.1]
    assert params.delta.tolist() == [0.05, 0.0]


def test_parse_delta_override_keeps_preset_rates():
    config = parse_experiment_config(
        "n_units=10\ndensity=0.5\nparameter_set=set2\ndelta2=0.01\n")
    params = config.params()
    assert params.beta.tolist() == [[0.8, 0.5], [0.7, 0.7]]
    assert params.delta.tolist() == [0.0, 0.01]


def test_parse_errors_name_the_problem():
    with pytest.raises(ConfigError, match="missing required config key 'n_units'"):
        parse_experiment_config("density=0.5\n")
    with pytest.raises(ConfigError, match="unknown config key 'n' at line 1"):
        parse_experiment_config("n=10\ndensity=0.5\n")
    with pytest.raises(ConfigError, match="duplicate config key 'density' at line 3"):
        parse_experiment_config("n_units=10\ndensity=0.5\ndensity=0.6\n")
    with pytest.raises(ConfigError, match="expected key=value at line 2"):
        parse_experiment_config("n_units=10\ndensity\n")
    with pytest.raises(ConfigError, match="n_units must be an integer"):
        parse_experiment_config("n_units=ten\ndensity=0.5\n")
    with pytest.raises(ConfigError, match="incomplete"):
        parse_experiment_config("n_units=10\ndensity=0.5\nbeta11=0.5\n")
    with pytest.raises(ConfigError, match="unknown parameter set"):
        parse_experiment_config("n_units=10\ndensity=0.5\nparameter_set=set3\n")
    with pytest.raises(ConfigError, match="unknown policy"):
        parse_experiment_config("n_units=10\ndensity=0.5\npolicies=greedy,optimal\n")
    with pytest.raises(ConfigError, match="sum to 1"):
        parse_experiment_config("n_units=10\ndensity=0.5\ninitial_states_g1=0.5,0.2,0.1\n")
    with pytest.raises(ConfigError, match="targeting_fractions"):
        parse_experiment_config("n_units=10\ndensity=0.5\ntargeting_fractions=0.1\n")


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=0, density=0.5)
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=10, density=1.5)
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=10, density=0.5, capacity_fractions=())
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=10, density=0.5, capacity_fractions=(0.0,))
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=10, density=0.5, policies=("optimal",))
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=10, density=0.5, mode="both")
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=10, density=0.5, weights=(1.0, -1.0))
    with pytest.raises(ConfigError):
        ExperimentConfig(n_units=10, density=0.5, random_draws=0)


def tiny_config(**kw):
    base = dict(n_units=12, density=0.5, n_networks=3,
                capacity_fractions=(0.1, 0.25), random_draws=200, seed=4)
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_experiment_greedy_matches_brute():
    rows = run_experiment(tiny_config(policies=("greedy", "brute")))
    by_key = {(r.policy, r.capacity_fraction): r for r in rows}
    for frac in (0.1, 0.25):
        g = by_key[("greedy", frac)]
        b = by_key[("brute", frac)]
        # values agree; the chosen sets may differ when optima tie
        assert abs(g.mean_f - b.mean_f) < 1e-12
        assert abs(g.mean_welfare - b.mean_welfare) < 1e-12


def test_run_experiment_rows_sorted_and_complete():
    config = tiny_config(policies=("twni", "greedy", "random"))
    rows = run_experiment(config)
    keys = [(r.policy, r.capacity_fraction) for r in rows]
    assert keys == sorted(keys)
    assert len(rows) == 6
    for row in rows:
        assert row.sd_welfare >= 0.0
        assert 0.0 <= row.pct_young_vaccinated <= 100.0
        assert row.runtime_ms >= 0.0


def test_run_experiment_deterministic_up_to_runtime():
    config = tiny_config(policies=("greedy", "random", "twni"))

    def rendered(rows):
        sink = io.StringIO()
        emit_csv(rows, sink)
        lines = sink.getvalue().splitlines()
        return [line.rsplit(",", 1)[0] for line in lines]

    assert rendered(run_experiment(config)) == rendered(run_experiment(config))


def test_run_experiment_welfare_increases_with_capacity():
    config = ExperimentConfig(n_units=60, density=0.3, n_networks=2,
                              capacity_fractions=(0.05, 0.1, 0.2),
                              policies=("greedy",), seed=2)
    rows = run_experiment(config)
    welfare = [r.mean_welfare for r in rows]
    assert welfare[0] < welfare[1] < welfare[2]


def test_run_experiment_random_pct_is_group_share():
    config = tiny_config(policies=("random",), n_networks=2)
    rows = run_experiment(config)
    # analytic share of group 1 in the drawn populations, not a sample mean
    for row in rows:
        assert 0.0 <= row.pct_young_vaccinated <= 100.0
    assert rows[0].pct_young_vaccinated == rows[1].pct_young_vaccinated


def test_run_experiment_all_group1_population():
    config = tiny_config(policies=("greedy", "twni", "random"),
                         group1_probability=1.0, n_networks=2)
    rows = run_experiment(config)
    for row in rows:
        assert row.pct_young_vaccinated == 100.0


def test_exact_mode_keeps_objective_and_lifts_welfare():
    kw = dict(policies=("greedy", "random", "twni"), n_networks=2, seed=9)
    linear = {(r.policy, r.capacity_fraction): r
              for r in run_experiment(tiny_config(**kw))}
    exact = {(r.policy, r.capacity_fraction): r
             for r in run_experiment(tiny_config(mode="exact", **kw))}
    assert linear.keys() == exact.keys()
    for key in linear:
        # the solvers and the f column never see the exact-rate welfare
        assert linear[key].mean_f == exact[key].mean_f
        # exp(-z) >= 1 - z pointwise, so the exact welfare dominates
        assert exact[key].mean_welfare >= linear[key].mean_welfare - 1e-12


def test_emit_csv_format():
    rows = run_experiment(tiny_config(policies=("greedy",), n_networks=2))
    sink = io.StringIO()
    emit_csv(rows, sink)
    lines = sink.getvalue().splitlines()
    assert lines[0] == ("policy,capacity_fraction,mean_welfare,sd_welfare,"
                        "mean_f,pct_young_vaccinated,runtime_ms")
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "greedy"
    assert first[1] == "0.1"
    assert len(first[2].split(".")[1]) == 6
    assert len(first[5].split(".")[1]) == 2
    with pytest.raises(ValueError):
        emit_csv([], io.StringIO())


def test_regret_config_parsing():
    text = ("n_units=14\ndensity=0.5\nn_networks=1\nseed=3\n"
            "regret_capacity=2\nregret_n_grid=50,200\n"
            "regret_replications=10\nregret_use_brute=false\n")
    study = parse_regret_config(text)
    assert study.capacity == 2
    assert study.n_grid == (50, 200)
    assert study.replications == 10
    assert not study.use_brute
    assert study.experiment.n_units == 14
    with pytest.raises(ConfigError, match="regret_use_brute"):
        parse_regret_config("n_units=10\ndensity=0.5\nregret_use_brute=maybe\n")
    with pytest.raises(ConfigError):
        parse_regret_config("n_units=10\ndensity=0.5\nregret_capacity=0\n")
    with pytest.raises(ConfigError):
        parse_regret_config("n_units=10\ndensity=0.5\nregret_n_grid=\n")


def test_run_regret_study_small():
    study = RegretStudyConfig(
        experiment=ExperimentConfig(n_units=12, density=0.5, seed=6),
        capacity=2, n_grid=(100, 400), replications=12)
    rows = run_regret_study(study)
    assert [r.n_external for r in rows] == [100, 400]
    for row in rows:
        assert row.replications == 12
        assert row.capacity == 2
        gaps = (row.mean_estimation_gap + row.mean_optimization_gap
                + row.mean_evaluation_gap)
        assert abs(gaps - row.mean_total) < 1e-9
        assert row.mean_noise_gap >= abs(row.mean_total) - 1e-9
        assert abs(row.slack - (row.bound - row.mean_total)) < 1e-12
        assert row.mean_total <= row.bound
    # repeat run is identical
    again = run_regret_study(study)
    assert again == rows


def test_emit_regret_csv_format():
    study = RegretStudyConfig(
        experiment=ExperimentConfig(n_units=10, density=0.5, seed=1),
        capacity=2, n_grid=(100,), replications=5)
    rows = run_regret_study(study)
    sink = io.StringIO()
    emit_regret_csv(rows, sink)
    lines = sink.getvalue().splitlines()
    assert lines[0].startswith("n_external,replications,capacity,mean_total")
    assert lines[1].split(",")[0] == "100"
    with pytest.raises(ValueError):
        emit_regret_csv([], io.StringIO())


def test_run_property_checks_all_pass():
    results = run_property_checks(seed=0, trials=300)
    names = [r.name for r in results]
    assert "marginal_gain_consistency" in names
    assert "welfare_offset_constant" in names
    assert any(name.startswith("submodularity_density_") for name in names)
    assert any(name.startswith("mutation") or "detect" in name for name in names)
    for result in results:
        assert result.passed, f"{result.name}: {result.detail}"
