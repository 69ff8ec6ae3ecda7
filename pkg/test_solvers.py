"""
测试求解器：停止规则、参数校验、确定性、最优子图概率记录与基线
"""
import pytest

import solvers
from automaton import Reinforcement
from edla import DeadEndError
from graph_core import UnreachableError, is_spanning_tree, load_graph, load_graph_file
from solvers import (
    ConfigError, SolverConfig, SolverError, solve, solve_dla_baseline, solve_edla,
    solve_la_colony_baseline, standard_sampling_cost,
)

GRAPH2_OPTIMUM = (1, 4, 12, 14, 15)


@pytest.fixture(scope='module')
def graph2():
    return load_graph_file('graph2')


@pytest.fixture(scope='module')
def alex1a():
    return load_graph_file('alex1a')


def _sspp(**kwargs):
    params = dict(problem='sspp', source=1, dest=15, seed=3)
    params.update(kwargs)
    return SolverConfig(**params)


def test_zero_iteration_limit_stops_immediately(graph2):
    record = solve(graph2, _sspp(max_iterations=0))
    assert not record.converged
    assert record.iterations == 0 and record.samples == 0
    assert record.final_subgraph is None and record.final_solution is None


@pytest.mark.parametrize('kwargs', [
    {'problem': 'smstp', 'algorithm': 'dla'},
    {'problem': 'sspp', 'algorithm': 'la-colony', 'source': 1, 'dest': 15},
    {'problem': 'sspp', 'learning_rate': 1.5, 'source': 1, 'dest': 15},
    {'problem': 'sspp', 'source': 1},
    {'problem': 'sspp', 'source': 1, 'dest': 16},
    {'problem': 'sspp', 'source': 1, 'dest': 15, 'penalty_rate': 0.2},
    {'problem': 'sspp', 'source': 1, 'dest': 15, 'prob_target': 0},
    {'problem': 'sspp', 'source': 1, 'dest': 15, 'threshold': 'median'},
    {'problem': 'tsp'},
    {'problem': 'sspp', 'source': 1, 'dest': 15, 'seed': -1},
])
def test_invalid_configs(graph2, kwargs):
    with pytest.raises(ConfigError):
        solve(graph2, SolverConfig(**kwargs))


def test_spanning_tree_needs_undirected_graph(graph2):
    with pytest.raises(ConfigError):
        solve(graph2, SolverConfig(problem='smstp'))


def test_default_threshold_per_algorithm():
    assert SolverConfig(problem='sspp').threshold_kind == 'variance'
    assert SolverConfig(problem='sspp', algorithm='dla').threshold_kind == 'dynamic'
    assert SolverConfig(problem='smstp', algorithm='la_colony_baseline').algorithm == 'la-colony'
    assert SolverConfig(problem='sspp', threshold='dynamic').threshold_kind == 'dynamic'


def test_unreachable_destination():
    g = load_graph("graph t directed 3\nedge 1 2 1:1\n")
    with pytest.raises(UnreachableError):
        solve(g, SolverConfig(problem='sspp', source=1, dest=3))


def test_same_seed_same_run(graph2):
    a = solve(graph2, _sspp(max_iterations=200, seed=11))
    b = solve(graph2, _sspp(max_iterations=200, seed=11))
    assert [(t.edges, t.weight, t.verdict) for t in a.trace] == \
           [(t.edges, t.weight, t.verdict) for t in b.trace]
    assert a.samples == b.samples
    assert a.optimal_series == b.optimal_series


def test_trace_bookkeeping(graph2):
    record = solve(graph2, _sspp(max_iterations=300))
    assert len(record.trace) == record.iterations == len(record.optimal_series)
    assert record.samples == sum(len(t.edges) for t in record.trace) + record.discarded_samples
    first = record.trace[0]
    assert first.verdict is Reinforcement.REWARD
    assert first.threshold_value is None
    # 第一次迭代记录的是构造前的最优路径概率
    assert first.q_optimal == pytest.approx(1 / 9)
    assert record.optimal_series[0] == pytest.approx(1 / 9)
    assert all(0 <= q <= 1 for q in record.optimal_series)


def test_stop_rule(graph2):
    record = solve(graph2, _sspp(max_iterations=2000, seed=5))
    if record.locked:
        assert record.final_probability > 0.9
        assert record.converged == record.found_optimum
    else:
        assert record.iterations == 2000
        assert record.final_probability <= 0.9


def test_keep_trace_off_still_records_optimal_series(graph2):
    record = solve(graph2, _sspp(max_iterations=50, keep_trace=False))
    assert record.trace == []
    assert len(record.optimal_series) == record.iterations


def test_converges_on_single_path_graph():
    g = load_graph("graph line directed 3\nedge 1 2 2:0.5 4:0.5\nedge 2 3 1:1\n")
    record = solve(g, SolverConfig(problem='sspp', source=1, dest=3))
    assert record.locked and record.converged
    assert record.iterations == 1 and record.samples == 2
    assert record.final_solution == (1, 2, 3)
    assert record.found_optimum


def test_locking_onto_a_worse_path_is_not_convergence():
    # 1→3 直连期望权重 10，经 2 绕行期望权重 2；a 很大时第一次奖励就锁定所选路径
    g = load_graph("graph detour directed 3\nedge 1 3 10:1\nedge 1 2 1:1\nedge 2 3 1:1\n")
    records = [solve(g, SolverConfig(problem='sspp', source=1, dest=3, learning_rate=0.99, seed=seed))
               for seed in range(20)]
    assert all(r.locked and r.iterations == 1 for r in records)
    assert all(r.converged == (r.final_solution == (1, 2, 3)) for r in records)
    assert any(not r.converged for r in records)
    assert any(r.converged for r in records)


def test_dla_baseline_builds_simple_paths(graph2):
    record = solve_dla_baseline(graph2, _sspp(algorithm='dla', max_iterations=300))
    assert record.iterations == 300 or record.locked
    for it in record.trace:
        nodes = [it.edges[0][0]] + [head for _, head in it.edges]
        assert nodes[0] == 1 and nodes[-1] == 15
        assert len(set(nodes)) == len(nodes)


def test_la_colony_baseline_builds_spanning_trees(alex1a):
    cfg = SolverConfig(problem='smstp', algorithm='la-colony', max_iterations=300, seed=2)
    record = solve_la_colony_baseline(alex1a, cfg)
    assert record.discarded_attempts == 0
    for it in record.trace:
        ids = [alex1a.edge_id(a, b) for a, b in it.edges]
        assert is_spanning_tree(alex1a, ids)


def test_edla_spanning_tree_iterations_are_trees(alex1a):
    record = solve_edla(alex1a, SolverConfig(problem='smstp', max_iterations=300, seed=4))
    for it in record.trace:
        ids = [alex1a.edge_id(a, b) for a, b in it.edges]
        assert is_spanning_tree(alex1a, ids)
    assert record.optimal_series[0] == pytest.approx(5 / 17280)


def test_baselines_reject_wrong_problem(graph2, alex1a):
    with pytest.raises(ConfigError):
        solve_dla_baseline(alex1a, SolverConfig(problem='smstp'))
    with pytest.raises(ConfigError):
        solve_la_colony_baseline(graph2, _sspp())


def test_consecutive_dead_ends_abort(graph2, monkeypatch):
    def always_dead(network, cfg, rng, observer=None):
        raise DeadEndError("stuck", 2)

    monkeypatch.setattr(solvers, 'construct_subgraph', always_dead)
    with pytest.raises(SolverError):
        solve(graph2, _sspp(max_dead_ends=3))


def test_record_to_dict(graph2):
    data = solve(graph2, _sspp(max_iterations=10)).to_dict()
    assert data['algorithm'] == 'edla' and data['threshold'] == 'variance'
    assert data['iterations'] == 10
    assert len(data['final_subgraph']) >= 1


def test_standard_sampling_on_deterministic_weights():
    g = load_graph("graph t directed 3\nedge 1 2 1:1\nedge 2 3 1:1\nedge 1 3 5:1\n")
    assert standard_sampling_cost(g, 1, 3, seed=0, stable_rounds=4) == 3 * 4


def test_standard_sampling_gives_up():
    g = load_graph("graph t directed 3\nedge 1 2 1:1\nedge 2 3 1:1\nedge 1 3 5:1\n")
    with pytest.raises(SolverError):
        standard_sampling_cost(g, 1, 3, seed=0, stable_rounds=10, max_rounds=5)
