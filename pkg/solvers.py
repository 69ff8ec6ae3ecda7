"""
问题级求解器：基于 eDLA 的随机最短路 (SSPP) 与随机最小生成树 (SMSTP)，
以及两个对比基线（纯 DLA 最短路、LA 群体生成树）
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from automaton import Reinforcement
from config import Config
from edla import (
    AutomataNetwork, DeadEndError, EdlaConfig, Selection, SubGraph,
    construct_subgraph, path_probability, reinforce, subgraph_probability, tree_probability,
)
from graph_core import (
    UnionFind, make_rng, oracle_min_spanning_tree, oracle_shortest_path,
    sample_edge, shortest_path_on_weights,
)
from logger import logger
from threshold import Direction, make_threshold

PROBLEMS = ('sspp', 'smstp')
ALGORITHMS = ('edla', 'dla', 'la-colony')
THRESHOLDS = ('dynamic', 'variance')

# 别名 → 规范名称
_ALGORITHM_ALIASES = {
    'dla_baseline': 'dla',
    'la_colony': 'la-colony',
    'la_colony_baseline': 'la-colony',
}


class ConfigError(ValueError):
    """求解参数不合法"""


class SolverError(RuntimeError):
    """求解过程无法继续"""


def normalize_algorithm(name):
    return _ALGORITHM_ALIASES.get(name, name)


@dataclass
class SolverConfig:
    """
    一次求解的全部参数

    threshold 为 None 时按算法取默认值：eDLA 使用方差感知阈值，基线使用动态阈值。
    """

    problem: str
    algorithm: str = 'edla'
    learning_rate: float = Config.DEFAULT_LEARNING_RATE
    source: Optional[int] = None
    dest: Optional[int] = None
    threshold: Optional[str] = None
    alpha_t: float = Config.THRESHOLD_ALPHA
    beta_t: float = Config.THRESHOLD_BETA
    mean_scale: float = Config.BOUND_MEAN_SCALE
    penalty_rate: float = 0.0
    max_iterations: int = Config.DEFAULT_MAX_ITERATIONS
    prob_target: float = Config.DEFAULT_PROB_TARGET
    seed: int = 0
    keep_trace: bool = True
    max_dead_ends: int = Config.MAX_CONSECUTIVE_DEAD_ENDS

    def __post_init__(self):
        self.algorithm = normalize_algorithm(self.algorithm)

    @property
    def threshold_kind(self):
        if self.threshold is not None:
            return self.threshold
        return 'variance' if self.algorithm == 'edla' else 'dynamic'

    def validate(self, graph=None):
        """
        校验参数组合

        Raises:
            ConfigError: 任一参数不合法
        """
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}, expected one of {PROBLEMS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if self.algorithm == 'dla' and self.problem != 'sspp':
            raise ConfigError("the DLA baseline only solves sspp")
        if self.algorithm == 'la-colony' and self.problem != 'smstp':
            raise ConfigError("the LA-colony baseline only solves smstp")
        if self.threshold_kind not in THRESHOLDS:
            raise ConfigError(f"unknown threshold {self.threshold_kind!r}, expected one of {THRESHOLDS}")
        if not 0 < self.learning_rate < 1:
            raise ConfigError(f"learning rate {self.learning_rate} outside (0,1)")
        if not 0 <= self.penalty_rate <= self.learning_rate:
            raise ConfigError(f"penalty rate {self.penalty_rate} outside [0, learning rate]")
        if not 0 < self.alpha_t <= 1 or not 0 < self.beta_t <= 1:
            raise ConfigError("threshold step sizes must lie in (0,1]")
        if self.mean_scale < 0:
            raise ConfigError("bound mean scale must be non-negative")
        if self.max_iterations < 0:
            raise ConfigError(f"negative iteration limit {self.max_iterations}")
        if not 0 < self.prob_target <= 1:
            raise ConfigError(f"probability target {self.prob_target} outside (0,1]")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed {self.seed} is not a 64-bit unsigned integer")
        if self.problem == 'sspp':
            if self.source is None or self.dest is None:
                raise ConfigError("sspp needs both source and dest")
            if graph is not None:
                for flag, node in (('source', self.source), ('dest', self.dest)):
                    if not 1 <= node <= graph.node_count:
                        raise ConfigError(f"{flag} {node} is not a node of {graph.name}")
        if self.problem == 'smstp' and graph is not None and graph.directed:
            raise ConfigError("smstp needs an undirected graph")
        return self


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    weight: float
    edges: tuple
    q_current: float
    q_optimal: float
    threshold_value: Optional[float]
    verdict: Reinforcement


@dataclass
class RunRecord:
    """
    一次求解的结果：每次迭代的记录与最终统计

    locked 表示运行子图概率超过 P_s 而停止；converged 还要求最终子图是
    期望权重意义下的最优解，AS/AI/AT/PC 都按 converged 统计。
    """

    config: SolverConfig
    optimum: tuple
    locked: bool = False
    iterations: int = 0
    samples: int = 0
    discarded_attempts: int = 0
    discarded_samples: int = 0
    wall_time: float = 0.0
    final_subgraph: Optional[SubGraph] = None
    final_probability: float = 0.0
    trace: list = field(default_factory=list)
    optimal_series: list = field(default_factory=list)
    weight_series: list = field(default_factory=list)
    threshold_series: list = field(default_factory=list)

    @property
    def final_solution(self):
        """最终子图：最短路问题为节点序列，生成树问题为排序后的边端点对"""
        if self.final_subgraph is None:
            return None
        if self.config.problem == 'sspp':
            return self.final_subgraph.node_path()
        return tuple(self.final_subgraph.edge_keys())

    @property
    def found_optimum(self):
        return self.final_solution == self.optimum

    @property
    def converged(self):
        return self.locked and self.found_optimum

    def to_dict(self):
        sub = self.final_subgraph
        return {
            'problem': self.config.problem,
            'algorithm': self.config.algorithm,
            'learning_rate': self.config.learning_rate,
            'threshold': self.config.threshold_kind,
            'seed': self.config.seed,
            'converged': self.converged,
            'locked': self.locked,
            'iterations': self.iterations,
            'samples': self.samples,
            'discarded_attempts': self.discarded_attempts,
            'wall_time': self.wall_time,
            'final_subgraph': [list(e) for e in sub.edges] if sub else None,
            'final_weight': sub.total_weight if sub else None,
            'final_probability': self.final_probability,
            'found_optimum': self.found_optimum,
        }


def _optimum(graph, cfg):
    if cfg.problem == 'sspp':
        path, _ = oracle_shortest_path(graph, cfg.source, cfg.dest)
        return tuple(path)
    keys, _ = oracle_min_spanning_tree(graph)
    return tuple(keys)


def _optimum_probability(network, cfg, optimum):
    if cfg.problem == 'sspp':
        return path_probability(network, optimum)
    return tree_probability(network, optimum)


def _iterate(graph, cfg, build):
    """
    公共外循环：构造 → 评价 → 强化 → 更新阈值 → 计算 P

    当 P > P_s 或 K ≥ K_s 时停止；死路尝试不计入 K，但其采样计入 samples。
    """
    cfg.validate(graph)
    optimum = _optimum(graph, cfg)
    rng = make_rng(cfg.seed)
    network = AutomataNetwork(graph, cfg.learning_rate, cfg.penalty_rate)
    threshold = make_threshold(cfg.threshold_kind, Direction.MINIMIZE,
                               cfg.alpha_t, cfg.beta_t, cfg.mean_scale)
    record = RunRecord(config=cfg, optimum=optimum)

    logger.info(f"开始求解: {graph.name} {cfg.problem} {cfg.algorithm} a={cfg.learning_rate} "
                f"threshold={cfg.threshold_kind} seed={cfg.seed}")
    started = time.perf_counter()
    consecutive = 0
    probability = 0.0
    while probability <= cfg.prob_target and record.iterations < cfg.max_iterations:
        q_optimal = _optimum_probability(network, cfg, optimum)
        try:
            sub = build(network, rng)
        except DeadEndError as e:
            record.discarded_attempts += 1
            record.discarded_samples += e.samples_drawn
            record.samples += e.samples_drawn
            consecutive += 1
            logger.warning(f"丢弃死路尝试 ({consecutive} 次连续): {e}")
            if consecutive > cfg.max_dead_ends:
                raise SolverError(f"{consecutive} consecutive dead ends on {graph.name}") from e
            continue
        consecutive = 0

        record.iterations += 1
        record.samples += len(sub.selections)
        bound = threshold.value
        verdict = threshold.evaluate(sub.total_weight)
        reinforce(sub, network, verdict)
        threshold.update(sub.total_weight)
        probability = subgraph_probability(network, sub)

        record.final_subgraph = sub
        record.final_probability = probability
        record.optimal_series.append(q_optimal)
        record.weight_series.append(sub.total_weight)
        record.threshold_series.append(bound)
        if cfg.keep_trace:
            record.trace.append(IterationRecord(
                record.iterations, sub.total_weight, sub.edges,
                probability, q_optimal, bound, verdict,
            ))

    record.locked = probability > cfg.prob_target
    record.wall_time = time.perf_counter() - started
    logger.info(f"求解结束: locked={record.locked} optimal={record.found_optimum} "
                f"iterations={record.iterations} samples={record.samples} discarded={record.discarded_attempts}")
    return record


def solve_edla(graph, cfg):
    """所提出的方法：eDLA 构造子图"""
    cfg.validate(graph)
    edla_cfg = EdlaConfig.sspp(cfg.source, cfg.dest) if cfg.problem == 'sspp' else EdlaConfig.smstp()
    return _iterate(graph, cfg, lambda network, rng: construct_subgraph(network, edla_cfg, rng))


def _select(network, node, rng):
    """在 node 的自动机上选择动作并采样对应边，返回 Selection"""
    automaton = network.automata[node]
    mask = automaton.enabled.copy()
    action = automaton.select_action(rng)
    edge_id = network.edge_of(node, action)
    head = network.head(node, action)
    weight = sample_edge(network.graph, edge_id, rng)
    return Selection(node, action, edge_id, node, head, weight, mask)


def _construct_dla_path(network, source, dest, rng):
    """纯 DLA：所选动作直接激活下一个自动机，已访问节点的动作被禁用"""
    selections = []
    visited = {source}
    node = source
    try:
        while node != dest:
            automaton = network.automata[node]
            for action in np.flatnonzero(automaton.enabled):
                if network.head(node, action) in visited:
                    automaton.disable_action(action)
            if not automaton.has_enabled():
                raise DeadEndError(f"DLA path stuck at node {node}", len(selections))
            selection = _select(network, node, rng)
            selections.append(selection)
            node = selection.head
            visited.add(node)
        return SubGraph(tuple(selections), sum(s.weight for s in selections))
    finally:
        network.reset()


def _construct_colony_tree(network, rng):
    """LA 群体：每一步随机选一个仍有可选动作的节点，用并查集防止成环"""
    graph = network.graph
    components = UnionFind(graph.node_count)
    selections = []
    try:
        while len(selections) < graph.node_count - 1:
            candidates = []
            for node in graph.nodes:
                automaton = network.automata[node]
                for action in np.flatnonzero(automaton.enabled):
                    if components.connected(node, network.head(node, action)):
                        automaton.disable_action(action)
                if automaton.has_enabled():
                    candidates.append(node)
            if not candidates:
                raise DeadEndError("no automaton can extend the forest", len(selections))
            node = candidates[int(rng.integers(len(candidates)))]
            selection = _select(network, node, rng)
            selections.append(selection)
            components.union(selection.tail, selection.head)
        return SubGraph(tuple(selections), sum(s.weight for s in selections))
    finally:
        network.reset()


def solve_dla_baseline(graph, cfg):
    cfg.validate(graph)
    if cfg.problem != 'sspp':
        raise ConfigError("the DLA baseline only solves sspp")
    return _iterate(graph, cfg, lambda network, rng: _construct_dla_path(network, cfg.source, cfg.dest, rng))


def solve_la_colony_baseline(graph, cfg):
    cfg.validate(graph)
    if cfg.problem != 'smstp':
        raise ConfigError("the LA-colony baseline only solves smstp")
    return _iterate(graph, cfg, _construct_colony_tree)


_SOLVERS = {
    'edla': solve_edla,
    'dla': solve_dla_baseline,
    'la-colony': solve_la_colony_baseline,
}


def solve(graph, cfg):
    """
    按 cfg.algorithm 分派求解

    Args:
        graph: StochasticGraph
        cfg: SolverConfig

    Returns:
        RunRecord

    Raises:
        ConfigError: 参数组合不合法
        UnreachableError: 终点不可达或图不连通
        SolverError: 连续死路次数超过上限
    """
    cfg.validate(graph)
    return _SOLVERS[cfg.algorithm](graph, cfg)


def standard_sampling_cost(graph, source, dest, seed, stable_rounds=None, max_rounds=100000):
    """
    标准采样估计器的采样次数

    每轮对每条边各采样一次，用样本均值重新求最短路；当估计路径连续
    stable_rounds 轮都等于期望意义下的最优路径时停止。

    Returns:
        int: 总采样次数
    """
    stable_rounds = Config.STANDARD_SAMPLING_STABLE_ROUNDS if stable_rounds is None else stable_rounds
    target, _ = oracle_shortest_path(graph, source, dest)
    rng = make_rng(seed)
    edge_count = len(graph.edges)
    sums = np.zeros(edge_count)
    samples = 0
    streak = 0
    rounds = 0
    while streak < stable_rounds:
        if rounds >= max_rounds:
            raise SolverError(f"standard sampling did not stabilise within {max_rounds} rounds")
        for edge_id in range(edge_count):
            sums[edge_id] += sample_edge(graph, edge_id, rng)
        samples += edge_count
        rounds += 1
        path, _ = shortest_path_on_weights(graph, sums / rounds, source, dest)
        streak = streak + 1 if path == target else 0
    logger.debug(f"标准采样: seed={seed} rounds={rounds} samples={samples}")
    return samples
