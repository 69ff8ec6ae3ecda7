"""
eDLA 引擎：活动级别状态机、点火函数、通信规则，以及逐次构造子图的主循环
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from automaton import Reinforcement, make_automaton
from graph_core import UnionFind, sample_edge
from logger import logger


class EdlaError(RuntimeError):
    """eDLA 运行状态错误"""


class DeadEndError(EdlaError):
    """本次构造无法完成（路径走入死路或生成森林），需丢弃重来"""

    def __init__(self, message, samples_drawn):
        self.samples_drawn = samples_drawn
        super().__init__(message)


class ActivityLevel(Enum):
    PASSIVE = 'Pa'
    ACTIVE = 'Ac'
    FIRE = 'Fi'
    OFF = 'Of'


class FirePolicy(Enum):
    DETERMINISTIC = 'deterministic'  # 由上一个动作决定下一个点火自动机
    UNIFORM = 'uniform'              # 从 Active 集合中均匀随机选取


class RootPolicy(Enum):
    FIXED = 'fixed'
    UNIFORM = 'uniform'


class Termination(Enum):
    TARGET_OFF = 'target-off'
    ALL_OFF = 'all-off'


@dataclass(frozen=True)
class EdlaConfig:
    """点火、根选择与终止条件的组合"""

    fire_policy: FirePolicy
    root_policy: RootPolicy
    termination: Termination
    acyclic: bool = True
    root: Optional[int] = None
    target: Optional[int] = None

    def __post_init__(self):
        if self.root_policy is RootPolicy.FIXED and self.root is None:
            raise EdlaError("fixed root policy needs a root node")
        if self.termination is Termination.TARGET_OFF and self.target is None:
            raise EdlaError("target-node-off termination needs a target node")

    @classmethod
    def sspp(cls, source, dest):
        return cls(FirePolicy.DETERMINISTIC, RootPolicy.FIXED, Termination.TARGET_OFF,
                   acyclic=True, root=source, target=dest)

    @classmethod
    def smstp(cls):
        return cls(FirePolicy.UNIFORM, RootPolicy.UNIFORM, Termination.ALL_OFF, acyclic=True)

    @property
    def forest_guard(self):
        """生成树问题用并查集防环，最短路问题禁用指向已访问节点的动作"""
        return self.termination is Termination.ALL_OFF


@dataclass(frozen=True)
class InstantaneousDescription:
    """瞬时描述 D^t = (D_Of, D_Fi, D_Ac, D_Pa)"""

    off: frozenset
    fire: frozenset
    active: frozenset
    passive: frozenset

    def is_partition_of(self, nodes):
        parts = (self.off, self.fire, self.active, self.passive)
        total = sum(len(p) for p in parts)
        union = frozenset().union(*parts)
        return total == len(union) and union == frozenset(nodes) and len(self.fire) <= 1


@dataclass(frozen=True)
class Selection:
    """一次点火所做的选择，reinforce 与子图概率只依赖这些记录"""

    node: int
    action: int
    edge_id: int
    tail: int
    head: int
    weight: float
    mask: np.ndarray = field(compare=False, repr=False)


@dataclass(frozen=True)
class SubGraph:
    selections: tuple
    total_weight: float

    def __post_init__(self):
        if abs(self.total_weight - math.fsum(self.weights)) > 1e-9:
            raise EdlaError("sub-graph weight does not match its edge weights")

    @property
    def edge_ids(self):
        return tuple(s.edge_id for s in self.selections)

    @property
    def edges(self):
        return tuple((s.tail, s.head) for s in self.selections)

    @property
    def weights(self):
        return tuple(s.weight for s in self.selections)

    def node_path(self):
        """按选择顺序连成的节点序列（最短路问题）"""
        if not self.selections:
            return ()
        return (self.selections[0].tail,) + tuple(s.head for s in self.selections)

    def edge_keys(self):
        """无向边端点对，按字典序排列（生成树问题）"""
        return sorted((min(a, b), max(a, b)) for a, b in self.edges)


class AutomataNetwork:
    """
    与图同构的学习自动机网络

    每个节点一个自动机，动作为该节点的出边（有向图）或关联边（无向图），顺序同文件。
    """

    def __init__(self, graph, reward_rate, penalty_rate=0.0):
        self.graph = graph
        self.actions = {node: graph.incident_edges(node) for node in graph.nodes}
        self.automata = {
            node: make_automaton(len(self.actions[node]), reward_rate, penalty_rate)
            for node in graph.nodes
        }
        self._action_index = {
            (node, edge_id): action
            for node, edges in self.actions.items()
            for action, edge_id in enumerate(edges)
        }

    def edge_of(self, node, action):
        return self.actions[node][action]

    def head(self, node, action):
        return self.graph.edges[self.actions[node][action]].other(node)

    def action_of(self, node, edge_id):
        try:
            return self._action_index[(node, edge_id)]
        except KeyError:
            raise EdlaError(f"edge {edge_id} is not an action of automaton {node}") from None

    def reset(self):
        """恢复所有被禁用的动作（供下一次运行使用）"""
        for automaton in self.automata.values():
            automaton.enable_all()


class EdlaState:
    """一次运行中的 eDLA 状态：活动级别、正在构造的子图与防环结构"""

    def __init__(self, network, root):
        self.network = network
        self.root = root
        self.levels = {node: ActivityLevel.PASSIVE for node in network.graph.nodes}
        self.levels[root] = ActivityLevel.ACTIVE
        self.selections = []
        self.next_fire = root
        self.fired = None
        self.components = UnionFind(network.graph.node_count)
        self.no_action_fires = 0
        self.finished = False
        self.dead_end = False

    def nodes_at(self, level):
        return sorted(node for node, lvl in self.levels.items() if lvl is level)

    def description(self):
        def group(level):
            return frozenset(self.nodes_at(level))
        return InstantaneousDescription(
            group(ActivityLevel.OFF), group(ActivityLevel.FIRE),
            group(ActivityLevel.ACTIVE), group(ActivityLevel.PASSIVE),
        )

    @property
    def samples_drawn(self):
        return len(self.selections)

    def to_subgraph(self):
        selections = tuple(self.selections)
        return SubGraph(selections, math.fsum(s.weight for s in selections))


def start_run(network, cfg, rng):
    """
    初始化一次运行：根自动机为 Active，其余 Passive

    Returns:
        EdlaState: 对应 D^0 = (φ, φ, {root}, A − {root})
    """
    graph = network.graph
    if graph.node_count == 0:
        raise EdlaError(f"graph {graph.name} is empty")
    if cfg.root_policy is RootPolicy.FIXED:
        root = cfg.root
        if not 1 <= root <= graph.node_count:
            raise EdlaError(f"root {root} is not a node of {graph.name}")
    else:
        root = int(rng.integers(graph.node_count)) + 1
    return EdlaState(network, root)


def _guard_fire_automaton(state, node, cfg):
    """在点火自动机上禁用会造成回路的动作"""
    network = state.network
    automaton = network.automata[node]
    for action in np.flatnonzero(automaton.enabled):
        head = network.head(node, action)
        if cfg.forest_guard:
            closes_cycle = state.components.connected(node, head)
        else:
            closes_cycle = state.levels[head] in (ActivityLevel.OFF, ActivityLevel.FIRE)
        if closes_cycle:
            automaton.disable_action(action)


def _guard_active_automata(state, cfg, fired):
    """在 Active 自动机上禁用会造成回路的动作（与点火自动机相邻的规则）"""
    network = state.network
    for node in state.nodes_at(ActivityLevel.ACTIVE):
        automaton = network.automata[node]
        for action in np.flatnonzero(automaton.enabled):
            head = network.head(node, action)
            if cfg.forest_guard:
                blocked = state.components.connected(node, head)
            else:
                blocked = head == fired
            if blocked:
                automaton.disable_action(action)


def fire(state, cfg, rng):
    """
    点火：一个 Active 自动机升为 Fire，其 Passive 邻居升为 Active

    Returns:
        int: 点火节点
    """
    if state.fired is not None:
        raise EdlaError(f"automaton {state.fired} is already firing")
    active = state.nodes_at(ActivityLevel.ACTIVE)
    if not active:
        raise EdlaError("fire requested with no active automaton")

    if cfg.fire_policy is FirePolicy.DETERMINISTIC:
        node = state.next_fire
        if state.levels.get(node) is not ActivityLevel.ACTIVE:
            raise EdlaError(f"deterministic fire target {node} is not active")
    else:
        node = active[int(rng.integers(len(active)))]

    state.levels[node] = ActivityLevel.FIRE
    for neighbor in state.network.graph.neighbors(node):
        if state.levels[neighbor] is ActivityLevel.PASSIVE:
            state.levels[neighbor] = ActivityLevel.ACTIVE
    state.fired = node
    return node


def act(state, cfg, rng):
    """
    Fire 自动机选择动作、采样对应边的权重，然后降为 Off

    Returns:
        Selection 或 None（本次点火没有动作）
    """
    node = state.fired
    if node is None:
        raise EdlaError("action requested with no firing automaton")
    network = state.network

    selection = None
    is_target = cfg.termination is Termination.TARGET_OFF and node == cfg.target
    if not is_target:
        if cfg.acyclic:
            _guard_fire_automaton(state, node, cfg)
            if not cfg.forest_guard:
                _guard_active_automata(state, cfg, node)
        automaton = network.automata[node]
        if automaton.has_enabled():
            mask = automaton.enabled.copy()
            action = automaton.select_action(rng)
            edge_id = network.edge_of(node, action)
            head = network.head(node, action)
            weight = sample_edge(network.graph, edge_id, rng)
            selection = Selection(node, action, edge_id, node, head, weight, mask)
            state.selections.append(selection)

            # 无向边在对端自动机中的镜像动作本次运行内禁用
            if not network.graph.directed:
                network.automata[head].disable_action(network.action_of(head, edge_id))
            if cfg.forest_guard:
                state.components.union(node, head)
                if cfg.acyclic:
                    _guard_active_automata(state, cfg, node)
            state.next_fire = head
        else:
            state.no_action_fires += 1
            if cfg.termination is Termination.TARGET_OFF or state.no_action_fires > 1:
                state.dead_end = True

    state.levels[node] = ActivityLevel.OFF
    state.fired = None

    if cfg.termination is Termination.TARGET_OFF:
        state.finished = is_target or state.dead_end
    else:
        state.finished = state.dead_end or not state.nodes_at(ActivityLevel.ACTIVE)
        if state.finished and not state.dead_end:
            if len(state.selections) != network.graph.node_count - 1:
                state.dead_end = True

    return selection


def fire_step(state, cfg, rng):
    """执行一次点火与动作"""
    fire(state, cfg, rng)
    return act(state, cfg, rng)


def construct_subgraph(network, cfg, rng, observer=None):
    """
    构造一个子图（一次完整运行）

    Args:
        network: AutomataNetwork
        cfg: EdlaConfig
        rng: numpy 随机数流
        observer: 可选回调，每次 fire_step 后以当前状态调用

    Returns:
        SubGraph

    Raises:
        DeadEndError: 本次运行无法得到合法子图；动作掩码已恢复
    """
    state = start_run(network, cfg, rng)
    if observer is not None:
        observer(state)
    try:
        while not state.finished:
            fire_step(state, cfg, rng)
            if observer is not None:
                observer(state)
        if state.dead_end:
            raise DeadEndError(
                f"run from root {state.root} ended without a valid sub-graph "
                f"after {state.samples_drawn} samples",
                state.samples_drawn,
            )
        return state.to_subgraph()
    finally:
        network.reset()


def reinforce(subgraph, network, verdict):
    """
    按环境响应更新参与构造的自动机

    奖励时每个点火过的自动机对其所选动作执行 L_R-I 奖励；
    penalty_rate 为 0 时惩罚不改变任何概率向量。
    """
    for selection in subgraph.selections:
        network.automata[selection.node].update(selection.action, verdict, mask=selection.mask)
    if verdict is Reinforcement.REWARD:
        logger.debug(f"奖励子图 {subgraph.edges}")


def subgraph_probability(network, subgraph):
    """子图概率 q：各所选动作当前（未缩放）概率的乘积"""
    q = 1.0
    for selection in subgraph.selections:
        q *= network.automata[selection.node].probabilities[selection.action]
    return float(q)


def path_probability(network, path):
    """已知路径（节点序列）的概率，边由其起点自动机拥有"""
    graph = network.graph
    q = 1.0
    for tail, head in zip(path, path[1:]):
        action = network.action_of(tail, graph.edge_id(tail, head))
        q *= network.automata[tail].probabilities[action]
    return float(q)


def tree_probability(network, edge_keys):
    """
    已知生成树的概率

    每种定根方式下，除根外每个节点拥有指向父节点的那条树边；
    取所有定根方式中概率乘积的最大值。
    """
    graph = network.graph
    adjacency = {node: [] for node in graph.nodes}
    for a, b in edge_keys:
        edge_id = graph.edge_id(a, b)
        adjacency[a].append((b, edge_id))
        adjacency[b].append((a, edge_id))

    best = 0.0
    for root in graph.nodes:
        q = 1.0
        seen = {root}
        stack = [root]
        while stack:
            parent = stack.pop()
            for child, edge_id in adjacency[parent]:
                if child in seen:
                    continue
                seen.add(child)
                stack.append(child)
                q *= network.automata[child].probabilities[network.action_of(child, edge_id)]
        best = max(best, q)
    return float(best)
