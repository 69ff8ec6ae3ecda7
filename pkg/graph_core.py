"""
随机图表示、离散权重分布、带种子的采样，以及基于期望权重的确定性验证 oracle
"""
from __future__ import annotations

import heapq
import math
import os
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from config import Config
from logger import logger

# 概率和允许的误差
PROBABILITY_TOLERANCE = 1e-9
# 比较期望权重时的小数位数（用于字典序平局判断）
_COST_DIGITS = 9


class GraphError(ValueError):
    """图数据相关错误的基类"""


class GraphFormatError(GraphError):
    """图文件格式错误，携带行号"""

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"第 {line_number} 行: {message}")


class GraphValidationError(GraphError):
    """图数据不满足不变量（概率和、非正权重、重复边等）"""


class UnreachableError(GraphError):
    """终点不可达或图不连通"""


class UnknownEdgeError(KeyError):
    """边编号不存在"""


def make_rng(seed):
    """
    创建带种子的随机数流

    固定使用 numpy 的 PCG64 生成器（64 位种子），保证跨平台可复现。

    Args:
        seed: 整数种子

    Returns:
        numpy.random.Generator
    """
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class WeightDistribution:
    """边权重的离散分布：support 为 (权重, 概率) 序列，保持文件中的顺序"""

    support: tuple

    def __post_init__(self):
        support = tuple((float(w), float(p)) for w, p in self.support)
        object.__setattr__(self, 'support', support)
        if not support:
            raise GraphValidationError("weight distribution has empty support")
        for weight, prob in support:
            if not math.isfinite(weight) or weight <= 0:
                raise GraphValidationError(f"weight {weight:g} is not a positive finite number")
            if not 0 < prob <= 1:
                raise GraphValidationError(f"probability {prob:g} outside (0,1]")
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise GraphValidationError(f"probability sum {total:g} ≠ 1")
        object.__setattr__(self, '_cdf', tuple(np.cumsum([p for _, p in support])))

    @property
    def weights(self):
        return tuple(w for w, _ in self.support)

    @property
    def probabilities(self):
        return tuple(p for _, p in self.support)

    def expected(self):
        return math.fsum(w * p for w, p in self.support)

    def std(self):
        mean = self.expected()
        return math.sqrt(math.fsum(p * (w - mean) ** 2 for w, p in self.support))

    def mean_absolute_deviation(self):
        mean = self.expected()
        return math.fsum(p * abs(w - mean) for w, p in self.support)

    def sample(self, rng):
        """按文件顺序的逆 CDF 采样一个权重"""
        u = rng.random()
        for (weight, _), cumulative in zip(self.support, self._cdf):
            if u < cumulative:
                return weight
        # 累积和因舍入略小于 1 时落在最后一个支撑点
        return self.support[-1][0]


def expected_weight(dist):
    """
    计算分布的期望权重 Σ w·p

    Args:
        dist: WeightDistribution

    Returns:
        float: 期望值
    """
    return dist.expected()


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    dist: WeightDistribution

    @property
    def key(self):
        """无向比较用的有序端点对"""
        return (min(self.tail, self.head), max(self.tail, self.head))

    def other(self, node):
        return self.head if node == self.tail else self.tail


class StochasticGraph:
    """随机边权图 G=(V,E,Q)；加载后不可变，可在多个运行之间共享"""

    def __init__(self, name, directed, node_count, edges):
        self.name = name
        self.directed = bool(directed)
        self.node_count = int(node_count)
        if self.node_count < 0:
            raise GraphValidationError(f"negative node count {node_count}")

        built = []
        seen = set()
        for index, (tail, head, dist) in enumerate(edges):
            for node in (tail, head):
                if not 1 <= node <= self.node_count:
                    raise GraphValidationError(f"node {node} outside [1..{self.node_count}]")
            if tail == head:
                raise GraphValidationError(f"self-loop on node {tail}")
            key = (tail, head) if self.directed else (min(tail, head), max(tail, head))
            if key in seen:
                raise GraphValidationError(f"duplicate edge ({tail},{head})")
            seen.add(key)
            built.append(Edge(index, tail, head, dist))
        self.edges = tuple(built)

        # 邻接表：有向图为出边，无向图为关联边，均保持文件顺序
        self._incident = {node: [] for node in self.nodes}
        for edge in self.edges:
            self._incident[edge.tail].append(edge.id)
            if not self.directed:
                self._incident[edge.head].append(edge.id)
        self._index = {}
        for edge in self.edges:
            self._index[(edge.tail, edge.head)] = edge.id
            if not self.directed:
                self._index[(edge.head, edge.tail)] = edge.id

    @property
    def nodes(self):
        return range(1, self.node_count + 1)

    def edge(self, edge_id):
        if not 0 <= edge_id < len(self.edges):
            raise UnknownEdgeError(f"unknown edge id {edge_id}")
        return self.edges[edge_id]

    def edge_id(self, tail, head):
        try:
            return self._index[(tail, head)]
        except KeyError:
            raise UnknownEdgeError(f"no edge ({tail},{head}) in {self.name}") from None

    def incident_edges(self, node):
        """节点可作为动作的边（有向图为出边）"""
        return tuple(self._incident[node])

    def neighbors(self, node):
        return tuple(self.edges[e].other(node) for e in self._incident[node])

    def __repr__(self):
        kind = 'directed' if self.directed else 'undirected'
        return f"StochasticGraph({self.name!r}, {kind}, n={self.node_count}, |E|={len(self.edges)})"


def load_graph(text):
    """
    解析图文件内容

    格式：
        graph <name> <directed|undirected> <n>
        edge <tail> <head> w1:p1 w2:p2 ...

    Args:
        text: 图文件的文本内容

    Returns:
        StochasticGraph: 校验通过的随机图

    Raises:
        GraphFormatError: 格式错误（带行号）
        GraphValidationError: 不满足不变量
    """
    header = None
    edges = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == 'graph':
            if header is not None:
                raise GraphFormatError(line_number, "duplicate graph header")
            if len(tokens) != 4 or tokens[2] not in ('directed', 'undirected'):
                raise GraphFormatError(line_number, "expected 'graph <name> <directed|undirected> <n>'")
            try:
                node_count = int(tokens[3])
            except ValueError:
                raise GraphFormatError(line_number, f"invalid node count {tokens[3]!r}") from None
            if node_count < 1:
                raise GraphFormatError(line_number, "node count must be at least 1")
            header = (tokens[1], tokens[2] == 'directed', node_count)
        elif tokens[0] == 'edge':
            if header is None:
                raise GraphFormatError(line_number, "edge before graph header")
            if len(tokens) < 4:
                raise GraphFormatError(line_number, "expected 'edge <tail> <head> w:p ...'")
            try:
                tail, head = int(tokens[1]), int(tokens[2])
                support = []
                for item in tokens[3:]:
                    weight, prob = item.split(':')
                    support.append((float(weight), float(prob)))
            except ValueError:
                raise GraphFormatError(line_number, f"cannot parse edge line {line!r}") from None
            try:
                dist = WeightDistribution(tuple(support))
            except GraphValidationError as e:
                raise GraphValidationError(f"line {line_number}, edge ({tail},{head}): {e}") from None
            edges.append((tail, head, dist))
        else:
            raise GraphFormatError(line_number, f"unknown directive {tokens[0]!r}")

    if header is None:
        raise GraphFormatError(0, "missing graph header")
    name, directed, node_count = header
    graph = StochasticGraph(name, directed, node_count, edges)
    logger.debug(f"已加载图 {graph}")
    return graph


def resolve_graph_path(name_or_path):
    """内置数据集可以直接用名字（graph2、alex1a）引用"""
    if os.path.exists(name_or_path):
        return name_or_path
    candidate = os.path.join(Config.DATASET_DIR, f"{name_or_path}.graph")
    if os.path.exists(candidate):
        return candidate
    raise FileNotFoundError(f"graph file or dataset not found: {name_or_path}")


def load_graph_file(name_or_path):
    """按名字或路径读取并解析图文件"""
    path = resolve_graph_path(name_or_path)
    with open(path, 'r', encoding='utf-8') as f:
        return load_graph(f.read())


def sample_edge(g, edge_id, rng):
    """
    对一条边的权重采样一次

    Args:
        g: StochasticGraph
        edge_id: 边编号（文件顺序，从 0 开始）
        rng: numpy 随机数流

    Returns:
        float: 权重（属于该边分布的支撑集）
    """
    return g.edge(edge_id).dist.sample(rng)


def expected_graph(g):
    """每条边的期望权重，按边编号排列"""
    return [edge.dist.expected() for edge in g.edges]


class UnionFind:
    """并查集：路径压缩 + 按秩合并，节点编号从 1 开始"""

    def __init__(self, n):
        self.parent = list(range(n + 1))
        self.rank = [0] * (n + 1)

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        xroot, yroot = self.find(x), self.find(y)
        if xroot == yroot:
            return False  # 已连通，加边会成环
        if self.rank[xroot] < self.rank[yroot]:
            xroot, yroot = yroot, xroot
        self.parent[yroot] = xroot
        if self.rank[xroot] == self.rank[yroot]:
            self.rank[xroot] += 1
        return True

    def connected(self, x, y):
        return self.find(x) == self.find(y)


def shortest_path_on_weights(g, weights, source, dest):
    """
    在给定的边权向量上求最短路径，平局取字典序最小的节点序列

    Args:
        g: StochasticGraph
        weights: 按边编号排列的权重
        source: 起点
        dest: 终点

    Returns:
        tuple: (节点路径, 总权重)；source == dest 时返回 ((), 0.0)

    Raises:
        UnreachableError: 终点不可达
    """
    if source == dest:
        return (), 0.0

    best = {source: (0.0, (source,))}
    done = set()
    heap = [(0.0, (source,))]
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == dest:
            return path, cost
        for edge_id in g.incident_edges(node):
            nxt = g.edges[edge_id].other(node)
            if nxt in done:
                continue
            new_cost = round(cost + weights[edge_id], _COST_DIGITS)
            new_path = path + (nxt,)
            current = best.get(nxt)
            if current is None or (new_cost, new_path) < current:
                best[nxt] = (new_cost, new_path)
                heapq.heappush(heap, (new_cost, new_path))

    raise UnreachableError(f"node {dest} unreachable from {source} in {g.name}")


def oracle_shortest_path(g, source, dest):
    """
    期望权重意义下的最短路径（验证用 oracle）

    Returns:
        tuple: (节点路径, 期望总权重)
    """
    return shortest_path_on_weights(g, expected_graph(g), source, dest)


def oracle_min_spanning_tree(g):
    """
    期望权重意义下的最小生成树（Kruskal，同权边按端点字典序处理）

    Returns:
        tuple: (按字典序排列的边端点对列表, 期望总权重)

    Raises:
        GraphValidationError: 有向图
        UnreachableError: 图不连通
    """
    if g.directed:
        raise GraphValidationError("minimum spanning tree requires an undirected graph")

    order = sorted(g.edges, key=lambda e: (round(e.dist.expected(), _COST_DIGITS), e.key))
    uf = UnionFind(g.node_count)
    chosen = []
    for edge in order:
        if uf.union(edge.tail, edge.head):
            chosen.append(edge)
            if len(chosen) == g.node_count - 1:
                break
    if len(chosen) != max(g.node_count - 1, 0):
        raise UnreachableError(f"graph {g.name} is disconnected")

    total = round(math.fsum(e.dist.expected() for e in chosen), _COST_DIGITS)
    return sorted(e.key for e in chosen), total


def all_simple_paths(g, source, dest):
    """穷举 source 到 dest 的所有简单路径（仅用于小图交叉验证）"""
    stack = [(source, (source,))]
    while stack:
        node, path = stack.pop()
        if node == dest:
            yield path
            continue
        for nxt in g.neighbors(node):
            if nxt not in path:
                stack.append((nxt, path + (nxt,)))


def path_edge_ids(g, path):
    return [g.edge_id(a, b) for a, b in zip(path, path[1:])]


def all_spanning_trees(g):
    """穷举所有生成树，产出边编号元组（仅用于小图交叉验证）"""
    n = g.node_count
    for combo in combinations(range(len(g.edges)), n - 1):
        uf = UnionFind(n)
        if all(uf.union(g.edges[e].tail, g.edges[e].head) for e in combo):
            yield combo


def is_spanning_tree(g, edge_ids):
    """用独立的并查集判断边集是否为生成树"""
    if len(edge_ids) != g.node_count - 1 or len(set(edge_ids)) != len(edge_ids):
        return False
    uf = UnionFind(g.node_count)
    return all(uf.union(g.edges[e].tail, g.edges[e].head) for e in edge_ids)
