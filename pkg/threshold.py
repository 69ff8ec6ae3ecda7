"""
环境评价准则：把采样得到的子图权重转换为奖励/惩罚

- DynamicThreshold: 历史权重的算术平均
- VarianceAwareThreshold: 平滑均值 + 平滑平均绝对偏差
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from automaton import Reinforcement
from config import Config


class Direction(Enum):
    MINIMIZE = 'minimize'
    MAXIMIZE = 'maximize'


class ThresholdKind(Enum):
    DYNAMIC = 'dynamic'
    VARIANCE = 'variance'


def _verdict(ok):
    return Reinforcement.REWARD if ok else Reinforcement.PENALTY


@dataclass
class DynamicThreshold:
    """T 等于目前提交过的全部权重的算术平均；首次评价无条件奖励"""

    count: int = 0
    mean: float = 0.0
    direction: Direction = Direction.MINIMIZE

    @property
    def value(self):
        return self.mean if self.count else None

    def evaluate(self, weight):
        if self.count == 0:
            return Reinforcement.REWARD
        if self.direction is Direction.MINIMIZE:
            return _verdict(weight <= self.mean)
        return _verdict(weight >= self.mean)

    def update(self, weight):
        self.mean = (self.count * self.mean + weight) / (self.count + 1)
        self.count += 1
        return self


@dataclass
class VarianceAwareThreshold:
    """
    方差感知阈值

    Err = W − T；T ← T + α·Err；Var ← Var + β·(|Err| − Var)。
    最小化时奖励条件为 W ≤ scale·T + 2·Var，最大化时为 W ≥ scale·T − 2·Var。
    第一次观测只用于初始化（T = W，Var = 0），并给予奖励。
    """

    alpha: float = Config.THRESHOLD_ALPHA
    beta: float = Config.THRESHOLD_BETA
    mean_scale: float = Config.BOUND_MEAN_SCALE
    direction: Direction = Direction.MINIMIZE
    mean: float = 0.0
    deviation: float = 0.0
    initialized: bool = False

    def __post_init__(self):
        for name in ('alpha', 'beta'):
            step = getattr(self, name)
            if not 0 < step <= 1:
                raise ValueError(f"{name} step size {step} outside (0,1]")
        if self.mean_scale < 0:
            raise ValueError(f"bound mean scale {self.mean_scale} is negative")

    @property
    def value(self):
        if not self.initialized:
            return None
        if self.direction is Direction.MINIMIZE:
            return self.mean_scale * self.mean + 2 * self.deviation
        return self.mean_scale * self.mean - 2 * self.deviation

    def evaluate(self, weight):
        if not self.initialized:
            return Reinforcement.REWARD
        if self.direction is Direction.MINIMIZE:
            return _verdict(weight <= self.value)
        return _verdict(weight >= self.value)

    def update(self, weight):
        if not self.initialized:
            self.mean, self.deviation, self.initialized = float(weight), 0.0, True
            return self
        err = weight - self.mean
        self.mean += self.alpha * err
        self.deviation += self.beta * (abs(err) - self.deviation)
        # 浮点舍入不能让偏差估计变成负数
        self.deviation = max(self.deviation, 0.0)
        return self


def evaluate_dynamic(t, weight, direction=None):
    if direction is not None:
        t.direction = direction
    return t.evaluate(weight)


def update_dynamic(t, weight):
    return t.update(weight)


def evaluate_variance_aware(v, weight, direction=None):
    if direction is not None:
        v.direction = direction
    return v.evaluate(weight)


def update_variance_aware(v, weight):
    return v.update(weight)


def make_threshold(kind, direction=Direction.MINIMIZE, alpha=None, beta=None, mean_scale=None):
    """
    按种类创建阈值状态

    Args:
        kind: ThresholdKind 或其字符串值（'dynamic' / 'variance'）
        direction: 优化方向
        alpha, beta, mean_scale: 方差感知阈值参数，缺省取 Config

    Returns:
        DynamicThreshold 或 VarianceAwareThreshold
    """
    kind = ThresholdKind(kind)
    if kind is ThresholdKind.DYNAMIC:
        return DynamicThreshold(direction=direction)
    return VarianceAwareThreshold(
        alpha=Config.THRESHOLD_ALPHA if alpha is None else alpha,
        beta=Config.THRESHOLD_BETA if beta is None else beta,
        mean_scale=Config.BOUND_MEAN_SCALE if mean_scale is None else mean_scale,
        direction=direction,
    )
