"""
变结构学习自动机：线性强化方案（L_R-I / L_R-P / L_R-εP）与可变动作集
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from logger import logger

# 重新缩放后的概率和允许的漂移，超过即视为内部错误
DRIFT_LIMIT = 1e-6


class AutomatonError(RuntimeError):
    """自动机状态或调用不合法"""


class NoEnabledActionError(AutomatonError):
    """没有可选的动作"""


class Reinforcement(Enum):
    """P 模型环境的二值响应"""
    REWARD = 'reward'
    PENALTY = 'penalty'


class LearningAutomaton:
    """
    变结构学习自动机

    probabilities 保存全部动作的概率（和为 1）；enabled 为当前可选动作的掩码。
    被禁用动作的概率在缩放/重新缩放过程中保持不变。
    """

    def __init__(self, action_count, reward_rate=0.05, penalty_rate=0.0, probabilities=None):
        if action_count < 0:
            raise AutomatonError(f"negative action count {action_count}")
        if not 0 < reward_rate < 1:
            raise AutomatonError(f"reward rate {reward_rate} outside (0,1)")
        if not 0 <= penalty_rate < 1:
            raise AutomatonError(f"penalty rate {penalty_rate} outside [0,1)")

        self.action_count = action_count
        self.reward_rate = reward_rate
        self.penalty_rate = penalty_rate
        if probabilities is None:
            self.probabilities = np.full(action_count, 1.0 / action_count) if action_count else np.zeros(0)
        else:
            self.probabilities = np.asarray(probabilities, dtype=float).copy()
            if self.probabilities.shape != (action_count,):
                raise AutomatonError("probability vector length does not match action count")
            total = self.probabilities.sum()
            if action_count and (not np.isfinite(total) or abs(total - 1.0) > 1e-9):
                raise AutomatonError("probability vector does not sum to 1")
        self.enabled = np.ones(action_count, dtype=bool)

    @property
    def scheme(self):
        if self.penalty_rate == 0:
            return 'L_R-I'
        if self.penalty_rate == self.reward_rate:
            return 'L_R-P'
        return 'L_R-eP'

    def has_enabled(self):
        return bool(self.enabled.any())

    def scale(self, mask=None):
        """
        按可选动作的概率和 K 缩放

        K 为 0（可选动作的概率全为 0）时缩放向量取均匀分布，重新缩放后这些动作仍为 0。

        Returns:
            tuple: (可选动作下标, 缩放后的概率, K)
        """
        mask = self.enabled if mask is None else mask
        indices = np.flatnonzero(mask)
        if indices.size == 0:
            raise NoEnabledActionError("no enabled actions")
        k = self.probabilities[indices].sum()
        if k <= 0:
            return indices, np.full(indices.size, 1.0 / indices.size), 0.0
        return indices, self.probabilities[indices] / k, k

    def rescale(self, indices, scaled, k):
        """把缩放向量乘回 K 写入完整概率向量，并消除浮点漂移"""
        self.probabilities[indices] = scaled * k
        total = self.probabilities.sum()
        if not np.isfinite(total) or abs(total - 1.0) > DRIFT_LIMIT:
            raise AutomatonError(f"probability drift {total - 1.0:.3e} after rescale")
        self.probabilities = np.clip(self.probabilities / total, 0.0, 1.0)

    def select_action(self, rng):
        """
        按缩放后的概率向量随机选择一个可选动作

        Args:
            rng: numpy 随机数流

        Returns:
            int: 动作下标

        Raises:
            NoEnabledActionError: 没有可选动作
        """
        indices, scaled, _ = self.scale()
        position = int(np.searchsorted(np.cumsum(scaled), rng.random() * scaled.sum(), side='right'))
        return int(indices[min(position, indices.size - 1)])

    def update(self, chosen, signal, mask=None):
        """
        线性强化更新：缩放 → 更新缩放向量 → 重新缩放

        Args:
            chosen: 被选择的动作下标
            signal: Reinforcement
            mask: 选择时刻的可选动作掩码快照（默认使用当前掩码）
        """
        mask = self.enabled if mask is None else mask
        if not 0 <= chosen < self.action_count:
            raise AutomatonError(f"action {chosen} out of range [0,{self.action_count})")
        if not mask[chosen]:
            raise AutomatonError(f"action {chosen} is disabled")

        if signal is Reinforcement.PENALTY and self.penalty_rate == 0:
            return self

        indices, scaled, k = self.scale(mask)
        position = int(np.flatnonzero(indices == chosen)[0])
        if signal is Reinforcement.REWARD:
            a = self.reward_rate
            scaled = (1 - a) * scaled
            scaled[position] += a
        else:
            r = indices.size
            if r == 1:
                return self
            b = self.penalty_rate
            spread = (1 - b) * scaled + b / (r - 1)
            spread[position] = (1 - b) * scaled[position]
            scaled = spread
        self.rescale(indices, scaled, k)
        return self

    def disable_action(self, action):
        self.enabled[action] = False
        return self

    def enable_all(self):
        self.enabled[:] = True
        return self

    def __repr__(self):
        probs = ', '.join(f"{p:.4f}" for p in self.probabilities)
        return f"LearningAutomaton([{probs}], enabled={self.enabled.tolist()}, {self.scheme})"


def make_automaton(action_count, reward_rate, penalty_rate=0.0):
    """按动作数创建均匀初始化的自动机"""
    automaton = LearningAutomaton(action_count, reward_rate, penalty_rate)
    logger.debug(f"创建自动机: 动作数={action_count}, 方案={automaton.scheme}")
    return automaton
