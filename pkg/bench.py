"""
实验框架：多种子、多学习率扫描，AS/AI/AT/PC 汇总，以及最优子图概率 (POP) 曲线导出
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from config import Config
from graph_core import load_graph_file, oracle_min_spanning_tree, oracle_shortest_path
from logger import logger
from solvers import ALGORITHMS, PROBLEMS, SolverConfig, normalize_algorithm, solve, standard_sampling_cost

SUMMARY_HEADER = ['algorithm', 'learning_rate', 'AS', 'AI', 'AT_seconds', 'PC_percent', 'AS_all_runs']
POP_HEADER = ['iteration', 'mean_optimal_probability']
THRESHOLD_HEADER = ['iteration', 'mean_threshold', 'mean_weight', 'optimal_expected_weight']
PARTIAL_HEADER = ['algorithm', 'learning_rate', 'run_index', 'seed', 'converged',
                  'iterations', 'samples', 'discarded_attempts']


class SpecError(ValueError):
    """实验描述文件不合法"""


def _parse_bool(value):
    lowered = value.strip().lower()
    if lowered in ('true', 'yes', '1'):
        return True
    if lowered in ('false', 'no', '0'):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_list(value, cast):
    return tuple(cast(item) for item in value.replace(',', ' ').split())


def _parse_optional_int(value):
    return int(value) if value.strip() else None


# 键 → 解析函数
_SPEC_KEYS = {
    'name': str,
    'dataset': str,
    'problem': str,
    'source': _parse_optional_int,
    'dest': _parse_optional_int,
    'algorithms': lambda v: _parse_list(v, lambda a: normalize_algorithm(a.strip())),
    'learning_rates': lambda v: _parse_list(v, float),
    'repetitions': int,
    'max_iterations': int,
    'prob_target': float,
    'threshold': lambda v: v.strip() or None,
    'base_seed': int,
    'output_dir': str,
    'pop_stride': int,
    'pop_carry_last': _parse_bool,
    'timing': _parse_bool,
    'store': _parse_bool,
    'jobs': int,
}


@dataclass
class ExperimentSpec:
    """一次扫描实验的描述；第 i 次重复使用种子 base_seed + i"""

    name: str
    dataset: str
    problem: str
    source: Optional[int] = None
    dest: Optional[int] = None
    algorithms: tuple = ('edla',)
    learning_rates: tuple = (Config.DEFAULT_LEARNING_RATE,)
    repetitions: int = Config.DEFAULT_REPETITIONS
    max_iterations: int = Config.DEFAULT_MAX_ITERATIONS
    prob_target: float = Config.DEFAULT_PROB_TARGET
    threshold: Optional[str] = None
    base_seed: int = 0
    output_dir: str = Config.OUTPUT_DIR
    pop_stride: int = Config.POP_STRIDE
    pop_carry_last: bool = False
    timing: bool = False
    store: bool = Config.ENABLE_RESULT_STORE
    jobs: int = Config.DEFAULT_JOBS

    def validate(self):
        if self.problem not in PROBLEMS:
            raise SpecError(f"unknown problem {self.problem!r}")
        if not self.algorithms:
            raise SpecError("no algorithms listed")
        for algorithm in self.algorithms:
            if algorithm not in ALGORITHMS:
                raise SpecError(f"unknown algorithm {algorithm!r}")
        if not self.learning_rates:
            raise SpecError("no learning rates listed")
        for rate in self.learning_rates:
            if not 0 < rate < 1:
                raise SpecError(f"learning rate {rate} outside (0,1)")
        if self.repetitions < 1:
            raise SpecError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.pop_stride < 1:
            raise SpecError(f"pop_stride must be at least 1, got {self.pop_stride}")
        if self.jobs < 1:
            raise SpecError(f"jobs must be at least 1, got {self.jobs}")
        if self.problem == 'sspp' and (self.source is None or self.dest is None):
            raise SpecError("sspp experiments need source and dest")
        return self

    def solver_config(self, algorithm, learning_rate, run_index):
        return SolverConfig(
            problem=self.problem,
            algorithm=algorithm,
            learning_rate=learning_rate,
            source=self.source,
            dest=self.dest,
            threshold=self.threshold,
            max_iterations=self.max_iterations,
            prob_target=self.prob_target,
            seed=self.base_seed + run_index,
            keep_trace=False,
        )


def parse_spec(text):
    """
    解析 key=value 格式的实验描述

    Args:
        text: 文件内容，# 之后为注释

    Returns:
        ExperimentSpec

    Raises:
        SpecError: 未知键、重复键、值无法解析或缺少必填键
    """
    values = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise SpecError(f"line {line_number}: expected key=value")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in _SPEC_KEYS:
            raise SpecError(f"line {line_number}: unknown key {key!r}")
        if key in values:
            raise SpecError(f"line {line_number}: duplicate key {key!r}")
        try:
            values[key] = _SPEC_KEYS[key](value)
        except ValueError as e:
            raise SpecError(f"line {line_number}: bad value for {key}: {e}") from None

    missing = [key for key in ('name', 'dataset', 'problem') if key not in values]
    if missing:
        raise SpecError(f"missing required keys: {', '.join(missing)}")
    return ExperimentSpec(**values).validate()


def load_spec(path):
    with open(path, 'r', encoding='utf-8') as f:
        return parse_spec(f.read())


@dataclass(frozen=True)
class RunResult:
    algorithm: str
    learning_rate: float
    run_index: int
    record: object

    @property
    def sort_key(self):
        return (self.algorithm, self.learning_rate, self.run_index)


@dataclass(frozen=True)
class SummaryRow:
    """一行汇总；AS/AI/AT 只对收敛的运行取平均，没有收敛运行时为 None"""

    algorithm: str
    learning_rate: float
    AS: Optional[float]
    AI: Optional[float]
    AT_seconds: Optional[float]
    PC_percent: float
    AS_all_runs: float


@dataclass
class ExperimentSummary:
    spec: ExperimentSpec
    rows: list
    pop_curves: dict = field(default_factory=dict)
    threshold_curves: dict = field(default_factory=dict)
    results: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def row(self, algorithm, learning_rate):
        for row in self.rows:
            if row.algorithm == algorithm and row.learning_rate == learning_rate:
                return row
        raise KeyError((algorithm, learning_rate))


def _mean(values):
    return math.fsum(values) / len(values) if values else None


def summarize(algorithm, learning_rate, records, timing=False):
    """按 (算法, 学习率) 汇总一组运行"""
    converged = [r for r in records if r.converged]
    return SummaryRow(
        algorithm=algorithm,
        learning_rate=learning_rate,
        AS=_mean([r.samples for r in converged]),
        AI=_mean([r.iterations for r in converged]),
        AT_seconds=_mean([r.wall_time for r in converged]) if timing else None,
        PC_percent=len(converged) / len(records) * 100,
        AS_all_runs=_mean([r.samples for r in records]),
    )


def _column(series_list, iteration, carry_last):
    values = []
    for series in series_list:
        if len(series) >= iteration:
            values.append(series[iteration - 1])
        elif carry_last and series:
            values.append(series[-1])
    return [v for v in values if v is not None]


def _checkpoints(series_list, stride):
    stride = Config.POP_STRIDE if stride is None else stride
    longest = max((len(series) for series in series_list), default=0)
    return range(1, longest + 1, stride)


def export_pop_curve(records, stride=None, carry_last=False):
    """
    平均最优子图概率曲线

    Args:
        records: 同一配置的 RunRecord 列表
        stride: 采样间隔，行位于迭代 1, 1+stride, ...
        carry_last: 为 True 时已结束的运行以最后一个值参与平均

    Returns:
        list: (迭代序号, 平均概率) 列表

    Raises:
        ValueError: records 为空
    """
    if not records:
        raise ValueError("cannot build a POP curve from an empty record set")
    series_list = [r.optimal_series for r in records]
    curve = []
    for iteration in _checkpoints(series_list, stride):
        values = _column(series_list, iteration, carry_last)
        if values:
            curve.append((iteration, float(np.mean(values))))
    return curve


def export_threshold_curve(records, optimal_weight, stride=None, carry_last=False):
    """
    评价阈值与采样权重随迭代的平均变化，用于比较两种阈值与最优子图期望权重的距离

    第一次迭代没有阈值（无条件奖励），该处 mean_threshold 为 None。

    Returns:
        list: (迭代序号, 平均阈值, 平均采样权重, 最优子图期望权重) 列表
    """
    if not records:
        raise ValueError("cannot build a threshold curve from an empty record set")
    thresholds = [r.threshold_series for r in records]
    weights = [r.weight_series for r in records]
    curve = []
    for iteration in _checkpoints(weights, stride):
        sampled = _column(weights, iteration, carry_last)
        if not sampled:
            continue
        bounds = _column(thresholds, iteration, carry_last)
        mean_bound = float(np.mean(bounds)) if bounds else None
        curve.append((iteration, mean_bound, float(np.mean(sampled)), float(optimal_weight)))
    return curve


def optimal_expected_weight(graph, spec):
    if spec.problem == 'sspp':
        return oracle_shortest_path(graph, spec.source, spec.dest)[1]
    return oracle_min_spanning_tree(graph)[1]


def _format(value):
    return '' if value is None else repr(float(value))


def _parse_optional_float(value):
    return float(value) if value != '' else None


def write_summary_csv(rows, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_HEADER)
        for row in rows:
            writer.writerow([
                row.algorithm, repr(row.learning_rate), _format(row.AS), _format(row.AI),
                _format(row.AT_seconds), _format(row.PC_percent), _format(row.AS_all_runs),
            ])


def parse_summary_csv(path):
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header {reader.fieldnames}")
        return [
            SummaryRow(
                algorithm=item['algorithm'],
                learning_rate=float(item['learning_rate']),
                AS=_parse_optional_float(item['AS']),
                AI=_parse_optional_float(item['AI']),
                AT_seconds=_parse_optional_float(item['AT_seconds']),
                PC_percent=float(item['PC_percent']),
                AS_all_runs=float(item['AS_all_runs']),
            )
            for item in reader
        ]


def write_pop_csv(curve, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(POP_HEADER)
        for iteration, mean in curve:
            writer.writerow([iteration, repr(mean)])


def parse_pop_csv(path):
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != POP_HEADER:
            raise ValueError(f"unexpected POP header {header}")
        return [(int(iteration), float(mean)) for iteration, mean in reader]


def pop_filename(algorithm, learning_rate):
    return f"pop_{algorithm}_{learning_rate!r}.csv"


def write_threshold_csv(curve, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(THRESHOLD_HEADER)
        for iteration, bound, weight, optimal in curve:
            writer.writerow([iteration, _format(bound), repr(weight), repr(optimal)])


def parse_threshold_csv(path):
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != THRESHOLD_HEADER:
            raise ValueError(f"unexpected threshold header {header}")
        return [
            (int(iteration), _parse_optional_float(bound), float(weight), float(optimal))
            for iteration, bound, weight, optimal in reader
        ]


def threshold_filename(algorithm, learning_rate):
    return f"threshold_{algorithm}_{learning_rate!r}.csv"


def write_partial_runs(results, spec, path):
    """失败时把已完成的运行写出，避免整批结果丢失"""
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(PARTIAL_HEADER)
        for result in sorted(results, key=lambda r: r.sort_key):
            record = result.record
            writer.writerow([
                result.algorithm, repr(result.learning_rate), result.run_index,
                spec.base_seed + result.run_index, record.converged, record.iterations,
                record.samples, record.discarded_attempts,
            ])


def _run_one(task):
    graph, spec, algorithm, learning_rate, run_index = task
    record = solve(graph, spec.solver_config(algorithm, learning_rate, run_index))
    return RunResult(algorithm, learning_rate, run_index, record)


def _tasks(graph, spec):
    return [
        (graph, spec, algorithm, learning_rate, run_index)
        for algorithm in spec.algorithms
        for learning_rate in spec.learning_rates
        for run_index in range(spec.repetitions)
    ]


def _execute(tasks, jobs, completed):
    if jobs == 1:
        for task in tasks:
            completed.append(_run_one(task))
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for result in pool.map(_run_one, tasks):
            completed.append(result)


def run_experiment(spec, graph=None):
    """
    执行实验并写出 summary.csv、各 POP 曲线与阈值曲线

    Args:
        spec: ExperimentSpec
        graph: 可选的已加载图，缺省按 spec.dataset 加载

    Returns:
        ExperimentSummary

    Raises:
        SpecError: 描述不合法
        其余求解错误原样抛出（已完成的运行先写入 partial_runs.csv）
    """
    spec.validate()
    if graph is None:
        graph = load_graph_file(spec.dataset)
    os.makedirs(spec.output_dir, exist_ok=True)
    tasks = _tasks(graph, spec)
    logger.info(f"开始实验 {spec.name}: {len(tasks)} 次运行, jobs={spec.jobs}")

    completed = []
    try:
        _execute(tasks, spec.jobs, completed)
    except Exception as e:
        partial_path = os.path.join(spec.output_dir, 'partial_runs.csv')
        write_partial_runs(completed, spec, partial_path)
        logger.error(f"实验 {spec.name} 失败，已完成的 {len(completed)} 次运行写入 {partial_path}: {e}",
                     exc_info=True)
        raise

    completed.sort(key=lambda r: r.sort_key)
    summary = ExperimentSummary(spec=spec, rows=[], results=completed)
    optimal_weight = optimal_expected_weight(graph, spec)
    for algorithm in spec.algorithms:
        for learning_rate in spec.learning_rates:
            records = [r.record for r in completed
                       if r.algorithm == algorithm and r.learning_rate == learning_rate]
            row = summarize(algorithm, learning_rate, records, spec.timing)
            summary.rows.append(row)
            summary.pop_curves[(algorithm, learning_rate)] = export_pop_curve(
                records, spec.pop_stride, spec.pop_carry_last)
            summary.threshold_curves[(algorithm, learning_rate)] = export_threshold_curve(
                records, optimal_weight, spec.pop_stride, spec.pop_carry_last)
            mean_time = _mean([r.wall_time for r in records])
            logger.info(f"{algorithm} a={learning_rate}: AS={row.AS} AI={row.AI} "
                        f"PC={row.PC_percent}% 平均耗时={mean_time:.3f}s")

    summary_path = os.path.join(spec.output_dir, 'summary.csv')
    write_summary_csv(summary.rows, summary_path)
    summary.files.append(summary_path)
    for (algorithm, learning_rate), curve in summary.pop_curves.items():
        pop_path = os.path.join(spec.output_dir, pop_filename(algorithm, learning_rate))
        write_pop_csv(curve, pop_path)
        summary.files.append(pop_path)
    for (algorithm, learning_rate), curve in summary.threshold_curves.items():
        threshold_path = os.path.join(spec.output_dir, threshold_filename(algorithm, learning_rate))
        write_threshold_csv(curve, threshold_path)
        summary.files.append(threshold_path)
    logger.info(f"实验 {spec.name} 完成，写出 {len(summary.files)} 个文件到 {spec.output_dir}")

    if spec.store:
        from utils import save_run_records
        save_run_records(completed, spec)

    return summary


def sampling_efficiency(graph, source, dest, learning_rate=0.05, seeds=range(50),
                        max_iterations=None, prob_target=None, stable_rounds=None):
    """
    比较 eDLA 与标准采样估计器的平均采样次数

    Returns:
        dict: edla_samples（收敛运行的平均 AS）、standard_samples、converged_runs
    """
    max_iterations = Config.DEFAULT_MAX_ITERATIONS if max_iterations is None else max_iterations
    prob_target = Config.DEFAULT_PROB_TARGET if prob_target is None else prob_target
    edla_samples = []
    standard = []
    for seed in seeds:
        cfg = SolverConfig(problem='sspp', algorithm='edla', learning_rate=learning_rate,
                           source=source, dest=dest, max_iterations=max_iterations,
                           prob_target=prob_target, seed=seed, keep_trace=False)
        record = solve(graph, cfg)
        if record.converged:
            edla_samples.append(record.samples)
        standard.append(standard_sampling_cost(graph, source, dest, seed, stable_rounds))
    result = {
        'edla_samples': _mean(edla_samples),
        'standard_samples': _mean(standard),
        'converged_runs': len(edla_samples),
    }
    logger.info(f"采样效率: {result}")
    return result
