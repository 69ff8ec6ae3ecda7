"""
命令行入口：solve / experiment / oracle / validate

退出码：0 成功，1 参数或数据校验错误，2 运行时错误。
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from bench import load_spec, run_experiment
from config import BASE_DIR, Config
from graph_core import load_graph_file, oracle_min_spanning_tree, oracle_shortest_path
from logger import logger
from solvers import ALGORITHMS, THRESHOLDS, ConfigError, SolverConfig, solve

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class CliParser(argparse.ArgumentParser):
    """参数错误时以退出码 1 结束（argparse 默认为 2）"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _probability(text):
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"{text} outside (0,1]")
    return value


def build_parser():
    parser = CliParser(prog='cli.py', description='eDLA 随机最短路 / 随机最小生成树求解与实验工具')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)

    solve_p = sub.add_parser('solve', help='求解一次并输出结果')
    solve_p.add_argument('--graph', required=True, help='图文件路径或内置数据集名 (graph2, alex1a)')
    solve_p.add_argument('--problem', required=True, choices=['sspp', 'smstp'])
    solve_p.add_argument('--source', type=int)
    solve_p.add_argument('--dest', type=int)
    solve_p.add_argument('--algorithm', default='edla', choices=ALGORITHMS)
    solve_p.add_argument('--learning-rate', type=float, default=Config.DEFAULT_LEARNING_RATE)
    solve_p.add_argument('--threshold', choices=THRESHOLDS,
                         help='缺省时 edla 使用 variance，基线使用 dynamic')
    solve_p.add_argument('--alpha-t', type=float, default=Config.THRESHOLD_ALPHA)
    solve_p.add_argument('--beta-t', type=float, default=Config.THRESHOLD_BETA)
    solve_p.add_argument('--bound-mean-scale', type=float, default=Config.BOUND_MEAN_SCALE)
    solve_p.add_argument('--penalty-rate', type=float, default=0.0)
    solve_p.add_argument('--max-iters', type=int, default=Config.DEFAULT_MAX_ITERATIONS)
    solve_p.add_argument('--prob-target', type=_probability, default=Config.DEFAULT_PROB_TARGET)
    solve_p.add_argument('--seed', type=int, default=0)
    solve_p.add_argument('--json', action='store_true', help='输出 JSON')
    solve_p.add_argument('--trace', action='store_true', help='逐次迭代输出')
    solve_p.set_defaults(handler=cmd_solve)

    exp_p = sub.add_parser('experiment', help='按实验描述文件执行扫描')
    exp_p.add_argument('--spec', required=True, help='实验描述文件路径或 specs/ 下的文件名')
    exp_p.add_argument('--base-seed', type=int)
    exp_p.add_argument('--output-dir')
    exp_p.add_argument('--jobs', type=int)
    exp_p.add_argument('--pop-carry-last', action='store_true')
    exp_p.add_argument('--timing', action='store_true')
    exp_p.add_argument('--store', action='store_true')
    exp_p.set_defaults(handler=cmd_experiment)

    oracle_p = sub.add_parser('oracle', help='输出期望权重意义下的最优解')
    oracle_p.add_argument('--graph', required=True)
    oracle_p.add_argument('--problem', required=True, choices=['sspp', 'smstp'])
    oracle_p.add_argument('--source', type=int)
    oracle_p.add_argument('--dest', type=int)
    oracle_p.add_argument('--json', action='store_true')
    oracle_p.set_defaults(handler=cmd_oracle)

    validate_p = sub.add_parser('validate', help='校验图文件')
    validate_p.add_argument('--graph', required=True)
    validate_p.set_defaults(handler=cmd_validate)

    return parser


def _require_endpoints(args):
    if args.problem != 'sspp':
        return
    for flag in ('source', 'dest'):
        if getattr(args, flag) is None:
            raise ConfigError(f"--{flag} is required for sspp")


def cmd_solve(args):
    _require_endpoints(args)
    graph = load_graph_file(args.graph)
    cfg = SolverConfig(
        problem=args.problem,
        algorithm=args.algorithm,
        learning_rate=args.learning_rate,
        source=args.source,
        dest=args.dest,
        threshold=args.threshold,
        alpha_t=args.alpha_t,
        beta_t=args.beta_t,
        mean_scale=args.bound_mean_scale,
        penalty_rate=args.penalty_rate,
        max_iterations=args.max_iters,
        prob_target=args.prob_target,
        seed=args.seed,
        keep_trace=args.trace,
    )
    record = solve(graph, cfg)

    if args.json:
        report = record.to_dict()
        solution = record.final_solution
        if solution is not None:
            solution = [list(x) if isinstance(x, tuple) else x for x in solution]
        report['final_solution'] = solution
        if args.trace:
            report['trace'] = [
                {
                    'iteration': it.iteration,
                    'weight': it.weight,
                    'edges': [list(e) for e in it.edges],
                    'q_current': it.q_current,
                    'q_optimal': it.q_optimal,
                    'threshold': it.threshold_value,
                    'verdict': it.verdict.value,
                }
                for it in record.trace
            ]
        print(json.dumps(report, ensure_ascii=False))
        return EXIT_OK

    if args.trace:
        for it in record.trace:
            bound = '-' if it.threshold_value is None else f"{it.threshold_value:.4f}"
            print(f"iter {it.iteration}: W={it.weight:g} threshold={bound} {it.verdict.value} "
                  f"q={it.q_current:.6f} q*={it.q_optimal:.6f}")
    sub = record.final_subgraph
    if sub is None:
        print("final sub-graph: none")
    elif args.problem == 'sspp':
        print(f"final path: {' -> '.join(str(n) for n in record.final_solution)}")
    else:
        print(f"final tree: {' '.join(f'({a},{b})' for a, b in record.final_solution)}")
    if sub is not None:
        print(f"sampled weight: {sub.total_weight:g}")
    print(f"probability: {record.final_probability:.6f}")
    print(f"iterations: {record.iterations}")
    print(f"samples: {record.samples}")
    print(f"discarded attempts: {record.discarded_attempts}")
    print(f"locked: {str(record.locked).lower()}")
    print(f"converged: {str(record.converged).lower()}")
    print(f"optimal: {str(record.found_optimum).lower()}")
    return EXIT_OK


def resolve_spec_path(path):
    """实验描述可直接使用 specs/ 下的文件名"""
    if os.path.exists(path):
        return path
    candidate = os.path.join(BASE_DIR, 'specs', path)
    if os.path.exists(candidate):
        return candidate
    raise FileNotFoundError(f"experiment spec not found: {path}")


def cmd_experiment(args):
    spec = load_spec(resolve_spec_path(args.spec))
    if args.base_seed is not None:
        spec.base_seed = args.base_seed
    if args.output_dir is not None:
        spec.output_dir = args.output_dir
    if args.jobs is not None:
        spec.jobs = args.jobs
    if args.pop_carry_last:
        spec.pop_carry_last = True
    if args.timing:
        spec.timing = True
    if args.store:
        spec.store = True
    summary = run_experiment(spec)
    for path in summary.files:
        print(path)
    return EXIT_OK


def cmd_oracle(args):
    graph = load_graph_file(args.graph)
    if args.problem == 'sspp':
        _require_endpoints(args)
        path, weight = oracle_shortest_path(graph, args.source, args.dest)
        if args.json:
            print(json.dumps({'problem': 'sspp', 'path': list(path), 'expected_weight': weight}))
        else:
            print(f"path: {' -> '.join(str(n) for n in path)}")
            print(f"expected weight: {weight:g}")
    else:
        edges, weight = oracle_min_spanning_tree(graph)
        if args.json:
            print(json.dumps({'problem': 'smstp', 'edges': [list(e) for e in edges],
                              'expected_weight': weight}))
        else:
            print(f"tree: {' '.join(f'({a},{b})' for a, b in edges)}")
            print(f"expected weight: {weight:g}")
    return EXIT_OK


def cmd_validate(args):
    graph = load_graph_file(args.graph)
    kind = 'directed' if graph.directed else 'undirected'
    print(f"ok: {graph.name} {kind} nodes={graph.node_count} edges={len(graph.edges)}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INVALID

    try:
        return args.handler(args)
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"{args.command} 参数或数据错误: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        logger.error(f"{args.command} 运行失败: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
