import hashlib
import json
import os
from datetime import datetime
from config import Config
from logger import logger
from models import Base, ExperimentRun, get_engine, get_session


def generate_run_hash(fields):
    """
    生成运行的唯一哈希值，用于识别重复保存的运行

    Args:
        fields: 识别字段字典（数据集、问题、算法、学习率、阈值、停止参数、种子）

    Returns:
        str: SHA256 哈希值
    """
    # 生成稳定的JSON字符串（排序键确保一致性）
    key_string = json.dumps(fields, sort_keys=True, ensure_ascii=False)
    hash_value = hashlib.sha256(key_string.encode('utf-8')).hexdigest()

    logger.debug(f"生成运行哈希: {hash_value}, 关键字段: {fields}")
    return hash_value


def run_fields(result, spec):
    """从运行结果与实验描述提取识别字段"""
    cfg = result.record.config
    return {
        'dataset': spec.dataset,
        'problem': cfg.problem,
        'source': cfg.source,
        'dest': cfg.dest,
        'algorithm': cfg.algorithm,
        'learning_rate': cfg.learning_rate,
        'threshold': cfg.threshold_kind,
        'max_iterations': cfg.max_iterations,
        'prob_target': cfg.prob_target,
        'seed': cfg.seed,
    }


def _run_row(result, spec):
    record = result.record
    sub = record.final_subgraph
    return {
        'run_hash': generate_run_hash(run_fields(result, spec)),
        'experiment': spec.name,
        'dataset': spec.dataset,
        'problem': record.config.problem,
        'algorithm': record.config.algorithm,
        'learning_rate': record.config.learning_rate,
        'threshold': record.config.threshold_kind,
        'seed': record.config.seed,
        'converged': record.converged,
        'locked': record.locked,
        'iterations': record.iterations,
        'samples': record.samples,
        'discarded_attempts': record.discarded_attempts,
        'wall_time': record.wall_time,
        'final_subgraph': [list(edge) for edge in sub.edges] if sub else None,
    }


def save_run_records(results, spec, url=None):
    """
    保存实验运行到数据库，已存在相同哈希的运行跳过

    Args:
        results: bench.RunResult 列表
        spec: ExperimentSpec
        url: 数据库地址（可选,默认使用配置中的地址）

    Returns:
        tuple: (saved, skipped)
    """
    rows = [_run_row(result, spec) for result in results]
    session = None
    try:
        Base.metadata.create_all(get_engine(url))
        session = get_session(url)
        seen = set()
        saved = 0
        for row in rows:
            if row['run_hash'] in seen:
                continue
            existing = session.query(ExperimentRun)\
                .filter(ExperimentRun.run_hash == row['run_hash'])\
                .first()
            seen.add(row['run_hash'])
            if existing:
                continue
            session.add(ExperimentRun(**row))
            saved += 1
        session.commit()
        skipped = len(rows) - saved
        logger.info(f"实验 {spec.name} 已保存 {saved} 次运行到数据库，跳过重复 {skipped} 次")
        return saved, skipped

    except Exception as e:
        if session is not None:
            session.rollback()
        logger.error(f"保存运行结果到数据库失败: {str(e)}", exc_info=True)
        # 失败时至少保存到文件
        save_records_to_file(rows, spec.name)
        return 0, len(rows)
    finally:
        if session is not None:
            session.close()


def save_records_to_file(rows, experiment):
    """
    保存运行结果到 JSON Lines 文件(备份方式)

    Args:
        rows: 运行结果字典列表
        experiment: 实验名称

    Returns:
        str: 保存的文件路径
    """
    backup_dir = os.path.join(Config.OUTPUT_DIR, 'runs_backup')
    os.makedirs(backup_dir, exist_ok=True)

    # 生成文件名(基于时间戳)
    timestamp = datetime.now().strftime('%Y%m%d_%H%M%S_%f')
    filepath = os.path.join(backup_dir, f"{experiment}_{timestamp}.jsonl")

    with open(filepath, 'w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + '\n')

    logger.warning(f"运行结果已写入备份文件: {filepath}")
    return filepath


def get_stored_runs(experiment=None, url=None):
    """
    从数据库获取已保存的运行

    Args:
        experiment: 实验名称（可选，为空时返回全部）
        url: 数据库地址

    Returns:
        list: 运行字典列表（按 id 顺序）
    """
    session = get_session(url)
    try:
        query = session.query(ExperimentRun)
        if experiment is not None:
            query = query.filter(ExperimentRun.experiment == experiment)
        return [run.to_dict() for run in query.order_by(ExperimentRun.id).all()]
    except Exception as e:
        logger.error(f"从数据库查询运行结果失败: {str(e)}")
        return []
    finally:
        session.close()
