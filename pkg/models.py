"""
数据库模型定义
"""
import os
from datetime import datetime
from sqlalchemy import create_engine, Column, Integer, String, Float, Boolean, DateTime, JSON
from sqlalchemy.orm import declarative_base, sessionmaker
from config import Config
from logger import logger

Base = declarative_base()


class ExperimentRun(Base):
    """单次求解运行的结果"""
    __tablename__ = 'experiment_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)

    # 运行去重标识 (基于识别字段的哈希值)
    run_hash = Column(String(64), nullable=False, index=True)

    experiment = Column(String(100), nullable=False, index=True)
    dataset = Column(String(100), nullable=False)
    problem = Column(String(10), nullable=False)
    algorithm = Column(String(20), nullable=False, index=True)
    learning_rate = Column(Float, nullable=False)
    threshold = Column(String(20))
    seed = Column(Integer, nullable=False)

    # converged: 子图概率超过 P_s 且为最优解；locked: 只要求子图概率超过 P_s
    converged = Column(Boolean, default=False)
    locked = Column(Boolean, default=False)
    iterations = Column(Integer, default=0)
    samples = Column(Integer, default=0)
    discarded_attempts = Column(Integer, default=0)
    wall_time = Column(Float)

    # 最终子图的边列表 [[tail, head], ...]
    final_subgraph = Column(JSON)

    created_at = Column(DateTime, default=datetime.now)

    def to_dict(self):
        """转换为字典"""
        return {
            'id': self.id,
            'run_hash': self.run_hash,
            'experiment': self.experiment,
            'dataset': self.dataset,
            'problem': self.problem,
            'algorithm': self.algorithm,
            'learning_rate': self.learning_rate,
            'threshold': self.threshold,
            'seed': self.seed,
            'converged': self.converged,
            'locked': self.locked,
            'iterations': self.iterations,
            'samples': self.samples,
            'discarded_attempts': self.discarded_attempts,
            'wall_time': self.wall_time,
            'final_subgraph': self.final_subgraph,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }


# 数据库连接
def get_engine(url=None):
    """获取数据库引擎"""
    database_url = url or Config.DATABASE_URL
    if database_url.startswith('sqlite:///'):
        db_dir = os.path.dirname(database_url[len('sqlite:///'):])
        if db_dir:
            os.makedirs(db_dir, exist_ok=True)
    return create_engine(database_url, echo=False, pool_pre_ping=True)


def get_session(url=None):
    """获取数据库会话"""
    engine = get_engine(url)
    Session = sessionmaker(bind=engine)
    return Session()


def init_db(url=None):
    """初始化数据库表"""
    engine = get_engine(url)
    Base.metadata.create_all(engine)
    logger.info("数据库表初始化完成")


if __name__ == '__main__':
    init_db()
