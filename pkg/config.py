import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = os.path.dirname(os.path.abspath(__file__))


class Config:
    """应用配置类"""

    # 日志配置
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('LOG_FILE', 'logs/edla.log')
    DEBUG = os.getenv('EDLA_DEBUG', 'false').lower() == 'true'

    # 数据集与输出目录
    DATASET_DIR = os.getenv('DATASET_DIR', os.path.join(BASE_DIR, 'datasets'))
    OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'results')

    # 运行结果存储配置
    ENABLE_RESULT_STORE = os.getenv('ENABLE_RESULT_STORE', 'false').lower() == 'true'
    DATABASE_URL = os.getenv('DATABASE_URL', 'sqlite:///results/edla_runs.db')

    # 学习自动机默认参数
    DEFAULT_LEARNING_RATE = float(os.getenv('DEFAULT_LEARNING_RATE', '0.05'))
    DEFAULT_MAX_ITERATIONS = int(os.getenv('DEFAULT_MAX_ITERATIONS', '10000'))
    DEFAULT_PROB_TARGET = float(os.getenv('DEFAULT_PROB_TARGET', '0.9'))

    # 方差感知阈值参数（均值步长、偏差步长、均值缩放系数）
    THRESHOLD_ALPHA = float(os.getenv('THRESHOLD_ALPHA', '0.125'))
    THRESHOLD_BETA = float(os.getenv('THRESHOLD_BETA', '0.25'))
    BOUND_MEAN_SCALE = float(os.getenv('BOUND_MEAN_SCALE', '0.5'))

    # 连续死路次数上限，超过后放弃求解
    MAX_CONSECUTIVE_DEAD_ENDS = int(os.getenv('MAX_CONSECUTIVE_DEAD_ENDS', '1000'))

    # 实验配置
    DEFAULT_REPETITIONS = int(os.getenv('DEFAULT_REPETITIONS', '50'))
    POP_REPETITIONS = int(os.getenv('POP_REPETITIONS', '10'))
    POP_STRIDE = int(os.getenv('POP_STRIDE', '150'))
    DEFAULT_JOBS = int(os.getenv('DEFAULT_JOBS', '1'))

    # 标准采样基线：最优路径需连续保持的轮数
    STANDARD_SAMPLING_STABLE_ROUNDS = int(os.getenv('STANDARD_SAMPLING_STABLE_ROUNDS', '50'))
