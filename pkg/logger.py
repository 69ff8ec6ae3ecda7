import logging
import os
from config import Config


def setup_logger():
    """设置日志记录器"""

    # 创建 logger
    logger = logging.getLogger('edla')
    logger.setLevel(getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO))

    # 避免重复添加 handler
    if logger.handlers:
        return logger

    # 日志格式
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # 文件处理器（LOG_FILE 为空时不写文件）
    if Config.LOG_FILE:
        log_dir = os.path.dirname(Config.LOG_FILE)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(Config.LOG_FILE, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG if Config.DEBUG else logging.INFO)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # 控制台处理器（输出到 stderr，不干扰命令行报告）
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.DEBUG if Config.DEBUG else logging.WARNING)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    return logger


# 创建全局 logger 实例
logger = setup_logger()
