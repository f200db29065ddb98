# coding: utf-8
"""
配置文件
"""
import os
import tempfile
from pathlib import Path

import psutil
import yaml

from models.errors import ConfigError


class Config:
    """基础配置"""
    # 项目路径配置
    BASE_DIR = Path(__file__).parent

    # 潜在空间模型 / 投影梯度下降
    FIT_K = 2
    FIT_MAX_ITER = 2000
    FIT_TOL = 1e-6
    STEP_ALPHA = 1.0
    STEP_Z = 1.0
    BACKTRACKING = True
    SHRINK = 0.5
    SEED = 0
    # 单网络拟合中 Z 的行范数上界，None 表示不约束
    FIT_RADIUS = 4.0

    # 去偏阶段
    # None 表示 λ = LAMBDA_SCALE·n
    DEBIAS_LAMBDA = None
    LAMBDA_SCALE = 0.3
    LAMBDA_SELECTION = 'fixed'  # 'fixed' 或 'cv'
    LAMBDA_GRID = None  # None 表示 [1e-2, 1e2]·√n 上的 11 个对数等距点
    CV_FOLDS = 5

    # 可迁移集合检测
    DETECT_REPLICATES = 3
    DETECT_FRACTION = 0.8
    DETECT_IOTA = 0.5
    DETECT_LAMBDA_POLICY = 'fixed'  # 'fixed' / 'reuse' / 'per_replicate'
    # fixed 策略下 λ = DETECT_LAMBDA_SCALE·n
    DETECT_LAMBDA_SCALE = 1.0

    # 留出实验
    HOLDOUT_REPEATS = 20
    HOLDOUT_MISSING = 0.1

    # 模拟实验
    SIM_N = 200
    SIM_SOURCES = 10
    SIM_A_SIZE = 5
    SIM_SCENARIO = 'mixed'
    SIM_CASE = 'zero15'
    SIM_REPS = 10
    ALPHA_T_RANGE = (-2.625, -0.875)
    ALPHA_S_RANGE = (-1.313, -0.438)

    # 环境变量 (只有这两项允许通过环境变量覆盖)
    THREADS_ENV = 'LSM_TRANSFER_THREADS'
    TMPDIR_ENV = 'LSM_TRANSFER_TMPDIR'

    @classmethod
    def worker_count(cls) -> int:
        """并行 worker 数: 环境变量优先，否则取物理核数"""
        value = os.environ.get(cls.THREADS_ENV)
        if value:
            try:
                count = int(value)
            except ValueError:
                raise ConfigError(f'{cls.THREADS_ENV} 必须是整数, 实际为 {value!r}')
            if count < 1:
                raise ConfigError(f'{cls.THREADS_ENV} 必须 >= 1')
            return count
        return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1

    @classmethod
    def temp_dir(cls) -> Path:
        """临时文件目录"""
        return Path(os.environ.get(cls.TMPDIR_ENV) or tempfile.gettempdir())

    @classmethod
    def as_dict(cls) -> dict:
        """所有大写配置项 (用于模型文件的 provenance)"""
        values = {}
        for name in dir(cls):
            if name.isupper() and not name.endswith('_ENV') and name != 'BASE_DIR':
                value = getattr(cls, name)
                values[name] = list(value) if isinstance(value, tuple) else value
        return values


class FastConfig(Config):
    """快速配置: 冒烟测试、小规模试跑"""
    FIT_MAX_ITER = 300
    FIT_TOL = 1e-5
    CV_FOLDS = 3
    HOLDOUT_REPEATS = 5
    SIM_N = 60
    SIM_REPS = 2


class BenchmarkConfig(Config):
    """完整模拟实验配置: λ 由 11 点网格交叉验证选择"""
    LAMBDA_SELECTION = 'cv'
    HOLDOUT_REPEATS = 50


# 配置字典
config = {
    'default': Config,
    'fast': FastConfig,
    'benchmark': BenchmarkConfig,
}


def load_config(name: str = 'default', path=None):
    """
    读取配置

    Args:
        name: config 字典中的配置名
        path: 可选 YAML 文件，键名大小写均可，覆盖同名配置项

    Returns:
        配置类 (有覆盖时为动态生成的子类)
    """
    if name not in config:
        raise ConfigError(f'未知的配置名: {name} (可选: {", ".join(config)})')
    base = config[name]
    if path is None:
        return base

    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError(f'配置文件 {path} 顶层必须是映射')

    overrides = {}
    for key, value in data.items():
        attr = str(key).upper()
        if not hasattr(base, attr) or attr.endswith('_ENV'):
            raise ConfigError(f'配置文件 {path} 中有未知配置项: {key}')
        if isinstance(value, list):
            value = tuple(value)
        overrides[attr] = value
    return type(f'{base.__name__}Local', (base,), overrides)
