# coding: utf-8
"""
异常定义
所有数值与数据相关的错误都继承自 LatentSpaceError (ValueError 子类)
"""


class LatentSpaceError(ValueError):
    """潜在空间模型错误基类"""


class ConfigError(LatentSpaceError):
    """配置参数不合法"""


class DimensionMismatchError(LatentSpaceError):
    """矩阵/向量维度不一致"""


class NonFiniteError(LatentSpaceError):
    """目标函数出现 NaN/Inf，通常是步长过大"""


class RankDeficientWarning(UserWarning):
    """列不满秩时的警告(计算会继续)"""


class EmptyTransferSetError(LatentSpaceError):
    """可迁移源网络集合为空"""


class EmptyGridError(LatentSpaceError):
    """候选 λ 网格为空"""


class EmptyHoldoutError(LatentSpaceError):
    """留出集合为空"""


class ZeroDenominatorError(LatentSpaceError):
    """相对误差的真值范数为 0"""


class GraphFileError(LatentSpaceError):
    """图文件读写错误基类"""


class ParseError(GraphFileError):
    """边列表解析失败"""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        location = ''
        if path is not None:
            location += f'{path}'
        if line is not None:
            location += f':{line}'
        super().__init__(f'{location}: {message}' if location else message)


class DuplicateNodeError(GraphFileError):
    """节点文件中出现重复标签"""


class SelfLoopError(GraphFileError):
    """边列表中出现自环"""

    def __init__(self, label, line=None):
        self.label = label
        self.line = line
        super().__init__(f'第 {line} 行: 不允许自环 ({label} -- {label})')


class MissingNodeError(GraphFileError):
    """目标网络节点在源网络中找不到"""

    def __init__(self, label, source):
        self.label = label
        self.source = source
        super().__init__(f'目标节点 {label!r} 不在源网络 {source!r} 中')


class AmbiguousAlignmentError(GraphFileError):
    """对齐文件不是单射"""
