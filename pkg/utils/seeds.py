# coding: utf-8
"""
随机种子派生
同一个主种子 + 任意键序列 -> 稳定的子种子，与进程、求值顺序无关
"""
import hashlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _key_entropy(key: Key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFFFFFFFFFF
    # 字符串键用 sha256，避免 hash() 的进程随机化
    digest = hashlib.sha256(str(key).encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


def derive_seed(master: int, *keys: Key) -> int:
    """
    派生子种子

    Args:
        master: 主种子
        keys: 整数或字符串键，例如 ('mask', 2) 或 ('cv', 'source_03')

    Returns:
        int: 64 位非负整数
    """
    entropy = [_key_entropy(master)] + [_key_entropy(key) for key in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def rng_for(master: int, *keys: Key) -> np.random.Generator:
    """派生种子对应的 Generator"""
    return np.random.default_rng(derive_seed(master, *keys))
