# coding: utf-8
"""
模型与报告持久化
模型文件为 JSON，写入先落到临时文件再替换，避免产生半截文件
"""
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from __version__ import __version__
from config import Config
from services.cache_service import config_hash

logger = logging.getLogger(__name__)

MODEL_FORMAT = 'lsm-transfer-model'


class ModelStore:
    """模型/报告/表格的读写"""

    def __init__(self, temp_dir: Optional[str] = None):
        """
        Args:
            temp_dir: 临时文件目录，默认取 LSM_TRANSFER_TMPDIR 或系统临时目录
        """
        self.temp_dir = Path(temp_dir) if temp_dir else Config.temp_dir()

    def _atomic_write(self, path, text: str):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.temp_dir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix='.lsm-', suffix='.tmp', dir=str(self.temp_dir))
        try:
            with os.fdopen(fd, 'w', encoding='utf-8') as f:
                f.write(text)
            # 临时目录与目标不在同一文件系统时 os.replace 会失败，退回目标目录
            try:
                os.replace(tmp, path)
            except OSError:
                local_fd, local_tmp = tempfile.mkstemp(prefix='.lsm-', dir=str(path.parent))
                with os.fdopen(local_fd, 'w', encoding='utf-8') as f:
                    f.write(text)
                os.replace(local_tmp, path)
                os.unlink(tmp)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def save_model(self, path, labels: Sequence[str], alpha: np.ndarray, z: np.ndarray,
                   command: str, seed: int, config: Dict[str, Any]) -> Tuple[bool, str]:
        """
        保存模型

        Args:
            path: 输出路径
            labels: 目标网络节点标签
            alpha: 度异质性参数
            z: 潜在位置 n×k
            command: 生成该模型的子命令
            seed: 随机种子
            config: 生效的配置 (写入 provenance)

        Returns:
            (success, message)
        """
        try:
            z = np.asarray(z, dtype=float)
            alpha = np.asarray(alpha, dtype=float)
            payload = {
                'format': MODEL_FORMAT,
                'version': __version__,
                'k': int(z.shape[1]),
                'labels': list(labels),
                'alpha': alpha.tolist(),
                'z': z.tolist(),
                'provenance': {
                    'command': command,
                    'seed': int(seed),
                    'config': config,
                    'config_hash': config_hash(config),
                },
            }
            self._atomic_write(path, json.dumps(payload, ensure_ascii=False, indent=2, default=str))
            logger.info('模型已保存: %s', path)
            return True, "模型保存成功"
        except (OSError, TypeError, ValueError) as e:
            return False, f"保存模型失败: {str(e)}"

    def load_model(self, path) -> Tuple[bool, Any]:
        """
        读取模型

        Returns:
            (True, dict) 或 (False, 错误信息)；dict 中 alpha/z 为 numpy 数组
        """
        path = Path(path)
        if not path.exists():
            return False, f"文件不存在: {path}"
        try:
            with open(path, 'r', encoding='utf-8') as f:
                payload = json.load(f)
            if payload.get('format') != MODEL_FORMAT:
                return False, f"不是模型文件: {path}"
            payload['alpha'] = np.asarray(payload['alpha'], dtype=float)
            payload['z'] = np.asarray(payload['z'], dtype=float).reshape(-1, payload['k'])
            if payload['z'].shape[0] != len(payload['labels']) or \
                    payload['alpha'].shape[0] != len(payload['labels']):
                return False, f"模型文件维度不一致: {path}"
            return True, payload
        except (OSError, ValueError, KeyError) as e:
            return False, f"读取模型失败: {str(e)}"

    def save_json(self, path, payload: Dict[str, Any]) -> Tuple[bool, str]:
        """保存任意 JSON 文档 (检测报告、真值等)"""
        try:
            self._atomic_write(path, json.dumps(payload, ensure_ascii=False, indent=2, default=str))
            return True, "文件保存成功"
        except (OSError, TypeError, ValueError) as e:
            return False, f"保存文件失败: {str(e)}"

    def load_json(self, path) -> Tuple[bool, Any]:
        path = Path(path)
        if not path.exists():
            return False, f"文件不存在: {path}"
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return True, json.load(f)
        except (OSError, ValueError) as e:
            return False, f"读取文件失败: {str(e)}"

    def save_table(self, path, table: pd.DataFrame) -> Tuple[bool, str]:
        """保存 CSV 表格"""
        try:
            self._atomic_write(path, table.to_csv(index=False))
            return True, "表格保存成功"
        except (OSError, ValueError) as e:
            return False, f"保存表格失败: {str(e)}"
