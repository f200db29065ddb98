# coding: utf-8
"""
模拟结果缓存服务
按配置哈希保存每次重复的结果，中断后可以从已完成的重复继续
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from config import Config
from models.database import Database

logger = logging.getLogger(__name__)


def config_hash(config: Dict[str, Any]) -> str:
    """配置字典的稳定哈希 (键排序后的 JSON 的 sha256 前 16 位)"""
    payload = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]


class CacheService:
    """重复结果缓存"""

    def __init__(self, db_path: Optional[str] = None):
        """
        Args:
            db_path: 数据库文件路径，默认为临时目录下的 lsm_transfer_cache.db
        """
        if db_path is None:
            db_path = Config.temp_dir() / 'lsm_transfer_cache.db'
        self.db_path = Path(db_path)
        self.db = Database(str(self.db_path))

    def initialize(self, config: Dict[str, Any], force_rebuild: bool = False) -> str:
        """
        登记一个实验配置

        Args:
            config: 完整的实验配置
            force_rebuild: 是否清除该配置已有的结果

        Returns:
            config_hash
        """
        key = config_hash(config)
        if force_rebuild:
            self.db.delete_config(key)
            logger.info('已清除配置 %s 的缓存结果', key)
        self.db.save_config(key, config)
        return key

    def completed(self, key: str, methods: List[str]) -> List[int]:
        return self.db.completed_replicates(key, methods)

    def store(self, key: str, replicate: int, rows: List[Dict[str, Any]]):
        """
        保存一次重复的长表行

        Args:
            rows: [{'method', 'metric', 'value', 'selected'(可选)}]
        """
        by_method: Dict[str, Dict[str, float]] = {}
        selected: Dict[str, Any] = {}
        for row in rows:
            by_method.setdefault(row['method'], {})[row['metric']] = row['value']
            if row.get('selected') is not None:
                selected[row['method']] = row['selected']
        for method, metrics in by_method.items():
            self.db.upsert_replicate(key, replicate, method, metrics, selected.get(method))

    def load(self, key: str, replicate: int) -> List[Dict[str, Any]]:
        """读取一次重复的长表行 (与 store 的输入格式一致)"""
        rows = []
        for record in self.db.get_replicates(key):
            if record['replicate'] != replicate:
                continue
            for metric, value in sorted(record['metrics'].items()):
                rows.append({'method': record['method'], 'metric': metric, 'value': value,
                             'selected': record['selected']})
        return rows

    def get_stats(self, key: str) -> Dict[str, Any]:
        records = self.db.get_replicates(key)
        return {
            'config_hash': key,
            'rows': len(records),
            'replicates': len({r['replicate'] for r in records}),
            'methods': sorted({r['method'] for r in records}),
        }
