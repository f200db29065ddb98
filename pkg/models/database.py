# coding: utf-8
"""
数据库模型定义
使用 SQLite 存储模拟实验的逐次重复结果
"""
import json
import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional


class Database:
    """数据库管理类"""

    def __init__(self, db_path: str):
        """
        初始化数据库连接

        Args:
            db_path: 数据库文件路径
        """
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_db()

    def _get_connection(self):
        """获取数据库连接"""
        conn = sqlite3.connect(str(self.db_path))
        conn.row_factory = sqlite3.Row  # 使用 Row 工厂，可以通过列名访问
        return conn

    def _init_db(self):
        """初始化数据库表"""
        conn = self._get_connection()
        cursor = conn.cursor()

        # 重复结果表: 每个 (配置, 重复编号, 方法) 一行，指标存为 JSON
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS replicates (
                config_hash TEXT NOT NULL,
                replicate INTEGER NOT NULL,
                method TEXT NOT NULL,
                metrics TEXT NOT NULL,
                selected TEXT,
                created_at REAL NOT NULL,
                PRIMARY KEY (config_hash, replicate, method)
            )
        ''')

        # 配置表: config_hash -> 完整配置
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS configs (
                config_hash TEXT PRIMARY KEY,
                config TEXT NOT NULL,
                created_at REAL NOT NULL
            )
        ''')

        conn.commit()
        conn.close()

    def save_config(self, config_hash: str, config: Dict[str, Any]):
        conn = self._get_connection()
        conn.execute('''
            INSERT OR IGNORE INTO configs (config_hash, config, created_at)
            VALUES (?, ?, ?)
        ''', (config_hash, json.dumps(config, sort_keys=True), datetime.now().timestamp()))
        conn.commit()
        conn.close()

    def get_config(self, config_hash: str) -> Optional[Dict[str, Any]]:
        conn = self._get_connection()
        row = conn.execute('SELECT config FROM configs WHERE config_hash = ?',
                           (config_hash,)).fetchone()
        conn.close()
        return json.loads(row['config']) if row else None

    def upsert_replicate(self, config_hash: str, replicate: int, method: str,
                         metrics: Dict[str, float], selected: Optional[List[int]] = None):
        """
        插入或更新一次重复的结果

        Args:
            config_hash: 配置哈希
            replicate: 重复编号 (从 1 开始)
            method: 方法名
            metrics: 指标名 -> 值
            selected: 选中的源网络下标 (检测类方法)
        """
        conn = self._get_connection()
        conn.execute('''
            INSERT OR REPLACE INTO replicates
            (config_hash, replicate, method, metrics, selected, created_at)
            VALUES (?, ?, ?, ?, ?, ?)
        ''', (
            config_hash,
            int(replicate),
            method,
            json.dumps(metrics, sort_keys=True),
            json.dumps(selected) if selected is not None else None,
            datetime.now().timestamp()
        ))
        conn.commit()
        conn.close()

    def get_replicates(self, config_hash: str) -> List[Dict[str, Any]]:
        """
        获取某个配置下的全部重复结果

        Returns:
            按 (replicate, method) 排序的字典列表
        """
        conn = self._get_connection()
        rows = conn.execute('''
            SELECT * FROM replicates WHERE config_hash = ?
            ORDER BY replicate, method
        ''', (config_hash,)).fetchall()
        conn.close()
        return [self._row_to_dict(row) for row in rows]

    def completed_replicates(self, config_hash: str, methods: List[str]) -> List[int]:
        """所有方法都已完成的重复编号"""
        done: Dict[int, set] = {}
        for row in self.get_replicates(config_hash):
            done.setdefault(row['replicate'], set()).add(row['method'])
        return sorted(r for r, seen in done.items() if set(methods) <= seen)

    def delete_config(self, config_hash: str):
        conn = self._get_connection()
        conn.execute('DELETE FROM replicates WHERE config_hash = ?', (config_hash,))
        conn.execute('DELETE FROM configs WHERE config_hash = ?', (config_hash,))
        conn.commit()
        conn.close()

    def _row_to_dict(self, row: sqlite3.Row) -> Dict[str, Any]:
        data = dict(row)
        # 将 JSON 字符串转换回对象
        data['metrics'] = json.loads(data['metrics'])
        data['selected'] = json.loads(data['selected']) if data['selected'] else None
        return data
