"""数据表缓存管理"""
from pathlib import Path
from typing import Callable, TypeVar

from cachetools import LRUCache

from unimer.config import get_settings

T = TypeVar("T")

settings = get_settings()

# 解析过的数据表（期望表、原型表、分类体系、指令池），按 (类型, 绝对路径) 缓存
table_cache = LRUCache(maxsize=settings.cache_size)


def get_cache_key(kind: str, path: Path) -> str:
    """生成缓存键"""
    return f"{kind}:{path.resolve()}"


def load_table(kind: str, path: Path, loader: Callable[[Path], T]) -> T:
    """缓存未命中时调用 loader 解析并写入缓存"""
    key = get_cache_key(kind, path)
    cached = table_cache.get(key)
    if cached is None:
        cached = loader(path)
        table_cache[key] = cached
    return cached


def clear_all_cache():
    """清除所有缓存"""
    table_cache.clear()
