"""哈希处理：提示词抽取种子与输入溯源"""
import hashlib
from pathlib import Path
from typing import Union


def hash_field(value: str) -> int:
    """对字符串进行哈希，返回整数"""
    # 使用 md5 获取跨进程稳定的哈希值
    hash_bytes = hashlib.md5(value.encode()).digest()
    # 转换为整数（取前8字节）
    return int.from_bytes(hash_bytes[:8], byteorder='big')


def pool_index(seed: int, task_id: str, sample_id: str, pool_size: int) -> int:
    """按 (seed, task, sample) 确定性地选择指令池下标"""
    if pool_size < 1:
        raise ValueError("instruction pool is empty")
    return hash_field(f"{seed}:{task_id}:{sample_id}") % pool_size


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    """文件内容的 sha256"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def short_id_hash(sample_id: str) -> str:
    """样本 id 的短哈希（用于文件名去冲突）"""
    return hashlib.md5(sample_id.encode()).hexdigest()[:8]
