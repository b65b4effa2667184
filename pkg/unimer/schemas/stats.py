"""数据集统计 Schemas"""
from typing import Dict, List, Optional

from pydantic import BaseModel


class DistributionRow(BaseModel):
    label: str
    count: int
    percent: float
    description: Optional[str] = None


class DatasetStats(BaseModel):
    total: int
    emotions: List[DistributionRow]
    aus: List[DistributionRow]
    sources: List[DistributionRow]
    # source → emotion → count
    crosstab: Dict[str, Dict[str, int]]
    crosstab_columns: List[str]
