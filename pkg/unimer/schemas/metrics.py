"""评测 Schemas"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class PredictionRecord(BaseModel):
    """从模型输出中解析出的预测"""
    id: str = ""
    predicted_emotion: Optional[str] = None
    predicted_aus: Optional[List[str]] = None
    raw_text: Optional[str] = None
    invalid_labels: List[str] = Field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return self.predicted_emotion is not None or self.predicted_aus is not None


class MetricReport(BaseModel):
    """情绪识别指标"""
    classes: List[str]
    total: int
    acc: float
    uf1: float
    uar: float
    per_class_f1: Dict[str, float]
    per_class_recall: Dict[str, float]
    confusion: List[List[int]]  # 行 = GT，列 = 预测（最后一列为无效预测）
    invalid_predictions: int = 0
    undefined_classes: List[str] = Field(default_factory=list)


class AuMetricReport(BaseModel):
    """AU 检测指标（逐 AU 二分类 F1）"""
    aus: List[str]
    total: int
    per_au_f1: Dict[str, float]
    mean_f1: float
    support: Dict[str, int]
    invalid_predictions: int = 0
    undefined_aus: List[str] = Field(default_factory=list)
