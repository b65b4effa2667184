"""流水线参数 Schemas（默认值即标准常数）"""
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from unimer.schemas.geometry import LANDMARK_COUNT


class CompensationParams(BaseModel):
    """运动补偿参数"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    nose_indices: List[int] = Field(default_factory=lambda: [44, 51, 274, 281])
    epsilon: float = Field(default=1e-6, gt=0)
    gamma: float = Field(default=2.0, gt=0)

    @field_validator("nose_indices")
    @classmethod
    def _check_indices(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("nose_indices must not be empty")
        bad = [i for i in v if not 0 <= i < LANDMARK_COUNT]
        if bad:
            raise ValueError(f"nose_indices out of range: {bad}")
        return v


class IntensityThresholds(BaseModel):
    """强度分档阈值（像素/帧）"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    strong: float = 15.0
    significant: float = 8.0
    subtle: float = 3.0

    @model_validator(mode="after")
    def _check_order(self) -> "IntensityThresholds":
        if not self.strong > self.significant > self.subtle > 0:
            raise ValueError("thresholds must satisfy strong > significant > subtle > 0")
        return self


class EvidenceParams(BaseModel):
    """运动证据参数"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    top_fraction: float = Field(default=10.0, gt=0, le=100)  # K，百分比
    thresholds: IntensityThresholds = Field(default_factory=IntensityThresholds)
    upward_arc: Tuple[float, float] = (45.0, 135.0)
    radial_inward_quota: float = Field(default=0.70, gt=0, le=1)

    @field_validator("upward_arc")
    @classmethod
    def _check_arc(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = v
        if not (0 <= lo < 360 and 0 <= hi < 360):
            raise ValueError("arc bounds must lie in [0, 360)")
        return v


class FlowEstimatorParams(BaseModel):
    """内置光流估计参数（金字塔 Horn-Schunck）"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    smoothness_weight: float = Field(default=0.05, gt=0)
    iterations: int = Field(default=150, ge=1)
    pyramid_levels: int = Field(default=3, ge=1)
    warps: int = Field(default=3, ge=1)
    presmooth_sigma: float = Field(default=1.0, ge=0)
