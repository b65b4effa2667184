"""几何相关 Schemas：关键点、ROI 定义与掩码"""
import math
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

LANDMARK_COUNT = 468


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    CENTRAL = "central"


class LandmarkSet(BaseModel):
    """468 点人脸关键点（像素坐标，原点左上，y 向下）"""
    model_config = ConfigDict(frozen=True)

    points: Tuple[Tuple[float, float], ...]
    frame_dims: Tuple[int, int]  # (width, height)

    @field_validator("frame_dims")
    @classmethod
    def _check_dims(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 1 or v[1] < 1:
            raise ValueError(f"frame_dims must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def _check_points(self) -> "LandmarkSet":
        if len(self.points) != LANDMARK_COUNT:
            raise ValueError(f"expected {LANDMARK_COUNT} points, got {len(self.points)}")
        width, height = self.frame_dims
        for i, (x, y) in enumerate(self.points):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"point {i} is not finite")
            # 允许检测器抖动导致的轻微越界
            if abs(x) >= 4 * width or abs(y) >= 4 * height:
                raise ValueError(f"point {i} lies far outside the frame")
        return self

    def array(self) -> np.ndarray:
        """(468, 2) float64 数组"""
        return np.asarray(self.points, dtype=np.float64)

    def select(self, indices: List[int]) -> np.ndarray:
        return self.array()[list(indices)]

    def translated(self, dx: float, dy: float) -> "LandmarkSet":
        return LandmarkSet(
            points=tuple((x + dx, y + dy) for x, y in self.points),
            frame_dims=self.frame_dims,
        )


class RoiSpec(BaseModel):
    """单个 ROI 定义"""
    model_config = ConfigDict(frozen=True)

    name: str
    landmark_indices: Tuple[int, ...]
    side: Side

    @field_validator("landmark_indices")
    @classmethod
    def _check_indices(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        bad = [i for i in v if not 0 <= i < LANDMARK_COUNT]
        if bad:
            raise ValueError(f"landmark indices out of range: {bad}")
        if len(set(v)) != len(v):
            raise ValueError("landmark indices must be distinct")
        return v


class RoiCatalog(BaseModel):
    """17 个 ROI 及 AU→ROI 映射"""
    model_config = ConfigDict(frozen=True)

    regions: Dict[str, RoiSpec]
    au_to_regions: Dict[str, Tuple[str, ...]]
    paired: Tuple[Tuple[str, str], ...]
    au_descriptions: Dict[str, str]
    periorbital: Tuple[str, ...]

    @model_validator(mode="after")
    def _check_refs(self) -> "RoiCatalog":
        for au, names in self.au_to_regions.items():
            missing = [n for n in names if n not in self.regions]
            if missing:
                raise ValueError(f"{au} references unknown regions {missing}")
        for left, right in self.paired:
            if left not in self.regions or right not in self.regions:
                raise ValueError(f"unknown pair ({left}, {right})")
        return self

    def regions_to_aus(self) -> Dict[str, Tuple[str, ...]]:
        """反查：region → 关联的 AU 列表"""
        inverse: Dict[str, List[str]] = {name: [] for name in self.regions}
        for au, names in self.au_to_regions.items():
            for name in names:
                inverse[name].append(au)
        return {name: tuple(aus) for name, aus in inverse.items()}


class RoiMask(BaseModel):
    """ROI 二值掩码，bits 形状为 (height, width)"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dims: Tuple[int, int]  # (width, height)
    bits: np.ndarray
    region_name: str
    fallback: bool = False  # 是否使用了包围盒回退

    @model_validator(mode="after")
    def _check_bits(self) -> "RoiMask":
        width, height = self.dims
        if self.bits.shape != (height, width) or self.bits.dtype != np.bool_:
            raise ValueError(f"bits must be a bool array of shape {(height, width)}")
        return self

    @property
    def pixel_count(self) -> int:
        return int(self.bits.sum())

    @property
    def is_empty(self) -> bool:
        return not self.bits.any()
