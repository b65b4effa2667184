"""光流场 Schema"""
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class FlowField(BaseModel):
    """稠密光流场，vectors 形状 (height, width, 2)，分量 (u 向右, v 向下)"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def _coerce(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"vectors must have shape (H, W, 2), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("flow field must be at least 1x1")
        if not np.isfinite(arr).all():
            raise ValueError("flow components must be finite")
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_components(cls, u: np.ndarray, v: np.ndarray) -> "FlowField":
        return cls(vectors=np.stack([u, v], axis=-1))

    @classmethod
    def zeros(cls, width: int, height: int) -> "FlowField":
        return cls(vectors=np.zeros((height, width, 2)))

    @property
    def dims(self) -> Tuple[int, int]:
        """(width, height)"""
        return int(self.vectors.shape[1]), int(self.vectors.shape[0])

    @property
    def width(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def height(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def u(self) -> np.ndarray:
        return self.vectors[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.vectors[..., 1]

    def magnitudes(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    def scaled(self, factor: float) -> "FlowField":
        return FlowField(vectors=self.vectors * factor)
