"""运动证据 Schemas"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class Direction8(str, Enum):
    """八方向（屏幕坐标，90° 为向上）"""
    RIGHT = "Right"
    UPPER_RIGHT = "UpperRight"
    UP = "Up"
    UPPER_LEFT = "UpperLeft"
    LEFT = "Left"
    LOWER_LEFT = "LowerLeft"
    DOWN = "Down"
    LOWER_RIGHT = "LowerRight"

    @property
    def code(self) -> str:
        return DIRECTION_CODES[self]

    @property
    def anchor_degrees(self) -> float:
        return 45.0 * DIRECTION_ORDER.index(self)


# 逆时针顺序，下标 i 对应中心角 45°·i
DIRECTION_ORDER = [
    Direction8.RIGHT,
    Direction8.UPPER_RIGHT,
    Direction8.UP,
    Direction8.UPPER_LEFT,
    Direction8.LEFT,
    Direction8.LOWER_LEFT,
    Direction8.DOWN,
    Direction8.LOWER_RIGHT,
]

DIRECTION_CODES = {
    Direction8.UP: "Up",
    Direction8.UPPER_RIGHT: "UR",
    Direction8.RIGHT: "R",
    Direction8.LOWER_RIGHT: "LR",
    Direction8.DOWN: "D",
    Direction8.LOWER_LEFT: "LL",
    Direction8.LEFT: "L",
    Direction8.UPPER_LEFT: "UL",
}


class IntensityBand(str, Enum):
    STRONG = "Strong"
    SIGNIFICANT = "Significant"
    SUBTLE = "Subtle"
    MICRO = "Micro"

    @property
    def rank(self) -> int:
        return BAND_RANKS[self]


BAND_RANKS = {
    IntensityBand.MICRO: 0,
    IntensityBand.SUBTLE: 1,
    IntensityBand.SIGNIFICANT: 2,
    IntensityBand.STRONG: 3,
}

# 四档强度 → 三级词汇（Micro 另带 below_threshold 标记）
INTENSITY_WORDS = {
    IntensityBand.STRONG: "high",
    IntensityBand.SIGNIFICANT: "medium",
    IntensityBand.SUBTLE: "low",
    IntensityBand.MICRO: "low",
}


class MotionEvidence(BaseModel):
    """单个 ROI 的运动证据 (theta, m)"""
    model_config = ConfigDict(frozen=True)

    region: str
    theta: float = Field(ge=0, lt=360)
    direction8: Direction8
    peak_intensity: float = Field(ge=0)
    band: IntensityBand
    pixel_count: int = 0
    # 以下两项供 AU 专属方向/径向判定使用；无运动时为 None
    upward_fraction: Optional[float] = None
    radial_inward_fraction: Optional[float] = None

    @property
    def has_motion(self) -> bool:
        return self.peak_intensity > 0

    @property
    def intensity_word(self) -> str:
        return INTENSITY_WORDS[self.band]

    @property
    def below_threshold(self) -> bool:
        return self.band == IntensityBand.MICRO
