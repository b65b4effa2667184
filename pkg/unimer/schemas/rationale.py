"""双向验证与解释文本 Schemas"""
from enum import Enum
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from unimer.schemas.evidence import IntensityBand, MotionEvidence


class MotionTest(str, Enum):
    UPWARD_ARC = "UpwardArc"
    DOWNWARD_ARC = "DownwardArc"
    RADIAL_INWARD = "RadialInward"
    LATERAL_OUTWARD = "LateralOutward"
    UPWARD_ARC_NARROW = "UpwardArcNarrow"
    UPWARD_OUTWARD = "UpwardOutward"
    ANY_DIRECTION = "AnyDirection"


class AuExpectation(BaseModel):
    """某个 AU 的期望运动"""
    model_config = ConfigDict(frozen=True)

    au: str
    regions: Tuple[str, ...] = ()
    motion_test: MotionTest
    min_band: IntensityBand = IntensityBand.MICRO


class ForwardStatus(str, Enum):
    VERIFIED = "verified"
    CONTRADICTED = "contradicted"
    ABSENT = "absent"


class ForwardResult(BaseModel):
    """正向验证中单个 AU 的结果"""
    model_config = ConfigDict(frozen=True)

    au: str
    status: ForwardStatus
    supporting: Tuple[MotionEvidence, ...] = ()
    # region → 该 region 上的判定
    region_status: Dict[str, ForwardStatus] = Field(default_factory=dict)


class Attribution(str, Enum):
    BLINK = "blink"
    NOISE = "noise"


class Anomaly(BaseModel):
    model_config = ConfigDict(frozen=True)

    region: str
    evidence: MotionEvidence
    attribution: Attribution


class Symmetry(str, Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


class VerificationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    forward: Dict[str, ForwardResult]
    anomalies: Tuple[Anomaly, ...] = ()

    def contradicted(self) -> List[str]:
        return [au for au, r in self.forward.items() if r.status == ForwardStatus.CONTRADICTED]


class Rationale(BaseModel):
    """三段式解释：分析过程 / 表情推理 / 最终结论"""
    model_config = ConfigDict(frozen=True)

    analysis: str
    reasoning: str
    conclusion: str

    def text(self) -> str:
        return (
            f"Analysis process: {self.analysis}\n"
            f"Expression reasoning: {self.reasoning}\n"
            f"Conclusion: {self.conclusion}"
        )


class EmotionPrototype(BaseModel):
    """AU 组合 → 典型情绪"""
    model_config = ConfigDict(frozen=True)

    au_pattern: Tuple[str, ...]
    emotion: str
    note: str
    # 仅在单侧出现时才指向该情绪
    unilateral: bool = False

    @field_validator("au_pattern")
    @classmethod
    def _non_empty(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        if not v:
            raise ValueError("au_pattern must not be empty")
        return v
