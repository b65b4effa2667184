"""样本清单、指令三元组与输出记录 Schemas"""
import re
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

_AU_PATTERN = re.compile(r"^\s*(?:AU)?\s*[LRB]?\s*(\d+)\s*[A-E]?\s*$", re.IGNORECASE)


def parse_au_label(label: Union[int, str]) -> str:
    """将 4 / "4" / "AU4" / "L4" / "AU4B" 统一为 "AU4" """
    if isinstance(label, bool):
        raise ValueError(f"invalid AU label: {label!r}")
    if isinstance(label, int):
        return f"AU{label}"
    match = _AU_PATTERN.match(str(label))
    if not match:
        raise ValueError(f"invalid AU label: {label!r}")
    return f"AU{int(match.group(1))}"


def au_number(label: str) -> int:
    return int(label[2:])


def sort_aus(labels) -> List[str]:
    return sorted(set(labels), key=au_number)


class SampleRecord(BaseModel):
    """清单中的一个样本"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    source_dataset: str = "unknown"
    frame_paths: Optional[List[str]] = None
    flow_path: Optional[str] = None
    landmarks_path: str
    landmarks_normalized: bool = False
    gt_aus: List[str] = Field(default_factory=list)
    gt_emotion: str
    onset: Optional[int] = None
    apex: Optional[int] = None
    offset: Optional[int] = None
    # 分类体系映射留下的溯源信息
    source_emotion: Optional[str] = None
    dropped_aus: List[str] = Field(default_factory=list)

    @field_validator("id")
    @classmethod
    def _check_id(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("sample id must not be empty")
        return v

    @field_validator("gt_aus", mode="before")
    @classmethod
    def _parse_aus(cls, v) -> List[str]:
        if v is None:
            return []
        if isinstance(v, (str, int)):
            v = [p for p in re.split(r"[+,\s]+", str(v)) if p]
        return sort_aus(parse_au_label(a) for a in v)

    @model_validator(mode="after")
    def _check_inputs(self) -> "SampleRecord":
        has_frames = bool(self.frame_paths)
        has_flow = self.flow_path is not None
        if has_frames == has_flow:
            raise ValueError("exactly one of frame_paths or flow_path must be given")
        if has_frames and len(self.frame_paths) < 2:
            raise ValueError("frame_paths needs at least two frames")
        if has_frames:
            n = len(self.frame_paths)
            for name in ("onset", "apex", "offset"):
                idx = getattr(self, name)
                if idx is not None and not 0 <= idx < n:
                    raise ValueError(f"{name} index {idx} outside frame list of {n}")
        return self


class Category(BaseModel):
    model_config = ConfigDict(frozen=True)

    aus: List[str]
    emotion: str


class EvidenceEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    direction: Literal["Up", "UR", "R", "LR", "D", "LL", "L", "UL"]
    intensity: Literal["low", "medium", "high"]
    below_threshold: bool = False


class InstructionTriple(BaseModel):
    """(C, E, R) 三元组"""
    model_config = ConfigDict(frozen=True)

    category: Category
    evidence: Dict[str, EvidenceEntry]
    rationale: str

    def target(self) -> Dict[str, object]:
        """与提示词要求的输出格式一致的训练目标"""
        return {
            "aus": list(self.category.aus),
            "emotion": self.category.emotion,
            "evidence": {
                name: {"direction": e.direction, "intensity": e.intensity}
                for name, e in sorted(self.evidence.items())
            },
            "rationale": self.rationale,
        }


TaskId = Literal["[emotion]", "[flow]"]


class PromptBundle(BaseModel):
    model_config = ConfigDict(frozen=True)

    system_prompt: str
    feature_placeholder: str
    task_id: TaskId
    user_prompt: str
    pool_index: int
    target: str

    def text(self) -> str:
        """system → feature → task id → prompt"""
        return f"{self.system_prompt}\n{self.feature_placeholder}\n{self.task_id} {self.user_prompt}"


class Taxonomy(BaseModel):
    model_config = ConfigDict(frozen=True)

    au_whitelist: Tuple[str, ...]
    emotions: Tuple[str, ...]
    emotion_aliases: Dict[str, str]
    fallback_emotion: str = "other"

    def map_emotion(self, label: str) -> str:
        key = label.strip().lower()
        if key in self.emotions:
            return key
        return self.emotion_aliases.get(key, self.fallback_emotion)


class SampleFailure(BaseModel):
    id: str
    reason: str
    detail: str


class BatchSummary(BaseModel):
    total: int
    succeeded: int
    failed: int
    failures: List[SampleFailure] = Field(default_factory=list)


class InstructionPools(BaseModel):
    """系统提示词、特征占位符与各任务的指令池"""
    model_config = ConfigDict(frozen=True)

    system_prompt: str
    feature_placeholder: str
    pools: Dict[str, Tuple[str, ...]]

    @model_validator(mode="after")
    def _check_pools(self) -> "InstructionPools":
        for task_id in ("[emotion]", "[flow]"):
            if not self.pools.get(task_id):
                raise ValueError(f"instruction pool {task_id} is missing or empty")
        return self
