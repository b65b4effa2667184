"""清单过滤条件"""
from typing import List, Literal, Union

from pydantic import BaseModel, ConfigDict


class Condition(BaseModel):
    """条件"""
    model_config = ConfigDict(extra="forbid")

    field: str
    operator: Literal["==", "!=", "in", "not in"]
    value: Union[int, str, List[str]]  # in / not in 也接受逗号或换行分隔的字符串


class ConditionGroup(BaseModel):
    """条件组（组内按 logic 逻辑，组间 OR）"""
    model_config = ConfigDict(extra="forbid")

    logic: Literal["and", "or"] = "and"
    conditions: List[Condition] = []
