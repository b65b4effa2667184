"""清单过滤表达式计算"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import yaml
from pydantic import TypeAdapter, ValidationError

from unimer.errors import ConfigError
from unimer.schemas.filter import ConditionGroup
from unimer.schemas.record import SampleRecord

logger = logging.getLogger(__name__)

_GROUPS_ADAPTER = TypeAdapter(List[ConditionGroup])


def _parse_list_value(value: Union[str, list]) -> List[str]:
    """
    解析列表值，支持：
    - 数组：["CASME2", "SAMM"]
    - 逗号分割："CASME2,SAMM"
    - 换行符分割："CASME2\nSAMM"
    """
    if isinstance(value, list):
        return [str(v).strip() for v in value]
    if isinstance(value, str):
        sep = "\n" if "\n" in value else ","
        return [v.strip() for v in value.split(sep) if v.strip()]
    return []


def record_context(record: SampleRecord) -> Dict[str, str]:
    """过滤条件可引用的字段"""
    return {
        "id": record.id,
        "source_dataset": record.source_dataset,
        "gt_emotion": record.gt_emotion,
        "source_emotion": record.source_emotion or record.gt_emotion,
    }


def evaluate_condition(condition: Dict[str, Any], context: Dict[str, str]) -> bool:
    """
    计算单个条件

    {"field": "source_dataset", "operator": "not in", "value": ["SAMM"]}
    """
    operator = condition.get("operator")
    value = condition.get("value")
    field_value = context.get(condition.get("field"))
    if field_value is None:
        return False

    if operator == "==":
        return field_value == str(value)
    if operator == "!=":
        return field_value != str(value)
    if operator == "in":
        return field_value in _parse_list_value(value)
    if operator == "not in":
        return field_value not in _parse_list_value(value)
    raise ConfigError(f"unknown filter operator {operator!r}")


def evaluate_conditions(conditions: List[Dict[str, Any]], context: Dict[str, str], logic: str = "and") -> bool:
    """组内条件：and 全部满足，or 任一满足；空列表视为满足"""
    if not conditions:
        return True
    results = (evaluate_condition(c, context) for c in conditions)
    return any(results) if logic == "or" else all(results)


def evaluate_condition_groups(groups: List[Dict[str, Any]], context: Dict[str, str]) -> bool:
    """多个条件组之间为 OR；无条件组视为满足"""
    if not groups:
        return True
    return any(
        evaluate_conditions(g.get("conditions", []), context, g.get("logic", "and"))
        for g in groups
    )


def filter_records(records: Sequence[SampleRecord], groups: List[Dict[str, Any]]) -> List[SampleRecord]:
    kept = [r for r in records if evaluate_condition_groups(groups, record_context(r))]
    logger.info(f"过滤后保留 {len(kept)}/{len(records)} 个样本")
    return kept


def source_groups(exclude: Sequence[str] = (), only: Sequence[str] = ()) -> List[Dict[str, Any]]:
    """--filter-source / --only-source 对应的条件组"""
    conditions = []
    if exclude:
        conditions.append({"field": "source_dataset", "operator": "not in", "value": list(exclude)})
    if only:
        conditions.append({"field": "source_dataset", "operator": "in", "value": list(only)})
    return [{"logic": "and", "conditions": conditions}] if conditions else []


def load_filter_file(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """YAML 条件组列表"""
    try:
        groups = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or []
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load filter file: {e}", path=str(path))
    if not isinstance(groups, list):
        raise ConfigError("filter file must be a list of condition groups", path=str(path))
    try:
        parsed = _GROUPS_ADAPTER.validate_python(groups)
    except ValidationError as e:
        first = e.errors(include_url=False)[0]
        where = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigError(f"invalid condition group at {where}: {first['msg']}", path=str(path))
    return [group.model_dump() for group in parsed]
