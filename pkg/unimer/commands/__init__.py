"""命令行子命令：每个模块提供 register(subparsers)，处理函数返回退出码"""
import json
import re
import sys
from pathlib import Path
from typing import Any, List, Optional, Tuple, Union

from unimer.errors import UsageError
from unimer.schemas.record import SampleRecord
from unimer.services.evaluator import filter_records, load_filter_file, source_groups

_DIMS = re.compile(r"^(\d+)[xX](\d+)$")


def parse_dims(value: Optional[str]) -> Optional[Tuple[int, int]]:
    """"640x480" → (640, 480)"""
    if value is None:
        return None
    match = _DIMS.match(value.strip())
    if not match or int(match.group(1)) < 1 or int(match.group(2)) < 1:
        raise UsageError(f"dims must look like WIDTHxHEIGHT, got {value!r}")
    return int(match.group(1)), int(match.group(2))


def dump_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def emit(text: str, out: Union[str, Path, None] = None) -> None:
    """写到文件，未指定时写 stdout"""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def add_filter_arguments(parser) -> None:
    parser.add_argument("--filter-source", action="append", default=[], metavar="NAME",
                        help="exclude samples from this source dataset (repeatable)")
    parser.add_argument("--only-source", action="append", default=[], metavar="NAME",
                        help="keep only samples from this source dataset (repeatable)")
    parser.add_argument("--filter-file", help="YAML list of condition groups")


def apply_filters(records: List[SampleRecord], args) -> List[SampleRecord]:
    """命令行来源条件与 --filter-file 条件需同时满足"""
    records = list(records)
    groups = source_groups(exclude=args.filter_source, only=args.only_source)
    if groups:
        records = filter_records(records, groups)
    if args.filter_file:
        records = filter_records(records, load_filter_file(args.filter_file))
    return records
