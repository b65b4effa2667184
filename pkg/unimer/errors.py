"""异常定义"""
from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONTRACT = 2
EXIT_PARTIAL = 3


class UniMerError(Exception):
    """所有错误的基类，携带退出码和可机读的错误码"""

    code = "error"
    exit_code = EXIT_CONTRACT

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_record(self) -> Dict[str, Any]:
        """转换为诊断流上的错误记录"""
        record = {"error": self.code, "detail": self.detail}
        record.update({k: v for k, v in self.context.items() if v is not None})
        return record


class UsageError(UniMerError):
    code = "usage"
    exit_code = EXIT_USAGE


class ConfigError(UniMerError):
    code = "config_error"


class MalformedInput(UniMerError):
    code = "malformed_input"

    def __init__(self, detail: str, point_index: Optional[int] = None, **context: Any):
        super().__init__(detail, point_index=point_index, **context)
        self.point_index = point_index


class DegenerateHull(UniMerError):
    code = "degenerate_hull"


class FlowFormatError(UniMerError):
    code = "flow_format"


class BadMagic(FlowFormatError):
    code = "bad_magic"


class TruncatedPayload(FlowFormatError):
    code = "truncated_payload"


class NonPositiveDims(FlowFormatError):
    code = "non_positive_dims"


class DimMismatch(UniMerError):
    code = "dim_mismatch"


class OutOfBounds(UniMerError):
    code = "out_of_bounds"


class CentroidOutOfBounds(UniMerError):
    code = "centroid_out_of_bounds"


class EmptyMask(UniMerError):
    code = "empty_mask"


class AllZeroMotion(UniMerError):
    code = "all_zero_motion"


class UnknownAu(UniMerError):
    code = "unknown_au"


class EmptyInput(UniMerError):
    code = "empty_input"


class SampleError(UniMerError):
    """单个样本处理失败（附带样本 id）"""

    code = "sample_error"

    def __init__(self, sample_id: str, cause: Exception):
        reason = cause.code if isinstance(cause, UniMerError) else type(cause).__name__
        detail = cause.detail if isinstance(cause, UniMerError) else str(cause)
        super().__init__(detail, sample_id=sample_id, reason=reason)
        self.sample_id = sample_id
        self.reason = reason
        self.cause = cause
