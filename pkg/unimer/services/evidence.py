"""区域运动证据：主方向、峰值强度、强度分档与方向/径向判定"""
import logging
import math
from fractions import Fraction
from typing import Dict, Mapping, Tuple

import numpy as np
from scipy.ndimage import binary_erosion

from unimer.errors import AllZeroMotion, DimMismatch, EmptyMask
from unimer.schemas.evidence import DIRECTION_ORDER, Direction8, IntensityBand, MotionEvidence
from unimer.schemas.flow import FlowField
from unimer.schemas.geometry import RoiMask
from unimer.schemas.params import EvidenceParams, IntensityThresholds

logger = logging.getLogger(__name__)

# 4 邻接结构元
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _masked(field: FlowField, mask: RoiMask) -> Tuple[np.ndarray, np.ndarray]:
    if mask.dims != field.dims:
        raise DimMismatch(f"mask {mask.region_name} dims {mask.dims} differ from flow dims {field.dims}")
    if mask.is_empty:
        raise EmptyMask(f"mask {mask.region_name} is empty", region=mask.region_name)
    return field.u[mask.bits], field.v[mask.bits]


def screen_angle(u, v):
    """屏幕坐标角度（度，[0, 360)），90° 为画面向上"""
    return np.degrees(np.arctan2(-np.asarray(v, dtype=np.float64), u)) % 360.0


def quantize_direction(theta: float) -> Direction8:
    """45° 宽的 8 个方向区间，边界上归入逆时针一侧"""
    return DIRECTION_ORDER[int(math.floor((theta + 22.5) / 45.0)) % 8]


def dominant_direction(field: FlowField, mask: RoiMask) -> Tuple[float, Direction8]:
    u, v = _masked(field, mask)
    n = u.size
    mean_u = math.fsum(u.tolist()) / n
    mean_v = math.fsum(v.tolist()) / n
    theta = math.degrees(math.atan2(-mean_v, mean_u)) % 360.0
    if theta >= 360.0:
        theta = 0.0
    return theta, quantize_direction(theta)


def peak_intensity(field: FlowField, mask: RoiMask, params: EvidenceParams = EvidenceParams()) -> float:
    """掩码内模长最大的 ceil(K%·N)（至少 1）个像素的平均模长"""
    u, v = _masked(field, mask)
    magnitudes = np.sort(np.hypot(u, v))[::-1]
    k = max(1, math.ceil(Fraction(params.top_fraction) * magnitudes.size / 100))
    return math.fsum(magnitudes[:k].tolist()) / k


def classify_intensity(m: float, thresholds: IntensityThresholds = IntensityThresholds()) -> IntensityBand:
    if m > thresholds.strong:
        return IntensityBand.STRONG
    if m > thresholds.significant:
        return IntensityBand.SIGNIFICANT
    if m > thresholds.subtle:
        return IntensityBand.SUBTLE
    return IntensityBand.MICRO


def arc_fraction(field: FlowField, mask: RoiMask, arc: Tuple[float, float]) -> float:
    """逐像素角度落在闭区间弧 [lo, hi] 内的比例（跨 0° 的弧按环绕处理），零向量不计入"""
    u, v = _masked(field, mask)
    moving = np.hypot(u, v) > 0
    if not moving.any():
        raise AllZeroMotion(f"no motion inside {mask.region_name}", region=mask.region_name)
    angles = screen_angle(u[moving], v[moving])
    lo, hi = arc
    if lo <= hi:
        hit = (angles >= lo) & (angles <= hi)
    else:
        hit = (angles >= lo) | (angles <= hi)
    return float(np.count_nonzero(hit)) / angles.size


def upward_fraction(field: FlowField, mask: RoiMask, params: EvidenceParams = EvidenceParams()) -> float:
    return arc_fraction(field, mask, params.upward_arc)


def boundary_bits(mask: RoiMask) -> np.ndarray:
    """边界像素：至少有一个 4 邻居未置位（画面边缘视为未置位）"""
    eroded = binary_erosion(mask.bits, structure=_CROSS, border_value=0)
    return mask.bits & ~eroded


def radial_inward_fraction(field: FlowField, mask: RoiMask) -> float:
    """边界像素中，光流与指向掩码质心的向量点积为正的比例"""
    _masked(field, mask)
    boundary = boundary_bits(mask)
    if np.count_nonzero(boundary) < 3:
        raise EmptyMask(f"mask {mask.region_name} has fewer than 3 boundary pixels", region=mask.region_name)

    rows, cols = np.nonzero(mask.bits)
    cx, cy = cols.mean(), rows.mean()
    b_rows, b_cols = np.nonzero(boundary)
    u = field.u[b_rows, b_cols]
    v = field.v[b_rows, b_cols]
    moving = np.hypot(u, v) > 0
    if not moving.any():
        raise AllZeroMotion(f"no motion on boundary of {mask.region_name}", region=mask.region_name)

    dot = u * (cx - b_cols) + v * (cy - b_rows)
    return float(np.count_nonzero(dot[moving] > 0)) / int(np.count_nonzero(moving))


def region_evidence(field: FlowField, mask: RoiMask, params: EvidenceParams = EvidenceParams()) -> MotionEvidence:
    theta, direction = dominant_direction(field, mask)
    peak = peak_intensity(field, mask, params)
    try:
        upward = upward_fraction(field, mask, params)
    except AllZeroMotion:
        upward = None
    try:
        inward = radial_inward_fraction(field, mask)
    except (AllZeroMotion, EmptyMask):
        inward = None
    return MotionEvidence(
        region=mask.region_name,
        theta=theta,
        direction8=direction,
        peak_intensity=peak,
        band=classify_intensity(peak, params.thresholds),
        pixel_count=mask.pixel_count,
        upward_fraction=upward,
        radial_inward_fraction=inward,
    )


def evidence_vector(field: FlowField, masks: Mapping[str, RoiMask], params: EvidenceParams = EvidenceParams()) -> Dict[str, MotionEvidence]:
    """逐区域计算证据，按区域名排序；空掩码跳过并告警"""
    evidence: Dict[str, MotionEvidence] = {}
    for name in sorted(masks):
        mask = masks[name]
        if mask.is_empty:
            logger.warning(f"区域 {name} 掩码为空，跳过")
            continue
        evidence[name] = region_evidence(field, mask, params)
    return evidence
