"""全局头动补偿与 gamma 校正"""
import logging
from typing import Tuple

import numpy as np

from unimer.errors import CentroidOutOfBounds, OutOfBounds
from unimer.schemas.flow import FlowField
from unimer.schemas.geometry import LandmarkSet
from unimer.schemas.params import CompensationParams
from unimer.services.flow import bilinear_sample

logger = logging.getLogger(__name__)


def nose_centroid(landmarks: LandmarkSet, params: CompensationParams = CompensationParams()) -> Tuple[float, float]:
    """鼻部关键点坐标均值"""
    points = landmarks.select(params.nose_indices)
    return float(points[:, 0].mean()), float(points[:, 1].mean())


def compensate(raw: FlowField, landmarks: LandmarkSet, params: CompensationParams = CompensationParams()) -> FlowField:
    """减去鼻尖处的参考向量；模长不超过 epsilon 的像素保持原值"""
    cx, cy = nose_centroid(landmarks, params)
    try:
        reference = bilinear_sample(raw, cx, cy)
    except OutOfBounds:
        raise CentroidOutOfBounds(
            f"nose centroid ({cx:.3f}, {cy:.3f}) outside flow field {raw.width}x{raw.height}",
            x=cx, y=cy,
        )
    logger.debug(f"鼻尖参考向量 ({reference[0]:.4f}, {reference[1]:.4f})")

    moving = raw.magnitudes() > params.epsilon
    vectors = raw.vectors.copy()
    vectors[moving] -= reference
    return FlowField(vectors=vectors)


def gamma_correct(field: FlowField, params: CompensationParams = CompensationParams()) -> FlowField:
    """模长按场内最大值归一化后做幂变换，再乘回最大值；方向不变"""
    magnitudes = field.magnitudes()
    peak = float(magnitudes.max())
    if peak == 0.0:
        return field

    normalized = magnitudes / peak
    corrected = np.power(normalized, params.gamma) * peak
    scale = np.divide(corrected, magnitudes, out=np.zeros_like(magnitudes), where=magnitudes > 0)
    return FlowField(vectors=field.vectors * scale[..., None])
