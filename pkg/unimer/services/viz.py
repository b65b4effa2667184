"""光流 HSV 可视化：色相表示方向，亮度表示强度"""
import logging
from pathlib import Path
from typing import Union

import cv2
import numpy as np

from unimer.errors import MalformedInput
from unimer.schemas.evidence import DIRECTION_ORDER, Direction8
from unimer.schemas.flow import FlowField
from unimer.services.evidence import screen_angle

logger = logging.getLogger(__name__)

# 8 个方向的锚点色相（度）：红 粉 紫 蓝 青 绿 黄绿 橙
ANCHOR_HUES = {
    Direction8.RIGHT: 0.0,
    Direction8.UPPER_RIGHT: 315.0,
    Direction8.UP: 275.0,
    Direction8.UPPER_LEFT: 240.0,
    Direction8.LEFT: 180.0,
    Direction8.LOWER_LEFT: 120.0,
    Direction8.DOWN: 75.0,
    Direction8.LOWER_RIGHT: 30.0,
}

# 角度 0..360 上的插值节点，色相随角度单调递减（360 即 0）
_ANGLE_NODES = np.arange(0.0, 361.0, 45.0)
_HUE_NODES = np.array([360.0] + [ANCHOR_HUES[d] for d in DIRECTION_ORDER[1:]] + [0.0])


def angle_to_hue(angle):
    return np.interp(angle, _ANGLE_NODES, _HUE_NODES) % 360.0


def _hsv_to_rgb(hue: np.ndarray, value: np.ndarray) -> np.ndarray:
    hsv = np.stack([hue, np.ones_like(hue), value], axis=-1).astype(np.float32)
    rgb = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def flow_to_image(field: FlowField, epsilon: float = 1e-6) -> np.ndarray:
    """(H, W, 3) uint8 RGB；饱和度固定为最大，亮度 = 模长 / 场内最大模长，静止像素为黑"""
    magnitudes = field.magnitudes()
    peak = float(magnitudes.max())
    moving = magnitudes >= epsilon
    if peak < epsilon:
        value = np.zeros_like(magnitudes)
    else:
        value = np.where(moving, magnitudes / peak, 0.0)
    hue = np.where(moving, angle_to_hue(screen_angle(field.u, field.v)), 0.0)
    return _hsv_to_rgb(hue, value)


def color_to_direction(rgb) -> Direction8:
    """颜色反查方向：取色相最近的锚点"""
    pixel = np.asarray(rgb, dtype=np.float32).reshape(1, 1, 3) / 255.0
    hue = float(cv2.cvtColor(pixel, cv2.COLOR_RGB2HSV)[0, 0, 0])

    def distance(direction: Direction8) -> float:
        d = abs(hue - ANCHOR_HUES[direction]) % 360.0
        return min(d, 360.0 - d)

    return min(DIRECTION_ORDER, key=distance)


def legend_image(size: int = 256) -> np.ndarray:
    """色轮 + 底部 8 个锚点色块（按 DIRECTION_ORDER 排列）"""
    center = (size - 1) / 2.0
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    dx, dy = xs - center, ys - center
    radius = np.hypot(dx, dy) / center
    inside = radius <= 1.0
    wheel = _hsv_to_rgb(angle_to_hue(screen_angle(dx, dy)), np.where(inside, 1.0, 0.0))

    swatch = size // 8
    strip = np.zeros((swatch, size, 3), dtype=np.uint8)
    for i, direction in enumerate(DIRECTION_ORDER):
        color = _hsv_to_rgb(np.array([[ANCHOR_HUES[direction]]]), np.ones((1, 1)))[0, 0]
        strip[:, i * swatch:(i + 1) * swatch] = color
    return np.concatenate([wheel, strip], axis=0)


def write_image(path: Union[str, Path], image: np.ndarray) -> None:
    """写无损 PNG；三通道输入视为 RGB"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = cv2.cvtColor(image, cv2.COLOR_RGB2BGR) if image.ndim == 3 else image
    try:
        written = cv2.imwrite(str(path), data)
    except cv2.error as e:
        raise MalformedInput(f"cannot write image {path}: {e}", path=str(path))
    if not written:
        raise MalformedInput(f"cannot write image {path}", path=str(path))


def read_image(path: Union[str, Path]) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise MalformedInput(f"cannot read image {path}", path=str(path))
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)
