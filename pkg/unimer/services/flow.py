"""光流文件读写、亚像素采样与内置光流估计"""
import logging
import math
from pathlib import Path
from typing import BinaryIO, Tuple, Union

import cv2
import numpy as np
from scipy.ndimage import convolve, gaussian_filter

from unimer.errors import BadMagic, DimMismatch, MalformedInput, NonPositiveDims, OutOfBounds, TruncatedPayload
from unimer.schemas.flow import FlowField
from unimer.schemas.params import FlowEstimatorParams

logger = logging.getLogger(__name__)

FLOW_MAGIC = 202021.25
HEADER_SIZE = 12

_HEADER_DTYPE = np.dtype([("magic", "<f4"), ("width", "<i4"), ("height", "<i4")])

# Horn-Schunck 邻域均值核
_AVG_KERNEL = np.array([[1, 2, 1], [2, 0, 2], [1, 2, 1]], dtype=np.float64) / 12.0

# 金字塔最粗层的最小边长
_MIN_LEVEL_SIZE = 8


def read_flow_file(source: Union[bytes, BinaryIO]) -> FlowField:
    """解析 .flo 字节流：float32 魔数、int32 宽高、逐行交错的 (u, v) float32"""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    if len(data) < 4:
        raise TruncatedPayload(f"stream too short for magic: {len(data)} bytes")
    magic = float(np.frombuffer(data[:4], dtype="<f4")[0])
    if magic != FLOW_MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {FLOW_MAGIC}")
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload(f"stream too short for header: {len(data)} bytes")

    header = np.frombuffer(data[:HEADER_SIZE], dtype=_HEADER_DTYPE)[0]
    width, height = int(header["width"]), int(header["height"])
    if width <= 0 or height <= 0:
        raise NonPositiveDims(f"non-positive dims {width}x{height}", width=width, height=height)

    expected = HEADER_SIZE + 8 * width * height
    if len(data) < expected:
        raise TruncatedPayload(f"payload has {len(data) - HEADER_SIZE} bytes, need {expected - HEADER_SIZE}")
    if len(data) > expected:
        raise MalformedInput(f"{len(data) - expected} trailing bytes after payload")

    vectors = np.frombuffer(data[HEADER_SIZE:], dtype="<f4").reshape(height, width, 2)
    if not np.isfinite(vectors).all():
        raise MalformedInput("flow payload contains non-finite values")
    return FlowField(vectors=vectors)


def write_flow_file(field: FlowField) -> bytes:
    header = np.array([(FLOW_MAGIC, field.width, field.height)], dtype=_HEADER_DTYPE)
    return header.tobytes() + np.ascontiguousarray(field.vectors, dtype="<f4").tobytes()


def read_flow_path(path: Union[str, Path]) -> FlowField:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise MalformedInput(f"cannot read flow file: {e}", path=str(path))
    return read_flow_file(data)


def write_flow_path(field: FlowField, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_flow_file(field))


def bilinear_sample(field: FlowField, x: float, y: float) -> np.ndarray:
    """双线性插值采样，整数坐标处精确返回网格值"""
    width, height = field.dims
    if not (0 <= x <= width - 1 and 0 <= y <= height - 1):
        raise OutOfBounds(f"({x}, {y}) outside field {width}x{height}", x=x, y=y)

    x0, y0 = int(math.floor(x)), int(math.floor(y))
    x1, y1 = min(x0 + 1, width - 1), min(y0 + 1, height - 1)
    fx, fy = x - x0, y - y0
    vec = field.vectors
    top = vec[y0, x0] * (1 - fx) + vec[y0, x1] * fx
    bottom = vec[y1, x0] * (1 - fx) + vec[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def load_grayscale(path: Union[str, Path]) -> np.ndarray:
    """8 位灰度图，归一化到 [0, 1]"""
    image = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise MalformedInput(f"cannot read image {path}", path=str(path))
    return image.astype(np.float64) / 255.0


def _warp(image: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """按当前光流在 (x+u, y+v) 处采样 image"""
    height, width = image.shape
    grid_x, grid_y = np.meshgrid(np.arange(width, dtype=np.float32), np.arange(height, dtype=np.float32))
    map_x = grid_x + u.astype(np.float32)
    map_y = grid_y + v.astype(np.float32)
    warped = cv2.remap(image.astype(np.float32), map_x, map_y, cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE)
    return warped.astype(np.float64)


def _refine(a: np.ndarray, b: np.ndarray, u: np.ndarray, v: np.ndarray, params: FlowEstimatorParams) -> Tuple[np.ndarray, np.ndarray]:
    """单层：多次 warp，每次对增量求解 Horn-Schunck"""
    alpha2 = params.smoothness_weight ** 2
    for _ in range(params.warps):
        warped = _warp(b, u, v)
        iy, ix = np.gradient(0.5 * (a + warped))
        it = warped - a
        denom = alpha2 + ix ** 2 + iy ** 2

        du = np.zeros_like(u)
        dv = np.zeros_like(v)
        for _ in range(params.iterations):
            u_bar = convolve(u + du, _AVG_KERNEL, mode="nearest") - u
            v_bar = convolve(v + dv, _AVG_KERNEL, mode="nearest") - v
            t = (ix * u_bar + iy * v_bar + it) / denom
            du = u_bar - ix * t
            dv = v_bar - iy * t
        u = u + du
        v = v + dv
    return u, v


def _pyramid(image: np.ndarray, levels: int) -> list:
    pyramid = [image.astype(np.float32)]
    for _ in range(levels - 1):
        height, width = pyramid[-1].shape
        if min(height, width) // 2 < _MIN_LEVEL_SIZE:
            break
        pyramid.append(cv2.pyrDown(pyramid[-1]))
    return pyramid


def estimate_flow(frame_a: np.ndarray, frame_b: np.ndarray, params: FlowEstimatorParams = FlowEstimatorParams()) -> FlowField:
    """金字塔 Horn-Schunck（亮度恒定 + 二次平滑），由粗到细并逐层 warp"""
    if frame_a.shape != frame_b.shape:
        raise DimMismatch(f"frame dims differ: {frame_a.shape} vs {frame_b.shape}")
    if frame_a.ndim != 2:
        raise DimMismatch(f"frames must be single-channel, got shape {frame_a.shape}")
    if min(frame_a.shape) < 2:
        raise MalformedInput(f"frames must be at least 2x2 pixels, got shape {frame_a.shape}")

    a, b = frame_a.astype(np.float64), frame_b.astype(np.float64)
    if params.presmooth_sigma > 0:
        a = gaussian_filter(a, params.presmooth_sigma, mode="nearest")
        b = gaussian_filter(b, params.presmooth_sigma, mode="nearest")

    pyr_a = _pyramid(a, params.pyramid_levels)
    pyr_b = _pyramid(b, params.pyramid_levels)
    logger.debug(f"光流估计：{len(pyr_a)} 层金字塔，最粗层 {pyr_a[-1].shape}")

    u = np.zeros(pyr_a[-1].shape, dtype=np.float64)
    v = np.zeros_like(u)
    for level in range(len(pyr_a) - 1, -1, -1):
        la = pyr_a[level].astype(np.float64)
        lb = pyr_b[level].astype(np.float64)
        height, width = la.shape
        if u.shape != la.shape:
            prev_h, prev_w = u.shape
            u = cv2.resize(u, (width, height), interpolation=cv2.INTER_LINEAR) * (width / prev_w)
            v = cv2.resize(v, (width, height), interpolation=cv2.INTER_LINEAR) * (height / prev_h)
        u, v = _refine(la, lb, u, v, params)

    return FlowField.from_components(u, v)
