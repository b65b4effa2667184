"""关键点、ROI 目录与掩码生成"""
import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError

from unimer.errors import DegenerateHull, MalformedInput
from unimer.schemas.geometry import LANDMARK_COUNT, LandmarkSet, RoiCatalog, RoiMask, RoiSpec, Side

logger = logging.getLogger(__name__)

Point = Tuple[float, float]

# 边界判定容差
_EDGE_EPS = 1e-9

_POINTS_ADAPTER = TypeAdapter(List[Tuple[float, float]], config={"strict": True})


def dedupe_preserve_order(values: Iterable[int]) -> List[int]:
    seen = set()
    out = []
    for value in values:
        idx = int(value)
        if idx not in seen:
            seen.add(idx)
            out.append(idx)
    return out


# fmt: off
LEFT_INNER_EYEBROW = [46, 53, 52, 105, 63, 70]
RIGHT_INNER_EYEBROW = [285, 295, 282, 334, 296, 336]
LEFT_OUTER_EYEBROW = [52, 65, 55, 107, 66, 105]
RIGHT_OUTER_EYEBROW = [282, 283, 276, 300, 293, 334]
LEFT_FULL_EYEBROW = [46, 53, 52, 65, 55, 107, 66, 105, 63, 70]
RIGHT_FULL_EYEBROW = [285, 295, 282, 283, 276, 300, 293, 334, 296, 336]
LEFT_UPPER_EYELID = [226, 130, 33, 161, 159, 158, 157, 173, 243, 190, 56, 28, 27, 29, 30, 247]
RIGHT_UPPER_EYELID = [463, 398, 384, 385, 386, 387, 388, 466, 263, 467, 260, 259, 257, 258, 286, 414]
LEFT_LOWER_EYELID = [226, 130, 33, 7, 144, 145, 153, 154, 133, 244, 245, 233, 232, 231, 230, 229, 228, 31]
RIGHT_LOWER_EYELID = [446, 359, 263, 390, 373, 374, 380, 381, 362, 464, 465, 453, 452, 451, 450, 449, 448, 261]
LEFT_NOSE = [64, 98, 165, 206, 36, 142, 49]
RIGHT_NOSE = [294, 327, 391, 426, 266, 371, 279]
MOUTH = [61, 40, 39, 37, 0, 267, 269, 270, 291, 321, 405, 314, 17, 84, 181, 91]
LEFT_MOUTH_CORNER = [57, 43, 146, 96, 183, 186]
RIGHT_MOUTH_CORNER = [287, 273, 375, 325, 407, 410]
CHIN = [17, 18, 83, 182, 194, 32, 140, 176, 148, 152, 377, 400, 369, 262, 418, 406, 313]
# fmt: on

AU_DESCRIPTIONS = {
    "AU1": "Inner Brow Raiser",
    "AU2": "Outer Brow Raiser",
    "AU4": "Brow Lowerer",
    "AU5": "Upper Lid Raiser",
    "AU6": "Cheek Raiser",
    "AU7": "Lid Tightener",
    "AU9": "Nose Wrinkler",
    "AU10": "Upper Lip Raiser",
    "AU12": "Lip Corner Puller",
    "AU14": "Dimpler",
    "AU15": "Lip Corner Depressor",
    "AU17": "Chin Raiser",
}


def _side_of(name: str) -> Side:
    if name.startswith("left_"):
        return Side.LEFT
    if name.startswith("right_"):
        return Side.RIGHT
    return Side.CENTRAL


@lru_cache()
def builtin_roi_catalog() -> RoiCatalog:
    """内置 18 区域目录（下标为 468 点网格的原始下标，从 0 开始）"""
    index_table = {
        "left_inner_eyebrow": LEFT_INNER_EYEBROW,
        "right_inner_eyebrow": RIGHT_INNER_EYEBROW,
        "left_outer_eyebrow": LEFT_OUTER_EYEBROW,
        "right_outer_eyebrow": RIGHT_OUTER_EYEBROW,
        "left_full_eyebrow": LEFT_FULL_EYEBROW,
        "right_full_eyebrow": RIGHT_FULL_EYEBROW,
        "left_upper_eyelid": LEFT_UPPER_EYELID,
        "right_upper_eyelid": RIGHT_UPPER_EYELID,
        "left_lower_eyelid": LEFT_LOWER_EYELID,
        "right_lower_eyelid": RIGHT_LOWER_EYELID,
        "left_eye_complete": dedupe_preserve_order(LEFT_UPPER_EYELID + LEFT_LOWER_EYELID),
        "right_eye_complete": dedupe_preserve_order(RIGHT_UPPER_EYELID + RIGHT_LOWER_EYELID),
        "left_nose": LEFT_NOSE,
        "right_nose": RIGHT_NOSE,
        "mouth": MOUTH,
        "left_mouth_corner": LEFT_MOUTH_CORNER,
        "right_mouth_corner": RIGHT_MOUTH_CORNER,
        "chin": CHIN,
    }
    regions = {
        name: RoiSpec(name=name, landmark_indices=tuple(indices), side=_side_of(name))
        for name, indices in index_table.items()
    }

    def both(stem: str) -> Tuple[str, str]:
        return (f"left_{stem}", f"right_{stem}")

    au_to_regions = {
        "AU1": both("inner_eyebrow"),
        "AU2": both("outer_eyebrow"),
        "AU4": both("full_eyebrow"),
        "AU5": both("upper_eyelid"),
        "AU6": both("lower_eyelid"),
        "AU7": both("eye_complete"),
        "AU9": both("nose"),
        "AU10": ("mouth",),
        "AU12": both("mouth_corner"),
        "AU14": both("mouth_corner"),
        "AU15": both("mouth_corner"),
        "AU17": ("chin",),
    }
    paired = tuple(
        both(stem)
        for stem in (
            "inner_eyebrow", "outer_eyebrow", "full_eyebrow", "upper_eyelid",
            "lower_eyelid", "eye_complete", "nose", "mouth_corner",
        )
    )
    periorbital = tuple(n for n in regions if "eyelid" in n or "eye_complete" in n)
    return RoiCatalog(
        regions=regions,
        au_to_regions=au_to_regions,
        paired=paired,
        au_descriptions=dict(AU_DESCRIPTIONS),
        periorbital=periorbital,
    )


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Sequence[float]]) -> List[Point]:
    """
    单调链凸包，顶点逆时针（x 向右、y 向上的数学坐标意义下），共线点剔除

    点少于 3 个不同点或全部共线时抛出 DegenerateHull，调用方应回退到包围盒
    """
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) < 3:
        raise DegenerateHull(f"need 3 distinct points, got {len(pts)}")

    lower: List[Point] = []
    for p in pts:
        while len(lower) > 1 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[Point] = []
    for p in reversed(pts):
        while len(upper) > 1 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)

    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHull("all points are collinear")
    return hull


def _empty_bits(dims: Tuple[int, int]) -> np.ndarray:
    width, height = dims
    return np.zeros((height, width), dtype=bool)


def _window(lo: float, hi: float, size: int) -> Tuple[int, int]:
    """[lo, hi] 覆盖的整数像素中心区间，裁剪到 [0, size-1]"""
    start = max(0, math.ceil(lo - _EDGE_EPS))
    stop = min(size - 1, math.floor(hi + _EDGE_EPS))
    return start, stop


def rasterize_mask(polygon: Sequence[Sequence[float]], dims: Tuple[int, int], region_name: str = "polygon") -> RoiMask:
    """像素中心 (x, y) 位于多边形内部或边界上即置位；画面外部分被裁剪"""
    width, height = dims
    if width < 1 or height < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    poly = np.asarray(polygon, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[0] < 3:
        raise ValueError("polygon needs at least 3 vertices")

    bits = _empty_bits(dims)
    x0, x1 = _window(poly[:, 0].min(), poly[:, 0].max(), width)
    y0, y1 = _window(poly[:, 1].min(), poly[:, 1].max(), height)
    if x0 > x1 or y0 > y1:
        return RoiMask(dims=dims, bits=bits, region_name=region_name)

    xs, ys = np.meshgrid(np.arange(x0, x1 + 1, dtype=np.float64), np.arange(y0, y1 + 1, dtype=np.float64))
    inside = np.zeros(xs.shape, dtype=bool)
    on_edge = np.zeros(xs.shape, dtype=bool)

    for (ax, ay), (bx, by) in zip(poly, np.roll(poly, -1, axis=0)):
        # 射线交叉（奇偶规则）
        crosses = (ay > ys) != (by > ys)
        if crosses.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = ax + (ys - ay) * (bx - ax) / (by - ay)
            inside ^= crosses & (xs < x_at)
        # 边界
        length = math.hypot(bx - ax, by - ay)
        cross = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        on_edge |= (
            (np.abs(cross) <= _EDGE_EPS * max(1.0, length))
            & (xs >= min(ax, bx) - _EDGE_EPS) & (xs <= max(ax, bx) + _EDGE_EPS)
            & (ys >= min(ay, by) - _EDGE_EPS) & (ys <= max(ay, by) + _EDGE_EPS)
        )

    bits[y0:y1 + 1, x0:x1 + 1] = inside | on_edge
    return RoiMask(dims=dims, bits=bits, region_name=region_name)


def bounding_box_bits(points: np.ndarray, dims: Tuple[int, int]) -> np.ndarray:
    """关键点轴对齐包围盒内的像素中心"""
    width, height = dims
    bits = _empty_bits(dims)
    x0, x1 = _window(points[:, 0].min(), points[:, 0].max(), width)
    y0, y1 = _window(points[:, 1].min(), points[:, 1].max(), height)
    if x0 <= x1 and y0 <= y1:
        bits[y0:y1 + 1, x0:x1 + 1] = True
    return bits


def landmark_pixels(points: np.ndarray, dims: Tuple[int, int]) -> np.ndarray:
    """关键点所在像素（四舍五入到最近的像素中心）"""
    width, height = dims
    bits = _empty_bits(dims)
    cols = np.floor(points[:, 0] + 0.5).astype(np.int64)
    rows = np.floor(points[:, 1] + 0.5).astype(np.int64)
    keep = (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
    bits[rows[keep], cols[keep]] = True
    return bits


def extract_rois(landmarks: LandmarkSet, catalog: Optional[RoiCatalog] = None) -> Dict[str, RoiMask]:
    """每个目录区域一张掩码（按名称排序）；退化区域回退为包围盒"""
    catalog = catalog or builtin_roi_catalog()
    dims = landmarks.frame_dims
    masks: Dict[str, RoiMask] = {}

    for name in sorted(catalog.regions):
        points = landmarks.select(catalog.regions[name].landmark_indices)
        fallback = False
        try:
            bits = rasterize_mask(convex_hull(points), dims, name).bits | landmark_pixels(points, dims)
        except DegenerateHull as e:
            logger.warning(f"区域 {name} 凸包退化（{e.detail}），使用包围盒")
            bits = bounding_box_bits(points, dims)
            fallback = True
        masks[name] = RoiMask(dims=dims, bits=bits, region_name=name, fallback=fallback)
        if masks[name].is_empty:
            logger.warning(f"区域 {name} 在画面外，掩码为空")

    return masks


def load_landmarks(
    source: Union[bytes, BinaryIO],
    frame_dims: Optional[Tuple[int, int]] = None,
    normalized: bool = False,
) -> LandmarkSet:
    """
    解析关键点文件：顶层数组，468 个 [x, y]

    frame_dims 缺省时取能容纳全部点的最小画面；normalized 为 True 时坐标按画面尺寸放大
    """
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        raw = _POINTS_ADAPTER.validate_json(data)
    except ValidationError as e:
        first = e.errors(include_url=False)[0]
        loc = first.get("loc", ())
        point_index = loc[0] if loc and isinstance(loc[0], int) else None
        raise MalformedInput(f"invalid landmark file: {first['msg']}", point_index=point_index)

    if len(raw) != LANDMARK_COUNT:
        raise MalformedInput(f"expected {LANDMARK_COUNT} points, got {len(raw)}")
    for i, (x, y) in enumerate(raw):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MalformedInput(f"point {i} is not finite", point_index=i)

    if normalized:
        if frame_dims is None:
            raise MalformedInput("normalized landmarks need frame dims")
        width, height = frame_dims
        raw = [(x * width, y * height) for x, y in raw]
    elif frame_dims is None:
        max_x = max(x for x, _ in raw)
        max_y = max(y for _, y in raw)
        frame_dims = (max(1, math.ceil(max_x) + 1), max(1, math.ceil(max_y) + 1))

    try:
        return LandmarkSet(points=tuple(raw), frame_dims=frame_dims)
    except ValidationError as e:
        raise MalformedInput(f"invalid landmarks: {e.errors(include_url=False)[0]['msg']}")


def read_landmarks_file(
    path: Union[str, Path],
    frame_dims: Optional[Tuple[int, int]] = None,
    normalized: bool = False,
) -> LandmarkSet:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise MalformedInput(f"cannot read landmark file: {e}", path=str(path))
    return load_landmarks(data, frame_dims=frame_dims, normalized=normalized)
