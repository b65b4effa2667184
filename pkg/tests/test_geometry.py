"""关键点解析、ROI 目录、凸包与掩码栅格化"""
import json

import numpy as np
import pytest

from unimer.errors import DegenerateHull, MalformedInput
from unimer.schemas.geometry import LandmarkSet
from unimer.services.geometry import (
    builtin_roi_catalog,
    bounding_box_bits,
    convex_hull,
    extract_rois,
    load_landmarks,
    rasterize_mask,
)

from conftest import FACE_PATH, FRAME_DIMS

# 区域下标表（从 0 开始的 468 点网格下标）
REGION_TABLE = {
    "left_inner_eyebrow": [46, 53, 52, 105, 63, 70],
    "right_inner_eyebrow": [285, 295, 282, 334, 296, 336],
    "left_outer_eyebrow": [52, 65, 55, 107, 66, 105],
    "right_outer_eyebrow": [282, 283, 276, 300, 293, 334],
    "left_full_eyebrow": [46, 53, 52, 65, 55, 107, 66, 105, 63, 70],
    "right_full_eyebrow": [285, 295, 282, 283, 276, 300, 293, 334, 296, 336],
    "left_upper_eyelid": [226, 130, 33, 161, 159, 158, 157, 173, 243, 190, 56, 28, 27, 29, 30, 247],
    "right_upper_eyelid": [463, 398, 384, 385, 386, 387, 388, 466, 263, 467, 260, 259, 257, 258, 286, 414],
    "left_lower_eyelid": [226, 130, 33, 7, 144, 145, 153, 154, 133, 244, 245, 233, 232, 231, 230, 229, 228, 31],
    "right_lower_eyelid": [446, 359, 263, 390, 373, 374, 380, 381, 362, 464, 465, 453, 452, 451, 450, 449, 448, 261],
    "left_nose": [64, 98, 165, 206, 36, 142, 49],
    "right_nose": [294, 327, 391, 426, 266, 371, 279],
    "mouth": [61, 40, 39, 37, 0, 267, 269, 270, 291, 321, 405, 314, 17, 84, 181, 91],
    "left_mouth_corner": [57, 43, 146, 96, 183, 186],
    "right_mouth_corner": [287, 273, 375, 325, 407, 410],
    "chin": [17, 18, 83, 182, 194, 32, 140, 176, 148, 152, 377, 400, 369, 262, 418, 406, 313],
}


def _points_json(points) -> bytes:
    return json.dumps([[float(x), float(y)] for x, y in points]).encode()


def _inside_or_on(hull, x, y) -> bool:
    """凸多边形（逆时针）半平面判定，整数输入下精确"""
    n = len(hull)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < 0:
            return False
    return True


def _brute_force_mask(hull, dims):
    width, height = dims
    bits = np.zeros((height, width), dtype=bool)
    for y in range(height):
        for x in range(width):
            bits[y, x] = _inside_or_on(hull, x, y)
    return bits


# ---------- 关键点 ----------

def test_load_fixture_landmarks(face):
    """测试：读取参考关键点文件"""
    assert len(face.points) == 468
    assert face.frame_dims == FRAME_DIMS
    raw = json.loads(FACE_PATH.read_text())
    assert face.points[44] == (raw[44][0], raw[44][1])
    assert face.points[44] == (96.0, 96.0)


def test_load_landmarks_wrong_count():
    with pytest.raises(MalformedInput):
        load_landmarks(_points_json([(1.0, 1.0)] * 467))


def test_load_landmarks_reports_point_index():
    """测试：非数值坐标报告点下标"""
    points = [[1.0, 1.0]] * 468
    points[5] = ["a", 3.0]
    with pytest.raises(MalformedInput) as exc:
        load_landmarks(json.dumps(points).encode())
    assert exc.value.point_index == 5


def test_load_landmarks_default_dims():
    points = [(1.0, 2.0)] * 467 + [(10.5, 20.0)]
    landmarks = load_landmarks(_points_json(points))
    assert landmarks.frame_dims == (12, 21)


def test_load_landmarks_normalized():
    points = [(0.5, 0.25)] * 468
    landmarks = load_landmarks(_points_json(points), frame_dims=(200, 100), normalized=True)
    assert landmarks.points[0] == (100.0, 25.0)


def test_load_landmarks_rejects_far_outside():
    points = [(1.0, 1.0)] * 467 + [(1000.0, 1.0)]
    with pytest.raises(MalformedInput):
        load_landmarks(_points_json(points), frame_dims=(100, 100))


# ---------- ROI 目录 ----------

def test_catalog_matches_region_table():
    """测试：区域下标与对照表逐项一致"""
    catalog = builtin_roi_catalog()
    for name, indices in REGION_TABLE.items():
        assert list(catalog.regions[name].landmark_indices) == indices, name


def test_catalog_eye_complete_is_union():
    catalog = builtin_roi_catalog()
    for side in ("left", "right"):
        complete = set(catalog.regions[f"{side}_eye_complete"].landmark_indices)
        upper = set(catalog.regions[f"{side}_upper_eyelid"].landmark_indices)
        lower = set(catalog.regions[f"{side}_lower_eyelid"].landmark_indices)
        assert complete == upper | lower


def test_catalog_au_mapping():
    catalog = builtin_roi_catalog()
    assert list(catalog.regions["left_inner_eyebrow"].landmark_indices) == [46, 53, 52, 105, 63, 70]
    assert list(catalog.au_to_regions["AU10"]) == ["mouth"]
    corners = ["left_mouth_corner", "right_mouth_corner"]
    assert list(catalog.au_to_regions["AU12"]) == corners
    assert list(catalog.au_to_regions["AU14"]) == corners
    assert list(catalog.au_to_regions["AU15"]) == corners


def test_catalog_completeness():
    """测试：12 个 AU 全部有区域，所有区域都能从某个 AU 到达"""
    catalog = builtin_roi_catalog()
    expected = {f"AU{n}" for n in (1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17)}
    assert set(catalog.au_to_regions) == expected
    assert all(catalog.au_to_regions[au] for au in expected)
    reachable = {name for names in catalog.au_to_regions.values() for name in names}
    assert reachable == set(catalog.regions)


def test_catalog_periorbital_regions():
    catalog = builtin_roi_catalog()
    assert set(catalog.periorbital) == {
        "left_upper_eyelid", "right_upper_eyelid", "left_lower_eyelid",
        "right_lower_eyelid", "left_eye_complete", "right_eye_complete",
    }


# ---------- 凸包 ----------

def test_convex_hull_triangle():
    hull = convex_hull([(0, 0), (4, 0), (0, 4)])
    assert set(hull) == {(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)}


def test_convex_hull_drops_interior_point():
    hull = convex_hull([(0, 0), (4, 0), (4, 4), (0, 4), (2, 2)])
    assert len(hull) == 4
    assert (2.0, 2.0) not in hull


def test_convex_hull_removes_collinear_edge_points():
    hull = convex_hull([(0, 0), (2, 0), (4, 0), (4, 4), (0, 4)])
    assert (2.0, 0.0) not in hull
    assert len(hull) == 4


@pytest.mark.parametrize("points", [
    [(0, 0), (1, 1), (2, 2)],
    [(3, 3), (3, 3), (3, 3)],
    [(0, 0), (5, 5)],
])
def test_convex_hull_degenerate(points):
    with pytest.raises(DegenerateHull):
        convex_hull(points)


def test_convex_hull_counter_clockwise():
    hull = convex_hull([(0, 0), (4, 0), (4, 4), (0, 4)])
    area2 = sum(
        hull[i][0] * hull[(i + 1) % len(hull)][1] - hull[(i + 1) % len(hull)][0] * hull[i][1]
        for i in range(len(hull))
    )
    assert area2 > 0


def test_convex_hull_containment_and_idempotence():
    """测试：随机点集全部落在凸包内，凸包的凸包不变"""
    rng = np.random.default_rng(7)
    for _ in range(200):
        points = [tuple(p) for p in rng.integers(0, 50, size=(int(rng.integers(3, 30)), 2))]
        try:
            hull = convex_hull(points)
        except DegenerateHull:
            continue
        assert all(_inside_or_on(hull, x, y) for x, y in points)
        assert set(convex_hull(hull)) == set(hull)
        assert set(hull) <= {(float(x), float(y)) for x, y in points}


# ---------- 栅格化 ----------

def test_rasterize_square():
    mask = rasterize_mask([(1, 1), (3, 1), (3, 3), (1, 3)], (5, 5))
    assert mask.pixel_count == 9
    assert mask.bits[1:4, 1:4].all()


def test_rasterize_outside_frame():
    mask = rasterize_mask([(10, 10), (14, 10), (12, 14)], (5, 5))
    assert mask.is_empty


def test_rasterize_clips_partially_outside():
    mask = rasterize_mask([(-2, -2), (2, -2), (2, 2), (-2, 2)], (5, 5))
    assert mask.pixel_count == 9
    assert mask.bits[0:3, 0:3].all()


def test_rasterize_triangle_matches_brute_force():
    hull = convex_hull([(0, 0), (4, 0), (0, 4)])
    mask = rasterize_mask(hull, (5, 5))
    expected = _brute_force_mask(hull, (5, 5))
    assert np.array_equal(mask.bits, expected)
    assert mask.pixel_count == 15


def test_rasterize_matches_point_in_polygon_oracle():
    """测试：500 组随机点集，栅格化结果与逐像素判定完全一致"""
    rng = np.random.default_rng(2024)
    dims = (64, 64)
    checked = 0
    for _ in range(500):
        points = rng.integers(0, 64, size=(int(rng.integers(1, 31)), 2))
        try:
            hull = convex_hull(points)
        except DegenerateHull:
            bits = bounding_box_bits(points.astype(np.float64), dims)
            xs, ys = points[:, 0], points[:, 1]
            assert bits.sum() == (xs.max() - xs.min() + 1) * (ys.max() - ys.min() + 1)
            continue
        mask = rasterize_mask(hull, dims)
        assert np.array_equal(mask.bits, _brute_force_mask(hull, dims))
        checked += 1
    assert checked > 400


# ---------- ROI 掩码 ----------

def test_extract_rois_covers_catalog(masks):
    catalog = builtin_roi_catalog()
    assert list(masks) == sorted(catalog.regions)
    assert all(not m.is_empty and not m.fallback for m in masks.values())


def test_extract_rois_contains_landmark_pixels(face, masks):
    """测试：每个掩码都包含其关键点所在像素"""
    catalog = builtin_roi_catalog()
    for name, mask in masks.items():
        for x, y in face.select(catalog.regions[name].landmark_indices):
            assert mask.bits[int(np.floor(y + 0.5)), int(np.floor(x + 0.5))], name


def test_eye_complete_is_superset(masks):
    for side in ("left", "right"):
        complete = masks[f"{side}_eye_complete"].bits
        for part in ("upper_eyelid", "lower_eyelid"):
            part_bits = masks[f"{side}_{part}"].bits
            assert not (part_bits & ~complete).any()


def test_extract_rois_collinear_fallback(face):
    """测试：退化区域回退为关键点包围盒"""
    points = list(face.points)
    for i, idx in enumerate(REGION_TABLE["left_nose"]):
        points[idx] = (80.0 + i, 108.0 + i)
    landmarks = LandmarkSet(points=tuple(points), frame_dims=face.frame_dims)
    mask = extract_rois(landmarks)["left_nose"]

    expected = np.zeros((200, 200), dtype=bool)
    expected[108:115, 80:87] = True
    assert mask.fallback
    assert np.array_equal(mask.bits, expected)


def test_extract_rois_fallback_stays_inside_bounding_box(face):
    """测试：非整数共线关键点回退后，掩码不越出包围盒"""
    points = list(face.points)
    for i, idx in enumerate(REGION_TABLE["left_nose"]):
        points[idx] = (80.4 + i, 108.4 + i)
    landmarks = LandmarkSet(points=tuple(points), frame_dims=face.frame_dims)
    mask = extract_rois(landmarks)["left_nose"]

    expected = np.zeros((200, 200), dtype=bool)
    expected[109:115, 81:87] = True
    assert mask.fallback
    assert np.array_equal(mask.bits, expected)
    assert np.array_equal(mask.bits, bounding_box_bits(landmarks.select(REGION_TABLE["left_nose"]), FRAME_DIMS))


def test_extract_rois_translation_equivariance(face, masks):
    shifted = extract_rois(face.translated(3, -2))
    for name, mask in masks.items():
        moved = np.roll(np.roll(mask.bits, 3, axis=1), -2, axis=0)
        assert np.array_equal(shifted[name].bits, moved), name
