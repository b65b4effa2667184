"""区域运动证据"""
import math

import numpy as np
import pytest

from unimer.errors import AllZeroMotion, DimMismatch, EmptyMask
from unimer.schemas.evidence import DIRECTION_ORDER, Direction8, IntensityBand
from unimer.schemas.flow import FlowField
from unimer.schemas.geometry import RoiMask
from unimer.schemas.params import EvidenceParams
from unimer.services.evidence import (
    arc_fraction,
    boundary_bits,
    classify_intensity,
    dominant_direction,
    evidence_vector,
    peak_intensity,
    quantize_direction,
    radial_inward_fraction,
    region_evidence,
    upward_fraction,
)


def _mask(bits: np.ndarray, name: str = "roi") -> RoiMask:
    height, width = bits.shape
    return RoiMask(dims=(width, height), bits=bits, region_name=name)


def _full(width: int, height: int) -> RoiMask:
    return _mask(np.ones((height, width), dtype=bool))


def _uniform(u: float, v: float, width: int = 4, height: int = 4) -> FlowField:
    vectors = np.zeros((height, width, 2))
    vectors[...] = (u, v)
    return FlowField(vectors=vectors)


def _naive(field: FlowField, mask: RoiMask, k_percent: float = 10.0):
    """逐像素的朴素实现，作为对照"""
    us, vs, mags = [], [], []
    height, width = mask.bits.shape
    for y in range(height):
        for x in range(width):
            if mask.bits[y, x]:
                u, v = field.vectors[y, x]
                us.append(float(u))
                vs.append(float(v))
                mags.append(math.hypot(u, v))
    theta = math.degrees(math.atan2(-math.fsum(vs) / len(vs), math.fsum(us) / len(us))) % 360.0
    mags.sort(reverse=True)
    k = max(1, math.ceil(k_percent * len(mags) / 100))
    peak = math.fsum(mags[:k]) / k
    if peak > 15:
        band = IntensityBand.STRONG
    elif peak > 8:
        band = IntensityBand.SIGNIFICANT
    elif peak > 3:
        band = IntensityBand.SUBTLE
    else:
        band = IntensityBand.MICRO
    return theta, peak, band


def _bin(theta: float) -> int:
    return int(math.floor((theta + 22.5) / 45.0)) % 8


# ---------- 主方向 ----------

def test_dominant_direction_up():
    theta, direction = dominant_direction(_uniform(0.0, -1.0), _full(4, 4))
    assert theta == pytest.approx(90.0)
    assert direction == Direction8.UP


def test_dominant_direction_right():
    theta, direction = dominant_direction(_uniform(1.0, 0.0), _full(4, 4))
    assert theta == 0.0
    assert direction == Direction8.RIGHT


def test_dominant_direction_two_pixels():
    field = FlowField(vectors=np.array([[[1.0, 0.0], [0.0, -1.0]]]))
    theta, direction = dominant_direction(field, _full(2, 1))
    assert theta == pytest.approx(45.0)
    assert direction == Direction8.UPPER_RIGHT


@pytest.mark.parametrize("theta,expected", [
    (0.0, Direction8.RIGHT),
    (22.4, Direction8.RIGHT),
    (22.5, Direction8.UPPER_RIGHT),
    (337.5, Direction8.RIGHT),
    (337.4, Direction8.LOWER_RIGHT),
    (270.0, Direction8.DOWN),
    (180.0, Direction8.LEFT),
])
def test_quantize_direction(theta, expected):
    """测试：区间边界归入逆时针一侧"""
    assert quantize_direction(theta) == expected


def test_dominant_direction_empty_mask():
    with pytest.raises(EmptyMask):
        dominant_direction(_uniform(1.0, 0.0), _mask(np.zeros((4, 4), dtype=bool)))


def test_dominant_direction_dim_mismatch():
    with pytest.raises(DimMismatch):
        dominant_direction(_uniform(1.0, 0.0, 5, 4), _full(4, 4))


# ---------- 峰值强度与分档 ----------

def test_peak_intensity_uniform():
    assert peak_intensity(_uniform(3.0, 4.0), _full(4, 4)) == pytest.approx(5.0)


def test_peak_intensity_single_top_pixel():
    vectors = np.zeros((1, 10, 2))
    vectors[0, :, 0] = np.arange(1, 11)
    assert peak_intensity(FlowField(vectors=vectors), _full(10, 1)) == 10.0


def test_peak_intensity_brute_force():
    rng = np.random.default_rng(12)
    field = FlowField(vectors=rng.normal(scale=6.0, size=(10, 10, 2)))
    mags = np.sort(field.magnitudes().ravel())[::-1]
    assert peak_intensity(field, _full(10, 10)) == pytest.approx(mags[:10].mean(), rel=1e-12)


def test_peak_intensity_monotone():
    rng = np.random.default_rng(13)
    vectors = rng.normal(size=(10, 10, 2))
    field = FlowField(vectors=vectors)
    top = np.unravel_index(np.argmax(field.magnitudes()), (10, 10))
    boosted = vectors.copy()
    boosted[top] *= 3.0
    assert peak_intensity(FlowField(vectors=boosted), _full(10, 10)) >= peak_intensity(field, _full(10, 10))


@pytest.mark.parametrize("m,band", [
    (16.0, IntensityBand.STRONG),
    (15.0, IntensityBand.SIGNIFICANT),
    (8.0, IntensityBand.SUBTLE),
    (8.01, IntensityBand.SIGNIFICANT),
    (3.0, IntensityBand.MICRO),
    (3.5, IntensityBand.SUBTLE),
    (0.0, IntensityBand.MICRO),
])
def test_classify_intensity(m, band):
    """测试：阈值为严格大于"""
    assert classify_intensity(m) == band


# ---------- 方向弧与径向 ----------

def test_upward_fraction_all_up_and_down():
    assert upward_fraction(_uniform(0.0, -2.0), _full(4, 4)) == 1.0
    assert upward_fraction(_uniform(0.0, 2.0), _full(4, 4)) == 0.0


def test_upward_fraction_half():
    vectors = np.zeros((2, 2, 2))
    vectors[0] = (0.0, -1.0)
    vectors[1] = (1.0, 0.0)
    assert upward_fraction(FlowField(vectors=vectors), _full(2, 2)) == 0.5


def test_upward_fraction_excludes_zero_vectors():
    vectors = np.zeros((2, 2, 2))
    vectors[0, 0] = (0.0, -1.0)
    assert upward_fraction(FlowField(vectors=vectors), _full(2, 2)) == 1.0


def test_upward_fraction_all_zero():
    with pytest.raises(AllZeroMotion):
        upward_fraction(_uniform(0.0, 0.0), _full(4, 4))


def test_arc_fraction_wraps_zero():
    vectors = np.zeros((1, 2, 2))
    vectors[0, 0] = (1.0, 0.0)
    vectors[0, 1] = (0.0, -1.0)
    assert arc_fraction(FlowField(vectors=vectors), _full(2, 1), (315.0, 45.0)) == 0.5


def _disk(size: int = 21, radius: float = 7.0):
    ys, xs = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2.0
    return _mask((xs - c) ** 2 + (ys - c) ** 2 <= radius ** 2), xs.astype(float), ys.astype(float), c


def test_boundary_bits_of_square():
    bits = np.zeros((5, 5), dtype=bool)
    bits[1:4, 1:4] = True
    boundary = boundary_bits(_mask(bits))
    assert boundary.sum() == 8
    assert not boundary[2, 2]


def test_radial_inward_contraction_and_expansion():
    mask, xs, ys, c = _disk()
    contraction = FlowField.from_components(c - xs, c - ys)
    assert radial_inward_fraction(contraction, mask) == 1.0
    expansion = FlowField.from_components(xs - c, ys - c)
    assert radial_inward_fraction(expansion, mask) == 0.0


def test_radial_inward_rotation_about_offset_pivot():
    """测试：绕偏离质心的点旋转，边界上内外各约一半"""
    mask, xs, ys, c = _disk()
    px, py = c + 1.5, c + 0.5
    rotation = FlowField.from_components(-(ys - py), xs - px)
    assert radial_inward_fraction(rotation, mask) == pytest.approx(0.5, abs=0.1)


def test_radial_inward_pure_rotation_about_centroid_is_tangential():
    mask, xs, ys, c = _disk()
    rotation = FlowField.from_components(-(ys - c), xs - c)
    assert radial_inward_fraction(rotation, mask) == 0.0


def test_radial_inward_needs_boundary():
    bits = np.zeros((5, 5), dtype=bool)
    bits[2, 2:4] = True
    with pytest.raises(EmptyMask):
        radial_inward_fraction(_uniform(1.0, 0.0, 5, 5), _mask(bits))


# ---------- 证据向量 ----------

def test_evidence_vector_zero_field(masks, make_field):
    evidence = evidence_vector(make_field(), masks)
    assert list(evidence) == sorted(masks)
    for ev in evidence.values():
        assert ev.band == IntensityBand.MICRO
        assert ev.peak_intensity == 0.0
        assert ev.upward_fraction is None


def test_evidence_vector_mouth_only(masks, make_field):
    """测试：仅嘴部向上 20 像素，嘴部为 Up/Strong，其余区域为 Micro"""
    field = make_field(0.0, -20.0, bits=masks["mouth"].bits)
    evidence = evidence_vector(field, masks)
    assert evidence["mouth"].direction8 == Direction8.UP
    assert evidence["mouth"].band == IntensityBand.STRONG
    for name, ev in evidence.items():
        if name != "mouth":
            assert ev.band == IntensityBand.MICRO, name
            theta, peak, band = _naive(field, masks[name])
            assert ev.peak_intensity == pytest.approx(peak)


def test_evidence_vector_order_invariant(masks, make_field):
    field = make_field(2.0, -5.0, bits=masks["chin"].bits)
    reversed_masks = {name: masks[name] for name in sorted(masks, reverse=True)}
    assert evidence_vector(field, reversed_masks) == evidence_vector(field, masks)


def test_evidence_vector_skips_empty_mask(make_field):
    bits = np.zeros((10, 10), dtype=bool)
    full = np.ones((10, 10), dtype=bool)
    evidence = evidence_vector(make_field(1.0, 0.0, dims=(10, 10)), {"a": _mask(bits, "a"), "b": _mask(full, "b")})
    assert list(evidence) == ["b"]


def test_evidence_matches_naive_oracle():
    """测试：200 组随机 (场, 掩码)，方向、峰值与分档与朴素实现一致"""
    rng = np.random.default_rng(99)
    for _ in range(200):
        width, height = (int(n) for n in rng.integers(3, 15, size=2))
        field = FlowField(vectors=rng.normal(loc=rng.normal(scale=5.0, size=2), scale=6.0, size=(height, width, 2)))
        bits = rng.random((height, width)) < 0.6
        if not bits.any():
            bits[0, 0] = True
        mask = _mask(bits)
        ev = region_evidence(field, mask)
        theta, peak, band = _naive(field, mask)
        assert ev.theta == pytest.approx(theta, abs=1e-9)
        assert ev.direction8 == DIRECTION_ORDER[_bin(theta)]
        assert ev.peak_intensity == pytest.approx(peak, rel=1e-12)
        assert ev.band == band


def test_rotation_by_45_advances_one_bin():
    rng = np.random.default_rng(5)
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    tested = 0
    for _ in range(200):
        field = FlowField(vectors=rng.normal(loc=rng.normal(scale=3.0, size=2), size=(6, 6, 2)))
        mask = _full(6, 6)
        theta, direction = dominant_direction(field, mask)
        offset = (theta + 22.5) % 45.0
        if offset < 0.5 or offset > 44.5:
            continue
        # 屏幕坐标逆时针旋转 45°：(u, -v) 旋转
        u, w = field.u, -field.v
        rotated = FlowField.from_components(c * u - s * w, -(s * u + c * w))
        _, advanced = dominant_direction(rotated, mask)
        assert DIRECTION_ORDER.index(advanced) == (DIRECTION_ORDER.index(direction) + 1) % 8
        tested += 1
    assert tested > 150


def test_scaling_field_scales_peak():
    rng = np.random.default_rng(21)
    field = FlowField(vectors=rng.normal(loc=1.0, size=(5, 5, 2)))
    mask = _full(5, 5)
    base = region_evidence(field, mask)
    scaled = region_evidence(field.scaled(4.0), mask)
    assert scaled.theta == pytest.approx(base.theta, abs=1e-9)
    assert scaled.direction8 == base.direction8
    assert scaled.peak_intensity == pytest.approx(4.0 * base.peak_intensity, rel=1e-12)


def test_evidence_params_custom_thresholds():
    params = EvidenceParams(thresholds={"strong": 2.0, "significant": 1.0, "subtle": 0.5})
    ev = region_evidence(_uniform(0.0, -3.0), _full(4, 4), params)
    assert ev.band == IntensityBand.STRONG
    assert ev.intensity_word == "high"
