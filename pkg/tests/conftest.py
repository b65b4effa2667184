"""测试共用的合成数据构造器"""
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pytest

from unimer.config import PipelineConfig
from unimer.schemas.flow import FlowField
from unimer.services.cache import clear_all_cache
from unimer.services.flow import write_flow_path
from unimer.services.geometry import extract_rois, read_landmarks_file
from unimer.services.instruct import load_components

FIXTURE_DIR = Path(__file__).parent / "fixtures"
FACE_PATH = FIXTURE_DIR / "neutral_face.landmarks"

# 合成人脸画面尺寸；鼻尖质心在 (100, 100)
FRAME_DIMS = (200, 200)


@pytest.fixture(autouse=True)
def _fresh_cache():
    clear_all_cache()
    yield
    clear_all_cache()


@pytest.fixture
def face():
    return read_landmarks_file(FACE_PATH, frame_dims=FRAME_DIMS)


@pytest.fixture
def masks(face):
    return extract_rois(face)


@pytest.fixture
def components():
    return load_components(PipelineConfig())


@pytest.fixture
def make_field():
    """
    构造光流场

    make_field() → 全零；make_field(u, v) → 常量场；make_field(u, v, bits=...) → 仅掩码内为 (u, v)
    """
    def build(u: float = 0.0, v: float = 0.0, bits: Optional[np.ndarray] = None, dims=FRAME_DIMS) -> FlowField:
        width, height = dims
        vectors = np.zeros((height, width, 2))
        if bits is None:
            vectors[...] = (u, v)
        else:
            vectors[bits] = (u, v)
        return FlowField(vectors=vectors)

    return build


@pytest.fixture
def band_field():
    """y 在 [top, bottom] 行区间内为 (u, v)，其余为零"""
    def build(top: int, bottom: int, u: float, v: float, dims=FRAME_DIMS) -> FlowField:
        width, height = dims
        vectors = np.zeros((height, width, 2))
        vectors[top:bottom + 1, :] = (u, v)
        return FlowField(vectors=vectors)

    return build


@pytest.fixture
def sample_factory(tmp_path):
    """把光流场写到 tmp_path，返回对应的清单条目"""
    def build(sample_id: str, field: FlowField, gt_aus=(), emotion: str = "disgust", source: str = "CASME2") -> Dict:
        flow_path = tmp_path / "flows" / f"{sample_id}.flo"
        write_flow_path(field, flow_path)
        return {
            "id": sample_id,
            "source_dataset": source,
            "flow_path": str(flow_path),
            "landmarks_path": str(FACE_PATH),
            "gt_aus": list(gt_aus),
            "gt_emotion": emotion,
        }

    return build
