"""配置管理"""
import hashlib
from functools import lru_cache
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from unimer.errors import ConfigError
from unimer.schemas.evidence import IntensityBand
from unimer.schemas.params import CompensationParams, EvidenceParams, FlowEstimatorParams

DATA_DIR = Path(__file__).parent / "data"


class Settings(BaseSettings):
    """进程级配置（环境变量 UNIMER_*，可放在 .env）"""
    model_config = SettingsConfigDict(env_prefix="UNIMER_", env_file=".env", case_sensitive=False)

    # 默认流水线配置文件
    config: Optional[str] = None

    log_level: str = "INFO"

    # 随包数据文件目录
    data_dir: Optional[str] = None

    # 数据表缓存
    cache_size: int = 64

    def resolved_data_dir(self) -> Path:
        return Path(self.data_dir) if self.data_dir else DATA_DIR


@lru_cache()
def get_settings() -> Settings:
    """获取配置单例"""
    return Settings()


class PipelineConfig(BaseModel):
    """流水线配置，未给出的参数取内置默认值"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    compensation: CompensationParams = Field(default_factory=CompensationParams)
    evidence: EvidenceParams = Field(default_factory=EvidenceParams)
    estimator: FlowEstimatorParams = Field(default_factory=FlowEstimatorParams)

    taxonomy_path: Optional[str] = None
    expectations_path: Optional[str] = None
    prototypes_path: Optional[str] = None
    instructions_path: Optional[str] = None

    prompt_seed: int = 0
    parallel: int = Field(default=1, ge=1)

    # True: 强度阈值在 gamma 校正后的场上测量
    gamma_before_thresholds: bool = True
    # 反向验证的强度下限：Strong（默认）或 Significant
    backward_band: IntensityBand = IntensityBand.STRONG
    frame_pair: Literal["onset_apex", "consecutive"] = "onset_apex"
    # 清单未标注时关键点是否为 [0, 1] 归一化坐标
    landmarks_normalized: bool = False
    render_viz: bool = False

    @field_validator("backward_band")
    @classmethod
    def _check_band(cls, v: IntensityBand) -> IntensityBand:
        if v not in (IntensityBand.STRONG, IntensityBand.SIGNIFICANT):
            raise ValueError("backward_band must be Strong or Significant")
        return v

    def canonical_yaml(self) -> str:
        """规范化序列化（键排序）；parallel 不影响输出，因此不参与"""
        data = self.model_dump(mode="json", exclude={"parallel"})
        return yaml.safe_dump(data, sort_keys=True, allow_unicode=True, default_flow_style=False)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_yaml().encode("utf-8")).hexdigest()

    def data_path(self, attr: str, default_name: str) -> Path:
        """数据表路径：显式配置优先，否则取随包数据"""
        value = getattr(self, attr)
        if value:
            return Path(value)
        return get_settings().resolved_data_dir() / default_name


def load_pipeline_config(path: Union[str, Path, None] = None, **overrides) -> PipelineConfig:
    """从 YAML 文件加载流水线配置；未指定路径时使用 UNIMER_CONFIG 或默认值"""
    if path is None:
        path = get_settings().config

    data = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}", path=str(path))
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"config is not valid YAML: {e}", path=str(path))
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping", path=str(path))

    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e.errors(include_url=False)}", path=str(path) if path else None)
