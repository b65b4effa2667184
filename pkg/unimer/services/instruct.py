"""指令数据集构建：分类体系映射、(C, E, R) 三元组、提示词封装、批量输出与统计"""
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import yaml
from pydantic import ValidationError

from unimer import SCHEMA_VERSIONS, __version__
from unimer.config import PipelineConfig
from unimer.errors import ConfigError, EmptyInput, MalformedInput, SampleError, UniMerError
from unimer.schemas.evidence import MotionEvidence
from unimer.schemas.flow import FlowField
from unimer.schemas.geometry import RoiCatalog, RoiMask
from unimer.schemas.rationale import AuExpectation, EmotionPrototype, VerificationReport
from unimer.schemas.record import (
    BatchSummary,
    Category,
    EvidenceEntry,
    InstructionPools,
    InstructionTriple,
    PromptBundle,
    SampleFailure,
    SampleRecord,
    Taxonomy,
    au_number,
    sort_aus,
)
from unimer.schemas.stats import DatasetStats, DistributionRow
from unimer.services.cache import load_table
from unimer.services.compensation import compensate, gamma_correct
from unimer.services.evidence import evidence_vector
from unimer.services.flow import estimate_flow, load_grayscale, read_flow_path
from unimer.services.geometry import builtin_roi_catalog, extract_rois, read_landmarks_file
from unimer.services.hash import pool_index, sha256_bytes, sha256_file, short_id_hash
from unimer.services.rationale import compose_rationale, load_expectations, load_prototypes, verify
from unimer.services.viz import flow_to_image, write_image

logger = logging.getLogger(__name__)

TASK_IDS = ("[emotion]", "[flow]")

_UNSAFE_CHARS = re.compile(r"[^A-Za-z0-9._-]")


def _parse_taxonomy(path: Path) -> Taxonomy:
    try:
        return Taxonomy(**(yaml.safe_load(path.read_text(encoding="utf-8")) or {}))
    except (OSError, yaml.YAMLError, ValidationError, TypeError) as e:
        raise ConfigError(f"invalid taxonomy: {e}", path=str(path))


def _parse_instructions(path: Path) -> InstructionPools:
    try:
        return InstructionPools(**(yaml.safe_load(path.read_text(encoding="utf-8")) or {}))
    except (OSError, yaml.YAMLError, ValidationError, TypeError) as e:
        raise ConfigError(f"invalid instruction pools: {e}", path=str(path))


def load_taxonomy(path: Path) -> Taxonomy:
    return load_table("taxonomy", path, _parse_taxonomy)


def load_instructions(path: Path) -> InstructionPools:
    return load_table("instructions", path, _parse_instructions)


@dataclass(frozen=True)
class PipelineComponents:
    """一次运行共享的只读数据"""
    config: PipelineConfig
    catalog: RoiCatalog
    expectations: Dict[str, AuExpectation]
    prototypes: List[EmotionPrototype]
    taxonomy: Taxonomy
    instructions: InstructionPools


def load_components(config: PipelineConfig) -> PipelineComponents:
    return PipelineComponents(
        config=config,
        catalog=builtin_roi_catalog(),
        expectations=load_expectations(config.data_path("expectations_path", "expectations.yaml")),
        prototypes=load_prototypes(config.data_path("prototypes_path", "prototypes.yaml")),
        taxonomy=load_taxonomy(config.data_path("taxonomy_path", "taxonomy.yaml")),
        instructions=load_instructions(config.data_path("instructions_path", "instructions.yaml")),
    )


def load_manifest(path: Union[str, Path]) -> List[SampleRecord]:
    """清单：SampleRecord 列表，或带 samples 键的映射"""
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise MalformedInput(f"cannot read manifest: {e}", path=str(path))
    except yaml.YAMLError as e:
        raise MalformedInput(f"manifest is not valid YAML/JSON: {e}", path=str(path))

    if isinstance(raw, dict):
        raw = raw.get("samples")
    if not isinstance(raw, list):
        raise MalformedInput("manifest must be a list of samples", path=str(path))

    records = []
    for i, entry in enumerate(raw):
        try:
            records.append(SampleRecord.model_validate(entry))
        except ValidationError as e:
            raise MalformedInput(f"manifest entry {i}: {e.errors(include_url=False)[0]['msg']}", index=i)
    return records


def apply_taxonomy(record: SampleRecord, taxonomy: Taxonomy) -> SampleRecord:
    """只保留核心 AU，情绪映射到目标类别；丢弃项记录在 dropped_aus / source_emotion"""
    kept = [au for au in record.gt_aus if au in taxonomy.au_whitelist]
    dropped = [au for au in record.gt_aus if au not in taxonomy.au_whitelist]
    emotion = taxonomy.map_emotion(record.gt_emotion)

    if dropped:
        logger.warning(f"样本 {record.id} 丢弃非核心 AU: {', '.join(dropped)}")
    if emotion == taxonomy.fallback_emotion and record.gt_emotion.strip().lower() != emotion:
        logger.warning(f"样本 {record.id} 情绪 {record.gt_emotion!r} 未映射，归入 {emotion}")

    return record.model_copy(update={
        "gt_aus": sort_aus(kept),
        "gt_emotion": emotion,
        "source_emotion": record.source_emotion if record.source_emotion is not None else record.gt_emotion,
        "dropped_aus": sort_aus(list(record.dropped_aus) + dropped),
    })


def _resolve(path: str, base_dir: Optional[Path]) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base_dir is None else base_dir / p


def frame_pair(record: SampleRecord, config: PipelineConfig) -> Tuple[int, int]:
    """估计光流所用的帧下标对"""
    last = len(record.frame_paths) - 1
    apex = record.apex if record.apex is not None else last
    if config.frame_pair == "consecutive":
        if apex < 1:
            raise MalformedInput("consecutive mode needs apex >= 1", sample_id=record.id)
        return apex - 1, apex
    onset = record.onset if record.onset is not None else 0
    if onset == apex:
        raise MalformedInput("onset and apex must be different frames", sample_id=record.id)
    return onset, apex


def obtain_flow(record: SampleRecord, config: PipelineConfig, base_dir: Optional[Path] = None) -> FlowField:
    if record.flow_path is not None:
        return read_flow_path(_resolve(record.flow_path, base_dir))
    first, second = frame_pair(record, config)
    frame_a = load_grayscale(_resolve(record.frame_paths[first], base_dir))
    frame_b = load_grayscale(_resolve(record.frame_paths[second], base_dir))
    return estimate_flow(frame_a, frame_b, config.estimator)


@dataclass(frozen=True)
class SampleResult:
    record: SampleRecord
    triple: InstructionTriple
    evidence: Dict[str, MotionEvidence]
    report: VerificationReport
    display_field: FlowField
    # 处理中产生的区域告警，如 "empty_mask:chin"
    warnings: Tuple[str, ...] = ()


def mask_warnings(masks: Mapping[str, RoiMask]) -> Tuple[str, ...]:
    """空掩码（区域没有证据）与包围盒回退的告警，按区域名排序"""
    warnings = []
    for name in sorted(masks):
        if masks[name].is_empty:
            warnings.append(f"empty_mask:{name}")
        elif masks[name].fallback:
            warnings.append(f"bbox_fallback:{name}")
    return tuple(warnings)


def run_sample(record: SampleRecord, components: PipelineComponents, base_dir: Optional[Path] = None) -> SampleResult:
    """单样本完整流程：ROI → 补偿 → gamma → 证据 → 双向验证 → 解释"""
    config = components.config
    try:
        record = apply_taxonomy(record, components.taxonomy)
        raw = obtain_flow(record, config, base_dir)
        landmarks = read_landmarks_file(
            _resolve(record.landmarks_path, base_dir),
            frame_dims=raw.dims,
            normalized=record.landmarks_normalized or config.landmarks_normalized,
        )
        masks = extract_rois(landmarks, components.catalog)
        warnings = mask_warnings(masks)
        compensated = compensate(raw, landmarks, config.compensation)
        corrected = gamma_correct(compensated, config.compensation)
        measured = corrected if config.gamma_before_thresholds else compensated
        evidence = evidence_vector(measured, masks, config.evidence)
        report = verify(
            record.gt_aus, evidence, components.expectations,
            config.evidence, components.catalog, config.backward_band,
        )
        category = Category(aus=list(record.gt_aus), emotion=record.gt_emotion)
        rationale = compose_rationale(report, category, evidence, components.prototypes, components.catalog)
    except SampleError:
        raise
    except (UniMerError, OSError, ValueError) as e:
        raise SampleError(record.id, e)

    triple = InstructionTriple(
        category=category,
        evidence={
            name: EvidenceEntry(
                direction=ev.direction8.code,
                intensity=ev.intensity_word,
                below_threshold=ev.below_threshold,
            )
            for name, ev in evidence.items()
        },
        rationale=rationale.text(),
    )
    return SampleResult(
        record=record, triple=triple, evidence=evidence, report=report,
        display_field=corrected, warnings=warnings,
    )


def build_triple(record: SampleRecord, components: PipelineComponents, base_dir: Optional[Path] = None) -> InstructionTriple:
    return run_sample(record, components, base_dir).triple


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False)


def render_prompt(
    triple: InstructionTriple,
    task_id: str,
    instructions: InstructionPools,
    seed: int = 0,
    sample_id: str = "",
    index: Optional[int] = None,
) -> PromptBundle:
    """按 (seed, task, sample) 从指令池确定性地选取提示词"""
    if task_id not in TASK_IDS:
        raise MalformedInput(f"unknown task id {task_id!r}")
    pool = instructions.pools[task_id]
    if index is None:
        index = pool_index(seed, task_id, sample_id, len(pool))
    elif not 0 <= index < len(pool):
        raise MalformedInput(f"pool index {index} outside pool of {len(pool)}")
    return PromptBundle(
        system_prompt=instructions.system_prompt,
        feature_placeholder=instructions.feature_placeholder,
        task_id=task_id,
        user_prompt=pool[index],
        pool_index=index,
        target=canonical_json(triple.target()),
    )


def safe_id(sample_id: str) -> str:
    """样本 id → 文件名；有字符被替换时追加短哈希避免冲突"""
    cleaned = _UNSAFE_CHARS.sub("_", sample_id)
    if cleaned != sample_id or cleaned in (".", ".."):
        cleaned = f"{cleaned}-{short_id_hash(sample_id)}"
    return cleaned


def _input_paths(record: SampleRecord, base_dir: Optional[Path]) -> Dict[str, Path]:
    paths = {"landmarks": _resolve(record.landmarks_path, base_dir)}
    if record.flow_path is not None:
        paths["flow"] = _resolve(record.flow_path, base_dir)
    else:
        for i, frame in enumerate(record.frame_paths):
            paths[f"frame_{i}"] = _resolve(frame, base_dir)
    return paths


def input_hashes(record: SampleRecord, base_dir: Optional[Path] = None) -> Dict[str, Optional[str]]:
    hashes = {}
    for key, path in _input_paths(record, base_dir).items():
        try:
            hashes[key] = sha256_file(path)
        except OSError:
            hashes[key] = None
    return hashes


def record_document(result: SampleResult, components: PipelineComponents, hashes: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    """单个样本的输出记录"""
    record, triple, config = result.record, result.triple, components.config
    prompts = {}
    for task_id in TASK_IDS:
        bundle = render_prompt(triple, task_id, components.instructions, config.prompt_seed, record.id)
        prompts[task_id] = {"pool_index": bundle.pool_index, "user_prompt": bundle.user_prompt}

    return {
        "schema_version": SCHEMA_VERSIONS["record"],
        "id": record.id,
        "source_dataset": record.source_dataset,
        "target": triple.target(),
        "evidence_flags": {name: {"below_threshold": e.below_threshold} for name, e in sorted(triple.evidence.items())},
        "prompts": prompts,
        "verification": {
            "forward": {
                au: {
                    "status": r.status.value,
                    "regions": {name: s.value for name, s in r.region_status.items()},
                }
                for au, r in result.report.forward.items()
            },
            "anomalies": [
                {
                    "region": a.region,
                    "attribution": a.attribution.value,
                    "band": a.evidence.band.value,
                    "direction": a.evidence.direction8.code,
                }
                for a in result.report.anomalies
            ],
        },
        "motion": {
            name: {
                "theta": round(ev.theta, 4),
                "direction": ev.direction8.code,
                "peak_intensity": round(ev.peak_intensity, 4),
                "band": ev.band.value,
                "pixel_count": ev.pixel_count,
            }
            for name, ev in result.evidence.items()
        },
        "provenance": {
            "source_emotion": record.source_emotion,
            "dropped_aus": list(record.dropped_aus),
            "inputs": dict(hashes),
        },
        "warnings": list(result.warnings),
    }


def _write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _process(record: SampleRecord, components: PipelineComponents, base_dir: Optional[Path]):
    hashes = input_hashes(record, base_dir)
    try:
        return record.id, run_sample(record, components, base_dir), hashes
    except SampleError as e:
        logger.warning(f"样本 {record.id} 处理失败: {e.reason}: {e.detail}")
        return record.id, e, hashes


def emit_dataset(
    records: Sequence[SampleRecord],
    out_dir: Union[str, Path],
    components: PipelineComponents,
    base_dir: Optional[Path] = None,
    manifest_bytes: Optional[bytes] = None,
) -> BatchSummary:
    """
    批量生成：records/<id>.json、可选 viz/<id>.png、summary.json、run_manifest.json

    单样本失败不会中止批处理；输出只依赖清单、配置与输入文件内容
    """
    ids = [r.id for r in records]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise MalformedInput(f"duplicate sample ids: {', '.join(duplicates)}")

    out_dir = Path(out_dir)
    config = components.config
    logger.info(f"开始处理 {len(records)} 个样本（并行度 {config.parallel}）")

    with ThreadPoolExecutor(max_workers=config.parallel) as pool:
        outcomes = list(pool.map(lambda r: _process(r, components, base_dir), records))
    outcomes.sort(key=lambda o: o[0])

    failures = []
    inputs = {}
    warnings = {}
    for sample_id, outcome, hashes in outcomes:
        inputs[sample_id] = hashes
        if isinstance(outcome, SampleError):
            failures.append(SampleFailure(id=sample_id, reason=outcome.reason, detail=outcome.detail))
            continue
        if outcome.warnings:
            warnings[sample_id] = list(outcome.warnings)
        name = safe_id(sample_id)
        _write_json(out_dir / "records" / f"{name}.json", record_document(outcome, components, hashes))
        if config.render_viz:
            write_image(out_dir / "viz" / f"{name}.png", flow_to_image(outcome.display_field, config.compensation.epsilon))

    summary = BatchSummary(
        total=len(records),
        succeeded=len(records) - len(failures),
        failed=len(failures),
        failures=failures,
    )
    _write_json(out_dir / "summary.json", {"schema_version": SCHEMA_VERSIONS["summary"], **summary.model_dump()})
    _write_json(out_dir / "run_manifest.json", {
        "schema_version": SCHEMA_VERSIONS["run_manifest"],
        "tool_version": __version__,
        "schema_versions": SCHEMA_VERSIONS,
        "config_hash": config.config_hash(),
        "manifest_sha256": sha256_bytes(manifest_bytes) if manifest_bytes is not None else None,
        "inputs": inputs,
        "warnings": warnings,
    })
    logger.info(f"完成：成功 {summary.succeeded}，失败 {summary.failed}")
    return summary


def _rows(counts: Mapping[str, int], denominator: int, order: Sequence[str], descriptions: Mapping[str, str] = None) -> List[DistributionRow]:
    rank = {label: i for i, label in enumerate(order)}
    labels = sorted(counts, key=lambda k: (-counts[k], rank.get(k, len(rank)), k))
    return [
        DistributionRow(
            label=label,
            count=counts[label],
            percent=round(100.0 * counts[label] / denominator, 2),
            description=(descriptions or {}).get(label),
        )
        for label in labels
    ]


def dataset_stats(records: Sequence[SampleRecord], taxonomy: Taxonomy, catalog: Optional[RoiCatalog] = None) -> DatasetStats:
    """情绪、AU、来源分布及来源×情绪交叉表；AU 百分比以样本数为分母"""
    if not records:
        raise EmptyInput("manifest contains no samples")
    catalog = catalog or builtin_roi_catalog()
    total = len(records)

    emotions = {e: 0 for e in taxonomy.emotions}
    aus = {au: 0 for au in taxonomy.au_whitelist}
    sources: Dict[str, int] = {}
    crosstab: Dict[str, Dict[str, int]] = {}
    for record in records:
        emotions[record.gt_emotion] = emotions.get(record.gt_emotion, 0) + 1
        for au in record.gt_aus:
            aus[au] = aus.get(au, 0) + 1
        sources[record.source_dataset] = sources.get(record.source_dataset, 0) + 1
        row = crosstab.setdefault(record.source_dataset, {})
        row[record.gt_emotion] = row.get(record.gt_emotion, 0) + 1

    columns = list(taxonomy.emotions) + sorted(e for e in emotions if e not in taxonomy.emotions)
    return DatasetStats(
        total=total,
        emotions=_rows(emotions, total, columns),
        aus=_rows(aus, total, sorted(aus, key=au_number), catalog.au_descriptions),
        sources=_rows(sources, total, sorted(sources)),
        crosstab={src: {e: crosstab[src].get(e, 0) for e in columns} for src in sorted(crosstab)},
        crosstab_columns=columns,
    )


def format_stats(stats: DatasetStats) -> str:
    """以纯文本表格输出统计结果"""
    lines = [f"Total samples: {stats.total}", "", "Emotion Category Distribution"]
    lines.append(f"{'Emotion':<16}{'Count':>8}{'Percent':>10}")
    for row in stats.emotions:
        lines.append(f"{row.label:<16}{row.count:>8}{row.percent:>9.2f}%")

    lines += ["", "Action Unit Label Distribution"]
    lines.append(f"{'AU':<8}{'Description':<24}{'Count':>8}{'Percent':>10}")
    for row in stats.aus:
        lines.append(f"{row.label:<8}{(row.description or ''):<24}{row.count:>8}{row.percent:>9.2f}%")

    lines += ["", "Source Distribution of Samples"]
    lines.append(f"{'Dataset':<20}{'Count':>8}{'Percent':>10}")
    for row in stats.sources:
        lines.append(f"{row.label:<20}{row.count:>8}{row.percent:>9.2f}%")

    lines += ["", "Source Dataset vs. Emotion"]
    header = f"{'Dataset':<20}" + "".join(f"{c:>11}" for c in stats.crosstab_columns) + f"{'Total':>8}"
    lines.append(header)
    for source, row in stats.crosstab.items():
        cells = "".join(f"{row[c]:>11}" for c in stats.crosstab_columns)
        lines.append(f"{source:<20}{cells}{sum(row.values()):>8}")
    return "\n".join(lines) + "\n"
