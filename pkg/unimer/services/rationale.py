"""双向验证（GT→运动、运动→GT）与规则化解释文本"""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import yaml
from pydantic import ValidationError

from unimer.errors import ConfigError, UnknownAu
from unimer.schemas.evidence import Direction8, IntensityBand, MotionEvidence
from unimer.schemas.geometry import RoiCatalog, Side
from unimer.schemas.params import EvidenceParams
from unimer.schemas.rationale import (
    Anomaly,
    Attribution,
    AuExpectation,
    EmotionPrototype,
    ForwardResult,
    ForwardStatus,
    MotionTest,
    Rationale,
    Symmetry,
    VerificationReport,
)
from unimer.schemas.record import Category, sort_aus
from unimer.services.cache import load_table
from unimer.services.geometry import builtin_roi_catalog

logger = logging.getLogger(__name__)

# 方向弧半宽
ARC_HALF_WIDTH = 45.0
NARROW_HALF_WIDTH = 22.5

DIRECTION_WORDS = {
    Direction8.UP: "upward",
    Direction8.UPPER_RIGHT: "upper-right",
    Direction8.RIGHT: "rightward",
    Direction8.LOWER_RIGHT: "lower-right",
    Direction8.DOWN: "downward",
    Direction8.LOWER_LEFT: "lower-left",
    Direction8.LEFT: "leftward",
    Direction8.UPPER_LEFT: "upper-left",
}

DIRECTION_COLORS = {
    Direction8.UP: "purple",
    Direction8.UPPER_RIGHT: "pink",
    Direction8.RIGHT: "red",
    Direction8.LOWER_RIGHT: "orange",
    Direction8.DOWN: "yellow-green",
    Direction8.LOWER_LEFT: "green",
    Direction8.LEFT: "cyan",
    Direction8.UPPER_LEFT: "blue",
}

ATTRIBUTION_TEXT = {
    Attribution.BLINK: "an eye blink",
    Attribution.NOISE: "noise such as illumination changes or other artifacts",
}


def _parse_expectations(path: Path) -> Dict[str, AuExpectation]:
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        return {au: AuExpectation(au=au, **entry) for au, entry in raw.items()}
    except (OSError, yaml.YAMLError, ValidationError, TypeError) as e:
        raise ConfigError(f"invalid expectation table: {e}", path=str(path))


def _parse_prototypes(path: Path) -> List[EmotionPrototype]:
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or []
        return [EmotionPrototype(**entry) for entry in raw]
    except (OSError, yaml.YAMLError, ValidationError, TypeError) as e:
        raise ConfigError(f"invalid prototype table: {e}", path=str(path))


def load_expectations(path: Path) -> Dict[str, AuExpectation]:
    return load_table("expectations", path, _parse_expectations)


def load_prototypes(path: Path) -> List[EmotionPrototype]:
    return load_table("prototypes", path, _parse_prototypes)


def angular_distance(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def expected_center(test: MotionTest, side: Side) -> Optional[float]:
    """期望运动方向的中心角；RadialInward / AnyDirection 无方向中心"""
    if test in (MotionTest.UPWARD_ARC, MotionTest.UPWARD_ARC_NARROW):
        return 90.0
    if test == MotionTest.DOWNWARD_ARC:
        return 270.0
    if test == MotionTest.UPWARD_OUTWARD:
        # 画面左侧区域向外即向左
        return 135.0 if side == Side.LEFT else 45.0 if side == Side.RIGHT else 90.0
    if test == MotionTest.LATERAL_OUTWARD:
        return 180.0 if side == Side.LEFT else 0.0
    return None


def region_status(
    evidence: MotionEvidence,
    expectation: AuExpectation,
    side: Side,
    params: EvidenceParams = EvidenceParams(),
) -> ForwardStatus:
    """单个区域对某 AU 期望运动的判定"""
    if not evidence.has_motion or evidence.band.rank < expectation.min_band.rank:
        return ForwardStatus.ABSENT

    test = expectation.motion_test
    if test == MotionTest.ANY_DIRECTION:
        return ForwardStatus.VERIFIED

    if test == MotionTest.RADIAL_INWARD:
        inward = evidence.radial_inward_fraction
        if inward is None:
            return ForwardStatus.ABSENT
        if inward > params.radial_inward_quota:
            return ForwardStatus.VERIFIED
        if inward < 1.0 - params.radial_inward_quota:
            return ForwardStatus.CONTRADICTED
        return ForwardStatus.ABSENT

    center = expected_center(test, side)
    if test == MotionTest.UPWARD_ARC:
        lo, hi = params.upward_arc
        in_arc = lo <= evidence.theta <= hi if lo <= hi else (evidence.theta >= lo or evidence.theta <= hi)
        # 多数像素也需要落在向上弧内
        if in_arc and (evidence.upward_fraction or 0.0) >= 0.5:
            return ForwardStatus.VERIFIED
    else:
        half = NARROW_HALF_WIDTH if test == MotionTest.UPWARD_ARC_NARROW else ARC_HALF_WIDTH
        if angular_distance(evidence.theta, center) <= half:
            return ForwardStatus.VERIFIED

    if angular_distance(evidence.theta, (center + 180.0) % 360.0) <= ARC_HALF_WIDTH:
        return ForwardStatus.CONTRADICTED
    return ForwardStatus.ABSENT


def forward_verify(
    gt_aus: Iterable[str],
    evidence: Mapping[str, MotionEvidence],
    expectations: Mapping[str, AuExpectation],
    params: EvidenceParams = EvidenceParams(),
    catalog: Optional[RoiCatalog] = None,
) -> Dict[str, ForwardResult]:
    """
    正向验证：每个 GT AU 在其关联区域上检查期望运动

    任一区域通过即 verified；否则任一区域方向相反即 contradicted；否则 absent
    """
    catalog = catalog or builtin_roi_catalog()
    results: Dict[str, ForwardResult] = {}

    for au in sort_aus(gt_aus):
        expectation = expectations.get(au)
        if expectation is None:
            raise UnknownAu(f"no motion expectation for {au}", au=au)
        regions = expectation.regions or catalog.au_to_regions.get(au, ())

        statuses: Dict[str, ForwardStatus] = {}
        for name in regions:
            if name not in evidence:
                statuses[name] = ForwardStatus.ABSENT
                continue
            spec = catalog.regions.get(name)
            side = spec.side if spec else Side.CENTRAL
            statuses[name] = region_status(evidence[name], expectation, side, params)

        if ForwardStatus.VERIFIED in statuses.values():
            status = ForwardStatus.VERIFIED
        elif ForwardStatus.CONTRADICTED in statuses.values():
            status = ForwardStatus.CONTRADICTED
        else:
            status = ForwardStatus.ABSENT
        supporting = tuple(
            evidence[name] for name in regions if statuses[name] == status and status != ForwardStatus.ABSENT
        )
        results[au] = ForwardResult(au=au, status=status, supporting=supporting, region_status=statuses)

    return results


def backward_verify(
    evidence: Mapping[str, MotionEvidence],
    gt_aus: Iterable[str],
    catalog: Optional[RoiCatalog] = None,
    band: IntensityBand = IntensityBand.STRONG,
) -> Tuple[Anomaly, ...]:
    """反向验证：强运动区域若不关联任何 GT AU 则记为异常（眼周归因眨眼，其余归因噪声）"""
    catalog = catalog or builtin_roi_catalog()
    gt = set(gt_aus)
    region_aus = catalog.regions_to_aus()
    anomalies = []

    for name in sorted(evidence):
        ev = evidence[name]
        if ev.band.rank < band.rank:
            continue
        if gt & set(region_aus.get(name, ())):
            continue
        attribution = Attribution.BLINK if name in catalog.periorbital else Attribution.NOISE
        anomalies.append(Anomaly(region=name, evidence=ev, attribution=attribution))

    return tuple(anomalies)


def verify(
    gt_aus: Iterable[str],
    evidence: Mapping[str, MotionEvidence],
    expectations: Mapping[str, AuExpectation],
    params: EvidenceParams = EvidenceParams(),
    catalog: Optional[RoiCatalog] = None,
    backward_band: IntensityBand = IntensityBand.STRONG,
) -> VerificationReport:
    gt_aus = list(gt_aus)
    forward = forward_verify(gt_aus, evidence, expectations, params, catalog)
    anomalies = backward_verify(evidence, gt_aus, catalog, backward_band)
    for anomaly in anomalies:
        logger.debug(f"异常运动 {anomaly.region}（{anomaly.attribution.value}）")
    return VerificationReport(forward=forward, anomalies=anomalies)


def symmetry_analysis(
    evidence: Mapping[str, MotionEvidence],
    paired: Sequence[Tuple[str, str]],
) -> Dict[Tuple[str, str], Symmetry]:
    """左右同方向且强度档相差不超过 1 为对称"""
    result: Dict[Tuple[str, str], Symmetry] = {}
    for left, right in paired:
        if left not in evidence or right not in evidence:
            continue
        a, b = evidence[left], evidence[right]
        same = a.direction8 == b.direction8 and abs(a.band.rank - b.band.rank) <= 1
        result[(left, right)] = Symmetry.SYMMETRIC if same else Symmetry.ASYMMETRIC
    return result


def _label(name: str) -> str:
    return name.replace("_", " ")


def describe_motion(ev: MotionEvidence) -> str:
    if not ev.has_motion:
        return f"the {ev.region} shows no measurable motion"
    return (
        f"the {ev.region} moves {DIRECTION_WORDS[ev.direction8]} "
        f"({DIRECTION_COLORS[ev.direction8]}) with {ev.band.value} intensity"
    )


def _au_name(au: str, catalog: RoiCatalog) -> str:
    description = catalog.au_descriptions.get(au)
    return f"{au} ({description})" if description else au


def _analysis(
    report: VerificationReport,
    category: Category,
    evidence: Mapping[str, MotionEvidence],
    catalog: RoiCatalog,
) -> str:
    sentences = []
    covered = set()

    for au in category.aus:
        result = report.forward.get(au)
        if result is None:
            continue
        parts = []
        for name, status in result.region_status.items():
            covered.add(name)
            if name in evidence:
                parts.append(f"{describe_motion(evidence[name])} [{status.value}]")
            else:
                parts.append(f"the {name} is not visible [{status.value}]")
        sentences.append(f"For {_au_name(au, catalog)}, " + "; ".join(parts) + ".")

    others = [
        name for name in sorted(evidence)
        if name not in covered and evidence[name].band.rank >= IntensityBand.SIGNIFICANT.rank
    ]
    if others:
        sentences.append(
            "Other notable motion: " + "; ".join(describe_motion(evidence[name]) for name in others) + "."
        )

    for anomaly in report.anomalies:
        sentences.append(
            f"Potential interference: motion in the {anomaly.region} "
            f"({anomaly.evidence.band.value}, {DIRECTION_WORDS[anomaly.evidence.direction8]}) "
            f"is not explained by the labeled AUs and is attributed to {ATTRIBUTION_TEXT[anomaly.attribution]}."
        )
    for au in report.contradicted():
        sentences.append(
            f"Potential interference: the observed motion contradicts the expected movement of {au} "
            f"and is treated as noisy motion."
        )

    if not sentences:
        return "No labeled action units and no significant regional motion are observed."
    return " ".join(sentences)


def match_prototypes(aus: Iterable[str], prototypes: Sequence[EmotionPrototype]) -> List[EmotionPrototype]:
    """AU 集合包含原型组合即命中（保持表内顺序）"""
    gt = set(aus)
    return [proto for proto in prototypes if set(proto.au_pattern) <= gt]


def _one_sided(au: str, report: VerificationReport, catalog: RoiCatalog) -> bool:
    """该 AU 只在一侧区域得到验证"""
    result = report.forward.get(au)
    if result is None:
        return False
    sides = {
        catalog.regions[name].side
        for name, status in result.region_status.items()
        if status == ForwardStatus.VERIFIED and name in catalog.regions
    }
    sides.discard(Side.CENTRAL)
    return len(sides) == 1


def _cites(proto: EmotionPrototype, category: Category, report: VerificationReport, catalog: RoiCatalog) -> bool:
    if not proto.unilateral or proto.emotion == category.emotion:
        return True
    return any(_one_sided(au, report, catalog) for au in proto.au_pattern)


def _reasoning(
    report: VerificationReport,
    category: Category,
    evidence: Mapping[str, MotionEvidence],
    prototypes: Sequence[EmotionPrototype],
    catalog: RoiCatalog,
) -> str:
    sentences = []
    for proto in match_prototypes(category.aus, prototypes):
        # 单侧原型遇到双侧运动时不引用
        if not _cites(proto, category, report, catalog):
            continue
        pattern = " + ".join(sort_aus(proto.au_pattern))
        sentences.append(f"The combination {pattern} points to {proto.emotion}: {proto.note}.")
    if not sentences:
        sentences.append("No prototypical AU combination is matched; the interpretation rests on the individual movements.")

    symmetric, asymmetric = [], []
    for (left, right), verdict in symmetry_analysis(evidence, catalog.paired).items():
        if max(evidence[left].band.rank, evidence[right].band.rank) < IntensityBand.SUBTLE.rank:
            continue
        stem = _label(left[len("left_"):])
        (symmetric if verdict == Symmetry.SYMMETRIC else asymmetric).append(stem)
    if symmetric:
        sentences.append("The motion is symmetric in the " + ", ".join(symmetric) + ".")
    if asymmetric:
        sentences.append("The motion is asymmetric in the " + ", ".join(asymmetric) + ".")
    if not symmetric and not asymmetric:
        sentences.append("No bilateral region shows motion above the subtle level.")
    return " ".join(sentences)


def _conclusion(category: Category, catalog: RoiCatalog) -> str:
    if category.aus:
        aus = ", ".join(_au_name(au, catalog) for au in category.aus)
        return f"The activated action units are {aus}. The expression is {category.emotion}."
    return f"No action units are labeled. The expression is {category.emotion}."


def compose_rationale(
    report: VerificationReport,
    category: Category,
    evidence: Mapping[str, MotionEvidence],
    prototypes: Sequence[EmotionPrototype],
    catalog: Optional[RoiCatalog] = None,
) -> Rationale:
    """固定模板填槽生成三段式解释；结论中的情绪直接取自 GT"""
    catalog = catalog or builtin_roi_catalog()
    return Rationale(
        analysis=_analysis(report, category, evidence, catalog),
        reasoning=_reasoning(report, category, evidence, prototypes, catalog),
        conclusion=_conclusion(category, catalog),
    )
