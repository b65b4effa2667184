"""预测解析与评测指标：ACC / UF1 / UAR 与逐 AU F1"""
import json
import logging
import re
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import yaml
from sklearn.metrics import confusion_matrix, f1_score, precision_recall_fscore_support

from unimer.errors import EmptyInput, MalformedInput
from unimer.schemas.metrics import AuMetricReport, MetricReport, PredictionRecord
from unimer.schemas.record import SampleRecord, Taxonomy, parse_au_label, sort_aus

logger = logging.getLogger(__name__)

INVALID_LABEL = "invalid"

_EMOTION_RE = re.compile(r'"emotion"\s*:\s*"([^"]*)"', re.IGNORECASE)
_AUS_RE = re.compile(r'"aus"\s*:\s*\[([^\]]*)\]', re.IGNORECASE)
_AU_ITEM_RE = re.compile(r'"([^"]*)"|\b(\d+)\b')


def _normalize_emotion(label: str, taxonomy: Taxonomy) -> Optional[str]:
    key = label.strip().lower()
    if key in taxonomy.emotions:
        return key
    return taxonomy.emotion_aliases.get(key)


def _normalize_aus(labels: Iterable, taxonomy: Taxonomy, invalid: List[str]) -> List[str]:
    valid = []
    for label in labels:
        try:
            au = parse_au_label(label)
        except ValueError:
            invalid.append(str(label))
            continue
        if au in taxonomy.au_whitelist:
            valid.append(au)
        else:
            invalid.append(str(label))
    return sort_aus(valid)


def parse_prediction(text: Optional[str], taxonomy: Taxonomy, sample_id: str = "") -> PredictionRecord:
    """从模型输出中提取 "emotion" 与 "aus"，允许前后夹带说明文字"""
    invalid: List[str] = []
    emotion = None
    aus = None
    text = text or ""

    match = _EMOTION_RE.search(text)
    if match:
        emotion = _normalize_emotion(match.group(1), taxonomy)
        if emotion is None:
            invalid.append(match.group(1))

    match = _AUS_RE.search(text)
    if match:
        items = [quoted or bare for quoted, bare in _AU_ITEM_RE.findall(match.group(1))]
        aus = _normalize_aus([i for i in items if i.strip()], taxonomy, invalid)

    return PredictionRecord(id=sample_id, predicted_emotion=emotion, predicted_aus=aus, raw_text=text, invalid_labels=invalid)


def prediction_from_entry(entry: Mapping, taxonomy: Taxonomy) -> PredictionRecord:
    """预测文件中的一条：{"id", "text"} 或已解析的 {"id", "emotion", "aus"}"""
    if "id" not in entry:
        raise MalformedInput("prediction entry without id")
    sample_id = str(entry["id"])
    if entry.get("text") is not None:
        return parse_prediction(str(entry["text"]), taxonomy, sample_id)

    invalid: List[str] = []
    emotion = None
    if entry.get("emotion") is not None:
        emotion = _normalize_emotion(str(entry["emotion"]), taxonomy)
        if emotion is None:
            invalid.append(str(entry["emotion"]))
    aus = None
    if entry.get("aus") is not None:
        aus = _normalize_aus(entry["aus"], taxonomy, invalid)
    return PredictionRecord(id=sample_id, predicted_emotion=emotion, predicted_aus=aus, invalid_labels=invalid)


def load_predictions(path: Union[str, Path], taxonomy: Taxonomy) -> Dict[str, PredictionRecord]:
    """YAML/JSON 列表或 JSON Lines"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise MalformedInput(f"cannot read predictions: {e}", path=str(path))

    try:
        entries = yaml.safe_load(text)
    except yaml.YAMLError:
        entries = None
    if not isinstance(entries, list):
        entries = []
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise MalformedInput(f"predictions line {n} is not valid JSON: {e.msg}", line=n)

    predictions = {}
    for entry in entries:
        if not isinstance(entry, dict):
            raise MalformedInput("each prediction must be a mapping")
        pred = prediction_from_entry(entry, taxonomy)
        predictions[pred.id] = pred
    return predictions


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def emotion_metrics(
    predictions: Mapping[str, PredictionRecord],
    ground_truth: Sequence[SampleRecord],
    classes: Sequence[str],
) -> MetricReport:
    """
    无效或缺失的预测按错误计入；类别集之外的预测落入 invalid 列

    没有 GT 也没有预测的类别 F1 记 0 并在 undefined_classes 中标出
    """
    if not ground_truth:
        raise EmptyInput("no ground-truth samples to evaluate")
    classes = list(classes)
    outside = sorted({r.gt_emotion for r in ground_truth} - set(classes))
    if outside:
        raise MalformedInput(f"ground-truth emotions outside the class set: {', '.join(outside)}")

    y_true, y_pred = [], []
    invalid = 0
    for record in ground_truth:
        pred = predictions.get(record.id)
        label = pred.predicted_emotion if pred is not None else None
        if label is None or label not in classes:
            invalid += 1
            label = INVALID_LABEL
        y_true.append(record.gt_emotion)
        y_pred.append(label)

    _, recall, f1, _ = precision_recall_fscore_support(y_true, y_pred, labels=classes, zero_division=0)
    matrix = confusion_matrix(y_true, y_pred, labels=classes + [INVALID_LABEL])[:-1]
    correct = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    undefined = [c for c in classes if c not in y_true and c not in y_pred]

    return MetricReport(
        classes=classes,
        total=len(y_true),
        acc=correct / len(y_true),
        uf1=_mean(f1),
        uar=_mean(recall),
        per_class_f1={c: float(v) for c, v in zip(classes, f1)},
        per_class_recall={c: float(v) for c, v in zip(classes, recall)},
        confusion=matrix.tolist(),
        invalid_predictions=invalid,
        undefined_classes=undefined,
    )


def au_metrics(
    predictions: Mapping[str, PredictionRecord],
    ground_truth: Sequence[SampleRecord],
    aus: Sequence[str],
) -> AuMetricReport:
    """每个 AU 独立做二分类，正类 F1；均值为全部 AU 的非加权平均"""
    if not ground_truth:
        raise EmptyInput("no ground-truth samples to evaluate")
    aus = list(aus)

    predicted_sets = []
    invalid = 0
    for record in ground_truth:
        pred = predictions.get(record.id)
        if pred is None or pred.predicted_aus is None:
            invalid += 1
            predicted_sets.append(set())
        else:
            predicted_sets.append(set(pred.predicted_aus))

    per_au, support, undefined = {}, {}, []
    for au in aus:
        y_true = [au in record.gt_aus for record in ground_truth]
        y_pred = [au in predicted for predicted in predicted_sets]
        if not any(y_true) and not any(y_pred):
            undefined.append(au)
        per_au[au] = float(f1_score(y_true, y_pred, zero_division=0))
        support[au] = sum(y_true)

    return AuMetricReport(
        aus=aus,
        total=len(ground_truth),
        per_au_f1=per_au,
        mean_f1=_mean([per_au[au] for au in aus]),
        support=support,
        invalid_predictions=invalid,
        undefined_aus=undefined,
    )


def format_metric_report(report: Union[MetricReport, AuMetricReport]) -> str:
    """人读的表格"""
    if isinstance(report, MetricReport):
        lines = [
            f"Samples: {report.total}  invalid predictions: {report.invalid_predictions}",
            f"ACC {report.acc:.4f}  UF1 {report.uf1:.4f}  UAR {report.uar:.4f}",
            "",
            f"{'Class':<14}{'F1':>8}{'Recall':>8}",
        ]
        for c in report.classes:
            flag = "  (undefined)" if c in report.undefined_classes else ""
            lines.append(f"{c:<14}{report.per_class_f1[c]:>8.4f}{report.per_class_recall[c]:>8.4f}{flag}")
        lines += ["", "Confusion (rows = ground truth, last column = invalid)"]
        for c, row in zip(report.classes, report.confusion):
            lines.append(f"{c:<14}" + "".join(f"{n:>6}" for n in row))
    else:
        lines = [
            f"Samples: {report.total}  invalid predictions: {report.invalid_predictions}",
            f"Mean F1 {report.mean_f1:.4f}",
            "",
            f"{'AU':<8}{'F1':>8}{'Support':>9}",
        ]
        for au in report.aus:
            flag = "  (undefined)" if au in report.undefined_aus else ""
            lines.append(f"{au:<8}{report.per_au_f1[au]:>8.4f}{report.support[au]:>9}{flag}")
    return "\n".join(lines) + "\n"
