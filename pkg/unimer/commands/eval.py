"""unimer eval：情绪 ACC/UF1/UAR 或逐 AU F1"""
import logging

from unimer import SCHEMA_VERSIONS
from unimer.commands import add_filter_arguments, apply_filters, dump_json, emit
from unimer.config import load_pipeline_config
from unimer.errors import EXIT_OK, EmptyInput
from unimer.schemas.record import sort_aus
from unimer.services.instruct import apply_taxonomy, load_manifest, load_taxonomy
from unimer.services.metrics import au_metrics, emotion_metrics, format_metric_report, load_predictions

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="score model predictions against a manifest")
    parser.add_argument("--predictions", required=True, help="predictions (YAML/JSON list or JSON Lines)")
    parser.add_argument("--manifest", required=True, help="ground-truth manifest")
    parser.add_argument("--task", choices=["emotion", "au"], default="emotion")
    parser.add_argument("--config", help="pipeline config (taxonomy path)")
    parser.add_argument("--all-classes", action="store_true",
                        help="score every taxonomy class instead of the classes present in the ground truth")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--out", help="write to a file instead of stdout")
    add_filter_arguments(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = load_pipeline_config(args.config)
    taxonomy = load_taxonomy(config.data_path("taxonomy_path", "taxonomy.yaml"))
    records = [apply_taxonomy(r, taxonomy) for r in load_manifest(args.manifest)]
    records = apply_filters(records, args)
    if not records:
        raise EmptyInput("no samples left after filtering")
    predictions = load_predictions(args.predictions, taxonomy)

    missing = [r.id for r in records if r.id not in predictions]
    if missing:
        logger.warning(f"{len(missing)} 个样本没有预测，按无效预测计")

    if args.task == "emotion":
        present = {r.gt_emotion for r in records}
        classes = list(taxonomy.emotions) if args.all_classes else [e for e in taxonomy.emotions if e in present]
        report = emotion_metrics(predictions, records, classes)
    else:
        present = {au for r in records for au in r.gt_aus}
        aus = list(taxonomy.au_whitelist) if args.all_classes else sort_aus(present)
        report = au_metrics(predictions, records, aus)

    if args.json:
        emit(dump_json({"schema_version": SCHEMA_VERSIONS["metric_report"], "task": args.task, **report.model_dump()}), args.out)
    else:
        emit(format_metric_report(report), args.out)
    return EXIT_OK
