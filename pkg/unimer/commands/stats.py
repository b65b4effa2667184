"""unimer stats：清单的情绪 / AU / 来源分布"""
from unimer import SCHEMA_VERSIONS
from unimer.commands import add_filter_arguments, apply_filters, dump_json, emit
from unimer.config import load_pipeline_config
from unimer.errors import EXIT_OK
from unimer.services.geometry import builtin_roi_catalog
from unimer.services.instruct import apply_taxonomy, dataset_stats, format_stats, load_manifest, load_taxonomy


def register(subparsers) -> None:
    parser = subparsers.add_parser("stats", help="distribution tables for a manifest")
    parser.add_argument("manifest", help="sample manifest")
    parser.add_argument("--config", help="pipeline config (taxonomy path)")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--out", help="write to a file instead of stdout")
    add_filter_arguments(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = load_pipeline_config(args.config)
    taxonomy = load_taxonomy(config.data_path("taxonomy_path", "taxonomy.yaml"))
    records = [apply_taxonomy(r, taxonomy) for r in load_manifest(args.manifest)]
    stats = dataset_stats(apply_filters(records, args), taxonomy, builtin_roi_catalog())

    if args.json:
        emit(dump_json({"schema_version": SCHEMA_VERSIONS["stats"], **stats.model_dump()}), args.out)
    else:
        emit(format_stats(stats), args.out)
    return EXIT_OK
