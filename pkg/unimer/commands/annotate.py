"""unimer annotate：按清单批量生成 (C, E, R) 指令数据"""
import logging
from pathlib import Path

from unimer.commands import dump_json
from unimer.config import load_pipeline_config
from unimer.errors import EXIT_OK, EXIT_PARTIAL, MalformedInput
from unimer.services.instruct import emit_dataset, load_components, load_manifest

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("annotate", help="build instruction records for a manifest")
    parser.add_argument("--manifest", required=True, help="sample manifest (YAML or JSON)")
    parser.add_argument("--config", help="pipeline config YAML")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--parallel", type=int, help="worker threads")
    parser.add_argument("--viz", action="store_true", default=None, help="also render compensated flow images")
    parser.add_argument("--seed", type=int, help="prompt pool seed")
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = load_pipeline_config(
        args.config,
        parallel=args.parallel,
        render_viz=args.viz,
        prompt_seed=args.seed,
    )
    manifest = Path(args.manifest)
    try:
        manifest_bytes = manifest.read_bytes()
    except OSError as e:
        raise MalformedInput(f"cannot read manifest: {e}", path=str(manifest))

    records = load_manifest(manifest)
    components = load_components(config)
    summary = emit_dataset(records, args.out, components, base_dir=manifest.parent, manifest_bytes=manifest_bytes)

    print(dump_json(summary.model_dump()), end="")
    return EXIT_PARTIAL if summary.failed else EXIT_OK
