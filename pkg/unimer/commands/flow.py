"""unimer flow：由两帧估计光流，或校验并转存已有 .flo 文件"""
import logging

from unimer.config import load_pipeline_config
from unimer.errors import EXIT_OK, UsageError
from unimer.services.flow import estimate_flow, load_grayscale, read_flow_path, write_flow_path

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("flow", help="estimate or load a dense flow field")
    parser.add_argument("frames", nargs="*", metavar="FRAME", help="onset and apex frame images")
    parser.add_argument("--flo", help="existing .flo file to validate and copy")
    parser.add_argument("--config", help="pipeline config (estimator parameters)")
    parser.add_argument("--out", required=True, help="output .flo path")
    parser.set_defaults(handler=run)


def run(args) -> int:
    if args.flo:
        if args.frames:
            raise UsageError("give either two frames or --flo, not both")
        field = read_flow_path(args.flo)
    else:
        if len(args.frames) != 2:
            raise UsageError("flow estimation needs exactly two frames")
        config = load_pipeline_config(args.config)
        field = estimate_flow(load_grayscale(args.frames[0]), load_grayscale(args.frames[1]), config.estimator)

    write_flow_path(field, args.out)
    logger.info(f"光流 {field.width}x{field.height} 已写入 {args.out}")
    return EXIT_OK
