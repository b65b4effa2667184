"""unimer viz：光流 HSV 可视化与图例"""
from unimer.config import load_pipeline_config
from unimer.errors import EXIT_OK, UsageError
from unimer.services.flow import read_flow_path
from unimer.services.viz import flow_to_image, legend_image, write_image


def register(subparsers) -> None:
    parser = subparsers.add_parser("viz", help="render a flow file as an HSV image")
    parser.add_argument("flow", nargs="?", help=".flo file")
    parser.add_argument("--legend", action="store_true", help="render the direction legend instead")
    parser.add_argument("--config", help="pipeline config (motion epsilon)")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.set_defaults(handler=run)


def run(args) -> int:
    if args.legend:
        write_image(args.out, legend_image())
        return EXIT_OK
    if not args.flow:
        raise UsageError("viz needs a flow file or --legend")
    config = load_pipeline_config(args.config)
    write_image(args.out, flow_to_image(read_flow_path(args.flow), config.compensation.epsilon))
    return EXIT_OK
