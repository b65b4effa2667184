"""unimer config：输出规范化配置或其哈希"""
from unimer.config import load_pipeline_config
from unimer.errors import EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("config", help="show the canonical pipeline config or its hash")
    parser.add_argument("action", choices=["show", "hash"])
    parser.add_argument("--config", help="pipeline config YAML (default: UNIMER_CONFIG or built-in defaults)")
    parser.set_defaults(handler=run)


def run(args) -> int:
    config = load_pipeline_config(args.config)
    if args.action == "show":
        print(config.canonical_yaml(), end="")
    else:
        print(config.config_hash())
    return EXIT_OK
