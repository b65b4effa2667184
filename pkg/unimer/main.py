"""命令行入口"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from unimer import SCHEMA_VERSIONS, __version__
from unimer.commands import annotate, flow, regions, stats, viz
from unimer.commands import config as config_command
from unimer.commands import eval as eval_command
from unimer.config import get_settings
from unimer.errors import EXIT_OK, UniMerError, UsageError

logger = logging.getLogger(__name__)

COMMANDS = (regions, flow, annotate, viz, stats, eval_command, config_command)


class ArgumentParser(argparse.ArgumentParser):
    """参数错误抛 UsageError（退出码 1），而不是 argparse 默认的 2"""

    def error(self, message: str):
        raise UsageError(message, prog=self.prog)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="unimer", description="Motion-grounded rationale dataset builder")
    parser.add_argument("--version", action="store_true", help="print tool and schema versions")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=ArgumentParser)

    # 注册子命令
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def setup_logging(level: Optional[str]) -> None:
    level = (level or get_settings().log_level).upper()
    if not isinstance(logging.getLevelName(level), int):
        raise UsageError(f"unknown log level {level!r}")
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def version_text() -> str:
    lines = [f"unimer {__version__}"]
    lines += [f"{name}: {version}" for name, version in sorted(SCHEMA_VERSIONS.items())]
    return "\n".join(lines) + "\n"


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.log_level)
        if args.version:
            sys.stdout.write(version_text())
            return EXIT_OK
        if args.command is None:
            raise UsageError("no command given")
        return args.handler(args)
    except UniMerError as e:
        logger.debug("command failed", exc_info=True)
        sys.stderr.write(json.dumps(e.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
