"""elevlab main entry point."""

import sys
from collections.abc import Callable

from elevlab.cli.common import EXIT_OK, EXIT_USAGE, CommandParser

MODES = ("gen", "analyze", "estimate", "eval", "study")


def _run_with_forwarded_argv(
    command_name: str, command_main: Callable[[], None], args: list[str]
) -> None:
    """Run a delegated CLI command while preserving its native argument parsing."""
    original_argv = sys.argv[:]
    sys.argv = [command_name, *args]
    try:
        command_main()
    finally:
        sys.argv = original_argv


def build_arg_parser() -> CommandParser:
    # -h/--help after the mode belongs to the command, so the router adds none.
    parser = CommandParser(prog="elevlab", add_help=False)
    parser.add_argument(
        "mode",
        choices=MODES,
        help=(
            "Render a dataset, analyze the motion field, estimate elevation maps, "
            "evaluate estimates, or run the basic-motion study"
        ),
    )
    return parser


def main():
    """Main entry point for the `elevlab` command."""
    parser = build_arg_parser()
    if len(sys.argv) < 2 or sys.argv[1] in ("-h", "--help"):
        parser.print_help()
        sys.exit(EXIT_OK if len(sys.argv) >= 2 else EXIT_USAGE)
    args, forwarded_args = parser.parse_known_args()

    try:
        if args.mode == "gen":
            from elevlab.cli.gen import main as gen_main

            _run_with_forwarded_argv("elevlab gen", gen_main, forwarded_args)
        elif args.mode == "analyze":
            from elevlab.cli.analyze import main as analyze_main

            _run_with_forwarded_argv("elevlab analyze", analyze_main, forwarded_args)
        elif args.mode == "estimate":
            from elevlab.cli.estimate import main as estimate_main

            _run_with_forwarded_argv("elevlab estimate", estimate_main, forwarded_args)
        elif args.mode == "eval":
            from elevlab.cli.evaluate import main as evaluate_main

            _run_with_forwarded_argv("elevlab eval", evaluate_main, forwarded_args)
        else:
            from elevlab.cli.study import main as study_main

            _run_with_forwarded_argv("elevlab study", study_main, forwarded_args)
    except KeyboardInterrupt:
        print("\nExiting...")
        sys.exit(130)


if __name__ == "__main__":
    main()
